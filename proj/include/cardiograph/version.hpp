#pragma once

namespace cardiograph {

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace cardiograph
