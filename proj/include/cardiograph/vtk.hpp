#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cardiograph/geometry.hpp"

namespace cardiograph {

// Writes nodal scalar fields on a structured grid as a legacy ASCII VTK
// STRUCTURED_POINTS file.  Every field must have one value per grid node.
void write_vtk(const Geometry& g,
               const std::vector<std::pair<std::string, std::vector<double>>>& fields,
               const std::string& path);

}  // namespace cardiograph
