#pragma once

#include <algorithm>
#include <cstdlib>
#include <string>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cardiograph::threading {

// Worker cap shared by all parallel regions. 0 = not yet configured.
inline int& cap_ref() {
  static int cap = 0;
  return cap;
}

inline int hardware_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

// Resolution order: explicit set() > CARDIOGRAPH_THREADS env > hardware count.
inline int worker_count() {
  int cap = cap_ref();
  if (cap > 0) return cap;
  if (const char* env = std::getenv("CARDIOGRAPH_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return std::min(n, hardware_threads());
  }
  return hardware_threads();
}

inline void set_worker_count(int n) { cap_ref() = std::max(n, 0); }

// Deterministic mode pins every parallel region to one worker so all
// floating-point reductions run in a fixed order.
inline bool& deterministic_ref() {
  static bool det = false;
  return det;
}

inline void set_deterministic(bool on) { deterministic_ref() = on; }
inline bool deterministic() { return deterministic_ref(); }

inline int effective_workers() { return deterministic() ? 1 : worker_count(); }

}  // namespace cardiograph::threading
