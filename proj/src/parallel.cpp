#include "survhte/parallel.hpp"

#include <cstdlib>
#include <string>

namespace survhte {

int default_threads() {
  if (const char* env = std::getenv("SURVHTE_THREADS")) {
    try {
      int v = std::stoi(env);
      if (v >= 1) return v;
    } catch (...) {
      // fall through to the OpenMP default
    }
  }
  return omp_get_max_threads();
}

int resolve_threads(int requested) {
  return requested >= 1 ? requested : default_threads();
}

}  // namespace survhte
