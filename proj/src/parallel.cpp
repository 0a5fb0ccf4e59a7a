#include "mcflab/parallel.hpp"

#include <cstdlib>
#include <string>

namespace mcflab {

unsigned lab_threads() {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return hw;
}

}  // namespace mcflab
