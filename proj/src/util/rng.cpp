#include "recast/util/rng.hpp"

#include <limits>
#include <stdexcept>

namespace recast::util {

std::size_t Rng::index(std::size_t bound) {
  if (bound == 0) throw std::invalid_argument("Rng::index: bound must be positive");
  const std::uint64_t b = bound;
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<std::size_t>(x % b);
}

}  // namespace recast::util
