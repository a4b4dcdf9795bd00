#pragma once

#include <cstdint>
#include <string_view>

namespace shiftsel {

/// Derives an independent stream seed for a named subcomponent. Every random
/// draw in the library goes through this so one user seed fixes a whole run:
///   derived = splitmix64(seed ^ fnv1a64(name))
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name);

/// Same, with an additional integer index (piece number, trial number).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view name, std::uint64_t index);

}  // namespace shiftsel
