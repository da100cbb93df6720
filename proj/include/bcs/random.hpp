#ifndef BCS_RANDOM_HPP_
#define BCS_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace bcs {

using Rng = std::mt19937_64;

// Derives an independent stream seed from a master seed, a purpose label and
// a list of indices. The mapping is a pure function of its arguments, so
// results never depend on the order in which streams are created.
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                          std::initializer_list<std::uint64_t> indices = {});

inline Rng make_rng(std::uint64_t master, std::string_view purpose,
                    std::initializer_list<std::uint64_t> indices = {}) {
  return Rng(derive_seed(master, purpose, indices));
}

}  // namespace bcs

#endif  // BCS_RANDOM_HPP_
