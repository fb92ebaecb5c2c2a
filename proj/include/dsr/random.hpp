#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace dsr {

// std::uniform_int_distribution is implementation-defined, so draws would
// differ between standard libraries. These helpers only rely on the raw
// mt19937_64 output, which the standard pins down.

/// Uniform integer in [0, bound) by rejection sampling.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::mt19937_64::max() -
                              (std::mt19937_64::max() % bound + 1) % bound;
  std::uint64_t draw;
  do {
    draw = rng();
  } while (draw > limit);
  return draw % bound;
}

/// Fisher-Yates restricted to the first `count` slots: afterwards
/// items[0, count) is a uniform random draw without replacement.
template <typename T>
void partial_shuffle(std::span<T> items, std::size_t count,
                     std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count && i + 1 < items.size(); ++i) {
    const auto j = i + uniform_below(rng, items.size() - i);
    std::swap(items[i], items[j]);
  }
}

template <typename Container>
void partial_shuffle(Container& items, std::size_t count, std::mt19937_64& rng) {
  partial_shuffle(std::span(items.data(), items.size()), count, rng);
}

}  // namespace dsr
