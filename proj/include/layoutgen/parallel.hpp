#pragma once

#include <cstddef>
#include <vector>

namespace layoutgen::par {

// Fixed reduction block size: partial sums are formed per block and combined
// in block order, so results are bitwise identical for any thread count.
inline constexpr std::ptrdiff_t kBlock = 4096;

template <typename F>
void for_each(std::ptrdiff_t n, F&& body) {
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    body(i);
  }
}

template <typename F>
double block_sum(std::ptrdiff_t n, F&& term) {
  if (n <= kBlock) {
    double s = 0.0;
    for (std::ptrdiff_t i = 0; i < n; ++i) s += term(i);
    return s;
  }
  const std::ptrdiff_t nblocks = (n + kBlock - 1) / kBlock;
  std::vector<double> partial(static_cast<std::size_t>(nblocks), 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nblocks; ++b) {
    const std::ptrdiff_t lo = b * kBlock;
    const std::ptrdiff_t hi = lo + kBlock < n ? lo + kBlock : n;
    double s = 0.0;
    for (std::ptrdiff_t i = lo; i < hi; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace layoutgen::par
