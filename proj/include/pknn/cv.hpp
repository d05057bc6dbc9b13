#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "pknn/error.hpp"
#include "pknn/mcmc.hpp"

namespace pknn {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded Fisher-Yates shuffle of 0..n-1, then contiguous partition into
/// `folds` test blocks whose sizes differ by at most one (larger ones first).
/// Index lists are returned sorted.
inline std::vector<Fold> kfold_split(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("need at least 2 folds");
  if (folds > n) throw InputError("folds=" + std::to_string(folds) + " exceeds n=" + std::to_string(n));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng = Rng::for_stream(seed, 0x6b666f6c64ULL);
  for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.index(i)]);
  std::vector<Fold> out(folds);
  std::size_t start = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t size = n / folds + (f < n % folds ? 1 : 0);
    out[f].test.assign(perm.begin() + static_cast<std::ptrdiff_t>(start),
                       perm.begin() + static_cast<std::ptrdiff_t>(start + size));
    start += size;
    std::sort(out[f].test.begin(), out[f].test.end());
  }
  for (std::size_t f = 0; f < folds; ++f) {
    for (std::size_t g = 0; g < folds; ++g) {
      if (g != f) out[f].train.insert(out[f].train.end(), out[g].test.begin(), out[g].test.end());
    }
    std::sort(out[f].train.begin(), out[f].train.end());
  }
  return out;
}

}  // namespace pknn
