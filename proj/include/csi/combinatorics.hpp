#pragma once

#include <cstdint>
#include <vector>

namespace csi {

/// n choose k, saturating at INT64_MAX.
std::int64_t binomial(int n, int k);

/// Visits every k-subset of {0..n-1} in lexicographic order. The callback
/// receives the sorted index list; returning false stops the enumeration.
template <typename Fn>
void for_each_combination(int n, int k, Fn&& fn) {
  if (k < 0 || k > n) return;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    if (!fn(static_cast<const std::vector<int>&>(idx))) return;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace csi
