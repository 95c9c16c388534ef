#pragma once

// Independent reference computations used by the unit and acceptance tests. Nothing here calls
// into the library code paths it is used to check.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "filterlens/cluster.hpp"
#include "filterlens/snr.hpp"

namespace oracle {

using Partition = std::vector<std::vector<std::size_t>>;

inline bool full_block(const filterlens::BooleanMatrix& bits, const std::vector<std::size_t>& labels) {
  for (std::size_t a : labels)
    for (std::size_t b : labels)
      if (!bits(a, b)) return false;
  return true;
}

inline std::vector<std::size_t> diagonal_ones(const filterlens::BooleanMatrix& bits) {
  std::vector<std::size_t> d;
  for (std::size_t i = 0; i < bits.side(); ++i)
    if (bits(i, i)) d.push_back(i);
  return d;
}

inline Partition canonical(Partition p) {
  for (auto& block : p) std::sort(block.begin(), block.end());
  std::sort(p.begin(), p.end());
  return p;
}

/// Every partition of the diagonal-1 labels into full blocks in which no two blocks could be
/// merged into a larger full block. Enumerated by restricted-growth strings.
inline std::vector<Partition> maximal_block_partitions(const filterlens::BooleanMatrix& bits) {
  const std::vector<std::size_t> d = diagonal_ones(bits);
  std::vector<Partition> out;
  if (d.empty()) {
    out.push_back({});
    return out;
  }
  std::vector<std::size_t> rgs(d.size(), 0);
  while (true) {
    const std::size_t blocks = *std::max_element(rgs.begin(), rgs.end()) + 1;
    Partition p(blocks);
    for (std::size_t i = 0; i < d.size(); ++i) p[rgs[i]].push_back(d[i]);
    bool ok = std::all_of(p.begin(), p.end(), [&](const auto& b) { return full_block(bits, b); });
    for (std::size_t a = 0; ok && a < p.size(); ++a)
      for (std::size_t b = a + 1; ok && b < p.size(); ++b) {
        std::vector<std::size_t> merged = p[a];
        merged.insert(merged.end(), p[b].begin(), p[b].end());
        if (full_block(bits, merged)) ok = false;
      }
    if (ok) out.push_back(canonical(p));

    // next restricted-growth string
    std::size_t i = d.size();
    while (i-- > 1) {
      const std::size_t prefix_max = *std::max_element(rgs.begin(), rgs.begin() + static_cast<std::ptrdiff_t>(i));
      if (rgs[i] <= prefix_max) {
        ++rgs[i];
        std::fill(rgs.begin() + static_cast<std::ptrdiff_t>(i) + 1, rgs.end(), 0);
        break;
      }
    }
    if (i == 0) break;
  }
  return out;
}

inline Partition as_partition(const std::vector<filterlens::Cluster>& clusters) {
  Partition p;
  for (const auto& c : clusters) p.push_back(c.labels);
  return canonical(p);
}

/// Ones outside every cluster block, counted cell by cell.
inline std::size_t noise_by_cells(const filterlens::BooleanMatrix& bits, const std::vector<filterlens::Cluster>& clusters) {
  const std::size_t n = bits.side();
  std::vector<long> owner(n, -1);
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (std::size_t l : clusters[c].labels) owner[l] = static_cast<long>(c);
  std::size_t noise = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (bits(i, j) && !(owner[i] >= 0 && owner[i] == owner[j])) ++noise;
  return noise;
}

inline filterlens::BooleanMatrix from_mask(std::size_t side, std::uint64_t mask) {
  filterlens::BooleanMatrix b(side);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) b.set(i, j, (mask >> (i * side + j)) & 1u);
  return b;
}

struct Line {
  long double slope, intercept;
};

/// Least squares via the 2x2 normal equations solved by Cramer's rule, in long double.
inline Line least_squares(const std::vector<filterlens::ErrorPoint>& pts) {
  long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    const long double x = p.labels, y = p.error;
    n += 1;
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const long double det = n * sxx - sx * sx;
  return {(n * sxy - sx * sy) / det, (sxx * sy - sx * sxy) / det};
}

}  // namespace oracle
