#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "filterlens/cluster.hpp"
#include "filterlens/field_bundle.hpp"

namespace fixture {

/// 512 filters over 100 labels: 205 filters carry two 2-label clusters and 307 carry three
/// (1331 clusters), plus 8346 noise elements (17 on the first 154 filters, 16 elsewhere) placed
/// in columns 90..99 whose diagonal is empty. Expected n = 16.30, N_c = 2.60, C_s = 2.
inline filterlens::FieldBundle layer_ten() {
  filterlens::FieldBundle b{"fixture", 100, 512, 4, {}};
  for (std::size_t f = 0; f < 512; ++f) {
    filterlens::FieldMatrix m(100);
    for (std::size_t c = 0; c < (f < 205 ? 2u : 3u); ++c) {
      const std::size_t a = (f + 7 * c) % 40, bb = a + 40;
      m(a, a) = m(bb, bb) = m(a, bb) = m(bb, a) = 1.0;
    }
    for (std::size_t k = 0; k < (f < 154 ? 17u : 16u); ++k) m((f + 3 * k) % 90, 90 + k % 10) = 0.8;
    b.matrices.push_back(std::move(m));
  }
  return b;
}

/// One cluster per filter; 372 filters with 5 labels and 140 with 6, 2700 labels in total.
inline std::vector<std::vector<filterlens::Cluster>> label_unions_2700() {
  std::vector<std::vector<filterlens::Cluster>> out(512);
  for (std::size_t f = 0; f < 512; ++f) {
    filterlens::Cluster c;
    for (std::size_t j = 0; j < (f < 372 ? 5u : 6u); ++j) c.labels.push_back((f + 13 * j) % 100);
    std::sort(c.labels.begin(), c.labels.end());
    out[f].push_back(std::move(c));
  }
  return out;
}

}  // namespace fixture
