#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace filterlens {

/// Square label-by-label matrix of averaged output fields.
/// Row i is the true input label, column j the output unit.
class FieldMatrix {
 public:
  FieldMatrix() = default;
  explicit FieldMatrix(std::size_t side);
  FieldMatrix(std::size_t side, std::vector<double> values);

  static FieldMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t side() const noexcept { return side_; }
  double operator()(std::size_t row, std::size_t col) const { return values_[row * side_ + col]; }
  double& operator()(std::size_t row, std::size_t col) { return values_[row * side_ + col]; }

  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }

  bool all_finite() const noexcept;

  bool operator==(const FieldMatrix&) const = default;

 private:
  std::size_t side_ = 0;
  std::vector<double> values_;
};

FieldMatrix operator*(double scale, const FieldMatrix& m);

/// Per-layer collection of single-filter matrices.
struct FieldBundle {
  std::string layer_name;
  std::size_t labels = 0;   // N_l
  std::size_t filters = 0;  // N_f
  std::size_t units = 0;    // U, output units per filter
  std::vector<FieldMatrix> matrices;

  bool operator==(const FieldBundle&) const = default;
};

struct BundleIssue {
  std::optional<std::size_t> filter;  // empty for bundle-level problems
  std::string message;
};

struct BundleValidationReport {
  std::vector<BundleIssue> issues;
  bool ok() const noexcept { return issues.empty(); }
};

BundleValidationReport validate(const FieldBundle& bundle);

// FFB1 container: "FFB1", u32 version, u32 N_l, u32 N_f, u32 U, u16 name length, name bytes,
// then N_f row-major blocks of N_l*N_l float32. All little-endian.
inline constexpr std::uint32_t kBundleFormatVersion = 1;

std::size_t bundle_header_size(const FieldBundle& bundle);

/// Serializes `bundle`. Entries are narrowed to float32; a bundle round-trips bit-exactly
/// when its entries are float32-representable (as everything read from FFB1 is).
std::size_t write_bundle(const FieldBundle& bundle, std::ostream& sink);
FieldBundle read_bundle(std::istream& source);

void save_bundle(const FieldBundle& bundle, const std::string& path);
FieldBundle load_bundle(const std::string& path);

/// Sparse "filter,row,col,value" triplets; cells not listed are zero.
FieldBundle read_csv_matrices(std::istream& source, std::size_t labels, std::size_t filters,
                              std::size_t units, const std::string& layer_name);

}  // namespace filterlens
