#include "filterlens/field_bundle.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string_view>

#include "binary_io.hpp"
#include "filterlens/errors.hpp"

namespace filterlens {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'F', 'B', '1'};
constexpr std::string_view kCsvHeader = "filter,row,col,value";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <class T>
bool parse_number(std::string_view token, T& out) {
  token = trim(token);
  if (token.empty()) return false;
  if (token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size();
}

}  // namespace

FieldMatrix::FieldMatrix(std::size_t side) : side_(side), values_(side * side, 0.0) {}

FieldMatrix::FieldMatrix(std::size_t side, std::vector<double> values)
    : side_(side), values_(std::move(values)) {
  if (values_.size() != side_ * side_) {
    throw DimensionError("field matrix of side " + std::to_string(side_) + " needs " +
                         std::to_string(side_ * side_) + " values, got " +
                         std::to_string(values_.size()));
  }
}

FieldMatrix FieldMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t side = rows.size();
  std::vector<double> values;
  values.reserve(side * side);
  for (const auto& row : rows) {
    if (row.size() != side) throw DimensionError("field matrix rows must form a square");
    values.insert(values.end(), row.begin(), row.end());
  }
  return FieldMatrix(side, std::move(values));
}

bool FieldMatrix::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

FieldMatrix operator*(double scale, const FieldMatrix& m) {
  FieldMatrix out = m;
  for (double& v : out.values()) v *= scale;
  return out;
}

BundleValidationReport validate(const FieldBundle& bundle) {
  BundleValidationReport report;
  auto bundle_issue = [&](std::string msg) { report.issues.push_back({std::nullopt, std::move(msg)}); };

  if (bundle.labels < 2) bundle_issue("label count must be at least 2, got " + std::to_string(bundle.labels));
  if (bundle.filters < 1) bundle_issue("filter count must be positive");
  if (bundle.units < 1) bundle_issue("units per filter must be positive");
  if (bundle.matrices.size() != bundle.filters) {
    bundle_issue("filter count " + std::to_string(bundle.filters) + " does not match " +
                 std::to_string(bundle.matrices.size()) + " matrices");
  }
  for (std::size_t f = 0; f < bundle.matrices.size(); ++f) {
    const FieldMatrix& m = bundle.matrices[f];
    if (m.side() != bundle.labels) {
      report.issues.push_back({f, "matrix side " + std::to_string(m.side()) + " differs from label count " +
                                      std::to_string(bundle.labels)});
      continue;
    }
    const auto values = m.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (!std::isfinite(values[k])) {
        report.issues.push_back({f, "non-finite entry at (" + std::to_string(k / m.side()) + "," +
                                        std::to_string(k % m.side()) + ")"});
        break;
      }
    }
  }
  return report;
}

std::size_t bundle_header_size(const FieldBundle& bundle) {
  return 4 + 4 + 4 + 4 + 4 + 2 + bundle.layer_name.size();
}

std::size_t write_bundle(const FieldBundle& bundle, std::ostream& sink) {
  const auto report = validate(bundle);
  if (!report.ok()) throw std::invalid_argument("cannot write invalid bundle: " + report.issues.front().message);
  if (bundle.layer_name.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("layer name longer than 65535 bytes");
  }
  constexpr auto u32max = std::numeric_limits<std::uint32_t>::max();
  if (bundle.labels > u32max || bundle.filters > u32max || bundle.units > u32max) {
    throw std::invalid_argument("bundle dimensions exceed 32-bit range");
  }

  detail::LeWriter out(sink);
  out.bytes(kMagic.data(), kMagic.size());
  out.u32(kBundleFormatVersion);
  out.u32(static_cast<std::uint32_t>(bundle.labels));
  out.u32(static_cast<std::uint32_t>(bundle.filters));
  out.u32(static_cast<std::uint32_t>(bundle.units));
  out.u16(static_cast<std::uint16_t>(bundle.layer_name.size()));
  out.bytes(bundle.layer_name.data(), bundle.layer_name.size());

  for (std::size_t f = 0; f < bundle.matrices.size(); ++f) {
    for (double v : bundle.matrices[f].values()) {
      const auto narrowed = static_cast<float>(v);
      if (!std::isfinite(narrowed)) {
        throw std::invalid_argument("entry of filter " + std::to_string(f) + " overflows float32");
      }
      out.f32(narrowed);
    }
  }
  return out.written();
}

FieldBundle read_bundle(std::istream& source) {
  detail::LeReader in(source);

  std::array<char, 4> magic{};
  in.bytes(magic.data(), magic.size(), "magic");
  if (magic != kMagic) {
    throw FormatError(FormatError::Kind::BadMagic, 0,
                      "bad magic \"" + std::string(magic.data(), magic.size()) + "\", expected FFB1");
  }
  const std::uint32_t version = in.u32("version");
  if (version != kBundleFormatVersion) {
    throw FormatError(FormatError::Kind::UnsupportedVersion, 4, "unsupported FFB1 version " + std::to_string(version));
  }

  FieldBundle bundle;
  bundle.labels = in.u32("label count");
  bundle.filters = in.u32("filter count");
  bundle.units = in.u32("units per filter");
  if (bundle.labels < 2 || bundle.filters < 1 || bundle.units < 1) {
    throw FormatError(FormatError::Kind::InvalidHeader, 8,
                      "invalid header dimensions N_l=" + std::to_string(bundle.labels) +
                          " N_f=" + std::to_string(bundle.filters) + " U=" + std::to_string(bundle.units));
  }
  const std::uint16_t name_length = in.u16("name length");
  bundle.layer_name.resize(name_length);
  in.bytes(bundle.layer_name.data(), name_length, "layer name");

  const std::size_t cells = bundle.labels * bundle.labels;
  bundle.matrices.reserve(std::min<std::size_t>(bundle.filters, 4096));
  for (std::size_t f = 0; f < bundle.filters; ++f) {
    std::vector<double> values(cells);
    for (std::size_t k = 0; k < cells; ++k) {
      const std::uint64_t at = in.offset();
      const float v = in.f32("payload");
      if (!std::isfinite(v)) {
        throw FormatError(FormatError::Kind::NonFinite, at,
                          "non-finite value in filter " + std::to_string(f) + " at byte " + std::to_string(at));
      }
      values[k] = v;
    }
    bundle.matrices.emplace_back(bundle.labels, std::move(values));
  }
  return bundle;
}

void save_bundle(const FieldBundle& bundle, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError(0, "cannot open " + path + " for writing");
  write_bundle(bundle, os);
  os.flush();
  if (!os) throw IoError(0, "flush failed for " + path);
}

FieldBundle load_bundle(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(0, "cannot open " + path);
  return read_bundle(is);
}

FieldBundle read_csv_matrices(std::istream& source, std::size_t labels, std::size_t filters,
                              std::size_t units, const std::string& layer_name) {
  FieldBundle bundle{layer_name, labels, filters, units, {}};
  bundle.matrices.assign(filters, FieldMatrix(labels));
  std::vector<bool> seen(filters * labels * labels, false);

  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(source, line)) {
    ++line_no;
    const std::string_view text = trim(line);
    if (text.empty()) continue;
    if (first_content) {
      first_content = false;
      if (text == kCsvHeader) continue;
    }

    std::array<std::string_view, 4> fields{};
    std::size_t count = 0;
    std::string_view rest = text;
    while (count < 4) {
      const auto comma = rest.find(',');
      fields[count++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) {
        rest = {};
        break;
      }
      rest.remove_prefix(comma + 1);
    }
    if (count != 4 || !rest.empty()) {
      throw CsvError(CsvError::Kind::Unparsable, line_no, "expected 4 comma-separated fields");
    }

    std::size_t f = 0, row = 0, col = 0;
    double value = 0;
    if (!parse_number(fields[0], f) || !parse_number(fields[1], row) || !parse_number(fields[2], col)) {
      throw CsvError(CsvError::Kind::Unparsable, line_no, "indices must be non-negative integers");
    }
    if (!parse_number(fields[3], value) || !std::isfinite(value)) {
      throw CsvError(CsvError::Kind::Unparsable, line_no, "unparsable value \"" + std::string(trim(fields[3])) + "\"");
    }
    if (f >= filters || row >= labels || col >= labels) {
      throw CsvError(CsvError::Kind::OutOfRange, line_no,
                     "cell (" + std::to_string(f) + "," + std::to_string(row) + "," + std::to_string(col) +
                         ") out of range");
    }
    const std::size_t key = (f * labels + row) * labels + col;
    if (seen[key]) {
      throw CsvError(CsvError::Kind::DuplicateCell, line_no,
                     "duplicate cell (" + std::to_string(f) + "," + std::to_string(row) + "," +
                         std::to_string(col) + ")");
    }
    seen[key] = true;
    bundle.matrices[f](row, col) = value;
  }
  return bundle;
}

}  // namespace filterlens
