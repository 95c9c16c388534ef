#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>
#include <sstream>
#include <streambuf>

#include "filterlens/errors.hpp"
#include "filterlens/field_bundle.hpp"

using namespace filterlens;

namespace {

FieldBundle random_bundle(std::mt19937_64& rng, std::size_t labels, std::size_t filters, std::size_t units) {
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  FieldBundle b{"layer-" + std::to_string(filters), labels, filters, units, {}};
  for (std::size_t f = 0; f < filters; ++f) {
    FieldMatrix m(labels);
    for (double& v : m.values()) v = u(rng);
    b.matrices.push_back(std::move(m));
  }
  return b;
}

std::string bytes_of(const FieldBundle& b) {
  std::ostringstream os(std::ios::binary);
  write_bundle(b, os);
  return os.str();
}

FieldBundle parse(const std::string& bytes) {
  std::istringstream is(bytes, std::ios::binary);
  return read_bundle(is);
}

FormatError::Kind kind_of(const std::string& bytes, std::uint64_t* offset = nullptr) {
  try {
    parse(bytes);
  } catch (const FormatError& e) {
    if (offset) *offset = e.offset();
    return e.kind();
  }
  ADD_FAILURE() << "no FormatError";
  return FormatError::Kind::InvalidValue;
}

// Accepts `limit` bytes, then fails.
class LimitedBuf : public std::streambuf {
 public:
  explicit LimitedBuf(std::size_t limit) : limit_(limit) {}

 protected:
  int_type overflow(int_type ch) override {
    if (written_ >= limit_) return traits_type::eof();
    ++written_;
    return ch;
  }
  std::streamsize xsputn(const char*, std::streamsize n) override {
    const auto room = static_cast<std::streamsize>(limit_ - written_);
    const std::streamsize k = std::min(n, room);
    written_ += static_cast<std::size_t>(k);
    return k;
  }

 private:
  std::size_t limit_;
  std::size_t written_ = 0;
};

}  // namespace

TEST(FieldBundle, TwoByTwoSizeArithmetic) {
  FieldBundle b{"ab", 2, 1, 1, {FieldMatrix::from_rows({{1, 2}, {3, 4}})}};
  EXPECT_EQ(bundle_header_size(b), 4u + 4 + 4 + 4 + 4 + 2 + 2);
  std::ostringstream os(std::ios::binary);
  EXPECT_EQ(write_bundle(b, os), bundle_header_size(b) + 16);
  EXPECT_EQ(os.str().size(), bundle_header_size(b) + 16);
}

TEST(FieldBundle, HeaderLayoutIsLittleEndian) {
  FieldBundle b{"xyz", 2, 1, 4, {FieldMatrix::from_rows({{1, 0}, {0, -0.5}})}};
  const std::string s = bytes_of(b);
  const unsigned char expected[] = {'F', 'F', 'B', '1', 1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0, 4, 0, 0, 0, 3, 0, 'x', 'y', 'z'};
  ASSERT_GE(s.size(), sizeof expected);
  EXPECT_EQ(std::memcmp(s.data(), expected, sizeof expected), 0);
  float first;
  std::memcpy(&first, s.data() + sizeof expected, 4);
  EXPECT_EQ(first, 1.0f);
  float last;
  std::memcpy(&last, s.data() + sizeof expected + 12, 4);
  EXPECT_EQ(last, -0.5f);
}

TEST(FieldBundle, LayerTenShapePayloadSize) {
  std::mt19937_64 rng(3);
  const FieldBundle b = random_bundle(rng, 100, 512, 4);
  const std::string s = bytes_of(b);
  EXPECT_EQ(s.size() - bundle_header_size(b), std::size_t{512} * 100 * 100 * 4);
}

TEST(FieldBundle, RandomRoundTripsAreBitExact) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t labels = 2 + rng() % 12, filters = 1 + rng() % 9, units = 1 + rng() % 16;
    const FieldBundle b = random_bundle(rng, labels, filters, units);
    const std::string s = bytes_of(b);
    const FieldBundle back = parse(s);
    EXPECT_EQ(back, b);
    EXPECT_EQ(bytes_of(back), s);
  }
}

TEST(FieldBundle, BadMagic) {
  FieldBundle b{"", 2, 1, 1, {FieldMatrix(2)}};
  std::string s = bytes_of(b);
  s.replace(0, 4, "XXXX");
  std::uint64_t off = 99;
  EXPECT_EQ(kind_of(s, &off), FormatError::Kind::BadMagic);
  EXPECT_EQ(off, 0u);
}

TEST(FieldBundle, UnsupportedVersion) {
  FieldBundle b{"", 2, 1, 1, {FieldMatrix(2)}};
  std::string s = bytes_of(b);
  s[4] = 2;
  EXPECT_EQ(kind_of(s), FormatError::Kind::UnsupportedVersion);
}

TEST(FieldBundle, TruncatedPayload) {
  FieldBundle b{"t", 3, 2, 1, {FieldMatrix(3), FieldMatrix(3)}};
  const std::string s = bytes_of(b);
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, bundle_header_size(b) - 1, s.size() - 1}) {
    EXPECT_EQ(kind_of(s.substr(0, cut)), FormatError::Kind::Truncated) << cut;
  }
}

TEST(FieldBundle, NanReportsItsOffset) {
  FieldBundle b{"nan", 2, 2, 1, {FieldMatrix(2), FieldMatrix(2)}};
  std::string s = bytes_of(b);
  const std::size_t at = bundle_header_size(b) + (4 + 3) * 4;  // filter 1, cell (1,1)
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(s.data() + at, &nan, 4);
  std::uint64_t off = 0;
  EXPECT_EQ(kind_of(s, &off), FormatError::Kind::NonFinite);
  EXPECT_EQ(off, at);
}

TEST(FieldBundle, ZeroDimensionsAreRejected) {
  FieldBundle b{"", 2, 1, 1, {FieldMatrix(2)}};
  std::string s = bytes_of(b);
  std::memset(s.data() + 16, 0, 4);  // U = 0
  EXPECT_EQ(kind_of(s), FormatError::Kind::InvalidHeader);
}

TEST(FieldBundle, SinkFailureReportsPosition) {
  FieldBundle b{"pos", 2, 1, 1, {FieldMatrix::from_rows({{1, 2}, {3, 4}})}};
  LimitedBuf buf(10);
  std::ostream os(&buf);
  try {
    write_bundle(b, os);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_LE(e.position(), 10u);
  }
}

TEST(FieldBundle, ValidateWellFormed) {
  FieldBundle b{"ok", 2, 1, 1, {FieldMatrix(2)}};
  EXPECT_TRUE(validate(b).ok());
}

TEST(FieldBundle, ValidateFlagsInfWithFilterIndex) {
  FieldBundle b{"inf", 2, 3, 1, {FieldMatrix(2), FieldMatrix(2), FieldMatrix(2)}};
  b.matrices[1](0, 1) = std::numeric_limits<double>::infinity();
  const auto r = validate(b);
  EXPECT_FALSE(r.ok());
  ASSERT_EQ(r.issues.size(), 1u);
  EXPECT_EQ(r.issues[0].filter, std::optional<std::size_t>(1));
}

TEST(FieldBundle, ValidateFilterCountMismatch) {
  FieldBundle b{"n", 2, 3, 1, {FieldMatrix(2)}};
  EXPECT_FALSE(validate(b).ok());
}

TEST(FieldBundle, WriteRefusesInvalidBundle) {
  FieldBundle b{"n", 2, 3, 1, {FieldMatrix(2)}};
  std::ostringstream os;
  EXPECT_THROW(write_bundle(b, os), std::invalid_argument);
}

TEST(FieldBundleCsv, SingleTriplet) {
  std::istringstream is("filter,row,col,value\n0,0,0,1.5\n");
  const FieldBundle b = read_csv_matrices(is, 2, 1, 1, "csv");
  EXPECT_EQ(b.matrices.at(0), FieldMatrix::from_rows({{1.5, 0}, {0, 0}}));
}

TEST(FieldBundleCsv, HeaderIsOptional) {
  std::istringstream is("0,1,0,-2\n");
  EXPECT_EQ(read_csv_matrices(is, 2, 1, 1, "csv").matrices.at(0), FieldMatrix::from_rows({{0, 0}, {-2, 0}}));
}

TEST(FieldBundleCsv, DuplicateCell) {
  std::istringstream is("filter,row,col,value\n0,1,1,2\n0,1,1,3\n");
  try {
    read_csv_matrices(is, 2, 1, 1, "csv");
    FAIL();
  } catch (const CsvError& e) {
    EXPECT_EQ(e.kind(), CsvError::Kind::DuplicateCell);
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(FieldBundleCsv, EmptyStreamIsAllZero) {
  std::istringstream is("");
  const FieldBundle b = read_csv_matrices(is, 3, 2, 4, "empty");
  ASSERT_EQ(b.matrices.size(), 2u);
  for (const auto& m : b.matrices)
    for (double v : m.values()) EXPECT_EQ(v, 0.0);
}

TEST(FieldBundleCsv, OutOfRangeAndUnparsable) {
  auto kind = [](const char* text) {
    std::istringstream is(text);
    try {
      read_csv_matrices(is, 2, 1, 1, "x");
    } catch (const CsvError& e) {
      return e.kind();
    }
    ADD_FAILURE() << text;
    return CsvError::Kind::Unparsable;
  };
  EXPECT_EQ(kind("0,2,0,1\n"), CsvError::Kind::OutOfRange);
  EXPECT_EQ(kind("1,0,0,1\n"), CsvError::Kind::OutOfRange);
  EXPECT_EQ(kind("0,0,0,abc\n"), CsvError::Kind::Unparsable);
  EXPECT_EQ(kind("0,0,0,nan\n"), CsvError::Kind::Unparsable);
  EXPECT_EQ(kind("0,0\n"), CsvError::Kind::Unparsable);
}
