#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "pactran/errors.hpp"
#include "pactran/tensor_io.hpp"
#include "test_util.hpp"

using namespace pactran;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("pactran_io_" + name);
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

void write_string(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

std::vector<unsigned char> valid_header(std::uint32_t version, unsigned char dtype,
                                        unsigned char rank, std::vector<std::uint64_t> dims) {
  std::vector<unsigned char> bytes = {'P', 'T', 'R', 'N'};
  for (int b = 0; b < 4; ++b) bytes.push_back((version >> (8 * b)) & 0xff);
  bytes.push_back(dtype);
  bytes.push_back(rank);
  for (std::uint64_t dim : dims) {
    for (int b = 0; b < 8; ++b) bytes.push_back((dim >> (8 * b)) & 0xff);
  }
  return bytes;
}

}  // namespace

TEST_CASE("matrix round trip is bit exact over float32 values") {
  std::mt19937_64 rng(61);
  Eigen::MatrixXd matrix = testutil::random_matrix(rng, 13, 7);
  // Quantize once: the file stores float32.
  for (int i = 0; i < matrix.rows(); ++i) {
    for (int j = 0; j < matrix.cols(); ++j) {
      matrix(i, j) = static_cast<double>(static_cast<float>(matrix(i, j)));
    }
  }
  const auto path = temp_file("roundtrip.ptrn");
  save_matrix(matrix, path);
  const Eigen::MatrixXd loaded = load_matrix(path);
  REQUIRE(loaded.rows() == matrix.rows());
  REQUIRE(loaded.cols() == matrix.cols());
  CHECK((loaded - matrix).norm() == 0.0);
}

TEST_CASE("int vector round trip is exact") {
  Eigen::VectorXi values(5);
  values << 0, 3, -2, 7, 1000000;
  const auto path = temp_file("ints.ptrn");
  save_int_vector(values, path);
  const Eigen::VectorXi loaded = load_int_vector(path);
  REQUIRE(loaded.size() == 5);
  CHECK((loaded - values).norm() == 0);
}

TEST_CASE("junk magic fails at byte offset zero") {
  const auto path = temp_file("junk.bin");
  write_string(path, "XXXX");
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == 0);
  }
}

TEST_CASE("unsupported version fails at its field offset") {
  auto bytes = valid_header(2, 0, 1, {1});
  for (int i = 0; i < 4; ++i) bytes.push_back(0);
  const auto path = temp_file("version.ptrn");
  write_bytes(path, bytes);
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == 4);
  }
}

TEST_CASE("truncated payload fails at the file size") {
  // Rank-1 tensor of 4 floats, but only 2 floats of payload present.
  auto bytes = valid_header(1, 0, 1, {4});
  const size_t expected_offset = bytes.size() + 8;
  for (size_t i = 0; i < 8; ++i) bytes.push_back(0);
  const auto path = temp_file("truncated.ptrn");
  write_bytes(path, bytes);
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == expected_offset);
  }
}

TEST_CASE("non-finite payload values are rejected") {
  auto bytes = valid_header(1, 0, 1, {1});
  // float32 quiet NaN: 0x7fc00000 little-endian.
  bytes.push_back(0x00);
  bytes.push_back(0x00);
  bytes.push_back(0xc0);
  bytes.push_back(0x7f);
  const auto path = temp_file("nan.ptrn");
  write_bytes(path, bytes);
  CHECK_THROWS_AS(load_tensor(path), ValidationError);
}

TEST_CASE("saving non-finite values is rejected") {
  Eigen::MatrixXd matrix(1, 1);
  matrix(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(save_matrix(matrix, temp_file("save_nan.ptrn")), ValidationError);
}

TEST_CASE("csv fallback parses a plain matrix") {
  const auto path = temp_file("plain.csv");
  write_string(path, "1.5,2.0,-3.25\n4.0,5.5,6.0\n");
  const Eigen::MatrixXd matrix = load_matrix(path);
  REQUIRE(matrix.rows() == 2);
  REQUIRE(matrix.cols() == 3);
  CHECK(matrix(0, 2) == -3.25);
  CHECK(matrix(1, 0) == 4.0);
}

TEST_CASE("ragged csv is rejected") {
  const auto path = temp_file("ragged.csv");
  write_string(path, "1,2,3\n4,5\n");
  CHECK_THROWS_AS(load_tensor(path), FormatError);
}

TEST_CASE("unparsable csv field reports its byte offset") {
  const auto path = temp_file("badfield.csv");
  write_string(path, "1,2\n3,oops\n");
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == 6);  // "1,2\n3," is six bytes
  }
}

TEST_CASE("empty file is rejected at offset zero") {
  const auto path = temp_file("empty.csv");
  write_string(path, "");
  try {
    load_tensor(path);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.byte_offset == 0);
  }
}

TEST_CASE("csv int vector accepts one column and checks integrality") {
  const auto path = temp_file("labels.csv");
  write_string(path, "0\n1\n2\n1\n");
  const Eigen::VectorXi labels = load_int_vector(path);
  REQUIRE(labels.size() == 4);
  CHECK(labels[2] == 2);

  const auto bad = temp_file("labels_frac.csv");
  write_string(bad, "0\n1.5\n");
  CHECK_THROWS_AS(load_int_vector(bad), ValidationError);
}

TEST_CASE("load_matrix rejects rank-1 binary tensors") {
  Eigen::VectorXi values(3);
  values << 1, 2, 3;
  const auto path = temp_file("rank1.ptrn");
  save_int_vector(values, path);
  CHECK_THROWS_AS(load_matrix(path), ValidationError);
}
