#include "pactran/tensor_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include "pactran/errors.hpp"

namespace pactran {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

// All payloads are little endian; the code assumes a little-endian host
// (static_assert below guards the builds this project targets).
static_assert(std::endian::native == std::endian::little,
              "tensor container assumes a little-endian host");

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

template <typename T>
T read_scalar(const std::string& bytes, std::uint64_t& offset, const std::filesystem::path& path) {
  if (offset + sizeof(T) > bytes.size()) {
    throw FormatError("truncated tensor file " + path.string(), offset);
  }
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

Tensor load_binary(const std::string& bytes, const std::filesystem::path& path) {
  std::uint64_t offset = 4;  // magic already checked
  const auto version = read_scalar<std::uint32_t>(bytes, offset, path);
  if (version != kVersion) {
    throw FormatError("unsupported tensor version " + std::to_string(version) + " in " +
                          path.string(),
                      4);
  }
  const auto dtype_byte = read_scalar<std::uint8_t>(bytes, offset, path);
  if (dtype_byte > 1) throw FormatError("unknown dtype in " + path.string(), offset - 1);
  const auto rank = read_scalar<std::uint8_t>(bytes, offset, path);
  if (rank == 0 || rank > 8) throw FormatError("bad rank in " + path.string(), offset - 1);

  Tensor tensor;
  tensor.dtype = static_cast<TensorDtype>(dtype_byte);
  std::uint64_t count = 1;
  for (int i = 0; i < rank; ++i) {
    const auto dim = read_scalar<std::uint64_t>(bytes, offset, path);
    tensor.dims.push_back(dim);
    count *= dim;
  }
  tensor.values.resize(count);
  const size_t elem = tensor.dtype == TensorDtype::Float32 ? 4 : 4;
  if (offset + count * elem > bytes.size()) {
    throw FormatError("truncated tensor payload in " + path.string(), bytes.size());
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    if (tensor.dtype == TensorDtype::Float32) {
      float v;
      std::memcpy(&v, bytes.data() + offset + 4 * i, 4);
      if (std::isnan(v)) {
        throw ValidationError("NaN value in tensor " + path.string() + " at element " +
                              std::to_string(i));
      }
      tensor.values[i] = static_cast<double>(v);
    } else {
      std::int32_t v;
      std::memcpy(&v, bytes.data() + offset + 4 * i, 4);
      tensor.values[i] = static_cast<double>(v);
    }
  }
  return tensor;
}

Tensor load_csv(const std::string& bytes, const std::filesystem::path& path) {
  Tensor tensor;
  tensor.dtype = TensorDtype::Float32;
  std::uint64_t cols = 0, rows = 0;
  std::uint64_t pos = 0;
  while (pos < bytes.size()) {
    std::uint64_t eol = bytes.find('\n', pos);
    if (eol == std::string::npos) eol = bytes.size();
    std::uint64_t line_end = eol;
    if (line_end > pos && bytes[line_end - 1] == '\r') --line_end;
    if (line_end > pos) {  // skip blank lines
      std::uint64_t field_start = pos;
      std::uint64_t row_cols = 0;
      for (std::uint64_t p = pos; p <= line_end; ++p) {
        if (p == line_end || bytes[p] == ',') {
          double value;
          const char* first = bytes.data() + field_start;
          const char* last = bytes.data() + p;
          while (first < last && (*first == ' ' || *first == '\t')) ++first;
          while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
          const auto parsed = std::from_chars(first, last, value);
          if (parsed.ec != std::errc{} || parsed.ptr != last || first == last) {
            throw FormatError("unparsable CSV field in " + path.string(),
                              static_cast<std::uint64_t>(field_start));
          }
          if (std::isnan(value)) {
            throw ValidationError("NaN value in tensor " + path.string());
          }
          tensor.values.push_back(value);
          ++row_cols;
          field_start = p + 1;
        }
      }
      if (cols == 0) {
        cols = row_cols;
      } else if (row_cols != cols) {
        throw FormatError("ragged CSV row in " + path.string(), pos);
      }
      ++rows;
    }
    pos = eol + 1;
  }
  if (rows == 0) throw FormatError("empty CSV file " + path.string(), 0);
  tensor.dims = {rows, cols};
  return tensor;
}

}  // namespace

std::uint64_t Tensor::element_count() const {
  std::uint64_t count = 1;
  for (auto d : dims) count *= d;
  return count;
}

Tensor load_tensor(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) == 0) {
    return load_binary(bytes, path);
  }
  return load_csv(bytes, path);
}

void save_tensor(const Tensor& tensor, const std::filesystem::path& path) {
  if (tensor.dims.empty()) throw ValidationError("save_tensor: rank-0 tensor");
  if (tensor.element_count() != tensor.values.size()) {
    throw ValidationError("save_tensor: dims inconsistent with value count");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open for writing: " + path.string());
  out.write(kMagic, 4);
  const std::uint32_t version = kVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const std::uint8_t dtype = static_cast<std::uint8_t>(tensor.dtype);
  const std::uint8_t rank = static_cast<std::uint8_t>(tensor.dims.size());
  out.write(reinterpret_cast<const char*>(&dtype), 1);
  out.write(reinterpret_cast<const char*>(&rank), 1);
  for (auto d : tensor.dims) out.write(reinterpret_cast<const char*>(&d), 8);
  for (double value : tensor.values) {
    if (std::isnan(value)) throw ValidationError("save_tensor: NaN value");
    if (tensor.dtype == TensorDtype::Float32) {
      const float v = static_cast<float>(value);
      out.write(reinterpret_cast<const char*>(&v), 4);
    } else {
      const std::int32_t v = static_cast<std::int32_t>(value);
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
  if (!out) throw ValidationError("write failed: " + path.string());
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  const Tensor tensor = load_tensor(path);
  if (tensor.dims.size() != 2) {
    throw ValidationError("expected rank-2 tensor in " + path.string());
  }
  const auto rows = static_cast<Eigen::Index>(tensor.dims[0]);
  const auto cols = static_cast<Eigen::Index>(tensor.dims[1]);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = tensor.values[i * cols + j];
  }
  return out;
}

Eigen::VectorXi load_int_vector(const std::filesystem::path& path) {
  const Tensor tensor = load_tensor(path);
  std::uint64_t n;
  if (tensor.dims.size() == 1) {
    n = tensor.dims[0];
  } else if (tensor.dims.size() == 2 && tensor.dims[1] == 1) {
    n = tensor.dims[0];  // single-column CSV fallback
  } else {
    throw ValidationError("expected rank-1 tensor in " + path.string());
  }
  Eigen::VectorXi out(static_cast<Eigen::Index>(n));
  for (std::uint64_t i = 0; i < n; ++i) {
    const double v = tensor.values[i];
    if (v != std::floor(v) || std::abs(v) > std::numeric_limits<std::int32_t>::max()) {
      throw ValidationError("non-integer label in " + path.string() + " at " + std::to_string(i));
    }
    out[static_cast<Eigen::Index>(i)] = static_cast<int>(v);
  }
  return out;
}

void save_matrix(const Eigen::MatrixXd& matrix, const std::filesystem::path& path) {
  Tensor tensor;
  tensor.dtype = TensorDtype::Float32;
  tensor.dims = {static_cast<std::uint64_t>(matrix.rows()),
                 static_cast<std::uint64_t>(matrix.cols())};
  tensor.values.reserve(matrix.size());
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) tensor.values.push_back(matrix(i, j));
  }
  save_tensor(tensor, path);
}

void save_int_vector(const Eigen::VectorXi& values, const std::filesystem::path& path) {
  Tensor tensor;
  tensor.dtype = TensorDtype::Int32;
  tensor.dims = {static_cast<std::uint64_t>(values.size())};
  tensor.values.reserve(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    tensor.values.push_back(static_cast<double>(values[i]));
  }
  save_tensor(tensor, path);
}

}  // namespace pactran
