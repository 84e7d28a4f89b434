#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace pactran {

/// On-disk container: magic "PTRN", u32 version (= 1), u8 dtype
/// (0 = float32, 1 = int32), u8 rank, rank u64 dims, then the row-major
/// little-endian payload. Round-trips bit-exactly.
enum class TensorDtype : std::uint8_t { Float32 = 0, Int32 = 1 };

struct Tensor {
  TensorDtype dtype = TensorDtype::Float32;
  std::vector<std::uint64_t> dims;
  // Values held as doubles; float32/int32 payloads are exactly representable.
  std::vector<double> values;

  std::uint64_t element_count() const;
};

/// Loads a tensor, sniffing the format: the binary container when the magic
/// matches, otherwise headerless CSV (rank 2, float32). Truncated or
/// malformed input throws FormatError with a byte offset; NaN payloads throw
/// ValidationError.
Tensor load_tensor(const std::filesystem::path& path);

/// Writes the binary container format (always, regardless of extension).
void save_tensor(const Tensor& tensor, const std::filesystem::path& path);

/// Rank-2 float32 tensor as a double matrix (values already widened).
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);

/// Rank-1 int32 tensor as an int vector.
Eigen::VectorXi load_int_vector(const std::filesystem::path& path);

void save_matrix(const Eigen::MatrixXd& matrix, const std::filesystem::path& path);
void save_int_vector(const Eigen::VectorXi& values, const std::filesystem::path& path);

}  // namespace pactran
