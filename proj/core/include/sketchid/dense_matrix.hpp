#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace sketchid {

/// Row-major dense real matrix: the carrier type for every numeric payload
/// in the library. Storage is a contiguous vector of doubles of length
/// rows() * cols(); entry (i, j) lives at data()[i * cols() + j].
class DenseMatrix {
public:
    DenseMatrix() = default;

    /// Zero-filled rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    /// Adopts `data` as the row-major payload; throws DimensionMismatchError
    /// unless data.size() == rows * cols.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) noexcept {
        return data_[i * cols_ + j];
    }
    const double& operator()(std::size_t i, std::size_t j) const noexcept {
        return data_[i * cols_ + j];
    }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    std::span<double> row(std::size_t i) noexcept {
        return {data_.data() + i * cols_, cols_};
    }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    bool all_finite() const noexcept;

    DenseMatrix& operator+=(const DenseMatrix& other);
    DenseMatrix& operator-=(const DenseMatrix& other);
    DenseMatrix& operator*=(double scalar) noexcept;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs);
DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs);
DenseMatrix operator*(double scalar, DenseMatrix m) noexcept;

double frobenius_norm(const DenseMatrix& m) noexcept;
/// ||a - b||_F without forming the difference.
double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b);

// --- DMX1 container -------------------------------------------------------
// Byte layout, little-endian throughout:
//   bytes 0..3   magic "DMX1"
//   bytes 4..11  rows, unsigned 64-bit
//   bytes 12..19 cols, unsigned 64-bit
//   then rows * cols IEEE-754 doubles, row-major.
// load_dmx rejects bad magic, truncated payloads and non-finite entries.

void save_dmx(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix load_dmx(const std::filesystem::path& path);

}  // namespace sketchid
