#include "sketchid/dense_matrix.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>

#include "sketchid/errors.hpp"

// DMX1 writes raw doubles and u64 fields; the format is defined little-endian.
static_assert(std::endian::native == std::endian::little,
              "DMX1 persistence assumes a little-endian host");

namespace sketchid {

namespace {

std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols,
                         std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionMismatchError(
            "DenseMatrix: payload of size " + std::to_string(data_.size()) +
            " does not fill a " + shape_string(rows_, cols_) + " matrix");
    }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool DenseMatrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

DenseMatrix& DenseMatrix::operator+=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw DimensionMismatchError("matrix addition: " +
                                     shape_string(rows_, cols_) + " vs " +
                                     shape_string(other.rows_, other.cols_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator-=(const DenseMatrix& other) {
    if (rows_ != other.rows_ || cols_ != other.cols_) {
        throw DimensionMismatchError("matrix subtraction: " +
                                     shape_string(rows_, cols_) + " vs " +
                                     shape_string(other.rows_, other.cols_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

DenseMatrix& DenseMatrix::operator*=(double scalar) noexcept {
    for (double& v : data_) v *= scalar;
    return *this;
}

DenseMatrix operator+(DenseMatrix lhs, const DenseMatrix& rhs) {
    lhs += rhs;
    return lhs;
}

DenseMatrix operator-(DenseMatrix lhs, const DenseMatrix& rhs) {
    lhs -= rhs;
    return lhs;
}

DenseMatrix operator*(double scalar, DenseMatrix m) noexcept {
    m *= scalar;
    return m;
}

double frobenius_norm(const DenseMatrix& m) noexcept {
    double acc = 0.0;
    const double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) acc += p[i] * p[i];
    return std::sqrt(acc);
}

double frobenius_distance(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatchError("frobenius_distance: shapes differ");
    }
    double acc = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = pa[i] - pb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {
constexpr char kMagic[4] = {'D', 'M', 'X', '1'};
}

void save_dmx(const DenseMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("save_dmx: cannot open " + path.string());
    }
    const std::uint64_t rows = m.rows();
    const std::uint64_t cols = m.cols();
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
    out.write(reinterpret_cast<const char*>(&cols), sizeof cols);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!out) {
        throw IoError("save_dmx: short write to " + path.string());
    }
}

DenseMatrix load_dmx(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("load_dmx: cannot open " + path.string());
    }
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
        throw IoError("load_dmx: bad magic in " + path.string());
    }
    std::uint64_t rows = 0;
    std::uint64_t cols = 0;
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&cols), sizeof cols);
    if (!in) {
        throw IoError("load_dmx: truncated header in " + path.string());
    }
    std::vector<double> data;
    data.resize(static_cast<std::size_t>(rows * cols));
    in.read(reinterpret_cast<char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
    if (!in) {
        throw IoError("load_dmx: truncated payload in " + path.string());
    }
    DenseMatrix m(static_cast<std::size_t>(rows),
                  static_cast<std::size_t>(cols), std::move(data));
    if (!m.all_finite()) {
        throw IoError("load_dmx: non-finite entry in " + path.string());
    }
    return m;
}

}  // namespace sketchid
