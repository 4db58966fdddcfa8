#ifndef ASTRALORA_NUMLIN_MATRIX_HPP
#define ASTRALORA_NUMLIN_MATRIX_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "astralora/errors.hpp"

namespace astralora::numlin {

// Dense real matrix, row-major storage.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    void set_row(std::size_t i, std::span<const double> values);
    void set_col(std::size_t j, std::span<const double> values);
    std::vector<double> col(std::size_t j) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Dense complex matrix, row-major; used by interferometer-style models.
class CMatrix {
public:
    using value_type = std::complex<double>;

    CMatrix() = default;

    CMatrix(std::size_t rows, std::size_t cols, value_type fill = {})
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static CMatrix identity(std::size_t n) {
        CMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    value_type& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    value_type operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    value_type* data() { return data_.data(); }
    const value_type* data() const { return data_.data(); }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<value_type> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);    // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b); // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b); // a * b^T
Matrix transpose(const Matrix& a);

std::vector<double> matvec(const Matrix& a, std::span<const double> x);
std::vector<double> matvec_t(const Matrix& a, std::span<const double> x); // a^T * x

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);

double frob_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
bool all_finite(std::span<const double> x);

CMatrix cmatmul(const CMatrix& a, const CMatrix& b);
CMatrix adjoint(const CMatrix& a);
Matrix real_part(const CMatrix& a);

inline double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double nrm2(std::span<const double> a) {
    double s = 0.0;
    for (double v : a) s += v * v;
    return std::sqrt(s);
}

// y += c * x
inline void axpy(double c, std::span<const double> x, std::span<double> y) {
    require(x.size() == y.size(), "axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

} // namespace astralora::numlin

#endif
