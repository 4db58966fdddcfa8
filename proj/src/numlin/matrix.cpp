#include "astralora/numlin/matrix.hpp"

#include <algorithm>

namespace astralora::numlin {

void Matrix::set_row(std::size_t i, std::span<const double> values) {
    require(i < rows_ && values.size() == cols_, "set_row: shape mismatch");
    std::copy(values.begin(), values.end(), data_.begin() + i * cols_);
}

void Matrix::set_col(std::size_t j, std::span<const double> values) {
    require(j < cols_ && values.size() == rows_, "set_col: shape mismatch");
    for (std::size_t i = 0; i < rows_; ++i) data_[i * cols_ + j] = values[i];
}

std::vector<double> Matrix::col(std::size_t j) const {
    require(j < cols_, "col: index out of range");
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = data_[i * cols_ + j];
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data() + i * c.cols();
        const double* ai = a.data() + i * a.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            if (aik == 0.0) continue;
            const double* bk = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows(), "matmul_tn: dimension mismatch");
    Matrix c(a.cols(), b.cols());
    for (std::size_t k = 0; k < a.rows(); ++k) {
        const double* ak = a.data() + k * a.cols();
        const double* bk = b.data() + k * b.cols();
        for (std::size_t i = 0; i < a.cols(); ++i) {
            const double aki = ak[i];
            if (aki == 0.0) continue;
            double* ci = c.data() + i * c.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.cols(), "matmul_nt: dimension mismatch");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.data() + i * a.cols();
        for (std::size_t j = 0; j < b.rows(); ++j) {
            const double* bj = b.data() + j * b.cols();
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    require(x.size() == a.cols(), "matvec: dimension mismatch");
    std::vector<double> y(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

std::vector<double> matvec_t(const Matrix& a, std::span<const double> x) {
    require(x.size() == a.rows(), "matvec_t: dimension mismatch");
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) axpy(x[i], a.row(i), y);
    return y;
}

Matrix add(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.storage()[i] += b.storage()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "sub: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.storage()[i] -= b.storage()[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix out = a;
    for (double& v : out.storage()) v *= c;
    return out;
}

double frob_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.storage()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.storage()) m = std::max(m, std::abs(v));
    return m;
}

bool all_finite(const Matrix& a) {
    return all_finite(std::span<const double>(a.storage()));
}

bool all_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

CMatrix cmatmul(const CMatrix& a, const CMatrix& b) {
    require(a.cols() == b.rows(), "cmatmul: inner dimension mismatch");
    CMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const std::complex<double> aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

CMatrix adjoint(const CMatrix& a) {
    CMatrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = std::conj(a(i, j));
    return t;
}

Matrix real_part(const CMatrix& a) {
    Matrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j).real();
    return out;
}

} // namespace astralora::numlin
