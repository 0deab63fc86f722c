#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "lsid/errors.hpp"

namespace lsid {

/// Dense row-major matrix of doubles. Small dimensions only (d <= ~50);
/// everything downstream assumes entries stay finite.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    Matrix(std::size_t rows, std::size_t cols, std::initializer_list<double> entries)
        : rows_(rows), cols_(cols), data_(entries) {
        if (data_.size() != rows * cols)
            throw std::invalid_argument("Matrix: initializer size mismatch");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(const std::vector<double>& d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }

    Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator+=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    Matrix& operator-=(const Matrix& other) {
        require_same_shape(other);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, double s) { return a *= s; }
    friend Matrix operator*(double s, Matrix a) { return a *= s; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("Matrix multiply: shape mismatch");
        Matrix c(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const double aik = a(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
            }
        }
        return c;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        if (x.size() != cols_) throw std::invalid_argument("Matrix apply: shape mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) acc += (*this)(i, j) * x[j];
            y[i] = acc;
        }
        return y;
    }

    double frobenius_norm() const {
        double acc = 0.0;
        for (double v : data_) acc += v * v;
        return std::sqrt(acc);
    }

    /// Maximum absolute column sum.
    double one_norm() const {
        double best = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows_; ++i) s += std::abs((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    double max_abs() const {
        double best = 0.0;
        for (double v : data_) best = std::max(best, std::abs(v));
        return best;
    }

    double trace() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) acc += (*this)(i, i);
        return acc;
    }

private:
    void require_same_shape(const Matrix& other) const {
        if (rows_ != other.rows_ || cols_ != other.cols_)
            throw std::invalid_argument("Matrix: shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Eigendecomposition of a symmetric matrix: A = Q diag(values) Q^T with
/// eigenvalues ascending and orthonormal columns in Q.
struct SymEigen {
    std::vector<double> eigenvalues;
    Matrix eigenvectors;
};

namespace detail {

inline void jacobi_rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const double tau = s / (1.0 + c);

    const std::size_t n = a.rows();
    a(p, p) -= t * apq;
    a(q, q) += t * apq;
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        if (r != p && r != q) {
            const double arp = a(r, p);
            const double arq = a(r, q);
            a(r, p) = arp - s * (arq + tau * arp);
            a(p, r) = a(r, p);
            a(r, q) = arq + s * (arp - tau * arq);
            a(q, r) = a(r, q);
        }
        const double vrp = v(r, p);
        const double vrq = v(r, q);
        v(r, p) = vrp - s * (vrq + tau * vrp);
        v(r, q) = vrq + s * (vrp - tau * vrq);
    }
}

inline double off_diagonal_mass(const Matrix& a) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) acc += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(acc);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Converges when the off-diagonal Frobenius mass
/// drops below 1e-14 * ||A||_F; budget 100 sweeps.
inline SymEigen sym_eigen(const Matrix& a) {
    if (!a.square()) throw NonSymmetricError("sym_eigen: matrix not square");
    const std::size_t n = a.rows();
    const double scale = std::max(1.0, a.frobenius_norm());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * scale)
                throw NonSymmetricError("sym_eigen: asymmetry above tolerance");

    Matrix work = a;
    // Rotations assume exact symmetry: work on the symmetrized copy.
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double avg = 0.5 * (work(i, j) + work(j, i));
            work(i, j) = avg;
            work(j, i) = avg;
        }
    Matrix vectors = Matrix::identity(n);

    const double threshold = 1e-14 * a.frobenius_norm();
    bool converged = detail::off_diagonal_mass(work) <= threshold;
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                if (std::abs(work(p, q)) > 1e-300) detail::jacobi_rotate(work, vectors, p, q);
        converged = detail::off_diagonal_mass(work) <= threshold;
    }
    if (!converged) throw NoConvergenceError("sym_eigen: sweep budget exhausted");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return work(i, i) < work(j, j); });

    SymEigen result;
    result.eigenvalues.resize(n);
    result.eigenvectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        result.eigenvalues[j] = work(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) result.eigenvectors(i, j) = vectors(i, order[j]);
    }
    return result;
}

namespace detail {

inline Matrix gram(const Matrix& a) {
    // Smaller of A^T A and A A^T; eigenvalues of either give the singular values.
    if (a.cols() <= a.rows()) return a.transpose() * a;
    return a * a.transpose();
}

}  // namespace detail

/// Largest singular value sigma_max(A) = sqrt(lambda_max(A^T A)).
inline double operator_norm(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    const SymEigen eig = sym_eigen(detail::gram(a));
    return std::sqrt(std::max(eig.eigenvalues.back(), 0.0));
}

/// Smallest singular value over the column space: sigma_d(A) for a T x d
/// design matrix, computed from the d x d Gram matrix.
inline double smallest_singular_value(const Matrix& a) {
    if (a.rows() == 0 || a.cols() == 0) return 0.0;
    const SymEigen eig = sym_eigen(a.transpose() * a);
    return std::sqrt(std::max(eig.eigenvalues.front(), 0.0));
}

/// Matrix exponential by scaling-and-squaring with a degree-18 Taylor series
/// on the scaled matrix. Accurate to machine precision for the small-norm
/// skew matrices the packing construction feeds it; exp of a skew matrix is
/// orthogonal to ~1e-15.
inline Matrix matrix_exp(const Matrix& x) {
    if (!x.square()) throw std::invalid_argument("matrix_exp: matrix not square");
    const std::size_t n = x.rows();
    const double norm = x.one_norm();
    int squarings = 0;
    if (norm > 0.0) squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm))) + 1);

    Matrix scaled = x * std::ldexp(1.0, -squarings);
    Matrix result = Matrix::identity(n);
    Matrix term = Matrix::identity(n);
    for (int j = 1; j <= 18; ++j) {
        term = term * scaled;
        term *= 1.0 / static_cast<double>(j);
        result += term;
    }
    for (int s = 0; s < squarings; ++s) result = result * result;
    return result;
}

/// log det(Ga) - log det(Gb) for symmetric positive definite inputs, summed
/// over eigenvalue logs rather than forming determinants.
inline double log_det_ratio(const Matrix& ga, const Matrix& gb) {
    if (ga.rows() != gb.rows() || ga.cols() != gb.cols())
        throw std::invalid_argument("log_det_ratio: shape mismatch");
    const SymEigen ea = sym_eigen(ga);
    const SymEigen eb = sym_eigen(gb);
    double acc = 0.0;
    for (double v : ea.eigenvalues) {
        if (v <= 0.0) throw NotPositiveDefiniteError("log_det_ratio: first argument not SPD");
        acc += std::log(v);
    }
    for (double v : eb.eigenvalues) {
        if (v <= 0.0) throw NotPositiveDefiniteError("log_det_ratio: second argument not SPD");
        acc -= std::log(v);
    }
    return acc;
}

inline double lambda_min(const Matrix& a) { return sym_eigen(a).eigenvalues.front(); }
inline double lambda_max(const Matrix& a) { return sym_eigen(a).eigenvalues.back(); }

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace lsid
