#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <utility>

#include "lsid/errors.hpp"
#include "lsid/lds.hpp"
#include "lsid/matrix.hpp"

namespace lsid {

/// Least-squares data: row t of X is the regressor, row t of Y the response.
struct Regression {
    Matrix x;  // T x d
    Matrix y;  // T x n

    void validate() const {
        if (x.rows() != y.rows() || x.rows() < 1)
            throw std::invalid_argument("Regression: X and Y need matching row counts >= 1");
    }
};

struct EstimateReport {
    Matrix a_hat;  // n x d
    std::optional<double> op_error;
    double sigma_min_x = 0.0;
    bool rank_deficient = false;
};

namespace detail {

/// Pseudo-inverse of a Gram matrix X^T X through its eigendecomposition.
/// Singular values of X below d * eps_machine * sigma_max count as zero;
/// `rank` reports how many survive.
inline Matrix gram_pseudo_inverse(const Matrix& gram, std::size_t* rank_out) {
    const std::size_t d = gram.rows();
    const SymEigen eig = sym_eigen(gram);
    const double sigma_max = std::sqrt(std::max(eig.eigenvalues.back(), 0.0));
    const double tol = static_cast<double>(d) * std::numeric_limits<double>::epsilon() * sigma_max;

    Matrix inv(d, d);
    std::size_t rank = 0;
    for (std::size_t k = 0; k < d; ++k) {
        const double sv = std::sqrt(std::max(eig.eigenvalues[k], 0.0));
        if (sv <= tol || sv == 0.0) continue;
        ++rank;
        const double w = 1.0 / eig.eigenvalues[k];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                inv(i, j) += w * eig.eigenvectors(i, k) * eig.eigenvectors(j, k);
    }
    if (rank_out) *rank_out = rank;
    return inv;
}

}  // namespace detail

/// OLS through the d x d Gram system: A_hat = ((X^T X)^+ X^T Y)^T. Rank
/// deficiency yields the minimum-norm solution and sets the flag rather than
/// throwing, so warm-up horizons with T < d survive sweep harnesses.
inline EstimateReport ols_fit(const Regression& reg) {
    reg.validate();
    const Matrix gram = reg.x.transpose() * reg.x;
    std::size_t rank = 0;
    const Matrix gram_inv = detail::gram_pseudo_inverse(gram, &rank);

    EstimateReport report;
    report.a_hat = (gram_inv * (reg.x.transpose() * reg.y)).transpose();
    report.rank_deficient = rank < reg.x.cols();
    report.sigma_min_x = std::sqrt(std::max(sym_eigen(gram).eigenvalues.front(), 0.0));
    return report;
}

namespace detail {

inline Matrix concat_truth(const LinearSystem& truth) {
    if (!truth.b) return truth.a;
    const std::size_t d = truth.a.rows();
    const std::size_t m = truth.b->cols();
    Matrix ab(d, d + m);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) ab(i, j) = truth.a(i, j);
        for (std::size_t j = 0; j < m; ++j) ab(i, d + j) = (*truth.b)(i, j);
    }
    return ab;
}

}  // namespace detail

/// Regress X_{t+1} on X_t (and on stacked (X_t, u_t) when inputs are present,
/// estimating the concatenation (A, B)). The zero initial state contributes
/// nothing and is dropped; an explicitly overridden nonzero X_0 is kept.
inline EstimateReport ols_fit_trajectory(const Trajectory& traj,
                                         const LinearSystem* truth = nullptr) {
    if (traj.overflowed)
        throw OverflowedTrajectoryError("ols_fit_trajectory: trajectory overflowed");
    const std::size_t horizon = traj.horizon();
    if (horizon < 1) throw std::invalid_argument("ols_fit_trajectory: horizon must be >= 1");
    const std::size_t d = traj.dim();
    const std::size_t m = traj.inputs ? traj.inputs->cols() : 0;

    double x0_norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) x0_norm += traj.states(0, j) * traj.states(0, j);
    const std::size_t first = x0_norm > 0.0 ? 0 : 1;

    if (first >= horizon) {
        // Nothing usable (T = 1 from a zero start): minimum-norm answer.
        EstimateReport report;
        report.a_hat = Matrix(d, d + m);
        report.rank_deficient = true;
        if (truth) report.op_error = operator_norm(report.a_hat - detail::concat_truth(*truth));
        return report;
    }

    Regression reg;
    reg.x = Matrix(horizon - first, d + m);
    reg.y = Matrix(horizon - first, d);
    for (std::size_t t = first; t < horizon; ++t) {
        const std::size_t r = t - first;
        for (std::size_t j = 0; j < d; ++j) {
            reg.x(r, j) = traj.states(t, j);
            reg.y(r, j) = traj.states(t + 1, j);
        }
        for (std::size_t j = 0; j < m; ++j) reg.x(r, d + j) = (*traj.inputs)(t, j);
    }

    EstimateReport report = ols_fit(reg);
    if (truth) {
        const Matrix target = detail::concat_truth(*truth);
        if (target.cols() != report.a_hat.cols())
            throw std::invalid_argument("ols_fit_trajectory: truth shape does not match data");
        report.op_error = operator_norm(report.a_hat - target);
    }
    return report;
}

/// Heteroskedastic form: minimize ||Sigma^{-1/2}(Y_t - A X_t)||^2. Fits on the
/// whitened responses and un-whitens, which coincides with plain OLS up to
/// roundoff (the whitening cancels in the normal equations).
inline EstimateReport whitened_ols_fit(const Regression& reg, const Matrix& sigma) {
    reg.validate();
    if (!sigma.square() || sigma.rows() != reg.y.cols())
        throw std::invalid_argument("whitened_ols_fit: Sigma shape mismatch");
    const SymEigen eig = sym_eigen(sigma);
    if (eig.eigenvalues.front() <= 0.0)
        throw NotPositiveDefiniteError("whitened_ols_fit: Sigma is not positive definite");

    const std::size_t n = sigma.rows();
    Matrix half(n, n), half_inv(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        const double root = std::sqrt(eig.eigenvalues[k]);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double outer = eig.eigenvectors(i, k) * eig.eigenvectors(j, k);
                half(i, j) += root * outer;
                half_inv(i, j) += outer / root;
            }
    }

    Regression whitened{reg.x, reg.y * half_inv};  // rows become Sigma^{-1/2} y_t
    EstimateReport report = ols_fit(whitened);
    report.a_hat = half * report.a_hat;
    return report;
}

/// Error floors for any estimator on a fixed design with unit-variance
/// Gaussian responses: E||A_hat - A||_op^2 >= max(tr((X^T X)^{-1}),
/// n lambda_min(X^T X)^{-1}). Returns (trace_floor, mineig_floor).
inline std::pair<double, double> fixed_design_error_floor(const Matrix& x, int n) {
    if (n < 1) throw std::invalid_argument("fixed_design_error_floor: n must be >= 1");
    const Matrix gram = x.transpose() * x;
    const SymEigen eig = sym_eigen(gram);
    const double sigma_max = std::sqrt(std::max(eig.eigenvalues.back(), 0.0));
    const double tol =
        static_cast<double>(gram.rows()) * std::numeric_limits<double>::epsilon() * sigma_max;
    double trace_floor = 0.0;
    for (double v : eig.eigenvalues) {
        if (v <= 0.0 || std::sqrt(v) <= tol)
            throw SingularDesignError("fixed_design_error_floor: X^T X is singular");
        trace_floor += 1.0 / v;
    }
    const double mineig_floor = static_cast<double>(n) / eig.eigenvalues.front();
    return {trace_floor, mineig_floor};
}

}  // namespace lsid
