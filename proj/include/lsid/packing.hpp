#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "lsid/errors.hpp"
#include "lsid/lds.hpp"
#include "lsid/matrix.hpp"
#include "lsid/rng.hpp"

namespace lsid {

/// 1/2-separated point set inside the unit ball of R^m, with the separation
/// re-certified by an exhaustive pair scan.
struct BallPacking {
    std::size_t dim = 0;
    std::vector<std::vector<double>> points;
    double min_separation = 0.0;
};

/// Certified packing of orthogonal matrices: pairwise operator-norm
/// separation at least epsilon0/4 and Frobenius diameter at most 4 epsilon0.
struct PackingSet {
    double epsilon0 = 0.0;
    std::vector<Matrix> members;
    double min_op_separation = 0.0;
    double max_fro_diameter = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> uniform_in_ball(RngStream& rng, std::size_t m) {
    for (;;) {
        std::vector<double> v = gaussian_vector(rng, m, 1.0);
        const double n = norm2(v);
        if (n == 0.0) continue;
        const double radius = std::pow(rng.next_unit_open(), 1.0 / static_cast<double>(m));
        for (double& c : v) c *= radius / n;
        return v;
    }
}

inline double point_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(acc);
}

}  // namespace detail

/// Greedy rejection sampling until `target_count` points of B_m(1) with
/// pairwise distance >= 1/2. A maximal packing has at least 2^m points, so
/// targets up to that are reachable; 1e6 consecutive rejections aborts.
inline BallPacking ball_packing(std::size_t dim, std::size_t target_count, RngStream rng) {
    if (dim < 1) throw std::invalid_argument("ball_packing: dimension must be >= 1");
    if (target_count < 2) throw std::invalid_argument("ball_packing: target_count must be >= 2");

    BallPacking packing;
    packing.dim = dim;
    long long consecutive_rejections = 0;
    while (packing.points.size() < target_count) {
        std::vector<double> candidate = detail::uniform_in_ball(rng, dim);
        bool ok = true;
        for (const auto& p : packing.points) {
            if (detail::point_distance(candidate, p) < 0.5) {
                ok = false;
                break;
            }
        }
        if (ok) {
            packing.points.push_back(std::move(candidate));
            consecutive_rejections = 0;
        } else if (++consecutive_rejections >= 1'000'000) {
            throw PackingStalledError("ball_packing: 1e6 consecutive rejections");
        }
    }

    packing.min_separation = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < packing.points.size(); ++i)
        for (std::size_t j = i + 1; j < packing.points.size(); ++j)
            packing.min_separation = std::min(
                packing.min_separation, detail::point_distance(packing.points[i], packing.points[j]));
    return packing;
}

/// Lift w in B_{d-1}(1) to the skew matrix with first row epsilon0 * (0, w)
/// and first column its negation; ||M||_op = epsilon0 ||w||,
/// ||M||_F = sqrt(2) epsilon0 ||w||, and the lift is linear in w.
inline Matrix skew_lift(const std::vector<double>& w, double epsilon0) {
    const std::size_t d = w.size() + 1;
    Matrix m(d, d);
    for (std::size_t j = 0; j + 1 < d; ++j) {
        m(0, j + 1) = epsilon0 * w[j];
        m(j + 1, 0) = -epsilon0 * w[j];
    }
    return m;
}

/// Exponentiate the lifted ball packing into the orthogonal group and certify
/// every pairwise distance exhaustively. SeparationViolated firing here means
/// a numerics defect, not bad input.
inline PackingSet build_packing(int d, double epsilon0, RngStream rng,
                                std::size_t target_count = 0) {
    if (d < 2) throw std::invalid_argument("build_packing: d must be >= 2");
    if (epsilon0 <= 0.0 || epsilon0 > 1.0 / 256.0)
        throw Epsilon0TooLargeError("build_packing: requires 0 < epsilon0 <= 1/256");
    if (target_count == 0) target_count = std::size_t{1} << (d - 1);

    const BallPacking balls = ball_packing(static_cast<std::size_t>(d) - 1, target_count, rng);

    PackingSet set;
    set.epsilon0 = epsilon0;
    set.seed = rng.master_seed();
    set.members.reserve(balls.points.size());
    for (const auto& w : balls.points) set.members.push_back(matrix_exp(skew_lift(w, epsilon0)));

    const Matrix eye = Matrix::identity(d);
    for (const Matrix& q : set.members) {
        if ((q.transpose() * q - eye).frobenius_norm() > 1e-10)
            throw SeparationViolatedError("build_packing: member failed orthogonality check");
    }

    set.min_op_separation = std::numeric_limits<double>::infinity();
    set.max_fro_diameter = 0.0;
    for (std::size_t i = 0; i < set.members.size(); ++i) {
        for (std::size_t j = i + 1; j < set.members.size(); ++j) {
            const Matrix diff = set.members[i] - set.members[j];
            const double op = operator_norm(diff);
            const double fro = diff.frobenius_norm();
            if (op < epsilon0 / 4.0 - 1e-10)
                throw SeparationViolatedError("build_packing: operator-norm separation violated");
            if (fro > 4.0 * epsilon0 + 1e-10)
                throw SeparationViolatedError("build_packing: Frobenius diameter violated");
            set.min_op_separation = std::min(set.min_op_separation, op);
            set.max_fro_diameter = std::max(set.max_fro_diameter, fro);
        }
    }
    return set;
}

/// Closed-form divergence between the trajectory laws of rho*O and A under
/// unit noise: ||rho O - A||_F^2 * sum_{t=1}^T gamma_t(rho). Callers with
/// sigma != 1 rescale the matrices, not the noise.
inline double trajectory_kl(double rho, const Matrix& orthogonal, const Matrix& a, int horizon) {
    if (!orthogonal.square() || orthogonal.rows() != a.rows() || !a.square() ||
        a.cols() != orthogonal.cols())
        throw std::invalid_argument("trajectory_kl: dimension mismatch");
    if (horizon < 1) throw std::invalid_argument("trajectory_kl: T must be >= 1");
    const Matrix eye = Matrix::identity(orthogonal.rows());
    if ((orthogonal.transpose() * orthogonal - eye).frobenius_norm() > 1e-10)
        throw NotOrthogonalError("trajectory_kl: O is not orthogonal to 1e-10");

    double gram_sum = 0.0;
    for (int t = 1; t <= horizon; ++t) gram_sum += scalar_gramian(rho, t);
    const Matrix diff = orthogonal * rho - a;
    const double fro = diff.frobenius_norm();
    return fro * fro * gram_sum;
}

/// Monte Carlo estimate of the same divergence from simulated log-likelihood
/// ratios: average of sum_{t=1}^T (||X_{t+1} - A X_t||^2 -
/// ||X_{t+1} - rho O X_t||^2) under the rho*O law with unit noise. Returns
/// (estimate, standard error).
inline std::pair<double, double> kl_monte_carlo(double rho, const Matrix& orthogonal,
                                                const Matrix& a, int horizon, long long trials,
                                                RngStream rng) {
    if (trials < 2) throw std::invalid_argument("kl_monte_carlo: trials must be >= 2");
    const Matrix eye = Matrix::identity(orthogonal.rows());
    if ((orthogonal.transpose() * orthogonal - eye).frobenius_norm() > 1e-10)
        throw NotOrthogonalError("kl_monte_carlo: O is not orthogonal to 1e-10");
    const std::size_t d = orthogonal.rows();
    const Matrix truth = orthogonal * rho;
    const Matrix gap = truth - a;  // (rho O - A)

    double sum = 0.0, sum_sq = 0.0;
    for (long long trial = 0; trial < trials; ++trial) {
        RngStream trial_rng(rng.master_seed(), rng.stream_id() ^ (0x6b1100ULL + trial));
        std::vector<double> x(d, 0.0);
        double log_ratio = 0.0;
        for (int t = 0; t <= horizon; ++t) {
            const std::vector<double> eta = gaussian_vector(trial_rng, d, 1.0);
            if (t >= 1) {
                // ||X_{t+1} - A X_t||^2 - ||eta_t||^2 with X_{t+1} - A X_t = gap X_t + eta_t
                const std::vector<double> residual = gap.apply(x);
                double term = 0.0;
                for (std::size_t j = 0; j < d; ++j)
                    term += residual[j] * residual[j] + 2.0 * residual[j] * eta[j];
                log_ratio += term;
            }
            std::vector<double> next = truth.apply(x);
            for (std::size_t j = 0; j < d; ++j) next[j] += eta[j];
            x = std::move(next);
        }
        sum += log_ratio;
        sum_sq += log_ratio * log_ratio;
    }
    const double mean = sum / trials;
    const double var = std::max(0.0, (sum_sq - trials * mean * mean) / (trials - 1));
    return {mean, std::sqrt(var / trials)};
}

/// KL budget that any delta-reliable estimator over N alternatives must pay:
/// (1 - 2 delta) log(N / (2 delta)).
inline double birge_threshold(long long n_alternatives, double delta) {
    if (n_alternatives < 1) throw std::invalid_argument("birge_threshold: N must be >= 1");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("birge_threshold: delta must lie in (0, 1/2)");
    return (1.0 - 2.0 * delta) * std::log(static_cast<double>(n_alternatives) / (2.0 * delta));
}

}  // namespace lsid
