#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>

#include "lsid/lds.hpp"
#include "lsid/matrix.hpp"

namespace lsid {

enum class Regime { stable, marginal, unstable };

inline const char* regime_name(Regime r) {
    switch (r) {
        case Regime::stable: return "stable";
        case Regime::marginal: return "marginal";
        case Regime::unstable: return "unstable";
    }
    return "unknown";
}

inline Regime regime_of_radius(double rho) {
    const double r = std::abs(rho);
    if (r < 1.0) return Regime::stable;
    if (r == 1.0) return Regime::marginal;
    return Regime::unstable;
}

/// Evaluated bound value plus everything needed to reproduce it: every
/// constant that entered the formula is enumerated in constants_used.
/// feasible == false means the bound's burn-in condition failed and no value
/// is reported.
struct BoundReport {
    std::optional<double> value;
    std::map<std::string, double> constants_used;
    std::optional<int> block_length;
    std::optional<Regime> regime;
    bool feasible = true;
};

/// Small-ball certificate for a linear system: the state process satisfies
/// the (k, gamma_sb, p)-block martingale small-ball condition with
/// gamma_sb = sigma^2 Gamma_{floor(k/2)} and p = 3/20, and the sample Gram
/// matrix stays below T * gamma_bar with probability 1 - delta for
/// gamma_bar = (d/delta) sigma^2 Gamma_T (a Markov-inequality envelope).
struct SmallBallCert {
    int k = 1;
    Matrix gamma_sb;
    double p = 3.0 / 20.0;
    Matrix gamma_bar;
};

namespace detail {

// floor(k/2) clamped to >= 1; for k = 1 the small-ball scale Gamma_1 is valid
// with the same probability level.
inline std::size_t half_block(int k) { return std::max<std::size_t>(1, static_cast<std::size_t>(k) / 2); }

}  // namespace detail

/// Build the small-ball certificate with the largest feasible block length:
/// k maximal with T >= (10 k / p^2)(log(1/delta) + 2 d log(10/p) +
/// log det(gamma_bar gamma_sb^{-1})). Empty when even k = 1 fails.
inline std::optional<SmallBallCert> lds_cert(const LinearSystem& sys, const GramianSeries& gs,
                                             int horizon, double delta) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("lds_cert: delta must lie in (0, 1/2)");
    if (horizon < 1 || static_cast<std::size_t>(horizon) > gs.horizon())
        throw std::invalid_argument("lds_cert: horizon outside Gramian series");
    const double p = 3.0 / 20.0;
    const double d = static_cast<double>(gs.dim());
    const double log_det_t = gs.log_det[horizon - 1];
    // log det(gamma_bar gamma_sb^{-1}) = d log(d/delta) + log det(Gamma_T Gamma_{k'}^{-1});
    // the sigma^2 factors cancel.
    const double base = std::log(1.0 / delta) + 2.0 * d * std::log(10.0 / p) + d * std::log(d / delta);

    for (int k = horizon; k >= 1; --k) {
        const std::size_t half = detail::half_block(k);
        const double log_det_ratio = log_det_t - gs.log_det[half - 1];
        const double rhs = 10.0 * k / (p * p) * (base + log_det_ratio);
        if (static_cast<double>(horizon) >= rhs) {
            SmallBallCert cert;
            cert.k = k;
            cert.p = p;
            cert.gamma_sb = gs.gamma(half) * sys.sigma2;
            cert.gamma_bar = gs.gamma(horizon) * (sys.sigma2 * d / delta);
            return cert;
        }
    }
    return std::nullopt;
}

/// Self-normalized least-squares bound for linear responses: with probability
/// at least 1 - 3 delta,
///   ||A_hat - A||_op <= (90 sigma / p) sqrt((n + d log(10/p) +
///       log det(gamma_bar gamma_sb^{-1}) + log(1/delta)) / (T lambda_min(gamma_sb)))
/// provided T >= (10 k / p^2)(log(1/delta) + 2 d log(10/p) + log det(...)).
/// The report also carries the underlying deviation threshold K.
inline BoundReport self_normalized_bound(const SmallBallCert& cert, int horizon, int n,
                                         double sigma, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("self_normalized_bound: delta must lie in (0, 1)");
    if (n < 1) throw std::invalid_argument("self_normalized_bound: n must be >= 1");
    const double d = static_cast<double>(cert.gamma_sb.rows());
    const double p = cert.p;
    const double ld_ratio = log_det_ratio(cert.gamma_bar, cert.gamma_sb);

    BoundReport report;
    report.block_length = cert.k;
    report.constants_used["p"] = p;
    report.constants_used["prefactor"] = 90.0;
    report.constants_used["burn_in_factor"] = 10.0;
    report.constants_used["sigma"] = sigma;
    report.constants_used["delta"] = delta;
    report.constants_used["failure_probability"] = 3.0 * delta;
    report.constants_used["log_det_ratio"] = ld_ratio;

    const double burn_in =
        10.0 * cert.k / (p * p) *
        (std::log(1.0 / delta) + 2.0 * d * std::log(10.0 / p) + ld_ratio);
    if (static_cast<double>(horizon) < burn_in) {
        report.feasible = false;
        return report;
    }

    const double lam_min = lambda_min(cert.gamma_sb);
    const double mass = n + d * std::log(10.0 / p) + ld_ratio + std::log(1.0 / delta);
    report.value = 90.0 * sigma / p * std::sqrt(mass / (horizon * lam_min));
    report.constants_used["K"] = 20.0 * sigma * std::sqrt(mass);
    return report;
}

/// Input-driven variant: with white inputs through a known B, the bound uses
/// M_k = sigma^2 Gamma_k + sigma_u^2 GammaB_k and
///   value = C sigma^2 sqrt(d log((1/delta) tr(M_T) / lambda_min(M_k)))
///           / sqrt(T lambda_min(M_k)),
/// feasible when T/k >= c d log(tr(M_T) / (delta lambda_min(M_k))).
inline BoundReport input_driven_bound(const LinearSystem& sys, const GramianSeries& gs, int k,
                                      int horizon, double delta, double big_c = 1.0,
                                      double c = 1.0) {
    if (!sys.b) throw MissingInputModelError("input_driven_bound: system has no input matrix B");
    if (gs.control_gramians.empty())
        throw MissingInputModelError("input_driven_bound: Gramian series lacks control Gramians");
    if (k < 1 || k > horizon || static_cast<std::size_t>(horizon) > gs.horizon())
        throw std::invalid_argument("input_driven_bound: bad block length or horizon");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("input_driven_bound: delta must lie in (0, 1/2)");

    const double d = static_cast<double>(gs.dim());
    const Matrix m_k = gs.gamma(k) * sys.sigma2 + gs.control_gamma(k) * sys.input_sigma2;
    const Matrix m_t = gs.gamma(horizon) * sys.sigma2 + gs.control_gamma(horizon) * sys.input_sigma2;
    const double lam_min = lambda_min(m_k);
    const double trace_t = m_t.trace();
    const double log_term = std::log(trace_t / (delta * lam_min));

    BoundReport report;
    report.block_length = k;
    report.constants_used["C"] = big_c;
    report.constants_used["c"] = c;
    report.constants_used["delta"] = delta;
    report.constants_used["sigma2"] = sys.sigma2;
    report.constants_used["input_sigma2"] = sys.input_sigma2;
    report.constants_used["lambda_min_k"] = lam_min;
    report.constants_used["trace_T"] = trace_t;

    if (static_cast<double>(horizon) / k < c * d * log_term) {
        report.feasible = false;
        return report;
    }
    report.value = big_c * sys.sigma2 * std::sqrt(d * log_term) / std::sqrt(horizon * lam_min);
    return report;
}

/// Horizon sufficient for |a_hat - a| <= eps with probability 1 - delta in a
/// scalar system (explicit constants, both branches):
///   |a| <= 1 + eps:  8/eps log(2/delta) + 4/eps^2 (1 - (|a|-eps)^2) log(2/delta)
///   |a| >  1 + eps:  max(8/((|a|-eps)^2 - 1) log(2/delta),
///                        4 log(1/eps)/log(|a|-eps) + 8 log(2/delta))
/// The boundary |a| = 1 + eps uses the first branch. Output is an integer
/// (ceiling).
inline BoundReport scalar_sample_complexity(double a, double eps, double delta) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("scalar_sample_complexity: eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("scalar_sample_complexity: delta must lie in (0, 1/2)");
    const double mag = std::abs(a);
    const double log_term = std::log(2.0 / delta);

    double required;
    bool stable_branch = mag <= 1.0 + eps;
    if (stable_branch) {
        const double gap = mag - eps;
        required = 8.0 / eps * log_term + 4.0 / (eps * eps) * (1.0 - gap * gap) * log_term;
    } else {
        const double gap = mag - eps;  // > 1 here
        const double first = 8.0 / (gap * gap - 1.0) * log_term;
        const double second = 4.0 * std::log(1.0 / eps) / std::log(gap) + 8.0 * log_term;
        required = std::max(first, second);
    }

    BoundReport report;
    report.value = std::ceil(required);
    report.regime = regime_of_radius(a);
    report.constants_used["a"] = a;
    report.constants_used["eps"] = eps;
    report.constants_used["delta"] = delta;
    report.constants_used["stable_branch"] = stable_branch ? 1.0 : 0.0;
    return report;
}

/// Chernoff bound on the failure probability of the scalar estimator via the
/// capped recursion rho_{T-1} = 1, rho_t = 1 + r rho_{t+1} while
/// rho_{t+1} <= alpha/eps^2, else alpha/eps^2, with r = (|a|-eps)^2/(1+alpha):
/// returns min(1, 2 exp(-eps^2 sum_{t=1}^{T-1} rho_t / (2(1+alpha)))).
inline double scalar_mgf_probability(double a, double eps, int horizon, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("scalar_mgf_probability: alpha must be > 0");
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("scalar_mgf_probability: eps must lie in (0, 1)");
    if (horizon < 2) throw std::invalid_argument("scalar_mgf_probability: T must be >= 2");

    const double gap = std::abs(a) - eps;
    const double r = gap * gap / (1.0 + alpha);
    const double cap = alpha / (eps * eps);
    double current = 1.0;  // rho_{T-1}
    double sum = current;
    for (int t = horizon - 2; t >= 1; --t) {
        current = current <= cap ? 1.0 + r * current : cap;
        sum += current;
    }
    const double bound = 2.0 * std::exp(-eps * eps * sum / (2.0 * (1.0 + alpha)));
    return std::min(bound, 1.0);
}

namespace detail {

/// Largest integer T >= 0 with weight(T) <= budget, where weight is
/// nondecreasing; weight(0) is taken as 0. Search capped at `cap`.
template <typename Weight>
long long largest_horizon_below(Weight weight, double budget, long long cap) {
    if (weight(1) > budget) return 0;
    long long lo = 1, hi = 2;
    while (hi < cap && weight(hi) <= budget) {
        lo = hi;
        hi *= 2;
    }
    hi = std::min(hi, cap);
    // invariant: weight(lo) <= budget < weight(hi) (or hi == cap)
    while (lo + 1 < hi) {
        const long long mid = lo + (hi - lo) / 2;
        if (weight(mid) <= budget)
            lo = mid;
        else
            hi = mid;
    }
    if (weight(hi) <= budget) return hi;
    return lo;
}

constexpr long long kHorizonSearchCap = 1'000'000'000'000LL;

}  // namespace detail

/// Minimax threshold for scalar systems: any estimator at horizon T fails
/// with probability >= delta whenever T * sum_{t=1}^{T} a^{2t} <=
/// log(1/(2 delta)) / (8 eps^2). Returns the largest such T. Note the local
/// power sum starts at t = 1 (it lacks scalar_gramian's leading 1), so a = 0
/// zeroes it and the threshold is vacuous: the report then carries an
/// infinite value and an "unbounded" marker.
inline BoundReport scalar_lower_bound_T(double a, double eps, double delta) {
    if (eps <= 0.0) throw std::invalid_argument("scalar_lower_bound_T: eps must be > 0");
    if (!(delta > 0.0 && delta < 0.25))
        throw std::invalid_argument("scalar_lower_bound_T: delta must lie in (0, 1/4)");

    const double budget = std::log(1.0 / (2.0 * delta)) / (8.0 * eps * eps);
    BoundReport report;
    report.regime = regime_of_radius(a);
    report.constants_used["a"] = a;
    report.constants_used["eps"] = eps;
    report.constants_used["delta"] = delta;
    report.constants_used["kl_budget"] = budget;

    if (a == 0.0) {
        report.value = std::numeric_limits<double>::infinity();
        report.constants_used["unbounded"] = 1.0;
        return report;
    }
    const double a2 = a * a;
    const auto weight = [&](long long t) {
        return static_cast<double>(t) * a2 * scalar_gramian(a, t);
    };
    report.value = static_cast<double>(
        detail::largest_horizon_below(weight, budget, detail::kHorizonSearchCap));
    return report;
}

/// Minimax threshold over scaled orthogonal systems: any estimator fails with
/// probability >= delta at every horizon T with T gamma_T(rho) <=
/// c0 (d + log(1/delta)) / eps^2. Returns the largest such T; c0 is a caller
/// parameter since only its existence is guaranteed.
inline BoundReport orthogonal_lower_bound_T(double rho, int d, double eps, double delta,
                                            double c0 = 1.0) {
    if (d < 2) throw std::invalid_argument("orthogonal_lower_bound_T: d must be >= 2");
    if (!(delta > 0.0 && delta < 0.25))
        throw std::invalid_argument("orthogonal_lower_bound_T: delta must lie in (0, 1/4)");
    if (eps <= 0.0) throw std::invalid_argument("orthogonal_lower_bound_T: eps must be > 0");
    if (eps > std::abs(rho) / 2048.0)
        throw EpsTooLargeError("orthogonal_lower_bound_T: requires eps <= rho/2048");

    const double budget = c0 * (d + std::log(1.0 / delta)) / (eps * eps);
    const auto weight = [&](long long t) {
        return static_cast<double>(t) * scalar_gramian(rho, t);
    };
    BoundReport report;
    report.value = static_cast<double>(
        detail::largest_horizon_below(weight, budget, detail::kHorizonSearchCap));
    report.regime = regime_of_radius(rho);
    report.constants_used["rho"] = rho;
    report.constants_used["d"] = d;
    report.constants_used["eps"] = eps;
    report.constants_used["delta"] = delta;
    report.constants_used["c0"] = c0;
    report.constants_used["kl_budget"] = budget;
    return report;
}

/// Jordan-structure upper bound on log det(Gamma_T Gamma_k^{-1}):
///   2 d log cond(S) + d log(T/k) + 4 log(T) sum_{blocks b >= 2} b^2.
/// For diagonalizable systems the block sum vanishes; callers with
/// non-trivial Jordan blocks pass the block sizes explicitly.
inline double diag_logdet_bound(double cond_s, int d, int horizon, int k,
                                const std::vector<int>* block_sizes = nullptr) {
    if (cond_s < 1.0) throw std::invalid_argument("diag_logdet_bound: cond(S) must be >= 1");
    if (horizon < d || k < 1 || k > horizon)
        throw std::invalid_argument("diag_logdet_bound: need T >= d and 1 <= k <= T");
    double block_term = 0.0;
    if (block_sizes) {
        for (int b : *block_sizes)
            if (b >= 2) block_term += static_cast<double>(b) * b;
    }
    return 2.0 * d * std::log(cond_s) + d * std::log(static_cast<double>(horizon) / k) +
           4.0 * std::log(static_cast<double>(horizon)) * block_term;
}

}  // namespace lsid
