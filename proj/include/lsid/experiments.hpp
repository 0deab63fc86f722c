#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "lsid/bounds.hpp"
#include "lsid/errors.hpp"
#include "lsid/estimator.hpp"
#include "lsid/lds.hpp"
#include "lsid/matrix.hpp"
#include "lsid/rng.hpp"

namespace lsid {

struct ScalarSpec {
    double a = 0.0;
};

/// rho * O with O drawn by exponentiating a random skew matrix (orthogonal by
/// construction; no QR needed).
struct ScaledOrthogonalSpec {
    double rho = 1.0;
    int d = 2;
    std::uint64_t seed = 0;
};

/// A = S diag(spectrum) S^{-1} with S = exp(skew) * diag(graded scales)
/// hitting the requested cond(S) exactly; real spectra only.
struct DiagonalizableSpec {
    std::vector<double> spectrum;
    double cond_s = 1.0;
    std::uint64_t seed = 0;
};

struct ExplicitSpec {
    Matrix a;
};

using SystemSpec = std::variant<ScalarSpec, ScaledOrthogonalSpec, DiagonalizableSpec, ExplicitSpec>;

inline Matrix random_skew(RngStream& rng, std::size_t d, double scale = 1.0) {
    Matrix s(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i + 1; j < d; ++j) {
            const double v = gaussian_scalar(rng, scale);
            s(i, j) = v;
            s(j, i) = -v;
        }
    return s;
}

/// Haar-ish orthogonal sample: exponentiate a random skew matrix. Orthogonal
/// by construction, no QR required.
inline Matrix random_orthogonal(RngStream& rng, std::size_t d) {
    return matrix_exp(random_skew(rng, d, 1.0));
}

inline LinearSystem realize_system(const SystemSpec& spec, double sigma) {
    LinearSystem sys;
    sys.sigma2 = sigma * sigma;
    if (const auto* scalar = std::get_if<ScalarSpec>(&spec)) {
        sys.a = Matrix(1, 1, {scalar->a});
    } else if (const auto* orth = std::get_if<ScaledOrthogonalSpec>(&spec)) {
        if (orth->d < 1) throw std::invalid_argument("realize_system: d must be >= 1");
        RngStream rng(orth->seed, 0x0a7ULL);
        sys.a = random_orthogonal(rng, orth->d) * orth->rho;
    } else if (const auto* diag = std::get_if<DiagonalizableSpec>(&spec)) {
        if (diag->spectrum.empty())
            throw std::invalid_argument("realize_system: spectrum must be nonempty");
        if (diag->cond_s < 1.0) throw std::invalid_argument("realize_system: cond(S) must be >= 1");
        const std::size_t d = diag->spectrum.size();
        RngStream rng(diag->seed, 0xd1a6ULL);
        const Matrix q = random_orthogonal(rng, d);
        std::vector<double> scales(d, 1.0);
        for (std::size_t i = 0; i < d; ++i)
            scales[i] = d > 1 ? std::pow(diag->cond_s, static_cast<double>(i) / (d - 1)) : 1.0;
        // S = Q diag(scales): cond(S) = cond_s; S^{-1} = diag(1/scales) Q^T.
        const Matrix s = q * Matrix::diagonal(scales);
        std::vector<double> inv_scales(d);
        for (std::size_t i = 0; i < d; ++i) inv_scales[i] = 1.0 / scales[i];
        const Matrix s_inv = Matrix::diagonal(inv_scales) * q.transpose();
        sys.a = s * Matrix::diagonal(diag->spectrum) * s_inv;
    } else {
        sys.a = std::get<ExplicitSpec>(spec).a;
    }
    sys.validate();
    return sys;
}

inline double spectral_radius_hint(const SystemSpec& spec) {
    if (const auto* scalar = std::get_if<ScalarSpec>(&spec)) return std::abs(scalar->a);
    if (const auto* orth = std::get_if<ScaledOrthogonalSpec>(&spec)) return std::abs(orth->rho);
    if (const auto* diag = std::get_if<DiagonalizableSpec>(&spec)) {
        double r = 0.0;
        for (double v : diag->spectrum) r = std::max(r, std::abs(v));
        return r;
    }
    return std::numeric_limits<double>::quiet_NaN();  // explicit matrices carry no hint
}

struct SweepConfig {
    SystemSpec system;
    double sigma = 1.0;
    std::vector<int> t_grid;
    int trials = 100;
    double delta = 0.1;
    std::uint64_t master_seed = 0;

    void validate() const {
        if (t_grid.empty() || !std::is_sorted(t_grid.begin(), t_grid.end()) ||
            std::adjacent_find(t_grid.begin(), t_grid.end()) != t_grid.end() || t_grid.front() < 1)
            throw ConfigError("SweepConfig: T_grid must be strictly increasing and positive");
        if (trials < 100) throw ConfigError("SweepConfig: trials must be >= 100");
        if (!(delta > 0.0 && delta < 0.5)) throw ConfigError("SweepConfig: delta must lie in (0, 1/2)");
        if (sigma <= 0.0) throw ConfigError("SweepConfig: sigma must be positive");
    }
};

struct SweepCell {
    int horizon = 0;
    int trials = 0;
    double median_err = 0.0;
    double quantile_err = 0.0;
    double mean_sigma_min = 0.0;
    int overflow_count = 0;
    std::optional<double> bound_value;
    std::vector<double> samples;  // op_error per completed trial, indexed by trial
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::optional<double> fitted_slope;
    std::optional<double> slope_ci_halfwidth;
    std::string regime_label;
    std::uint64_t master_seed = 0;
};

namespace detail {

/// Type-7 (linear interpolation) quantile of a sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * (sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = pos - lo;
    return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

inline double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    return quantile_sorted(values, q);
}

inline double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

/// Least-squares slope of y against x.
inline double slope_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Deterministic parallel map over trial indices: each trial derives its own
/// stream, results land in slot `trial`, so the output is independent of the
/// thread count.
template <typename Body>
void parallel_trials(int trials, int threads, Body body) {
    threads = std::max(1, threads);
    if (threads == 1) {
        for (int trial = 0; trial < trials; ++trial) body(trial);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([=]() {
            for (int trial = w; trial < trials; trial += threads) body(trial);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Slope of log(median error) against log(T), with a 95% bootstrap CI over
/// the per-trial samples (1000 resamples) when samples were retained.
inline std::pair<double, double> fit_loglog_slope(const SweepResult& result,
                                                  std::uint64_t bootstrap_seed = 0x600ULL) {
    if (result.cells.size() < 3) throw DegenerateGridError("fit_loglog_slope: need >= 3 grid points");
    std::vector<double> log_t, log_med;
    bool have_samples = true;
    for (const SweepCell& cell : result.cells) {
        if (cell.median_err <= 0.0)
            throw DegenerateGridError("fit_loglog_slope: medians must be positive");
        log_t.push_back(std::log(static_cast<double>(cell.horizon)));
        log_med.push_back(std::log(cell.median_err));
        have_samples = have_samples && !cell.samples.empty();
    }
    const double slope = detail::slope_fit(log_t, log_med);
    if (!have_samples) return {slope, 0.0};

    constexpr int kResamples = 1000;
    std::vector<double> slopes(kResamples);
    for (int b = 0; b < kResamples; ++b) {
        RngStream rng(bootstrap_seed, 0xb007ULL + b);
        std::vector<double> boot_log_med(result.cells.size());
        for (std::size_t c = 0; c < result.cells.size(); ++c) {
            const std::vector<double>& samples = result.cells[c].samples;
            std::vector<double> resampled(samples.size());
            for (std::size_t i = 0; i < samples.size(); ++i)
                resampled[i] = samples[rng.next_u64() % samples.size()];
            boot_log_med[c] = std::log(std::max(detail::median(std::move(resampled)), 1e-300));
        }
        slopes[b] = detail::slope_fit(log_t, boot_log_med);
    }
    std::sort(slopes.begin(), slopes.end());
    const double lo = detail::quantile_sorted(slopes, 0.025);
    const double hi = detail::quantile_sorted(slopes, 0.975);
    return {slope, (hi - lo) / 2.0};
}

/// Monte Carlo sweep: per grid point, `trials` independent simulate-and-fit
/// runs with per-trial derived seeds; medians and 1-delta quantiles of the
/// operator-norm error, plus the evaluated upper bound where its burn-in
/// condition holds. Deterministic given master_seed, regardless of threads.
inline SweepResult run_sweep(const SweepConfig& cfg, int threads = 1) {
    cfg.validate();
    const LinearSystem sys = realize_system(cfg.system, cfg.sigma);
    const int max_horizon = cfg.t_grid.back();
    const GramianSeries gs = gramian_series(sys, max_horizon);

    SweepResult result;
    result.master_seed = cfg.master_seed;
    const double radius = spectral_radius_hint(cfg.system);
    result.regime_label =
        std::isnan(radius) ? "unspecified" : regime_name(regime_of_radius(radius));

    for (std::size_t ci = 0; ci < cfg.t_grid.size(); ++ci) {
        const int horizon = cfg.t_grid[ci];
        SweepCell cell;
        cell.horizon = horizon;
        cell.trials = cfg.trials;
        cell.samples.assign(cfg.trials, 0.0);
        std::vector<double> sigma_mins(cfg.trials, 0.0);
        std::vector<unsigned char> overflowed(cfg.trials, 0);

        detail::parallel_trials(cfg.trials, threads, [&](int trial) {
            const std::uint64_t stream =
                (static_cast<std::uint64_t>(ci) << 32) | static_cast<std::uint64_t>(trial);
            const Trajectory traj = simulate(sys, horizon, RngStream(cfg.master_seed, stream));
            if (traj.overflowed) {
                overflowed[trial] = 1;
                return;
            }
            const EstimateReport report = ols_fit_trajectory(traj, &sys);
            cell.samples[trial] = *report.op_error;
            sigma_mins[trial] = report.sigma_min_x;
        });

        // Overflowed trials become a per-cell statistic, never an abort.
        std::vector<double> kept;
        kept.reserve(cfg.trials);
        double sigma_min_sum = 0.0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            if (overflowed[trial]) {
                ++cell.overflow_count;
            } else {
                kept.push_back(cell.samples[trial]);
                sigma_min_sum += sigma_mins[trial];
            }
        }
        cell.samples = kept;
        if (!kept.empty()) {
            std::sort(kept.begin(), kept.end());
            cell.median_err = detail::quantile_sorted(kept, 0.5);
            cell.quantile_err = detail::quantile_sorted(kept, 1.0 - cfg.delta);
            cell.mean_sigma_min = sigma_min_sum / static_cast<double>(kept.size());
        }

        if (const auto cert = lds_cert(sys, gs, horizon, cfg.delta)) {
            const BoundReport bound = self_normalized_bound(
                *cert, horizon, static_cast<int>(sys.dim()), cfg.sigma, cfg.delta);
            if (bound.feasible) cell.bound_value = bound.value;
        }
        result.cells.push_back(std::move(cell));
    }

    if (result.cells.size() >= 3 &&
        std::all_of(result.cells.begin(), result.cells.end(),
                    [](const SweepCell& c) { return c.median_err > 0.0; })) {
        const auto [slope, ci] = fit_loglog_slope(result, cfg.master_seed);
        result.fitted_slope = slope;
        result.slope_ci_halfwidth = ci;
    }
    return result;
}

struct RegimeRow {
    double a = 0.0;
    std::string regime;
    double empirical_quantile = 0.0;
    double predicted_scale = 0.0;
};

/// Classify each a against the boundaries 1 - log(1/delta)/T and 1 + 1/T
/// (the marginal band is closed at both ends) and report the empirical
/// 1-delta error quantile next to the matching theoretical scale.
inline std::vector<RegimeRow> regime_report(const std::vector<double>& a_grid, int horizon,
                                            int trials, double delta,
                                            std::uint64_t master_seed = 0, int threads = 1) {
    if (horizon < 2) throw std::invalid_argument("regime_report: T must be >= 2");
    if (trials < 1) throw std::invalid_argument("regime_report: trials must be >= 1");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("regime_report: delta must lie in (0, 1/2)");
    const double log_term = std::log(1.0 / delta);
    const double stable_edge = 1.0 - log_term / horizon;
    const double marginal_edge = 1.0 + 1.0 / horizon;

    std::vector<RegimeRow> rows;
    for (std::size_t ai = 0; ai < a_grid.size(); ++ai) {
        const double a = a_grid[ai];
        if (a < 0.0 || a > 1.5) throw std::invalid_argument("regime_report: a must lie in [0, 1.5]");
        RegimeRow row;
        row.a = a;
        if (a <= stable_edge) {
            row.regime = "stable";
            row.predicted_scale = std::sqrt(log_term * (1.0 - a) / horizon);
        } else if (a <= marginal_edge) {
            row.regime = "marginal";
            row.predicted_scale = log_term / horizon;
        } else {
            row.regime = "unstable";
            row.predicted_scale = log_term / std::pow(a, horizon);
        }

        const LinearSystem sys = LinearSystem::scalar(a);
        std::vector<double> errors(trials, 0.0);
        detail::parallel_trials(trials, threads, [&](int trial) {
            const std::uint64_t stream =
                (static_cast<std::uint64_t>(ai) << 32) | static_cast<std::uint64_t>(trial);
            const Trajectory traj = simulate(sys, horizon, RngStream(master_seed, stream));
            if (traj.overflowed) {
                errors[trial] = std::numeric_limits<double>::infinity();
                return;
            }
            errors[trial] = *ols_fit_trajectory(traj, &sys).op_error;
        });
        row.empirical_quantile = detail::quantile(std::move(errors), 1.0 - delta);
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace lsid
