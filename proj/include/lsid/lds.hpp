#pragma once

#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "lsid/matrix.hpp"
#include "lsid/rng.hpp"

namespace lsid {

/// Discrete-time linear dynamical system X_{t+1} = A X_t + B u_t + eta_t with
/// process noise eta_t ~ N(0, sigma2 I) and, when B is present, white inputs
/// u_t ~ N(0, input_sigma2 I). Marginal stability is the caller's
/// responsibility; no spectral radius is computed here.
struct LinearSystem {
    Matrix a;
    std::optional<Matrix> b;
    double sigma2 = 1.0;
    double input_sigma2 = 0.0;

    std::size_t dim() const { return a.rows(); }

    static LinearSystem scalar(double a_value, double sigma2 = 1.0) {
        LinearSystem sys;
        sys.a = Matrix(1, 1, {a_value});
        sys.sigma2 = sigma2;
        return sys;
    }

    void validate() const {
        if (!a.square()) throw std::invalid_argument("LinearSystem: A must be square");
        if (sigma2 < 0.0) throw std::invalid_argument("LinearSystem: sigma2 must be nonnegative");
        if (b && b->rows() != a.rows())
            throw std::invalid_argument("LinearSystem: B row count must match state dimension");
        if (input_sigma2 < 0.0)
            throw std::invalid_argument("LinearSystem: input_sigma2 must be nonnegative");
    }
};

/// One simulated rollout. Row t of `states` is X_t, t = 0..T. `overflowed` is
/// set when some |X_t|_inf exceeded 1e150; from that point on states are
/// frozen at the last computed value and downstream estimators reject the
/// trajectory.
struct Trajectory {
    Matrix states;                 // (T+1) x d
    std::optional<Matrix> inputs;  // T x m when the system has a B
    std::uint64_t master_seed = 0;
    std::uint64_t stream_id = 0;
    bool overflowed = false;

    std::size_t horizon() const { return states.rows() - 1; }
    std::size_t dim() const { return states.cols(); }

    std::vector<double> state(std::size_t t) const {
        std::vector<double> x(dim());
        for (std::size_t j = 0; j < dim(); ++j) x[j] = states(t, j);
        return x;
    }
};

constexpr double kOverflowGuard = 1e150;

/// Simulate T steps from x0 (default 0). Per step the process noise is drawn
/// first, then the input when B is present; the draw order is part of the
/// reproducibility contract.
inline Trajectory simulate(const LinearSystem& sys, int horizon, RngStream rng,
                           const std::vector<double>* x0 = nullptr) {
    sys.validate();
    if (horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    const std::size_t d = sys.dim();
    const std::size_t m = sys.b ? sys.b->cols() : 0;
    const double sigma = std::sqrt(sys.sigma2);
    const double sigma_u = std::sqrt(sys.input_sigma2);

    Trajectory traj;
    traj.states = Matrix(static_cast<std::size_t>(horizon) + 1, d);
    if (sys.b) traj.inputs = Matrix(static_cast<std::size_t>(horizon), m);
    traj.master_seed = rng.master_seed();
    traj.stream_id = rng.stream_id();

    std::vector<double> x(d, 0.0);
    if (x0) {
        if (x0->size() != d) throw std::invalid_argument("simulate: x0 dimension mismatch");
        x = *x0;
    }
    for (std::size_t j = 0; j < d; ++j) traj.states(0, j) = x[j];

    for (int t = 0; t < horizon; ++t) {
        if (traj.overflowed) {
            // Freeze: copy the last computed state forward.
            for (std::size_t j = 0; j < d; ++j) traj.states(t + 1, j) = x[j];
            continue;
        }
        std::vector<double> next = sys.a.apply(x);
        const std::vector<double> noise = gaussian_vector(rng, d, sigma);
        for (std::size_t j = 0; j < d; ++j) next[j] += noise[j];
        if (sys.b) {
            const std::vector<double> u = gaussian_vector(rng, m, sigma_u);
            const std::vector<double> bu = sys.b->apply(u);
            for (std::size_t j = 0; j < d; ++j) next[j] += bu[j];
            for (std::size_t j = 0; j < m; ++j) (*traj.inputs)(t, j) = u[j];
        }
        x = next;
        for (std::size_t j = 0; j < d; ++j) {
            traj.states(t + 1, j) = x[j];
            if (std::abs(x[j]) > kOverflowGuard) traj.overflowed = true;
        }
    }
    return traj;
}

/// Finite-time controllability Gramians Gamma_1..Gamma_T via the recursion
/// Gamma_1 = I, Gamma_{t+1} = I + A Gamma_t A^T, with eigenvalue statistics
/// cached per step. When B is present the control Gramians follow
/// GammaB_1 = B B^T, GammaB_{t+1} = B B^T + A GammaB_t A^T.
struct GramianSeries {
    std::vector<Matrix> gramians;
    std::vector<Matrix> control_gramians;
    std::vector<double> lambda_min;
    std::vector<double> lambda_max;
    std::vector<double> trace;
    std::vector<double> log_det;

    std::size_t horizon() const { return gramians.size(); }
    std::size_t dim() const { return gramians.empty() ? 0 : gramians.front().rows(); }

    /// 1-based access: gamma(t) is Gamma_t.
    const Matrix& gamma(std::size_t t) const { return gramians.at(t - 1); }
    const Matrix& control_gamma(std::size_t t) const { return control_gramians.at(t - 1); }
};

inline GramianSeries gramian_series(const LinearSystem& sys, int horizon) {
    sys.validate();
    if (horizon < 1) throw std::invalid_argument("gramian_series: horizon must be >= 1");
    const std::size_t d = sys.dim();
    const Matrix eye = Matrix::identity(d);
    const Matrix at = sys.a.transpose();

    GramianSeries gs;
    gs.gramians.reserve(horizon);
    Matrix g = eye;
    for (int t = 1; t <= horizon; ++t) {
        if (t > 1) g = eye + sys.a * g * at;
        gs.gramians.push_back(g);
        const SymEigen eig = sym_eigen(g);
        gs.lambda_min.push_back(eig.eigenvalues.front());
        gs.lambda_max.push_back(eig.eigenvalues.back());
        gs.trace.push_back(g.trace());
        double ld = 0.0;
        for (double v : eig.eigenvalues) ld += std::log(std::max(v, 1e-300));
        gs.log_det.push_back(ld);
    }
    if (sys.b) {
        const Matrix bbt = (*sys.b) * sys.b->transpose();
        Matrix gb = bbt;
        gs.control_gramians.reserve(horizon);
        for (int t = 1; t <= horizon; ++t) {
            if (t > 1) gb = bbt + sys.a * gb * at;
            gs.control_gramians.push_back(gb);
        }
    }
    return gs;
}

/// Scalar Gramian gamma_t(rho) = sum_{s=0}^{t-1} rho^{2s}, with the 0^0 = 1
/// convention so gamma_t(0) = 1. Evaluated through expm1/log for stability
/// near |rho| = 1.
inline double scalar_gramian(double rho, long long t) {
    if (t < 1) throw std::invalid_argument("scalar_gramian: t must be >= 1");
    const double r = std::abs(rho);
    if (r == 0.0) return 1.0;
    if (r == 1.0) return static_cast<double>(t);
    const double l = std::log(r);
    return std::expm1(2.0 * static_cast<double>(t) * l) / std::expm1(2.0 * l);
}

/// Largest block length k in [1, T] with T/k >= c (d log(d/delta) +
/// log det(Gamma_T Gamma_k^{-1})), found by descending scan so the returned k
/// is maximal. Empty when even k = 1 fails (horizon below burn-in).
inline std::optional<int> select_block_length(const GramianSeries& gs, double delta,
                                              double c = 1.0) {
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("select_block_length: delta must lie in (0, 1/2)");
    if (c <= 0.0) throw std::invalid_argument("select_block_length: c must be positive");
    const int horizon = static_cast<int>(gs.horizon());
    const double d = static_cast<double>(gs.dim());
    const double log_det_t = gs.log_det.back();
    for (int k = horizon; k >= 1; --k) {
        const double rhs = c * (d * std::log(d / delta) + (log_det_t - gs.log_det[k - 1]));
        if (static_cast<double>(horizon) / k >= rhs) return k;
    }
    return std::nullopt;
}

/// Closed-form block length for diagonalizable systems:
/// k = floor(T / (c d log(cond(S) d / delta))), or empty below burn-in.
inline std::optional<int> diag_block_length(double cond_s, int d, double delta, int horizon,
                                            double c = 1.0) {
    if (cond_s < 1.0) throw std::invalid_argument("diag_block_length: cond(S) must be >= 1");
    if (!(delta > 0.0 && delta < 0.5))
        throw std::invalid_argument("diag_block_length: delta must lie in (0, 1/2)");
    const double denom = c * d * std::log(cond_s * d / delta);
    const int k = static_cast<int>(std::floor(static_cast<double>(horizon) / denom));
    if (k < 1) return std::nullopt;
    return std::min(k, horizon);
}

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out += buf;
}

}  // namespace detail

/// CSV export: header `t,x_0,...,x_{d-1}`, one row per time step, floats with
/// 17 significant digits.
inline std::string trajectory_csv(const Trajectory& traj) {
    std::string out = "t";
    for (std::size_t j = 0; j < traj.dim(); ++j) {
        out += ",x_" + std::to_string(j);
    }
    out += "\n";
    for (std::size_t t = 0; t < traj.states.rows(); ++t) {
        out += std::to_string(t);
        for (std::size_t j = 0; j < traj.dim(); ++j) {
            out += ',';
            detail::append_double(out, traj.states(t, j));
        }
        out += "\n";
    }
    return out;
}

inline Trajectory parse_trajectory_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("trajectory CSV: empty input");
    std::size_t d = 0;
    for (char ch : line)
        if (ch == ',') ++d;
    if (d == 0) throw std::invalid_argument("trajectory CSV: no state columns");

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            row.push_back(std::stod(cell));
        }
        if (row.size() != d) throw std::invalid_argument("trajectory CSV: ragged row");
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw std::invalid_argument("trajectory CSV: need at least two states");

    Trajectory traj;
    traj.states = Matrix(rows.size(), d);
    for (std::size_t t = 0; t < rows.size(); ++t)
        for (std::size_t j = 0; j < d; ++j) traj.states(t, j) = rows[t][j];
    return traj;
}

}  // namespace lsid
