// lsid command-line front end: simulation, estimation, bound evaluation,
// lower-bound thresholds, Monte Carlo sweeps, and empirical verification of
// the concentration machinery. Every run prints its resolved seed and the
// universal-constant defaults so emitted artifacts are reproducible.
//
// Exit codes: 0 success, 1 validation/usage error, 2 verification failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "lsid/bounds.hpp"
#include "lsid/estimator.hpp"
#include "lsid/experiments.hpp"
#include "lsid/io.hpp"
#include "lsid/lds.hpp"
#include "lsid/packing.hpp"
#include "lsid/smallball.hpp"

namespace {

using namespace lsid;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerifyFailed = 2;

struct SystemFlags {
    std::optional<double> scalar_a;
    std::optional<double> rho;
    int d = 2;
    std::string a_csv;
    std::string b_csv;
    double sigma = 1.0;
    double sigma_u = 0.0;
    std::uint64_t system_seed = 0;
};

void add_system_flags(CLI::App* cmd, SystemFlags& flags) {
    cmd->add_option("--scalar-a", flags.scalar_a, "Scalar system: dynamics coefficient a");
    cmd->add_option("--rho", flags.rho, "Scaled orthogonal system: spectral radius rho");
    cmd->add_option("--d", flags.d, "State dimension for --rho systems")->default_val(2);
    cmd->add_option("--a-csv", flags.a_csv, "Explicit dynamics matrix from a headerless CSV");
    cmd->add_option("--b-csv", flags.b_csv, "Input matrix B from a headerless CSV");
    cmd->add_option("--sigma", flags.sigma, "Process noise standard deviation")->default_val(1.0);
    cmd->add_option("--sigma-u", flags.sigma_u, "Input standard deviation (with --b-csv)")
        ->default_val(0.0);
    cmd->add_option("--system-seed", flags.system_seed,
                    "Seed for sampling the orthogonal factor of --rho systems")
        ->default_val(0);
}

Matrix matrix_from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open matrix CSV: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("matrix CSV is empty: " + path);
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols()) throw ConfigError("matrix CSV has ragged rows: " + path);
        for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    }
    return m;
}

LinearSystem build_system(const SystemFlags& flags) {
    LinearSystem sys;
    int sources = 0;
    if (flags.scalar_a) ++sources;
    if (flags.rho) ++sources;
    if (!flags.a_csv.empty()) ++sources;
    if (sources != 1)
        throw ConfigError("exactly one of --scalar-a, --rho, --a-csv must be given");
    if (flags.scalar_a) {
        sys.a = Matrix(1, 1, {*flags.scalar_a});
    } else if (flags.rho) {
        sys = realize_system(ScaledOrthogonalSpec{*flags.rho, flags.d, flags.system_seed},
                             flags.sigma);
    } else {
        sys.a = matrix_from_csv(flags.a_csv);
    }
    sys.sigma2 = flags.sigma * flags.sigma;
    if (!flags.b_csv.empty()) {
        sys.b = matrix_from_csv(flags.b_csv);
        sys.input_sigma2 = flags.sigma_u * flags.sigma_u;
    }
    sys.validate();
    return sys;
}

// Goes to stderr so stdout stays machine-readable for piped JSON/CSV.
void print_resolved(std::uint64_t seed, std::uint64_t stream = 0) {
    std::cerr << "resolved: seed=" << seed << " stream=" << stream
              << " constants: c=1 c0=1 C=1 p=0.15\n";
}

void emit_json(const nlohmann::json& j, const std::string& out_path) {
    const std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        io::write_file(out_path, text);
}

std::vector<double> parse_double_list(const std::string& csv) {
    std::vector<double> values;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(std::stod(cell));
    return values;
}

std::vector<int> parse_int_list(const std::string& csv) {
    std::vector<int> values;
    std::stringstream ss(csv);
    std::string cell;
    while (std::getline(ss, cell, ',')) values.push_back(std::stoi(cell));
    return values;
}

// Simpson quadrature for the verify-mgf cross-check; deliberately a second
// route, not a call into the closed form.
double mgf_quadrature(double a, double nu, double mu, double x) {
    const double drift = x * (nu * a + mu) / (1.0 - nu);
    const double halfwidth = 14.0 / std::sqrt(1.0 - nu);
    const double lo = drift - halfwidth, hi = drift + halfwidth;
    const int steps = 20000;  // even
    const double h = (hi - lo) / steps;
    const auto f = [&](double eta) {
        const double shifted = a * x + eta;
        return std::exp(0.5 * nu * shifted * shifted + mu * x * eta - 0.5 * eta * eta) /
               std::sqrt(2.0 * M_PI);
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) acc += f(lo + i * h) * (i % 2 == 0 ? 2.0 : 4.0);
    return acc * h / 3.0;
}

int run_simulate(const SystemFlags& sys_flags, int horizon, std::uint64_t seed,
                 std::uint64_t stream, const std::string& x0_csv, const std::string& out) {
    const LinearSystem sys = build_system(sys_flags);
    print_resolved(seed, stream);
    std::optional<std::vector<double>> x0;
    if (!x0_csv.empty()) x0 = parse_double_list(x0_csv);
    const Trajectory traj =
        simulate(sys, horizon, RngStream(seed, stream), x0 ? &*x0 : nullptr);
    io::write_file(out, trajectory_csv(traj));
    std::cout << "wrote " << out << " (" << traj.states.rows() << " states";
    if (traj.overflowed) std::cout << ", OVERFLOWED";
    std::cout << ")\n";
    return kExitOk;
}

int run_estimate(const std::string& traj_path, std::optional<double> truth_a,
                 const std::string& truth_csv, const std::string& out) {
    std::ifstream in(traj_path);
    if (!in) throw ConfigError("cannot open trajectory: " + traj_path);
    const Trajectory traj = parse_trajectory_csv(in);

    print_resolved(0);
    std::optional<LinearSystem> truth;
    if (truth_a) {
        truth = LinearSystem::scalar(*truth_a);
    } else if (!truth_csv.empty()) {
        LinearSystem sys;
        sys.a = matrix_from_csv(truth_csv);
        truth = sys;
    }
    const EstimateReport report = ols_fit_trajectory(traj, truth ? &*truth : nullptr);
    emit_json(io::to_json(report), out);
    return kExitOk;
}

int run_gramian(const SystemFlags& sys_flags, int horizon, const std::string& out,
                std::optional<double> select_delta, double c, std::optional<double> cond_s) {
    const LinearSystem sys = build_system(sys_flags);
    print_resolved(0);
    const GramianSeries gs = gramian_series(sys, horizon);
    std::string csv = "t,lambda_min,lambda_max,trace,log_det\n";
    for (std::size_t t = 1; t <= gs.horizon(); ++t) {
        csv += std::to_string(t) + ',';
        csv += io::format_double(gs.lambda_min[t - 1]) + ',';
        csv += io::format_double(gs.lambda_max[t - 1]) + ',';
        csv += io::format_double(gs.trace[t - 1]) + ',';
        csv += io::format_double(gs.log_det[t - 1]) + '\n';
    }
    if (out.empty())
        std::cout << csv;
    else {
        io::write_file(out, csv);
        std::cout << "wrote " << out << "\n";
    }
    if (select_delta) {
        const auto k = select_block_length(gs, *select_delta, c);
        std::cout << "block_length: " << (k ? std::to_string(*k) : "none (below burn-in)")
                  << "\n";
        if (cond_s) {
            const auto k_diag = diag_block_length(*cond_s, static_cast<int>(gs.dim()),
                                                  *select_delta, horizon, c);
            std::cout << "block_length_diagonalizable: "
                      << (k_diag ? std::to_string(*k_diag) : "none (below burn-in)") << "\n";
        }
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lsid: least-squares identification of linear dynamical systems"};
    app.require_subcommand(1);

    // ---- simulate ----
    auto* simulate_cmd = app.add_subcommand("simulate", "Simulate a trajectory and write CSV");
    SystemFlags sim_sys;
    add_system_flags(simulate_cmd, sim_sys);
    int sim_T = 100;
    std::uint64_t sim_seed = 0, sim_stream = 0;
    std::string sim_x0, sim_out;
    simulate_cmd->add_option("--T", sim_T, "Horizon (number of steps)")->required();
    simulate_cmd->add_option("--seed", sim_seed, "Master seed")->default_val(0);
    simulate_cmd->add_option("--stream", sim_stream, "Stream id")->default_val(0);
    simulate_cmd->add_option("--x0", sim_x0, "Initial state, comma separated (default 0)");
    simulate_cmd->add_option("--out", sim_out, "Output CSV path")->required();

    // ---- estimate ----
    auto* estimate_cmd = app.add_subcommand("estimate", "OLS fit of a trajectory CSV");
    std::string est_traj, est_truth_csv, est_out;
    std::optional<double> est_truth_a;
    estimate_cmd->add_option("--traj", est_traj, "Trajectory CSV path")->required();
    estimate_cmd->add_option("--truth-scalar-a", est_truth_a, "Ground-truth scalar a");
    estimate_cmd->add_option("--truth-a-csv", est_truth_csv, "Ground-truth matrix CSV");
    estimate_cmd->add_option("--out", est_out, "Output JSON path (stdout when omitted)");

    // ---- gramian ----
    auto* gramian_cmd = app.add_subcommand("gramian", "Controllability Gramian statistics CSV");
    SystemFlags gram_sys;
    add_system_flags(gramian_cmd, gram_sys);
    int gram_T = 100;
    std::string gram_out;
    std::optional<double> gram_select_delta, gram_cond_s;
    double gram_c = 1.0;
    gramian_cmd->add_option("--T", gram_T, "Horizon")->required();
    gramian_cmd->add_option("--out", gram_out, "Output CSV path (stdout when omitted)");
    gramian_cmd->add_option("--select-delta", gram_select_delta,
                            "Also report the largest feasible block length at this delta");
    gramian_cmd->add_option("--c", gram_c, "Universal burn-in constant c")->default_val(1.0);
    gramian_cmd->add_option("--cond-s", gram_cond_s,
                            "Also report the closed-form diagonalizable block length");

    // ---- bound ----
    auto* bound_cmd = app.add_subcommand("bound", "Evaluate finite-sample upper bounds");
    bound_cmd->require_subcommand(1);

    auto* bound_main = bound_cmd->add_subcommand(
        "main", "Self-normalized bound with explicit constants (prefactor 90 sigma / p)");
    SystemFlags bm_sys;
    add_system_flags(bound_main, bm_sys);
    int bm_T = 1000, bm_n = 0;
    double bm_delta = 0.1;
    std::string bm_out;
    bound_main->add_option("--T", bm_T, "Horizon")->required();
    bound_main->add_option("--delta", bm_delta, "Failure probability parameter")->default_val(0.1);
    bound_main->add_option("--n", bm_n, "Response dimension (default: state dimension)")
        ->default_val(0);
    bound_main->add_option("--out", bm_out, "Output JSON path (stdout when omitted)");

    auto* bound_scalar = bound_cmd->add_subcommand(
        "scalar", "Horizon sufficient for eps-accuracy in a scalar system");
    double bs_a = 0.0, bs_eps = 0.1, bs_delta = 0.1;
    std::string bs_out;
    bound_scalar->add_option("--a", bs_a, "Scalar dynamics coefficient")->required();
    bound_scalar->add_option("--eps", bs_eps, "Target accuracy")->default_val(0.1);
    bound_scalar->add_option("--delta", bs_delta, "Failure probability")->default_val(0.1);
    bound_scalar->add_option("--out", bs_out, "Output JSON path (stdout when omitted)");

    auto* bound_input = bound_cmd->add_subcommand("input", "Input-driven bound (requires --b-csv)");
    SystemFlags bi_sys;
    add_system_flags(bound_input, bi_sys);
    int bi_T = 1000, bi_k = 1;
    double bi_delta = 0.1, bi_C = 1.0, bi_c = 1.0;
    std::string bi_out;
    bound_input->add_option("--T", bi_T, "Horizon")->required();
    bound_input->add_option("--k", bi_k, "Block length")->required();
    bound_input->add_option("--delta", bi_delta, "Failure probability")->default_val(0.1);
    bound_input->add_option("--C", bi_C, "Universal constant C")->default_val(1.0);
    bound_input->add_option("--c", bi_c, "Universal burn-in constant c")->default_val(1.0);
    bound_input->add_option("--out", bi_out, "Output JSON path (stdout when omitted)");

    auto* bound_logdet = bound_cmd->add_subcommand(
        "logdet", "Jordan-structure upper bound on log det(Gamma_T Gamma_k^{-1})");
    double bl_cond = 1.0;
    int bl_d = 1, bl_T = 10, bl_k = 1;
    std::string bl_blocks, bl_out;
    bound_logdet->add_option("--cond-s", bl_cond, "Condition number of the similarity S")
        ->required();
    bound_logdet->add_option("--d", bl_d, "State dimension")->required();
    bound_logdet->add_option("--T", bl_T, "Horizon")->required();
    bound_logdet->add_option("--k", bl_k, "Block length")->required();
    bound_logdet->add_option("--block-sizes", bl_blocks,
                             "Jordan block sizes, comma separated (omit when diagonalizable)");
    bound_logdet->add_option("--out", bl_out, "Output JSON path (stdout when omitted)");

    // ---- lower-bound ----
    auto* lower_cmd = app.add_subcommand("lower-bound", "Minimax lower-bound thresholds");
    lower_cmd->require_subcommand(1);

    auto* lower_scalar =
        lower_cmd->add_subcommand("scalar", "Largest horizon where scalar estimation must fail");
    double ls_a = 0.5, ls_eps = 0.1, ls_delta = 0.05;
    std::string ls_out;
    lower_scalar->add_option("--a", ls_a, "Scalar dynamics coefficient")->required();
    lower_scalar->add_option("--eps", ls_eps, "Accuracy")->default_val(0.1);
    lower_scalar->add_option("--delta", ls_delta, "Failure probability")->default_val(0.05);
    lower_scalar->add_option("--out", ls_out, "Output JSON path (stdout when omitted)");

    auto* lower_orth = lower_cmd->add_subcommand(
        "orthogonal", "Largest horizon where estimation over rho * O(d) must fail");
    double lo_rho = 1.0, lo_eps = 1e-4, lo_delta = 0.05, lo_c0 = 1.0;
    int lo_d = 2;
    std::string lo_out;
    lower_orth->add_option("--rho", lo_rho, "Scale of the orthogonal family")->required();
    lower_orth->add_option("--d", lo_d, "Dimension (>= 2)")->default_val(2);
    lower_orth->add_option("--eps", lo_eps, "Accuracy (requires eps <= rho/2048)")->required();
    lower_orth->add_option("--delta", lo_delta, "Failure probability")->default_val(0.05);
    lower_orth->add_option("--c0", lo_c0, "Universal constant c0")->default_val(1.0);
    lower_orth->add_option("--out", lo_out, "Output JSON path (stdout when omitted)");

    auto* lower_birge =
        lower_cmd->add_subcommand("birge", "KL budget forced on any delta-reliable estimator");
    long long lb_n = 2;
    double lb_delta = 0.1;
    std::string lb_out;
    lower_birge->add_option("--n-alternatives", lb_n, "Number of alternatives N")->required();
    lower_birge->add_option("--delta", lb_delta, "Failure probability")->default_val(0.1);
    lower_birge->add_option("--out", lb_out, "Output JSON path (stdout when omitted)");

    // ---- sweep ----
    auto* sweep_cmd = app.add_subcommand("sweep", "Monte Carlo sweep from a JSON config");
    std::string sweep_config_path, sweep_out_dir;
    int sweep_threads = static_cast<int>(std::thread::hardware_concurrency());
    sweep_cmd->add_option("--config", sweep_config_path, "SweepConfig JSON path")->required();
    sweep_cmd->add_option("--out", sweep_out_dir, "Output directory")->required();
    sweep_cmd->add_option("--threads", sweep_threads, "Worker threads for trials")
        ->default_val(sweep_threads);

    // ---- verify ----
    auto* verify_cmd = app.add_subcommand("verify", "Empirical verification suites");
    verify_cmd->require_subcommand(1);

    auto* v_bmsb = verify_cmd->add_subcommand(
        "bmsb", "Block martingale small-ball condition at sampled anchors");
    SystemFlags vb_sys;
    add_system_flags(v_bmsb, vb_sys);
    int vb_k = 4;
    long long vb_trials = 20000;
    std::uint64_t vb_seed = 0;
    double vb_anchor_scale = 1.0;
    std::string vb_out;
    v_bmsb->add_option("--k", vb_k, "Block length")->default_val(4);
    v_bmsb->add_option("--trials", vb_trials, "Monte Carlo trials per anchor/direction")
        ->default_val(20000);
    v_bmsb->add_option("--seed", vb_seed, "Master seed")->default_val(0);
    v_bmsb->add_option("--anchor-scale", vb_anchor_scale, "Scale of the sampled anchors")
        ->default_val(1.0);
    v_bmsb->add_option("--out", vb_out, "Output JSON path (stdout when omitted)");

    auto* v_smallball = verify_cmd->add_subcommand(
        "smallball", "Small-ball tail bound for the scalar state process");
    double vs_a = 0.5, vs_sigma = 1.0, vs_nu = 0.0, vs_p = 3.0 / 20.0;
    int vs_k = 2, vs_T = 100;
    long long vs_trials = 100000;
    std::uint64_t vs_seed = 0;
    std::string vs_out;
    v_smallball->add_option("--a", vs_a, "Scalar dynamics coefficient")->default_val(0.5);
    v_smallball->add_option("--sigma", vs_sigma, "Noise standard deviation")->default_val(1.0);
    v_smallball->add_option("--k", vs_k, "Block length")->default_val(2);
    v_smallball->add_option("--nu", vs_nu,
                            "Small-ball scale (default sigma*sqrt(gamma_floor(k/2)))")
        ->default_val(0.0);
    v_smallball->add_option("--p", vs_p, "Probability level")->default_val(3.0 / 20.0);
    v_smallball->add_option("--T", vs_T, "Horizon")->default_val(100);
    v_smallball->add_option("--trials", vs_trials, "Monte Carlo trials")->default_val(100000);
    v_smallball->add_option("--seed", vs_seed, "Master seed")->default_val(0);
    v_smallball->add_option("--out", vs_out, "Output JSON path (stdout when omitted)");

    auto* v_martingale = verify_cmd->add_subcommand(
        "martingale", "Self-normalized martingale tail bound (part (a))");
    double vm_a = 0.0, vm_sigma = 1.0, vm_alpha = 0.0, vm_beta = 0.0;
    int vm_T = 50;
    long long vm_trials = 100000;
    std::uint64_t vm_seed = 0;
    std::string vm_out;
    v_martingale->add_option("--a", vm_a, "Scalar dynamics coefficient")->default_val(0.0);
    v_martingale->add_option("--sigma", vm_sigma, "Noise standard deviation")->default_val(1.0);
    v_martingale->add_option("--T", vm_T, "Horizon")->default_val(50);
    v_martingale->add_option("--alpha", vm_alpha,
                             "Sum threshold (default sqrt(2 sigma^2 beta log 10))")
        ->default_val(0.0);
    v_martingale->add_option("--beta", vm_beta, "Quadratic variation cap (default T sigma^2)")
        ->default_val(0.0);
    v_martingale->add_option("--trials", vm_trials, "Monte Carlo trials")->default_val(100000);
    v_martingale->add_option("--seed", vm_seed, "Master seed")->default_val(0);
    v_martingale->add_option("--out", vm_out, "Output JSON path (stdout when omitted)");

    auto* v_mgf =
        verify_cmd->add_subcommand("mgf", "One-step MGF closed form against Simpson quadrature");
    double vg_a = 0.3, vg_nu = 0.5, vg_mu = 0.2, vg_x = 1.0;
    std::string vg_out;
    v_mgf->add_option("--a", vg_a, "Coefficient a")->default_val(0.3);
    v_mgf->add_option("--nu", vg_nu, "Quadratic tilt nu (< 1)")->default_val(0.5);
    v_mgf->add_option("--mu", vg_mu, "Linear tilt mu")->default_val(0.2);
    v_mgf->add_option("--x", vg_x, "State x")->default_val(1.0);
    v_mgf->add_option("--out", vg_out, "Output JSON path (stdout when omitted)");

    auto* v_kl = verify_cmd->add_subcommand(
        "kl", "Trajectory divergence: Monte Carlo against the closed form");
    double vk_rho = 0.9, vk_aprime = 1.0;
    int vk_d = 1, vk_T = 10;
    long long vk_trials = 100000;
    std::uint64_t vk_seed = 0;
    std::string vk_out;
    v_kl->add_option("--rho", vk_rho, "Scale of the data-generating system")->required();
    v_kl->add_option("--d", vk_d, "Dimension")->default_val(1);
    v_kl->add_option("--a-prime", vk_aprime, "Scale of the alternative matrix")->required();
    v_kl->add_option("--T", vk_T, "Horizon")->default_val(10);
    v_kl->add_option("--trials", vk_trials, "Monte Carlo trials")->default_val(100000);
    v_kl->add_option("--seed", vk_seed, "Master seed")->default_val(0);
    v_kl->add_option("--out", vk_out, "Output JSON path (stdout when omitted)");

    auto* v_packing = verify_cmd->add_subcommand(
        "packing", "Build and exhaustively certify an orthogonal-matrix packing");
    int vp_d = 3;
    double vp_eps0 = 1.0 / 300.0;
    std::uint64_t vp_seed = 0;
    std::size_t vp_count = 0;
    std::string vp_out;
    v_packing->add_option("--d", vp_d, "Dimension (>= 2)")->default_val(3);
    v_packing->add_option("--eps0", vp_eps0, "Scale parameter (<= 1/256)")
        ->default_val(1.0 / 300.0);
    v_packing->add_option("--count", vp_count, "Member count (default 2^(d-1))")->default_val(0);
    v_packing->add_option("--seed", vp_seed, "Master seed")->default_val(0);
    v_packing->add_option("--out", vp_out, "Output JSON path (stdout when omitted)");

    // ---- regime-report ----
    auto* regime_cmd =
        app.add_subcommand("regime-report", "Empirical error quantiles against regime scales");
    std::string rr_grid = "0,0.5,0.9,1.0";
    int rr_T = 1000, rr_trials = 500;
    double rr_delta = 0.1;
    std::uint64_t rr_seed = 0;
    int rr_threads = static_cast<int>(std::thread::hardware_concurrency());
    std::string rr_out;
    regime_cmd->add_option("--a-grid", rr_grid, "Comma-separated scalar coefficients in [0, 1.5]")
        ->default_val("0,0.5,0.9,1.0");
    regime_cmd->add_option("--T", rr_T, "Horizon")->default_val(1000);
    regime_cmd->add_option("--trials", rr_trials, "Trials per grid point")->default_val(500);
    regime_cmd->add_option("--delta", rr_delta, "Quantile level")->default_val(0.1);
    regime_cmd->add_option("--seed", rr_seed, "Master seed")->default_val(0);
    regime_cmd->add_option("--threads", rr_threads, "Worker threads")->default_val(rr_threads);
    regime_cmd->add_option("--out", rr_out, "Output CSV path (stdout table always printed)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;  // usage errors are always exit 1
    }

    try {
        if (simulate_cmd->parsed())
            return run_simulate(sim_sys, sim_T, sim_seed, sim_stream, sim_x0, sim_out);

        if (estimate_cmd->parsed()) return run_estimate(est_traj, est_truth_a, est_truth_csv, est_out);

        if (gramian_cmd->parsed())
            return run_gramian(gram_sys, gram_T, gram_out, gram_select_delta, gram_c,
                               gram_cond_s);

        if (bound_main->parsed()) {
            const LinearSystem sys = build_system(bm_sys);
            print_resolved(0);
            const GramianSeries gs = gramian_series(sys, bm_T);
            const int n = bm_n > 0 ? bm_n : static_cast<int>(sys.dim());
            nlohmann::json j;
            if (const auto cert = lds_cert(sys, gs, bm_T, bm_delta)) {
                j = io::to_json(self_normalized_bound(*cert, bm_T, n, bm_sys.sigma, bm_delta));
            } else {
                BoundReport infeasible;
                infeasible.feasible = false;
                infeasible.constants_used["delta"] = bm_delta;
                j = io::to_json(infeasible);
                j["note"] = "no feasible block length at this horizon";
            }
            emit_json(j, bm_out);
            return kExitOk;
        }
        if (bound_scalar->parsed()) {
            print_resolved(0);
            emit_json(io::to_json(scalar_sample_complexity(bs_a, bs_eps, bs_delta)), bs_out);
            return kExitOk;
        }
        if (bound_input->parsed()) {
            const LinearSystem sys = build_system(bi_sys);
            print_resolved(0);
            const GramianSeries gs = gramian_series(sys, bi_T);
            emit_json(io::to_json(input_driven_bound(sys, gs, bi_k, bi_T, bi_delta, bi_C, bi_c)),
                      bi_out);
            return kExitOk;
        }
        if (bound_logdet->parsed()) {
            print_resolved(0);
            std::optional<std::vector<int>> blocks;
            if (!bl_blocks.empty()) blocks = parse_int_list(bl_blocks);
            nlohmann::json j;
            j["value"] = diag_logdet_bound(bl_cond, bl_d, bl_T, bl_k, blocks ? &*blocks : nullptr);
            j["cond_s"] = bl_cond;
            j["d"] = bl_d;
            j["T"] = bl_T;
            j["k"] = bl_k;
            emit_json(j, bl_out);
            return kExitOk;
        }

        if (lower_scalar->parsed()) {
            print_resolved(0);
            emit_json(io::to_json(scalar_lower_bound_T(ls_a, ls_eps, ls_delta)), ls_out);
            return kExitOk;
        }
        if (lower_orth->parsed()) {
            print_resolved(0);
            emit_json(io::to_json(orthogonal_lower_bound_T(lo_rho, lo_d, lo_eps, lo_delta, lo_c0)),
                      lo_out);
            return kExitOk;
        }
        if (lower_birge->parsed()) {
            print_resolved(0);
            nlohmann::json j;
            j["threshold"] = birge_threshold(lb_n, lb_delta);
            j["n_alternatives"] = lb_n;
            j["delta"] = lb_delta;
            emit_json(j, lb_out);
            return kExitOk;
        }

        if (sweep_cmd->parsed()) {
            const auto config_json = nlohmann::json::parse(io::read_file(sweep_config_path));
            const SweepConfig cfg = io::sweep_config_from_json(config_json);
            print_resolved(cfg.master_seed);
            const SweepResult result = run_sweep(cfg, std::max(1, sweep_threads));
            std::filesystem::create_directories(sweep_out_dir);
            const std::string csv_path = sweep_out_dir + "/sweep.csv";
            const std::string json_path = sweep_out_dir + "/sweep.json";
            io::write_file(csv_path, io::sweep_csv(result));
            io::write_file(json_path, io::sweep_summary_json(cfg, result).dump(2) + "\n");
            std::cout << "wrote " << csv_path << " and " << json_path << "\n";
            if (result.fitted_slope)
                std::cout << "fitted slope: " << *result.fitted_slope << " +/- "
                          << (result.slope_ci_halfwidth ? *result.slope_ci_halfwidth : 0.0) << "\n";
            return kExitOk;
        }

        if (v_bmsb->parsed()) {
            const LinearSystem sys = build_system(vb_sys);
            print_resolved(vb_seed);
            const std::size_t d = sys.dim();
            const GramianSeries gs = gramian_series(sys, std::max(1, vb_k / 2));
            BmsbSpec spec;
            spec.k = vb_k;
            spec.p = 3.0 / 20.0;
            spec.gamma_sb = gs.gamma(std::max<std::size_t>(1, vb_k / 2)) * sys.sigma2;

            RngStream sampler(vb_seed, 0xa0c0ULL);
            std::vector<std::vector<double>> anchors{std::vector<double>(d, 0.0)};
            for (int i = 0; i < 2; ++i) {
                std::vector<double> x = gaussian_vector(sampler, d, vb_anchor_scale);
                anchors.push_back(std::move(x));
            }
            std::vector<std::vector<double>> directions;
            for (int i = 0; i < 3; ++i) {
                std::vector<double> w = gaussian_vector(sampler, d, 1.0);
                const double n = norm2(w);
                if (n == 0.0) continue;
                for (double& c : w) c /= n;
                directions.push_back(std::move(w));
            }
            const TailCheckResult result =
                verify_bmsb_lds(sys, spec, anchors, directions, vb_trials, RngStream(vb_seed, 1));
            emit_json(io::to_json(result), vb_out);
            std::cout << (result.passed ? "PASSED" : "FAILED")
                      << " (worst block average = " << result.empirical_prob << ", level p = "
                      << result.theoretical_bound << ")\n";
            return result.passed ? kExitOk : kExitVerifyFailed;
        }
        if (v_smallball->parsed()) {
            print_resolved(vs_seed);
            double nu = vs_nu;
            if (nu <= 0.0)
                nu = vs_sigma * std::sqrt(scalar_gramian(vs_a, std::max(1, vs_k / 2)));
            const TailCheckResult result = smallball_tail_check(
                vs_a, vs_sigma, vs_k, nu, vs_p, vs_T, vs_trials, RngStream(vs_seed, 2));
            emit_json(io::to_json(result), vs_out);
            std::cout << (result.passed ? "PASSED" : "FAILED") << " (empirical "
                      << result.empirical_prob << " vs bound " << result.theoretical_bound
                      << ")\n";
            return result.passed ? kExitOk : kExitVerifyFailed;
        }
        if (v_martingale->parsed()) {
            print_resolved(vm_seed);
            const double beta = vm_beta > 0.0 ? vm_beta : vm_T * vm_sigma * vm_sigma;
            const double alpha = vm_alpha > 0.0
                                     ? vm_alpha
                                     : std::sqrt(2.0 * vm_sigma * vm_sigma * beta * std::log(10.0));
            const TailCheckResult result = martingale_tail_check(
                vm_a, vm_sigma, vm_T, alpha, beta, vm_trials, RngStream(vm_seed, 3));
            emit_json(io::to_json(result), vm_out);
            std::cout << (result.passed ? "PASSED" : "FAILED") << " (empirical "
                      << result.empirical_prob << " vs bound " << result.theoretical_bound
                      << ")\n";
            return result.passed ? kExitOk : kExitVerifyFailed;
        }
        if (v_mgf->parsed()) {
            print_resolved(0);
            const double closed = one_step_mgf(vg_a, vg_nu, vg_mu, vg_x);
            const double quad = mgf_quadrature(vg_a, vg_nu, vg_mu, vg_x);
            const double rel = std::abs(closed - quad) / std::abs(quad);
            nlohmann::json j;
            j["closed_form"] = closed;
            j["quadrature"] = quad;
            j["relative_error"] = rel;
            j["passed"] = rel <= 1e-6;
            emit_json(j, vg_out);
            std::cout << (rel <= 1e-6 ? "PASSED" : "FAILED") << " (relative error " << rel
                      << ")\n";
            return rel <= 1e-6 ? kExitOk : kExitVerifyFailed;
        }
        if (v_kl->parsed()) {
            print_resolved(vk_seed);
            Matrix orthogonal = Matrix::identity(vk_d);
            Matrix alt(1, 1, {vk_aprime});
            if (vk_d > 1) {
                RngStream r1(vk_seed, 0x01ULL), r2(vk_seed, 0x02ULL);
                orthogonal = random_orthogonal(r1, vk_d);
                alt = random_orthogonal(r2, vk_d) * vk_aprime;
            }
            const double closed = trajectory_kl(vk_rho, orthogonal, alt, vk_T);
            const auto [mc, se] =
                kl_monte_carlo(vk_rho, orthogonal, alt, vk_T, vk_trials, RngStream(vk_seed, 4));
            const bool passed = std::abs(mc - closed) <= 3.0 * se;
            nlohmann::json j;
            j["closed_form"] = closed;
            j["monte_carlo"] = mc;
            j["standard_error"] = se;
            j["trials"] = vk_trials;
            j["passed"] = passed;
            j["seed"] = vk_seed;
            emit_json(j, vk_out);
            std::cout << (passed ? "PASSED" : "FAILED") << " (closed " << closed << ", MC " << mc
                      << " +/- " << se << ")\n";
            return passed ? kExitOk : kExitVerifyFailed;
        }
        if (v_packing->parsed()) {
            print_resolved(vp_seed);
            try {
                const PackingSet set =
                    build_packing(vp_d, vp_eps0, RngStream(vp_seed, 5), vp_count);
                emit_json(io::to_json(set), vp_out);
                std::cout << "PASSED (" << set.members.size() << " members, min op separation "
                          << set.min_op_separation << ", max Frobenius diameter "
                          << set.max_fro_diameter << ")\n";
            } catch (const SeparationViolatedError& e) {
                std::cout << "FAILED (" << e.what() << ")\n";
                return kExitVerifyFailed;
            }
            return kExitOk;
        }

        if (regime_cmd->parsed()) {
            print_resolved(rr_seed);
            const std::vector<double> grid = parse_double_list(rr_grid);
            const std::vector<RegimeRow> rows = regime_report(grid, rr_T, rr_trials, rr_delta,
                                                              rr_seed, std::max(1, rr_threads));
            std::string csv = "a,regime,empirical_quantile,predicted_scale\n";
            for (const RegimeRow& row : rows) {
                csv += io::format_double(row.a) + ',' + row.regime + ',';
                csv += io::format_double(row.empirical_quantile) + ',';
                csv += io::format_double(row.predicted_scale) + '\n';
            }
            std::cout << csv;
            if (!rr_out.empty()) {
                io::write_file(rr_out, csv);
                std::cout << "wrote " << rr_out << "\n";
            }
            return kExitOk;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitOk;
}
