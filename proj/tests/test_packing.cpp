#include <cmath>

#include "doctest.h"
#include "lsid/experiments.hpp"
#include "lsid/packing.hpp"
#include "oracles.hpp"

using namespace lsid;

TEST_CASE("ball_packing: interval case reaches the target with certified gaps") {
    const BallPacking packing = ball_packing(1, 2, RngStream(3, 0));
    REQUIRE(packing.points.size() == 2);
    CHECK(packing.min_separation >= 0.5);
    for (const auto& p : packing.points) CHECK(std::abs(p[0]) <= 1.0);
}

TEST_CASE("ball_packing: 8 points in the 3-ball, exhaustive re-verification") {
    const BallPacking packing = ball_packing(3, 8, RngStream(4, 0));
    REQUIRE(packing.points.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) {
        REQUIRE(norm2(packing.points[i]) <= 1.0 + 1e-12);
        for (std::size_t j = i + 1; j < 8; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < 3; ++c) {
                const double diff = packing.points[i][c] - packing.points[j][c];
                acc += diff * diff;
            }
            REQUIRE(std::sqrt(acc) >= 0.5);
        }
    }
}

TEST_CASE("skew_lift: norms and linearity") {
    CHECK(skew_lift(std::vector<double>{0.0, 0.0}, 0.003).frobenius_norm() == 0.0);

    const Matrix m = skew_lift(std::vector<double>{1.0, 0.0}, 0.003);
    CHECK(operator_norm(m) == doctest::Approx(0.003).epsilon(1e-10));
    CHECK(m.frobenius_norm() == doctest::Approx(0.003 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK((m + m.transpose()).max_abs() == 0.0);  // exactly skew

    RngStream rng(5, 0);
    const std::vector<double> w1 = gaussian_vector(rng, 4, 0.5);
    const std::vector<double> w2 = gaussian_vector(rng, 4, 0.5);
    std::vector<double> diff(4);
    for (int i = 0; i < 4; ++i) diff[i] = w1[i] - w2[i];
    const Matrix lhs = skew_lift(w1, 0.002) - skew_lift(w2, 0.002);
    CHECK((lhs - skew_lift(diff, 0.002)).max_abs() <= 1e-18);
}

TEST_CASE("build_packing: certified sets for d in {2, 3, 4}") {
    for (int d : {2, 3, 4}) {
        const PackingSet set = build_packing(d, 1.0 / 300.0, RngStream(6, d));
        REQUIRE(set.members.size() >= (std::size_t{1} << (d - 1)));
        CHECK(set.min_op_separation >= set.epsilon0 / 4.0 - 1e-10);
        CHECK(set.max_fro_diameter <= 4.0 * set.epsilon0 + 1e-10);
        const Matrix eye = Matrix::identity(d);
        for (const Matrix& q : set.members)
            REQUIRE((q.transpose() * q - eye).frobenius_norm() <= 1e-10);
    }
}

TEST_CASE("build_packing: rejects oversized epsilon0") {
    CHECK_THROWS_AS(build_packing(3, 1.0 / 100.0, RngStream(0, 0)), Epsilon0TooLargeError);
}

TEST_CASE("exp-map remainder: both inequalities on 500 random skew pairs") {
    RngStream rng(7, 0);
    int checked = 0;
    while (checked < 500) {
        const std::size_t d = 2 + rng.next_u64() % 4;
        const Matrix x = oracles::random_skew_with_norm_below(rng, d, 0.3);
        const Matrix y = oracles::random_skew_with_norm_below(rng, d, 0.3);
        const double k = std::max(operator_norm(x), operator_norm(y));
        const Matrix remainder = matrix_exp(x + y) - matrix_exp(x) - y;
        const double lhs = operator_norm(remainder);
        REQUIRE(lhs <= std::exp(2.0 * k) - 1.0 - 2.0 * k + 1e-14);
        REQUIRE(2.0 * k <= std::log(2.0));  // the quadratic envelope applies
        REQUIRE(lhs <= 4.0 * k * k + 1e-14);
        ++checked;
    }
}

TEST_CASE("trajectory_kl: identical laws and scalar plug-ins") {
    RngStream rng(8, 0);
    const Matrix orth = random_orthogonal(rng, 3);
    CHECK(trajectory_kl(0.9, orth, orth * 0.9, 10) == doctest::Approx(0.0).epsilon(1e-18));

    const Matrix one = Matrix::identity(1);
    CHECK(trajectory_kl(0.0, one, Matrix(1, 1, {0.2}), 2) == doctest::Approx(0.08).epsilon(1e-14));
    CHECK(trajectory_kl(1.0, one, Matrix(1, 1, {1.1}), 2) == doctest::Approx(0.03).epsilon(1e-12));

    CHECK_THROWS_AS(trajectory_kl(0.5, Matrix(2, 2, {1.0, 0.5, 0.0, 1.0}), Matrix::identity(2), 3),
                    NotOrthogonalError);
}

TEST_CASE("kl_monte_carlo: agrees with the closed form") {
    const Matrix one = Matrix::identity(1);

    {
        const auto [mc, se] = kl_monte_carlo(0.9, one, one * 0.9, 5, 20000, RngStream(9, 0));
        CHECK(std::abs(mc) <= 3.0 * se);
    }
    {
        const auto [mc, se] =
            kl_monte_carlo(0.0, one, Matrix(1, 1, {0.2}), 2, 100000, RngStream(10, 0));
        CHECK(std::abs(mc - 0.08) <= 3.0 * se);
    }
    {
        RngStream rng(11, 0);
        const Matrix orth = random_orthogonal(rng, 3);
        Matrix alt = orth * 0.9;
        alt(0, 1) += 0.05;
        alt(2, 0) -= 0.03;
        const double closed = trajectory_kl(0.9, orth, alt, 10);
        const auto [mc, se] = kl_monte_carlo(0.9, orth, alt, 10, 50000, RngStream(12, 0));
        CHECK(std::abs(mc - closed) <= 3.0 * se);
    }
}

TEST_CASE("end-to-end: packing diameter composed with the divergence formula") {
    const double eps0 = 1.0 / 300.0;
    const double rho = 0.9;
    const int horizon = 20;
    double gram_sum = 0.0;
    for (int t = 1; t <= horizon; ++t) gram_sum += scalar_gramian(rho, t);
    for (int d : {2, 3, 4}) {
        const PackingSet set = build_packing(d, eps0, RngStream(13, d));
        const double envelope = (4.0 * rho * eps0) * (4.0 * rho * eps0) * gram_sum;
        for (std::size_t i = 0; i < set.members.size(); ++i)
            for (std::size_t j = 0; j < set.members.size(); ++j) {
                if (i == j) continue;
                const double kl =
                    trajectory_kl(rho, set.members[i], set.members[j] * rho, horizon);
                REQUIRE(kl <= envelope);
            }
    }
}

TEST_CASE("birge_threshold: limits and plug-ins") {
    CHECK(birge_threshold(1, 0.499999) <= 1e-10);
    CHECK(birge_threshold(2, 0.1) == doctest::Approx(0.8 * std::log(10.0)).epsilon(1e-14));
    CHECK(birge_threshold(511, 0.05) == doctest::Approx(0.9 * std::log(5110.0)).epsilon(1e-14));
}
