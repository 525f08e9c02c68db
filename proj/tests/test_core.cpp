#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "csc/core.hpp"

#include <cmath>
#include <random>

using namespace csc;

namespace {

AgentCloud random_cloud(int n, int d, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> gauss(0.0, scale);
    Eigen::MatrixXd x(n, d), v(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) {
            x(i, j) = gauss(rng);
            v(i, j) = gauss(rng);
        }
    return AgentCloud(x, v);
}

AgentCloud circle20() {
    Eigen::MatrixXd x(20, 2), v(20, 2);
    for (int i = 1; i <= 20; ++i) {
        x(i - 1, 0) = std::cos(i + std::sqrt(2.0));
        x(i - 1, 1) = std::cos(i + 2.0 * std::sqrt(2.0));
        v(i - 1, 0) = 2.0 * std::sin(i * std::sqrt(3.0) - 1.0);
        v(i - 1, 1) = 2.0 * std::sin(i * std::sqrt(3.0) - 2.0);
    }
    return AgentCloud(x, v);
}

}  // namespace

TEST_CASE("mean_consensus") {
    Eigen::MatrixXd x(2, 1), v(2, 1);
    x << 0, 0;
    v << 1, -1;
    CHECK(mean_consensus(AgentCloud(x, v))(0) == doctest::Approx(0.0));

    Eigen::MatrixXd x3 = Eigen::MatrixXd::Zero(3, 1);
    Eigen::MatrixXd v3 = Eigen::MatrixXd::Constant(3, 1, 0.7);
    CHECK(mean_consensus(AgentCloud(x3, v3))(0) == doctest::Approx(0.7));

    // Four unit axis vectors average to the origin.
    Eigen::MatrixXd x4(4, 2), v4(4, 2);
    x4 << -1, 0, 0, 1, 1, 0, 0, -1;
    v4 = x4;
    const Eigen::VectorXd mean = mean_consensus(AgentCloud(x4, v4));
    CHECK(mean.norm() == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("perp_projection") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(3, 1);
    Eigen::MatrixXd v = Eigen::MatrixXd::Constant(3, 1, 2.0);
    CHECK(perp_projection(AgentCloud(x, v)).cwiseAbs().maxCoeff() ==
          doctest::Approx(0.0));

    Eigen::MatrixXd v2(2, 1);
    v2 << 1, -1;
    const Eigen::MatrixXd p2 = perp_projection(v2);
    CHECK(p2(0, 0) == doctest::Approx(1.0));
    CHECK(p2(1, 0) == doctest::Approx(-1.0));

    Eigen::MatrixXd v3(3, 1);
    v3 << 1, 2, 3;
    const Eigen::MatrixXd p3 = perp_projection(v3);
    CHECK(p3(0, 0) == doctest::Approx(-1.0));
    CHECK(p3(1, 0) == doctest::Approx(0.0));
    CHECK(p3(2, 0) == doctest::Approx(1.0));

    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const AgentCloud c = random_cloud(2 + trial % 7, 1 + trial % 3, rng);
        CHECK(perp_projection(c).colwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("bilinear_B closed forms agree") {
    Eigen::MatrixXd u(2, 1), v(2, 1);
    u << 1, -1;
    v << 1, -1;
    CHECK(bilinear_B(u, v) == doctest::Approx(1.0));
    CHECK(bilinear_B_pairwise(u, v) == doctest::Approx(1.0));

    Eigen::MatrixXd u3(3, 1), ones(3, 1);
    u3 << 1, 2, 3;
    ones << 1, 1, 1;
    CHECK(bilinear_B(u3, ones) == doctest::Approx(0.0));

    std::mt19937 rng(23);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + trial % 8, d = 1 + trial % 3;
        Eigen::MatrixXd a(n, d), b(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                a(i, j) = gauss(rng);
                b(i, j) = gauss(rng);
            }
        const double fast = bilinear_B(a, b);
        const double pairwise = bilinear_B_pairwise(a, b);
        CHECK(fast == doctest::Approx(pairwise).epsilon(1e-12));
        CHECK(bilinear_B(a, b) == doctest::Approx(bilinear_B(b, a)).epsilon(1e-12));
        // Consensus directions are in the kernel of the second slot.
        CHECK(std::abs(bilinear_B(a, Eigen::MatrixXd::Constant(n, d, 1.3))) <= 1e-12);
    }
    CHECK_THROWS_AS(bilinear_B(Eigen::MatrixXd::Zero(2, 1), Eigen::MatrixXd::Zero(3, 1)),
                    std::invalid_argument);
}

TEST_CASE("dispersion and disagreement") {
    Eigen::MatrixXd x(2, 1), v(2, 1);
    x << 1, -1;
    v << 0.4, 0.4;
    const AgentCloud c(x, v);
    CHECK(dispersion_X(c) == doctest::Approx(1.0));
    CHECK(disagreement_V(c) == doctest::Approx(0.0));

    const AgentCloud big = circle20();
    const double V = disagreement_V(big);
    const Eigen::MatrixXd vperp = perp_projection(big);
    CHECK(V == doctest::Approx(vperp.rowwise().squaredNorm().sum() / 20.0)
                   .epsilon(1e-12));
}

TEST_CASE("laplacian kernel, PSD, symmetry") {
    const CommKernel kernel = CommKernel::cucker_smale(1.0, 1.0, 1.0);
    std::mt19937 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        const AgentCloud c = random_cloud(2 + trial % 6, 1 + trial % 3, rng, 2.0);
        const Eigen::MatrixXd L = laplacian(c, kernel);
        CHECK((L - L.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((L * Eigen::VectorXd::Ones(L.rows())).cwiseAbs().maxCoeff() <= 1e-12);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
        CHECK(es.eigenvalues().minCoeff() >= -1e-12 * std::max(1.0, L.norm()));
    }

    // Equilateral triangle: the two nonzero eigenvalues coincide.
    Eigen::MatrixXd x(3, 2), v = Eigen::MatrixXd::Zero(3, 2);
    x << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        laplacian(AgentCloud(x, v), kernel));
    CHECK(es.eigenvalues()(0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(es.eigenvalues()(1) == doctest::Approx(es.eigenvalues()(2)).epsilon(1e-10));
    CHECK(es.eigenvalues()(1) > 1e-3);
}

TEST_CASE("gamma_threshold closed form and quadrature") {
    const CommKernel k1 = CommKernel::cucker_smale(1.0, 1.0, 1.0);
    CHECK(gamma_threshold(0.0, k1, 20) ==
          doctest::Approx(M_PI / (2.0 * std::sqrt(40.0))).epsilon(1e-12));
    CHECK(gamma_threshold(1e8, k1, 20) <= 1e-3);

    const CommKernel k2 = CommKernel::cucker_smale(2.0, 1.0, 1.0);
    for (double X : {0.0, 0.1, 1.0, 10.0, 100.0}) {
        const double closed = gamma_threshold(X, k2, 4);
        const double quad = gamma_threshold_quadrature(X, k2, 4);
        CHECK(closed == doctest::Approx(quad).epsilon(1e-8));
    }

    // beta = 3/2 tail has its own closed form:
    // int_L^inf K (s^2+u^2)^{-3/2} du = (K/s^2)(1 - L/sqrt(s^2+L^2)).
    const double K = 1.7, s = 1.3;
    const CommKernel k3 = CommKernel::cucker_smale(K, s, 1.5);
    for (double X : {0.0, 0.5, 4.0}) {
        const int N = 5;
        const double L = std::sqrt(2.0 * N * X);
        const double exact =
            K / (s * s) * (1.0 - L / std::sqrt(s * s + L * L)) / std::sqrt(2.0 * N);
        CHECK(gamma_threshold(X, k3, N) == doctest::Approx(exact).epsilon(1e-8));
    }

    // Monotone decrease and positivity.
    double prev = gamma_threshold(0.0, k1, 4);
    for (double X : {0.01, 0.1, 1.0, 10.0}) {
        const double g = gamma_threshold(X, k1, 4);
        CHECK(g > 0.0);
        CHECK(g < prev);
        prev = g;
    }

    CHECK_THROWS_AS(gamma_threshold(1.0, CommKernel::cucker_smale(1.0, 1.0, 0.4), 4),
                    std::domain_error);
}

TEST_CASE("mutual distance bound") {
    std::mt19937 rng(47);
    for (int trial = 0; trial < 20; ++trial) {
        const AgentCloud c = random_cloud(3 + trial % 6, 2, rng, 3.0);
        const double bound = std::sqrt(2.0 * c.agents() * dispersion_X(c));
        for (int i = 0; i < c.agents(); ++i)
            for (int j = 0; j < c.agents(); ++j)
                CHECK((c.x.row(i) - c.x.row(j)).norm() <= bound + 1e-12);
    }
}

TEST_CASE("general kernel wrapper") {
    const CommKernel k = CommKernel::from_function(
        [](double r) { return std::exp(-r); }, /*integrable=*/true,
        [](double r) { return -std::exp(-r); });
    CHECK(k.rate(0.0) == doctest::Approx(1.0));
    CHECK(k.looks_nonincreasing());
    // gamma(X) = int_sqrtX^inf e^{-sqrt(2N) r} dr = e^{-sqrt(2N X)} / sqrt(2N)
    const int N = 3;
    const double g = gamma_threshold(1.0, k, N);
    CHECK(g == doctest::Approx(std::exp(-std::sqrt(2.0 * N)) / std::sqrt(2.0 * N))
                   .epsilon(1e-8));

    const CommKernel bad = CommKernel::from_function(
        [](double r) { return r; }, /*integrable=*/false);
    CHECK_FALSE(bad.looks_nonincreasing());
}

TEST_CASE("compute_diagnostics") {
    const CommKernel kernel = CommKernel::cucker_smale(1.0, 1.0, 1.0);
    std::mt19937 rng(53);
    const AgentCloud c = random_cloud(5, 2, rng);
    const Diagnostics diag = compute_diagnostics(c, kernel);
    CHECK(diag.X == doctest::Approx(dispersion_X(c)));
    CHECK(diag.V == doctest::Approx(disagreement_V(c)));
    CHECK(diag.gamma_of_X ==
          doctest::Approx(gamma_threshold(diag.X, kernel, c.agents())));
    CHECK(diag.max_perp_norm ==
          doctest::Approx(perp_projection(c).rowwise().norm().maxCoeff()));

    // Non-integrable kernels report an infinite threshold instead of failing.
    const CommKernel fat = CommKernel::cucker_smale(1.0, 1.0, 0.3);
    CHECK(std::isinf(compute_diagnostics(c, fat).gamma_of_X));
}
