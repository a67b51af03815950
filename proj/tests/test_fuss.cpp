#include "doctest.h"

#include "physml/fuss.hpp"

#include <cmath>

using namespace physml;

namespace {

LogTarget gaussian_target(double mu, double sigma) {
    LogTarget lt;
    lt.f = [=](double x) {
        const double z = (x - mu) / sigma;
        return -0.5 * z * z;
    };
    return lt;
}

double trapezoid_mass(const GridProposal& p) {
    double m = 0.0;
    for (Eigen::Index i = 0; i + 1 < p.nodes.size(); ++i)
        m += 0.5 * (p.density(i) + p.density(i + 1)) * (p.nodes(i + 1) - p.nodes(i));
    return m;
}

}  // namespace

TEST_CASE("grid proposal mass and inverse-CDF round trip") {
    GridProposal p = fuss_build(gaussian_target(0.7, 0.8), -5.0, 5.0, 512);

    // unit trapezoid mass and consistent per-node cumulative masses
    CHECK(std::abs(trapezoid_mass(p) - 1.0) <= 1e-10);
    CHECK(p.segment_cdf(0) == 0.0);
    CHECK(p.segment_cdf(p.segment_cdf.size() - 1) == 1.0);
    for (Eigen::Index i = 0; i < p.nodes.size(); ++i)
        CHECK(std::abs(p.cdf(p.nodes(i)) - p.segment_cdf(i)) <= 1e-12);

    // cdf(inverse_cdf(u)) = u across the unit interval
    for (int k = 0; k <= 2000; ++k) {
        const double u = k / 2000.0;
        const double x = p.inverse_cdf(u);
        CHECK(x >= p.nodes(0));
        CHECK(x <= p.nodes(p.nodes.size() - 1));
        CHECK(std::abs(p.cdf(x) - u) <= 1e-10);
    }

    // inverse_cdf(cdf(x)) = x wherever the density is positive
    RngStream rng(121, 0);
    for (int k = 0; k < 500; ++k) {
        const double x = rng.uniform(-3.0, 3.0);
        if (p.pdf(x) < 1e-8) continue;
        CHECK(std::abs(p.inverse_cdf(p.cdf(x)) - x) <= 1e-8);
    }

    // cdf is nondecreasing and pdf vanishes outside the support
    double prev = -1.0;
    for (int k = 0; k <= 1000; ++k) {
        const double c = p.cdf(-5.0 + 10.0 * k / 1000.0);
        CHECK(c >= prev);
        prev = c;
    }
    CHECK(p.pdf(-5.1) == 0.0);
    CHECK(p.pdf(5.1) == 0.0);
}

TEST_CASE("piecewise-linear target is sampled almost exactly") {
    // triangle density on [0, 2] peaking at 1: the proposal interpolates the
    // target exactly, so nearly every Metropolis correction accepts
    LogTarget tri;
    tri.f = [](double x) {
        const double d = x <= 1.0 ? x : 2.0 - x;
        return d > 0.0 ? std::log(d) : -std::numeric_limits<double>::infinity();
    };
    GridProposal p = fuss_build(tri, 0.0, 2.0, 1025);

    RngStream rng(122, 0);
    const int N = 4000;
    VectorXd xs(N);
    double cur = 0.5;
    int accepted = 0;
    for (int i = 0; i < N; ++i) {
        FussDraw d = fuss_sample(p, tri, cur, rng);
        cur = d.next;
        xs(i) = cur;
        if (d.accepted) ++accepted;
    }
    CHECK(accepted >= static_cast<int>(0.98 * N));

    // Kolmogorov-Smirnov distance against the triangle CDF
    std::sort(xs.data(), xs.data() + N);
    double ks = 0.0;
    for (int i = 0; i < N; ++i) {
        const double x = xs(i);
        const double F = x <= 1.0 ? 0.5 * x * x : 1.0 - 0.5 * (2.0 - x) * (2.0 - x);
        ks = std::max(ks, std::abs(F - (i + 1.0) / N));
        ks = std::max(ks, std::abs(F - i / static_cast<double>(N)));
    }
    CHECK(ks < 0.04);
}

TEST_CASE("bimodal target: both modes are visited with correct moments") {
    LogTarget bimodal;
    bimodal.f = [](double x) {
        const double a = (x + 2.0) / 0.3;
        const double b = (x - 2.0) / 0.3;
        return std::log(std::exp(-0.5 * a * a) + std::exp(-0.5 * b * b) + 1e-300);
    };
    GridProposal p = fuss_build(bimodal, -6.0, 6.0, 1024);

    RngStream rng(123, 0);
    const int N = 6000;
    double cur = -2.0, sum = 0.0, sum2 = 0.0;
    int left = 0;
    for (int i = 0; i < N; ++i) {
        cur = fuss_sample(p, bimodal, cur, rng).next;
        sum += cur;
        sum2 += cur * cur;
        if (cur < 0.0) ++left;
    }
    const double mean = sum / N;
    const double sd = std::sqrt(sum2 / N - mean * mean);
    CHECK(std::abs(mean) < 0.15);
    CHECK(sd == doctest::Approx(std::sqrt(4.0 + 0.09)).epsilon(0.05));
    CHECK(left > static_cast<int>(0.35 * N));
    CHECK(left < static_cast<int>(0.65 * N));
}

TEST_CASE("pruning keeps the proposal concentrated yet normalized") {
    GridProposal p = fuss_build(gaussian_target(5.0, 0.01), 0.0, 10.0, 2048, 15.0);
    CHECK(std::abs(trapezoid_mass(p) - 1.0) <= 1e-10);
    // nearly all mass within a few sigma of the spike
    CHECK(p.cdf(5.1) - p.cdf(4.9) > 0.999);
    RngStream rng(124, 0);
    for (int i = 0; i < 200; ++i) {
        const double x = p.inverse_cdf(rng.uniform());
        CHECK(x > 4.5);
        CHECK(x < 5.5);
    }
}

TEST_CASE("builder and sampler determinism plus input validation") {
    LogTarget g = gaussian_target(0.0, 1.0);
    RngStream a(125, 7), b(125, 7);
    GridProposal p = fuss_build(g, -4.0, 4.0);
    double ca = 0.3, cb = 0.3;
    for (int i = 0; i < 200; ++i) {
        ca = fuss_sample(p, g, ca, a).next;
        cb = fuss_sample(p, g, cb, b).next;
        CHECK(ca == cb);
    }

    CHECK_THROWS_AS(fuss_build(g, -4.0, 4.0, 4), InputError);
    CHECK_THROWS_AS(fuss_build(g, -4.0, 4.0, 512, 0.0), InputError);
    CHECK_THROWS_AS(fuss_build(g, 4.0, 4.0), InputError);

    LogTarget dead;
    dead.f = [](double) { return -std::numeric_limits<double>::infinity(); };
    CHECK_THROWS_AS(fuss_build(dead, 0.0, 1.0), FitError);
}

TEST_CASE("within-Gibbs sampling recovers a separable Gaussian") {
    // independent coordinates: conditionals ignore the other coordinate
    std::vector<std::function<LogTarget(const VectorXd&)>> conds = {
        [](const VectorXd&) { return gaussian_target(1.0, 0.5); },
        [](const VectorXd&) { return gaussian_target(-1.0, 0.8); },
    };
    MatrixXd supports(2, 2);
    supports << -5.0, 5.0, -5.0, 5.0;

    RngStream rng(126, 0);
    GibbsChain chain = gibbs_run(conds, supports, 4000, 500, GibbsMethod::Fuss, rng);
    REQUIRE(chain.states.rows() == 3500);
    CHECK(chain.acceptance(0) > 0.9);
    CHECK(chain.acceptance(1) > 0.9);
    CHECK(std::abs(chain.states.col(0).mean() - 1.0) < 0.05);
    CHECK(std::abs(chain.states.col(1).mean() + 1.0) < 0.05);
    const double sd0 = std::sqrt(
        (chain.states.col(0).array() - chain.states.col(0).mean()).square().mean());
    CHECK(sd0 == doctest::Approx(0.5).epsilon(0.1));

    RngStream rng2(126, 1);
    GibbsChain mh = gibbs_run(conds, supports, 6000, 1000, GibbsMethod::PlainMh, rng2);
    CHECK(std::abs(mh.states.col(0).mean() - 1.0) < 0.15);
    CHECK(std::abs(mh.states.col(1).mean() + 1.0) < 0.15);

    MatrixXd bad(1, 2);
    bad << 0.0, 1.0;
    CHECK_THROWS_AS(gibbs_run(conds, bad, 100, 10, GibbsMethod::Fuss, rng2), InputError);
    CHECK_THROWS_AS(gibbs_run(conds, supports, 100, 100, GibbsMethod::Fuss, rng2),
                    InputError);
}

TEST_CASE("logistic map log likelihood") {
    // noise-free trajectory gives exactly zero log likelihood
    const double R = 3.7, Omega = 1.0;
    VectorXd y(30);
    y(0) = 0.4;
    for (int t = 0; t + 1 < 30; ++t) y(t + 1) = R * y(t) * (1.0 - y(t) / Omega);
    CHECK(logistic_log_likelihood(y, R, Omega, 0.01) == 0.0);

    // perturbing one observation strictly lowers it
    VectorXd yp = y;
    yp(10) *= 1.05;
    const double ll1 = logistic_log_likelihood(yp, R, Omega, 0.01);
    CHECK(ll1 < 0.0);

    // quadratic scaling in 1/lambda
    const double ll2 = logistic_log_likelihood(yp, R, Omega, 0.02);
    CHECK(ll1 == doctest::Approx(4.0 * ll2).epsilon(1e-12));

    // invalid parameter or state regions are impossible
    CHECK(logistic_log_likelihood(y, -1.0, Omega, 0.01) ==
          -std::numeric_limits<double>::infinity());
    CHECK(logistic_log_likelihood(y, R, 0.3, 0.01) ==
          -std::numeric_limits<double>::infinity());   // y exceeds Omega
}

TEST_CASE("logistic conditional slice is a normalized density peaked near truth") {
    LogisticMapParams truth;
    RngStream rng(127, 0);
    VectorXd y = logistic_simulate(truth, rng);

    ConditionalSlice s = logistic_conditional_slice(y, truth.R, truth.lambda_noise);
    REQUIRE(s.x.size() == 512);
    CHECK(s.x(0) == 1e-6);
    CHECK(s.x(511) == 10.0);
    double Z = 0.0;
    for (int i = 0; i + 1 < 512; ++i)
        Z += 0.5 * (s.conditional(i) + s.conditional(i + 1)) * (s.x(i + 1) - s.x(i));
    CHECK(Z == doctest::Approx(1.0).epsilon(1e-8));
    int argmax = 0;
    s.conditional.maxCoeff(&argmax);
    CHECK(std::abs(s.x(argmax) - truth.Omega) < 0.05);
}

TEST_CASE("logistic posterior experiment: FUSS chains land on the truth") {
    LogisticMapParams truth;
    RngStream rng(128, 0);
    std::vector<LogisticTrialRow> rows =
        logistic_posterior_experiment(truth, 80, 2, rng, 1200, 300);
    REQUIRE(rows.size() == 4);
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].method == (i % 2 == 0 ? "FUSS" : "PlainMH"));
        CHECK(rows[i].trial == static_cast<int>(i / 2));
        CHECK(rows[i].sq_err_R ==
              doctest::Approx(std::pow(rows[i].R_hat - truth.R, 2)));
        CHECK(rows[i].sq_err_Omega ==
              doctest::Approx(std::pow(rows[i].Omega_hat - truth.Omega, 2)));
    }
    for (const LogisticTrialRow& r : rows)
        if (r.method == "FUSS") {
            CHECK(r.sq_err_R < 0.05);
            CHECK(r.sq_err_Omega < 0.05);
        }

    LogisticMapParams bad;
    bad.R = 50.0;
    CHECK_THROWS_AS(logistic_posterior_experiment(bad, 80, 1, rng), InputError);
}
