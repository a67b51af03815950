#include "doctest.h"

#include "physml/synth.hpp"

#include <cmath>

using namespace physml;

TEST_CASE("rtm_forward formula") {
    SyntheticRtm rtm;

    VectorXd r0 = rtm.forward(0.0, 0.0);
    for (int b = 1; b <= rtm.n_bands; ++b)
        CHECK(r0(b - 1) == doctest::Approx(0.30 + 0.05 * std::sin(static_cast<double>(b))));

    // strictly decreasing in chl at fixed lai, every band
    VectorXd lo = rtm.forward(10.0, 2.0);
    VectorXd hi = rtm.forward(60.0, 2.0);
    for (int b = 0; b < rtm.n_bands; ++b) CHECK(hi(b) < lo(b));

    // independent evaluation of the defining formula at (40, 2)
    VectorXd r = rtm.forward(40.0, 2.0);
    for (int b = 1; b <= 8; ++b) {
        const double expected = (0.30 + 0.05 * std::sin(static_cast<double>(b))) *
                                    std::exp(-(0.5 + 0.1 * b) * 40.0 / 100.0) +
                                (0.20 + 0.02 * b) * 2.0 / 3.0;
        CHECK(r(b - 1) == doctest::Approx(expected).epsilon(1e-14));
    }

    CHECK_THROWS_AS(rtm.forward(-1.0, 2.0), InputError);
    CHECK_THROWS_AS(rtm.forward(40.0, 11.0), InputError);
}

TEST_CASE("rtm_forward outputs bounded on a cause grid") {
    SyntheticRtm rtm;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) {
            VectorXd r = rtm.forward(80.0 * i / 99.0, 10.0 * j / 99.0);
            CHECK(r.minCoeff() > 0.0);
            CHECK(r.maxCoeff() < 1.5);
        }
}

TEST_CASE("logistic_simulate") {
    RngStream rng(11, 0);

    LogisticMapParams p;
    p.R = 4.0;
    p.Omega = 1.0;
    p.lambda_noise = 0.0;
    p.T = 2;
    p.y1 = 0.5;
    CHECK(logistic_simulate(p, rng)(1) == doctest::Approx(1.0));

    p.y1 = 0.0;
    p.T = 5;
    VectorXd z = logistic_simulate(p, rng);
    CHECK(z.cwiseAbs().maxCoeff() == 0.0);

    // determinism across runs with a fixed stream
    LogisticMapParams q;
    q.lambda_noise = 0.01;
    q.T = 50;
    RngStream r1(21, 3), r2(21, 3);
    VectorXd y1 = logistic_simulate(q, r1);
    VectorXd y2 = logistic_simulate(q, r2);
    CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);

    // noiseless subcritical map decays to 0
    LogisticMapParams dec;
    dec.R = 0.8;
    dec.Omega = 1.0;
    dec.lambda_noise = 0.0;
    dec.T = 60;
    dec.y1 = 0.9;
    VectorXd yd = logistic_simulate(dec, rng);
    for (int t = 1; t < dec.T; ++t) CHECK(yd(t) <= yd(t - 1) + 1e-15);
    CHECK(yd(dec.T - 1) < 1e-3);
}

TEST_CASE("ode_simulate") {
    // dx/dt = -x from 1: e^{-1} at t=1
    OdeSystem sys;
    sys.state_dim = 1;
    sys.max_degree = 1;
    sys.rhs = MatrixXd::Zero(2, 1);
    sys.rhs(1, 0) = -1.0;
    sys.t1 = 1.0;
    sys.dt = 1e-3;
    VectorXd x0 = VectorXd::Ones(1);
    MatrixXd traj = ode_simulate(sys, x0);
    CHECK(traj(traj.rows() - 1, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));

    // zero rhs -> constant
    sys.rhs.setZero();
    MatrixXd flat = ode_simulate(sys, x0);
    CHECK((flat.array() - 1.0).abs().maxCoeff() == 0.0);

    // step-halving oracle on the printed 2-D system
    OdeSystem mex = mexico_system(0.3, 1e-3);
    VectorXd m0(2);
    m0 << -0.1, 0.1;
    MatrixXd t1 = ode_simulate(mex, m0);
    OdeSystem mex2 = mexico_system(0.3, 5e-4);
    MatrixXd t2 = ode_simulate(mex2, m0);
    double max_dev = 0.0;
    for (Eigen::Index i = 0; i < t1.rows(); ++i)
        max_dev = std::max(max_dev, (t1.row(i) - t2.row(2 * i)).cwiseAbs().maxCoeff());
    CHECK(max_dev <= 1e-6);
}

TEST_CASE("ocean_color_models") {
    VectorXd at1 = ocean_color_models(1.0);
    CHECK(at1(0) == doctest::Approx(std::pow(10.0, 0.35)));
    CHECK(at1(2) == doctest::Approx(std::pow(10.0, 0.32)));
    CHECK(at1(3) == doctest::Approx(std::pow(10.0, 0.30)));

    // strict monotonicity over a dense grid of the working range
    VectorXd prev = ocean_color_models(0.3);
    for (int i = 1; i <= 400; ++i) {
        const double r = 0.3 + (3.0 - 0.3) * i / 400.0;
        VectorXd cur = ocean_color_models(r);
        for (int m = 0; m < 4; ++m) CHECK(cur(m) < prev(m));
        prev = cur;
    }

    // model 3 equals direct polynomial evaluation at a sampled ratio
    const double ratio = 1.7;
    const double L = std::log10(ratio);
    CHECK(ocean_color_models(ratio)(2) ==
          doctest::Approx(std::pow(10.0, 0.32 - 2.0 * L + 0.8 * L * L - 0.5 * L * L * L)));

    CHECK_THROWS_AS(ocean_color_models(0.0), InputError);
}

TEST_CASE("make_biased_lai_dataset") {
    RngStream rng(31, 0);
    BiasedLaiData d = make_biased_lai_dataset(rng, 40, 60);
    for (Eigen::Index i = 0; i < d.real.rows(); ++i) CHECK(d.real.targets(i) <= 3.0);
    for (Eigen::Index i = 0; i < d.test.rows(); ++i) CHECK(d.test.targets(i) >= 3.0);

    CHECK(lai_discrepancy(0.0) == 0.0);

    int lower = 0;
    for (int seed = 0; seed < 20; ++seed) {
        RngStream r(100 + seed, 0);
        BiasedLaiData dd = make_biased_lai_dataset(r, 40, 60);
        if (dd.real.targets.mean() < dd.sim.targets.mean()) ++lower;
    }
    CHECK(lower == 20);

    CHECK_THROWS_AS(make_biased_lai_dataset(rng, 5, 60), InputError);
}
