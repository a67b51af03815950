#include "doctest.h"

#include "physml/distmatch.hpp"

#include <algorithm>
#include <cmath>

using namespace physml;

namespace {

KernelConfig rbf1(double ls = 1.0, double sv = 1.0) {
    KernelConfig k;
    k.lengthscales = VectorXd::Constant(1, ls);
    k.signal_variance = sv;
    return k;
}

Dataset sine_data(RngStream& rng, int n, double lo, double hi, double noise) {
    Dataset d;
    d.inputs = MatrixXd(n, 1);
    d.targets = VectorXd(n);
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(lo, hi);
        d.inputs(i, 0) = x;
        d.targets(i) = std::sin(x) + noise * rng.normal();
    }
    d.provenance.assign(static_cast<size_t>(n), Provenance::Real);
    return d;
}

}  // namespace

TEST_CASE("mmd estimator") {
    KernelConfig k = rbf1();
    VectorXd a(3);
    a << 0.3, -1.2, 2.0;
    CHECK(mmd(a, a, k).value <= 1e-12);

    VectorXd z1 = VectorXd::Zero(1);
    CHECK(mmd(z1, z1, k).value == doctest::Approx(0.0));

    // brute-force entry sum for a={0,1}, b={2}
    VectorXd s1(2), s2(1);
    s1 << 0.0, 1.0;
    s2 << 2.0;
    auto kv = [](double x, double y) { return std::exp(-0.5 * (x - y) * (x - y)); };
    const double kaa = (kv(0, 0) + kv(0, 1) + kv(1, 0) + kv(1, 1)) / 4.0;
    const double kab = (kv(0, 2) + kv(1, 2)) / 2.0;
    const double kbb = kv(2, 2);
    MmdEstimate e = mmd(s1, s2, k);
    CHECK(e.value == doctest::Approx(kaa - 2.0 * kab + kbb).epsilon(1e-12));
    CHECK(e.n_a == 2);
    CHECK(e.n_b == 1);

    // symmetry and permutation invariance
    CHECK(mmd(s2, s1, k).value == doctest::Approx(e.value));
    VectorXd s1p(2);
    s1p << 1.0, 0.0;
    CHECK(mmd(s1p, s2, k).value == doctest::Approx(e.value));

    VectorXd empty(0);
    CHECK_THROWS_AS(mmd(empty, s1, k), InputError);
}

TEST_CASE("nu=0 closed form matches a dense oracle") {
    RngStream rng(61, 0);
    Dataset real = sine_data(rng, 20, 0.0, 6.0, 0.05);
    Dataset sim = sine_data(rng, 15, 0.0, 6.0, 0.0);
    sim.provenance.assign(sim.provenance.size(), Provenance::Simulated);
    KernelConfig kin = rbf1(1.2);
    KernelConfig kout = rbf1(0.8);
    const double mu = 1.0, lambda = 0.4, ridge = 1e-3;

    MmdKrrModel m = mmdkrr_fit(real, sim, sim.targets, mu, lambda, 0.0, kin, kout,
                               50, ridge);

    // oracle: normal equations over the pooled inputs
    MatrixXd Xall(35, 1);
    Xall << real.inputs, sim.inputs;
    MatrixXd Kr = gram(kin, real.inputs, Xall);
    MatrixXd Ks = gram(kin, sim.inputs, Xall);
    MatrixXd A = mu * Kr.transpose() * Kr + lambda * Ks.transpose() * Ks +
                 ridge * MatrixXd::Identity(35, 35);
    VectorXd b = mu * Kr.transpose() * real.targets +
                 lambda * Ks.transpose() * sim.targets;
    Eigen::LDLT<MatrixXd> ldlt(A);
    VectorXd alpha = ldlt.solve(b);
    for (int it = 0; it < 3; ++it) alpha += ldlt.solve(b - A * alpha);
    CHECK((m.alpha - alpha).cwiseAbs().maxCoeff() < 1e-8);

    // predict path agrees with the oracle
    MatrixXd Xq(4, 1);
    Xq << 0.5, 2.0, 3.5, 5.0;
    VectorXd pred = m.predict(Xq);
    VectorXd oracle_pred = gram(kin, Xq, Xall) * alpha;
    CHECK((pred - oracle_pred).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("real-only ridge interpolates with tiny jitter") {
    RngStream rng(62, 0);
    Dataset real = sine_data(rng, 12, 0.0, 6.0, 0.0);
    Dataset sim;
    sim.inputs = MatrixXd(0, 1);
    sim.targets = VectorXd(0);
    KernelConfig kin = rbf1(1.0);
    MmdKrrModel m = mmdkrr_fit(real, sim, real.targets, 1.0, 0.0, 0.0, kin,
                               rbf1(), 50, 1e-10);
    VectorXd pred = m.predict(real.inputs);
    CHECK((pred - real.targets).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("descent property and MMD penalty effect") {
    RngStream rng(63, 0);
    // real coverage only on [0, 3]; reference targets drawn over the full range
    Dataset real = sine_data(rng, 30, 0.0, 3.0, 0.05);
    Dataset sim = sine_data(rng, 30, 0.0, 6.0, 0.0);
    sim.provenance.assign(sim.provenance.size(), Provenance::Simulated);
    VectorXd ref = sim.targets;
    KernelConfig kin = rbf1(1.0);
    KernelConfig kout = output_kernel(ref);

    MmdKrrModel plain = mmdkrr_fit(real, sim, ref, 1.0, 0.0, 0.0, kin, kout, 100);
    MmdKrrModel penal = mmdkrr_fit(real, sim, ref, 1.0, 0.0, 50.0, kin, kout, 400);

    // loss at the returned weights never exceeds the nu=0 initializer's loss
    MmdKrrModel init = penal;
    init.alpha = plain.alpha;
    CHECK(mmdkrr_loss(penal, real, sim, ref) <=
          mmdkrr_loss(init, real, sim, ref) + 1e-12);

    // prediction distribution sits closer to the reference with the penalty on
    RngStream qr(64, 0);
    MatrixXd Xq(200, 1);
    for (int i = 0; i < 200; ++i) Xq(i, 0) = qr.uniform(0.0, 6.0);
    const double d_plain = mmd(plain.predict(Xq), ref, kout).value;
    const double d_penal = mmd(penal.predict(Xq), ref, kout).value;
    CHECK(d_penal < d_plain);
}

TEST_CASE("fit input validation") {
    RngStream rng(65, 0);
    Dataset real = sine_data(rng, 10, 0.0, 6.0, 0.05);
    Dataset sim;
    sim.inputs = MatrixXd(0, 1);
    sim.targets = VectorXd(0);
    CHECK_THROWS_AS(mmdkrr_fit(real, sim, real.targets, -1.0, 0.0, 0.0, rbf1(),
                               rbf1(), 50),
                    InputError);
    CHECK_THROWS_AS(mmdkrr_fit(real, sim, real.targets, 1.0, 0.0, 0.0, rbf1(),
                               rbf1(), 0),
                    InputError);
}

TEST_CASE("grid search basics") {
    RngStream rng(66, 0);
    Dataset real = sine_data(rng, 25, 0.0, 6.0, 0.05);
    Dataset sim = sine_data(rng, 20, 0.0, 6.0, 0.0);
    sim.provenance.assign(sim.provenance.size(), Provenance::Simulated);
    KernelConfig kin = rbf1(1.0);
    KernelConfig kout = output_kernel(sim.targets);

    std::vector<GridPoint> single = {{1.0, 0.3, 0.0}};
    GridPoint g = mmdkrr_grid_search(real, sim, sim.targets, single, kin, kout);
    CHECK(g.mu == 1.0);
    CHECK(g.lambda == 0.3);
    CHECK(g.nu == 0.0);

    std::vector<GridPoint> none;
    CHECK_THROWS_AS(mmdkrr_grid_search(real, sim, sim.targets, none, kin, kout),
                    InputError);
}

TEST_CASE("grid search rejects noise simulations") {
    std::vector<GridPoint> grid;
    for (double lam : {0.0, 0.5, 2.0}) grid.push_back({1.0, lam, 0.0});
    int picked_min = 0;
    for (int seed = 0; seed < 20; ++seed) {
        RngStream rng(700 + seed, 0);
        Dataset real = sine_data(rng, 30, 0.0, 6.0, 0.05);
        Dataset junk = sine_data(rng, 25, 0.0, 6.0, 0.0);
        junk.provenance.assign(junk.provenance.size(), Provenance::Simulated);
        for (Eigen::Index i = 0; i < junk.targets.size(); ++i)
            junk.targets(i) = 3.0 * rng.normal();
        KernelConfig kin = rbf1(1.0);
        GridPoint g = mmdkrr_grid_search(real, junk, junk.targets, grid, kin,
                                         output_kernel(junk.targets));
        if (g.lambda == 0.0) ++picked_min;
    }
    CHECK(picked_min >= 16);
}
