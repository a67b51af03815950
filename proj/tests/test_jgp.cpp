#include "doctest.h"

#include "physml/jgp.hpp"
#include "physml/synth.hpp"

#include <cmath>

using namespace physml;

namespace {

Dataset make_1d(RngStream& rng, int n, double noise_sd,
                Provenance prov = Provenance::Real) {
    Dataset d;
    d.inputs = MatrixXd(n, 1);
    d.targets = VectorXd(n);
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(0.0, 6.0);
        d.inputs(i, 0) = x;
        d.targets(i) = std::sin(x) + noise_sd * rng.normal();
    }
    d.provenance.assign(static_cast<size_t>(n), prov);
    return d;
}

Dataset empty_like(int dim) {
    Dataset d;
    d.inputs = MatrixXd(0, dim);
    d.targets = VectorXd(0);
    return d;
}

}  // namespace

TEST_CASE("jgp_fit with empty sim reduces to a plain GP") {
    RngStream rng(41, 0);
    Dataset real = make_1d(rng, 25, 0.05);
    JgpModel m = jgp_fit(real, empty_like(1), 800, 3);

    // plain-GP oracle with the same fitted hyperparameters
    MatrixXd K = gram(m.kernel, real.inputs);
    K.diagonal().array() += default_jitter(K) + m.noise_real;
    VectorXd alpha = chol_solve(K, MatrixXd(real.targets)).col(0);
    MatrixXd Xq(5, 1);
    Xq << 0.3, 1.1, 2.9, 4.2, 5.8;
    GpPrediction p = jgp_predict(m, Xq);
    VectorXd oracle = gram(m.kernel, Xq, real.inputs) * alpha;
    CHECK((p.mean - oracle).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(p.variance.minCoeff() > 0.0);
}

TEST_CASE("dual weights solve the pooled system") {
    RngStream rng(42, 0);
    Dataset real = make_1d(rng, 15, 0.05);
    Dataset sim = make_1d(rng, 15, 0.0, Provenance::Simulated);
    JgpModel m = jgp_fit(real, sim, 600, 1);
    MatrixXd K = gram(m.kernel, m.train.inputs);
    K.diagonal().array() += default_jitter(K);
    K.diagonal() += m.noise_diagonal();
    const double res =
        (K * m.dual_weights - m.train.targets).cwiseAbs().maxCoeff();
    CHECK(res <= 1e-8 * std::max(1.0, m.train.targets.cwiseAbs().maxCoeff()));
}

TEST_CASE("fidelity weight responds to simulation quality") {
    int high = 0, low = 0;
    for (int seed = 0; seed < 20; ++seed) {
        RngStream rng(900 + seed, 0);
        Dataset real = make_1d(rng, 20, 0.05);

        Dataset copy = real;
        copy.provenance.assign(copy.provenance.size(), Provenance::Simulated);
        JgpModel good = jgp_fit(real, copy, 1200, static_cast<std::uint64_t>(seed));
        if (good.fidelity_w >= 0.5) ++high;

        Dataset junk = copy;
        for (Eigen::Index i = 0; i < junk.targets.size(); ++i)
            junk.targets(i) = rng.normal();
        JgpModel bad = jgp_fit(real, junk, 1200, static_cast<std::uint64_t>(seed));
        if (bad.fidelity_w <= 0.05) ++low;
    }
    CHECK(high >= 18);
    CHECK(low >= 18);
}

TEST_CASE("jgp_predict behavior") {
    RngStream rng(44, 0);
    Dataset real = make_1d(rng, 20, 0.02);
    Dataset sim = make_1d(rng, 20, 0.02, Provenance::Simulated);
    JgpModel m = jgp_fit(real, sim, 800, 5);

    // interpolation near a real training point
    MatrixXd x0 = real.inputs.topRows(1);
    GpPrediction p0 = jgp_predict(m, x0);
    CHECK(std::abs(p0.mean(0) - real.targets(0)) <=
          2.0 * std::sqrt(p0.variance(0)));

    // far extrapolation has at least as much variance
    MatrixXd far(1, 1);
    far << 50.0;
    GpPrediction pf = jgp_predict(m, far);
    CHECK(pf.variance(0) >= p0.variance(0));
    CHECK(pf.variance.minCoeff() > 0.0);

    MatrixXd wrong(1, 2);
    wrong.setZero();
    CHECK_THROWS_AS(jgp_predict(m, wrong), InputError);
}

TEST_CASE("fidelity_w -> 0 limit matches the real-only GP") {
    RngStream rng(45, 0);
    Dataset real = make_1d(rng, 15, 0.05);
    Dataset sim = make_1d(rng, 15, 0.0, Provenance::Simulated);
    JgpModel m = jgp_fit(real, sim, 600, 7);
    m.fidelity_w = 1e-10;
    // re-solve dual weights under the new noise diagonal
    MatrixXd K = gram(m.kernel, m.train.inputs);
    K.diagonal().array() += default_jitter(K);
    K.diagonal() += m.noise_diagonal();
    m.dual_weights = chol_solve(K, MatrixXd(m.train.targets)).col(0);

    MatrixXd Kr = gram(m.kernel, real.inputs);
    Kr.diagonal().array() += default_jitter(Kr) + m.noise_real;
    VectorXd alpha = chol_solve(Kr, MatrixXd(real.targets)).col(0);
    MatrixXd Xq(7, 1);
    Xq << 0.1, 0.9, 1.7, 2.5, 3.3, 4.1, 5.9;
    GpPrediction p = jgp_predict(m, Xq);
    VectorXd oracle = gram(m.kernel, Xq, real.inputs) * alpha;
    CHECK((p.mean - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("jgp_fit input validation") {
    RngStream rng(46, 0);
    Dataset tiny = make_1d(rng, 3, 0.05);
    CHECK_THROWS_AS(jgp_fit(tiny, empty_like(1), 200, 0), InputError);

    Dataset flat = make_1d(rng, 10, 0.0);
    flat.targets.setConstant(2.0);
    CHECK_THROWS_AS(jgp_fit(flat, empty_like(1), 200, 0), FitError);
}

TEST_CASE("benchmark on the biased-coverage dataset") {
    RngStream rng(47, 0);
    BiasedLaiData data = make_biased_lai_dataset(rng, 40, 80);
    std::vector<RmseRow> rows = jgp_benchmark(data.real, data.sim, data.test, 1000, 11);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].method == "GP_R");
    CHECK(rows[1].method == "GP_S");
    CHECK(rows[2].method == "GP_R+S");
    CHECK(rows[3].method == "JGP");
    for (const RmseRow& r : rows) CHECK(std::isfinite(r.rmse));

    // train-set sanity: evaluating GP_R on its own training set gives a small error
    std::vector<RmseRow> self = jgp_benchmark(data.real, data.sim, data.real, 1000, 11);
    CHECK(self[0].rmse < 0.5);
}
