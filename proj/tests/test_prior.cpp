#include "doctest.h"

#include "physml/prior.hpp"

#include <cmath>

using namespace physml;

namespace {

// linear forward stub: f(c) = A c on a wide box
struct LinearStub {
    MatrixXd A;
    ObservationModel om;

    LinearStub() {
        A.resize(3, 2);
        A << 1.0, 0.5, -0.3, 1.0, 0.2, 0.2;
        MatrixXd Acopy = A;
        om.forward = [Acopy](const VectorXd& c) -> VectorXd { return Acopy * c; };
        om.cause_box = MatrixXd(2, 2);
        om.cause_box << -50.0, 50.0, -50.0, 50.0;
        om.sigma = 0.3;
        om.d_e = 3;
        om.d_c = 2;
    }

    // conjugate posterior N(mu, Lambda^{-1})
    void conjugate(const VectorXd& e, const CausePrior& prior, VectorXd& mu,
                   MatrixXd& cov) const {
        const double s2 = om.sigma * om.sigma;
        MatrixXd Sinv = prior.S.inverse();
        MatrixXd Lambda = A.transpose() * A / s2 + Sinv;
        cov = Lambda.inverse();
        mu = cov * (A.transpose() * e / s2 + Sinv * prior.m);
    }
};

CausePrior default_prior() {
    CausePrior p;
    p.m = VectorXd(2);
    p.m << 1.0, -1.0;
    p.S = MatrixXd(2, 2);
    p.S << 1.0, 0.3, 0.3, 0.8;
    return p;
}

}  // namespace

TEST_CASE("log_posterior_unnorm against the conjugate oracle") {
    LinearStub stub;
    CausePrior prior = default_prior();
    VectorXd e(3);
    e << 0.7, -0.2, 0.4;

    VectorXd mu;
    MatrixXd cov;
    stub.conjugate(e, prior, mu, cov);
    MatrixXd Lambda = cov.inverse();

    // differences of log densities must match the conjugate quadratic form
    RngStream rng(101, 0);
    for (int rep = 0; rep < 100; ++rep) {
        VectorXd c1(2), c2(2);
        for (int j = 0; j < 2; ++j) {
            c1(j) = rng.uniform(-3.0, 3.0);
            c2(j) = rng.uniform(-3.0, 3.0);
        }
        const double lhs = log_posterior_unnorm(c1, e, stub.om, prior) -
                           log_posterior_unnorm(c2, e, stub.om, prior);
        const double q1 = (c1 - mu).dot(Lambda * (c1 - mu));
        const double q2 = (c2 - mu).dot(Lambda * (c2 - mu));
        CHECK(lhs == doctest::Approx(-0.5 * (q1 - q2)).epsilon(1e-8));
    }

    // both quadratic terms vanish at c = m, e = f(m)
    CHECK(log_posterior_unnorm(prior.m, stub.om.forward(prior.m), stub.om, prior) ==
          doctest::Approx(0.0));

    // doubling sigma scales the likelihood term by 1/4
    CausePrior at_c = prior;
    VectorXd c(2);
    c << 0.4, 0.9;
    at_c.m = c;   // prior quadratic term zero
    ObservationModel om2 = stub.om;
    om2.sigma = 2.0 * stub.om.sigma;
    const double l1 = log_posterior_unnorm(c, e, stub.om, at_c);
    const double l2 = log_posterior_unnorm(c, e, om2, at_c);
    CHECK(l1 == doctest::Approx(4.0 * l2).epsilon(1e-12));

    VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(log_posterior_unnorm(wrong, e, stub.om, prior), InputError);
}

TEST_CASE("sample_posterior matches the conjugate posterior") {
    LinearStub stub;
    CausePrior prior = default_prior();
    VectorXd e(3);
    e << 0.7, -0.2, 0.4;
    VectorXd mu;
    MatrixXd cov;
    stub.conjugate(e, prior, mu, cov);

    RngStream rng(102, 0);
    const int K = 20000;
    PosteriorSamples ps = sample_posterior(e, stub.om, prior, K, 500, rng);
    CHECK(ps.acceptance_rate > 0.05);
    CHECK(ps.acceptance_rate < 0.95);
    for (Eigen::Index i = 0; i < ps.draws.rows(); ++i)
        for (int j = 0; j < 2; ++j) {
            CHECK(ps.draws(i, j) >= -50.0);
            CHECK(ps.draws(i, j) <= 50.0);
        }

    // batch-means standard error handles chain autocorrelation
    const int n_batch = 20, batch = K / n_batch;
    for (int j = 0; j < 2; ++j) {
        VectorXd bm(n_batch);
        for (int b = 0; b < n_batch; ++b)
            bm(b) = ps.draws.col(j).segment(b * batch, batch).mean();
        const double mean = ps.draws.col(j).mean();
        const double se = std::sqrt((bm.array() - bm.mean()).square().sum() /
                                    (n_batch - 1) / n_batch);
        CHECK(std::abs(mean - mu(j)) <= 3.0 * se);
    }

    // covariance within 15% relative (Frobenius)
    MatrixXd centered = ps.draws.rowwise() - ps.draws.colwise().mean();
    MatrixXd Shat = centered.transpose() * centered / static_cast<double>(K);
    CHECK((Shat - cov).norm() <= 0.15 * cov.norm());
}

TEST_CASE("sample_posterior determinism and vague-likelihood limit") {
    LinearStub stub;
    CausePrior prior = default_prior();
    VectorXd e(3);
    e << 0.7, -0.2, 0.4;

    RngStream r1(103, 5), r2(103, 5);
    PosteriorSamples a = sample_posterior(e, stub.om, prior, 500, 200, r1);
    PosteriorSamples b = sample_posterior(e, stub.om, prior, 500, 200, r2);
    CHECK((a.draws - b.draws).cwiseAbs().maxCoeff() == 0.0);

    // sigma -> infinity: posterior collapses to the prior
    ObservationModel vague = stub.om;
    vague.sigma = 1e6;
    RngStream r3(104, 0);
    PosteriorSamples p = sample_posterior(e, vague, prior, 20000, 500, r3);
    CHECK(std::abs(p.draws.col(0).mean() - prior.m(0)) < 0.1);
    CHECK(std::abs(p.draws.col(1).mean() - prior.m(1)) < 0.1);

    CHECK_THROWS_AS(sample_posterior(e, stub.om, prior, 50, 200, r3), InputError);
}

TEST_CASE("mcem_fit inverts identical observations at small noise") {
    LinearStub stub;
    stub.om.sigma = 0.01;
    VectorXd c_star(2);
    c_star << 0.8, -0.4;
    VectorXd e = stub.om.forward(c_star);
    MatrixXd effects(15, 3);
    for (int j = 0; j < 15; ++j) effects.row(j) = e.transpose();

    CausePrior init = default_prior();
    RngStream rng(105, 0);
    CausePrior fit = mcem_fit(effects, stub.om, init, 8, 300, rng, nullptr, 3000);
    CHECK((fit.m - c_star).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("mcem_fit recovers a planted prior and is stationary at truth") {
    LinearStub stub;
    CausePrior truth;
    truth.m = VectorXd(2);
    truth.m << 0.5, -0.8;
    truth.S = MatrixXd(2, 2);
    truth.S << 0.6, 0.15, 0.15, 0.4;

    // generate effects from the planted prior
    RngStream gen(106, 0);
    const int J = 60;
    MatrixXd effects(J, 3);
    Eigen::LLT<MatrixXd> llt(truth.S);
    for (int j = 0; j < J; ++j) {
        VectorXd z(2);
        z << gen.normal(), gen.normal();
        VectorXd c = truth.m + llt.matrixL() * z;
        VectorXd e = stub.om.forward(c);
        for (int i = 0; i < 3; ++i) e(i) += stub.om.sigma * gen.normal();
        effects.row(j) = e.transpose();
    }

    RngStream rng(107, 0);
    McemTrace trace;
    CausePrior fit = mcem_fit(effects, stub.om, truth, 10, 200, rng, &trace, 200);
    REQUIRE(trace.iterates.size() == 10);
    CHECK((fit.m - truth.m).cwiseAbs().maxCoeff() < 0.25);
    CHECK((fit.S - truth.S).norm() < 0.5 * truth.S.norm());
    CHECK_NOTHROW(fit.validate());
    for (const CausePrior& p : trace.iterates) CHECK_NOTHROW(p.validate());

    MatrixXd tiny = effects.topRows(5);
    CHECK_THROWS_AS(mcem_fit(tiny, stub.om, truth, 2, 200, rng), InputError);
}

TEST_CASE("observation model from the synthetic forward map") {
    SyntheticRtm rtm;
    ObservationModel om = ObservationModel::from_rtm(rtm, 0.01);
    CHECK(om.d_e == rtm.n_bands);
    CHECK(om.d_c == 2);
    VectorXd c(2);
    c << 40.0, 2.0;
    CHECK((om.forward(c) - rtm.forward(40.0, 2.0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(om.cause_box(0, 1) == SyntheticRtm::kChlMax);
    CHECK(om.cause_box(1, 1) == SyntheticRtm::kLaiMax);
}
