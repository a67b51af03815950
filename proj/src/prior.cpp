#include "physml/prior.hpp"

#include <cmath>

namespace physml {

ObservationModel ObservationModel::from_rtm(const SyntheticRtm& rtm, double sigma) {
    ObservationModel om;
    om.forward = [rtm](const VectorXd& c) { return rtm.forward(c(0), c(1)); };
    om.cause_box = MatrixXd(2, 2);
    om.cause_box << 0.0, SyntheticRtm::kChlMax, 0.0, SyntheticRtm::kLaiMax;
    om.sigma = sigma;
    om.d_e = rtm.n_bands;
    om.d_c = 2;
    return om;
}

void CausePrior::validate() const {
    if (!m.allFinite() || !S.allFinite()) throw InputError("CausePrior: non-finite entries");
    Eigen::LLT<MatrixXd> llt(S);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("CausePrior: covariance not positive definite");
}

double log_posterior_unnorm(const VectorXd& c, const VectorXd& e,
                            const ObservationModel& om, const CausePrior& prior) {
    if (c.size() != om.d_c || e.size() != om.d_e)
        throw InputError("log_posterior_unnorm: dimension mismatch");
    prior.validate();
    const VectorXd r = e - om.forward(c);
    const double loglik = -0.5 * r.squaredNorm() / (om.sigma * om.sigma);
    Eigen::LLT<MatrixXd> llt(prior.S);
    const VectorXd d = c - prior.m;
    const double logprior = -0.5 * d.dot(llt.solve(d));
    return loglik + logprior;
}

PosteriorSamples sample_posterior(const VectorXd& e, const ObservationModel& om,
                                  const CausePrior& prior, int K, int burn_in,
                                  RngStream& rng) {
    if (K < 100) throw InputError("sample_posterior: K must be >= 100");
    const int d = om.d_c;
    const MatrixXd& box = om.cause_box;

    VectorXd c(d);
    for (int j = 0; j < d; ++j)
        c(j) = std::min(std::max(prior.m(j), box(j, 0)), box(j, 1));
    double logp = log_posterior_unnorm(c, e, om, prior);

    VectorXd step(d);
    for (int j = 0; j < d; ++j) step(j) = 0.1 * (box(j, 1) - box(j, 0));

    Eigen::VectorXi acc_window = Eigen::VectorXi::Zero(d);
    Eigen::VectorXi try_window = Eigen::VectorXi::Zero(d);
    long accepted_post = 0, tried_post = 0;

    PosteriorSamples out;
    out.draws.resize(K, d);

    const int total = burn_in + K;
    for (int it = 0; it < total; ++it) {
        for (int j = 0; j < d; ++j) {
            const double prop = c(j) + step(j) * rng.normal();
            const bool in_box = prop >= box(j, 0) && prop <= box(j, 1);
            bool accept = false;
            if (in_box) {
                VectorXd cand = c;
                cand(j) = prop;
                const double lp = log_posterior_unnorm(cand, e, om, prior);
                if (std::log(std::max(rng.uniform(), 1e-300)) < lp - logp) {
                    c = cand;
                    logp = lp;
                    accept = true;
                }
            }
            if (it < burn_in) {
                ++try_window(j);
                if (accept) ++acc_window(j);
                if (try_window(j) == 25) {   // adapt toward 0.2-0.5 acceptance
                    const double rate = acc_window(j) / 25.0;
                    if (rate < 0.2) step(j) *= 0.7;
                    if (rate > 0.5) step(j) *= 1.4;
                    acc_window(j) = 0;
                    try_window(j) = 0;
                }
            } else {
                ++tried_post;
                if (accept) ++accepted_post;
            }
        }
        if (it >= burn_in) out.draws.row(it - burn_in) = c.transpose();
    }
    out.acceptance_rate = static_cast<double>(accepted_post) / tried_post;
    if (out.acceptance_rate <= 0.05 || out.acceptance_rate >= 0.95)
        throw FitError("sample_posterior: acceptance rate " +
                       std::to_string(out.acceptance_rate) +
                       " outside (0.05, 0.95) after adaptation");
    return out;
}

CausePrior mcem_fit(const MatrixXd& effects, const ObservationModel& om,
                    const CausePrior& init, int iters, int K, RngStream& rng,
                    McemTrace* trace, int burn_in) {
    const int J = static_cast<int>(effects.rows());
    if (J < 10) throw InputError("mcem_fit: need at least 10 observations");
    init.validate();

    CausePrior prior = init;
    for (int it = 0; it < iters; ++it) {
        MatrixXd all_draws(static_cast<Eigen::Index>(J) * K, om.d_c);
        double log_marginal = 0.0;
        for (int j = 0; j < J; ++j) {
            RngStream sub = rng.substream(static_cast<std::uint64_t>(it) * J + j);
            PosteriorSamples ps =
                sample_posterior(effects.row(j).transpose(), om, prior, K, burn_in, sub);
            all_draws.middleRows(static_cast<Eigen::Index>(j) * K, K) = ps.draws;
            // crude per-observation evidence proxy: mean unnormalized log posterior
            double s = 0.0;
            for (int k = 0; k < K; ++k)
                s += log_posterior_unnorm(ps.draws.row(k).transpose(),
                                          effects.row(j).transpose(), om, prior);
            log_marginal += s / K;
        }
        const VectorXd mean = all_draws.colwise().mean();
        MatrixXd centered = all_draws.rowwise() - mean.transpose();
        MatrixXd S = centered.transpose() * centered / static_cast<double>(all_draws.rows());
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(S);
        const bool degenerate = es.eigenvalues().minCoeff() < 1e-10;
        S.diagonal().array() += 1e-6;

        prior.m = mean;
        prior.S = S;
        if (trace) {
            trace->iterates.push_back(prior);
            trace->penalized_log_marginal.push_back(log_marginal);
            if (degenerate) trace->degenerate_warning = true;
        }
    }
    return prior;
}

}  // namespace physml
