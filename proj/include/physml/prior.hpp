#pragma once

#include "physml/core.hpp"
#include "physml/synth.hpp"

#include <functional>

namespace physml {

// Inference of a Gaussian prior over causes from observed effects under a
// forward-model likelihood e = f(c) + N(0, sigma^2 I): Metropolis-within-
// Gibbs posterior sampling per observation plus a Monte-Carlo EM outer loop.

struct ObservationModel {
    // forward map and the box it is defined on (rows: lo, hi per cause dim)
    std::function<VectorXd(const VectorXd&)> forward;
    MatrixXd cause_box;
    double sigma = 0.01;
    int d_e = 8;
    int d_c = 2;

    static ObservationModel from_rtm(const SyntheticRtm& rtm, double sigma);
};

struct CausePrior {
    VectorXd m;
    MatrixXd S;

    void validate() const;   // throws if S is not PD or entries non-finite
};

struct PosteriorSamples {
    MatrixXd draws;            // K x d_c
    double acceptance_rate = 0.0;
};

// log N(e | f(c), sigma^2 I) + log N(c | m, S), constants independent of c
// dropped.
double log_posterior_unnorm(const VectorXd& c, const VectorXd& e,
                            const ObservationModel& om, const CausePrior& prior);

// Component-wise random-walk Metropolis with per-component steps adapted
// during burn-in toward acceptance in [0.2, 0.5]. Out-of-box proposals are
// rejected (truncated prior support).
PosteriorSamples sample_posterior(const VectorXd& e, const ObservationModel& om,
                                  const CausePrior& prior, int K, int burn_in,
                                  RngStream& rng);

struct McemTrace {
    std::vector<CausePrior> iterates;
    std::vector<double> penalized_log_marginal;   // per-iteration MC estimate
    bool degenerate_warning = false;
};

CausePrior mcem_fit(const MatrixXd& effects, const ObservationModel& om,
                    const CausePrior& init, int iters, int K, RngStream& rng,
                    McemTrace* trace = nullptr, int burn_in = 200);

}  // namespace physml
