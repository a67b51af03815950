#pragma once

#include "physml/core.hpp"
#include "physml/synth.hpp"

#include <functional>

namespace physml {

// FUSS proposal: evaluate a log target on a uniform grid, prune points far
// below the maximum, interpolate the retained points piecewise-linearly and
// normalize; exact inverse-CDF sampling plus Metropolis-Hastings correction.

// Log conditional evaluator; eval_grid may be overridden with a vectorized
// version when the target factorizes cheaply over a grid.
struct LogTarget {
    std::function<double(double)> f;
    std::function<void(const VectorXd&, VectorXd&)> grid_eval;  // optional

    double operator()(double x) const { return f(x); }
    void on_grid(const VectorXd& xs, VectorXd& out) const {
        if (grid_eval) {
            grid_eval(xs, out);
        } else {
            out.resize(xs.size());
            for (Eigen::Index i = 0; i < xs.size(); ++i) out(i) = f(xs(i));
        }
    }
};

struct GridProposal {
    double a = 0.0, b = 1.0;
    VectorXd nodes;            // increasing
    VectorXd density;          // >= 0 at nodes, trapezoid-normalized
    VectorXd segment_cdf;      // cumulative mass up to each node; back() == 1

    double pdf(double x) const;
    double cdf(double x) const;
    double inverse_cdf(double u) const;
};

GridProposal fuss_build(const LogTarget& log_target, double a, double b,
                        int n_grid = 512, double prune_drop = 15.0);

struct FussDraw {
    double next;
    bool accepted;
};

FussDraw fuss_sample(const GridProposal& p, const LogTarget& log_target,
                     double current, RngStream& rng);

enum class GibbsMethod { Fuss, PlainMh };

struct GibbsChain {
    MatrixXd states;           // iters x D, post burn-in
    VectorXd acceptance;       // per coordinate
};

GibbsChain gibbs_run(
    const std::vector<std::function<LogTarget(const VectorXd&)>>& conditionals,
    const MatrixXd& supports, int iters, int burn_in, GibbsMethod method,
    RngStream& rng, int n_grid = 512, double prune_drop = 15.0);

// Log likelihood of a logistic-map series in (R, Omega): residuals of
// log y_{t+1} against log(R y_t (1 - y_t/Omega)) are N(0, lambda^2);
// map arguments <= 0 give -inf.
double logistic_log_likelihood(const VectorXd& y, double R, double Omega,
                               double lambda);

struct LogisticTrialRow {
    std::string method;
    int trial;
    double R_hat, Omega_hat;
    double sq_err_R, sq_err_Omega;
};

std::vector<LogisticTrialRow> logistic_posterior_experiment(
    const LogisticMapParams& truth, int T, int trials, RngStream& rng,
    int iters = 5000, int burn_in = 500);

// Conditional slice over Omega at fixed R, for the diagnostic export.
struct ConditionalSlice {
    VectorXd x, log_conditional, conditional;
};
ConditionalSlice logistic_conditional_slice(const VectorXd& y, double R_fixed,
                                            double lambda, int n_points = 512);

}  // namespace physml
