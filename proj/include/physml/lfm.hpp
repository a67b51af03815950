#pragma once

#include "physml/core.hpp"

namespace physml {

// First-order latent force model: outputs x_d obey
//   dx_d/dt + gamma_d x_d = sum_r sens[d,r] u_r(t),  x_d(0) = 0,
// with independent latent GP forces u_r having unit-amplitude RBF kernel
// k_r(s,s') = exp(-(s-s')^2 / ell_r^2). Output covariances are the double
// convolution of that kernel with the exponential Green's function; the
// closed forms below are gated by quadrature oracles in the test suite.

struct LfmParams {
    int n_outputs = 1;
    int n_latents = 1;
    VectorXd gamma;               // D, > 0; tau_d = 1/gamma_d
    MatrixXd sens;                // D x R
    VectorXd latent_lengthscales; // R, > 0
    VectorXd noise;               // D, > 0 (observation variance)

    void validate() const;
    VectorXd tau() const { return gamma.cwiseInverse(); }
};

struct MultiSeriesData {
    std::vector<VectorXd> times;   // strictly increasing per output
    std::vector<VectorXd> values;

    void validate() const;
    int total_obs() const;
};

// e^X (erf(a) - erf(b)) without overflow; exposed for the kernel tests.
double scaled_erf_diff(double X, double a, double b);

double lfm_cross_cov(const LfmParams& p, int d, int d2, double t, double t2);
double lfm_latent_cross_cov(const LfmParams& p, int d, int r, double t, double s);

// Joint output covariance over stacked observations (outputs concatenated
// in order), without the noise diagonal.
MatrixXd lfm_joint_gram(const LfmParams& p, const MultiSeriesData& data);

double lfm_log_marginal(const LfmParams& p, const MultiSeriesData& data);

LfmParams lfm_fit(const MultiSeriesData& data, int n_latents, int opt_budget,
                  RngStream& rng);

struct GpPosterior {
    VectorXd mean;
    VectorXd variance;
};

GpPosterior lfm_predict(const LfmParams& p, const MultiSeriesData& data,
                        const VectorXd& query_times, int output);

std::vector<GpPosterior> lfm_latent_posterior(const LfmParams& p,
                                              const MultiSeriesData& data,
                                              const VectorXd& query_times);

// Exact joint draw from the prior: noisy outputs at the given times plus
// each latent force on the grid. Used by the planted-recovery experiments.
struct LfmSample {
    MultiSeriesData data;               // with observation noise added
    std::vector<VectorXd> latent_on_grid;
    VectorXd grid;
};
LfmSample lfm_sample(const LfmParams& p, const std::vector<VectorXd>& times,
                     const VectorXd& latent_grid, RngStream& rng);

}  // namespace physml
