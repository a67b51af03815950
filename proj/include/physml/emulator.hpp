#pragma once

#include "physml/core.hpp"
#include "physml/synth.hpp"

namespace physml {

// Active emulation of the synthetic RTM: a per-band GP surrogate over the
// (Chl, LAI) box, grown one point at a time by maximizing an acquisition
// that multiplies predictive spread by distance to the training set.

struct EmulatorState {
    MatrixXd train_inputs;     // n x 2
    MatrixXd train_outputs;    // n x B
    KernelConfig kernel;       // shared across bands; bands standardized
    double noise = 1e-6;       // relative noise on the standardized scale
    int iteration = 0;

    // refreshed by refit(): per-band standardization and the shared
    // factorization of C = R + noise I
    VectorXd band_mean, band_sd;
    MatrixXd alpha;            // C^{-1} * standardized outputs, n x B
    Eigen::LLT<MatrixXd> llt;

    void refit(int opt_budget = 25);
    // band-mean predictive sd and per-band means at query points
    VectorXd predict_sd(const MatrixXd& Xq) const;
    MatrixXd predict_mean(const MatrixXd& Xq) const;
};

struct AcquisitionConfig {
    double beta = 1.0;                 // exponent on the distance term
    int candidate_pool = 2000;
    double stop_rmse = 0.0;            // 0 disables the RMSE stop
    int max_points = 60;
};

double acquisition_value(const EmulatorState& s, const AcquisitionConfig& cfg,
                         const VectorXd& x);

VectorXd select_next(const EmulatorState& s, const AcquisitionConfig& cfg,
                     RngStream& rng);

// One sample per axis stratum per dimension, random pairing.
MatrixXd lhs_sample(int n, const MatrixXd& box, RngStream& rng);

struct RmseCurvePoint {
    int n_points;
    double rmse;
};

enum class SamplingMethod { Amogape, Lhs, Random };

std::vector<RmseCurvePoint> run_active_loop(const SyntheticRtm& rtm,
                                            const AcquisitionConfig& cfg, int init_n,
                                            const MatrixXd& eval_inputs,
                                            const MatrixXd& eval_truth, RngStream& rng);

// Baseline curves: fresh design of each size, matching the active schedule.
std::vector<RmseCurvePoint> run_baseline_curve(const SyntheticRtm& rtm,
                                               SamplingMethod method, int init_n,
                                               int max_points,
                                               const MatrixXd& eval_inputs,
                                               const MatrixXd& eval_truth,
                                               RngStream& rng);

// The 70x70 evaluation grid over the cause box and its noiseless truth.
void make_eval_grid(const SyntheticRtm& rtm, int side, MatrixXd& inputs, MatrixXd& truth);

MatrixXd cause_box();   // 2x2: rows are (lo, hi) per dimension

}  // namespace physml
