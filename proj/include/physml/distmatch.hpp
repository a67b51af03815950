#pragma once

#include "physml/core.hpp"

namespace physml {

// Kernel ridge regression with a three-term loss: squared error on real
// pairs, squared consistency error on simulated pairs, and an MMD penalty
// pulling the predicted target distribution toward a reference sample.

struct MmdEstimate {
    double value = 0.0;   // biased V-statistic, >= -1e-12
    int n_a = 0;
    int n_b = 0;
};

MmdEstimate mmd(const VectorXd& sample_a, const VectorXd& sample_b,
                const KernelConfig& k);

struct MmdKrrModel {
    VectorXd alpha;              // dual weights over pooled training inputs
    MatrixXd train_inputs;       // pooled real + sim rows
    KernelConfig kernel_in;
    KernelConfig kernel_out;     // 1-D output-space kernel for the MMD term
    double mu = 1.0, lambda = 0.0, nu = 0.0;

    VectorXd predict(const MatrixXd& Xq) const;
};

MmdKrrModel mmdkrr_fit(const Dataset& real, const Dataset& sim_pairs,
                       const VectorXd& ref_targets, double mu, double lambda,
                       double nu, const KernelConfig& k_in,
                       const KernelConfig& k_out, int steps = 200,
                       double ridge = 1e-6);

// Loss of Eq-style objective at the given weights; used by the descent
// contract tests.
double mmdkrr_loss(const MmdKrrModel& m, const Dataset& real, const Dataset& sim_pairs,
                   const VectorXd& ref_targets);

struct GridPoint {
    double mu, lambda, nu;
};

// K-fold CV over real rows; ties broken toward smaller nu, then lambda.
GridPoint mmdkrr_grid_search(const Dataset& real, const Dataset& sim_pairs,
                             const VectorXd& ref_targets,
                             const std::vector<GridPoint>& grid,
                             const KernelConfig& k_in, const KernelConfig& k_out,
                             int folds = 5, int steps = 120);

// Default 1-D output kernel: unit signal, median-heuristic lengthscale.
KernelConfig output_kernel(const VectorXd& pooled_targets);

}  // namespace physml
