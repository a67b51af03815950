#pragma once

#include "physml/core.hpp"

namespace physml {

// Joint GP over pooled real + simulated rows. A single fidelity weight
// w in [0, 1] scales the effective noise on simulated rows,
// sigma_sim^2 = sigma_real^2 / max(w, 1e-12), so w -> 0 removes their
// influence entirely. Hyperparameters are chosen by maximizing the
// leave-one-out predictive log density of the real rows only.

struct JgpModel {
    KernelConfig kernel;
    double noise_real = 0.1;
    double fidelity_w = 1.0;
    VectorXd dual_weights;
    Dataset train;

    VectorXd noise_diagonal() const;
};

constexpr double kFidelityEps = 1e-12;

JgpModel jgp_fit(const Dataset& real, const Dataset& sim, int opt_budget = 2000,
                 std::uint64_t seed = 0);

struct GpPrediction {
    VectorXd mean;
    VectorXd variance;
};

GpPrediction jgp_predict(const JgpModel& m, const MatrixXd& Xq);

struct RmseRow {
    std::string method;
    double rmse;
};

// Four-way comparison on a common test set: real-only GP, sim-only GP,
// naive pooled stack, and the joint GP.
std::vector<RmseRow> jgp_benchmark(const Dataset& real, const Dataset& sim,
                                   const Dataset& test, int opt_budget = 2000,
                                   std::uint64_t seed = 0);

}  // namespace physml
