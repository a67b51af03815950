#pragma once

#include "physml/core.hpp"

namespace physml {

// Kernel regression with an HSIC term that rewards statistical dependence
// of the predictions on a physical model's outputs. The dependence enters
// with a linear kernel on predictions, keeping the objective quadratic and
// the solution closed-form.

double hsic(const MatrixXd& a, const MatrixXd& b, const KernelConfig& k_a,
            const KernelConfig& k_b);

// HSIC reported in outputs: hsic(a,b) / sqrt(hsic(a,a) * hsic(b,b)).
double normalized_hsic(const MatrixXd& a, const MatrixXd& b, const KernelConfig& k_a,
                       const KernelConfig& k_b);

struct FklModel {
    VectorXd alpha;
    MatrixXd train_inputs;
    KernelConfig k_in;
    double ridge = 0.0;
    double dep_weight = 0.0;

    VectorXd predict(const MatrixXd& Xq) const;
};

struct DependenceWeightTooLarge : FitError {
    double largest_admissible;
    explicit DependenceWeightTooLarge(double admissible)
        : FitError("fkl_fit: dependence weight too large; largest admissible ~" +
                   std::to_string(admissible)),
          largest_admissible(admissible) {}
};

FklModel fkl_fit(const Dataset& train, const VectorXd& sensitive, double ridge,
                 double dep_weight, const KernelConfig& k_in);

// Largest dependence weight that keeps the fit system positive definite,
// found by doubling then bisection.
double fkl_critical_weight(const Dataset& train, const VectorXd& sensitive,
                           double ridge, const KernelConfig& k_in);

struct ConsistencyRow {
    int model;
    double dep_weight;
    double rmse;
    double hsic;   // normalized, on test predictions vs the model outputs
};

// One error-vs-dependence curve per candidate physical model. Grid entries
// are fractions in [0, 1) of each model's critical weight; rows record the
// absolute weight used.
std::vector<ConsistencyRow> fkl_consistency_curve(
    const Dataset& train, const Dataset& test,
    const std::vector<VectorXd>& sensitive_models_train,
    const std::vector<VectorXd>& sensitive_models_test,
    const std::vector<double>& dep_grid, double ridge, const KernelConfig& k_in);

}  // namespace physml
