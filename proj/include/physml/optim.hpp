#pragma once

#include "physml/core.hpp"

#include <functional>

namespace physml {

// Derivative-free minimization used by the GP-family fits. Objectives may
// throw or return non-finite values; such points are treated as +inf.

struct NelderMeadOptions {
    int max_evals = 500;
    double initial_step = 0.5;
    double xtol = 1e-7;
    double ftol = 1e-9;
};

struct OptimResult {
    VectorXd x;
    double f = 0.0;
    int evals = 0;
};

OptimResult nelder_mead(const std::function<double(const VectorXd&)>& f,
                        const VectorXd& x0, const NelderMeadOptions& opts);

// Multi-start wrapper: first start at x0, the rest perturbed by
// spread * N(0,1) per coordinate. Total objective evaluations ~ budget.
OptimResult multistart_minimize(const std::function<double(const VectorXd&)>& f,
                                const VectorXd& x0, int n_starts, double spread,
                                int budget, RngStream& rng);

}  // namespace physml
