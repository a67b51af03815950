#pragma once

#include "physml/core.hpp"

namespace physml {

// ---------------------------------------------------------------------------
// Polynomial term library: constant term first, then degree-lexicographic
// monomials (for 2-D, degree 2: 1, x1, x2, x1^2, x1*x2, x2^2).

struct TermLibrary {
    int state_dim = 2;
    int max_degree = 2;
    std::vector<Eigen::VectorXi> terms;   // exponent vectors, fixed order

    static TermLibrary make(int state_dim, int max_degree = 2);
    int n_terms() const { return static_cast<int>(terms.size()); }
    std::string term_name(int t) const;
};

// Columnwise monomial evaluation, T x n_terms.
MatrixXd build_library(const MatrixXd& traj, const TermLibrary& lib);

// Row of library values for a single state.
VectorXd library_row(const VectorXd& state, const TermLibrary& lib);

// Centered second-order differences with one-sided ends; optional odd-width
// moving-average pre-smoothing (window 1 = identity).
MatrixXd estimate_derivatives(const MatrixXd& traj, double dt, int smoothing_window = 1);

// Sequential thresholded least squares. Columns whose active set empties are
// returned all-zero and flagged.
struct StlsqResult {
    MatrixXd xi;                    // n_terms x state_dim
    std::vector<bool> empty_column;
};
StlsqResult stlsq(const MatrixXd& Theta, const MatrixXd& Xdot, double threshold,
                  double ridge = 0.0, int max_iters = 20);

struct SparseOdeModel {
    TermLibrary lib;
    MatrixXd xi;
    double threshold = 0.0;
    double fit_r = 0.0;             // correlation(Theta*xi, Xdot), pooled
    std::vector<bool> empty_column;
};

SparseOdeModel discover(const MatrixXd& traj, double dt, const TermLibrary& lib,
                        double threshold, double ridge = 0.0,
                        int smoothing_window = 1);

// Vector field on a grid plus RK4 trajectories from the given starts;
// 2-D models only.
struct PhasePortrait {
    MatrixXd field;                 // rows: x1, x2, dx1, dx2
    std::vector<MatrixXd> trajectories;
};
PhasePortrait phase_portrait(const SparseOdeModel& model,
                             const MatrixXd& grid_points,
                             const std::vector<VectorXd>& initial_conditions,
                             double t1 = 1.0, double dt = 1e-3);

}  // namespace physml
