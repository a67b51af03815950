#pragma once

#include "physml/core.hpp"

#include <optional>

namespace physml {

// ---------------------------------------------------------------------------
// Synthetic radiative-transfer stand-in: maps (Chl, LAI) to B reflectance
// bands through a fixed analytic formula, deterministic in the noiseless
// case so independent evaluations agree bit-for-bit.

struct SyntheticRtm {
    int n_bands = 8;
    double noise_sd = 0.0;

    static constexpr double kChlMax = 80.0;
    static constexpr double kLaiMax = 10.0;

    // band b in {1..B}: alpha_b * exp(-beta_b * chl/100) + gamma_b * lai/(1+lai)
    VectorXd forward(double chl, double lai, RngStream* rng = nullptr) const;
};

// ---------------------------------------------------------------------------
// Noisy logistic map  y_{t+1} = R [ y_t (1 - y_t/Omega) ] exp(eps_t),
// eps_t ~ N(0, lambda^2).

struct LogisticMapParams {
    double R = 3.7;
    double Omega = 1.0;
    double lambda_noise = 0.01;
    int T = 100;
    std::optional<double> y1;   // drawn U([0,1]) when unset
};

VectorXd logistic_simulate(const LogisticMapParams& p, RngStream& rng);

// ---------------------------------------------------------------------------
// Polynomial-library ODE systems and a fixed-grid RK4 integrator.

struct OdeSystem {
    int state_dim = 2;
    int max_degree = 2;
    MatrixXd rhs;               // n_terms x state_dim, term order per TermLibrary
    double t0 = 0.0, t1 = 1.0, dt = 1e-3;
};

// The system printed for the subtropical-Mexico ecosystem:
//   d/dt x1 = -37.5 x1 - 55.6 x2 - 31.9 x1 x2
//   d/dt x2 = +67.2 x1 + 44.8 x2 - 74.0 x1 x2
OdeSystem mexico_system(double t1 = 1.0, double dt = 1e-3);

// trajectory rows are states at t0, t0+dt, ..., t1
MatrixXd ode_simulate(const OdeSystem& sys, const VectorXd& x0);

// ---------------------------------------------------------------------------
// Four fixed monotone chlorophyll retrieval models of a band ratio,
// standing in for Morel1 / CalCOFI / OC2 / OC4.
VectorXd ocean_color_models(double radiance_ratio);

// ---------------------------------------------------------------------------
// Biased-LAI benchmark data: real rows with LAI concentrated low, simulated
// rows spanning the full range through the RTM plus a model-discrepancy
// offset, test rows at high LAI.

struct BiasedLaiData {
    Dataset real;
    Dataset sim;
    Dataset test;
};

BiasedLaiData make_biased_lai_dataset(RngStream& rng, int n_real, int n_sim,
                                      int n_test = 200);

// Discrepancy added to every band of a simulated spectrum.
double lai_discrepancy(double lai);

}  // namespace physml
