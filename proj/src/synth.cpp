#include "physml/synth.hpp"

#include "physml/discovery.hpp"

#include <cmath>

namespace physml {

VectorXd SyntheticRtm::forward(double chl, double lai, RngStream* rng) const {
    if (n_bands < 2) throw InputError("SyntheticRtm: need at least 2 bands");
    if (chl < 0.0 || chl > kChlMax || lai < 0.0 || lai > kLaiMax)
        throw InputError("rtm_forward: cause outside supported box");
    VectorXd r(n_bands);
    for (int b = 1; b <= n_bands; ++b) {
        const double alpha = 0.30 + 0.05 * std::sin(static_cast<double>(b));
        const double beta = 0.5 + 0.1 * b;
        const double gamma = 0.20 + 0.02 * b;
        r(b - 1) = alpha * std::exp(-beta * chl / 100.0) + gamma * lai / (1.0 + lai);
    }
    if (rng && noise_sd > 0.0)
        for (int b = 0; b < n_bands; ++b) r(b) += noise_sd * rng->normal();
    return r;
}

VectorXd logistic_simulate(const LogisticMapParams& p, RngStream& rng) {
    if (p.R <= 0.0 || p.Omega <= 0.0 || p.T < 2 || p.lambda_noise < 0.0)
        throw InputError("logistic_simulate: invalid parameters");
    VectorXd y(p.T);
    y(0) = p.y1 ? *p.y1 : rng.uniform();
    if (y(0) < 0.0 || y(0) > 1.0) throw InputError("logistic_simulate: y1 outside [0,1]");
    const double bound = 10.0 * p.Omega;
    for (int t = 0; t + 1 < p.T; ++t) {
        double next = p.R * y(t) * (1.0 - y(t) / p.Omega);
        if (p.lambda_noise > 0.0) next *= std::exp(p.lambda_noise * rng.normal());
        if (!std::isfinite(next) || next < 0.0 || next > bound)
            throw DivergenceError("logistic_simulate: trajectory left [0, 10*Omega] at step " +
                                  std::to_string(t + 1));
        y(t + 1) = next;
    }
    return y;
}

OdeSystem mexico_system(double t1, double dt) {
    OdeSystem sys;
    sys.state_dim = 2;
    sys.max_degree = 2;
    sys.t0 = 0.0;
    sys.t1 = t1;
    sys.dt = dt;
    sys.rhs = MatrixXd::Zero(6, 2);
    // term order: 1, x1, x2, x1^2, x1*x2, x2^2
    sys.rhs(1, 0) = -37.5;
    sys.rhs(2, 0) = -55.6;
    sys.rhs(4, 0) = -31.9;
    sys.rhs(1, 1) = 67.2;
    sys.rhs(2, 1) = 44.8;
    sys.rhs(4, 1) = -74.0;
    return sys;
}

MatrixXd ode_simulate(const OdeSystem& sys, const VectorXd& x0) {
    if (x0.size() != sys.state_dim) throw InputError("ode_simulate: x0 dimension mismatch");
    if (sys.dt <= 0.0) throw InputError("ode_simulate: dt must be positive");
    const TermLibrary lib = TermLibrary::make(sys.state_dim, sys.max_degree);
    if (sys.rhs.rows() != lib.n_terms() || sys.rhs.cols() != sys.state_dim)
        throw InputError("ode_simulate: rhs shape does not match term library");
    auto f = [&](const VectorXd& x) -> VectorXd {
        return sys.rhs.transpose() * library_row(x, lib);
    };
    const int n_steps = static_cast<int>(std::round((sys.t1 - sys.t0) / sys.dt));
    MatrixXd traj(n_steps + 1, sys.state_dim);
    VectorXd x = x0;
    traj.row(0) = x.transpose();
    for (int i = 0; i < n_steps; ++i) {
        const VectorXd k1 = f(x);
        const VectorXd k2 = f(x + 0.5 * sys.dt * k1);
        const VectorXd k3 = f(x + 0.5 * sys.dt * k2);
        const VectorXd k4 = f(x + sys.dt * k3);
        x += (sys.dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite())
            throw DivergenceError("ode_simulate: non-finite state at step " + std::to_string(i + 1));
        traj.row(i + 1) = x.transpose();
    }
    return traj;
}

VectorXd ocean_color_models(double radiance_ratio) {
    if (radiance_ratio <= 0.0) throw InputError("ocean_color_models: ratio must be positive");
    const double L = std::log10(radiance_ratio);
    VectorXd out(4);
    // log-linear
    out(0) = std::pow(10.0, 0.35 - 1.40 * L);
    // linear in the ratio
    out(1) = 3.4 - 1.0 * radiance_ratio;
    // cubic polynomial in log ratio
    out(2) = std::pow(10.0, 0.32 - 2.0 * L + 0.8 * L * L - 0.5 * L * L * L);
    // 4th-order polynomial in log ratio
    out(3) = std::pow(10.0, 0.30 - 2.5 * L + 0.9 * L * L + 0.2 * L * L * L - 0.6 * L * L * L * L);
    return out;
}

double lai_discrepancy(double lai) { return 0.02 * std::sin(3.0 * lai); }

namespace {

Dataset spectra_dataset(const SyntheticRtm& rtm, const std::vector<double>& chl,
                        const std::vector<double>& lai, Provenance prov,
                        double spectrum_noise_sd, bool add_discrepancy, RngStream& rng) {
    const int n = static_cast<int>(lai.size());
    Dataset d;
    d.inputs.resize(n, rtm.n_bands);
    d.targets.resize(n);
    d.provenance.assign(n, prov);
    for (int i = 0; i < n; ++i) {
        VectorXd r = rtm.forward(chl[i], lai[i]);
        if (add_discrepancy) r.array() += lai_discrepancy(lai[i]);
        for (int b = 0; b < rtm.n_bands; ++b)
            r(b) += spectrum_noise_sd * rng.normal();
        d.inputs.row(i) = r.transpose();
        d.targets(i) = lai[i];
    }
    return d;
}

}  // namespace

BiasedLaiData make_biased_lai_dataset(RngStream& rng, int n_real, int n_sim, int n_test) {
    if (n_real < 10 || n_sim < 10) throw InputError("make_biased_lai_dataset: counts must be >= 10");
    SyntheticRtm rtm;
    const double spectrum_noise = 0.005;

    // real: truncated exponential LAI on [0, 3]
    std::vector<double> lai_r(n_real), chl_r(n_real);
    const double cap = 1.0 - std::exp(-3.0);
    for (int i = 0; i < n_real; ++i) {
        lai_r[i] = -std::log(1.0 - cap * rng.uniform());
        chl_r[i] = rng.uniform(0.0, SyntheticRtm::kChlMax);
    }
    // sim: uniform LAI over the full box, spectra carry the discrepancy offset
    std::vector<double> lai_s(n_sim), chl_s(n_sim);
    for (int i = 0; i < n_sim; ++i) {
        lai_s[i] = rng.uniform(0.0, SyntheticRtm::kLaiMax);
        chl_s[i] = rng.uniform(0.0, SyntheticRtm::kChlMax);
    }
    // test: the high-LAI extrapolation region
    std::vector<double> lai_t(n_test), chl_t(n_test);
    for (int i = 0; i < n_test; ++i) {
        lai_t[i] = rng.uniform(3.0, SyntheticRtm::kLaiMax);
        chl_t[i] = rng.uniform(0.0, SyntheticRtm::kChlMax);
    }

    BiasedLaiData out;
    out.real = spectra_dataset(rtm, chl_r, lai_r, Provenance::Real, spectrum_noise, false, rng);
    out.sim = spectra_dataset(rtm, chl_s, lai_s, Provenance::Simulated, 0.0, true, rng);
    out.test = spectra_dataset(rtm, chl_t, lai_t, Provenance::Real, spectrum_noise, false, rng);
    return out;
}

}  // namespace physml
