#include "physml/lfm.hpp"

#include "physml/optim.hpp"

#include <cmath>

namespace physml {

void LfmParams::validate() const {
    if (gamma.size() != n_outputs || noise.size() != n_outputs ||
        latent_lengthscales.size() != n_latents || sens.rows() != n_outputs ||
        sens.cols() != n_latents)
        throw InputError("LfmParams: shape mismatch");
    if ((gamma.array() <= 0.0).any() || (noise.array() <= 0.0).any() ||
        (latent_lengthscales.array() <= 0.0).any())
        throw InputError("LfmParams: positivity violated");
}

void MultiSeriesData::validate() const {
    if (times.size() != values.size() || times.empty())
        throw InputError("MultiSeriesData: need at least one output");
    bool any = false;
    for (std::size_t d = 0; d < times.size(); ++d) {
        if (times[d].size() != values[d].size())
            throw InputError("MultiSeriesData: time/value length mismatch");
        for (Eigen::Index i = 0; i < times[d].size(); ++i) {
            if (!std::isfinite(times[d](i)) || !std::isfinite(values[d](i)))
                throw InputError("MultiSeriesData: non-finite entry");
            if (i > 0 && times[d](i) <= times[d](i - 1))
                throw InputError("MultiSeriesData: times must be strictly increasing");
        }
        if (times[d].size() > 0) any = true;
    }
    if (!any) throw InputError("MultiSeriesData: no observations");
}

int MultiSeriesData::total_obs() const {
    int n = 0;
    for (const auto& t : times) n += static_cast<int>(t.size());
    return n;
}

namespace {

// erfcx(x) = exp(x^2) erfc(x) for x >= 0
double erfcx_pos(double x) {
    if (x < 12.0) return std::exp(x * x) * std::erfc(x);
    const double ix2 = 1.0 / (x * x);
    // asymptotic series, relative error < 1e-8 for x >= 12
    return (1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 + ix2 * 6.5625)))) /
           (x * std::sqrt(M_PI));
}

// e^{X - v^2} erfcx(|v|) with the sign bookkeeping left to the caller
double exp_erfcx(double X, double v) { return std::exp(X - v * v) * erfcx_pos(v); }

}  // namespace

double scaled_erf_diff(double X, double a, double b) {
    // e^X (erf(a) - erf(b)) = e^X (erfc(b) - erfc(a))
    if (a >= 0.0 && b >= 0.0) return exp_erfcx(X, b) - exp_erfcx(X, a);
    if (a < 0.0 && b < 0.0) return exp_erfcx(X, -a) - exp_erfcx(X, -b);
    // mixed signs: the cancelling 2 e^X terms do not cancel; X is bounded
    // by construction at every call site in this file
    auto term = [&](double v) {
        return v >= 0.0 ? exp_erfcx(X, v) : 2.0 * std::exp(X) - exp_erfcx(X, -v);
    };
    return term(b) - term(a);
}

double lfm_cross_cov(const LfmParams& p, int d, int d2, double t, double t2) {
    p.validate();
    if (d < 0 || d >= p.n_outputs || d2 < 0 || d2 >= p.n_outputs)
        throw InputError("lfm_cross_cov: bad output index");
    const double g = p.gamma(d);
    const double g2 = p.gamma(d2);
    const double c = g + g2;
    double total = 0.0;
    for (int r = 0; r < p.n_latents; ++r) {
        const double ell = p.latent_lengthscales(r);
        const double nu = 0.5 * g * ell;
        const double nu2 = 0.5 * g2 * ell;
        const double T1 = scaled_erf_diff(nu2 * nu2 + g2 * (t - t2),
                                          t / ell + nu2, (t - t2) / ell + nu2);
        const double T2 = -scaled_erf_diff(nu2 * nu2 - g * t - g2 * t2,
                                           nu2, nu2 - t2 / ell);
        const double T3 = -scaled_erf_diff(nu * nu - g * t - g2 * t2,
                                           t / ell - nu, -nu);
        const double T4 = scaled_erf_diff(nu * nu + g * (t2 - t),
                                          t2 / ell + nu, (t2 - t) / ell + nu);
        total += p.sens(d, r) * p.sens(d2, r) * (std::sqrt(M_PI) * ell / (2.0 * c)) *
                 (T1 + T2 + T3 + T4);
    }
    return total;
}

double lfm_latent_cross_cov(const LfmParams& p, int d, int r, double t, double s) {
    p.validate();
    if (d < 0 || d >= p.n_outputs || r < 0 || r >= p.n_latents)
        throw InputError("lfm_latent_cross_cov: bad index");
    const double g = p.gamma(d);
    const double ell = p.latent_lengthscales(r);
    const double nu = 0.5 * g * ell;
    const double E = scaled_erf_diff(nu * nu + g * (s - t),
                                     (t - s) / ell - nu, -s / ell - nu);
    return p.sens(d, r) * (std::sqrt(M_PI) * ell / 2.0) * E;
}

MatrixXd lfm_joint_gram(const LfmParams& p, const MultiSeriesData& data) {
    const int n = data.total_obs();
    std::vector<int> out_idx(n);
    std::vector<double> ts(n);
    int row = 0;
    for (int d = 0; d < p.n_outputs; ++d)
        for (Eigen::Index i = 0; i < data.times[d].size(); ++i, ++row) {
            out_idx[row] = d;
            ts[row] = data.times[d](i);
        }
    MatrixXd K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            K(i, j) = lfm_cross_cov(p, out_idx[i], out_idx[j], ts[i], ts[j]);
            K(j, i) = K(i, j);
        }
    return K;
}

namespace {

VectorXd stacked_values(const MultiSeriesData& data) {
    VectorXd y(data.total_obs());
    int row = 0;
    for (const auto& v : data.values)
        for (Eigen::Index i = 0; i < v.size(); ++i) y(row++) = v(i);
    return y;
}

VectorXd stacked_noise(const LfmParams& p, const MultiSeriesData& data) {
    VectorXd n(data.total_obs());
    int row = 0;
    for (int d = 0; d < p.n_outputs; ++d)
        for (Eigen::Index i = 0; i < data.times[d].size(); ++i) n(row++) = p.noise(d);
    return n;
}

}  // namespace

double lfm_log_marginal(const LfmParams& p, const MultiSeriesData& data) {
    MatrixXd C = lfm_joint_gram(p, data);
    C.diagonal() += stacked_noise(p, data);
    C.diagonal().array() += default_jitter(C);
    Eigen::LLT<MatrixXd> llt(C);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("lfm_log_marginal: joint covariance not PD");
    const VectorXd y = stacked_values(data);
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < C.rows(); ++i) logdet += std::log(llt.matrixL()(i, i));
    logdet *= 2.0;
    return -0.5 * y.dot(llt.solve(y)) - 0.5 * logdet -
           0.5 * y.size() * std::log(2.0 * M_PI);
}

LfmParams lfm_fit(const MultiSeriesData& data, int n_latents, int opt_budget,
                  RngStream& rng) {
    data.validate();
    if (data.total_obs() > 2000) throw InputError("lfm_fit: more than 2000 observations");
    const int D = static_cast<int>(data.times.size());
    const int R = n_latents;

    double t_lo = 1e300, t_hi = -1e300, var_sum = 0.0;
    for (int d = 0; d < D; ++d) {
        if (data.times[d].size() == 0) continue;
        t_lo = std::min(t_lo, data.times[d].minCoeff());
        t_hi = std::max(t_hi, data.times[d].maxCoeff());
        var_sum += (data.values[d].array() - data.values[d].mean()).square().mean();
    }
    const double range = std::max(t_hi - t_lo, 1.0);
    const double var0 = std::max(var_sum / D, 1e-6);

    // theta = [log gamma (D), log sens (D*R), log ell (R), log noise (D)]
    auto unpack = [&](const VectorXd& th) {
        LfmParams p;
        p.n_outputs = D;
        p.n_latents = R;
        p.gamma = th.head(D).array().exp();
        p.sens = MatrixXd(D, R);
        for (int d = 0; d < D; ++d)
            for (int r = 0; r < R; ++r) p.sens(d, r) = std::exp(th(D + d * R + r));
        p.latent_lengthscales = th.segment(D + D * R, R).array().exp();
        p.noise = th.tail(D).array().exp();
        return p;
    };

    auto objective = [&](const VectorXd& th) -> double {
        LfmParams p = unpack(th);
        for (int d = 0; d < D; ++d) {
            if (p.gamma(d) < 1e-4 || p.gamma(d) > 5.0) return 1e300;
            for (int r = 0; r < R; ++r)
                if (p.gamma(d) * p.latent_lengthscales(r) > 8.0) return 1e300;
        }
        for (int r = 0; r < R; ++r) {
            const double ell = p.latent_lengthscales(r);
            if (ell < 0.05 || ell > 4.0 * range) return 1e300;
        }
        return -lfm_log_marginal(p, data);
    };

    VectorXd th0(D + D * R + R + D);
    for (int d = 0; d < D; ++d) th0(d) = std::log(0.1);            // tau = 10
    for (int i = 0; i < D * R; ++i) th0(D + i) = 0.0;              // sens = 1
    for (int r = 0; r < R; ++r) th0(D + D * R + r) = std::log(range / 10.0);
    for (int d = 0; d < D; ++d) th0(D + D * R + R + d) = std::log(0.1 * var0);

    OptimResult best = multistart_minimize(objective, th0, 4, 0.5, opt_budget, rng);
    LfmParams p = unpack(best.x);
    p.validate();
    return p;
}

namespace {

struct Conditioner {
    Eigen::LLT<MatrixXd> llt;
    VectorXd alpha;   // C^{-1} y
};

Conditioner condition_on(const LfmParams& p, const MultiSeriesData& data) {
    MatrixXd C = lfm_joint_gram(p, data);
    C.diagonal() += stacked_noise(p, data);
    C.diagonal().array() += default_jitter(C);
    Conditioner c;
    c.llt.compute(C);
    if (c.llt.info() != Eigen::Success)
        throw FactorizationError("lfm: joint covariance not PD");
    c.alpha = c.llt.solve(stacked_values(data));
    return c;
}

}  // namespace

GpPosterior lfm_predict(const LfmParams& p, const MultiSeriesData& data,
                        const VectorXd& query_times, int output) {
    p.validate();
    data.validate();
    if (output < 0 || output >= p.n_outputs) throw InputError("lfm_predict: bad output");
    Conditioner c = condition_on(p, data);
    const int n = data.total_obs();
    const int q = static_cast<int>(query_times.size());
    MatrixXd Kq(q, n);
    for (int i = 0; i < q; ++i) {
        int col = 0;
        for (int d2 = 0; d2 < p.n_outputs; ++d2)
            for (Eigen::Index j = 0; j < data.times[d2].size(); ++j, ++col)
                Kq(i, col) = lfm_cross_cov(p, output, d2, query_times(i), data.times[d2](j));
    }
    GpPosterior out;
    out.mean = Kq * c.alpha;
    MatrixXd V = c.llt.solve(Kq.transpose());
    out.variance.resize(q);
    for (int i = 0; i < q; ++i) {
        const double prior_var = lfm_cross_cov(p, output, output, query_times(i), query_times(i));
        out.variance(i) = std::max(prior_var - Kq.row(i).dot(V.col(i)), 1e-12);
    }
    return out;
}

std::vector<GpPosterior> lfm_latent_posterior(const LfmParams& p,
                                              const MultiSeriesData& data,
                                              const VectorXd& query_times) {
    p.validate();
    data.validate();
    Conditioner c = condition_on(p, data);
    const int n = data.total_obs();
    const int q = static_cast<int>(query_times.size());
    std::vector<GpPosterior> out(p.n_latents);
    for (int r = 0; r < p.n_latents; ++r) {
        MatrixXd Kq(q, n);
        for (int i = 0; i < q; ++i) {
            int col = 0;
            for (int d2 = 0; d2 < p.n_outputs; ++d2)
                for (Eigen::Index j = 0; j < data.times[d2].size(); ++j, ++col)
                    Kq(i, col) = lfm_latent_cross_cov(p, d2, r, data.times[d2](j), query_times(i));
        }
        out[r].mean = Kq * c.alpha;
        MatrixXd V = c.llt.solve(Kq.transpose());
        out[r].variance.resize(q);
        for (int i = 0; i < q; ++i)
            out[r].variance(i) = std::max(1.0 - Kq.row(i).dot(V.col(i)), 1e-12);
    }
    return out;
}

LfmSample lfm_sample(const LfmParams& p, const std::vector<VectorXd>& times,
                     const VectorXd& latent_grid, RngStream& rng) {
    p.validate();
    if (static_cast<int>(times.size()) != p.n_outputs)
        throw InputError("lfm_sample: times list must match n_outputs");
    MultiSeriesData shape;
    shape.times = times;
    shape.values.resize(times.size());
    for (std::size_t d = 0; d < times.size(); ++d)
        shape.values[d] = VectorXd::Zero(times[d].size());

    const int n_out = shape.total_obs();
    const int g = static_cast<int>(latent_grid.size());
    const int n = n_out + p.n_latents * g;

    MatrixXd K(n, n);
    K.topLeftCorner(n_out, n_out) = lfm_joint_gram(p, shape);
    for (int r = 0; r < p.n_latents; ++r) {
        const double ell = p.latent_lengthscales(r);
        // output-latent blocks
        int row = 0;
        for (int d = 0; d < p.n_outputs; ++d)
            for (Eigen::Index i = 0; i < times[d].size(); ++i, ++row)
                for (int j = 0; j < g; ++j) {
                    const double v = lfm_latent_cross_cov(p, d, r, times[d](i), latent_grid(j));
                    K(row, n_out + r * g + j) = v;
                    K(n_out + r * g + j, row) = v;
                }
        // latent-latent blocks (independent across latents)
        for (int r2 = 0; r2 < p.n_latents; ++r2)
            for (int i = 0; i < g; ++i)
                for (int j = 0; j < g; ++j) {
                    const double dt = latent_grid(i) - latent_grid(j);
                    K(n_out + r * g + i, n_out + r2 * g + j) =
                        r == r2 ? std::exp(-dt * dt / (ell * ell)) : 0.0;
                }
    }
    K.diagonal().array() += 1e-9;
    Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("lfm_sample: joint prior not PD");
    VectorXd z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    VectorXd draw = llt.matrixL() * z;

    LfmSample out;
    out.data = shape;
    int row = 0;
    for (int d = 0; d < p.n_outputs; ++d)
        for (Eigen::Index i = 0; i < times[d].size(); ++i, ++row)
            out.data.values[d](i) = draw(row) + std::sqrt(p.noise(d)) * rng.normal();
    out.grid = latent_grid;
    out.latent_on_grid.resize(p.n_latents);
    for (int r = 0; r < p.n_latents; ++r)
        out.latent_on_grid[r] = draw.segment(n_out + r * g, g);
    return out;
}

}  // namespace physml
