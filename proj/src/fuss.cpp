#include "physml/fuss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace physml {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double GridProposal::pdf(double x) const {
    if (x < nodes(0) || x > nodes(nodes.size() - 1)) return 0.0;
    // locate segment
    const double* begin = nodes.data();
    const double* end = begin + nodes.size();
    Eigen::Index i = std::upper_bound(begin, end, x) - begin;
    if (i <= 0) return density(0);
    if (i >= nodes.size()) return density(nodes.size() - 1);
    const double h = nodes(i) - nodes(i - 1);
    const double w = (x - nodes(i - 1)) / h;
    return density(i - 1) * (1.0 - w) + density(i) * w;
}

double GridProposal::cdf(double x) const {
    if (x <= nodes(0)) return 0.0;
    if (x >= nodes(nodes.size() - 1)) return 1.0;
    const double* begin = nodes.data();
    const double* end = begin + nodes.size();
    Eigen::Index i = std::upper_bound(begin, end, x) - begin;
    const double x0 = nodes(i - 1);
    const double h = nodes(i) - x0;
    const double d0 = density(i - 1);
    const double k = (density(i) - d0) / h;
    const double dx = x - x0;
    return segment_cdf(i - 1) + d0 * dx + 0.5 * k * dx * dx;
}

double GridProposal::inverse_cdf(double u) const {
    u = std::min(std::max(u, 0.0), 1.0);
    // first node whose cumulative mass exceeds u
    Eigen::Index i = 1;
    while (i < segment_cdf.size() && segment_cdf(i) < u) ++i;
    if (i >= segment_cdf.size()) return nodes(nodes.size() - 1);
    const double m = u - segment_cdf(i - 1);
    const double x0 = nodes(i - 1);
    const double h = nodes(i) - x0;
    const double d0 = density(i - 1);
    const double k = (density(i) - d0) / h;
    double dx;
    if (std::abs(k) * h < 1e-14 * std::max(d0, 1e-300)) {
        dx = d0 > 0.0 ? m / d0 : 0.5 * h;
    } else {
        const double disc = std::max(d0 * d0 + 2.0 * k * m, 0.0);
        dx = (-d0 + std::sqrt(disc)) / k;
    }
    return x0 + std::min(std::max(dx, 0.0), h);
}

GridProposal fuss_build(const LogTarget& log_target, double a, double b, int n_grid,
                        double prune_drop) {
    if (n_grid < 8) throw InputError("fuss_build: n_grid must be >= 8");
    if (prune_drop <= 0.0) throw InputError("fuss_build: prune_drop must be positive");
    if (!(b > a)) throw InputError("fuss_build: bad support");

    VectorXd xs(n_grid);
    for (int i = 0; i < n_grid; ++i)
        xs(i) = a + (b - a) * i / (n_grid - 1.0);
    VectorXd logv;
    log_target.on_grid(xs, logv);

    double L = kNegInf;
    for (int i = 0; i < n_grid; ++i) L = std::max(L, logv(i));
    if (!std::isfinite(L)) throw FitError("fuss_build: log target is -inf on the whole grid");

    std::vector<bool> keep(n_grid, false);
    for (int i = 0; i < n_grid; ++i)
        if (logv(i) >= L - prune_drop) keep[i] = true;
    // one neighbor on each side of every retained run, plus both endpoints
    std::vector<bool> widened = keep;
    for (int i = 0; i < n_grid; ++i)
        if (keep[i]) {
            if (i > 0) widened[i - 1] = true;
            if (i + 1 < n_grid) widened[i + 1] = true;
        }
    widened[0] = widened[n_grid - 1] = true;

    std::vector<double> nx, nd;
    for (int i = 0; i < n_grid; ++i)
        if (widened[i]) {
            nx.push_back(xs(i));
            nd.push_back(std::isfinite(logv(i)) ? std::exp(logv(i) - L) : 0.0);
        }

    GridProposal p;
    p.a = a;
    p.b = b;
    p.nodes = Eigen::Map<VectorXd>(nx.data(), nx.size());
    p.density = Eigen::Map<VectorXd>(nd.data(), nd.size());

    const Eigen::Index n = p.nodes.size();
    p.segment_cdf.resize(n);
    p.segment_cdf(0) = 0.0;
    for (Eigen::Index i = 1; i < n; ++i)
        p.segment_cdf(i) = p.segment_cdf(i - 1) +
                           0.5 * (p.density(i - 1) + p.density(i)) * (p.nodes(i) - p.nodes(i - 1));
    const double Z = p.segment_cdf(n - 1);
    if (Z <= 0.0) throw FitError("fuss_build: proposal mass is zero");
    p.density /= Z;
    p.segment_cdf /= Z;
    p.segment_cdf(n - 1) = 1.0;
    return p;
}

FussDraw fuss_sample(const GridProposal& p, const LogTarget& log_target, double current,
                     RngStream& rng) {
    const double cand = p.inverse_cdf(rng.uniform());
    const double lt_cand = log_target(cand);
    const double lt_cur = log_target(current);
    const double lp_cand = std::log(std::max(p.pdf(cand), 1e-300));
    const double lp_cur = std::log(std::max(p.pdf(current), 1e-300));
    const double log_ratio = (lt_cand - lt_cur) + (lp_cur - lp_cand);
    if (std::log(std::max(rng.uniform(), 1e-300)) < log_ratio)
        return {cand, true};
    return {current, false};
}

GibbsChain gibbs_run(
    const std::vector<std::function<LogTarget(const VectorXd&)>>& conditionals,
    const MatrixXd& supports, int iters, int burn_in, GibbsMethod method,
    RngStream& rng, int n_grid, double prune_drop) {
    const int D = static_cast<int>(conditionals.size());
    if (supports.rows() != D || supports.cols() != 2)
        throw InputError("gibbs_run: supports must be D x 2");
    if (iters <= burn_in) throw InputError("gibbs_run: iters must exceed burn_in");

    // initial state must have finite log density under every conditional
    VectorXd x(D);
    bool valid = false;
    for (int attempt = 0; attempt < 1000 && !valid; ++attempt) {
        for (int d = 0; d < D; ++d) x(d) = rng.uniform(supports(d, 0), supports(d, 1));
        valid = true;
        for (int d = 0; d < D && valid; ++d)
            valid = std::isfinite(conditionals[d](x)(x(d)));
    }
    if (!valid) throw FitError("gibbs_run: no valid initial state found");

    GibbsChain chain;
    chain.states.resize(iters - burn_in, D);
    VectorXd accepted = VectorXd::Zero(D);

    for (int it = 0; it < iters; ++it) {
        for (int d = 0; d < D; ++d) {
            LogTarget target = conditionals[d](x);
            if (method == GibbsMethod::Fuss) {
                GridProposal prop =
                    fuss_build(target, supports(d, 0), supports(d, 1), n_grid, prune_drop);
                FussDraw draw = fuss_sample(prop, target, x(d), rng);
                x(d) = draw.next;
                if (it >= burn_in && draw.accepted) accepted(d) += 1.0;
            } else {
                const double scale = (supports(d, 1) - supports(d, 0)) / 20.0;
                const double cand = x(d) + scale * rng.normal();
                bool ok = cand >= supports(d, 0) && cand <= supports(d, 1);
                if (ok) {
                    const double log_ratio = target(cand) - target(x(d));
                    ok = std::log(std::max(rng.uniform(), 1e-300)) < log_ratio;
                }
                if (ok) {
                    x(d) = cand;
                    if (it >= burn_in) accepted(d) += 1.0;
                }
            }
        }
        if (it >= burn_in) chain.states.row(it - burn_in) = x.transpose();
    }
    chain.acceptance = accepted / static_cast<double>(iters - burn_in);
    return chain;
}

double logistic_log_likelihood(const VectorXd& y, double R, double Omega, double lambda) {
    if (R <= 0.0 || Omega <= 0.0) return kNegInf;
    double ll = 0.0;
    const double inv2l2 = 1.0 / (2.0 * lambda * lambda);
    for (Eigen::Index t = 0; t + 1 < y.size(); ++t) {
        const double arg = R * y(t) * (1.0 - y(t) / Omega);
        if (arg <= 0.0 || y(t + 1) <= 0.0) return kNegInf;
        const double r = std::log(y(t + 1)) - std::log(arg);
        ll -= r * r * inv2l2;
    }
    return ll;
}

namespace {

// vectorized conditionals for the logistic posterior: the R-conditional is
// quadratic in log R given Omega; the Omega-conditional is evaluated per
// grid point in O(T)
LogTarget r_conditional(const VectorXd& y, double Omega, double lambda) {
    const Eigen::Index n = y.size() - 1;
    double Sb = 0.0, Sb2 = 0.0;
    bool valid = true;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double z = y(t) * (1.0 - y(t) / Omega);
        if (z <= 0.0 || y(t + 1) <= 0.0) {
            valid = false;
            break;
        }
        const double bt = std::log(y(t + 1)) - std::log(z);
        Sb += bt;
        Sb2 += bt * bt;
    }
    const double inv2l2 = 1.0 / (2.0 * lambda * lambda);
    LogTarget lt;
    lt.f = [=](double R) -> double {
        if (!valid || R <= 0.0) return kNegInf;
        const double lr = std::log(R);
        return -(Sb2 - 2.0 * lr * Sb + n * lr * lr) * inv2l2;
    };
    return lt;
}

LogTarget omega_conditional(const VectorXd& y, double R, double lambda) {
    LogTarget lt;
    lt.f = [=, &y](double Omega) { return logistic_log_likelihood(y, R, Omega, lambda); };
    lt.grid_eval = [=, &y](const VectorXd& xs, VectorXd& out) {
        out.resize(xs.size());
        for (Eigen::Index i = 0; i < xs.size(); ++i)
            out(i) = logistic_log_likelihood(y, R, xs(i), lambda);
    };
    return lt;
}

}  // namespace

std::vector<LogisticTrialRow> logistic_posterior_experiment(
    const LogisticMapParams& truth, int T, int trials, RngStream& rng, int iters,
    int burn_in) {
    if (truth.R <= 0.0 || truth.R > 10.0 || truth.Omega <= 0.0 || truth.Omega > 10.0)
        throw InputError("logistic_posterior_experiment: truth outside the prior box");

    MatrixXd supports(2, 2);
    supports << 1e-6, 10.0, 1e-6, 10.0;

    std::vector<LogisticTrialRow> rows;
    for (int trial = 0; trial < trials; ++trial) {
        // simulate, retrying on divergence with the next substream
        VectorXd y;
        for (std::uint64_t attempt = 0;; ++attempt) {
            RngStream sim = rng.substream(1000 + trial * 16 + attempt);
            LogisticMapParams p = truth;
            p.T = T;
            p.y1.reset();
            try {
                y = logistic_simulate(p, sim);
                break;
            } catch (const DivergenceError&) {
                continue;
            }
        }

        std::vector<std::function<LogTarget(const VectorXd&)>> conds = {
            [&](const VectorXd& x) { return r_conditional(y, x(1), truth.lambda_noise); },
            [&](const VectorXd& x) { return omega_conditional(y, x(0), truth.lambda_noise); },
        };

        for (GibbsMethod method : {GibbsMethod::Fuss, GibbsMethod::PlainMh}) {
            RngStream chain_rng = rng.substream(
                2000 + trial * 4 + (method == GibbsMethod::Fuss ? 0 : 1));
            GibbsChain chain =
                gibbs_run(conds, supports, iters, burn_in, method, chain_rng);
            const double R_hat = chain.states.col(0).mean();
            const double O_hat = chain.states.col(1).mean();
            rows.push_back({method == GibbsMethod::Fuss ? "FUSS" : "PlainMH", trial,
                            R_hat, O_hat,
                            (R_hat - truth.R) * (R_hat - truth.R),
                            (O_hat - truth.Omega) * (O_hat - truth.Omega)});
        }
    }
    return rows;
}

ConditionalSlice logistic_conditional_slice(const VectorXd& y, double R_fixed,
                                            double lambda, int n_points) {
    ConditionalSlice s;
    s.x.resize(n_points);
    s.log_conditional.resize(n_points);
    for (int i = 0; i < n_points; ++i) {
        s.x(i) = 1e-6 + (10.0 - 1e-6) * i / (n_points - 1.0);
        s.log_conditional(i) = logistic_log_likelihood(y, R_fixed, s.x(i), lambda);
    }
    const double L = s.log_conditional.maxCoeff();
    s.conditional.resize(n_points);
    for (int i = 0; i < n_points; ++i)
        s.conditional(i) =
            std::isfinite(s.log_conditional(i)) ? std::exp(s.log_conditional(i) - L) : 0.0;
    double Z = 0.0;
    for (int i = 0; i + 1 < n_points; ++i)
        Z += 0.5 * (s.conditional(i) + s.conditional(i + 1)) * (s.x(i + 1) - s.x(i));
    if (Z > 0.0) s.conditional /= Z;
    return s;
}

}  // namespace physml
