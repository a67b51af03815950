#include "physml/distmatch.hpp"

#include <cmath>
#include <limits>

namespace physml {

MmdEstimate mmd(const VectorXd& sample_a, const VectorXd& sample_b,
                const KernelConfig& k) {
    if (sample_a.size() == 0 || sample_b.size() == 0)
        throw InputError("mmd: empty sample");
    MatrixXd A = sample_a, B = sample_b;
    const double kaa = gram(k, A, A).mean();
    const double kab = gram(k, A, B).mean();
    const double kbb = gram(k, B, B).mean();
    MmdEstimate e;
    e.value = kaa - 2.0 * kab + kbb;
    e.n_a = static_cast<int>(sample_a.size());
    e.n_b = static_cast<int>(sample_b.size());
    if (e.value < -1e-12)
        throw FitError("mmd: V-statistic fell below -1e-12");
    return e;
}

KernelConfig output_kernel(const VectorXd& pooled_targets) {
    KernelConfig k;
    k.lengthscales = VectorXd::Constant(1, median_heuristic(pooled_targets));
    k.signal_variance = 1.0;
    return k;
}

VectorXd MmdKrrModel::predict(const MatrixXd& Xq) const {
    return gram(kernel_in, Xq, train_inputs) * alpha;
}

namespace {

struct LossParts {
    MatrixXd K_r, K_s, K_all;
    VectorXd y_r, y_s, ref;
    KernelConfig k_out;
    double mu, lambda, nu, ridge;

    double loss(const VectorXd& alpha) const {
        double L = ridge * alpha.squaredNorm();
        L += mu * (y_r - K_r * alpha).squaredNorm();
        if (lambda > 0.0 && y_s.size() > 0) L += lambda * (y_s - K_s * alpha).squaredNorm();
        if (nu > 0.0) L += nu * mmd(K_all * alpha, ref, k_out).value;
        return L;
    }

    VectorXd grad(const VectorXd& alpha) const {
        VectorXd g = 2.0 * ridge * alpha;
        g += 2.0 * mu * K_r.transpose() * (K_r * alpha - y_r);
        if (lambda > 0.0 && y_s.size() > 0)
            g += 2.0 * lambda * K_s.transpose() * (K_s * alpha - y_s);
        if (nu > 0.0) {
            const VectorXd a = K_all * alpha;
            const int n = static_cast<int>(a.size());
            const int m = static_cast<int>(ref.size());
            const double ell2 = k_out.lengthscales(0) * k_out.lengthscales(0);
            VectorXd da = VectorXd::Zero(n);
            for (int i = 0; i < n; ++i) {
                double s = 0.0;
                for (int j = 0; j < n; ++j) {
                    const double d = a(i) - a(j);
                    s += (2.0 / (static_cast<double>(n) * n)) *
                         (-d / ell2) * k_out.signal_variance * std::exp(-0.5 * d * d / ell2);
                }
                for (int j = 0; j < m; ++j) {
                    const double d = a(i) - ref(j);
                    s -= (2.0 / (static_cast<double>(n) * m)) *
                         (-d / ell2) * k_out.signal_variance * std::exp(-0.5 * d * d / ell2);
                }
                da(i) = s;
            }
            g += nu * K_all.transpose() * da;
        }
        return g;
    }
};

}  // namespace

MmdKrrModel mmdkrr_fit(const Dataset& real, const Dataset& sim_pairs,
                       const VectorXd& ref_targets, double mu, double lambda,
                       double nu, const KernelConfig& k_in, const KernelConfig& k_out,
                       int steps, double ridge) {
    real.validate();
    if (mu < 0.0 || lambda < 0.0 || nu < 0.0)
        throw InputError("mmdkrr_fit: loss weights must be nonnegative");
    if (steps < 1) throw InputError("mmdkrr_fit: steps must be >= 1");

    MatrixXd X_all;
    if (sim_pairs.rows() > 0) {
        X_all.resize(real.rows() + sim_pairs.rows(), real.dims());
        X_all << real.inputs, sim_pairs.inputs;
    } else {
        X_all = real.inputs;
    }

    LossParts lp;
    lp.K_r = gram(k_in, real.inputs, X_all);
    lp.K_s = sim_pairs.rows() > 0 ? gram(k_in, sim_pairs.inputs, X_all) : MatrixXd();
    lp.K_all = gram(k_in, X_all, X_all);
    lp.y_r = real.targets;
    lp.y_s = sim_pairs.rows() > 0 ? sim_pairs.targets : VectorXd();
    lp.ref = ref_targets;
    lp.k_out = k_out;
    lp.mu = mu;
    lp.lambda = lambda;
    lp.nu = nu;
    lp.ridge = ridge;

    // closed-form solution of the quadratic (nu = 0) part
    MatrixXd A = mu * lp.K_r.transpose() * lp.K_r;
    VectorXd b = mu * lp.K_r.transpose() * lp.y_r;
    if (lambda > 0.0 && sim_pairs.rows() > 0) {
        A += lambda * lp.K_s.transpose() * lp.K_s;
        b += lambda * lp.K_s.transpose() * lp.y_s;
    }
    A.diagonal().array() += ridge;
    VectorXd alpha = chol_solve(A, MatrixXd(b)).col(0);
    for (int it = 0; it < 2; ++it) {
        VectorXd r = b - A * alpha;
        alpha += chol_solve(A, MatrixXd(r)).col(0);
    }

    if (nu > 0.0) {
        double L = lp.loss(alpha);
        double step = 1e-2 / std::max(1.0, lp.K_all.operatorNorm());
        for (int it = 0; it < steps; ++it) {
            const VectorXd g = lp.grad(alpha);
            const double gn2 = g.squaredNorm();
            if (gn2 < 1e-18) break;
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                const VectorXd cand = alpha - step * g;
                const double Lc = lp.loss(cand);
                if (std::isfinite(Lc) && Lc <= L - 1e-4 * step * gn2) {
                    alpha = cand;
                    L = Lc;
                    step *= 1.5;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) break;
        }
        if (!std::isfinite(L)) throw DivergenceError("mmdkrr_fit: non-finite loss");
    }

    MmdKrrModel m;
    m.alpha = alpha;
    m.train_inputs = X_all;
    m.kernel_in = k_in;
    m.kernel_out = k_out;
    m.mu = mu;
    m.lambda = lambda;
    m.nu = nu;
    return m;
}

double mmdkrr_loss(const MmdKrrModel& m, const Dataset& real, const Dataset& sim_pairs,
                   const VectorXd& ref_targets) {
    LossParts lp;
    lp.K_r = gram(m.kernel_in, real.inputs, m.train_inputs);
    lp.K_s = sim_pairs.rows() > 0 ? gram(m.kernel_in, sim_pairs.inputs, m.train_inputs)
                                  : MatrixXd();
    lp.K_all = gram(m.kernel_in, m.train_inputs, m.train_inputs);
    lp.y_r = real.targets;
    lp.y_s = sim_pairs.rows() > 0 ? sim_pairs.targets : VectorXd();
    lp.ref = ref_targets;
    lp.k_out = m.kernel_out;
    lp.mu = m.mu;
    lp.lambda = m.lambda;
    lp.nu = m.nu;
    lp.ridge = 0.0;
    return lp.loss(m.alpha);
}

GridPoint mmdkrr_grid_search(const Dataset& real, const Dataset& sim_pairs,
                             const VectorXd& ref_targets,
                             const std::vector<GridPoint>& grid,
                             const KernelConfig& k_in, const KernelConfig& k_out,
                             int folds, int steps) {
    if (grid.empty()) throw InputError("mmdkrr_grid_search: empty grid");
    const int n = static_cast<int>(real.rows());
    if (n / folds < 2) throw InputError("mmdkrr_grid_search: a fold would have < 2 rows");

    double best_rmse = std::numeric_limits<double>::infinity();
    GridPoint best = grid.front();
    for (const GridPoint& gp : grid) {
        double se = 0.0;
        int count = 0;
        for (int f = 0; f < folds; ++f) {
            std::vector<int> tr, te;
            for (int i = 0; i < n; ++i) (i % folds == f ? te : tr).push_back(i);
            Dataset train;
            train.inputs.resize(tr.size(), real.dims());
            train.targets.resize(tr.size());
            train.provenance.assign(tr.size(), Provenance::Real);
            for (std::size_t i = 0; i < tr.size(); ++i) {
                train.inputs.row(i) = real.inputs.row(tr[i]);
                train.targets(i) = real.targets(tr[i]);
            }
            MmdKrrModel m = mmdkrr_fit(train, sim_pairs, ref_targets, gp.mu, gp.lambda,
                                       gp.nu, k_in, k_out, steps);
            for (int i : te) {
                const double pred = m.predict(real.inputs.row(i))(0);
                se += (pred - real.targets(i)) * (pred - real.targets(i));
                ++count;
            }
        }
        const double rmse = std::sqrt(se / count);
        const bool better =
            rmse < best_rmse - 1e-12 ||
            (std::abs(rmse - best_rmse) <= 1e-12 &&
             (gp.nu < best.nu || (gp.nu == best.nu && gp.lambda < best.lambda)));
        if (better) {
            best_rmse = rmse;
            best = gp;
        }
    }
    return best;
}

}  // namespace physml
