#include "physml/discovery.hpp"

#include "physml/synth.hpp"

#include <cmath>
#include <functional>

namespace physml {

TermLibrary TermLibrary::make(int state_dim, int max_degree) {
    if (state_dim < 1 || max_degree < 0) throw InputError("TermLibrary: bad dimensions");
    TermLibrary lib;
    lib.state_dim = state_dim;
    lib.max_degree = max_degree;
    // degree 0, 1, ... ; within a degree, lexicographic in the exponent vector
    // with the first state varying slowest (x1^2 before x1*x2 before x2^2)
    std::function<void(int, int, Eigen::VectorXi&)> emit = [&](int pos, int remaining,
                                                               Eigen::VectorXi& e) {
        if (pos == state_dim) {
            if (remaining == 0) lib.terms.push_back(e);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            e(pos) = k;
            emit(pos + 1, remaining - k, e);
        }
        e(pos) = 0;
    };
    for (int deg = 0; deg <= max_degree; ++deg) {
        Eigen::VectorXi e = Eigen::VectorXi::Zero(state_dim);
        emit(0, deg, e);
    }
    return lib;
}

std::string TermLibrary::term_name(int t) const {
    const Eigen::VectorXi& e = terms.at(t);
    if (e.sum() == 0) return "1";
    std::string s;
    for (int i = 0; i < state_dim; ++i) {
        for (int k = 0; k < e(i); ++k) {
            if (!s.empty()) s += "*";
            s += "x" + std::to_string(i + 1);
        }
    }
    return s;
}

VectorXd library_row(const VectorXd& state, const TermLibrary& lib) {
    if (state.size() != lib.state_dim) throw InputError("library_row: dimension mismatch");
    VectorXd row(lib.n_terms());
    for (int t = 0; t < lib.n_terms(); ++t) {
        double v = 1.0;
        for (int i = 0; i < lib.state_dim; ++i)
            for (int k = 0; k < lib.terms[t](i); ++k) v *= state(i);
        row(t) = v;
    }
    return row;
}

MatrixXd build_library(const MatrixXd& traj, const TermLibrary& lib) {
    if (traj.cols() != lib.state_dim) throw InputError("build_library: dimension mismatch");
    MatrixXd Theta(traj.rows(), lib.n_terms());
    for (Eigen::Index r = 0; r < traj.rows(); ++r)
        Theta.row(r) = library_row(traj.row(r).transpose(), lib).transpose();
    return Theta;
}

MatrixXd estimate_derivatives(const MatrixXd& traj, double dt, int smoothing_window) {
    const Eigen::Index T = traj.rows();
    if (T < 5) throw InputError("estimate_derivatives: need at least 5 samples");
    if (dt <= 0.0) throw InputError("estimate_derivatives: dt must be positive");
    if (smoothing_window < 1 || smoothing_window % 2 == 0)
        throw InputError("estimate_derivatives: smoothing window must be odd and >= 1");
    MatrixXd sm = traj;
    if (smoothing_window > 1) {
        const int h = smoothing_window / 2;
        for (Eigen::Index i = 0; i < T; ++i) {
            const Eigen::Index lo = std::max<Eigen::Index>(0, i - h);
            const Eigen::Index hi = std::min<Eigen::Index>(T - 1, i + h);
            sm.row(i) = traj.middleRows(lo, hi - lo + 1).colwise().mean();
        }
    }
    MatrixXd dx(T, traj.cols());
    dx.row(0) = (-3.0 * sm.row(0) + 4.0 * sm.row(1) - sm.row(2)) / (2.0 * dt);
    for (Eigen::Index i = 1; i + 1 < T; ++i)
        dx.row(i) = (sm.row(i + 1) - sm.row(i - 1)) / (2.0 * dt);
    dx.row(T - 1) = (3.0 * sm.row(T - 1) - 4.0 * sm.row(T - 2) + sm.row(T - 3)) / (2.0 * dt);
    return dx;
}

StlsqResult stlsq(const MatrixXd& Theta, const MatrixXd& Xdot, double threshold,
                  double ridge, int max_iters) {
    if (Theta.rows() != Xdot.rows()) throw InputError("stlsq: row count mismatch");
    if (threshold < 0.0) throw InputError("stlsq: threshold must be >= 0");
    const int p = static_cast<int>(Theta.cols());
    const int d = static_cast<int>(Xdot.cols());
    StlsqResult res;
    res.xi = MatrixXd::Zero(p, d);
    res.empty_column.assign(d, false);

    auto ridge_solve = [&](const MatrixXd& A, const VectorXd& b) -> VectorXd {
        MatrixXd G = A.transpose() * A;
        G.diagonal().array() += ridge;
        if (ridge == 0.0) {
            return A.colPivHouseholderQr().solve(b);
        }
        return chol_solve(G, MatrixXd(A.transpose() * b)).col(0);
    };

    for (int j = 0; j < d; ++j) {
        std::vector<int> active(p);
        for (int t = 0; t < p; ++t) active[t] = t;
        VectorXd coef;
        for (int it = 0; it < max_iters; ++it) {
            MatrixXd A(Theta.rows(), active.size());
            for (std::size_t a = 0; a < active.size(); ++a) A.col(a) = Theta.col(active[a]);
            coef = ridge_solve(A, Xdot.col(j));
            std::vector<int> kept;
            VectorXd kept_coef(coef.size());
            int m = 0;
            for (std::size_t a = 0; a < active.size(); ++a) {
                if (std::abs(coef(a)) >= threshold) {
                    kept.push_back(active[a]);
                    kept_coef(m++) = coef(a);
                }
            }
            const bool converged = kept.size() == active.size();
            active = kept;
            coef = kept_coef.head(m);
            if (active.empty() || converged) break;
        }
        if (active.empty()) {
            res.empty_column[j] = true;
            continue;
        }
        for (std::size_t a = 0; a < active.size(); ++a) res.xi(active[a], j) = coef(a);
    }
    return res;
}

SparseOdeModel discover(const MatrixXd& traj, double dt, const TermLibrary& lib,
                        double threshold, double ridge, int smoothing_window) {
    MatrixXd Theta = build_library(traj, lib);
    MatrixXd Xdot = estimate_derivatives(traj, dt, smoothing_window);
    StlsqResult r = stlsq(Theta, Xdot, threshold, ridge);
    SparseOdeModel model;
    model.lib = lib;
    model.xi = r.xi;
    model.threshold = threshold;
    model.empty_column = r.empty_column;
    // pooled correlation between predicted and estimated derivatives
    MatrixXd pred = Theta * r.xi;
    VectorXd a = Eigen::Map<VectorXd>(pred.data(), pred.size());
    VectorXd b = Eigen::Map<VectorXd>(Xdot.data(), Xdot.size());
    const double na = (a.array() - a.mean()).matrix().norm();
    const double nb = (b.array() - b.mean()).matrix().norm();
    model.fit_r = (na > 0.0 && nb > 0.0)
                      ? (a.array() - a.mean()).matrix().dot((b.array() - b.mean()).matrix()) / (na * nb)
                      : 0.0;
    return model;
}

PhasePortrait phase_portrait(const SparseOdeModel& model, const MatrixXd& grid_points,
                             const std::vector<VectorXd>& initial_conditions,
                             double t1, double dt) {
    if (model.lib.state_dim != 2) throw InputError("phase_portrait: 2-D models only");
    PhasePortrait pp;
    pp.field.resize(grid_points.rows(), 4);
    for (Eigen::Index i = 0; i < grid_points.rows(); ++i) {
        VectorXd x = grid_points.row(i).transpose();
        VectorXd dxdt = model.xi.transpose() * library_row(x, model.lib);
        pp.field.row(i) << x(0), x(1), dxdt(0), dxdt(1);
    }
    // trajectories are truncated once they leave the plotting box
    VectorXd lo = grid_points.colwise().minCoeff().transpose();
    VectorXd hi = grid_points.colwise().maxCoeff().transpose();
    auto in_box = [&](const VectorXd& x) {
        return x.allFinite() && (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
    };
    auto f = [&](const VectorXd& x) -> VectorXd {
        return model.xi.transpose() * library_row(x, model.lib);
    };
    const int n_steps = static_cast<int>(std::round(t1 / dt));
    for (const VectorXd& x0 : initial_conditions) {
        std::vector<VectorXd> rows;
        VectorXd x = x0;
        rows.push_back(x);
        for (int s = 0; s < n_steps && in_box(x); ++s) {
            VectorXd k1 = f(x);
            VectorXd k2 = f(x + 0.5 * dt * k1);
            VectorXd k3 = f(x + 0.5 * dt * k2);
            VectorXd k4 = f(x + dt * k3);
            VectorXd xn = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!in_box(xn)) break;
            x = xn;
            rows.push_back(x);
        }
        MatrixXd traj(static_cast<Eigen::Index>(rows.size()), 2);
        for (Eigen::Index i = 0; i < traj.rows(); ++i) traj.row(i) = rows[static_cast<size_t>(i)].transpose();
        pp.trajectories.push_back(traj);
    }
    return pp;
}

}  // namespace physml
