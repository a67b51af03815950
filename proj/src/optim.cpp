#include "physml/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace physml {

namespace {

double safe_eval(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                 int& evals) {
    ++evals;
    try {
        const double v = f(x);
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const std::exception&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

OptimResult nelder_mead(const std::function<double(const VectorXd&)>& f,
                        const VectorXd& x0, const NelderMeadOptions& opts) {
    const int n = static_cast<int>(x0.size());
    int evals = 0;

    std::vector<VectorXd> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (int i = 0; i < n; ++i) pts[i + 1](i) += opts.initial_step;
    for (int i = 0; i <= n; ++i) vals[i] = safe_eval(f, pts[i], evals);

    auto order = [&]() {
        std::vector<int> idx(n + 1);
        for (int i = 0; i <= n; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return vals[a] < vals[b]; });
        std::vector<VectorXd> p2(n + 1);
        std::vector<double> v2(n + 1);
        for (int i = 0; i <= n; ++i) {
            p2[i] = pts[idx[i]];
            v2[i] = vals[idx[i]];
        }
        pts.swap(p2);
        vals.swap(v2);
    };

    while (evals < opts.max_evals) {
        order();
        if (std::isfinite(vals[n]) &&
            (vals[n] - vals[0] < opts.ftol ||
             (pts[n] - pts[0]).cwiseAbs().maxCoeff() < opts.xtol))
            break;

        VectorXd centroid = VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) centroid += pts[i];
        centroid /= n;

        const VectorXd xr = centroid + (centroid - pts[n]);
        const double fr = safe_eval(f, xr, evals);
        if (fr < vals[0]) {
            const VectorXd xe = centroid + 2.0 * (centroid - pts[n]);
            const double fe = safe_eval(f, xe, evals);
            if (fe < fr) {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if (fr < vals[n - 1]) {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            const VectorXd xc = centroid + 0.5 * (pts[n] - centroid);
            const double fc = safe_eval(f, xc, evals);
            if (fc < vals[n]) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for (int i = 1; i <= n; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    vals[i] = safe_eval(f, pts[i], evals);
                }
            }
        }
    }
    order();
    return {pts[0], vals[0], evals};
}

OptimResult multistart_minimize(const std::function<double(const VectorXd&)>& f,
                                const VectorXd& x0, int n_starts, double spread,
                                int budget, RngStream& rng) {
    if (n_starts < 1) throw InputError("multistart_minimize: need at least one start");
    NelderMeadOptions opts;
    opts.max_evals = std::max(20, budget / n_starts);
    OptimResult best;
    best.f = std::numeric_limits<double>::infinity();
    int total_evals = 0;
    for (int s = 0; s < n_starts; ++s) {
        VectorXd start = x0;
        if (s > 0)
            for (Eigen::Index i = 0; i < start.size(); ++i)
                start(i) += spread * rng.normal();
        OptimResult r = nelder_mead(f, start, opts);
        total_evals += r.evals;
        if (r.f < best.f) best = r;
    }
    best.evals = total_evals;
    return best;
}

}  // namespace physml
