#include "physml/emulator.hpp"

#include "physml/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace physml {

MatrixXd cause_box() {
    MatrixXd box(2, 2);
    box << 0.0, SyntheticRtm::kChlMax, 0.0, SyntheticRtm::kLaiMax;
    return box;
}

void EmulatorState::refit(int opt_budget) {
    const Eigen::Index n = train_inputs.rows();
    const Eigen::Index B = train_outputs.cols();
    if (n < 2) throw FitError("EmulatorState::refit: need at least 2 points");

    band_mean = train_outputs.colwise().mean();
    band_sd.resize(B);
    MatrixXd Y(n, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        VectorXd c = train_outputs.col(b).array() - band_mean(b);
        band_sd(b) = std::max(std::sqrt(c.squaredNorm() / n), 1e-9);
        Y.col(b) = c / band_sd(b);
    }

    if (kernel.lengthscales.size() != 2) {
        kernel.lengthscales = VectorXd(2);
        kernel.lengthscales << SyntheticRtm::kChlMax / 4.0, SyntheticRtm::kLaiMax / 4.0;
        kernel.signal_variance = 1.0;
    }

    // summed marginal likelihood over standardized bands, shared lengthscales
    auto objective = [&](const VectorXd& log_ell) -> double {
        KernelConfig k = kernel;
        k.lengthscales = log_ell.array().exp();
        MatrixXd C = gram(k, train_inputs);
        C.diagonal().array() += noise + default_jitter(C);
        Eigen::LLT<MatrixXd> f(C);
        if (f.info() != Eigen::Success) return 1e300;
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(f.matrixL()(i, i));
        logdet *= 2.0;
        const MatrixXd A = f.solve(Y);
        return 0.5 * (Y.array() * A.array()).sum() + 0.5 * B * logdet;
    };

    if (opt_budget > 0) {
        NelderMeadOptions opts;
        opts.max_evals = opt_budget;
        opts.initial_step = 0.3;
        OptimResult r = nelder_mead(objective, kernel.lengthscales.array().log(), opts);
        kernel.lengthscales = r.x.array().exp();
    }

    MatrixXd C = gram(kernel, train_inputs);
    C.diagonal().array() += noise + default_jitter(C);
    llt.compute(C);
    if (llt.info() != Eigen::Success)
        throw FactorizationError("EmulatorState::refit: covariance not PD");
    alpha = llt.solve(Y);
}

MatrixXd EmulatorState::predict_mean(const MatrixXd& Xq) const {
    MatrixXd Kq = gram(kernel, Xq, train_inputs);
    MatrixXd M = Kq * alpha;  // standardized scale
    for (Eigen::Index b = 0; b < M.cols(); ++b)
        M.col(b) = M.col(b).array() * band_sd(b) + band_mean(b);
    return M;
}

VectorXd EmulatorState::predict_sd(const MatrixXd& Xq) const {
    MatrixXd Kq = gram(kernel, Xq, train_inputs);
    MatrixXd V = llt.solve(Kq.transpose());
    VectorXd out(Xq.rows());
    const double mean_band_sd = band_sd.mean();
    for (Eigen::Index i = 0; i < Xq.rows(); ++i) {
        const double rel = std::max(kernel.signal_variance - Kq.row(i).dot(V.col(i)), 0.0);
        out(i) = mean_band_sd * std::sqrt(rel);
    }
    return out;
}

double acquisition_value(const EmulatorState& s, const AcquisitionConfig& cfg,
                         const VectorXd& x) {
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < s.train_inputs.rows(); ++i)
        dmin = std::min(dmin, (s.train_inputs.row(i).transpose() - x).norm());
    if (dmin == 0.0) return 0.0;
    const double sd = s.predict_sd(x.transpose())(0);
    return sd * std::pow(dmin, cfg.beta);
}

VectorXd select_next(const EmulatorState& s, const AcquisitionConfig& cfg,
                     RngStream& rng) {
    const MatrixXd box = cause_box();
    for (int attempt = 0; attempt < 2; ++attempt) {
        MatrixXd cand(cfg.candidate_pool, 2);
        for (int i = 0; i < cfg.candidate_pool; ++i)
            for (int d = 0; d < 2; ++d)
                cand(i, d) = rng.uniform(box(d, 0), box(d, 1));
        // batched acquisition: sd for the whole pool at once
        VectorXd sd = s.predict_sd(cand);
        int best = -1;
        double best_val = 0.0;
        for (int i = 0; i < cfg.candidate_pool; ++i) {
            double dmin = std::numeric_limits<double>::infinity();
            for (Eigen::Index r = 0; r < s.train_inputs.rows(); ++r)
                dmin = std::min(dmin,
                                (s.train_inputs.row(r) - cand.row(i)).norm());
            const double v = dmin > 1e-9 ? sd(i) * std::pow(dmin, cfg.beta) : 0.0;
            if (v > best_val) {
                best_val = v;
                best = i;
            }
        }
        if (best >= 0) return cand.row(best).transpose();
    }
    throw FitError("select_next: no informative candidate");
}

MatrixXd lhs_sample(int n, const MatrixXd& box, RngStream& rng) {
    if (n < 1) throw InputError("lhs_sample: n must be >= 1");
    const int d = static_cast<int>(box.rows());
    MatrixXd X(n, d);
    for (int j = 0; j < d; ++j) {
        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        for (int i = n - 1; i > 0; --i)
            std::swap(perm[i], perm[rng.uniform_int(i + 1)]);
        const double w = (box(j, 1) - box(j, 0)) / n;
        for (int i = 0; i < n; ++i)
            X(i, j) = box(j, 0) + (perm[i] + rng.uniform()) * w;
    }
    return X;
}

namespace {

MatrixXd query_rtm(const SyntheticRtm& rtm, const MatrixXd& X) {
    MatrixXd Y(X.rows(), rtm.n_bands);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        Y.row(i) = rtm.forward(X(i, 0), X(i, 1)).transpose();
    return Y;
}

double grid_rmse(const EmulatorState& s, const MatrixXd& eval_inputs,
                 const MatrixXd& eval_truth) {
    MatrixXd pred = s.predict_mean(eval_inputs);
    return std::sqrt((pred - eval_truth).squaredNorm() /
                     static_cast<double>(eval_truth.size()));
}

}  // namespace

void make_eval_grid(const SyntheticRtm& rtm, int side, MatrixXd& inputs, MatrixXd& truth) {
    const MatrixXd box = cause_box();
    inputs.resize(side * side, 2);
    int r = 0;
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j, ++r) {
            inputs(r, 0) = box(0, 0) + (box(0, 1) - box(0, 0)) * i / (side - 1.0);
            inputs(r, 1) = box(1, 0) + (box(1, 1) - box(1, 0)) * j / (side - 1.0);
        }
    truth = query_rtm(rtm, inputs);
}

std::vector<RmseCurvePoint> run_active_loop(const SyntheticRtm& rtm,
                                            const AcquisitionConfig& cfg, int init_n,
                                            const MatrixXd& eval_inputs,
                                            const MatrixXd& eval_truth, RngStream& rng) {
    if (init_n < 4) throw InputError("run_active_loop: init_n must be >= 4");
    EmulatorState s;
    s.train_inputs = lhs_sample(init_n, cause_box(), rng);
    s.train_outputs = query_rtm(rtm, s.train_inputs);

    std::vector<RmseCurvePoint> curve;
    while (true) {
        s.refit(s.iteration == 0 ? 120 : 25);
        const double rmse = grid_rmse(s, eval_inputs, eval_truth);
        const int n = static_cast<int>(s.train_inputs.rows());
        curve.push_back({n, rmse});
        if (n >= cfg.max_points) break;
        if (cfg.stop_rmse > 0.0 && rmse <= cfg.stop_rmse) break;
        const VectorXd x = select_next(s, cfg, rng);
        s.train_inputs.conservativeResize(n + 1, 2);
        s.train_inputs.row(n) = x.transpose();
        s.train_outputs.conservativeResize(n + 1, rtm.n_bands);
        s.train_outputs.row(n) = rtm.forward(x(0), x(1)).transpose();
        ++s.iteration;
    }
    return curve;
}

std::vector<RmseCurvePoint> run_baseline_curve(const SyntheticRtm& rtm,
                                               SamplingMethod method, int init_n,
                                               int max_points,
                                               const MatrixXd& eval_inputs,
                                               const MatrixXd& eval_truth,
                                               RngStream& rng) {
    const MatrixXd box = cause_box();
    std::vector<RmseCurvePoint> curve;
    for (int n = init_n; n <= max_points; ++n) {
        RngStream sub = rng.substream(static_cast<std::uint64_t>(n));
        EmulatorState s;
        if (method == SamplingMethod::Lhs) {
            s.train_inputs = lhs_sample(n, box, sub);
        } else {
            s.train_inputs.resize(n, 2);
            for (int i = 0; i < n; ++i)
                for (int d = 0; d < 2; ++d)
                    s.train_inputs(i, d) = sub.uniform(box(d, 0), box(d, 1));
        }
        s.train_outputs = query_rtm(rtm, s.train_inputs);
        s.refit(60);
        curve.push_back({n, grid_rmse(s, eval_inputs, eval_truth)});
    }
    return curve;
}

}  // namespace physml
