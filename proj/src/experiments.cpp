#include "physml/experiments.hpp"

#include "physml/discovery.hpp"
#include "physml/distmatch.hpp"
#include "physml/emulator.hpp"
#include "physml/fkl.hpp"
#include "physml/fuss.hpp"
#include "physml/jgp.hpp"
#include "physml/lfm.hpp"
#include "physml/optim.hpp"
#include "physml/prior.hpp"
#include "physml/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace physml {

namespace {

namespace fs = std::filesystem;

using Row = std::vector<std::string>;

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

std::string fmt(double v) { return csv_double(v); }

void maybe_write(const std::string& out_dir, const std::string& file,
                 const std::string& header, const std::vector<Row>& rows) {
    if (out_dir.empty()) return;
    fs::create_directories(out_dir);
    csv_write((fs::path(out_dir) / file).string(), header, rows);
}

// worst-case ratio of deviation to tolerance, aggregated across sub-checks
struct MarginTracker {
    double worst = 0.0;
    std::vector<Row> rows;

    void add(const std::string& check, double err, double tol) {
        worst = std::max(worst, err / tol);
        rows.push_back({check, fmt(err), fmt(tol)});
    }
};

// ---------------------------------------------------------------------------
// Criterion 1: oracle suite

// composite Simpson on [0, hi]
template <typename F>
double simpson(F f, double hi, int panels) {
    if (hi <= 0.0) return 0.0;
    const double h = hi / (2 * panels);
    double s = f(0.0) + f(hi);
    for (int i = 1; i < 2 * panels; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double lfm_cross_cov_quadrature(const LfmParams& p, int d, int d2, double t,
                                double t2) {
    double total = 0.0;
    for (int r = 0; r < p.n_latents; ++r) {
        const double ell = p.latent_lengthscales(r);
        auto outer = [&](double u) {
            auto inner = [&](double v) {
                const double dt = u - v;
                return std::exp(-p.gamma(d2) * (t2 - v) - dt * dt / (ell * ell));
            };
            return std::exp(-p.gamma(d) * (t - u)) * simpson(inner, t2, 240);
        };
        total += p.sens(d, r) * p.sens(d2, r) * simpson(outer, t, 240);
    }
    return total;
}

double lfm_latent_cross_cov_quadrature(const LfmParams& p, int d, int r, double t,
                                       double s) {
    const double ell = p.latent_lengthscales(r);
    auto f = [&](double v) {
        const double dv = v - s;
        return std::exp(-p.gamma(d) * (t - v) - dv * dv / (ell * ell));
    };
    return p.sens(d, r) * simpson(f, t, 2000);
}

LfmParams random_lfm_params(RngStream& rng, int D, int R) {
    LfmParams p;
    p.n_outputs = D;
    p.n_latents = R;
    p.gamma = VectorXd(D);
    p.noise = VectorXd(D);
    p.sens = MatrixXd(D, R);
    p.latent_lengthscales = VectorXd(R);
    for (int d = 0; d < D; ++d) {
        p.gamma(d) = rng.uniform(0.05, 2.0);
        p.noise(d) = rng.uniform(1e-4, 1e-2);
        for (int r = 0; r < R; ++r) p.sens(d, r) = rng.uniform(-2.0, 2.0);
    }
    for (int r = 0; r < R; ++r) p.latent_lengthscales(r) = rng.uniform(0.3, 5.0);
    return p;
}

}  // namespace

CriterionResult run_oracle_suite(std::uint64_t seed, const std::string& out_dir) {
    const double t_start = now_seconds();
    MarginTracker m;

    // LOO identity vs per-point refit, n = 15
    {
        RngStream rng(seed, 11);
        const int n = 15;
        MatrixXd X(n, 2);
        VectorXd y(n);
        for (int i = 0; i < n; ++i) {
            X(i, 0) = rng.uniform(-2.0, 2.0);
            X(i, 1) = rng.uniform(-2.0, 2.0);
            y(i) = std::sin(X(i, 0)) + 0.3 * X(i, 1) + 0.05 * rng.normal();
        }
        KernelConfig k;
        k.lengthscales = VectorXd::Constant(2, 0.8);
        k.signal_variance = 1.0;
        MatrixXd K = gram(k, X);
        VectorXd noise = VectorXd::Constant(n, 0.1);
        LooResult loo = loo_predictive(K, noise, y);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            MatrixXd Ci(n - 1, n - 1);
            VectorXd ki(n - 1), yi(n - 1);
            int a = 0;
            for (int r = 0; r < n; ++r) {
                if (r == i) continue;
                int b = 0;
                for (int c = 0; c < n; ++c) {
                    if (c == i) continue;
                    Ci(a, b) = K(r, c) + (r == c ? noise(r) : 0.0);
                    ++b;
                }
                ki(a) = K(i, r);
                yi(a) = y(r);
                ++a;
            }
            const VectorXd w = Ci.ldlt().solve(ki);
            err = std::max(err, std::abs(loo.means(i) - w.dot(yi)));
            err = std::max(err,
                           std::abs(loo.variances(i) -
                                    (K(i, i) + noise(i) - w.dot(ki))));
        }
        m.add("loo_vs_refit", err, 1e-8);
    }

    // STLSQ with threshold 0 vs dense least squares
    {
        RngStream rng(seed, 12);
        MatrixXd Theta(60, 6), Xdot(60, 2);
        for (int i = 0; i < 60; ++i) {
            for (int j = 0; j < 6; ++j) Theta(i, j) = rng.normal();
            for (int j = 0; j < 2; ++j) Xdot(i, j) = rng.normal();
        }
        StlsqResult r = stlsq(Theta, Xdot, 0.0, 0.0);
        MatrixXd dense = Theta.colPivHouseholderQr().solve(Xdot);
        m.add("stlsq_threshold0_vs_dense_ls", (r.xi - dense).cwiseAbs().maxCoeff(),
              1e-8);
    }

    // LFM closed forms vs quadrature, 200 draws total
    {
        RngStream rng(seed, 13);
        double err = 0.0;
        for (int rep = 0; rep < 120; ++rep) {
            LfmParams p = random_lfm_params(rng, 2, 2);
            const int d = rng.uniform_int(2);
            const int d2 = rng.uniform_int(2);
            const double t = rng.uniform(0.0, 10.0);
            const double t2 = rng.uniform(0.0, 10.0);
            err = std::max(err, std::abs(lfm_cross_cov(p, d, d2, t, t2) -
                                         lfm_cross_cov_quadrature(p, d, d2, t, t2)));
        }
        for (int rep = 0; rep < 80; ++rep) {
            LfmParams p = random_lfm_params(rng, 2, 2);
            const int d = rng.uniform_int(2);
            const int r = rng.uniform_int(2);
            const double t = rng.uniform(0.0, 10.0);
            const double s = rng.uniform(-2.0, 12.0);
            err = std::max(err,
                           std::abs(lfm_latent_cross_cov(p, d, r, t, s) -
                                    lfm_latent_cross_cov_quadrature(p, d, r, t, s)));
        }
        m.add("lfm_kernels_vs_quadrature", err, 1e-6);
    }

    // linear-forward posterior sampler vs the conjugate-Gaussian oracle
    {
        MatrixXd A(3, 2);
        A << 1.0, 0.5, -0.3, 1.0, 0.2, 0.2;
        ObservationModel om;
        om.forward = [A](const VectorXd& c) -> VectorXd { return A * c; };
        om.cause_box = MatrixXd(2, 2);
        om.cause_box << -50.0, 50.0, -50.0, 50.0;
        om.sigma = 0.3;
        om.d_e = 3;
        om.d_c = 2;
        CausePrior prior;
        prior.m = VectorXd(2);
        prior.m << 1.0, -1.0;
        prior.S = MatrixXd(2, 2);
        prior.S << 1.0, 0.3, 0.3, 0.8;
        VectorXd e(3);
        e << 0.7, -0.2, 0.4;

        const double s2 = om.sigma * om.sigma;
        MatrixXd Sinv = prior.S.inverse();
        MatrixXd cov = (A.transpose() * A / s2 + Sinv).inverse();
        VectorXd mu = cov * (A.transpose() * e / s2 + Sinv * prior.m);

        RngStream rng(seed, 14);
        const int K = 20000;
        PosteriorSamples ps = sample_posterior(e, om, prior, K, 500, rng);
        const int n_batch = 20, batch = K / n_batch;
        double worst = 0.0;
        for (int j = 0; j < 2; ++j) {
            VectorXd bm(n_batch);
            for (int b = 0; b < n_batch; ++b)
                bm(b) = ps.draws.col(j).segment(b * batch, batch).mean();
            const double se = std::sqrt((bm.array() - bm.mean()).square().sum() /
                                        (n_batch - 1) / n_batch);
            worst = std::max(worst,
                             std::abs(ps.draws.col(j).mean() - mu(j)) / (3.0 * se));
        }
        m.add("posterior_vs_conjugate_3se", worst, 1.0);
    }

    // grid proposal: unit mass and inverse-CDF round trip
    {
        LogTarget g;
        g.f = [](double x) {
            const double z = (x - 0.7) / 0.8;
            return -0.5 * z * z;
        };
        GridProposal p = fuss_build(g, -5.0, 5.0, 512);
        double mass = 0.0;
        for (Eigen::Index i = 0; i + 1 < p.nodes.size(); ++i)
            mass += 0.5 * (p.density(i) + p.density(i + 1)) *
                    (p.nodes(i + 1) - p.nodes(i));
        double err = std::abs(mass - 1.0);
        for (int kk = 0; kk <= 1000; ++kk) {
            const double u = kk / 1000.0;
            err = std::max(err, std::abs(p.cdf(p.inverse_cdf(u)) - u));
        }
        m.add("grid_proposal_roundtrip", err, 1e-10);
    }

    CriterionResult r;
    r.id = 1;
    r.name = "oracle_suite";
    r.value = m.worst;
    r.threshold = 1.0;
    r.pass = m.worst <= 1.0;
    r.seconds = now_seconds() - t_start;
    r.detail = "worst deviation/tolerance ratio across 5 oracle checks";
    maybe_write(out_dir, "oracle_suite.csv", "check,deviation,tolerance", m.rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 2: JGP benchmark ordering

CriterionResult run_jgp_benchmark_experiment(std::uint64_t seed,
                                             const std::string& out_dir) {
    const double t_start = now_seconds();
    const int n_seeds = 20;
    std::vector<std::string> methods = {"GP_R", "GP_S", "GP_R+S", "JGP"};
    VectorXd mean_rmse = VectorXd::Zero(4);
    std::vector<Row> rows;
    for (int s = 0; s < n_seeds; ++s) {
        RngStream rng(seed, 20 + static_cast<std::uint64_t>(s));
        BiasedLaiData data = make_biased_lai_dataset(rng, 40, 80);
        std::vector<RmseRow> table =
            jgp_benchmark(data.real, data.sim, data.test, 1000, seed * 100 + s);
        for (int j = 0; j < 4; ++j) {
            mean_rmse(j) += table[j].rmse / n_seeds;
            rows.push_back({std::to_string(s), table[j].method, fmt(table[j].rmse)});
        }
    }
    for (int j = 0; j < 4; ++j)
        rows.push_back({"mean", methods[j], fmt(mean_rmse(j))});

    const double jgp = mean_rmse(3), gp_r = mean_rmse(0), gp_rs = mean_rmse(2);
    CriterionResult r;
    r.id = 2;
    r.name = "jgp_ordering";
    r.value = jgp / gp_r;
    r.threshold = 1.0;
    r.pass = jgp < gp_r && jgp <= 1.02 * gp_rs;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "mean RMSE over " << n_seeds << " seeds: JGP " << jgp << " vs GP_R " << gp_r
      << ", GP_R+S " << gp_rs;
    r.detail = d.str();
    maybe_write(out_dir, "jgp_rmse_table.csv", "seed,method,rmse", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 3: distribution matching ordering

namespace {

double r_squared(const VectorXd& pred, const VectorXd& truth) {
    const double ss_res = (pred - truth).squaredNorm();
    const double ss_tot = (truth.array() - truth.mean()).square().sum();
    return 1.0 - ss_res / ss_tot;
}

}  // namespace

CriterionResult run_distmatch_experiment(std::uint64_t seed,
                                         const std::string& out_dir) {
    const double t_start = now_seconds();
    const int n_seeds = 20;
    int ordered = 0, mmd_drops = 0;
    std::vector<Row> rows;
    for (int s = 0; s < n_seeds; ++s) {
        RngStream rng(seed, 40 + static_cast<std::uint64_t>(s));
        BiasedLaiData data = make_biased_lai_dataset(rng, 40, 80);

        KernelConfig kin;
        MatrixXd pooled(data.real.inputs.rows() + data.sim.inputs.rows(),
                        data.real.inputs.cols());
        pooled << data.real.inputs, data.sim.inputs;
        kin.lengthscales =
            VectorXd::Constant(pooled.cols(), median_heuristic(pooled));
        kin.signal_variance = 1.0;
        VectorXd pooled_y(data.real.targets.size() + data.sim.targets.size());
        pooled_y << data.real.targets, data.sim.targets;
        KernelConfig kout = output_kernel(pooled_y);
        const VectorXd& ref = data.sim.targets;

        MmdKrrModel m_r = mmdkrr_fit(data.real, data.sim, ref, 1.0, 0.0, 0.0, kin,
                                     kout, 200, 1e-4);
        MmdKrrModel m_rs = mmdkrr_fit(data.real, data.sim, ref, 1.0, 1.0, 0.0, kin,
                                      kout, 200, 1e-4);
        MmdKrrModel m_mmd = mmdkrr_fit(data.real, data.sim, ref, 1.0, 1.0, 200.0,
                                       kin, kout, 600, 1e-4);

        const double r2_r = r_squared(m_r.predict(data.test.inputs), data.test.targets);
        const double r2_rs =
            r_squared(m_rs.predict(data.test.inputs), data.test.targets);
        const double r2_mmd =
            r_squared(m_mmd.predict(data.test.inputs), data.test.targets);
        // distribution match is scored where the penalty acts: predictions
        // over the pooled training inputs vs the reference sample
        const double d_rs = mmd(m_rs.predict(m_rs.train_inputs), ref, kout).value;
        const double d_mmd = mmd(m_mmd.predict(m_mmd.train_inputs), ref, kout).value;

        if (r2_mmd >= r2_rs && r2_rs >= r2_r) ++ordered;
        if (d_mmd < d_rs) ++mmd_drops;
        rows.push_back({std::to_string(s), fmt(r2_r), fmt(r2_rs), fmt(r2_mmd),
                        fmt(d_rs), fmt(d_mmd)});
    }

    CriterionResult r;
    r.id = 3;
    r.name = "distmatch_ordering";
    r.value = 1.0 - ordered / static_cast<double>(n_seeds);
    r.threshold = 0.2;
    r.pass = ordered >= 16 && mmd_drops == n_seeds;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "R2 ordering MMD>=R+S>=R in " << ordered << "/" << n_seeds
      << " seeds; MMD-to-reference decreased in " << mmd_drops << "/" << n_seeds;
    r.detail = d.str();
    maybe_write(out_dir, "distmatch_ordering.csv",
                "seed,r2_real,r2_real_sim,r2_mmd,mmd_nu0,mmd_nu", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 4: FKL model ranking

CriterionResult run_fkl_ranking_experiment(std::uint64_t seed,
                                           const std::string& out_dir) {
    const double t_start = now_seconds();
    const int n_seeds = 20, n_train = 40, n_test = 200, generator = 3;
    const double noise_sd = 0.5, ridge = 15.0;
    const std::vector<double> fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};

    int generator_wins = 0, dep_improves = 0;
    std::vector<Row> rows;
    for (int s = 0; s < n_seeds; ++s) {
        RngStream rng(seed, 60 + static_cast<std::uint64_t>(s));
        Dataset train, test;
        train.inputs.resize(n_train, 1);
        train.targets.resize(n_train);
        test.inputs.resize(n_test, 1);
        test.targets.resize(n_test);
        std::vector<VectorXd> sens_train(4), sens_test(4);
        for (int j = 0; j < 4; ++j) {
            sens_train[j].resize(n_train);
            sens_test[j].resize(n_test);
        }
        auto fill = [&](Dataset& d, std::vector<VectorXd>& sens, int n) {
            for (int i = 0; i < n; ++i) {
                const double ratio = rng.uniform(0.3, 3.0);
                d.inputs(i, 0) = ratio;
                const VectorXd mdl = ocean_color_models(ratio);
                for (int j = 0; j < 4; ++j) sens[j](i) = mdl(j);
                d.targets(i) = mdl(generator) + noise_sd * rng.normal();
            }
            d.provenance.assign(static_cast<size_t>(n), Provenance::Real);
        };
        fill(train, sens_train, n_train);
        fill(test, sens_test, n_test);

        KernelConfig kin;
        kin.lengthscales = VectorXd::Constant(1, median_heuristic(train.inputs));
        kin.signal_variance = 1.0;

        std::vector<ConsistencyRow> curve = fkl_consistency_curve(
            train, test, sens_train, sens_test, fractions, ridge, kin);

        VectorXd best = VectorXd::Constant(4, 1e300);
        VectorXd at_zero = VectorXd::Constant(4, 1e300);
        VectorXd best_pos = VectorXd::Constant(4, 1e300);
        for (const ConsistencyRow& row : curve) {
            const int j = row.model - 1;
            best(j) = std::min(best(j), row.rmse);
            if (row.dep_weight == 0.0) at_zero(j) = row.rmse;
            else best_pos(j) = std::min(best_pos(j), row.rmse);
            rows.push_back({std::to_string(s), std::to_string(row.model),
                            fmt(row.dep_weight), fmt(row.rmse), fmt(row.hsic)});
        }
        int winner = 0;
        best.minCoeff(&winner);
        if (winner == generator) ++generator_wins;
        if (best_pos(generator) < at_zero(generator)) ++dep_improves;
    }

    CriterionResult r;
    r.id = 4;
    r.name = "fkl_model_ranking";
    r.value = 1.0 - std::min(generator_wins, dep_improves) /
                        static_cast<double>(n_seeds);
    r.threshold = 0.2;
    r.pass = generator_wins >= 16 && dep_improves >= 16;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "generating model lowest min-RMSE in " << generator_wins << "/" << n_seeds
      << " seeds; dependence reward improved RMSE in " << dep_improves << "/"
      << n_seeds;
    r.detail = d.str();
    maybe_write(out_dir, "fkl_consistency_curves.csv",
                "seed,model,dep_weight,rmse,hsic", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 5: active emulation points-to-target

CriterionResult run_emulation_experiment(std::uint64_t seed,
                                         const std::string& out_dir, int runs) {
    const double t_start = now_seconds();
    SyntheticRtm rtm;
    MatrixXd eval_inputs, eval_truth;
    make_eval_grid(rtm, 70, eval_inputs, eval_truth);

    const int init_n = 8, max_points = 60;
    const int n_counts = max_points - init_n + 1;
    MatrixXd mean_curves = MatrixXd::Zero(n_counts, 3);   // amogape, lhs, random
    std::vector<Row> rows;

    for (int run = 0; run < runs; ++run) {
        AcquisitionConfig cfg;
        cfg.max_points = max_points;
        RngStream r_a(seed, 80 + 3 * static_cast<std::uint64_t>(run));
        std::vector<RmseCurvePoint> amo =
            run_active_loop(rtm, cfg, init_n, eval_inputs, eval_truth, r_a);
        RngStream r_l(seed, 81 + 3 * static_cast<std::uint64_t>(run));
        std::vector<RmseCurvePoint> lhs = run_baseline_curve(
            rtm, SamplingMethod::Lhs, init_n, max_points, eval_inputs, eval_truth, r_l);
        RngStream r_r(seed, 82 + 3 * static_cast<std::uint64_t>(run));
        std::vector<RmseCurvePoint> rnd =
            run_baseline_curve(rtm, SamplingMethod::Random, init_n, max_points,
                               eval_inputs, eval_truth, r_r);
        const char* names[3] = {"AMOGAPE", "LHS", "Random"};
        const std::vector<RmseCurvePoint>* curves[3] = {&amo, &lhs, &rnd};
        for (int c = 0; c < 3; ++c)
            for (const RmseCurvePoint& p : *curves[c]) {
                mean_curves(p.n_points - init_n, c) += p.rmse / runs;
                rows.push_back({names[c], std::to_string(run),
                                std::to_string(p.n_points), fmt(p.rmse)});
            }
    }

    // running minimum removes transient refit wobble before thresholding
    for (int c = 0; c < 3; ++c)
        for (int i = 1; i < n_counts; ++i)
            mean_curves(i, c) = std::min(mean_curves(i, c), mean_curves(i - 1, c));
    const double target = mean_curves(n_counts - 1, 2);   // Random's final RMSE
    int points[3];
    for (int c = 0; c < 3; ++c) {
        points[c] = max_points;
        for (int i = 0; i < n_counts; ++i)
            if (mean_curves(i, c) <= target) {
                points[c] = init_n + i;
                break;
            }
    }

    CriterionResult r;
    r.id = 5;
    r.name = "emulation_points_to_target";
    r.value = points[0] / static_cast<double>(points[2]);
    r.threshold = 0.9;
    r.pass = points[0] <= points[1] && points[1] <= points[2] &&
             points[0] <= 0.9 * points[2];
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "points to Random's final RMSE (" << target << "): AMOGAPE " << points[0]
      << ", LHS " << points[1] << ", Random " << points[2] << " over " << runs
      << " runs";
    r.detail = d.str();
    maybe_write(out_dir, "rmse_curves.csv", "method,run,n_points,rmse", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 6: prior recovery by MC-EM

CriterionResult run_prior_recovery_experiment(std::uint64_t seed,
                                              const std::string& out_dir) {
    const double t_start = now_seconds();
    SyntheticRtm rtm;
    ObservationModel om = ObservationModel::from_rtm(rtm, 0.02);

    CausePrior truth;
    truth.m = VectorXd(2);
    truth.m << 35.0, 4.0;
    truth.S = MatrixXd(2, 2);
    truth.S << 50.0, 4.0, 4.0, 1.2;

    const int J = 200, K = 200, iters = 30;
    RngStream gen(seed, 120);
    Eigen::LLT<MatrixXd> llt(truth.S);
    MatrixXd effects(J, om.d_e);
    for (int j = 0; j < J; ++j) {
        VectorXd c(2);
        for (;;) {
            VectorXd z(2);
            z << gen.normal(), gen.normal();
            c = truth.m + llt.matrixL() * z;
            if (c(0) >= 0.0 && c(0) <= SyntheticRtm::kChlMax && c(1) >= 0.0 &&
                c(1) <= SyntheticRtm::kLaiMax)
                break;
        }
        VectorXd e = om.forward(c);
        for (int i = 0; i < om.d_e; ++i) e(i) += om.sigma * gen.normal();
        effects.row(j) = e.transpose();
    }

    CausePrior init;
    init.m = VectorXd(2);
    init.m << 40.0, 5.0;
    init.S = MatrixXd(2, 2);
    init.S << 400.0, 0.0, 0.0, 6.25;

    RngStream rng(seed, 121);
    McemTrace trace;
    CausePrior fit = mcem_fit(effects, om, init, iters, K, rng, &trace);

    const double err_chl = std::abs(fit.m(0) - truth.m(0)) / (0.05 * 80.0);
    const double err_lai = std::abs(fit.m(1) - truth.m(1)) / (0.05 * 10.0);
    const double err_S = (fit.S - truth.S).norm() / (0.2 * truth.S.norm());
    const double worst = std::max({err_chl, err_lai, err_S});

    std::vector<Row> rows;
    for (size_t it = 0; it < trace.iterates.size(); ++it) {
        const CausePrior& p = trace.iterates[it];
        rows.push_back({std::to_string(it + 1), fmt(p.m(0)), fmt(p.m(1)),
                        fmt(p.S(0, 0)), fmt(p.S(0, 1)), fmt(p.S(1, 1))});
    }

    CriterionResult r;
    r.id = 6;
    r.name = "prior_recovery";
    r.value = worst;
    r.threshold = 1.0;
    r.pass = worst <= 1.0;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "m = (" << fit.m(0) << ", " << fit.m(1) << ") vs (35, 4); relative S error "
      << (fit.S - truth.S).norm() / truth.S.norm();
    r.detail = d.str();
    maybe_write(out_dir, "prior_trace.csv", "iter,m_1,m_2,S_11,S_12,S_22", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 7: LFM recovery, latent correlation, gap filling

namespace {

// small single-output RBF GP baseline, marginal-likelihood fit in log space
VectorXd gp1d_predict(const VectorXd& t, const VectorXd& y, const VectorXd& tq) {
    const double range = t.maxCoeff() - t.minCoeff();
    const double var = (y.array() - y.mean()).square().mean();
    auto nll = [&](const VectorXd& th) -> double {
        KernelConfig k;
        k.lengthscales = VectorXd::Constant(1, std::exp(th(0)));
        k.signal_variance = std::exp(th(1));
        const double noise = std::exp(th(2));
        MatrixXd T(t.size(), 1);
        T.col(0) = t;
        MatrixXd C = gram(k, T);
        C.diagonal().array() += noise + default_jitter(C);
        Eigen::LLT<MatrixXd> f(C);
        if (f.info() != Eigen::Success) return 1e300;
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < t.size(); ++i)
            logdet += std::log(f.matrixL()(i, i));
        VectorXd yc = y.array() - y.mean();
        return 0.5 * yc.dot(f.solve(yc)) + logdet;
    };
    VectorXd th0(3);
    th0 << std::log(range / 10.0), std::log(std::max(var, 1e-8)),
        std::log(std::max(0.1 * var, 1e-10));
    NelderMeadOptions opts;
    opts.max_evals = 300;
    OptimResult res = nelder_mead(nll, th0, opts);

    KernelConfig k;
    k.lengthscales = VectorXd::Constant(1, std::exp(res.x(0)));
    k.signal_variance = std::exp(res.x(1));
    MatrixXd T(t.size(), 1), Q(tq.size(), 1);
    T.col(0) = t;
    Q.col(0) = tq;
    MatrixXd C = gram(k, T);
    C.diagonal().array() += std::exp(res.x(2)) + default_jitter(C);
    VectorXd yc = y.array() - y.mean();
    VectorXd alpha = C.llt().solve(yc);
    return (gram(k, Q, T) * alpha).array() + y.mean();
}

}  // namespace

CriterionResult run_lfm_recovery_experiment(std::uint64_t seed,
                                            const std::string& out_dir) {
    const double t_start = now_seconds();
    LfmParams truth;
    truth.n_outputs = 3;
    truth.n_latents = 1;
    truth.gamma = VectorXd(3);
    truth.gamma << 1.0 / 5.0, 1.0 / 10.0, 1.0 / 20.0;
    truth.sens = MatrixXd(3, 1);
    truth.sens << 1.0, 1.2, 0.9;
    truth.latent_lengthscales = VectorXd::Constant(1, 3.0);
    truth.noise = VectorXd::Constant(3, 1e-3);

    std::vector<VectorXd> times(3);
    for (int d = 0; d < 3; ++d) {
        times[d] = VectorXd(40);
        for (int i = 0; i < 40; ++i) times[d](i) = 1.5 * (i + 1);
    }
    VectorXd grid(60);
    for (int i = 0; i < 60; ++i) grid(i) = i + 0.5;

    const int n_seeds = 20;
    int tau_ok = 0, corr_ok = 0, gap_wins = 0;
    double sum_lfm_gap = 0.0, sum_gp_gap = 0.0;
    std::vector<Row> rows;
    for (int s = 0; s < n_seeds; ++s) {
        RngStream sim_rng(seed, 140 + static_cast<std::uint64_t>(s));
        LfmSample sample = lfm_sample(truth, times, grid, sim_rng);

        RngStream fit_rng(seed, 160 + static_cast<std::uint64_t>(s));
        LfmParams fit = lfm_fit(sample.data, 1, 2000, fit_rng);
        int close = 0;
        for (int d = 0; d < 3; ++d)
            if (std::abs(fit.tau()(d) - truth.tau()(d)) <= 0.15 * truth.tau()(d))
                ++close;
        if (close == 3) ++tau_ok;

        // latent-force correlation (sign of sens vs force is unidentifiable,
        // so the absolute correlation is scored)
        std::vector<GpPosterior> lat = lfm_latent_posterior(fit, sample.data, grid);
        const VectorXd mc = lat[0].mean.array() - lat[0].mean.mean();
        const VectorXd tc =
            sample.latent_on_grid[0].array() - sample.latent_on_grid[0].mean();
        const double corr = std::abs(mc.dot(tc)) / (mc.norm() * tc.norm());
        if (corr >= 0.9) ++corr_ok;

        // gap filling: mask output 0 over t in (20, 40)
        MultiSeriesData gappy = sample.data;
        std::vector<int> kept, masked;
        for (int i = 0; i < 40; ++i)
            (times[0](i) > 20.0 && times[0](i) < 40.0 ? masked : kept).push_back(i);
        VectorXd tk(kept.size()), yk(kept.size()), tm(masked.size()), ym(masked.size());
        for (size_t i = 0; i < kept.size(); ++i) {
            tk(i) = times[0](kept[i]);
            yk(i) = sample.data.values[0](kept[i]);
        }
        for (size_t i = 0; i < masked.size(); ++i) {
            tm(i) = times[0](masked[i]);
            ym(i) = sample.data.values[0](masked[i]);
        }
        gappy.times[0] = tk;
        gappy.values[0] = yk;

        RngStream gap_rng(seed, 180 + static_cast<std::uint64_t>(s));
        LfmParams gap_fit = lfm_fit(gappy, 1, 2000, gap_rng);
        GpPosterior pg = lfm_predict(gap_fit, gappy, tm, 0);
        const double lfm_rmse =
            std::sqrt((pg.mean - ym).squaredNorm() / static_cast<double>(ym.size()));
        VectorXd gp_pred = gp1d_predict(tk, yk, tm);
        const double gp_rmse =
            std::sqrt((gp_pred - ym).squaredNorm() / static_cast<double>(ym.size()));
        sum_lfm_gap += lfm_rmse;
        sum_gp_gap += gp_rmse;
        if (lfm_rmse < gp_rmse) ++gap_wins;

        rows.push_back({std::to_string(s), fmt(fit.tau()(0)), fmt(fit.tau()(1)),
                        fmt(fit.tau()(2)), std::to_string(close), fmt(corr),
                        fmt(lfm_rmse), fmt(gp_rmse)});
    }

    CriterionResult r;
    r.id = 7;
    r.name = "lfm_recovery";
    r.value = 1.0 - tau_ok / static_cast<double>(n_seeds);
    r.threshold = 0.2;
    r.pass = tau_ok >= 16 && corr_ok >= 16 && sum_lfm_gap < sum_gp_gap;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "all taus within 15% in " << tau_ok << "/" << n_seeds
      << " seeds; latent correlation >= 0.9 in " << corr_ok << "/" << n_seeds
      << "; mean gap RMSE LFM " << sum_lfm_gap / n_seeds << " vs GP "
      << sum_gp_gap / n_seeds;
    r.detail = d.str();
    maybe_write(out_dir, "lfm_recovery.csv",
                "seed,tau_1,tau_2,tau_3,taus_within_15pct,latent_corr,gap_rmse_lfm,"
                "gap_rmse_gp",
                rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 8: ODE rediscovery

CriterionResult run_ode_rediscovery_experiment(std::uint64_t seed,
                                               const std::string& out_dir) {
    const double t_start = now_seconds();
    OdeSystem sys = mexico_system(0.3, 1e-3);
    VectorXd x0(2);
    x0 << -0.1, 0.1;
    MatrixXd clean = ode_simulate(sys, x0);
    TermLibrary lib = TermLibrary::make(2, 2);
    const MatrixXd& truth_xi = sys.rhs;

    SparseOdeModel model = discover(clean, sys.dt, lib, 5.0);
    bool support_ok = true;
    double coeff_err = 0.0;
    std::vector<Row> rows;
    for (int t = 0; t < lib.n_terms(); ++t)
        for (int d = 0; d < 2; ++d) {
            if ((truth_xi(t, d) == 0.0) != (model.xi(t, d) == 0.0)) support_ok = false;
            if (truth_xi(t, d) != 0.0)
                coeff_err = std::max(coeff_err,
                                     std::abs(model.xi(t, d) - truth_xi(t, d)) /
                                         std::abs(truth_xi(t, d)));
            rows.push_back({"clean", lib.term_name(t), std::to_string(d + 1),
                            fmt(model.xi(t, d)), fmt(truth_xi(t, d))});
        }

    const double sd = 0.01 * std::sqrt((clean.array() - clean.mean()).square().mean());
    int exact = 0;
    const int n_seeds = 20;
    for (int s = 0; s < n_seeds; ++s) {
        RngStream rng(seed, 200 + static_cast<std::uint64_t>(s));
        MatrixXd noisy = clean;
        for (Eigen::Index i = 0; i < noisy.rows(); ++i)
            for (int j = 0; j < 2; ++j) noisy(i, j) += sd * rng.normal();
        SparseOdeModel m = discover(noisy, sys.dt, lib, 5.0, 0.0, 7);
        bool ok = true;
        for (int t = 0; t < lib.n_terms(); ++t)
            for (int d = 0; d < 2; ++d)
                if ((truth_xi(t, d) == 0.0) != (m.xi(t, d) == 0.0)) ok = false;
        if (ok) ++exact;
        rows.push_back({"noise_seed_" + std::to_string(s), "support_exact", "",
                        std::to_string(ok ? 1 : 0), ""});
    }

    CriterionResult r;
    r.id = 8;
    r.name = "ode_rediscovery";
    r.value = coeff_err;
    r.threshold = 0.05;
    r.pass = support_ok && coeff_err <= 0.05 && exact >= 16;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "clean support " << (support_ok ? "exact" : "WRONG")
      << ", max relative coefficient error " << coeff_err << "; noisy support exact in "
      << exact << "/" << n_seeds << " seeds";
    r.detail = d.str();
    maybe_write(out_dir, "ode_rediscovery.csv", "run,term,dim,coefficient,truth", rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 9: sampler contrast on the logistic map

CriterionResult run_sampler_contrast_experiment(std::uint64_t seed,
                                                const std::string& out_dir,
                                                int trials) {
    const double t_start = now_seconds();
    LogisticMapParams truth;
    RngStream rng(seed, 220);
    // 2000 sweeps: FUSS is data-limited well before that, while the plain
    // random-walk chain is still mixing-limited, so the contrast is sharp
    std::vector<LogisticTrialRow> table =
        logistic_posterior_experiment(truth, 100, trials, rng, 2000, 200);

    double fuss_R = 0.0, fuss_O = 0.0, mh_R = 0.0, mh_O = 0.0;
    std::vector<Row> rows;
    for (const LogisticTrialRow& row : table) {
        if (row.method == "FUSS") {
            fuss_R += row.sq_err_R / trials;
            fuss_O += row.sq_err_Omega / trials;
        } else {
            mh_R += row.sq_err_R / trials;
            mh_O += row.sq_err_Omega / trials;
        }
        rows.push_back({row.method, std::to_string(row.trial), fmt(row.R_hat),
                        fmt(row.Omega_hat), fmt(row.sq_err_R), fmt(row.sq_err_Omega)});
    }
    const double fuss_mse = std::max(fuss_R, fuss_O);
    const bool contrast = mh_R >= 10.0 * fuss_R && mh_O >= 10.0 * fuss_O;

    // Fig.-style conditional slice at fixed R = 4
    RngStream slice_rng(seed, 221);
    LogisticMapParams sp = truth;
    VectorXd y;
    for (std::uint64_t attempt = 0;; ++attempt) {
        RngStream sim = slice_rng.substream(attempt);
        try {
            y = logistic_simulate(sp, sim);
            break;
        } catch (const DivergenceError&) {
            continue;
        }
    }
    ConditionalSlice slice = logistic_conditional_slice(y, 4.0, truth.lambda_noise);
    std::vector<Row> slice_rows;
    for (Eigen::Index i = 0; i < slice.x.size(); ++i)
        slice_rows.push_back({fmt(slice.x(i)), fmt(slice.log_conditional(i)),
                              fmt(slice.conditional(i))});

    CriterionResult r;
    r.id = 9;
    r.name = "sampler_contrast";
    r.value = fuss_mse;
    r.threshold = 1e-3;
    r.pass = fuss_mse <= 1e-3 && contrast;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << "FUSS MSE (R, Omega) = (" << fuss_R << ", " << fuss_O << "); PlainMH = ("
      << mh_R << ", " << mh_O << ") over " << trials << " trials";
    r.detail = d.str();
    maybe_write(out_dir, "sampler_estimates.csv",
                "method,trial,R_hat,Omega_hat,sq_err_R,sq_err_Omega", rows);
    maybe_write(out_dir, "conditional_slice.csv", "x,log_conditional,conditional",
                slice_rows);
    return r;
}

// ---------------------------------------------------------------------------
// Criterion 10: determinism of the artifact writers

namespace {

void write_determinism_bundle(std::uint64_t seed, const std::string& dir) {
    fs::create_directories(dir);

    // biased-LAI dataset export
    {
        RngStream rng(seed, 240);
        BiasedLaiData data = make_biased_lai_dataset(rng, 40, 80);
        std::vector<Row> rows;
        auto add = [&](const Dataset& d, const char* role) {
            for (Eigen::Index i = 0; i < d.rows(); ++i) {
                Row row = {role, d.provenance[static_cast<size_t>(i)] ==
                                     Provenance::Real
                               ? "real"
                               : "simulated"};
                for (Eigen::Index j = 0; j < d.dims(); ++j)
                    row.push_back(fmt(d.inputs(i, j)));
                row.push_back(fmt(d.targets(i)));
                rows.push_back(row);
            }
        };
        add(data.real, "train_real");
        add(data.sim, "train_sim");
        add(data.test, "test");
        std::string header = "role,provenance";
        for (int b = 1; b <= 8; ++b) header += ",band_" + std::to_string(b);
        header += ",lai";
        csv_write((fs::path(dir) / "biased_lai.csv").string(), header, rows);
    }

    // logistic series export
    {
        RngStream rng(seed, 241);
        LogisticMapParams p;
        VectorXd y = logistic_simulate(p, rng);
        std::vector<Row> rows;
        for (Eigen::Index t = 0; t < y.size(); ++t)
            rows.push_back({std::to_string(t + 1), fmt(y(t))});
        csv_write((fs::path(dir) / "logistic_series.csv").string(), "t,y_t", rows);
    }

    // clean rediscovery model + one FKL curve
    {
        OdeSystem sys = mexico_system(0.3, 1e-3);
        VectorXd x0(2);
        x0 << -0.1, 0.1;
        MatrixXd traj = ode_simulate(sys, x0);
        TermLibrary lib = TermLibrary::make(2, 2);
        SparseOdeModel model = discover(traj, sys.dt, lib, 5.0);
        std::vector<Row> rows;
        for (int t = 0; t < lib.n_terms(); ++t)
            rows.push_back({lib.term_name(t), fmt(model.xi(t, 0)),
                            fmt(model.xi(t, 1))});
        csv_write((fs::path(dir) / "discovered_model.csv").string(),
                  "term,coef_dim1,coef_dim2", rows);
    }
    {
        RngStream rng(seed, 242);
        Dataset train, test;
        train.inputs.resize(30, 1);
        train.targets.resize(30);
        test.inputs.resize(50, 1);
        test.targets.resize(50);
        std::vector<VectorXd> st(4), ste(4);
        for (int j = 0; j < 4; ++j) {
            st[j].resize(30);
            ste[j].resize(50);
        }
        auto fill = [&](Dataset& d, std::vector<VectorXd>& s, int n) {
            for (int i = 0; i < n; ++i) {
                const double ratio = rng.uniform(0.3, 3.0);
                d.inputs(i, 0) = ratio;
                VectorXd mdl = ocean_color_models(ratio);
                for (int j = 0; j < 4; ++j) s[j](i) = mdl(j);
                d.targets(i) = mdl(3) + 0.5 * rng.normal();
            }
            d.provenance.assign(static_cast<size_t>(n), Provenance::Real);
        };
        fill(train, st, 30);
        fill(test, ste, 50);
        KernelConfig kin;
        kin.lengthscales = VectorXd::Constant(1, median_heuristic(train.inputs));
        std::vector<ConsistencyRow> curve = fkl_consistency_curve(
            train, test, st, ste, {0.0, 0.2, 0.4}, 15.0, kin);
        std::vector<Row> rows;
        for (const ConsistencyRow& c : curve)
            rows.push_back({std::to_string(c.model), fmt(c.dep_weight), fmt(c.rmse),
                            fmt(c.hsic)});
        csv_write((fs::path(dir) / "fkl_curve.csv").string(),
                  "model,dep_weight,rmse,hsic", rows);
    }
}

bool files_identical(const fs::path& a, const fs::path& b) {
    std::ifstream fa(a, std::ios::binary), fb(b, std::ios::binary);
    if (!fa || !fb) return false;
    std::ostringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    return sa.str() == sb.str();
}

}  // namespace

CriterionResult run_determinism_check(std::uint64_t seed, const std::string& out_dir) {
    const double t_start = now_seconds();
    const fs::path base =
        out_dir.empty() ? fs::temp_directory_path() / "physml_determinism"
                        : fs::path(out_dir) / "determinism";
    const fs::path dir_a = base / "pass_a", dir_b = base / "pass_b";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    write_determinism_bundle(seed, dir_a.string());
    write_determinism_bundle(seed, dir_b.string());

    int checked = 0, identical = 0;
    std::vector<Row> rows;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const fs::path other = dir_b / entry.path().filename();
        const bool same = files_identical(entry.path(), other);
        ++checked;
        if (same) ++identical;
        rows.push_back({entry.path().filename().string(), same ? "identical" : "DIFFER"});
    }

    CriterionResult r;
    r.id = 10;
    r.name = "determinism";
    r.value = checked - identical;
    r.threshold = 0.0;
    r.pass = checked > 0 && identical == checked;
    r.seconds = now_seconds() - t_start;
    std::ostringstream d;
    d << identical << "/" << checked
      << " regenerated data files byte-identical across two passes";
    r.detail = d.str();
    maybe_write(out_dir, "determinism_check.csv", "file,status", rows);
    return r;
}

// ---------------------------------------------------------------------------

std::vector<CriterionResult> reproduce_all(std::uint64_t seed,
                                           const std::string& out_dir,
                                           int emulation_runs, int sampler_trials) {
    std::vector<CriterionResult> results;
    results.push_back(run_oracle_suite(seed, out_dir));
    results.push_back(run_jgp_benchmark_experiment(seed, out_dir));
    results.push_back(run_distmatch_experiment(seed, out_dir));
    results.push_back(run_fkl_ranking_experiment(seed, out_dir));
    results.push_back(run_emulation_experiment(seed, out_dir, emulation_runs));
    results.push_back(run_prior_recovery_experiment(seed, out_dir));
    results.push_back(run_lfm_recovery_experiment(seed, out_dir));
    results.push_back(run_ode_rediscovery_experiment(seed, out_dir));
    results.push_back(run_sampler_contrast_experiment(seed, out_dir, sampler_trials));
    results.push_back(run_determinism_check(seed, out_dir));

    if (!out_dir.empty()) {
        std::vector<Row> rows;
        for (const CriterionResult& r : results)
            rows.push_back({std::to_string(r.id), r.pass ? "pass" : "fail",
                            fmt(r.value), fmt(r.threshold), fmt(r.seconds)});
        csv_write((fs::path(out_dir) / "summary.csv").string(),
                  "id,status,value,threshold,seconds", rows);
    }
    return results;
}

// ---------------------------------------------------------------------------
// CSV utilities

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void csv_write(const std::string& path, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("csv_write: cannot open " + path);
    f << header << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) f << ",";
            f << row[i];
        }
        f << "\n";
    }
}

}  // namespace physml
