// Command-line experiment runner: one subcommand per method module, JSON
// configs with strict key checking, CSV outputs, and a reproduce-all driver.

#include "CLI11.hpp"
#include "json.hpp"

#include "physml/discovery.hpp"
#include "physml/distmatch.hpp"
#include "physml/emulator.hpp"
#include "physml/experiments.hpp"
#include "physml/fkl.hpp"
#include "physml/fuss.hpp"
#include "physml/jgp.hpp"
#include "physml/lfm.hpp"
#include "physml/prior.hpp"
#include "physml/synth.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace physml;

namespace {

constexpr const char* kVersion = "1.0.0";

using Row = std::vector<std::string>;

struct RunContext {
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string config_path;
    int threads = 1;

    json config;                                  // parsed config block
    std::vector<std::pair<std::string, double>> stages;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point stage_start;

    void begin_stage() { stage_start = std::chrono::steady_clock::now(); }
    void end_stage(const std::string& name) {
        stages.emplace_back(
            name, std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                stage_start)
                      .count());
    }

    std::string path(const std::string& file) {
        fs::create_directories(out_dir);
        outputs.push_back(file);
        return (fs::path(out_dir) / file).string();
    }
};

void load_config(RunContext& ctx, const std::vector<std::string>& allowed_keys) {
    if (ctx.config_path.empty()) {
        ctx.config = json::object();
        return;
    }
    std::ifstream f(ctx.config_path);
    if (!f) throw InputError("cannot open config file " + ctx.config_path);
    try {
        ctx.config = json::parse(f);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed config JSON: ") + e.what());
    }
    if (!ctx.config.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [key, value] : ctx.config.items()) {
        (void)value;
        if (std::find(allowed_keys.begin(), allowed_keys.end(), key) ==
            allowed_keys.end())
            throw InputError("unknown config key '" + key + "'");
    }
}

template <typename T>
T cfg(const RunContext& ctx, const std::string& key, T fallback) {
    if (ctx.config.contains(key)) return ctx.config.at(key).get<T>();
    return fallback;
}

// manifest written atomically last; reruns with equal config hash produce
// byte-identical data files (all randomness flows from the seed)
void write_manifest(RunContext& ctx, const std::string& command) {
    json manifest;
    manifest["command"] = command;
    manifest["toolkit_version"] = kVersion;
    manifest["seed"] = ctx.seed;
    manifest["config_hash"] =
        std::hash<std::string>{}(ctx.config.dump() + "#" + std::to_string(ctx.seed));
    json stages = json::array();
    for (const auto& [name, seconds] : ctx.stages)
        stages.push_back({{"stage", name}, {"seconds", seconds}});
    manifest["wall_time"] = stages;
    manifest["output_files"] = ctx.outputs;

    fs::create_directories(ctx.out_dir);
    const fs::path final_path = fs::path(ctx.out_dir) / "manifest.json";
    const fs::path tmp_path = fs::path(ctx.out_dir) / "manifest.json.tmp";
    {
        std::ofstream f(tmp_path, std::ios::binary);
        f << manifest.dump(2) << "\n";
    }
    fs::rename(tmp_path, final_path);
}

// ---------------------------------------------------------------------------
// synth export

void cmd_synth_export(RunContext& ctx) {
    load_config(ctx, {"n_real", "n_sim", "n_test", "logistic_T"});
    const int n_real = cfg(ctx, "n_real", 40);
    const int n_sim = cfg(ctx, "n_sim", 80);
    const int n_test = cfg(ctx, "n_test", 200);
    const int T = cfg(ctx, "logistic_T", 100);

    ctx.begin_stage();
    {
        RngStream rng(ctx.seed, 1);
        BiasedLaiData data = make_biased_lai_dataset(rng, n_real, n_sim, n_test);
        std::vector<Row> rows;
        auto add = [&](const Dataset& d, const char* role) {
            for (Eigen::Index i = 0; i < d.rows(); ++i) {
                Row row = {role,
                           d.provenance[static_cast<size_t>(i)] == Provenance::Real
                               ? "real"
                               : "simulated"};
                for (Eigen::Index j = 0; j < d.dims(); ++j)
                    row.push_back(csv_double(d.inputs(i, j)));
                row.push_back(csv_double(d.targets(i)));
                rows.push_back(row);
            }
        };
        add(data.real, "train_real");
        add(data.sim, "train_sim");
        add(data.test, "test");
        std::string header = "role,provenance";
        for (int b = 1; b <= 8; ++b) header += ",band_" + std::to_string(b);
        header += ",lai";
        csv_write(ctx.path("biased_lai.csv"), header, rows);
    }
    {
        RngStream rng(ctx.seed, 2);
        LogisticMapParams p;
        p.T = T;
        VectorXd y = logistic_simulate(p, rng);
        std::vector<Row> rows;
        for (Eigen::Index t = 0; t < y.size(); ++t)
            rows.push_back({std::to_string(t + 1), csv_double(y(t))});
        csv_write(ctx.path("logistic_series.csv"), "t,y_t", rows);
    }
    {
        std::vector<Row> rows;
        for (int i = 0; i <= 200; ++i) {
            const double ratio = 0.3 + (3.0 - 0.3) * i / 200.0;
            VectorXd m = ocean_color_models(ratio);
            rows.push_back({csv_double(ratio), csv_double(m(0)), csv_double(m(1)),
                            csv_double(m(2)), csv_double(m(3))});
        }
        csv_write(ctx.path("ocean_models.csv"),
                  "radiance_ratio,model_1,model_2,model_3,model_4", rows);
    }
    {
        OdeSystem sys = mexico_system(0.3, 1e-3);
        VectorXd x0(2);
        x0 << -0.1, 0.1;
        MatrixXd traj = ode_simulate(sys, x0);
        std::vector<Row> rows;
        for (Eigen::Index i = 0; i < traj.rows(); ++i)
            rows.push_back({csv_double(sys.t0 + i * sys.dt), csv_double(traj(i, 0)),
                            csv_double(traj(i, 1))});
        csv_write(ctx.path("ode_trajectory.csv"), "t,x1,x2", rows);
    }
    ctx.end_stage("export");
}

// ---------------------------------------------------------------------------
// jgp run

void cmd_jgp_run(RunContext& ctx) {
    load_config(ctx, {"n_real", "n_sim", "n_test", "opt_budget"});
    const int n_real = cfg(ctx, "n_real", 40);
    const int n_sim = cfg(ctx, "n_sim", 80);
    const int n_test = cfg(ctx, "n_test", 200);
    const int budget = cfg(ctx, "opt_budget", 1000);

    ctx.begin_stage();
    RngStream rng(ctx.seed, 1);
    BiasedLaiData data = make_biased_lai_dataset(rng, n_real, n_sim, n_test);
    std::vector<RmseRow> table =
        jgp_benchmark(data.real, data.sim, data.test, budget, ctx.seed);
    ctx.end_stage("benchmark");

    ctx.begin_stage();
    std::vector<Row> rows;
    for (const RmseRow& r : table) rows.push_back({r.method, csv_double(r.rmse)});
    csv_write(ctx.path("rmse_table.csv"), "method,rmse", rows);

    JgpModel model = jgp_fit(data.real, data.sim, budget, ctx.seed);
    GpPrediction pred = jgp_predict(model, data.test.inputs);
    std::vector<Row> prows;
    for (Eigen::Index i = 0; i < pred.mean.size(); ++i)
        prows.push_back({std::to_string(i), csv_double(pred.mean(i)),
                         csv_double(pred.variance(i)),
                         csv_double(data.test.targets(i))});
    csv_write(ctx.path("predictions.csv"), "row,mean,variance,target", prows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// distmatch run

void cmd_distmatch_run(RunContext& ctx) {
    load_config(ctx, {"n_real", "n_sim", "n_test", "nu", "lambda", "steps", "bins"});
    const int n_real = cfg(ctx, "n_real", 40);
    const int n_sim = cfg(ctx, "n_sim", 80);
    const int n_test = cfg(ctx, "n_test", 200);
    const double lambda = cfg(ctx, "lambda", 1.0);
    const double nu = cfg(ctx, "nu", 200.0);
    const int steps = cfg(ctx, "steps", 600);
    const int bins = cfg(ctx, "bins", 20);

    ctx.begin_stage();
    RngStream rng(ctx.seed, 1);
    BiasedLaiData data = make_biased_lai_dataset(rng, n_real, n_sim, n_test);
    KernelConfig kin;
    MatrixXd pooled(data.real.inputs.rows() + data.sim.inputs.rows(),
                    data.real.inputs.cols());
    pooled << data.real.inputs, data.sim.inputs;
    kin.lengthscales = VectorXd::Constant(pooled.cols(), median_heuristic(pooled));
    VectorXd pooled_y(data.real.targets.size() + data.sim.targets.size());
    pooled_y << data.real.targets, data.sim.targets;
    KernelConfig kout = output_kernel(pooled_y);
    const VectorXd& ref = data.sim.targets;

    MmdKrrModel m_r =
        mmdkrr_fit(data.real, data.sim, ref, 1.0, 0.0, 0.0, kin, kout, 200, 1e-4);
    MmdKrrModel m_rs =
        mmdkrr_fit(data.real, data.sim, ref, 1.0, lambda, 0.0, kin, kout, 200, 1e-4);
    MmdKrrModel m_mmd = mmdkrr_fit(data.real, data.sim, ref, 1.0, lambda, nu, kin,
                                   kout, steps, 1e-4);
    ctx.end_stage("fit");

    ctx.begin_stage();
    std::vector<Row> rows;
    auto metrics = [&](const char* name, const MmdKrrModel& m) {
        VectorXd p = m.predict(data.test.inputs);
        const VectorXd e = p - data.test.targets;
        const double rmse = std::sqrt(e.squaredNorm() / e.size());
        const double mae = e.cwiseAbs().mean();
        const double r2 =
            1.0 - e.squaredNorm() /
                      (data.test.targets.array() - data.test.targets.mean())
                          .square()
                          .sum();
        rows.push_back({name, csv_double(r2), csv_double(rmse), csv_double(mae)});
    };
    metrics("R", m_r);
    metrics("R+S", m_rs);
    metrics("R+S+MMD", m_mmd);
    csv_write(ctx.path("cv_table.csv"), "model,r2,rmse,mae", rows);

    // target-space histograms over the cause range
    const double lo = 0.0, hi = SyntheticRtm::kLaiMax;
    VectorXd p_krr = m_rs.predict(data.test.inputs);
    VectorXd p_mmd = m_mmd.predict(data.test.inputs);
    std::vector<Row> hrows;
    for (int b = 0; b < bins; ++b) {
        const double b_lo = lo + (hi - lo) * b / bins;
        const double b_hi = lo + (hi - lo) * (b + 1) / bins;
        auto count = [&](const VectorXd& v) {
            int c = 0;
            for (Eigen::Index i = 0; i < v.size(); ++i)
                if (v(i) >= b_lo && (v(i) < b_hi || (b == bins - 1 && v(i) <= b_hi)))
                    ++c;
            return c;
        };
        hrows.push_back({csv_double(0.5 * (b_lo + b_hi)),
                         std::to_string(count(data.test.targets)),
                         std::to_string(count(p_krr)),
                         std::to_string(count(p_mmd))});
    }
    csv_write(ctx.path("histograms.csv"),
              "bin,count_real,count_pred_krr,count_pred_mmd", hrows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// fkl curve

void cmd_fkl_curve(RunContext& ctx) {
    load_config(ctx, {"n_train", "n_test", "noise_sd", "ridge", "generator_model",
                      "fractions"});
    const int n_train = cfg(ctx, "n_train", 40);
    const int n_test = cfg(ctx, "n_test", 200);
    const double noise_sd = cfg(ctx, "noise_sd", 0.5);
    const double ridge = cfg(ctx, "ridge", 15.0);
    const int generator = cfg(ctx, "generator_model", 4) - 1;   // 1-based in config
    std::vector<double> fractions =
        cfg(ctx, "fractions",
            std::vector<double>{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7});
    if (generator < 0 || generator > 3)
        throw InputError("generator_model must be in 1..4");

    ctx.begin_stage();
    RngStream rng(ctx.seed, 1);
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
            VectorXd mdl = ocean_color_models(ratio);
            for (int j = 0; j < 4; ++j) sens[j](i) = mdl(j);
            d.targets(i) = mdl(generator) + noise_sd * rng.normal();
        }
        d.provenance.assign(static_cast<size_t>(n), Provenance::Real);
    };
    fill(train, sens_train, n_train);
    fill(test, sens_test, n_test);

    KernelConfig kin;
    kin.lengthscales = VectorXd::Constant(1, median_heuristic(train.inputs));
    std::vector<ConsistencyRow> curve = fkl_consistency_curve(
        train, test, sens_train, sens_test, fractions, ridge, kin);
    ctx.end_stage("curve");

    ctx.begin_stage();
    std::vector<Row> rows;
    for (const ConsistencyRow& c : curve)
        rows.push_back({std::to_string(c.model), csv_double(c.dep_weight),
                        csv_double(c.rmse), csv_double(c.hsic)});
    csv_write(ctx.path("consistency_curves.csv"), "model,dep_weight,rmse,hsic", rows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// prior fit

void cmd_prior_fit(RunContext& ctx) {
    load_config(ctx, {"n_obs", "n_samples", "iters", "sigma", "burn_in"});
    const int J = cfg(ctx, "n_obs", 200);
    const int K = cfg(ctx, "n_samples", 200);
    const int iters = cfg(ctx, "iters", 30);
    const double sigma = cfg(ctx, "sigma", 0.02);
    const int burn_in = cfg(ctx, "burn_in", 200);

    ctx.begin_stage();
    SyntheticRtm rtm;
    ObservationModel om = ObservationModel::from_rtm(rtm, sigma);
    CausePrior truth;
    truth.m = VectorXd(2);
    truth.m << 35.0, 4.0;
    truth.S = MatrixXd(2, 2);
    truth.S << 50.0, 4.0, 4.0, 1.2;

    RngStream gen(ctx.seed, 1);
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
        for (int i = 0; i < om.d_e; ++i) e(i) += sigma * gen.normal();
        effects.row(j) = e.transpose();
    }

    CausePrior init;
    init.m = VectorXd(2);
    init.m << 40.0, 5.0;
    init.S = MatrixXd(2, 2);
    init.S << 400.0, 0.0, 0.0, 6.25;

    RngStream rng(ctx.seed, 2);
    McemTrace trace;
    CausePrior fit = mcem_fit(effects, om, init, iters, K, rng, &trace, burn_in);
    ctx.end_stage("mcem");

    ctx.begin_stage();
    std::vector<Row> rows;
    for (size_t it = 0; it < trace.iterates.size(); ++it) {
        const CausePrior& p = trace.iterates[it];
        rows.push_back({std::to_string(it + 1), csv_double(p.m(0)),
                        csv_double(p.m(1)), csv_double(p.S(0, 0)),
                        csv_double(p.S(0, 1)), csv_double(p.S(1, 1))});
    }
    csv_write(ctx.path("prior_trace.csv"), "iter,m_1,m_2,S_11,S_12,S_22", rows);

    RngStream post_rng(ctx.seed, 3);
    PosteriorSamples ps =
        sample_posterior(effects.row(0).transpose(), om, fit, 2000, 500, post_rng);
    std::vector<Row> drows;
    for (Eigen::Index i = 0; i < ps.draws.rows(); ++i)
        drows.push_back({std::to_string(i), csv_double(ps.draws(i, 0)),
                         csv_double(ps.draws(i, 1))});
    csv_write(ctx.path("posterior_draws.csv"), "draw,chl,lai", drows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// lfm run

void cmd_lfm_run(RunContext& ctx) {
    load_config(ctx, {"opt_budget", "n_latents"});
    const int budget = cfg(ctx, "opt_budget", 2000);
    const int R = cfg(ctx, "n_latents", 1);

    ctx.begin_stage();
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
    VectorXd grid(120);
    for (int i = 0; i < 120; ++i) grid(i) = 0.5 * (i + 1);

    RngStream sim_rng(ctx.seed, 1);
    LfmSample sample = lfm_sample(truth, times, grid, sim_rng);
    RngStream fit_rng(ctx.seed, 2);
    LfmParams fit = lfm_fit(sample.data, R, budget, fit_rng);
    ctx.end_stage("fit");

    ctx.begin_stage();
    std::vector<Row> prows;
    for (int d = 0; d < 3; ++d) {
        GpPosterior post = lfm_predict(fit, sample.data, grid, d);
        std::map<double, double> observed;
        for (Eigen::Index i = 0; i < times[d].size(); ++i)
            observed[times[d](i)] = sample.data.values[d](i);
        for (Eigen::Index i = 0; i < grid.size(); ++i) {
            auto it = observed.find(grid(i));
            prows.push_back({std::to_string(d + 1), csv_double(grid(i)),
                             csv_double(post.mean(i)),
                             csv_double(std::sqrt(post.variance(i))),
                             it == observed.end() ? "" : csv_double(it->second)});
        }
    }
    csv_write(ctx.path("predictions.csv"), "output,t,mean,sd,observed", prows);

    std::vector<GpPosterior> lat = lfm_latent_posterior(fit, sample.data, grid);
    std::vector<Row> lrows;
    for (size_t r = 0; r < lat.size(); ++r)
        for (Eigen::Index i = 0; i < grid.size(); ++i)
            lrows.push_back({std::to_string(r + 1), csv_double(grid(i)),
                             csv_double(lat[r].mean(i)),
                             csv_double(std::sqrt(lat[r].variance(i)))});
    csv_write(ctx.path("latent.csv"), "latent,t,mean,sd", lrows);

    std::vector<Row> krows;
    for (int d = 0; d < 3; ++d)
        krows.push_back({std::to_string(d + 1), csv_double(fit.tau()(d)),
                         csv_double(std::sqrt(fit.noise(d)))});
    csv_write(ctx.path("params.csv"), "output,tau_d,sigma_d", krows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// discover run

MatrixXd read_trajectory_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open trajectory file " + path);
    std::vector<std::vector<double>> data;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used == 0) numeric = false;
            } catch (...) {
                numeric = false;
            }
        }
        if (!numeric) continue;   // header line
        if (!data.empty() && data.back().size() != row.size())
            throw InputError("ragged trajectory CSV " + path);
        data.push_back(row);
    }
    if (data.size() < 5) throw InputError("trajectory needs at least 5 rows");
    MatrixXd traj(data.size(), data[0].size());
    for (size_t i = 0; i < data.size(); ++i)
        for (size_t j = 0; j < data[i].size(); ++j)
            traj(i, j) = data[i][j];
    // drop a leading time column (strictly increasing, uniform spacing)
    if (traj.cols() >= 3) {
        const VectorXd t = traj.col(0);
        bool uniform = true;
        const double step = t(1) - t(0);
        for (Eigen::Index i = 1; i < t.size() && uniform; ++i)
            uniform = t(i) > t(i - 1) &&
                      std::abs((t(i) - t(i - 1)) - step) <= 1e-9 * std::abs(step);
        if (uniform) traj = traj.rightCols(traj.cols() - 1).eval();
    }
    return traj;
}

void cmd_discover_run(RunContext& ctx, const std::string& traj_path) {
    load_config(ctx, {"threshold", "dt", "smoothing_window", "max_degree", "ridge"});
    const double threshold = cfg(ctx, "threshold", 5.0);
    const double dt = cfg(ctx, "dt", 1e-3);
    const int smoothing = cfg(ctx, "smoothing_window", 1);
    const int max_degree = cfg(ctx, "max_degree", 2);
    const double ridge = cfg(ctx, "ridge", 0.0);

    ctx.begin_stage();
    MatrixXd traj;
    if (traj_path.empty()) {
        OdeSystem sys = mexico_system(0.3, dt);
        VectorXd x0(2);
        x0 << -0.1, 0.1;
        traj = ode_simulate(sys, x0);
    } else {
        traj = read_trajectory_csv(traj_path);
    }
    TermLibrary lib = TermLibrary::make(static_cast<int>(traj.cols()), max_degree);
    SparseOdeModel model = discover(traj, dt, lib, threshold, ridge, smoothing);
    ctx.end_stage("discover");

    ctx.begin_stage();
    json mj;
    mj["threshold"] = model.threshold;
    mj["fit_r"] = model.fit_r;
    json terms = json::array();
    for (int t = 0; t < lib.n_terms(); ++t) {
        json term;
        term["name"] = lib.term_name(t);
        json coefs = json::array();
        for (Eigen::Index d = 0; d < model.xi.cols(); ++d)
            coefs.push_back(model.xi(t, d));
        term["coefficients"] = coefs;
        terms.push_back(term);
    }
    mj["terms"] = terms;
    {
        std::ofstream f(ctx.path("model.json"), std::ios::binary);
        f << mj.dump(2) << "\n";
    }

    if (traj.cols() == 2) {
        const double x1_lo = traj.col(0).minCoeff(), x1_hi = traj.col(0).maxCoeff();
        const double x2_lo = traj.col(1).minCoeff(), x2_hi = traj.col(1).maxCoeff();
        const int side = 20;
        MatrixXd grid(side * side, 2);
        int r = 0;
        for (int i = 0; i < side; ++i)
            for (int j = 0; j < side; ++j, ++r) {
                grid(r, 0) = x1_lo + (x1_hi - x1_lo) * i / (side - 1.0);
                grid(r, 1) = x2_lo + (x2_hi - x2_lo) * j / (side - 1.0);
            }
        std::vector<VectorXd> starts = {traj.row(0).transpose()};
        PhasePortrait pp = phase_portrait(model, grid, starts, 0.3, dt);
        std::vector<Row> frows;
        for (Eigen::Index i = 0; i < pp.field.rows(); ++i)
            frows.push_back({csv_double(pp.field(i, 0)), csv_double(pp.field(i, 1)),
                             csv_double(pp.field(i, 2)), csv_double(pp.field(i, 3))});
        csv_write(ctx.path("field.csv"), "x1,x2,dx1,dx2", frows);
        std::vector<Row> trows;
        for (size_t k = 0; k < pp.trajectories.size(); ++k)
            for (Eigen::Index i = 0; i < pp.trajectories[k].rows(); ++i)
                trows.push_back({std::to_string(k), std::to_string(i),
                                 csv_double(pp.trajectories[k](i, 0)),
                                 csv_double(pp.trajectories[k](i, 1))});
        csv_write(ctx.path("trajectories.csv"), "trajectory,step,x1,x2", trows);
    }
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// gibbs logistic

void cmd_gibbs_logistic(RunContext& ctx, int trials) {
    load_config(ctx, {"T", "iters", "burn_in", "R", "Omega", "slice_R"});
    LogisticMapParams truth;
    truth.R = cfg(ctx, "R", 3.7);
    truth.Omega = cfg(ctx, "Omega", 1.0);
    truth.T = cfg(ctx, "T", 100);
    const int iters = cfg(ctx, "iters", 2000);
    const int burn_in = cfg(ctx, "burn_in", 200);
    const double slice_R = cfg(ctx, "slice_R", 4.0);

    ctx.begin_stage();
    RngStream rng(ctx.seed, 1);
    std::vector<LogisticTrialRow> rows = logistic_posterior_experiment(
        truth, truth.T, trials, rng, iters, burn_in);
    ctx.end_stage("trials");

    ctx.begin_stage();
    std::vector<Row> erows;
    for (const LogisticTrialRow& r : rows)
        erows.push_back({r.method, std::to_string(r.trial), csv_double(r.R_hat),
                         csv_double(r.Omega_hat), csv_double(r.sq_err_R),
                         csv_double(r.sq_err_Omega)});
    csv_write(ctx.path("estimates.csv"),
              "method,trial,R_hat,Omega_hat,sq_err_R,sq_err_Omega", erows);

    RngStream slice_rng(ctx.seed, 2);
    VectorXd y;
    for (std::uint64_t attempt = 0;; ++attempt) {
        RngStream sim = slice_rng.substream(attempt);
        LogisticMapParams p = truth;
        try {
            y = logistic_simulate(p, sim);
            break;
        } catch (const DivergenceError&) {
            continue;
        }
    }
    ConditionalSlice slice = logistic_conditional_slice(y, slice_R, truth.lambda_noise);
    std::vector<Row> srows;
    for (Eigen::Index i = 0; i < slice.x.size(); ++i)
        srows.push_back({csv_double(slice.x(i)), csv_double(slice.log_conditional(i)),
                         csv_double(slice.conditional(i))});
    csv_write(ctx.path("conditional_slice.csv"), "x,log_conditional,conditional",
              srows);
    ctx.end_stage("write");
}

// ---------------------------------------------------------------------------
// reproduce-all

int cmd_reproduce_all(RunContext& ctx, int runs, int trials) {
    load_config(ctx, {});
    ctx.begin_stage();
    std::vector<CriterionResult> results =
        reproduce_all(ctx.seed, ctx.out_dir, runs, trials);
    ctx.end_stage("criteria");
    bool all_pass = true;
    for (const CriterionResult& r : results) {
        std::printf("[%s] criterion %2d %-28s value %.6g (threshold %.6g) %.1fs\n",
                    r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.value,
                    r.threshold, r.seconds);
        if (!r.pass) all_pass = false;
    }
    ctx.outputs.push_back("summary.csv");
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"physics-aware machine learning experiment runner"};
    app.require_subcommand(1);

    RunContext ctx;
    app.add_option("--seed", ctx.seed, "master random seed")->capture_default_str();
    app.add_option("--out", ctx.out_dir, "output directory")->capture_default_str();
    app.add_option("--config", ctx.config_path, "JSON config file");
    app.add_option("--threads", ctx.threads, "worker threads (single-process)");

    auto* synth = app.add_subcommand("synth", "synthetic data generators");
    auto* synth_export = synth->add_subcommand("export", "write generated datasets");
    auto* jgp = app.add_subcommand("jgp", "joint GP over real + simulated rows");
    auto* jgp_run = jgp->add_subcommand("run", "benchmark and predictions");
    auto* dm = app.add_subcommand("distmatch", "MMD-regularized kernel ridge");
    auto* dm_run = dm->add_subcommand("run", "shift benchmark and histograms");
    auto* fkl = app.add_subcommand("fkl", "dependence-rewarded kernel regression");
    auto* fkl_curve = fkl->add_subcommand("curve", "error-vs-dependence curves");
    auto* emu = app.add_subcommand("emulate", "active emulation of the forward model");
    auto* emu_bench = emu->add_subcommand("bench", "sampling-strategy benchmark");
    int runs = 50;
    emu_bench->add_option("--runs", runs, "benchmark repetitions")
        ->capture_default_str();
    auto* prior = app.add_subcommand("prior", "cause-prior inference");
    auto* prior_fit = prior->add_subcommand("fit", "MC-EM prior recovery");
    auto* lfm = app.add_subcommand("lfm", "latent force model");
    auto* lfm_run = lfm->add_subcommand("run", "fit, predictions, latent posterior");
    auto* disc = app.add_subcommand("discover", "sparse ODE discovery");
    auto* disc_run = disc->add_subcommand("run", "discover a model from a trajectory");
    std::string traj_path;
    disc_run->add_option("--traj", traj_path, "trajectory CSV (default: built-in)");
    auto* gibbs = app.add_subcommand("gibbs", "Gibbs samplers");
    auto* gibbs_logistic =
        gibbs->add_subcommand("logistic", "logistic-map posterior benchmark");
    int trials = 50;
    gibbs_logistic->add_option("--trials", trials, "number of trials")
        ->capture_default_str();
    auto* repro = app.add_subcommand("reproduce-all", "run every acceptance criterion");
    int repro_runs = 50, repro_trials = 50;
    repro->add_option("--runs", repro_runs, "emulation benchmark repetitions")
        ->capture_default_str();
    repro->add_option("--trials", repro_trials, "sampler benchmark trials")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    if (ctx.out_dir.empty()) {
        std::cerr << "error: {\"type\":\"validation\",\"message\":\"--out is "
                     "required\"}\n";
        return 2;
    }

    try {
        std::string command;
        int exit_code = 0;
        if (*synth_export) {
            command = "synth export";
            cmd_synth_export(ctx);
        } else if (*jgp_run) {
            command = "jgp run";
            cmd_jgp_run(ctx);
        } else if (*dm_run) {
            command = "distmatch run";
            cmd_distmatch_run(ctx);
        } else if (*fkl_curve) {
            command = "fkl curve";
            cmd_fkl_curve(ctx);
        } else if (*emu_bench) {
            command = "emulate bench";
            load_config(ctx, {});
            ctx.begin_stage();
            CriterionResult r = run_emulation_experiment(ctx.seed, ctx.out_dir, runs);
            ctx.end_stage("bench");
            ctx.outputs.push_back("rmse_curves.csv");
            std::printf("points-to-target summary: %s\n", r.detail.c_str());
        } else if (*prior_fit) {
            command = "prior fit";
            cmd_prior_fit(ctx);
        } else if (*lfm_run) {
            command = "lfm run";
            cmd_lfm_run(ctx);
        } else if (*disc_run) {
            command = "discover run";
            cmd_discover_run(ctx, traj_path);
        } else if (*gibbs_logistic) {
            command = "gibbs logistic";
            cmd_gibbs_logistic(ctx, trials);
        } else if (*repro) {
            command = "reproduce-all";
            exit_code = cmd_reproduce_all(ctx, repro_runs, repro_trials);
        } else {
            std::cerr << "error: {\"type\":\"validation\",\"message\":\"missing "
                         "subcommand\"}\n";
            return 2;
        }
        write_manifest(ctx, command);
        return exit_code;
    } catch (const InputError& e) {
        std::cerr << "error: "
                  << json{{"type", "validation"}, {"message", e.what()}}.dump()
                  << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: "
                  << json{{"type", "numerical"}, {"message", e.what()}}.dump()
                  << "\n";
        return 3;
    }
}
