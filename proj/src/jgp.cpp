#include "physml/jgp.hpp"

#include "physml/optim.hpp"

#include <cmath>

namespace physml {

namespace {

constexpr int kMaxPooledRows = 2000;

double logit(double p) { return std::log(p / (1.0 - p)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

VectorXd noise_diag(const Dataset& train, double noise_real, double w) {
    VectorXd d(train.rows());
    const double sim_noise = noise_real / std::max(w, kFidelityEps);
    for (Eigen::Index i = 0; i < train.rows(); ++i)
        d(i) = train.provenance[i] == Provenance::Real ? noise_real : sim_noise;
    return d;
}

// theta = [log lengthscales (d), log signal, log noise_real, logit w]
JgpModel unpack(const VectorXd& theta, const Dataset& train) {
    const Eigen::Index d = train.dims();
    JgpModel m;
    m.kernel.lengthscales = theta.head(d).array().exp();
    m.kernel.signal_variance = std::exp(theta(d));
    m.noise_real = std::exp(theta(d + 1));
    m.fidelity_w = sigmoid(theta(d + 2));
    m.train = train;
    return m;
}

}  // namespace

VectorXd JgpModel::noise_diagonal() const {
    return noise_diag(train, noise_real, fidelity_w);
}

JgpModel jgp_fit(const Dataset& real, const Dataset& sim, int opt_budget,
                 std::uint64_t seed) {
    real.validate();
    if (real.rows() < 5) throw InputError("jgp_fit: need at least 5 real rows");
    if (sim.rows() > 0) sim.validate();
    if (real.rows() + sim.rows() > kMaxPooledRows)
        throw InputError("jgp_fit: pooled row count exceeds the 2000-row cap");

    const double y_var =
        (real.targets.array() - real.targets.mean()).square().mean();
    if (y_var <= 0.0) throw FitError("jgp_fit: real targets have zero variance");

    Dataset pooled = Dataset::concat(real, sim);
    std::vector<int> real_rows;
    for (int i = 0; i < static_cast<int>(pooled.rows()); ++i)
        if (pooled.provenance[i] == Provenance::Real) real_rows.push_back(i);

    const Eigen::Index d = pooled.dims();
    VectorXd theta0(d + 3);
    for (Eigen::Index j = 0; j < d; ++j) {
        double sd = std::sqrt((pooled.inputs.col(j).array() - pooled.inputs.col(j).mean())
                                  .square()
                                  .mean());
        if (sd <= 0.0) sd = 1.0;
        theta0(j) = std::log(sd * std::sqrt(static_cast<double>(d)));
    }
    theta0(d) = std::log(y_var);
    theta0(d + 1) = std::log(0.1 * y_var);
    theta0(d + 2) = 0.0;  // w = 0.5

    auto objective = [&](const VectorXd& theta) -> double {
        JgpModel m = unpack(theta, pooled);
        MatrixXd K = gram(m.kernel, pooled.inputs);
        K.diagonal().array() += default_jitter(K);
        return -loo_log_density(K, noise_diag(pooled, m.noise_real, m.fidelity_w),
                                pooled.targets, real_rows);
    };

    RngStream rng(seed, 77);
    OptimResult best = multistart_minimize(objective, theta0, 8, 0.6, opt_budget, rng);

    JgpModel m = unpack(best.x, pooled);
    MatrixXd K = gram(m.kernel, pooled.inputs);
    K.diagonal().array() += default_jitter(K);
    MatrixXd C = K;
    C.diagonal() += m.noise_diagonal();
    m.dual_weights = chol_solve(C, MatrixXd(pooled.targets)).col(0);
    // iterative refinement so the dual system holds to tight tolerance
    for (int it = 0; it < 2; ++it) {
        VectorXd r = pooled.targets - C * m.dual_weights;
        m.dual_weights += chol_solve(C, MatrixXd(r)).col(0);
    }
    return m;
}

GpPrediction jgp_predict(const JgpModel& m, const MatrixXd& Xq) {
    if (Xq.cols() != m.train.dims()) throw InputError("jgp_predict: dimension mismatch");
    MatrixXd Kq = gram(m.kernel, Xq, m.train.inputs);
    GpPrediction p;
    p.mean = Kq * m.dual_weights;

    MatrixXd K = gram(m.kernel, m.train.inputs);
    K.diagonal().array() += default_jitter(K);
    MatrixXd C = K;
    C.diagonal() += m.noise_diagonal();
    MatrixXd V = chol_solve(C, MatrixXd(Kq.transpose()));
    p.variance.resize(Xq.rows());
    for (Eigen::Index i = 0; i < Xq.rows(); ++i) {
        double v = m.kernel.signal_variance - Kq.row(i).dot(V.col(i));
        p.variance(i) = std::max(v, 1e-12);
    }
    return p;
}

std::vector<RmseRow> jgp_benchmark(const Dataset& real, const Dataset& sim,
                                   const Dataset& test, int opt_budget,
                                   std::uint64_t seed) {
    auto rmse_on_test = [&](const JgpModel& m) {
        GpPrediction p = jgp_predict(m, test.inputs);
        return std::sqrt((p.mean - test.targets).squaredNorm() / test.rows());
    };

    Dataset empty;
    Dataset sim_as_real = sim;
    sim_as_real.provenance.assign(sim.rows(), Provenance::Real);
    Dataset stack = Dataset::concat(real, sim_as_real);

    std::vector<RmseRow> table;
    table.push_back({"GP_R", rmse_on_test(jgp_fit(real, empty, opt_budget, seed))});
    table.push_back({"GP_S", rmse_on_test(jgp_fit(sim_as_real, empty, opt_budget, seed))});
    table.push_back({"GP_R+S", rmse_on_test(jgp_fit(stack, empty, opt_budget, seed))});
    table.push_back({"JGP", rmse_on_test(jgp_fit(real, sim, opt_budget, seed))});
    return table;
}

}  // namespace physml
