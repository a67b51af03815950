#include "physml/fkl.hpp"

#include <cmath>

namespace physml {

namespace {

MatrixXd centered(const MatrixXd& K) {
    const Eigen::Index n = K.rows();
    MatrixXd H = MatrixXd::Identity(n, n) -
                 MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    return H * K * H;
}

}  // namespace

double hsic(const MatrixXd& a, const MatrixXd& b, const KernelConfig& k_a,
            const KernelConfig& k_b) {
    if (a.rows() != b.rows() || a.rows() < 2)
        throw InputError("hsic: need matching sample counts, n >= 2");
    const double n1 = static_cast<double>(a.rows() - 1);
    MatrixXd Ka = gram(k_a, a, a);
    MatrixXd Kb = gram(k_b, b, b);
    return (centered(Ka).array() * Kb.transpose().array()).sum() / (n1 * n1);
}

double normalized_hsic(const MatrixXd& a, const MatrixXd& b, const KernelConfig& k_a,
                       const KernelConfig& k_b) {
    const double ab = hsic(a, b, k_a, k_b);
    const double aa = hsic(a, a, k_a, k_a);
    const double bb = hsic(b, b, k_b, k_b);
    const double denom = std::sqrt(std::max(aa * bb, 0.0));
    return denom > 0.0 ? ab / denom : 0.0;
}

VectorXd FklModel::predict(const MatrixXd& Xq) const {
    return gram(k_in, Xq, train_inputs) * alpha;
}

namespace {

// M = K^T K + ridge K - dep * K H K_s H K
MatrixXd system_matrix(const MatrixXd& K, const MatrixXd& KsHK, double ridge,
                       double dep_weight) {
    MatrixXd M = K.transpose() * K + ridge * K - dep_weight * KsHK;
    return 0.5 * (M + M.transpose());
}

bool is_pd(const MatrixXd& M) {
    Eigen::LLT<MatrixXd> llt(M);
    return llt.info() == Eigen::Success;
}

}  // namespace

FklModel fkl_fit(const Dataset& train, const VectorXd& sensitive, double ridge,
                 double dep_weight, const KernelConfig& k_in) {
    train.validate();
    if (sensitive.size() != train.rows()) throw InputError("fkl_fit: sensitive length mismatch");
    if (ridge < 0.0 || dep_weight < 0.0)
        throw InputError("fkl_fit: ridge and dep_weight must be nonnegative");

    MatrixXd K = gram(k_in, train.inputs);
    K.diagonal().array() += default_jitter(K);

    // sensitive Gram through a squared-exponential with median lengthscale
    KernelConfig ks;
    ks.lengthscales = VectorXd::Constant(1, median_heuristic(sensitive));
    MatrixXd Ks = gram(ks, MatrixXd(sensitive), MatrixXd(sensitive));
    MatrixXd HKsH = centered(Ks);
    MatrixXd KsHK = K * HKsH * K;

    MatrixXd M = system_matrix(K, KsHK, ridge, dep_weight);
    if (!is_pd(M)) {
        // bisect for the largest admissible weight to report
        double lo = 0.0, hi = dep_weight;
        for (int i = 0; i < 8; ++i) {
            const double mid = 0.5 * (lo + hi);
            (is_pd(system_matrix(K, KsHK, ridge, mid)) ? lo : hi) = mid;
        }
        throw DependenceWeightTooLarge(lo);
    }

    FklModel m;
    if (dep_weight == 0.0) {
        // K (K + ridge I) a = K y shares its solution with the better-
        // conditioned (K + ridge I) a = y
        MatrixXd A = K;
        A.diagonal().array() += ridge;
        m.alpha = chol_solve(A, MatrixXd(train.targets)).col(0);
        for (int it = 0; it < 2; ++it) {
            VectorXd r = train.targets - A * m.alpha;
            m.alpha += chol_solve(A, MatrixXd(r)).col(0);
        }
    } else {
        VectorXd rhs = K.transpose() * train.targets;
        m.alpha = chol_solve(M, MatrixXd(rhs)).col(0);
        for (int it = 0; it < 2; ++it) {
            VectorXd r = rhs - M * m.alpha;
            m.alpha += chol_solve(M, MatrixXd(r)).col(0);
        }
    }
    m.train_inputs = train.inputs;
    m.k_in = k_in;
    m.ridge = ridge;
    m.dep_weight = dep_weight;
    return m;
}

double fkl_critical_weight(const Dataset& train, const VectorXd& sensitive,
                           double ridge, const KernelConfig& k_in) {
    train.validate();
    if (sensitive.size() != train.rows())
        throw InputError("fkl_critical_weight: sensitive length mismatch");
    MatrixXd K = gram(k_in, train.inputs);
    K.diagonal().array() += default_jitter(K);
    KernelConfig ks;
    ks.lengthscales = VectorXd::Constant(1, median_heuristic(sensitive));
    MatrixXd Ks = gram(ks, MatrixXd(sensitive), MatrixXd(sensitive));
    MatrixXd KsHK = K * centered(Ks) * K;

    double lo = 0.0, hi = 1.0;
    int doublings = 0;
    while (is_pd(system_matrix(K, KsHK, ridge, hi)) && doublings < 60) {
        lo = hi;
        hi *= 2.0;
        ++doublings;
    }
    if (doublings >= 60) return lo;
    for (int i = 0; i < 40; ++i) {
        const double mid = 0.5 * (lo + hi);
        (is_pd(system_matrix(K, KsHK, ridge, mid)) ? lo : hi) = mid;
    }
    return lo;
}

std::vector<ConsistencyRow> fkl_consistency_curve(
    const Dataset& train, const Dataset& test,
    const std::vector<VectorXd>& sensitive_models_train,
    const std::vector<VectorXd>& sensitive_models_test,
    const std::vector<double>& dep_grid, double ridge, const KernelConfig& k_in) {
    if (dep_grid.empty()) throw InputError("fkl_consistency_curve: empty dependence grid");
    if (sensitive_models_train.size() != sensitive_models_test.size())
        throw InputError("fkl_consistency_curve: train/test model list mismatch");
    for (double f : dep_grid)
        if (f < 0.0 || f >= 1.0)
            throw InputError(
                "fkl_consistency_curve: grid entries are fractions of the "
                "critical weight and must lie in [0, 1)");

    std::vector<ConsistencyRow> rows;
    for (std::size_t model = 0; model < sensitive_models_train.size(); ++model) {
        const double crit =
            fkl_critical_weight(train, sensitive_models_train[model], ridge, k_in);
        for (double f : dep_grid) {
            const double w = f * crit;
            FklModel m = fkl_fit(train, sensitive_models_train[model], ridge, w, k_in);
            VectorXd pred = m.predict(test.inputs);
            const double rmse =
                std::sqrt((pred - test.targets).squaredNorm() / test.rows());
            KernelConfig lin_like;  // report with SE kernels, median lengthscales
            lin_like.lengthscales = VectorXd::Constant(1, median_heuristic(pred));
            KernelConfig ks;
            ks.lengthscales =
                VectorXd::Constant(1, median_heuristic(sensitive_models_test[model]));
            const double h = normalized_hsic(MatrixXd(pred),
                                             MatrixXd(sensitive_models_test[model]),
                                             lin_like, ks);
            rows.push_back({static_cast<int>(model) + 1, w, rmse, h});
        }
    }
    return rows;
}

}  // namespace physml
