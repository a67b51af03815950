#include "physml/core.hpp"

#include <algorithm>
#include <cmath>

namespace physml {

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t mix_pair(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s ^= b * 0xff51afd7ed558ccdULL + 0x2545f4914f6cdd1dULL;
    h ^= splitmix64(s);
    return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index)
    : master_seed_(master_seed),
      stream_index_(stream_index),
      state_(mix_pair(master_seed, stream_index)) {}

RngStream RngStream::substream(std::uint64_t k) const {
    return RngStream(mix_pair(master_seed_, stream_index_ ^ 0x517cc1b727220a95ULL),
                     k + 1);
}

std::uint64_t RngStream::next_u64() { return splitmix64(state_); }

double RngStream::uniform() {
    // 53 random bits -> [0, 1)
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

int RngStream::uniform_int(int n) {
    if (n <= 0) throw InputError("uniform_int: n must be positive");
    return static_cast<int>(uniform() * n) % n;
}

// ---------------------------------------------------------------------------

void Dataset::validate() const {
    if (inputs.rows() < 1) throw InputError("Dataset: need at least one row");
    if (targets.size() != inputs.rows() ||
        static_cast<Eigen::Index>(provenance.size()) != inputs.rows())
        throw InputError("Dataset: row counts of inputs/targets/provenance differ");
    if (!inputs.allFinite() || !targets.allFinite())
        throw InputError("Dataset: non-finite entries");
}

Dataset Dataset::concat(const Dataset& a, const Dataset& b) {
    if (a.rows() == 0) return b;
    if (b.rows() == 0) return a;
    if (a.dims() != b.dims()) throw InputError("Dataset::concat: dim mismatch");
    Dataset out;
    out.inputs.resize(a.rows() + b.rows(), a.dims());
    out.inputs << a.inputs, b.inputs;
    out.targets.resize(a.rows() + b.rows());
    out.targets << a.targets, b.targets;
    out.provenance = a.provenance;
    out.provenance.insert(out.provenance.end(), b.provenance.begin(), b.provenance.end());
    return out;
}

// ---------------------------------------------------------------------------

void KernelConfig::validate(Eigen::Index expected_dim) const {
    if (lengthscales.size() != expected_dim)
        throw InputError("KernelConfig: lengthscale dimension mismatch");
    if ((lengthscales.array() <= 0.0).any() || signal_variance <= 0.0)
        throw InputError("KernelConfig: parameters must be positive");
}

double kernel_eval(const KernelConfig& cfg, const VectorXd& x, const VectorXd& x2) {
    if (x.size() != x2.size() || x.size() != cfg.lengthscales.size())
        throw InputError("kernel_eval: dimension mismatch");
    const double q = ((x - x2).array() / cfg.lengthscales.array()).square().sum();
    return cfg.signal_variance * std::exp(-0.5 * q);
}

MatrixXd gram(const KernelConfig& cfg, const MatrixXd& X, const MatrixXd& X2) {
    if (X.cols() != X2.cols() || X.cols() != cfg.lengthscales.size())
        throw InputError("gram: dimension mismatch");
    // Scaled squared distances via the usual |a|^2 + |b|^2 - 2 a.b expansion.
    MatrixXd A = X.array().rowwise() / cfg.lengthscales.transpose().array();
    MatrixXd B = X2.array().rowwise() / cfg.lengthscales.transpose().array();
    VectorXd an = A.rowwise().squaredNorm();
    VectorXd bn = B.rowwise().squaredNorm();
    MatrixXd D = an.replicate(1, B.rows()) + bn.transpose().replicate(A.rows(), 1)
                 - 2.0 * A * B.transpose();
    return cfg.signal_variance * (-0.5 * D.cwiseMax(0.0)).array().exp();
}

MatrixXd gram(const KernelConfig& cfg, const MatrixXd& X) {
    MatrixXd K = gram(cfg, X, X);
    // exact symmetry for downstream Cholesky
    K = 0.5 * (K + K.transpose()).eval();
    K.diagonal().setConstant(cfg.signal_variance);
    return K;
}

double default_jitter(const MatrixXd& A) {
    return 1e-8 * A.trace() / static_cast<double>(A.rows());
}

MatrixXd chol_solve(const MatrixXd& A, const MatrixXd& B) {
    if (A.rows() != A.cols() || A.rows() != B.rows())
        throw InputError("chol_solve: shape mismatch");
    Eigen::LLT<MatrixXd> llt(A);
    if (llt.info() != Eigen::Success) {
        // locate the failing pivot for the error report
        int pivot = 0;
        MatrixXd L = MatrixXd::Zero(A.rows(), A.cols());
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            double d = A(j, j) - L.row(j).head(j).squaredNorm();
            if (d <= 0.0) {
                pivot = static_cast<int>(j);
                break;
            }
            L(j, j) = std::sqrt(d);
            for (Eigen::Index i = j + 1; i < A.rows(); ++i)
                L(i, j) = (A(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
        }
        throw FactorizationError("chol_solve: matrix not positive definite", pivot);
    }
    return llt.solve(B);
}

LooResult loo_predictive(const MatrixXd& K, const VectorXd& noise, const VectorXd& y) {
    const Eigen::Index n = K.rows();
    if (noise.size() != n || y.size() != n)
        throw InputError("loo_predictive: shape mismatch");
    if ((noise.array() <= 0.0).any())
        throw InputError("loo_predictive: noise must be positive");
    MatrixXd C = K;
    C.diagonal() += noise;
    MatrixXd Cinv = chol_solve(C, MatrixXd::Identity(n, n));
    VectorXd Cinv_y = Cinv * y;
    LooResult r;
    r.means.resize(n);
    r.variances.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double dii = Cinv(i, i);
        r.means(i) = y(i) - Cinv_y(i) / dii;
        r.variances(i) = 1.0 / dii;
    }
    return r;
}

double loo_log_density(const MatrixXd& K, const VectorXd& noise, const VectorXd& y,
                       const std::vector<int>& rows) {
    LooResult r = loo_predictive(K, noise, y);
    double total = 0.0;
    auto term = [&](int i) {
        const double v = r.variances(i);
        const double d = y(i) - r.means(i);
        return -0.5 * (std::log(2.0 * M_PI * v) + d * d / v);
    };
    if (rows.empty()) {
        for (int i = 0; i < static_cast<int>(y.size()); ++i) total += term(i);
    } else {
        for (int i : rows) total += term(i);
    }
    return total;
}

double median_heuristic(const VectorXd& sample) {
    MatrixXd m = sample;
    return median_heuristic(m);
}

double median_heuristic(const MatrixXd& sample) {
    const Eigen::Index n = sample.rows();
    std::vector<double> d;
    d.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            d.push_back((sample.row(i) - sample.row(j)).norm());
    if (d.empty()) return 1.0;
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    double med = d[d.size() / 2];
    return med > 0.0 ? med : 1.0;
}

}  // namespace physml
