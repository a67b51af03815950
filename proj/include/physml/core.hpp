#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace physml {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Errors

struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FactorizationError : std::runtime_error {
    int pivot_index;
    explicit FactorizationError(const std::string& msg, int pivot = -1)
        : std::runtime_error(msg), pivot_index(pivot) {}
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Deterministic splittable random streams.
//
// Each (master_seed, stream_index) pair defines an independent sequence; the
// generator state is a splitmix64 chain seeded by hashing the pair, so
// identical pairs reproduce bit-identical draws on every run.

class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_index);

    std::uint64_t master_seed() const { return master_seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

    // Derived stream, independent of this one and of other substreams.
    RngStream substream(std::uint64_t k) const;

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);
    double normal();                        // N(0, 1), Box-Muller
    int uniform_int(int n);                 // {0, ..., n-1}

private:
    std::uint64_t master_seed_;
    std::uint64_t stream_index_;
    std::uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// ---------------------------------------------------------------------------
// Datasets

enum class Provenance : std::uint8_t { Real, Simulated };

struct Dataset {
    MatrixXd inputs;                    // n x d
    VectorXd targets;                   // n
    std::vector<Provenance> provenance; // n

    Eigen::Index rows() const { return inputs.rows(); }
    Eigen::Index dims() const { return inputs.cols(); }

    void validate() const;              // throws InputError on violation
    static Dataset concat(const Dataset& a, const Dataset& b);
};

// ---------------------------------------------------------------------------
// Kernels

enum class KernelFamily { SquaredExponential };

struct KernelConfig {
    KernelFamily family = KernelFamily::SquaredExponential;
    VectorXd lengthscales;      // d, all > 0
    double signal_variance = 1.0;

    void validate(Eigen::Index expected_dim) const;
};

// k(x, x2) = signal_variance * exp(-1/2 sum_i ((x_i - x2_i)/l_i)^2)
double kernel_eval(const KernelConfig& cfg, const VectorXd& x, const VectorXd& x2);

MatrixXd gram(const KernelConfig& cfg, const MatrixXd& X, const MatrixXd& X2);
MatrixXd gram(const KernelConfig& cfg, const MatrixXd& X);

// Default jitter used before Cholesky solves: 1e-8 * trace(A)/n.
double default_jitter(const MatrixXd& A);

// A^{-1} B via Cholesky. A must be symmetric PD after the caller's jitter.
MatrixXd chol_solve(const MatrixXd& A, const MatrixXd& B);

// Closed-form leave-one-out predictive moments for a GP with covariance
// C = K + diag(noise):  mu_i = y_i - [C^{-1}y]_i / [C^{-1}]_ii,
// sigma_i^2 = 1 / [C^{-1}]_ii.
struct LooResult {
    VectorXd means;
    VectorXd variances;
};
LooResult loo_predictive(const MatrixXd& K, const VectorXd& noise, const VectorXd& y);

// Sum over selected rows of the log LOO predictive density; rows == empty
// means all rows.
double loo_log_density(const MatrixXd& K, const VectorXd& noise, const VectorXd& y,
                       const std::vector<int>& rows);

// Median of pairwise distances, the usual kernel lengthscale heuristic.
double median_heuristic(const VectorXd& sample);
double median_heuristic(const MatrixXd& sample);

}  // namespace physml
