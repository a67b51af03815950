#include "doctest.h"

#include "physml/core.hpp"

using namespace physml;

namespace {

MatrixXd random_matrix(RngStream& rng, int n, int d) {
    MatrixXd X(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) X(i, j) = rng.normal();
    return X;
}

KernelConfig random_kernel(RngStream& rng, int d) {
    KernelConfig k;
    k.lengthscales.resize(d);
    for (int j = 0; j < d; ++j) k.lengthscales(j) = std::exp(rng.uniform(-1.0, 1.0));
    k.signal_variance = std::exp(rng.uniform(-1.0, 1.0));
    return k;
}

}  // namespace

TEST_CASE("kernel_eval basics") {
    KernelConfig k;
    k.lengthscales = VectorXd::Ones(3);
    k.signal_variance = 2.5;
    VectorXd x = VectorXd::Zero(3);

    CHECK(kernel_eval(k, x, x) == doctest::Approx(2.5));

    k.signal_variance = 1.0;
    VectorXd x2 = VectorXd::Zero(3);
    x2(0) = 1.0;  // unit distance
    CHECK(kernel_eval(k, x, x2) == doctest::Approx(std::exp(-0.5)));

    RngStream rng(1, 0);
    for (int rep = 0; rep < 20; ++rep) {
        VectorXd a = random_matrix(rng, 1, 3).row(0);
        VectorXd b = random_matrix(rng, 1, 3).row(0);
        CHECK(kernel_eval(k, a, b) == doctest::Approx(kernel_eval(k, b, a)));
    }

    VectorXd wrong = VectorXd::Zero(2);
    CHECK_THROWS_AS(kernel_eval(k, x, wrong), InputError);
}

TEST_CASE("gram properties") {
    RngStream rng(2, 0);
    KernelConfig k = random_kernel(rng, 2);

    MatrixXd one = random_matrix(rng, 1, 2);
    CHECK(gram(k, one, one)(0, 0) == doctest::Approx(k.signal_variance));

    // PSD over random configs and inputs
    for (int rep = 0; rep < 100; ++rep) {
        KernelConfig kr = random_kernel(rng, 3);
        MatrixXd X = random_matrix(rng, 12, 3);
        MatrixXd K = gram(kr, X);
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    }

    MatrixXd X = random_matrix(rng, 6, 2);
    MatrixXd X2 = random_matrix(rng, 4, 2);
    CHECK((gram(k, X, X2) - gram(k, X2, X).transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("chol_solve") {
    VectorXd b(2);
    b << 2.0, 4.0;
    MatrixXd A = MatrixXd::Zero(2, 2);
    A(0, 0) = 2.0;
    A(1, 1) = 4.0;
    VectorXd x = chol_solve(A, MatrixXd(b)).col(0);
    CHECK(x(0) == doctest::Approx(1.0));
    CHECK(x(1) == doctest::Approx(1.0));

    MatrixXd I5 = MatrixXd::Identity(5, 5);
    VectorXd rhs(5);
    rhs << 1, 2, 3, 4, 5;
    CHECK((chol_solve(I5, MatrixXd(rhs)).col(0) - rhs).norm() < 1e-14);

    // residual bound on random PD systems up to n = 200
    RngStream rng(3, 0);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 5 + rng.uniform_int(196);
        MatrixXd G = random_matrix(rng, n, n);
        MatrixXd A2 = G * G.transpose() + 1e-3 * static_cast<double>(n) * MatrixXd::Identity(n, n);
        MatrixXd B = random_matrix(rng, n, 2);
        MatrixXd X = chol_solve(A2, B);
        const double res = (A2 * X - B).cwiseAbs().maxCoeff();
        CHECK(res <= 1e-8 * B.cwiseAbs().maxCoeff());
    }

    MatrixXd neg = -MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(chol_solve(neg, MatrixXd(MatrixXd::Identity(3, 3))), FactorizationError);
}

TEST_CASE("loo_predictive matches explicit refit") {
    RngStream rng(4, 0);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = 5 + rng.uniform_int(16);
        MatrixXd X = random_matrix(rng, n, 2);
        KernelConfig k = random_kernel(rng, 2);
        MatrixXd K = gram(k, X);
        VectorXd noise(n);
        for (int i = 0; i < n; ++i) noise(i) = std::exp(rng.uniform(-3.0, 0.0));
        VectorXd y = random_matrix(rng, n, 1).col(0);

        LooResult loo = loo_predictive(K, noise, y);

        // oracle: refit a GP on the other n-1 points for every held-out row
        for (int i = 0; i < n; ++i) {
            std::vector<int> keep;
            for (int j = 0; j < n; ++j)
                if (j != i) keep.push_back(j);
            MatrixXd Ksub(n - 1, n - 1);
            VectorXd ysub(n - 1), ksub(n - 1);
            for (int a = 0; a < n - 1; ++a) {
                ysub(a) = y(keep[a]);
                ksub(a) = K(i, keep[a]);
                for (int b = 0; b < n - 1; ++b) Ksub(a, b) = K(keep[a], keep[b]);
            }
            for (int a = 0; a < n - 1; ++a) Ksub(a, a) += noise(keep[a]);
            VectorXd alpha = chol_solve(Ksub, MatrixXd(ysub)).col(0);
            const double mu = ksub.dot(alpha);
            const double var = K(i, i) + noise(i) -
                               ksub.dot(chol_solve(Ksub, MatrixXd(ksub)).col(0));
            const double scale = std::max(std::abs(mu), 1.0);
            CHECK(std::abs(loo.means(i) - mu) <= 1e-8 * scale);
            CHECK(std::abs(loo.variances(i) - var) <= 1e-8 * std::max(var, 1.0));
        }
    }
}

TEST_CASE("loo_predictive large-noise limit") {
    RngStream rng(5, 0);
    MatrixXd X = random_matrix(rng, 6, 2);
    KernelConfig k = random_kernel(rng, 2);
    MatrixXd K = gram(k, X);
    VectorXd y = random_matrix(rng, 6, 1).col(0);
    VectorXd noise = VectorXd::Constant(6, 0.1);
    noise(2) = 1e10;
    LooResult loo = loo_predictive(K, noise, y);
    CHECK(loo.variances(2) == doctest::Approx(1e10).epsilon(1e-3));
}

TEST_CASE("RngStream reproducibility and independence") {
    RngStream a(42, 7), b(42, 7);
    for (int i = 0; i < 10000; ++i) CHECK(a.next_u64() == b.next_u64());

    RngStream c(42, 8);
    int same = 0;
    RngStream a2(42, 7);
    for (int i = 0; i < 1000; ++i)
        if (a2.next_u64() == c.next_u64()) ++same;
    CHECK(same == 0);

    // normal moments sanity
    RngStream n(9, 0);
    double s = 0.0, s2 = 0.0;
    const int N = 20000;
    for (int i = 0; i < N; ++i) {
        const double z = n.normal();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / N) < 0.03);
    CHECK(std::abs(s2 / N - 1.0) < 0.05);
}

TEST_CASE("Dataset validation") {
    Dataset d;
    d.inputs = MatrixXd::Zero(2, 1);
    d.targets = VectorXd::Zero(2);
    d.provenance = {Provenance::Real, Provenance::Simulated};
    CHECK_NOTHROW(d.validate());

    d.targets = VectorXd::Zero(3);
    CHECK_THROWS_AS(d.validate(), InputError);

    d.targets = VectorXd::Zero(2);
    d.inputs(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(d.validate(), InputError);
}
