#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <random>

#include "qvision/linalg.hpp"
#include "qvision/qkernel.hpp"

using namespace qvision;
using namespace qvision::qkernel;
using cplx = std::complex<double>;

namespace {

/// Dense 4x4 oracle for the n=2 feature map: explicit Hadamard-squared and
/// diagonal phase matrices applied to |00>, reps times.
std::vector<cplx> dense_two_qubit_state(double x0, double x1, int reps) {
    // H (x) H, little-endian basis order |q1 q0> = {00, 01, 10, 11}.
    const double h = 0.5;
    const double hh[4][4] = {{h, h, h, h}, {h, -h, h, -h}, {h, h, -h, -h}, {h, -h, -h, h}};

    // Phase exponent per basis state b: x0*s0 + x1*s1 + (pi-x0)(pi-x1)*s0*s1.
    auto sgn = [](unsigned bit) { return bit ? -1.0 : 1.0; };
    std::vector<cplx> diag(4);
    for (unsigned b = 0; b < 4; ++b) {
        double s0 = sgn(b & 1), s1 = sgn((b >> 1) & 1);
        double phi = x0 * s0 + x1 * s1 + (M_PI - x0) * (M_PI - x1) * s0 * s1;
        diag[b] = std::polar(1.0, phi);
    }

    std::vector<cplx> state = {1.0, 0.0, 0.0, 0.0};
    for (int r = 0; r < reps; ++r) {
        std::vector<cplx> tmp(4, 0.0);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) tmp[std::size_t(i)] += hh[i][j] * state[std::size_t(j)];
        for (int i = 0; i < 4; ++i) state[std::size_t(i)] = diag[std::size_t(i)] * tmp[std::size_t(i)];
    }
    return state;
}

Matrix random_samples(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::uniform_real_distribution<double> unit(0.0, M_PI);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = unit(rng);
    return m;
}

double state_norm(const StateVector& s) {
    double n = 0.0;
    for (const auto& a : s.amplitudes) n += std::norm(a);
    return n;
}

} // namespace

TEST_CASE("single qubit at x = 0 gives the uniform superposition") {
    FeatureMapSpec spec;
    spec.n = 1;
    spec.reps = 1;
    auto state = feature_map_state(std::vector<double>{0.0}, spec);
    REQUIRE(state.amplitudes.size() == 2);
    CHECK(std::abs(state.amplitudes[0] - cplx(1.0 / std::sqrt(2.0), 0.0)) < 1e-12);
    CHECK(std::abs(state.amplitudes[1] - cplx(1.0 / std::sqrt(2.0), 0.0)) < 1e-12);
}

TEST_CASE("prepared states are normalized") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 1 + rng() % 5;
        auto x = random_samples(rng, 1, n);
        auto state = feature_map_state(x.row(0), FeatureMapSpec::full(n, 2));
        CHECK(std::abs(state_norm(state) - 1.0) < 1e-10);
    }
}

TEST_CASE("two-qubit state matches the dense matrix oracle") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unit(0.0, M_PI);
    for (int reps = 1; reps <= 3; ++reps) {
        for (int trial = 0; trial < 10; ++trial) {
            double x0 = unit(rng), x1 = unit(rng);
            auto state =
                feature_map_state(std::vector<double>{x0, x1}, FeatureMapSpec::full(2, reps));
            auto oracle = dense_two_qubit_state(x0, x1, reps);
            for (int b = 0; b < 4; ++b)
                CHECK(std::abs(state.amplitudes[std::size_t(b)] - oracle[std::size_t(b)]) <
                      1e-12);
        }
    }
}

TEST_CASE("walsh_hadamard is self-inverse") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<cplx> amps(32);
    for (auto& a : amps) a = cplx(gauss(rng), gauss(rng));
    auto original = amps;
    walsh_hadamard(amps);
    walsh_hadamard(amps);
    for (std::size_t i = 0; i < amps.size(); ++i)
        CHECK(std::abs(amps[i] - original[i]) < 1e-12);
}

TEST_CASE("kernel diagonal, symmetry, and range") {
    std::mt19937_64 rng(11);
    auto spec = FeatureMapSpec::full(3, 2);
    auto x = random_samples(rng, 6, 3);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        CHECK(kernel_entry(x.row(i), x.row(i), spec) == doctest::Approx(1.0).epsilon(1e-10));
        for (std::size_t j = i + 1; j < x.rows(); ++j) {
            double kij = kernel_entry(x.row(i), x.row(j), spec);
            double kji = kernel_entry(x.row(j), x.row(i), spec);
            CHECK(std::abs(kij - kji) < 1e-12);
            CHECK(kij >= 0.0);
            CHECK(kij <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("single-qubit closed form: K = cos^2(x1 - x2)") {
    FeatureMapSpec spec;
    spec.n = 1;
    spec.reps = 1;
    CHECK(kernel_entry(std::vector<double>{0.0}, std::vector<double>{M_PI / 2.0}, spec) ==
          doctest::Approx(0.0).epsilon(1e-10));

    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> unit(0.0, M_PI);
    for (int trial = 0; trial < 100; ++trial) {
        double a = unit(rng), b = unit(rng);
        double expected = std::cos(a - b) * std::cos(a - b);
        double got = kernel_entry(std::vector<double>{a}, std::vector<double>{b}, spec);
        CHECK(std::abs(got - expected) < 1e-10);
    }
}

TEST_CASE("global phase leaves kernel entries unchanged") {
    std::mt19937_64 rng(17);
    auto spec = FeatureMapSpec::full(3, 2);
    auto x = random_samples(rng, 2, 3);
    auto s1 = feature_map_state(x.row(0), spec);
    auto s2 = feature_map_state(x.row(1), spec);

    cplx overlap = 0.0;
    for (std::size_t i = 0; i < s1.amplitudes.size(); ++i)
        overlap += std::conj(s1.amplitudes[i]) * s2.amplitudes[i];
    double base = std::norm(overlap);

    cplx phase = std::polar(1.0, 1.234);
    for (auto& a : s1.amplitudes) a *= phase;
    overlap = 0.0;
    for (std::size_t i = 0; i < s1.amplitudes.size(); ++i)
        overlap += std::conj(s1.amplitudes[i]) * s2.amplitudes[i];
    CHECK(std::abs(std::norm(overlap) - base) < 1e-12);
}

TEST_CASE("kernel_matrix over a single row is [[1.0]]") {
    std::mt19937_64 rng(18);
    auto x = random_samples(rng, 1, 3);
    auto gram = kernel_matrix(x, FeatureMapSpec::full(3, 2));
    REQUIRE(gram.rows() == 1);
    REQUIRE(gram.cols() == 1);
    CHECK(gram(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("kernel_matrix equals brute-force pairwise entries") {
    std::mt19937_64 rng(19);
    auto spec = FeatureMapSpec::full(4, 2);
    auto x = random_samples(rng, 8, 4);
    auto gram = kernel_matrix(x, spec);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j)
            CHECK(std::abs(gram(i, j) - kernel_entry(x.row(i), x.row(j), spec)) < 1e-12);

    auto cross = kernel_matrix(x, x, spec);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = 0; j < 8; ++j) CHECK(std::abs(cross(i, j) - gram(i, j)) < 1e-12);
}

TEST_CASE("kernel Gram matrices are PSD with unit diagonal") {
    std::mt19937_64 rng(23);
    for (std::size_t n : {2u, 4u}) {
        auto x = random_samples(rng, 20, n);
        auto gram = kernel_matrix(x, FeatureMapSpec::full(n, 2));
        for (std::size_t i = 0; i < gram.rows(); ++i) {
            CHECK(std::abs(gram(i, i) - 1.0) < 1e-10);
            for (std::size_t j = 0; j < gram.cols(); ++j)
                CHECK(gram(i, j) == gram(j, i)); // mirrored exactly
        }
        auto eig = linalg::jacobi_eigen(gram);
        CHECK(eig.eigenvalues.back() >= -1e-8);
    }
}

TEST_CASE("qubit capacity and shape errors") {
    FeatureMapSpec spec;
    spec.n = 30;
    spec.reps = 1;
    std::vector<double> x(30, 0.1);
    CHECK_THROWS_AS(feature_map_state(x, spec), CapacityError);
    CHECK_THROWS_AS(
        feature_map_state(std::vector<double>{0.1}, FeatureMapSpec::full(2, 1)), ShapeError);
    CHECK_THROWS_AS(kernel_entry(std::vector<double>{0.1}, std::vector<double>{0.1, 0.2},
                                 FeatureMapSpec::full(2, 1)),
                    ShapeError);
}

// ---------------------------------------------------------------------------
// SMO on precomputed kernels
// ---------------------------------------------------------------------------

namespace {

/// Block-diagonal near-identity kernel aligned with labels: two tight
/// clusters with high in-cluster overlap.
Matrix block_kernel(std::size_t per_class, double in_block, double cross) {
    std::size_t s = 2 * per_class;
    Matrix k(s, s);
    for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) {
            bool same = (i < per_class) == (j < per_class);
            k(i, j) = i == j ? 1.0 : (same ? in_block : cross);
        }
    return k;
}

double dual_objective(const Matrix& k, const std::vector<int>& y,
                      const std::vector<double>& alpha) {
    double obj = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        obj += alpha[i];
        for (std::size_t j = 0; j < alpha.size(); ++j)
            obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k(i, j);
    }
    return obj;
}

} // namespace

TEST_CASE("svm on a block kernel separates and beats the QP grid oracle") {
    Matrix k = block_kernel(2, 0.9, 0.05);
    std::vector<int> y{+1, +1, -1, -1};
    const double C = 1.0;
    auto model = svm_train_precomputed(k, y, C, 1e-4, 50, 1);

    auto pred = svm_predict(model, k);
    CHECK(pred == y);

    // Dense grid oracle over alpha in {0, C/2, C}^4 restricted to the
    // equality constraint; SMO must match or beat the best grid point.
    double best = -1e300;
    const double grid[3] = {0.0, C / 2.0, C};
    for (double a0 : grid)
        for (double a1 : grid)
            for (double a2 : grid)
                for (double a3 : grid) {
                    std::vector<double> alpha{a0, a1, a2, a3};
                    double eq = a0 * y[0] + a1 * y[1] + a2 * y[2] + a3 * y[3];
                    if (std::abs(eq) > 1e-12) continue;
                    best = std::max(best, dual_objective(k, y, alpha));
                }
    CHECK(dual_objective(k, y, model.alpha) >= best - 1e-6);
}

TEST_CASE("dual feasibility at convergence") {
    std::mt19937_64 rng(29);
    auto x = random_samples(rng, 14, 3);
    auto gram = kernel_matrix(x, FeatureMapSpec::full(3, 2));
    std::vector<int> y(14);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i % 2 == 0 ? +1 : -1;

    const double C = 1.0;
    auto model = svm_train_precomputed(gram, y, C, 1e-3, 50, 7);
    double balance = 0.0;
    for (std::size_t s = 0; s < y.size(); ++s) {
        CHECK(model.alpha[s] >= 0.0);
        CHECK(model.alpha[s] <= C);
        balance += model.alpha[s] * y[s];
    }
    CHECK(std::abs(balance) < 1e-6);
}

TEST_CASE("duplicated training set leaves decision values unchanged") {
    Matrix k = block_kernel(3, 0.85, 0.1);
    std::vector<int> y{+1, +1, +1, -1, -1, -1};
    auto base = svm_train_precomputed(k, y, 1.0, 1e-6, 80, 3);

    // Duplicate every row/column.
    std::size_t s = y.size();
    Matrix k2(2 * s, 2 * s);
    std::vector<int> y2(2 * s);
    for (std::size_t i = 0; i < 2 * s; ++i) {
        y2[i] = y[i % s];
        for (std::size_t j = 0; j < 2 * s; ++j) k2(i, j) = k(i % s, j % s);
    }
    auto doubled = svm_train_precomputed(k2, y2, 1.0, 1e-6, 80, 3);

    // Probe: kernel blocks of every original point against both models.
    Matrix probe1(s, s), probe2(s, 2 * s);
    for (std::size_t t = 0; t < s; ++t)
        for (std::size_t j = 0; j < 2 * s; ++j) {
            if (j < s) probe1(t, j) = k(t, j);
            probe2(t, j) = k(t, j % s);
        }
    auto f1 = svm_decision_values(base, probe1);
    auto f2 = svm_decision_values(doubled, probe2);
    for (std::size_t t = 0; t < s; ++t) CHECK(f1[t] == doctest::Approx(f2[t]).epsilon(1e-6));
}

TEST_CASE("all-zero duals predict the bias sign") {
    SvmModel model;
    model.alpha.assign(5, 0.0);
    model.labels = {+1, -1, +1, -1, +1};
    model.bias = 0.3;
    model.C = 1.0;
    Matrix k_test(3, 5, 0.5);
    auto pred = svm_predict(model, k_test);
    for (int p : pred) CHECK(p == +1);
}

TEST_CASE("label flip mirrors decision values") {
    Matrix k = block_kernel(3, 0.8, 0.15);
    std::vector<int> y{+1, +1, +1, -1, -1, -1};
    std::vector<int> y_flip{-1, -1, -1, +1, +1, +1};
    auto a = svm_train_precomputed(k, y, 1.0, 1e-6, 80, 11);
    auto b = svm_train_precomputed(k, y_flip, 1.0, 1e-6, 80, 11);
    auto fa = svm_decision_values(a, k);
    auto fb = svm_decision_values(b, k);
    for (std::size_t t = 0; t < y.size(); ++t)
        CHECK(fa[t] == doctest::Approx(-fb[t]).epsilon(1e-4));
}

TEST_CASE("sweep objective is non-decreasing") {
    std::mt19937_64 rng(31);
    auto x = random_samples(rng, 16, 3);
    auto gram = kernel_matrix(x, FeatureMapSpec::full(3, 2));
    std::vector<int> y(16);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 8 ? +1 : -1;

    std::vector<double> trace;
    svm_train_precomputed(gram, y, 1.0, 1e-3, 50, 5, &trace);
    REQUIRE(trace.size() > 1);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] >= trace[i - 1] - 1e-9);
}

TEST_CASE("svm_train_precomputed error paths") {
    Matrix k = block_kernel(2, 0.9, 0.1);
    CHECK_THROWS_AS(svm_train_precomputed(k, {+1, +1, +1, +1}, 1.0), TrainError);
    CHECK_THROWS_AS(svm_train_precomputed(Matrix(2, 3), {+1, -1}, 1.0), ShapeError);
    Matrix asym = k;
    asym(0, 1) += 0.5;
    CHECK_THROWS_AS(svm_train_precomputed(asym, {+1, +1, -1, -1}, 1.0), ShapeError);

    SvmModel model;
    model.alpha.assign(4, 0.0);
    model.labels = {+1, +1, -1, -1};
    CHECK_THROWS_AS(svm_decision_values(model, Matrix(2, 3)), ShapeError);
}

TEST_CASE("gram matrices round-trip through the flat binary format") {
    std::mt19937_64 rng(37);
    auto x = random_samples(rng, 5, 2);
    auto gram = kernel_matrix(x, FeatureMapSpec::full(2, 2));
    auto path = (std::filesystem::temp_directory_path() / "qvision_gram_test.bin").string();
    save_gram(path, gram);
    auto back = load_gram(path);
    CHECK(back == gram);
    std::filesystem::remove(path);
}
