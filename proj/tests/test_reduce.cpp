#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "qvision/linalg.hpp"
#include "qvision/reduce.hpp"

using namespace qvision;
using namespace qvision::reduce;

namespace {

Matrix random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix m(rows, cols);
    for (double& v : m.values()) v = gauss(rng);
    return m;
}

/// Direct covariance-eigendecomposition PCA, the oracle for the snapshot
/// path. Only feasible for small feature counts.
PcaModel direct_pca(const Matrix& x, std::size_t k) {
    const std::size_t S = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& v : mean) v /= double(S);
    Matrix cov(d, d);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = 0; b < d; ++b)
                cov(a, b) += (x(i, a) - mean[a]) * (x(i, b) - mean[b]) / double(S);
    auto eig = linalg::jacobi_eigen(cov);
    PcaModel model;
    model.mean = mean;
    model.components = Matrix(k, d);
    model.eigenvalues.assign(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        model.eigenvalues[c] = eig.eigenvalues[c];
        auto src = eig.eigenvectors.row(c);
        std::copy(src.begin(), src.end(), model.components.row(c).begin());
    }
    return model;
}

} // namespace

TEST_CASE("jacobi_eigen solves a hand-checkable 2x2 system") {
    Matrix a = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
    auto eig = linalg::jacobi_eigen(a);
    CHECK(eig.eigenvalues[0] == doctest::Approx(3.0));
    CHECK(eig.eigenvalues[1] == doctest::Approx(1.0));
    // Eigenvector of 3 is (1,1)/sqrt(2) up to sign.
    double ratio = eig.eigenvectors(0, 0) / eig.eigenvectors(0, 1);
    CHECK(ratio == doctest::Approx(1.0));
    CHECK_THROWS_AS(linalg::jacobi_eigen(Matrix(2, 3)), ShapeError);
    // Sweep budget exhausted without reaching the tolerance.
    CHECK_THROWS_AS(linalg::jacobi_eigen(a, 1e-10, 0), NumericalError);
}

TEST_CASE("jacobi_eigen reconstructs random symmetric matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        std::size_t n = 6 + trial;
        Matrix a(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                double v = std::normal_distribution<double>(0.0, 2.0)(rng);
                a(i, j) = v;
                a(j, i) = v;
            }
        auto eig = linalg::jacobi_eigen(a);
        // A v = lambda v for every pair.
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t r = 0; r < n; ++r) {
                double av = 0.0;
                for (std::size_t c = 0; c < n; ++c) av += a(r, c) * eig.eigenvectors(k, c);
                CHECK(av == doctest::Approx(eig.eigenvalues[k] * eig.eigenvectors(k, r))
                                .epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("pca_fit on collinear 2-D points finds the diagonal direction") {
    Matrix x = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}, {2.0, 2.0}, {3.0, 3.0}});
    auto model = pca_fit(x, 2);
    // Sign convention: largest-magnitude coordinate positive.
    CHECK(model.components(0, 0) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(model.components(0, 1) == doctest::Approx(1.0 / std::sqrt(2.0)));
    CHECK(model.eigenvalues[1] < 1e-10);
}

TEST_CASE("complete basis reconstructs exactly") {
    std::mt19937_64 rng(11);
    Matrix x = random_matrix(rng, 12, 4);
    auto model = pca_fit(x, 4);
    auto scores = pca_transform(model, x);
    auto back = pca_inverse_transform(model, scores);
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            CHECK(back(i, j) == doctest::Approx(x(i, j)).epsilon(1e-8));
}

TEST_CASE("snapshot path agrees with the direct covariance oracle") {
    std::mt19937_64 rng(13);
    // 4 samples x 6 features forces the Gram path; the oracle decomposes
    // the 6x6 covariance directly.
    Matrix x = random_matrix(rng, 4, 6);
    auto snapshot = pca_fit(x, 3);
    auto direct = direct_pca(x, 3);
    for (std::size_t c = 0; c < 3; ++c) {
        CHECK(snapshot.eigenvalues[c] == doctest::Approx(direct.eigenvalues[c]).epsilon(1e-8));
        // Components match up to sign.
        double dot = linalg::dot(snapshot.components.row(c), direct.components.row(c));
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("gram-path components on a 20x5 matrix match the direct oracle") {
    std::mt19937_64 rng(17);
    Matrix wide = random_matrix(rng, 20, 5);
    // Transpose trick: make a 5x20 matrix so S < d triggers the snapshot.
    Matrix x(5, 20);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 20; ++j) x(i, j) = wide(j, i);
    auto snapshot = pca_fit(x, 4);
    auto direct = direct_pca(x, 4);
    for (std::size_t c = 0; c < 4; ++c) {
        CHECK(snapshot.eigenvalues[c] == doctest::Approx(direct.eigenvalues[c]).epsilon(1e-8));
        double dot = linalg::dot(snapshot.components.row(c), direct.components.row(c));
        CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-8));
    }
}

TEST_CASE("components are orthonormal") {
    std::mt19937_64 rng(19);
    Matrix x = random_matrix(rng, 10, 30); // snapshot path
    auto model = pca_fit(x, 6);
    for (std::size_t a = 0; a < 6; ++a)
        for (std::size_t b = a; b < 6; ++b) {
            double dot = linalg::dot(model.components.row(a), model.components.row(b));
            CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
        }
}

TEST_CASE("transforming the mean row gives the zero vector") {
    std::mt19937_64 rng(23);
    Matrix x = random_matrix(rng, 15, 8);
    auto model = pca_fit(x, 3);
    Matrix mean_row(1, 8);
    std::copy(model.mean.begin(), model.mean.end(), mean_row.row(0).begin());
    auto scores = pca_transform(model, mean_row);
    for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(scores(0, c)) < 1e-9);
}

TEST_CASE("score variance equals the eigenvalue on the fitting data") {
    std::mt19937_64 rng(29);
    Matrix x = random_matrix(rng, 25, 7);
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, 0) *= 4.0; // stretch one axis
    auto model = pca_fit(x, 5);
    auto scores = pca_transform(model, x);
    for (std::size_t c = 0; c < 5; ++c) {
        double mean = 0.0, var = 0.0;
        for (std::size_t i = 0; i < scores.rows(); ++i) mean += scores(i, c);
        mean /= double(scores.rows());
        for (std::size_t i = 0; i < scores.rows(); ++i)
            var += (scores(i, c) - mean) * (scores(i, c) - mean);
        var /= double(scores.rows());
        CHECK(var == doctest::Approx(model.eigenvalues[c]).epsilon(1e-6));
    }
}

TEST_CASE("captured variance is monotone in k and bounded by the total") {
    std::mt19937_64 rng(31);
    Matrix x = random_matrix(rng, 18, 6);
    double total = 0.0;
    {
        std::vector<double> mean(6, 0.0);
        for (std::size_t i = 0; i < 18; ++i)
            for (std::size_t j = 0; j < 6; ++j) mean[j] += x(i, j) / 18.0;
        for (std::size_t i = 0; i < 18; ++i)
            for (std::size_t j = 0; j < 6; ++j)
                total += (x(i, j) - mean[j]) * (x(i, j) - mean[j]) / 18.0;
    }
    double prev = 0.0;
    for (std::size_t k = 1; k <= 6; ++k) {
        auto model = pca_fit(x, k);
        double captured = 0.0;
        for (double v : model.eigenvalues) captured += v;
        CHECK(captured >= prev - 1e-10);
        CHECK(captured <= total + 1e-8);
        prev = captured;
    }
}

TEST_CASE("pca_fit validates k and shapes") {
    std::mt19937_64 rng(37);
    Matrix x = random_matrix(rng, 6, 4);
    CHECK_THROWS_AS(pca_fit(x, 0), ShapeError);
    CHECK_THROWS_AS(pca_fit(x, 6), ShapeError); // k > min(S-1, d)
    auto model = pca_fit(x, 2);
    Matrix wrong(3, 5);
    CHECK_THROWS_AS(pca_transform(model, wrong), ShapeError);
}

TEST_CASE("pca model JSON round-trip") {
    std::mt19937_64 rng(41);
    Matrix x = random_matrix(rng, 9, 5);
    auto model = pca_fit(x, 3);
    auto path = (std::filesystem::temp_directory_path() / "qvision_pca_test.json").string();
    pca_save_json(path, model);
    auto back = pca_load_json(path);
    CHECK(back.mean == model.mean);
    CHECK(back.eigenvalues == model.eigenvalues);
    CHECK(back.components == model.components);
    std::filesystem::remove(path);
}
