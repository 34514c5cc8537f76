#include "qvision/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "qvision/linalg.hpp"

namespace qvision::reduce {
namespace {

/// Largest-|coordinate| entry positive; ties go to the lowest index.
void fix_sign(std::span<double> component) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < component.size(); ++j)
        if (std::abs(component[j]) > std::abs(component[best])) best = j;
    if (component[best] < 0.0)
        for (double& v : component) v = -v;
}

} // namespace

PcaModel pca_fit(const Matrix& x, std::size_t k) {
    const std::size_t S = x.rows(), d = x.cols();
    if (S < 2) throw ShapeError("pca_fit: need at least 2 samples");
    if (k < 1 || k > std::min(S - 1, d))
        throw ShapeError("pca_fit: k out of range");

    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < S; ++i) {
        auto row = x.row(i);
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += row[j];
    }
    for (double& v : model.mean) v /= double(S);

    Matrix centered(S, d);
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = 0; j < d; ++j) centered(i, j) = x(i, j) - model.mean[j];

    model.components = Matrix(k, d);
    model.eigenvalues.assign(k, 0.0);

    if (S < d) {
        // Snapshot method: eigendecompose the S x S Gram matrix of centered
        // rows and back-project. Covariance eigenvalues are gram / S.
        Matrix gram(S, S);
        for (std::size_t i = 0; i < S; ++i)
            for (std::size_t j = i; j < S; ++j) {
                double g = linalg::dot(centered.row(i), centered.row(j));
                gram(i, j) = g;
                gram(j, i) = g;
            }
        auto eig = linalg::jacobi_eigen(gram);
        double top = std::max(eig.eigenvalues.front(), 1.0);
        for (std::size_t c = 0; c < k; ++c) {
            double lambda_gram = eig.eigenvalues[c];
            if (lambda_gram < 1e-12 * top)
                throw NumericalError("pca_fit: requested components exceed data rank");
            model.eigenvalues[c] = std::max(lambda_gram, 0.0) / double(S);
            auto u = eig.eigenvectors.row(c);
            auto comp = model.components.row(c);
            for (std::size_t i = 0; i < S; ++i) {
                double ui = u[i];
                auto row = centered.row(i);
                for (std::size_t j = 0; j < d; ++j) comp[j] += ui * row[j];
            }
            double norm = std::sqrt(linalg::dot(comp, comp));
            for (double& v : comp) v /= norm;
        }
    } else {
        Matrix cov(d, d);
        for (std::size_t i = 0; i < S; ++i) {
            auto row = centered.row(i);
            for (std::size_t a = 0; a < d; ++a)
                for (std::size_t b = a; b < d; ++b) cov(a, b) += row[a] * row[b];
        }
        for (std::size_t a = 0; a < d; ++a)
            for (std::size_t b = a; b < d; ++b) {
                cov(a, b) /= double(S);
                cov(b, a) = cov(a, b);
            }
        auto eig = linalg::jacobi_eigen(cov);
        for (std::size_t c = 0; c < k; ++c) {
            model.eigenvalues[c] = std::max(eig.eigenvalues[c], 0.0);
            auto src = eig.eigenvectors.row(c);
            std::copy(src.begin(), src.end(), model.components.row(c).begin());
        }
    }

    for (std::size_t c = 0; c < k; ++c) fix_sign(model.components.row(c));
    return model;
}

Matrix pca_transform(const PcaModel& model, const Matrix& x) {
    if (x.cols() != model.n_features())
        throw ShapeError("pca_transform: feature count mismatch");
    Matrix out(x.rows(), model.k());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t c = 0; c < model.k(); ++c) {
            double s = 0.0;
            auto comp = model.components.row(c);
            auto row = x.row(i);
            for (std::size_t j = 0; j < model.n_features(); ++j)
                s += (row[j] - model.mean[j]) * comp[j];
            out(i, c) = s;
        }
    return out;
}

Matrix pca_inverse_transform(const PcaModel& model, const Matrix& scores) {
    if (scores.cols() != model.k())
        throw ShapeError("pca_inverse_transform: score width mismatch");
    Matrix out(scores.rows(), model.n_features());
    for (std::size_t i = 0; i < scores.rows(); ++i) {
        auto row = out.row(i);
        for (std::size_t j = 0; j < model.n_features(); ++j) row[j] = model.mean[j];
        for (std::size_t c = 0; c < model.k(); ++c) {
            double s = scores(i, c);
            auto comp = model.components.row(c);
            for (std::size_t j = 0; j < model.n_features(); ++j) row[j] += s * comp[j];
        }
    }
    return out;
}

void pca_save_json(const std::string& path, const PcaModel& model) {
    nlohmann::json j;
    j["k"] = model.k();
    j["n_features"] = model.n_features();
    j["mean"] = model.mean;
    j["eigenvalues"] = model.eigenvalues;
    j["components"] = model.components.values(); // row-major k x n_features
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump() << "\n";
}

PcaModel pca_load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        PcaModel model;
        std::size_t k = j.at("k").get<std::size_t>();
        std::size_t d = j.at("n_features").get<std::size_t>();
        model.mean = j.at("mean").get<std::vector<double>>();
        model.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
        auto flat = j.at("components").get<std::vector<double>>();
        if (model.mean.size() != d || model.eigenvalues.size() != k || flat.size() != k * d)
            throw IoError("PCA model '" + path + "' has inconsistent shapes");
        model.components = Matrix(k, d);
        std::copy(flat.begin(), flat.end(), model.components.values().begin());
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("malformed PCA model '" + path + "': " + e.what());
    }
}

} // namespace qvision::reduce
