#include "qvision/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include "qvision/linalg.hpp"
#include "qvision/qboost.hpp"

namespace qvision::baselines {
namespace {

void require_both_classes(const std::vector<int>& y, const char* who) {
    bool pos = false, neg = false;
    for (int v : y) (v > 0 ? pos : neg) = true;
    if (!pos || !neg) throw TrainError(std::string(who) + ": both classes required");
}

} // namespace

LinearSvmModel linear_svm_fit(const Matrix& x, const std::vector<int>& y, double C,
                              int max_epochs, double tol, std::uint64_t seed) {
    const std::size_t S = x.rows(), d = x.cols();
    if (S == 0 || d == 0) throw ShapeError("linear_svm_fit: empty matrix");
    if (y.size() != S) throw ShapeError("linear_svm_fit: label count mismatch");
    require_both_classes(y, "linear_svm_fit");

    // Bias handled as an implicit constant feature appended to every row.
    std::vector<double> w(d + 1, 0.0);
    std::vector<double> alpha(S, 0.0);
    std::vector<double> q_diag(S);
    for (std::size_t i = 0; i < S; ++i)
        q_diag[i] = linalg::dot(x.row(i), x.row(i)) + 1.0;

    std::vector<std::size_t> order(S);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);

    for (int epoch = 0; epoch < max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double max_change = 0.0;
        for (std::size_t s : order) {
            auto row = x.row(s);
            double margin = linalg::dot({w.data(), d}, row) + w[d];
            double grad = double(y[s]) * margin - 1.0;
            double a_new = std::clamp(alpha[s] - grad / q_diag[s], 0.0, C);
            double delta = a_new - alpha[s];
            if (delta == 0.0) continue;
            alpha[s] = a_new;
            for (std::size_t j = 0; j < d; ++j) w[j] += delta * y[s] * row[j];
            w[d] += delta * y[s];
            max_change = std::max(max_change, std::abs(delta));
        }
        if (max_change < tol) break;
    }

    LinearSvmModel model;
    model.weights.assign(w.begin(), w.begin() + std::ptrdiff_t(d));
    model.bias = w[d];
    model.C = C;
    return model;
}

double linear_svm_decision(const LinearSvmModel& model, std::span<const double> x) {
    if (x.size() != model.weights.size())
        throw ShapeError("linear_svm_decision: feature count mismatch");
    return linalg::dot(model.weights, x) + model.bias;
}

std::vector<int> linear_svm_predict(const LinearSvmModel& model, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        out[i] = sign_pm(linear_svm_decision(model, x.row(i)));
    return out;
}

Matrix rbf_kernel_matrix(const Matrix& a, const Matrix& b, double gamma) {
    if (a.cols() != b.cols()) throw ShapeError("rbf_kernel_matrix: feature count mismatch");
    Matrix k(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
            k(i, j) = std::exp(-gamma * linalg::squared_distance(a.row(i), b.row(j)));
    return k;
}

RbfSvmModel rbf_svm_fit(const Matrix& x, const std::vector<int>& y, double C,
                        const Gamma& gamma, double tol, std::uint64_t seed) {
    if (x.rows() == 0 || x.cols() == 0) throw ShapeError("rbf_svm_fit: empty matrix");
    require_both_classes(y, "rbf_svm_fit");

    double g;
    if (std::holds_alternative<double>(gamma)) {
        g = std::get<double>(gamma);
        if (g <= 0.0) throw ConfigError("rbf_svm_fit: gamma must be positive");
    } else {
        if (std::get<std::string>(gamma) != "scale")
            throw ConfigError("rbf_svm_fit: unknown gamma policy '" +
                              std::get<std::string>(gamma) + "'");
        // gamma = 1 / (n_features * var(X)), population variance of all entries.
        double mean = 0.0;
        for (double v : x.values()) mean += v;
        mean /= double(x.values().size());
        double var = 0.0;
        for (double v : x.values()) var += (v - mean) * (v - mean);
        var /= double(x.values().size());
        if (var <= 0.0)
            throw TrainError("rbf_svm_fit: zero variance, gamma=\"scale\" undefined");
        g = 1.0 / (double(x.cols()) * var);
    }

    Matrix k = rbf_kernel_matrix(x, x, g);
    qkernel::SvmModel svm = qkernel::svm_train_precomputed(k, y, C, tol, 50, seed);

    RbfSvmModel model;
    model.gamma = g;
    model.C = C;
    model.bias = svm.bias;
    model.support_vectors = Matrix(svm.support_indices.size(), x.cols());
    for (std::size_t r = 0; r < svm.support_indices.size(); ++r) {
        std::size_t s = svm.support_indices[r];
        auto src = x.row(s);
        std::copy(src.begin(), src.end(), model.support_vectors.row(r).begin());
        model.dual_coef.push_back(svm.dual_coef(s));
    }
    return model;
}

double rbf_svm_decision(const RbfSvmModel& model, std::span<const double> x) {
    if (x.size() != model.support_vectors.cols())
        throw ShapeError("rbf_svm_decision: feature count mismatch");
    double f = model.bias;
    for (std::size_t r = 0; r < model.support_vectors.rows(); ++r)
        f += model.dual_coef[r] *
             std::exp(-model.gamma * linalg::squared_distance(model.support_vectors.row(r), x));
    return f;
}

std::vector<int> rbf_svm_predict(const RbfSvmModel& model, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i)
        out[i] = sign_pm(rbf_svm_decision(model, x.row(i)));
    return out;
}

AdaBoostModel adaboost_fit(const Matrix& x, const std::vector<int>& y,
                           std::size_t n_estimators, int depth, std::uint64_t seed) {
    qboost::WeakEnsemble ens = qboost::train_weak_ensemble(x, y, n_estimators, depth, seed);
    AdaBoostModel model;
    model.trees = std::move(ens.trees);
    model.stage_weights = std::move(ens.stage_weights);
    return model;
}

int adaboost_predict(const AdaBoostModel& model, std::span<const double> x) {
    double vote = 0.0;
    for (std::size_t i = 0; i < model.trees.size(); ++i)
        vote += model.stage_weights[i] * trees::tree_predict(model.trees[i], x);
    return sign_pm(vote);
}

std::vector<int> adaboost_predict_batch(const AdaBoostModel& model, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = adaboost_predict(model, x.row(i));
    return out;
}

std::string adaboost_to_json(const AdaBoostModel& model) {
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& tree : model.trees)
        trees_json.push_back(nlohmann::json::parse(trees::tree_to_json(tree)));
    nlohmann::json j{{"stage_weights", model.stage_weights}, {"trees", trees_json}};
    return j.dump();
}

AdaBoostModel adaboost_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        AdaBoostModel model;
        model.stage_weights = j.at("stage_weights").get<std::vector<double>>();
        for (const auto& t : j.at("trees"))
            model.trees.push_back(trees::tree_from_json(t.dump()));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed AdaBoost model JSON: ") + e.what());
    }
}

std::string linear_svm_to_json(const LinearSvmModel& model) {
    nlohmann::json j{{"weights", model.weights}, {"bias", model.bias}, {"C", model.C}};
    return j.dump();
}

LinearSvmModel linear_svm_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        LinearSvmModel model;
        model.weights = j.at("weights").get<std::vector<double>>();
        model.bias = j.at("bias").get<double>();
        model.C = j.at("C").get<double>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed linear SVM JSON: ") + e.what());
    }
}

std::string rbf_svm_to_json(const RbfSvmModel& model) {
    nlohmann::json j{
        {"support_vectors", model.support_vectors.values()},
        {"n_support", model.support_vectors.rows()},
        {"n_features", model.support_vectors.cols()},
        {"dual_coef", model.dual_coef},
        {"bias", model.bias},
        {"gamma", model.gamma},
        {"C", model.C},
    };
    return j.dump();
}

RbfSvmModel rbf_svm_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        RbfSvmModel model;
        std::size_t rows = j.at("n_support").get<std::size_t>();
        std::size_t cols = j.at("n_features").get<std::size_t>();
        auto flat = j.at("support_vectors").get<std::vector<double>>();
        if (flat.size() != rows * cols) throw IoError("rbf SVM JSON shape mismatch");
        model.support_vectors = Matrix(rows, cols);
        std::copy(flat.begin(), flat.end(), model.support_vectors.values().begin());
        model.dual_coef = j.at("dual_coef").get<std::vector<double>>();
        model.bias = j.at("bias").get<double>();
        model.gamma = j.at("gamma").get<double>();
        model.C = j.at("C").get<double>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed rbf SVM JSON: ") + e.what());
    }
}

} // namespace qvision::baselines
