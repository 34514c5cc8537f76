#include "qvision/qkernel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace qvision::qkernel {
namespace {

void check_spec(const FeatureMapSpec& spec) {
    if (spec.n == 0) throw ShapeError("feature map needs at least one qubit");
    if (spec.n > kMaxQubits)
        throw CapacityError("feature map beyond the " + std::to_string(kMaxQubits) +
                            "-qubit statevector cap");
    if (spec.reps < 1) throw ConfigError("feature map reps must be >= 1");
    for (auto [i, j] : spec.pairs)
        if (i >= spec.n || j >= spec.n || i == j)
            throw ConfigError("feature map pair indices out of range");
}

/// Diagonal phase of the encoding layer for every basis state:
/// sum_i x_i s_i + sum_{(i,j)} (pi-x_i)(pi-x_j) s_i s_j with s_i = +1/-1
/// for bit i clear/set.
std::vector<double> phase_table(std::span<const double> x, const FeatureMapSpec& spec) {
    const std::size_t dim = std::size_t(1) << spec.n;
    std::vector<double> phases(dim);
    std::vector<double> pair_phi(spec.pairs.size());
    for (std::size_t p = 0; p < spec.pairs.size(); ++p) {
        auto [i, j] = spec.pairs[p];
        pair_phi[p] = (M_PI - x[i]) * (M_PI - x[j]);
    }
    for (std::size_t b = 0; b < dim; ++b) {
        double phi = 0.0;
        for (std::size_t i = 0; i < spec.n; ++i)
            phi += (b >> i) & 1 ? -x[i] : x[i];
        for (std::size_t p = 0; p < spec.pairs.size(); ++p) {
            auto [i, j] = spec.pairs[p];
            int s = (int((b >> i) & 1) + int((b >> j) & 1)) & 1;
            phi += s ? -pair_phi[p] : pair_phi[p];
        }
        phases[b] = phi;
    }
    return phases;
}

std::complex<double> state_overlap(const StateVector& a, const StateVector& b) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i)
        s += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    return s;
}

} // namespace

FeatureMapSpec FeatureMapSpec::full(std::size_t n, int reps) {
    FeatureMapSpec spec;
    spec.n = n;
    spec.reps = reps;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) spec.pairs.emplace_back(i, j);
    return spec;
}

void walsh_hadamard(std::vector<std::complex<double>>& amplitudes) {
    const std::size_t dim = amplitudes.size();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::size_t len = 1; len < dim; len <<= 1) {
        for (std::size_t block = 0; block < dim; block += len << 1) {
            for (std::size_t j = block; j < block + len; ++j) {
                auto a = amplitudes[j];
                auto b = amplitudes[j + len];
                amplitudes[j] = (a + b) * inv_sqrt2;
                amplitudes[j + len] = (a - b) * inv_sqrt2;
            }
        }
    }
}

StateVector feature_map_state(std::span<const double> x, const FeatureMapSpec& spec) {
    FeatureMapSpec effective = spec;
    if (effective.pairs.empty() && effective.n > 1)
        effective = FeatureMapSpec::full(spec.n, spec.reps);
    check_spec(effective);
    if (x.size() != effective.n)
        throw ShapeError("feature_map_state: feature count does not match qubit count");

    const std::size_t dim = std::size_t(1) << effective.n;
    StateVector state;
    state.n = effective.n;
    state.amplitudes.assign(dim, 0.0);
    state.amplitudes[0] = 1.0;

    auto phases = phase_table(x, effective);
    std::vector<std::complex<double>> cis(dim);
    for (std::size_t b = 0; b < dim; ++b)
        cis[b] = std::complex<double>(std::cos(phases[b]), std::sin(phases[b]));

    for (int r = 0; r < effective.reps; ++r) {
        walsh_hadamard(state.amplitudes);
        for (std::size_t b = 0; b < dim; ++b) state.amplitudes[b] *= cis[b];
    }
    return state;
}

double kernel_entry(std::span<const double> x1, std::span<const double> x2,
                    const FeatureMapSpec& spec) {
    if (x1.size() != x2.size()) throw ShapeError("kernel_entry: length mismatch");
    auto s1 = feature_map_state(x1, spec);
    auto s2 = feature_map_state(x2, spec);
    return std::norm(state_overlap(s1, s2));
}

Matrix kernel_matrix(const Matrix& x, const FeatureMapSpec& spec) {
    const std::size_t m = x.rows();
    if (m == 0) throw ShapeError("kernel_matrix: empty sample set");
    std::vector<StateVector> states;
    states.reserve(m);
    for (std::size_t i = 0; i < m; ++i) states.push_back(feature_map_state(x.row(i), spec));

    Matrix gram(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        gram(i, i) = std::norm(state_overlap(states[i], states[i]));
        for (std::size_t j = i + 1; j < m; ++j) {
            double k = std::norm(state_overlap(states[i], states[j]));
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    return gram;
}

Matrix kernel_matrix(const Matrix& x_a, const Matrix& x_b, const FeatureMapSpec& spec) {
    if (x_a.cols() != x_b.cols()) throw ShapeError("kernel_matrix: feature count mismatch");
    std::vector<StateVector> sa, sb;
    sa.reserve(x_a.rows());
    sb.reserve(x_b.rows());
    for (std::size_t i = 0; i < x_a.rows(); ++i) sa.push_back(feature_map_state(x_a.row(i), spec));
    for (std::size_t i = 0; i < x_b.rows(); ++i) sb.push_back(feature_map_state(x_b.row(i), spec));

    Matrix out(x_a.rows(), x_b.rows());
    for (std::size_t i = 0; i < x_a.rows(); ++i)
        for (std::size_t j = 0; j < x_b.rows(); ++j)
            out(i, j) = std::norm(state_overlap(sa[i], sb[j]));
    return out;
}

SvmModel svm_train_precomputed(const Matrix& k, const std::vector<int>& y, double C,
                               double tol, int max_passes, std::uint64_t seed,
                               std::vector<double>* sweep_objectives) {
    const std::size_t S = k.rows();
    if (k.rows() != k.cols()) throw ShapeError("svm_train_precomputed: kernel not square");
    if (y.size() != S) throw ShapeError("svm_train_precomputed: label count mismatch");
    for (std::size_t i = 0; i < S; ++i)
        for (std::size_t j = i + 1; j < S; ++j)
            if (std::abs(k(i, j) - k(j, i)) > 1e-8)
                throw ShapeError("svm_train_precomputed: kernel not symmetric");
    bool has_pos = false, has_neg = false;
    for (int v : y) (v > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
        throw TrainError("svm_train_precomputed: both classes required");

    std::vector<double> alpha(S, 0.0);
    double b = 0.0;
    std::mt19937_64 rng(seed);

    auto decision = [&](std::size_t s) {
        double f = b;
        for (std::size_t t = 0; t < S; ++t)
            if (alpha[t] != 0.0) f += alpha[t] * y[t] * k(t, s);
        return f;
    };
    auto objective = [&]() {
        double obj = 0.0;
        for (std::size_t i = 0; i < S; ++i) {
            if (alpha[i] == 0.0) continue;
            obj += alpha[i];
            for (std::size_t j = 0; j < S; ++j)
                if (alpha[j] != 0.0)
                    obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * k(i, j);
        }
        return obj;
    };

    int clean_passes = 0;
    const int sweep_cap = 1000 + 100 * max_passes;
    int sweeps = 0;
    while (clean_passes < max_passes && sweeps++ < sweep_cap) {
        int changed = 0;
        for (std::size_t i = 0; i < S; ++i) {
            double e_i = decision(i) - y[i];
            bool violates = (y[i] * e_i < -tol && alpha[i] < C) ||
                            (y[i] * e_i > tol && alpha[i] > 0.0);
            if (!violates) continue;

            std::size_t j = std::uniform_int_distribution<std::size_t>(0, S - 2)(rng);
            if (j >= i) ++j;
            double e_j = decision(j) - y[j];

            double ai_old = alpha[i], aj_old = alpha[j];
            double lo, hi;
            if (y[i] != y[j]) {
                lo = std::max(0.0, aj_old - ai_old);
                hi = std::min(C, C + aj_old - ai_old);
            } else {
                lo = std::max(0.0, ai_old + aj_old - C);
                hi = std::min(C, ai_old + aj_old);
            }
            if (lo >= hi) continue;
            double eta = 2.0 * k(i, j) - k(i, i) - k(j, j);
            if (eta >= 0.0) continue;

            double aj = aj_old - y[j] * (e_i - e_j) / eta;
            aj = std::clamp(aj, lo, hi);
            if (std::abs(aj - aj_old) < 1e-7) continue;
            double ai = ai_old + y[i] * y[j] * (aj_old - aj);

            alpha[i] = ai;
            alpha[j] = aj;

            double b1 = b - e_i - y[i] * (ai - ai_old) * k(i, i) -
                        y[j] * (aj - aj_old) * k(i, j);
            double b2 = b - e_j - y[i] * (ai - ai_old) * k(i, j) -
                        y[j] * (aj - aj_old) * k(j, j);
            if (ai > 0.0 && ai < C)
                b = b1;
            else if (aj > 0.0 && aj < C)
                b = b2;
            else
                b = (b1 + b2) / 2.0;
            ++changed;
        }
        if (sweep_objectives) sweep_objectives->push_back(objective());
        clean_passes = changed == 0 ? clean_passes + 1 : 0;
    }

    SvmModel model;
    model.alpha = alpha;
    model.labels = y;
    model.C = C;
    for (std::size_t s = 0; s < S; ++s)
        if (alpha[s] > 0.0) model.support_indices.push_back(s);

    // Bias from margin support vectors; plain support vectors as fallback.
    auto residual = [&](std::size_t s) {
        double f = 0.0;
        for (std::size_t t = 0; t < S; ++t)
            if (alpha[t] != 0.0) f += alpha[t] * y[t] * k(t, s);
        return double(y[s]) - f;
    };
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < S; ++s)
        if (alpha[s] > 0.0 && alpha[s] < C) {
            acc += residual(s);
            ++count;
        }
    if (count == 0)
        for (std::size_t s : model.support_indices) {
            acc += residual(s);
            ++count;
        }
    model.bias = count > 0 ? acc / double(count) : 0.0;
    return model;
}

std::vector<double> svm_decision_values(const SvmModel& model, const Matrix& k_test) {
    if (k_test.cols() != model.alpha.size())
        throw ShapeError("svm_decision_values: kernel block width must equal training size");
    std::vector<double> out(k_test.rows());
    for (std::size_t t = 0; t < k_test.rows(); ++t) {
        double f = model.bias;
        for (std::size_t s : model.support_indices) f += model.dual_coef(s) * k_test(t, s);
        out[t] = f;
    }
    return out;
}

std::vector<int> svm_predict(const SvmModel& model, const Matrix& k_test) {
    auto values = svm_decision_values(model, k_test);
    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) labels[i] = sign_pm(values[i]);
    return labels;
}

void save_gram(const std::string& path, const Matrix& gram) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::uint64_t dims[2] = {gram.rows(), gram.cols()};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(gram.values().data()),
              std::streamsize(gram.values().size() * sizeof(double)));
    if (!out) throw IoError("short write to '" + path + "'");
}

Matrix load_gram(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::uint64_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in) throw IoError("truncated Gram file '" + path + "'");
    Matrix gram(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]));
    in.read(reinterpret_cast<char*>(gram.values().data()),
            std::streamsize(gram.values().size() * sizeof(double)));
    if (!in) throw IoError("truncated Gram file '" + path + "'");
    return gram;
}

} // namespace qvision::qkernel
