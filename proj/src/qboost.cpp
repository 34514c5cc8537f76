#include "qvision/qboost.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace qvision::qboost {
namespace {

constexpr double kEpsClamp = 1e-10;

void require_both_classes(const std::vector<int>& y, const char* who) {
    bool pos = false, neg = false;
    for (int v : y) (v > 0 ? pos : neg) = true;
    if (!pos || !neg) throw TrainError(std::string(who) + ": both classes required");
}

/// Interaction sum of bit p against the currently set bits (p excluded).
double neighbor_field(const QuboMatrix& q, const std::vector<std::uint8_t>& w,
                      std::size_t p) {
    double s = 0.0;
    for (std::size_t j = 0; j < q.dimension(); ++j) {
        if (j == p || !w[j]) continue;
        s += j < p ? q.at(j, p) : q.at(p, j);
    }
    return s;
}

double flip_delta(const QuboMatrix& q, const std::vector<std::uint8_t>& w, std::size_t p) {
    double d = q.at(p, p) + neighbor_field(q, w, p);
    return w[p] ? -d : d;
}

std::uint32_t encoding(const std::vector<std::uint8_t>& w) {
    std::uint32_t code = 0;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i]) code |= std::uint32_t(1) << i;
    return code;
}

std::size_t cardinality(const std::vector<std::uint8_t>& w) {
    std::size_t n = 0;
    for (auto b : w) n += b;
    return n;
}

} // namespace

WeakEnsemble train_weak_ensemble(const Matrix& x, const std::vector<int>& y,
                                 std::size_t n_trees, int depth, std::uint64_t seed) {
    (void)seed; // boosting is fully deterministic; kept for interface stability
    if (n_trees < 1) throw ConfigError("train_weak_ensemble: need at least one tree");
    if (x.rows() != y.size()) throw ShapeError("train_weak_ensemble: label count mismatch");
    require_both_classes(y, "train_weak_ensemble");

    const std::size_t S = x.rows();
    WeakEnsemble ens;
    ens.outputs = Matrix(S, n_trees);

    std::vector<double> dist(S, 1.0 / double(S));
    for (std::size_t i = 0; i < n_trees; ++i) {
        trees::DecisionTree tree = trees::tree_fit(x, y, dist, depth);
        std::vector<int> h = trees::tree_predict_batch(tree, x);

        double eps = 0.0;
        for (std::size_t s = 0; s < S; ++s)
            if (h[s] != y[s]) eps += dist[s];
        eps = std::clamp(eps, kEpsClamp, 1.0 - kEpsClamp);
        double w = 0.5 * std::log((1.0 - eps) / eps);

        double z = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            dist[s] *= std::exp(-w * y[s] * h[s]);
            z += dist[s];
        }
        for (double& d : dist) d /= z;

        for (std::size_t s = 0; s < S; ++s) ens.outputs(s, i) = double(h[s]);
        ens.trees.push_back(std::move(tree));
        ens.stage_weights.push_back(w);
        ens.stage_errors.push_back(eps);
    }
    return ens;
}

std::string to_string(QuboMode mode) {
    return mode == QuboMode::Consistent ? "consistent" : "paper-exact";
}

QuboMode qubo_mode_from_string(const std::string& s) {
    if (s == "consistent") return QuboMode::Consistent;
    if (s == "paper-exact") return QuboMode::PaperExact;
    throw ConfigError("unknown QUBO mode '" + s + "'");
}

QuboMatrix build_qubo(const Matrix& h, const std::vector<int>& y, double lambda,
                      QuboMode mode) {
    const std::size_t S = h.rows(), N = h.cols();
    if (S == 0 || N == 0) throw ShapeError("build_qubo: empty outputs matrix");
    if (y.size() != S) throw ShapeError("build_qubo: label count mismatch");
    for (double v : h.values())
        if (v != 1.0 && v != -1.0)
            throw EncodingError("build_qubo: weak-learner outputs must be +-1");

    // Corr(h_i, h_j) = sum_s H_si H_sj; Corr(h_i, y) = sum_s H_si y_s.
    QuboMatrix q(N, mode, lambda);
    const double nf = double(N);
    for (std::size_t i = 0; i < N; ++i) {
        double corr_y = 0.0;
        for (std::size_t s = 0; s < S; ++s) corr_y += h(s, i) * y[s];
        if (mode == QuboMode::Consistent)
            q.at(i, i) = double(S) / (nf * nf) + lambda - (2.0 / nf) * corr_y;
        else
            q.at(i, i) = double(S) / (nf * nf) + lambda - 2.0 * corr_y;
        for (std::size_t j = i + 1; j < N; ++j) {
            double corr = 0.0;
            for (std::size_t s = 0; s < S; ++s) corr += h(s, i) * h(s, j);
            q.at(i, j) = (mode == QuboMode::Consistent ? 2.0 / (nf * nf) : 2.0) * corr;
        }
    }
    return q;
}

double qubo_energy(const QuboMatrix& q, const std::vector<std::uint8_t>& w) {
    if (w.size() != q.dimension()) throw ShapeError("qubo_energy: dimension mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < q.dimension(); ++i) {
        if (!w[i]) continue;
        e += q.at(i, i);
        for (std::size_t j = i + 1; j < q.dimension(); ++j)
            if (w[j]) e += q.at(i, j);
    }
    return e;
}

BinarySolution solve_exhaustive(const QuboMatrix& q) {
    const std::size_t N = q.dimension();
    if (N < 1) throw ShapeError("solve_exhaustive: empty problem");
    if (N > kExhaustiveCap)
        throw CapacityError("solve_exhaustive: capped at N <= " +
                            std::to_string(kExhaustiveCap));

    std::vector<std::uint8_t> w(N, 0);
    double energy = 0.0; // incremental, re-verified at candidates

    BinarySolution best;
    best.w = w;
    best.energy = 0.0;
    std::size_t best_card = 0;
    std::uint32_t best_code = 0;

    const std::uint64_t count = std::uint64_t(1) << N;
    for (std::uint64_t k = 1; k < count; ++k) {
        std::size_t p = std::size_t(std::countr_zero(k)); // Gray-code flip position
        energy += flip_delta(q, w, p);
        w[p] ^= 1;
        // Resync the running sum periodically so drift stays far below
        // the candidate margin on long walks.
        if ((k & 0xFFFFF) == 0) energy = qubo_energy(q, w);
        double margin = 1e-9 * std::max(1.0, std::abs(best.energy));
        if (energy <= best.energy + margin) {
            double exact = qubo_energy(q, w);
            std::size_t card = cardinality(w);
            std::uint32_t code = encoding(w);
            bool better = exact < best.energy ||
                          (exact == best.energy &&
                           (card < best_card || (card == best_card && code < best_code)));
            if (better) {
                best.w = w;
                best.energy = exact;
                best_card = card;
                best_code = code;
            }
        }
    }
    best.solver = SolverKind::Exhaustive;
    return best;
}

BinarySolution solve_sa(const QuboMatrix& q, const SaParams& params, std::uint64_t seed) {
    const std::size_t N = q.dimension();
    if (N < 1) throw ShapeError("solve_sa: empty problem");
    if (params.sweeps < 1 || params.restarts < 1)
        throw ConfigError("solve_sa: sweeps and restarts must be positive");
    if (params.cooling <= 0.0 || params.cooling >= 1.0)
        throw ConfigError("solve_sa: cooling factor must be in (0, 1)");

    // Auto-calibrate beta_initial so a typical uphill move is accepted
    // with probability ~0.8, estimated from 100 random flips.
    double beta0;
    if (params.beta_initial) {
        beta0 = *params.beta_initial;
    } else {
        std::mt19937_64 rng(seed);
        double acc = 0.0;
        std::size_t n_nonzero = 0;
        for (int t = 0; t < 100; ++t) {
            std::vector<std::uint8_t> w(N);
            for (auto& b : w) b = std::uint8_t(rng() & 1);
            std::size_t p = std::size_t(rng() % N);
            double d = std::abs(flip_delta(q, w, p));
            if (d > 0.0) {
                acc += d;
                ++n_nonzero;
            }
        }
        beta0 = n_nonzero > 0 ? -std::log(0.8) / (acc / double(n_nonzero)) : 1.0;
    }

    BinarySolution best;
    bool have_best = false;

    for (int r = 0; r < params.restarts; ++r) {
        std::mt19937_64 rng(seed + std::uint64_t(r));
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        std::vector<std::uint8_t> w(N);
        for (auto& b : w) b = std::uint8_t(rng() & 1);
        double energy = qubo_energy(q, w);

        std::vector<std::uint8_t> run_best_w = w;
        double run_best_e = energy;

        double beta = beta0;
        for (int sweep = 0; sweep < params.sweeps; ++sweep) {
            for (std::size_t p = 0; p < N; ++p) {
                double d = flip_delta(q, w, p);
                if (d <= 0.0 || unit(rng) < std::exp(-beta * d)) {
                    w[p] ^= 1;
                    energy += d;
                    if (energy < run_best_e) {
                        run_best_e = energy;
                        run_best_w = w;
                    }
                }
            }
            beta /= params.cooling;
            if (params.beta_final && beta > *params.beta_final) beta = *params.beta_final;
        }

        double exact = qubo_energy(q, run_best_w);
        if (!have_best || exact < best.energy) {
            best.w = std::move(run_best_w);
            best.energy = exact;
            have_best = true;
        }
    }
    best.solver = SolverKind::SimulatedAnnealing;
    best.seed = seed;
    return best;
}

std::string to_string(ThresholdMode mode) {
    return mode == ThresholdMode::Paper ? "paper" : "sweep";
}

ThresholdMode threshold_mode_from_string(const std::string& s) {
    if (s == "paper") return ThresholdMode::Paper;
    if (s == "sweep") return ThresholdMode::Sweep;
    throw ConfigError("unknown threshold mode '" + s + "'");
}

std::vector<double> selection_scores(const std::vector<std::uint8_t>& w, const Matrix& h) {
    if (w.size() != h.cols()) throw ShapeError("selection_scores: dimension mismatch");
    std::vector<double> scores(h.rows(), 0.0);
    for (std::size_t s = 0; s < h.rows(); ++s)
        for (std::size_t i = 0; i < h.cols(); ++i)
            if (w[i]) scores[s] += h(s, i);
    return scores;
}

double compute_threshold(const std::vector<std::uint8_t>& w_opt, const Matrix& h_train,
                         const std::vector<int>& y_train, ThresholdMode mode) {
    if (w_opt.size() != h_train.cols())
        throw ShapeError("compute_threshold: dimension mismatch");
    if (cardinality(w_opt) == 0)
        throw DegenerateModelError("compute_threshold: no classifier selected");

    auto scores = selection_scores(w_opt, h_train);

    if (mode == ThresholdMode::Paper) {
        const double n = double(w_opt.size());
        double mean = 0.0;
        for (double s : scores) mean += s / n;
        mean /= double(scores.size());
        return sign3(mean);
    }

    if (y_train.size() != h_train.rows())
        throw ShapeError("compute_threshold: label count mismatch");
    std::vector<double> sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    std::vector<double> candidates;
    candidates.push_back(sorted.front() - 1.0);
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        candidates.push_back((sorted[i] + sorted[i + 1]) / 2.0);
    candidates.push_back(sorted.back() + 1.0);

    double best_t = candidates.front();
    std::size_t best_err = scores.size() + 1;
    for (double t : candidates) {
        std::size_t err = 0;
        for (std::size_t s = 0; s < scores.size(); ++s)
            if (sign_pm(scores[s] - t) != y_train[s]) ++err;
        if (err < best_err || (err == best_err && std::abs(t) < std::abs(best_t))) {
            best_err = err;
            best_t = t;
        }
    }
    return best_t;
}

int qboost_predict(const QBoostModel& model, std::span<const double> x) {
    if (model.selected_trees.empty())
        throw DegenerateModelError("qboost_predict: model has no selected trees");
    double vote = 0.0;
    for (const auto& tree : model.selected_trees) vote += trees::tree_predict(tree, x);
    return sign_pm(vote - model.threshold);
}

std::vector<int> qboost_predict_batch(const QBoostModel& model, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = qboost_predict(model, x.row(i));
    return out;
}

QBoostModel make_model(const WeakEnsemble& ensemble, const std::vector<std::uint8_t>& w,
                       double threshold, double lambda, int depth) {
    if (w.size() != ensemble.trees.size())
        throw ShapeError("make_model: selection size mismatch");
    QBoostModel model;
    model.selection = w;
    model.threshold = threshold;
    model.lambda = lambda;
    model.depth = depth;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w[i]) model.selected_trees.push_back(ensemble.trees[i]);
    return model;
}

QBoostModel qboost_train(const Matrix& x, const std::vector<int>& y,
                         const QBoostConfig& config, const QuboSampler& sampler) {
    WeakEnsemble ens = train_weak_ensemble(x, y, config.n_trees, config.depth, config.seed);
    QuboMatrix q = build_qubo(ens.outputs, y, config.lambda, config.mode);
    BinarySolution sol = sampler(q);
    double t = compute_threshold(sol.w, ens.outputs, y, config.threshold_mode);
    return make_model(ens, sol.w, t, config.lambda, config.depth);
}

std::string qboost_to_json(const QBoostModel& model) {
    nlohmann::json trees_json = nlohmann::json::array();
    for (const auto& tree : model.selected_trees)
        trees_json.push_back(nlohmann::json::parse(trees::tree_to_json(tree)));
    nlohmann::json j{
        {"selection", model.selection},
        {"threshold", model.threshold},
        {"lambda", model.lambda},
        {"depth", model.depth},
        {"trees", trees_json},
    };
    return j.dump();
}

QBoostModel qboost_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        QBoostModel model;
        model.selection = j.at("selection").get<std::vector<std::uint8_t>>();
        model.threshold = j.at("threshold").get<double>();
        model.lambda = j.at("lambda").get<double>();
        model.depth = j.at("depth").get<int>();
        for (const auto& t : j.at("trees"))
            model.selected_trees.push_back(trees::tree_from_json(t.dump()));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed QBoost model JSON: ") + e.what());
    }
}

void qubo_save(const std::string& path, const QuboMatrix& q) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.precision(17);
    out << q.dimension() << " " << to_string(q.mode()) << " " << q.lambda() << "\n";
    for (std::size_t i = 0; i < q.dimension(); ++i)
        for (std::size_t j = i; j < q.dimension(); ++j)
            if (q.at(i, j) != 0.0) out << i << " " << j << " " << q.at(i, j) << "\n";
    if (!out) throw IoError("short write to '" + path + "'");
}

QuboMatrix qubo_load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::size_t n;
    std::string mode;
    double lambda;
    if (!(in >> n >> mode >> lambda)) throw IoError("malformed QUBO header in '" + path + "'");
    QuboMatrix q(n, qubo_mode_from_string(mode), lambda);
    std::size_t i, j;
    double v;
    while (in >> i >> j >> v) {
        if (i > j || j >= n) throw IoError("bad QUBO triple in '" + path + "'");
        q.at(i, j) = v;
    }
    return q;
}

} // namespace qvision::qboost
