#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "qvision/ingest.hpp"
#include "qvision/qboost.hpp"

using namespace qvision;
using namespace qvision::qboost;

namespace {

/// Original cost function the QUBO encodes:
/// sum_s ((1/N) sum_i w_i H_si - y_s)^2 + lambda * |w|.
double direct_cost(const Matrix& h, const std::vector<int>& y,
                   const std::vector<std::uint8_t>& w, double lambda) {
    const double n = double(h.cols());
    double cost = 0.0;
    for (std::size_t s = 0; s < h.rows(); ++s) {
        double vote = 0.0;
        for (std::size_t i = 0; i < h.cols(); ++i)
            if (w[i]) vote += h(s, i);
        double r = vote / n - double(y[s]);
        cost += r * r;
    }
    for (auto b : w) cost += lambda * double(b);
    return cost;
}

double naive_energy(const QuboMatrix& q, const std::vector<std::uint8_t>& w) {
    double e = 0.0;
    for (std::size_t i = 0; i < q.dimension(); ++i)
        for (std::size_t j = i; j < q.dimension(); ++j)
            e += q.at(i, j) * double(w[i]) * double(w[j]);
    return e;
}

Matrix random_outputs(std::mt19937_64& rng, std::size_t s, std::size_t n) {
    Matrix h(s, n);
    for (double& v : h.values()) v = (rng() & 1) ? 1.0 : -1.0;
    return h;
}

std::vector<int> random_labels(std::mt19937_64& rng, std::size_t s) {
    std::vector<int> y(s);
    for (auto& v : y) v = (rng() & 1) ? +1 : -1;
    return y;
}

QuboMatrix random_qubo(std::mt19937_64& rng, std::size_t n, double scale = 10.0) {
    std::uniform_real_distribution<double> coeff(-scale, scale);
    QuboMatrix q(n, QuboMode::Consistent, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) q.at(i, j) = coeff(rng);
    return q;
}

std::vector<std::uint8_t> random_bits(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::uint8_t> w(n);
    for (auto& b : w) b = std::uint8_t(rng() & 1);
    return w;
}

/// Simple 1-D fixture: step data with a little label noise.
struct Fixture {
    Matrix x;
    std::vector<int> y;
};

Fixture step_fixture(std::size_t s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Fixture f;
    f.x = Matrix(s, 2);
    f.y.resize(s);
    for (std::size_t i = 0; i < s; ++i) {
        bool pos = i % 2 == 0;
        f.x(i, 0) = (pos ? 1.0 : -1.0) + gauss(rng) * 0.4;
        f.x(i, 1) = gauss(rng);
        f.y[i] = pos ? +1 : -1;
    }
    return f;
}

} // namespace

TEST_CASE("stage weight formula: eps = 0.25 gives half ln 3") {
    // One feature, labels follow x for 3 of 4 samples: the depth-1 stump
    // errs on exactly one uniformly weighted sample.
    Matrix x = Matrix::from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
    std::vector<int> y{-1, -1, +1, -1};
    auto ens = train_weak_ensemble(x, y, 1, 1, 0);
    CHECK(ens.stage_errors[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(ens.stage_weights[0] == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-9));
}

TEST_CASE("a useless stump gets zero weight and leaves the distribution unchanged") {
    // Two identical points with opposite labels: every tree is a single
    // +1 leaf, eps stays at 0.5 and w at 0 for both stages.
    Matrix x = Matrix::from_rows({{1.0}, {1.0}});
    std::vector<int> y{+1, -1};
    auto ens = train_weak_ensemble(x, y, 2, 1, 0);
    CHECK(ens.stage_weights[0] == doctest::Approx(0.0));
    CHECK(ens.stage_errors[0] == doctest::Approx(0.5));
    CHECK(ens.stage_weights[1] == doctest::Approx(0.0));
}

TEST_CASE("the boosting distribution stays normalized across stages") {
    auto f = step_fixture(40, 5);
    auto ens = train_weak_ensemble(f.x, f.y, 8, 2, 0);
    REQUIRE(ens.trees.size() == 8);
    // H is +-1 everywhere and matches the stored trees.
    for (std::size_t s = 0; s < f.x.rows(); ++s)
        for (std::size_t i = 0; i < 8; ++i) {
            double v = ens.outputs(s, i);
            CHECK((v == 1.0 || v == -1.0));
            CHECK(v == double(trees::tree_predict(ens.trees[i], f.x.row(s))));
        }
    for (double eps : ens.stage_errors) {
        CHECK(eps > 0.0);
        CHECK(eps < 1.0);
    }
    CHECK_THROWS_AS(train_weak_ensemble(f.x, std::vector<int>(40, +1), 4, 2, 0), TrainError);
}

TEST_CASE("single perfectly correlated classifier: Q11 = lambda - S") {
    Matrix h(6, 1);
    std::vector<int> y(6);
    for (std::size_t s = 0; s < 6; ++s) {
        y[s] = s % 2 ? +1 : -1;
        h(s, 0) = double(y[s]);
    }
    double lambda = 2.0;
    auto q = build_qubo(h, y, lambda, QuboMode::Consistent);
    // S/N^2 + lambda - 2*Corr/N with N=1: 6 + 2 - 12 = -4 = lambda - S.
    CHECK(q.at(0, 0) == doctest::Approx(lambda - 6.0));
    auto sol = solve_exhaustive(q);
    CHECK(sol.w == std::vector<std::uint8_t>{1}); // selected while lambda < S
}

TEST_CASE("very large lambda switches everything off") {
    std::mt19937_64 rng(7);
    auto h = random_outputs(rng, 12, 6);
    auto y = random_labels(rng, 12);
    auto q = build_qubo(h, y, 1e6, QuboMode::Consistent);
    auto sol = solve_exhaustive(q);
    CHECK(sol.w == std::vector<std::uint8_t>(6, 0));
    CHECK(sol.energy == 0.0);
}

TEST_CASE("consistent-mode energy equals the direct cost minus S") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t s = 3 + rng() % 20, n = 1 + rng() % 8;
        auto h = random_outputs(rng, s, n);
        auto y = random_labels(rng, s);
        auto w = random_bits(rng, n);
        double lambda = std::uniform_real_distribution<double>(0.0, 5.0)(rng);
        auto q = build_qubo(h, y, lambda, QuboMode::Consistent);
        double energy = qubo_energy(q, w);
        double cost = direct_cost(h, y, w, lambda);
        CHECK(energy == doctest::Approx(cost - double(s)).epsilon(1e-9));
    }
}

TEST_CASE("paper-exact mode drops the 1/N scaling on the correlation terms") {
    std::mt19937_64 rng(13);
    auto h = random_outputs(rng, 10, 4);
    auto y = random_labels(rng, 10);
    auto consistent = build_qubo(h, y, 1.5, QuboMode::Consistent);
    auto paper = build_qubo(h, y, 1.5, QuboMode::PaperExact);
    const double n = 4.0;
    for (std::size_t i = 0; i < 4; ++i) {
        // Shared S/N^2 + lambda part; correlation term scaled by N.
        double shared = 10.0 / (n * n) + 1.5;
        CHECK(paper.at(i, i) - shared ==
              doctest::Approx((consistent.at(i, i) - shared) * n).epsilon(1e-9));
        for (std::size_t j = i + 1; j < 4; ++j)
            CHECK(paper.at(i, j) == doctest::Approx(consistent.at(i, j) * n * n).epsilon(1e-9));
    }
    Matrix bad(2, 2, 0.5);
    CHECK_THROWS_AS(build_qubo(bad, {+1, -1}, 0.0, QuboMode::Consistent), EncodingError);
}

TEST_CASE("qubo_energy matches the naive double loop") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 12;
        auto q = random_qubo(rng, n);
        auto w = random_bits(rng, n);
        CHECK(qubo_energy(q, w) == doctest::Approx(naive_energy(q, w)).epsilon(1e-12));
    }
    auto q = random_qubo(rng, 4);
    CHECK(qubo_energy(q, std::vector<std::uint8_t>(4, 0)) == 0.0);
    double full = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = i; j < 4; ++j) full += q.at(i, j);
    CHECK(qubo_energy(q, std::vector<std::uint8_t>(4, 1)) == doctest::Approx(full));
    CHECK_THROWS_AS(qubo_energy(q, std::vector<std::uint8_t>(3, 0)), ShapeError);
}

TEST_CASE("exhaustive solver: hand-enumerated tie-break case") {
    QuboMatrix q(2, QuboMode::Consistent, 0.0);
    q.at(0, 0) = -1.0;
    q.at(1, 1) = -1.0;
    q.at(0, 1) = 4.0;
    // Energies: 00 -> 0, 10 -> -1, 01 -> -1, 11 -> 2. Cardinality tie,
    // then smaller encoding: w = (1, 0).
    auto sol = solve_exhaustive(q);
    CHECK(sol.energy == doctest::Approx(-1.0));
    CHECK(sol.w == std::vector<std::uint8_t>{1, 0});
}

TEST_CASE("exhaustive solver: all-positive diagonal selects nothing") {
    QuboMatrix q(5, QuboMode::Consistent, 0.0);
    for (std::size_t i = 0; i < 5; ++i) q.at(i, i) = 0.5 + double(i);
    auto sol = solve_exhaustive(q);
    CHECK(sol.w == std::vector<std::uint8_t>(5, 0));
    CHECK(sol.energy == 0.0);
}

TEST_CASE("exhaustive minimum beats 1000 random bitstrings") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 5; ++trial) {
        auto q = random_qubo(rng, 15);
        auto sol = solve_exhaustive(q);
        for (int probe = 0; probe < 1000; ++probe) {
            auto w = random_bits(rng, 15);
            CHECK(sol.energy <= qubo_energy(q, w) + 1e-9);
        }
        CHECK(sol.energy == doctest::Approx(qubo_energy(q, sol.w)).epsilon(1e-9));
    }
}

TEST_CASE("exhaustive solver capacity cap") {
    QuboMatrix q(26, QuboMode::Consistent, 0.0);
    CHECK_THROWS_AS(solve_exhaustive(q), CapacityError);
}

TEST_CASE("exhaustive argmin agrees with brute-force cost argmin") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        std::size_t s = 4 + rng() % 12, n = 2 + rng() % 9;
        auto h = random_outputs(rng, s, n);
        auto y = random_labels(rng, s);
        double lambda = std::uniform_real_distribution<double>(0.0, 3.0)(rng);
        auto q = build_qubo(h, y, lambda, QuboMode::Consistent);
        auto sol = solve_exhaustive(q);

        // Brute force over the cost with the same tie-break rules.
        std::vector<std::uint8_t> best;
        double best_cost = 1e300;
        std::size_t best_card = 0;
        std::uint32_t best_code = 0;
        for (std::uint32_t code = 0; code < (1u << n); ++code) {
            std::vector<std::uint8_t> w(n);
            std::size_t card = 0;
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = (code >> i) & 1;
                card += w[i];
            }
            double cost = direct_cost(h, y, w, lambda);
            bool better = cost < best_cost - 1e-9 ||
                          (std::abs(cost - best_cost) <= 1e-9 &&
                           (card < best_card || (card == best_card && code < best_code)));
            if (best.empty() || better) {
                best = w;
                best_cost = cost;
                best_card = card;
                best_code = code;
            }
        }
        CHECK(sol.w == best);
    }
}

TEST_CASE("simulated annealing is deterministic and bounded by the exhaustive minimum") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 5; ++trial) {
        auto q = random_qubo(rng, 12);
        auto a = solve_sa(q, {}, 77);
        auto b = solve_sa(q, {}, 77);
        CHECK(a.w == b.w);
        CHECK(a.energy == b.energy);
        auto exact = solve_exhaustive(q);
        CHECK(a.energy >= exact.energy - 1e-9);
        CHECK(a.energy == doctest::Approx(qubo_energy(q, a.w)).epsilon(1e-9));
    }
}

TEST_CASE("simulated annealing reaches the ground state on small dense problems") {
    std::mt19937_64 rng(31);
    int hits = 0;
    for (int trial = 0; trial < 10; ++trial) {
        auto q = random_qubo(rng, 12);
        auto exact = solve_exhaustive(q);
        auto sa = solve_sa(q, {}, std::uint64_t(trial));
        if (std::abs(sa.energy - exact.energy) < 1e-9) ++hits;
    }
    CHECK(hits >= 9);
}

TEST_CASE("solve_sa honors explicit beta schedules and validates parameters") {
    std::mt19937_64 rng(37);
    auto q = random_qubo(rng, 8);
    SaParams params;
    params.beta_initial = 0.05;
    params.beta_final = 50.0;
    params.sweeps = 500;
    params.restarts = 8;
    auto sol = solve_sa(q, params, 3);
    CHECK(sol.energy == doctest::Approx(qubo_energy(q, sol.w)).epsilon(1e-9));

    SaParams bad;
    bad.sweeps = 0;
    CHECK_THROWS_AS(solve_sa(q, bad, 0), ConfigError);
    bad = {};
    bad.cooling = 1.5;
    CHECK_THROWS_AS(solve_sa(q, bad, 0), ConfigError);
}

TEST_CASE("threshold: paper mode is the sign of the mean ensemble score") {
    Matrix h = Matrix::from_rows({{1.0, 1.0}, {1.0, -1.0}, {1.0, 1.0}});
    std::vector<int> y{+1, +1, +1};
    std::vector<std::uint8_t> all{1, 1};

    // Scores 2, 0, 2: positive mean -> T = +1.
    CHECK(compute_threshold(all, h, y, ThresholdMode::Paper) == doctest::Approx(1.0));

    // Balanced scores -> T = 0.
    Matrix hb = Matrix::from_rows({{1.0, 1.0}, {-1.0, -1.0}});
    CHECK(compute_threshold(all, hb, {+1, -1}, ThresholdMode::Paper) == doctest::Approx(0.0));

    CHECK_THROWS_AS(compute_threshold({0, 0}, h, y, ThresholdMode::Paper),
                    DegenerateModelError);
}

TEST_CASE("threshold: sweep mode never does worse than paper mode on training data") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t s = 6 + rng() % 20, n = 1 + rng() % 6;
        auto h = random_outputs(rng, s, n);
        auto y = random_labels(rng, s);
        std::vector<std::uint8_t> w(n, 1);

        auto train_error = [&](double t) {
            std::size_t err = 0;
            auto scores = selection_scores(w, h);
            for (std::size_t i = 0; i < s; ++i)
                if (sign_pm(scores[i] - t) != y[i]) ++err;
            return err;
        };
        double t_paper = compute_threshold(w, h, y, ThresholdMode::Paper);
        double t_sweep = compute_threshold(w, h, y, ThresholdMode::Sweep);
        CHECK(train_error(t_sweep) <= train_error(t_paper));
    }
}

TEST_CASE("qboost_predict: votes minus threshold, sign(0) -> +1") {
    auto f = step_fixture(30, 43);
    auto ens = train_weak_ensemble(f.x, f.y, 3, 2, 0);

    // Single selected tree with T = 0 predicts exactly like that tree.
    auto single = make_model(ens, {1, 0, 0}, 0.0, 0.0, 2);
    for (std::size_t i = 0; i < f.x.rows(); ++i)
        CHECK(qboost_predict(single, f.x.row(i)) ==
              trees::tree_predict(ens.trees[0], f.x.row(i)));

    // Majority vote of three trees at T = 0.
    auto majority = make_model(ens, {1, 1, 1}, 0.0, 0.0, 2);
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
        int votes = 0;
        for (const auto& tree : ens.trees) votes += trees::tree_predict(tree, f.x.row(i));
        CHECK(qboost_predict(majority, f.x.row(i)) == sign_pm(double(votes)));
    }
}

TEST_CASE("qboost_predict matches a naive loop over a 200-sample set") {
    ingest::SyntheticConfig cfg{100, 100, 16, 16, 0.8, 8.0, 3};
    auto data = ingest::generate_synthetic(cfg);
    auto x = ingest::flatten_dataset(data);
    auto y = data.labels();

    QBoostConfig qcfg;
    qcfg.n_trees = 8;
    qcfg.depth = 2;
    qcfg.lambda = 1.0;
    auto model = qboost_train(x, y, qcfg,
                              [](const QuboMatrix& q) { return solve_exhaustive(q); });

    auto batch = qboost_predict_batch(model, x);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double vote = 0.0;
        for (const auto& tree : model.selected_trees)
            vote += double(trees::tree_predict(tree, x.row(i)));
        int naive = vote - model.threshold >= 0.0 ? +1 : -1;
        CHECK(batch[i] == naive);
    }
}

TEST_CASE("selected-classifier count is non-increasing in lambda (exhaustive)") {
    auto f = step_fixture(60, 47);
    auto ens = train_weak_ensemble(f.x, f.y, 10, 2, 0);
    std::size_t prev = 11;
    for (double lambda : {0.0, 1.0, 3.0, 8.0, 20.0, 60.0, 200.0}) {
        auto q = build_qubo(ens.outputs, f.y, lambda, QuboMode::Consistent);
        auto sol = solve_exhaustive(q);
        std::size_t count = 0;
        for (auto b : sol.w) count += b;
        CHECK(count <= prev);
        prev = count;
    }
}

TEST_CASE("full-ensemble majority vote does not lose to the first tree alone") {
    auto f = step_fixture(80, 53);
    auto ens = train_weak_ensemble(f.x, f.y, 9, 2, 0);
    auto model = make_model(ens, std::vector<std::uint8_t>(9, 1), 0.0, 0.0, 2);

    std::size_t err_first = 0, err_ensemble = 0;
    for (std::size_t i = 0; i < f.x.rows(); ++i) {
        if (trees::tree_predict(ens.trees[0], f.x.row(i)) != f.y[i]) ++err_first;
        if (qboost_predict(model, f.x.row(i)) != f.y[i]) ++err_ensemble;
    }
    CHECK(err_ensemble <= err_first);
}

TEST_CASE("qubo text serialization round-trips") {
    std::mt19937_64 rng(59);
    auto q = random_qubo(rng, 6);
    auto path = (std::filesystem::temp_directory_path() / "qvision_qubo_test.txt").string();
    qubo_save(path, q);
    auto back = qubo_load(path);
    REQUIRE(back.dimension() == q.dimension());
    CHECK(back.mode() == q.mode());
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i; j < 6; ++j)
            CHECK(back.at(i, j) == doctest::Approx(q.at(i, j)).epsilon(1e-15));
    std::filesystem::remove(path);
}

TEST_CASE("qboost model JSON round-trips") {
    auto f = step_fixture(30, 61);
    QBoostConfig qcfg;
    qcfg.n_trees = 5;
    qcfg.depth = 2;
    auto model = qboost_train(f.x, f.y, qcfg,
                              [](const QuboMatrix& q) { return solve_exhaustive(q); });
    auto back = qboost_from_json(qboost_to_json(model));
    CHECK(back.selection == model.selection);
    CHECK(back.threshold == model.threshold);
    CHECK(back.lambda == model.lambda);
    CHECK(back.depth == model.depth);
    REQUIRE(back.selected_trees.size() == model.selected_trees.size());
    for (std::size_t i = 0; i < back.selected_trees.size(); ++i)
        CHECK(back.selected_trees[i] == model.selected_trees[i]);
}
