#include "qvision/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace qvision::eval {

Confusion confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw ShapeError("confusion: length mismatch");
    Confusion c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] > 0)
            (y_pred[i] > 0 ? c.tp : c.fn) += 1;
        else
            (y_pred[i] > 0 ? c.fp : c.tn) += 1;
    }
    return c;
}

std::optional<double> precision(const Confusion& c) {
    std::size_t denom = c.tp + c.fp;
    if (denom == 0) return std::nullopt;
    return double(c.tp) / double(denom);
}

std::optional<double> recall(const Confusion& c) {
    std::size_t denom = c.tp + c.fn;
    if (denom == 0) return std::nullopt;
    return double(c.tp) / double(denom);
}

std::optional<double> f1_from(std::optional<double> p, std::optional<double> r) {
    if (!p || !r) return std::nullopt;
    if (*p + *r == 0.0) return std::nullopt;
    return 2.0 * (*p) * (*r) / (*p + *r);
}

std::optional<double> f1(const Confusion& c) { return f1_from(precision(c), recall(c)); }

std::pair<Matrix, std::vector<int>> random_under_sample(const Matrix& x,
                                                        const std::vector<int>& y,
                                                        std::uint64_t seed) {
    if (x.rows() != y.size()) throw ShapeError("random_under_sample: length mismatch");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty())
        throw ResampleError("random_under_sample: both classes required");

    std::mt19937_64 rng(seed);
    auto& majority = pos.size() > neg.size() ? pos : neg;
    auto& minority = pos.size() > neg.size() ? neg : pos;
    std::shuffle(majority.begin(), majority.end(), rng);
    majority.resize(minority.size());

    std::vector<std::size_t> keep;
    keep.insert(keep.end(), minority.begin(), minority.end());
    keep.insert(keep.end(), majority.begin(), majority.end());
    std::shuffle(keep.begin(), keep.end(), rng);

    Matrix xs(keep.size(), x.cols());
    std::vector<int> ys(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        auto src = x.row(keep[r]);
        std::copy(src.begin(), src.end(), xs.row(r).begin());
        ys[r] = y[keep[r]];
    }
    return {std::move(xs), std::move(ys)};
}

SplitIndices stratified_split_indices(const std::vector<int>& y, double test_fraction,
                                      std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw SplitError("stratified_split: test_fraction must be in (0, 1)");
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
    if (pos.size() < 2 || neg.size() < 2)
        throw SplitError("stratified_split: every class needs at least 2 samples");

    // Test side: ceil(S * fraction) in total, distributed over classes by
    // largest fractional remainder.
    std::size_t total_test = std::size_t(std::ceil(double(y.size()) * test_fraction));
    struct ClassPool {
        std::vector<std::size_t>* idx;
        std::size_t take;
        double remainder;
    };
    std::vector<ClassPool> pools;
    pools.push_back({&neg, 0, 0.0});
    pools.push_back({&pos, 0, 0.0});
    std::size_t assigned = 0;
    for (auto& pool : pools) {
        double exact = double(pool.idx->size()) * test_fraction;
        pool.take = std::size_t(std::floor(exact));
        pool.remainder = exact - double(pool.take);
        assigned += pool.take;
    }
    std::stable_sort(pools.begin(), pools.end(),
                     [](const ClassPool& a, const ClassPool& b) {
                         return a.remainder > b.remainder;
                     });
    for (auto& pool : pools) {
        if (assigned >= total_test) break;
        if (pool.take < pool.idx->size()) {
            ++pool.take;
            ++assigned;
        }
    }

    std::mt19937_64 rng(seed);
    SplitIndices out;
    for (auto& pool : pools) {
        std::shuffle(pool.idx->begin(), pool.idx->end(), rng);
        for (std::size_t i = 0; i < pool.idx->size(); ++i)
            (i < pool.take ? out.test : out.train).push_back((*pool.idx)[i]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

std::pair<Dataset, Dataset> stratified_split(const Dataset& dataset, double test_fraction,
                                             std::uint64_t seed) {
    auto idx = stratified_split_indices(dataset.labels(), test_fraction, seed);
    Dataset train, test;
    for (std::size_t i : idx.train) train.samples.push_back(dataset.samples[i]);
    for (std::size_t i : idx.test) test.samples.push_back(dataset.samples[i]);
    return {std::move(train), std::move(test)};
}

MetricRow metric_row(const std::string& model, const std::vector<int>& y_true,
                     const std::vector<int>& y_pred) {
    Confusion c = confusion(y_true, y_pred);
    MetricRow row;
    row.model = model;
    row.precision = precision(c);
    row.recall = recall(c);
    row.f1 = f1(c);
    return row;
}

Matrix ensemble_outputs(const std::vector<trees::DecisionTree>& trees, const Matrix& x) {
    Matrix h(x.rows(), trees.size());
    for (std::size_t i = 0; i < trees.size(); ++i) {
        auto pred = trees::tree_predict_batch(trees[i], x);
        for (std::size_t s = 0; s < x.rows(); ++s) h(s, i) = double(pred[s]);
    }
    return h;
}

std::vector<MetricRow> sweep_regularization(const qboost::WeakEnsemble& ensemble,
                                            const std::vector<int>& y_train,
                                            const Matrix& h_test,
                                            const std::vector<int>& y_test,
                                            const SweepSettings& settings,
                                            const qboost::QuboSampler& sampler) {
    if (settings.lambdas.empty()) throw ConfigError("sweep_regularization: empty grid");
    if (h_test.cols() != ensemble.trees.size())
        throw ShapeError("sweep_regularization: test outputs width mismatch");

    std::vector<MetricRow> rows;
    for (double lambda : settings.lambdas) {
        qboost::QuboMatrix q =
            qboost::build_qubo(ensemble.outputs, y_train, lambda, settings.mode);
        qboost::BinarySolution sol = sampler(q);
        std::size_t selected = std::size_t(std::count(sol.w.begin(), sol.w.end(), 1));

        MetricRow row;
        if (selected == 0) {
            // Degenerate selection: report the row with undefined metrics
            // instead of aborting the sweep.
            row.model = settings.model_name;
        } else {
            double t = qboost::compute_threshold(sol.w, ensemble.outputs, y_train,
                                                 settings.threshold_mode);
            auto scores = qboost::selection_scores(sol.w, h_test);
            std::vector<int> pred(scores.size());
            for (std::size_t s = 0; s < scores.size(); ++s)
                pred[s] = sign_pm(scores[s] - t);
            row = metric_row(settings.model_name, y_test, pred);
        }
        row.selected = selected;
        row.initial = ensemble.trees.size();
        row.lambda = lambda;
        row.depth = settings.depth;
        rows.push_back(std::move(row));
    }
    return rows;
}

InferenceTiming time_inference(const std::function<void(const Matrix&)>& predict,
                               const Matrix& x_test, int repetitions) {
    if (repetitions < 1) throw ConfigError("time_inference: repetitions must be >= 1");
    if (x_test.rows() == 0) throw ShapeError("time_inference: empty test set");

    std::vector<double> seconds;
    seconds.reserve(std::size_t(repetitions));
    for (int r = 0; r < repetitions; ++r) {
        auto start = std::chrono::steady_clock::now();
        predict(x_test);
        auto stop = std::chrono::steady_clock::now();
        seconds.push_back(std::chrono::duration<double>(stop - start).count());
    }
    std::sort(seconds.begin(), seconds.end());
    double median = seconds.size() % 2 == 1
                        ? seconds[seconds.size() / 2]
                        : (seconds[seconds.size() / 2 - 1] + seconds[seconds.size() / 2]) / 2.0;

    InferenceTiming t;
    t.total_seconds = median;
    t.per_image_ms = median * 1000.0 / double(x_test.rows());
    return t;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

namespace {

/// Metric cell: two decimals, undefined flagged with a trailing '*'.
std::string metric_cell(const std::optional<double>& v) {
    char buf[32];
    if (!v) return "0.00*";
    std::snprintf(buf, sizeof(buf), "%.2f", round2(*v));
    return buf;
}

std::string num_cell(const std::optional<double>& v, const char* fmt) {
    if (!v) return "-";
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, *v);
    return buf;
}

std::string count_cell(const std::optional<std::size_t>& v) {
    return v ? std::to_string(*v) : "-";
}

std::vector<std::string> row_cells(const MetricRow& r) {
    return {
        r.model,
        metric_cell(r.precision),
        metric_cell(r.recall),
        metric_cell(r.f1),
        count_cell(r.selected),
        count_cell(r.initial),
        num_cell(r.lambda, "%g"),
        r.depth ? std::to_string(*r.depth) : "-",
        num_cell(r.train_seconds, "%.4g"),
        num_cell(r.infer_ms, "%.4g"),
    };
}

constexpr const char* kHeader[] = {"model",  "precision", "recall", "f1",
                                   "selected", "initial",   "lambda", "depth",
                                   "train_s",  "infer_ms"};

} // namespace

std::string render_report(const std::vector<MetricRow>& rows, ReportFormat format) {
    if (rows.empty()) throw ConfigError("render_report: no rows");
    std::ostringstream out;
    if (format == ReportFormat::Csv) {
        for (std::size_t i = 0; i < std::size(kHeader); ++i)
            out << (i ? "," : "") << kHeader[i];
        out << "\n";
        for (const auto& r : rows) {
            auto cells = row_cells(r);
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << "\n";
        }
    } else {
        out << "|";
        for (const char* h : kHeader) out << " " << h << " |";
        out << "\n|";
        for (std::size_t i = 0; i < std::size(kHeader); ++i) out << " --- |";
        out << "\n";
        for (const auto& r : rows) {
            auto cells = row_cells(r);
            out << "|";
            for (const auto& c : cells) out << " " << c << " |";
            out << "\n";
        }
    }
    return out.str();
}

void emit_report(const std::vector<MetricRow>& rows, ReportFormat format,
                 const std::string& out_path) {
    std::ofstream out(out_path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << render_report(rows, format);
    if (!out) throw IoError("short write to '" + out_path + "'");
}

std::vector<MetricRow> parse_csv_report(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("parse_csv_report: empty input");

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(cur);
        return cells;
    };
    auto parse_metric = [](const std::string& s) -> std::optional<double> {
        if (s == "0.00*") return std::nullopt;
        return std::stod(s);
    };
    auto parse_opt = [](const std::string& s) -> std::optional<double> {
        if (s == "-") return std::nullopt;
        return std::stod(s);
    };

    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != std::size(kHeader))
            throw IoError("parse_csv_report: bad column count");
        MetricRow r;
        r.model = cells[0];
        r.precision = parse_metric(cells[1]);
        r.recall = parse_metric(cells[2]);
        r.f1 = parse_metric(cells[3]);
        if (cells[4] != "-") r.selected = std::size_t(std::stoul(cells[4]));
        if (cells[5] != "-") r.initial = std::size_t(std::stoul(cells[5]));
        r.lambda = parse_opt(cells[6]);
        if (cells[7] != "-") r.depth = std::stoi(cells[7]);
        r.train_seconds = parse_opt(cells[8]);
        r.infer_ms = parse_opt(cells[9]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace qvision::eval
