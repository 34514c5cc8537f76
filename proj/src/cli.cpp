#include "qvision/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "qvision/baselines.hpp"
#include "qvision/qkernel.hpp"
#include "qvision/reduce.hpp"

namespace qvision::cli {
namespace {

using nlohmann::json;

enhance::Enhancement enhancement_from_string(const std::string& s) {
    if (s == "none") return enhance::Enhancement::None;
    if (s == "stretch") return enhance::Enhancement::Stretch;
    if (s == "histeq") return enhance::Enhancement::HistEq;
    if (s == "adapthist") return enhance::Enhancement::AdaptHist;
    throw ConfigError("unknown enhancement '" + s + "'");
}

ModelSpec model_spec_from_json(const json& j) {
    ModelSpec spec;
    spec.name = j.at("name").get<std::string>();
    if (j.contains("trees")) spec.n_trees = j.at("trees").get<std::size_t>();
    if (j.contains("depth")) spec.depth = j.at("depth").get<int>();
    if (j.contains("lambda")) spec.lambda = j.at("lambda").get<double>();
    if (j.contains("C")) spec.C = j.at("C").get<double>();
    if (j.contains("reps")) spec.reps = j.at("reps").get<int>();
    if (j.contains("qubo_mode"))
        spec.qubo_mode = qboost::qubo_mode_from_string(j.at("qubo_mode").get<std::string>());
    if (j.contains("threshold"))
        spec.threshold_mode =
            qboost::threshold_mode_from_string(j.at("threshold").get<std::string>());
    return spec;
}

const std::vector<std::string> kKnownModels = {
    "linsvm", "rbfsvm", "adaboost", "qsvm", "qboost-exhaustive", "qboost-sa"};

void check_model_name(const std::string& name) {
    if (std::find(kKnownModels.begin(), kKnownModels.end(), name) == kKnownModels.end())
        throw ConfigError("unknown model '" + name + "'");
}

} // namespace

std::string ModelSpec::label() const {
    if (name == "adaboost" || name == "qboost-exhaustive" || name == "qboost-sa")
        return name + "-" + std::to_string(n_trees);
    return name;
}

RunConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
    try {
        RunConfig cfg;
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("data")) {
            const auto& d = j.at("data");
            std::string type = d.value("type", "synthetic");
            if (type == "synthetic") {
                cfg.data.source = DataConfig::Source::Synthetic;
                if (d.contains("manifest"))
                    cfg.data.synthetic =
                        ingest::load_synthetic_manifest(d.at("manifest").get<std::string>());
                if (d.contains("n_positive"))
                    cfg.data.synthetic.n_positive = d.at("n_positive").get<std::size_t>();
                if (d.contains("n_negative"))
                    cfg.data.synthetic.n_negative = d.at("n_negative").get<std::size_t>();
                if (d.contains("image_size")) {
                    cfg.data.synthetic.image_height = d.at("image_size").at(0).get<std::size_t>();
                    cfg.data.synthetic.image_width = d.at("image_size").at(1).get<std::size_t>();
                }
                if (d.contains("defect_contrast"))
                    cfg.data.synthetic.defect_contrast = d.at("defect_contrast").get<double>();
                if (d.contains("noise_std"))
                    cfg.data.synthetic.noise_std = d.at("noise_std").get<double>();
                if (d.contains("seed"))
                    cfg.data.synthetic.seed = d.at("seed").get<std::uint64_t>();
            } else if (type == "gdxray") {
                cfg.data.source = DataConfig::Source::Gdxray;
                cfg.data.gdxray_root = d.at("root").get<std::string>();
                if (d.contains("series"))
                    cfg.data.series = d.at("series").get<std::vector<std::string>>();
                if (d.contains("resize")) {
                    cfg.data.resize_width = d.at("resize").at(0).get<std::size_t>();
                    cfg.data.resize_height = d.at("resize").at(1).get<std::size_t>();
                } else {
                    cfg.data.resize_width = ingest::kTargetWidth;
                    cfg.data.resize_height = ingest::kTargetHeight;
                }
            } else {
                throw ConfigError("unknown data type '" + type + "'");
            }
        }
        if (j.contains("enhance")) {
            const auto& e = j.at("enhance");
            cfg.enhance.kind = enhancement_from_string(e.value("kind", "none"));
            if (e.contains("percentiles")) {
                cfg.enhance.stretch.p_low = e.at("percentiles").at(0).get<double>();
                cfg.enhance.stretch.p_high = e.at("percentiles").at(1).get<double>();
            }
            if (e.contains("tiles")) {
                cfg.enhance.tile_rows = e.at("tiles").at(0).get<int>();
                cfg.enhance.tile_cols = e.at("tiles").at(1).get<int>();
            }
            if (e.contains("clip")) {
                if (e.at("clip").is_null())
                    cfg.enhance.clip_limit = std::nullopt;
                else
                    cfg.enhance.clip_limit = e.at("clip").get<double>();
            }
        }
        if (j.contains("pca") && !j.at("pca").is_null()) {
            const auto& p = j.at("pca");
            if (p.contains("k") && !p.at("k").is_null())
                cfg.pca_k = p.at("k").get<std::size_t>();
        }
        if (j.contains("model")) cfg.models.push_back(model_spec_from_json(j.at("model")));
        if (j.contains("models"))
            for (const auto& m : j.at("models")) cfg.models.push_back(model_spec_from_json(m));
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            if (s.contains("lambda"))
                cfg.lambda_grid = s.at("lambda").get<std::vector<double>>();
            if (s.contains("depths")) cfg.depth_grid = s.at("depths").get<std::vector<int>>();
            if (s.contains("solver")) cfg.solver = s.at("solver").get<std::string>();
        }
        if (j.contains("rus")) cfg.rus = j.at("rus").get<bool>();
        if (j.contains("timing")) cfg.timing = j.at("timing").get<bool>();
        if (j.contains("test_fraction")) cfg.test_fraction = j.at("test_fraction").get<double>();
        if (j.contains("out")) cfg.out_path = j.at("out").get<std::string>();
        if (j.contains("format"))
            cfg.format = j.at("format").get<std::string>() == "markdown"
                             ? eval::ReportFormat::Markdown
                             : eval::ReportFormat::Csv;
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed run config: ") + e.what());
    }
}

RunConfig config_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

void apply_recipe(RunConfig& config, const std::string& recipe) {
    auto qboost_spec = [](const char* name, std::size_t trees, int depth) {
        ModelSpec m;
        m.name = name;
        m.n_trees = trees;
        m.depth = depth;
        return m;
    };
    if (recipe == "table1") {
        config.pca_k = 10;
        config.models.clear();
        ModelSpec lin;
        lin.name = "linsvm";
        ModelSpec rbf;
        rbf.name = "rbfsvm";
        ModelSpec ada10 = qboost_spec("adaboost", 10, 3);
        ModelSpec ada50 = qboost_spec("adaboost", 50, 3);
        ModelSpec qsvm;
        qsvm.name = "qsvm";
        qsvm.reps = 2;
        config.models = {lin,
                         rbf,
                         ada10,
                         ada50,
                         qsvm,
                         qboost_spec("qboost-exhaustive", 10, 3),
                         qboost_spec("qboost-sa", 10, 3)};
    } else if (recipe == "table5") {
        config.models = {qboost_spec("qboost-sa", 10, 3)};
        config.lambda_grid = {0, 5, 25, 45, 60, 75, 85, 100};
        config.depth_grid.clear();
    } else if (recipe == "table7") {
        config.models = {qboost_spec("qboost-sa", 50, 3)};
        config.lambda_grid = {0, 5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
        config.depth_grid.clear();
    } else if (recipe == "table9") {
        config.models = {qboost_spec("qboost-sa", 10, 2)};
        config.lambda_grid = {0, 44, 50, 56, 72, 80, 88};
        config.depth_grid = {2};
        config.timing = true;
    } else {
        throw ConfigError("unknown recipe '" + recipe + "'");
    }
}

void validate(const RunConfig& config) {
    if (config.data.source == DataConfig::Source::Synthetic) {
        const auto& s = config.data.synthetic;
        if (s.n_positive + s.n_negative == 0)
            throw ConfigError("synthetic data needs a positive sample count");
        if (s.image_width < 8 || s.image_height < 8)
            throw ConfigError("synthetic image_size must be at least 8x8");
    } else {
        if (config.data.gdxray_root.empty())
            throw ConfigError("gdxray data source needs a root directory");
        if (!std::filesystem::is_directory(config.data.gdxray_root))
            throw ConfigError("gdxray root '" + config.data.gdxray_root +
                              "' does not exist");
    }
    if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0))
        throw ConfigError("test_fraction must be in (0, 1)");
    for (const auto& m : config.models) {
        check_model_name(m.name);
        if (m.name == "qsvm") {
            std::size_t features = config.pca_k
                                       ? *config.pca_k
                                       : (config.data.source == DataConfig::Source::Synthetic
                                              ? config.data.synthetic.image_width *
                                                    config.data.synthetic.image_height
                                              : ingest::kTargetWidth * ingest::kTargetHeight);
            if (features > qkernel::kMaxQubits)
                throw CapacityError("qsvm needs at most " +
                                    std::to_string(qkernel::kMaxQubits) +
                                    " features; got " + std::to_string(features));
        }
        if (m.name == "qboost-exhaustive" && m.n_trees > qboost::kExhaustiveCap)
            throw CapacityError("exhaustive solver capped at " +
                                std::to_string(qboost::kExhaustiveCap) + " trees");
    }
    if (config.solver != "sa" && config.solver != "exhaustive")
        throw ConfigError("unknown solver '" + config.solver + "'");
}

Dataset load_data(const RunConfig& config) {
    if (config.data.source == DataConfig::Source::Synthetic)
        return ingest::generate_synthetic(config.data.synthetic);
    return ingest::load_gdxray(config.data.gdxray_root, config.data.series);
}

PreparedData prepare(const RunConfig& config) {
    validate(config);
    Dataset dataset = load_data(config);

    if (config.enhance.kind != enhance::Enhancement::None)
        for (auto& sample : dataset.samples)
            sample.image = enhance::apply_enhancement(sample.image, config.enhance);

    auto [train_set, test_set] = eval::stratified_split(
        dataset, config.test_fraction, stage_seed(config.seed, SeedStage::Split));

    Matrix x_train =
        ingest::flatten_dataset(train_set, config.data.resize_width, config.data.resize_height);
    Matrix x_test =
        ingest::flatten_dataset(test_set, config.data.resize_width, config.data.resize_height);
    std::vector<int> y_train = train_set.labels();
    std::vector<int> y_test = test_set.labels();

    if (config.rus) {
        auto [xr, yr] = eval::random_under_sample(x_train, y_train,
                                                  stage_seed(config.seed, SeedStage::Data));
        x_train = std::move(xr);
        y_train = std::move(yr);
    }

    auto standardizer = ingest::standardize_fit(x_train);
    x_train = ingest::standardize_apply(standardizer, x_train);
    x_test = ingest::standardize_apply(standardizer, x_test);

    if (config.pca_k) {
        auto pca = reduce::pca_fit(x_train, *config.pca_k);
        x_train = reduce::pca_transform(pca, x_train);
        x_test = reduce::pca_transform(pca, x_test);
    }

    return {std::move(x_train), std::move(x_test), std::move(y_train), std::move(y_test)};
}

std::string run_ingest(const RunConfig& config) {
    validate(config);
    Dataset dataset = load_data(config);
    std::ostringstream out;
    out << dataset.size() << " samples, " << dataset.count_label(+1) << " positive\n";

    std::map<std::string, std::pair<std::size_t, std::size_t>> per_series; // (pos, total)
    for (const auto& s : dataset.samples) {
        auto& [pos, total] = per_series[s.series_id];
        if (s.label > 0) ++pos;
        ++total;
    }
    for (const auto& [series, counts] : per_series)
        out << series << ": " << counts.second << " images, " << counts.first
            << " positive\n";
    return out.str();
}

namespace {

struct TrainedModel {
    std::function<std::vector<int>(const Matrix&)> predict;
    std::optional<std::size_t> selected;
    std::optional<std::size_t> initial;
    std::string json_blob;
};

/// Trains one model spec on prepared features; qsvm gets its own
/// [0, pi]-scaled view of the feature space.
TrainedModel train_model(const ModelSpec& spec, const PreparedData& data,
                         std::uint64_t seed) {
    TrainedModel out;
    std::uint64_t solver_seed = stage_seed(seed, SeedStage::Solver);
    std::uint64_t tree_seed = stage_seed(seed, SeedStage::Trees);

    if (spec.name == "linsvm") {
        auto model = baselines::linear_svm_fit(data.x_train, data.y_train, spec.C, 1000,
                                               1e-4, solver_seed);
        out.predict = [model](const Matrix& x) { return baselines::linear_svm_predict(model, x); };
        out.json_blob = baselines::linear_svm_to_json(model);
    } else if (spec.name == "rbfsvm") {
        auto model = baselines::rbf_svm_fit(data.x_train, data.y_train, spec.C,
                                            std::string("scale"), 1e-3, solver_seed);
        out.predict = [model](const Matrix& x) { return baselines::rbf_svm_predict(model, x); };
        out.json_blob = baselines::rbf_svm_to_json(model);
    } else if (spec.name == "adaboost") {
        auto model =
            baselines::adaboost_fit(data.x_train, data.y_train, spec.n_trees, spec.depth,
                                    tree_seed);
        out.predict = [model](const Matrix& x) {
            return baselines::adaboost_predict_batch(model, x);
        };
        out.json_blob = baselines::adaboost_to_json(model);
    } else if (spec.name == "qsvm") {
        if (data.x_train.cols() > qkernel::kMaxQubits)
            throw CapacityError("qsvm: feature count beyond the statevector cap");
        auto scaler = ingest::minmax_fit(data.x_train, 0.0, M_PI);
        Matrix train_scaled = ingest::minmax_apply(scaler, data.x_train);
        auto spec_map = qkernel::FeatureMapSpec::full(train_scaled.cols(), spec.reps);
        Matrix gram = qkernel::kernel_matrix(train_scaled, spec_map);
        auto model = qkernel::svm_train_precomputed(gram, data.y_train, spec.C, 1e-3, 50,
                                                    solver_seed);
        out.predict = [model, scaler, spec_map, train_scaled](const Matrix& x) {
            Matrix scaled = ingest::minmax_apply(scaler, x);
            Matrix k_test = qkernel::kernel_matrix(scaled, train_scaled, spec_map);
            return qkernel::svm_predict(model, k_test);
        };
        nlohmann::json j{{"kind", "qsvm"},
                         {"reps", spec.reps},
                         {"bias", model.bias},
                         {"C", model.C},
                         {"alpha", model.alpha},
                         {"labels", model.labels}};
        out.json_blob = j.dump();
    } else if (spec.name == "qboost-exhaustive" || spec.name == "qboost-sa") {
        qboost::QuboSampler sampler;
        if (spec.name == "qboost-exhaustive")
            sampler = [](const qboost::QuboMatrix& q) { return qboost::solve_exhaustive(q); };
        else
            sampler = [solver_seed](const qboost::QuboMatrix& q) {
                return qboost::solve_sa(q, {}, solver_seed);
            };
        qboost::QBoostConfig qcfg;
        qcfg.n_trees = spec.n_trees;
        qcfg.depth = spec.depth;
        qcfg.lambda = spec.lambda;
        qcfg.mode = spec.qubo_mode;
        qcfg.threshold_mode = spec.threshold_mode;
        qcfg.seed = tree_seed;
        auto model = qboost::qboost_train(data.x_train, data.y_train, qcfg, sampler);
        out.selected = model.selected_count();
        out.initial = spec.n_trees;
        out.predict = [model](const Matrix& x) {
            return qboost::qboost_predict_batch(model, x);
        };
        out.json_blob = qboost::qboost_to_json(model);
    } else {
        throw ConfigError("unknown model '" + spec.name + "'");
    }
    return out;
}

} // namespace

std::vector<eval::MetricRow> run_bench(const RunConfig& config) {
    validate(config);
    if (config.models.empty()) throw ConfigError("bench: no models configured");
    PreparedData data = prepare(config);

    std::vector<eval::MetricRow> rows;
    for (const auto& spec : config.models) {
        auto t0 = std::chrono::steady_clock::now();
        TrainedModel model = train_model(spec, data, config.seed);
        auto t1 = std::chrono::steady_clock::now();

        std::vector<int> pred = model.predict(data.x_test);
        eval::MetricRow row = eval::metric_row(spec.label(), data.y_test, pred);
        row.selected = model.selected;
        row.initial = model.initial;
        if (spec.name.rfind("qboost", 0) == 0) row.lambda = spec.lambda;
        if (spec.name == "adaboost" || spec.name.rfind("qboost", 0) == 0)
            row.depth = spec.depth;
        if (config.timing) {
            row.train_seconds = std::chrono::duration<double>(t1 - t0).count();
            auto timing = eval::time_inference(
                [&model](const Matrix& x) { model.predict(x); }, data.x_test,
                config.timing_repetitions);
            row.infer_ms = timing.per_image_ms;
        }
        rows.push_back(std::move(row));
    }

    if (!config.out_path.empty()) eval::emit_report(rows, config.format, config.out_path);
    return rows;
}

std::vector<eval::MetricRow> run_sweep(const RunConfig& config) {
    validate(config);
    if (config.lambda_grid.empty()) throw ConfigError("sweep: empty lambda grid");
    if (config.models.empty()) throw ConfigError("sweep: no model configured");
    PreparedData data = prepare(config);

    const ModelSpec base = config.models.front();
    std::uint64_t solver_seed = stage_seed(config.seed, SeedStage::Solver);
    qboost::QuboSampler sampler;
    if (config.solver == "exhaustive")
        sampler = [](const qboost::QuboMatrix& q) { return qboost::solve_exhaustive(q); };
    else
        sampler = [solver_seed](const qboost::QuboMatrix& q) {
            return qboost::solve_sa(q, {}, solver_seed);
        };

    std::vector<int> depths = config.depth_grid;
    if (depths.empty()) depths = {base.depth};

    std::vector<eval::MetricRow> rows;
    for (int depth : depths) {
        auto ensemble =
            qboost::train_weak_ensemble(data.x_train, data.y_train, base.n_trees, depth,
                                        stage_seed(config.seed, SeedStage::Trees));
        Matrix h_test = eval::ensemble_outputs(ensemble.trees, data.x_test);

        eval::SweepSettings settings;
        settings.lambdas = config.lambda_grid;
        settings.mode = base.qubo_mode;
        settings.threshold_mode = base.threshold_mode;
        // Label rows by the solver that actually ran.
        settings.model_name = std::string("qboost-") +
                              (config.solver == "exhaustive" ? "exhaustive" : "sa") + "-" +
                              std::to_string(base.n_trees);
        settings.depth = depth;
        auto swept = eval::sweep_regularization(ensemble, data.y_train, h_test,
                                                data.y_test, settings, sampler);

        if (config.timing) {
            for (std::size_t r = 0; r < swept.size(); ++r) {
                if (!swept[r].selected || *swept[r].selected == 0) continue;
                double lambda = config.lambda_grid[r];
                qboost::QuboMatrix q = qboost::build_qubo(ensemble.outputs, data.y_train,
                                                          lambda, base.qubo_mode);
                auto sol = sampler(q);
                double t = qboost::compute_threshold(sol.w, ensemble.outputs, data.y_train,
                                                     base.threshold_mode);
                auto model = qboost::make_model(ensemble, sol.w, t, lambda, depth);
                auto timing = eval::time_inference(
                    [&model](const Matrix& x) { qboost::qboost_predict_batch(model, x); },
                    data.x_test, config.timing_repetitions);
                swept[r].infer_ms = timing.per_image_ms;
            }
        }
        rows.insert(rows.end(), swept.begin(), swept.end());
    }

    if (!config.out_path.empty()) eval::emit_report(rows, config.format, config.out_path);
    return rows;
}

void run_kernel(const RunConfig& config, std::size_t features, int reps,
                const std::string& out_path) {
    if (features > qkernel::kMaxQubits)
        throw CapacityError("kernel: feature count beyond the statevector cap");
    RunConfig cfg = config;
    cfg.pca_k = features;
    PreparedData data = prepare(cfg);

    auto scaler = ingest::minmax_fit(data.x_train, 0.0, M_PI);
    Matrix scaled = ingest::minmax_apply(scaler, data.x_train);
    auto spec = qkernel::FeatureMapSpec::full(scaled.cols(), reps);
    Matrix gram = qkernel::kernel_matrix(scaled, spec);
    qkernel::save_gram(out_path, gram);
}

void run_train(const RunConfig& config, const ModelSpec& spec, const std::string& out_path) {
    RunConfig cfg = config;
    cfg.models = {spec};
    validate(cfg);
    PreparedData data = prepare(cfg);
    TrainedModel model = train_model(spec, data, config.seed);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << model.json_blob << "\n";
}

void run_pca(const RunConfig& config, std::size_t k, const std::string& out_path) {
    RunConfig cfg = config;
    cfg.pca_k = std::nullopt; // fit on the un-reduced standardized features
    PreparedData data = prepare(cfg);
    auto model = reduce::pca_fit(data.x_train, k);
    reduce::pca_save_json(out_path, model);
}

} // namespace qvision::cli
