#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "qvision/cli.hpp"
#include "qvision/enhance.hpp"
#include "qvision/png_io.hpp"

namespace {

using qvision::cli::ModelSpec;
using qvision::cli::RunConfig;

// Exit statuses: 0 ok, 2 usage/config, 3 data, 4 numerical/capacity.
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct CommonFlags {
    std::string config_path;
    std::string manifest;
    std::string gdxray_root;
    std::string data_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "run-config JSON; flags win on conflict");
    cmd->add_option("--synthetic", flags.manifest, "synthetic dataset manifest JSON");
    cmd->add_option("--gdxray", flags.gdxray_root, "GDXray-style dataset root directory");
    cmd->add_option("--data", flags.data_path,
                    "data source: manifest JSON file or dataset root directory");
    cmd->add_option("--seed", flags.seed, "root seed for every random stage")
        ->each([&flags](const std::string&) { flags.seed_set = true; });
    cmd->add_flag("--dry-run", flags.dry_run, "validate the configuration and exit");
}

RunConfig build_config(const CommonFlags& flags) {
    RunConfig cfg;
    if (!flags.config_path.empty())
        cfg = qvision::cli::config_from_json_file(flags.config_path);

    std::string manifest = flags.manifest;
    std::string gdxray = flags.gdxray_root;
    if (!flags.data_path.empty()) {
        if (std::filesystem::is_directory(flags.data_path))
            gdxray = flags.data_path;
        else
            manifest = flags.data_path;
    }
    if (!manifest.empty()) {
        cfg.data.source = qvision::cli::DataConfig::Source::Synthetic;
        cfg.data.synthetic = qvision::ingest::load_synthetic_manifest(manifest);
    }
    if (!gdxray.empty()) {
        cfg.data.source = qvision::cli::DataConfig::Source::Gdxray;
        cfg.data.gdxray_root = gdxray;
        if (cfg.data.resize_width == 0) {
            cfg.data.resize_width = qvision::ingest::kTargetWidth;
            cfg.data.resize_height = qvision::ingest::kTargetHeight;
        }
    }
    if (flags.seed_set) cfg.seed = flags.seed;
    return cfg;
}

qvision::enhance::EnhanceConfig parse_enhance(const std::string& kind,
                                              const std::vector<double>& percentiles,
                                              const std::vector<int>& tiles, double clip) {
    qvision::enhance::EnhanceConfig cfg;
    if (kind == "none")
        cfg.kind = qvision::enhance::Enhancement::None;
    else if (kind == "stretch")
        cfg.kind = qvision::enhance::Enhancement::Stretch;
    else if (kind == "histeq")
        cfg.kind = qvision::enhance::Enhancement::HistEq;
    else if (kind == "adapthist")
        cfg.kind = qvision::enhance::Enhancement::AdaptHist;
    else
        throw qvision::ConfigError("unknown enhancement '" + kind + "'");
    if (percentiles.size() == 2) {
        cfg.stretch.p_low = percentiles[0];
        cfg.stretch.p_high = percentiles[1];
    }
    if (tiles.size() == 2) {
        cfg.tile_rows = tiles[0];
        cfg.tile_cols = tiles[1];
    }
    if (clip > 0.0)
        cfg.clip_limit = clip;
    else if (clip == 0.0)
        cfg.clip_limit = std::nullopt;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qvision: quantum-vs-classical defect classification benchmark"};
    app.require_subcommand(1);

    // --- ingest ----------------------------------------------------------
    CommonFlags ingest_flags;
    auto* cmd_ingest = app.add_subcommand("ingest", "load or generate a dataset, print counts");
    add_common(cmd_ingest, ingest_flags);

    // --- enhance ---------------------------------------------------------
    CommonFlags enhance_flags;
    std::string enh_in, enh_out, enh_kind = "stretch";
    std::vector<double> enh_percentiles;
    std::vector<int> enh_tiles;
    double enh_clip = 0.01;
    auto* cmd_enhance = app.add_subcommand("enhance", "apply a contrast transform to a PNG");
    cmd_enhance->add_option("--in", enh_in, "input PNG")->required();
    cmd_enhance->add_option("--out", enh_out, "output PNG")->required();
    cmd_enhance->add_option("--enhance", enh_kind, "none|stretch|histeq|adapthist");
    cmd_enhance->add_option("--percentiles", enh_percentiles, "stretch percentiles: low high")
        ->expected(2);
    cmd_enhance->add_option("--tiles", enh_tiles, "tile grid: rows cols")->expected(2);
    cmd_enhance->add_option("--clip", enh_clip, "clip limit fraction, 0 disables");
    add_common(cmd_enhance, enhance_flags);

    // --- pca -------------------------------------------------------------
    CommonFlags pca_flags;
    std::size_t pca_k = 10;
    std::string pca_out = "pca.json";
    auto* cmd_pca = app.add_subcommand("pca", "fit a PCA model on the training split");
    cmd_pca->add_option("--k", pca_k, "number of components");
    cmd_pca->add_option("--out", pca_out, "model output path");
    add_common(cmd_pca, pca_flags);

    // --- kernel ----------------------------------------------------------
    CommonFlags kernel_flags;
    std::size_t kernel_features = 10;
    int kernel_reps = 2;
    std::string kernel_out = "gram.bin";
    auto* cmd_kernel = app.add_subcommand("kernel", "write the quantum-kernel Gram matrix");
    cmd_kernel->add_option("--features", kernel_features, "PCA dimension = qubit count");
    cmd_kernel->add_option("--reps", kernel_reps, "feature-map repetitions");
    cmd_kernel->add_option("--out", kernel_out, "flat binary output path");
    add_common(cmd_kernel, kernel_flags);

    // --- train -----------------------------------------------------------
    CommonFlags train_flags;
    std::string train_model, train_out = "model.json";
    std::size_t train_trees = 10;
    int train_depth = 3, train_reps = 2;
    double train_lambda = 0.0, train_c = 1.0;
    std::size_t train_pca = 0;
    auto* cmd_train = app.add_subcommand("train", "train one model and persist it as JSON");
    cmd_train
        ->add_option("--model", train_model,
                     "linsvm|rbfsvm|adaboost|qsvm|qboost-exhaustive|qboost-sa")
        ->required();
    cmd_train->add_option("--trees", train_trees, "weak-learner count");
    cmd_train->add_option("--depth", train_depth, "tree depth");
    cmd_train->add_option("--lambda", train_lambda, "QBoost regularization");
    cmd_train->add_option("--C", train_c, "SVM box parameter");
    cmd_train->add_option("--reps", train_reps, "feature-map repetitions");
    cmd_train->add_option("--pca", train_pca, "PCA dimension, 0 = none");
    cmd_train->add_option("--out", train_out, "model output path");
    add_common(cmd_train, train_flags);

    // --- bench -----------------------------------------------------------
    CommonFlags bench_flags;
    std::string bench_recipe, bench_out, bench_format = "csv", bench_enhance = "none";
    std::vector<std::string> bench_models;
    std::size_t bench_pca = 0, bench_trees = 10;
    int bench_depth = 3, bench_reps = 2;
    double bench_lambda = 0.0;
    bool bench_rus = false, bench_timing = false;
    std::vector<double> bench_percentiles;
    std::vector<int> bench_tiles;
    double bench_clip = 0.01;
    auto* cmd_bench = app.add_subcommand("bench", "run a model set and emit a metric table");
    cmd_bench->add_option("--recipe", bench_recipe, "table1|table5|table7|table9");
    cmd_bench->add_option("--models", bench_models,
                          "models to run (linsvm,rbfsvm,adaboost,qsvm,qboost-*)")
        ->delimiter(',');
    cmd_bench->add_option("--pca", bench_pca, "PCA dimension, 0 = none");
    cmd_bench->add_option("--trees", bench_trees, "weak-learner count");
    cmd_bench->add_option("--depth", bench_depth, "tree depth");
    cmd_bench->add_option("--lambda", bench_lambda, "QBoost regularization");
    cmd_bench->add_option("--reps", bench_reps, "feature-map repetitions");
    cmd_bench->add_option("--enhance", bench_enhance, "none|stretch|histeq|adapthist");
    cmd_bench->add_option("--percentiles", bench_percentiles, "stretch percentiles")
        ->expected(2);
    cmd_bench->add_option("--tiles", bench_tiles, "tile grid")->expected(2);
    cmd_bench->add_option("--clip", bench_clip, "clip limit fraction, 0 disables");
    cmd_bench->add_flag("--rus", bench_rus, "random under-sampling on the training split");
    cmd_bench->add_flag("--timing", bench_timing, "measure train/inference wall time");
    cmd_bench->add_option("--out", bench_out, "report output path");
    cmd_bench->add_option("--format", bench_format, "csv|markdown");
    add_common(cmd_bench, bench_flags);

    // --- sweep -----------------------------------------------------------
    CommonFlags sweep_flags;
    std::vector<double> sweep_lambdas;
    std::vector<int> sweep_depths;
    std::string sweep_out, sweep_format = "csv", sweep_solver = "sa";
    std::size_t sweep_trees = 10, sweep_pca = 0;
    int sweep_depth = 3;
    bool sweep_rus = false, sweep_timing = false;
    auto* cmd_sweep = app.add_subcommand("sweep", "regularization / depth sweeps");
    cmd_sweep->add_option("--lambdas", sweep_lambdas, "lambda grid")->delimiter(',');
    cmd_sweep->add_option("--depths", sweep_depths, "tree depth grid")->delimiter(',');
    cmd_sweep->add_option("--trees", sweep_trees, "weak-learner count");
    cmd_sweep->add_option("--depth", sweep_depth, "tree depth when no grid is given");
    cmd_sweep->add_option("--pca", sweep_pca, "PCA dimension, 0 = none");
    cmd_sweep->add_option("--solver", sweep_solver, "sa|exhaustive");
    cmd_sweep->add_flag("--rus", sweep_rus, "random under-sampling on the training split");
    cmd_sweep->add_flag("--timing", sweep_timing, "measure inference wall time");
    cmd_sweep->add_option("--out", sweep_out, "report output path");
    cmd_sweep->add_option("--format", sweep_format, "csv|markdown");
    add_common(cmd_sweep, sweep_flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (cmd_ingest->parsed()) {
            RunConfig cfg = build_config(ingest_flags);
            qvision::cli::validate(cfg);
            if (ingest_flags.dry_run) return 0;
            std::cout << qvision::cli::run_ingest(cfg);
            return 0;
        }
        if (cmd_enhance->parsed()) {
            auto cfg = parse_enhance(enh_kind, enh_percentiles, enh_tiles, enh_clip);
            if (enhance_flags.dry_run) return 0;
            auto img = qvision::read_png_gray8(enh_in);
            qvision::write_png_gray8(enh_out, qvision::enhance::apply_enhancement(img, cfg));
            return 0;
        }
        if (cmd_pca->parsed()) {
            RunConfig cfg = build_config(pca_flags);
            qvision::cli::validate(cfg);
            if (pca_flags.dry_run) return 0;
            qvision::cli::run_pca(cfg, pca_k, pca_out);
            std::cout << "wrote " << pca_out << "\n";
            return 0;
        }
        if (cmd_kernel->parsed()) {
            RunConfig cfg = build_config(kernel_flags);
            qvision::cli::validate(cfg);
            if (kernel_flags.dry_run) return 0;
            qvision::cli::run_kernel(cfg, kernel_features, kernel_reps, kernel_out);
            std::cout << "wrote " << kernel_out << "\n";
            return 0;
        }
        if (cmd_train->parsed()) {
            RunConfig cfg = build_config(train_flags);
            if (train_pca > 0) cfg.pca_k = train_pca;
            ModelSpec spec;
            spec.name = train_model;
            spec.n_trees = train_trees;
            spec.depth = train_depth;
            spec.lambda = train_lambda;
            spec.C = train_c;
            spec.reps = train_reps;
            cfg.models = {spec};
            qvision::cli::validate(cfg);
            if (train_flags.dry_run) return 0;
            qvision::cli::run_train(cfg, spec, train_out);
            std::cout << "wrote " << train_out << "\n";
            return 0;
        }
        if (cmd_bench->parsed()) {
            RunConfig cfg = build_config(bench_flags);
            cfg.enhance = parse_enhance(bench_enhance, bench_percentiles, bench_tiles,
                                        bench_clip);
            if (bench_pca > 0) cfg.pca_k = bench_pca;
            if (!bench_models.empty()) {
                cfg.models.clear();
                for (const auto& name : bench_models) {
                    ModelSpec spec;
                    spec.name = name;
                    spec.n_trees = bench_trees;
                    spec.depth = bench_depth;
                    spec.lambda = bench_lambda;
                    spec.reps = bench_reps;
                    cfg.models.push_back(spec);
                }
            }
            if (!bench_recipe.empty()) qvision::cli::apply_recipe(cfg, bench_recipe);
            if (bench_rus) cfg.rus = true;
            if (bench_timing) cfg.timing = true;
            if (!bench_out.empty()) cfg.out_path = bench_out;
            cfg.format = bench_format == "markdown" ? qvision::eval::ReportFormat::Markdown
                                                    : qvision::eval::ReportFormat::Csv;
            qvision::cli::validate(cfg);
            if (bench_flags.dry_run) return 0;
            for (const auto& m : cfg.models)
                if (m.name == "rbfsvm") {
                    std::cerr << "note: rbfsvm rows use a C-SVM (C=" << m.C
                              << ") with gamma=1/(n_features*var), not a nu-SVM\n";
                    break;
                }
            // Sweep-shaped recipes (a lambda grid) run the sweep harness.
            auto rows = cfg.lambda_grid.empty() ? qvision::cli::run_bench(cfg)
                                                : qvision::cli::run_sweep(cfg);
            if (cfg.out_path.empty())
                std::cout << qvision::eval::render_report(rows, cfg.format);
            else
                std::cout << "wrote " << cfg.out_path << "\n";
            return 0;
        }
        if (cmd_sweep->parsed()) {
            RunConfig cfg = build_config(sweep_flags);
            if (sweep_pca > 0) cfg.pca_k = sweep_pca;
            if (!sweep_lambdas.empty()) cfg.lambda_grid = sweep_lambdas;
            if (!sweep_depths.empty()) cfg.depth_grid = sweep_depths;
            cfg.solver = sweep_solver;
            if (sweep_rus) cfg.rus = true;
            if (sweep_timing) cfg.timing = true;
            if (!sweep_out.empty()) cfg.out_path = sweep_out;
            cfg.format = sweep_format == "markdown" ? qvision::eval::ReportFormat::Markdown
                                                    : qvision::eval::ReportFormat::Csv;
            if (cfg.models.empty()) {
                ModelSpec spec;
                spec.name = "qboost-sa";
                spec.n_trees = sweep_trees;
                spec.depth = sweep_depth;
                cfg.models = {spec};
            }
            qvision::cli::validate(cfg);
            if (sweep_flags.dry_run) return 0;
            auto rows = qvision::cli::run_sweep(cfg);
            if (cfg.out_path.empty())
                std::cout << qvision::eval::render_report(rows, cfg.format);
            else
                std::cout << "wrote " << cfg.out_path << "\n";
            return 0;
        }
    } catch (const qvision::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const qvision::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const qvision::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const qvision::IngestError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::ResampleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::SplitError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::TrainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::EnhanceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const qvision::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
