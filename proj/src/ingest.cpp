#include "qvision/ingest.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qvision/png_io.hpp"

namespace fs = std::filesystem;

namespace qvision::ingest {
namespace {

/// Parses "<SERIES>_<NNNN>" stems; returns the numeric index.
int parse_image_index(const std::string& stem, const std::string& series,
                      const std::string& path) {
    std::string prefix = series + "_";
    if (stem.rfind(prefix, 0) != 0)
        throw IngestError("unexpected image name '" + path + "' in series " + series);
    std::string digits = stem.substr(prefix.size());
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(),
                                       [](char c) { return c >= '0' && c <= '9'; }))
        throw IngestError("unexpected image name '" + path + "' in series " + series);
    return std::stoi(digits);
}

/// Reads ground_truth.txt; returns the set of 1-based image indices that
/// have at least one bounding-box row. Blank lines are skipped.
std::set<int> read_annotated_indices(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IngestError("cannot open annotation file '" + file.string() + "'");
    std::set<int> annotated;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        int index;
        double x1, x2, y1, y2;
        if (!(row >> index)) {
            // Blank lines are fine; anything else is malformed.
            if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
            throw IngestError("malformed annotation row at " + file.string() + ":" +
                              std::to_string(line_no));
        }
        if (!(row >> x1 >> x2 >> y1 >> y2))
            throw IngestError("malformed annotation row at " + file.string() + ":" +
                              std::to_string(line_no));
        annotated.insert(index);
    }
    return annotated;
}

double bilinear_sample(const RawImage& img, double x, double y) {
    std::size_t x0 = std::size_t(std::floor(x));
    std::size_t y0 = std::size_t(std::floor(y));
    std::size_t x1 = std::min(x0 + 1, img.width - 1);
    std::size_t y1 = std::min(y0 + 1, img.height - 1);
    double fx = x - double(x0);
    double fy = y - double(y0);
    double top = double(img.at(y0, x0)) + fx * (double(img.at(y0, x1)) - double(img.at(y0, x0)));
    double bot = double(img.at(y1, x0)) + fx * (double(img.at(y1, x1)) - double(img.at(y1, x0)));
    return top + fy * (bot - top);
}

} // namespace

Dataset load_gdxray(const std::string& root_path,
                    const std::optional<std::vector<std::string>>& series_filter) {
    fs::path root(root_path);
    std::error_code ec;
    if (!fs::is_directory(root, ec))
        throw IngestError("cannot read dataset directory '" + root_path + "'");

    std::vector<std::string> series_ids;
    if (series_filter) {
        for (const auto& s : *series_filter) {
            if (!fs::is_directory(root / s))
                throw IngestError("series '" + s + "' not found under '" + root_path + "'");
            series_ids.push_back(s);
        }
    } else {
        for (const auto& entry : fs::directory_iterator(root))
            if (entry.is_directory()) series_ids.push_back(entry.path().filename().string());
    }
    std::sort(series_ids.begin(), series_ids.end());

    Dataset out;
    for (const auto& series : series_ids) {
        fs::path dir = root / series;

        std::set<int> annotated;
        fs::path gt = dir / "ground_truth.txt";
        if (fs::exists(gt)) annotated = read_annotated_indices(gt);

        std::vector<std::pair<std::string, fs::path>> files; // (image_id, path)
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file()) continue;
            if (entry.path().extension() != ".png") continue;
            files.emplace_back(entry.path().stem().string(), entry.path());
        }
        std::sort(files.begin(), files.end());

        for (const auto& [image_id, path] : files) {
            int index = parse_image_index(image_id, series, path.string());
            LabeledSample sample;
            sample.image = read_png_gray8(path.string());
            sample.label = annotated.count(index) ? +1 : -1;
            sample.series_id = series;
            sample.image_id = image_id;
            out.samples.push_back(std::move(sample));
        }
    }
    return out;
}

std::vector<double> resize_flatten(const RawImage& image, std::size_t target_width,
                                   std::size_t target_height) {
    if (image.width == 0 || image.height == 0 || image.pixels.empty())
        throw IngestError("resize_flatten: degenerate image");
    if (target_width == 0 || target_height == 0)
        throw IngestError("resize_flatten: degenerate target");

    std::vector<double> out;
    out.reserve(target_width * target_height);

    // Corner-aligned sampling: output corners hit input corners exactly.
    double sx = target_width > 1 ? double(image.width - 1) / double(target_width - 1) : 0.0;
    double sy = target_height > 1 ? double(image.height - 1) / double(target_height - 1) : 0.0;
    for (std::size_t ty = 0; ty < target_height; ++ty) {
        double y = double(ty) * sy;
        for (std::size_t tx = 0; tx < target_width; ++tx)
            out.push_back(bilinear_sample(image, double(tx) * sx, y));
    }
    return out;
}

Matrix flatten_dataset(const Dataset& dataset, std::size_t target_width,
                       std::size_t target_height) {
    if (dataset.samples.empty()) throw IngestError("flatten_dataset: empty dataset");
    std::size_t tw = target_width, th = target_height;
    if (tw == 0 || th == 0) {
        tw = dataset.samples.front().image.width;
        th = dataset.samples.front().image.height;
        for (const auto& s : dataset.samples)
            if (s.image.width != tw || s.image.height != th)
                throw IngestError("flatten_dataset: mixed image sizes need a resize target");
    }

    Matrix x(dataset.samples.size(), tw * th);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const RawImage& img = dataset.samples[i].image;
        if (img.width == tw && img.height == th) {
            auto row = x.row(i);
            for (std::size_t j = 0; j < img.pixels.size(); ++j) row[j] = double(img.pixels[j]);
        } else {
            auto flat = resize_flatten(img, tw, th);
            std::copy(flat.begin(), flat.end(), x.row(i).begin());
        }
    }
    return x;
}

StandardizerModel standardize_fit(const Matrix& train) {
    if (train.rows() == 0) throw ShapeError("standardize_fit: empty matrix");
    StandardizerModel m;
    m.mean.assign(train.cols(), 0.0);
    m.std_dev.assign(train.cols(), 0.0);
    const double S = double(train.rows());
    for (std::size_t i = 0; i < train.rows(); ++i) {
        auto row = train.row(i);
        for (std::size_t j = 0; j < train.cols(); ++j) m.mean[j] += row[j];
    }
    for (double& v : m.mean) v /= S;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        auto row = train.row(i);
        for (std::size_t j = 0; j < train.cols(); ++j) {
            double d = row[j] - m.mean[j];
            m.std_dev[j] += d * d;
        }
    }
    for (double& v : m.std_dev) {
        v = std::sqrt(v / S); // population variance
        if (v < m.epsilon) v = 1.0;
    }
    return m;
}

Matrix standardize_apply(const StandardizerModel& model, const Matrix& x) {
    if (x.cols() != model.mean.size())
        throw ShapeError("standardize_apply: column count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j)
            out(i, j) = (x(i, j) - model.mean[j]) / model.std_dev[j];
    return out;
}

MinMaxModel minmax_fit(const Matrix& x, double lo, double hi) {
    if (!(hi > lo)) throw ConfigError("minmax: need hi > lo");
    if (x.rows() == 0) throw ShapeError("minmax_fit: empty matrix");
    MinMaxModel m;
    m.lo = lo;
    m.hi = hi;
    m.col_min.assign(x.cols(), std::numeric_limits<double>::infinity());
    m.col_max.assign(x.cols(), -std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) {
            m.col_min[j] = std::min(m.col_min[j], x(i, j));
            m.col_max[j] = std::max(m.col_max[j], x(i, j));
        }
    return m;
}

Matrix minmax_apply(const MinMaxModel& model, const Matrix& x) {
    if (x.cols() != model.col_min.size())
        throw ShapeError("minmax_apply: column count mismatch");
    Matrix out(x.rows(), x.cols());
    for (std::size_t j = 0; j < x.cols(); ++j) {
        double span = model.col_max[j] - model.col_min[j];
        double scale = span > 0.0 ? (model.hi - model.lo) / span : 0.0;
        for (std::size_t i = 0; i < x.rows(); ++i)
            out(i, j) = (x(i, j) - model.col_min[j]) * scale + model.lo;
    }
    return out;
}

Matrix minmax_scale(const Matrix& x, double lo, double hi) {
    return minmax_apply(minmax_fit(x, lo, hi), x);
}

namespace {

constexpr std::size_t kBackgroundGrid = 5;
constexpr std::size_t kPartTemplates = 12;

/// Shared coarse background pattern standing in for one part geometry.
/// Zero-mean so image means are template-independent.
std::array<double, kBackgroundGrid * kBackgroundGrid> part_template(std::uint64_t seed,
                                                                    std::uint64_t t) {
    std::mt19937_64 rng(seed * 7919ull + 1000000007ull * (t + 1));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::array<double, kBackgroundGrid * kBackgroundGrid> grid;
    double mean = 0.0;
    for (double& g : grid) {
        g = gauss(rng) * 30.0;
        mean += g;
    }
    mean /= double(grid.size());
    for (double& g : grid) g -= mean;
    return grid;
}

RawImage synthesize_image(const SyntheticConfig& cfg, std::uint64_t index, bool positive) {
    std::mt19937_64 rng(cfg.seed * 1000003ull + index);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const std::size_t W = cfg.image_width, H = cfg.image_height;
    std::vector<double> canvas(W * H);

    // Background: one of a few shared part geometries plus a small
    // per-image residual pattern, both coarse grids upsampled bilinearly,
    // plus per-pixel noise.
    double base = 100.0 + (unit(rng) * 2.0 - 1.0) * 2.0;
    constexpr std::size_t G = kBackgroundGrid;
    auto grid = part_template(cfg.seed, rng() % kPartTemplates);
    for (double& g : grid) g += gauss(rng) * 2.0;
    for (std::size_t y = 0; y < H; ++y) {
        double gy = H > 1 ? double(y) * double(G - 1) / double(H - 1) : 0.0;
        std::size_t y0 = std::min(std::size_t(gy), G - 2);
        double fy = gy - double(y0);
        for (std::size_t x = 0; x < W; ++x) {
            double gx = W > 1 ? double(x) * double(G - 1) / double(W - 1) : 0.0;
            std::size_t x0 = std::min(std::size_t(gx), G - 2);
            double fx = gx - double(x0);
            double top = grid[y0 * G + x0] + fx * (grid[y0 * G + x0 + 1] - grid[y0 * G + x0]);
            double bot = grid[(y0 + 1) * G + x0] +
                         fx * (grid[(y0 + 1) * G + x0 + 1] - grid[(y0 + 1) * G + x0]);
            canvas[y * W + x] = base + top + fy * (bot - top);
        }
    }
    for (double& p : canvas) p += gauss(rng) * cfg.noise_std;

    if (positive) {
        std::size_t n_defects = 1 + rng() % 3;
        for (std::size_t d = 0; d < n_defects; ++d) {
            double cx = (0.4 + 0.2 * unit(rng)) * double(W);
            double cy = (0.4 + 0.2 * unit(rng)) * double(H);
            double ax = (0.22 + 0.08 * unit(rng)) * double(W);
            double ay = (0.22 + 0.08 * unit(rng)) * double(H);
            double angle = unit(rng) * 3.14159265358979323846;
            double amp = cfg.defect_contrast * (75.0 + 15.0 * unit(rng)) /
                         double(n_defects);
            double ca = std::cos(angle), sa = std::sin(angle);
            for (std::size_t y = 0; y < H; ++y)
                for (std::size_t x = 0; x < W; ++x) {
                    double dx = double(x) - cx, dy = double(y) - cy;
                    double u = ca * dx + sa * dy;
                    double v = -sa * dx + ca * dy;
                    double r2 = (u / ax) * (u / ax) + (v / ay) * (v / ay);
                    if (r2 < 1.0) canvas[y * W + x] += amp * (1.0 - r2);
                }
        }
    }

    RawImage img(W, H);
    for (std::size_t i = 0; i < canvas.size(); ++i)
        img.pixels[i] = std::uint8_t(std::clamp(std::lround(canvas[i]), 0l, 255l));
    return img;
}

std::string zero_pad(std::size_t v, int width) {
    std::string s = std::to_string(v);
    while (int(s.size()) < width) s.insert(s.begin(), '0');
    return s;
}

} // namespace

Dataset generate_synthetic(const SyntheticConfig& config) {
    if (config.image_width < 8 || config.image_height < 8)
        throw ConfigError("generate_synthetic: image_size must be at least 8x8");
    if (!(config.defect_contrast >= 0.0 && config.defect_contrast <= 1.0))
        throw ConfigError("generate_synthetic: defect_contrast must be in [0, 1]");
    if (config.noise_std < 0.0)
        throw ConfigError("generate_synthetic: noise_std must be non-negative");

    Dataset out;
    out.samples.reserve(config.n_positive + config.n_negative);
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < config.n_positive; ++i, ++index) {
        LabeledSample s;
        s.image = synthesize_image(config, index, true);
        s.label = +1;
        s.series_id = "synthetic";
        s.image_id = "pos_" + zero_pad(i, 4);
        out.samples.push_back(std::move(s));
    }
    for (std::size_t i = 0; i < config.n_negative; ++i, ++index) {
        LabeledSample s;
        s.image = synthesize_image(config, index, false);
        s.label = -1;
        s.series_id = "synthetic";
        s.image_id = "neg_" + zero_pad(i, 4);
        out.samples.push_back(std::move(s));
    }
    return out;
}

SyntheticConfig load_synthetic_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
        SyntheticConfig cfg;
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.n_positive = j.at("n_positive").get<std::size_t>();
        cfg.n_negative = j.at("n_negative").get<std::size_t>();
        auto size = j.at("image_size");
        cfg.image_height = size.at(0).get<std::size_t>();
        cfg.image_width = size.at(1).get<std::size_t>();
        cfg.defect_contrast = j.at("defect_contrast").get<double>();
        cfg.noise_std = j.at("noise_std").get<double>();
        return cfg;
    } catch (const nlohmann::json::exception& e) {
        throw IngestError("malformed manifest '" + path + "': " + e.what());
    }
}

void save_synthetic_manifest(const std::string& path, const SyntheticConfig& config) {
    nlohmann::json j{
        {"seed", config.seed},
        {"n_positive", config.n_positive},
        {"n_negative", config.n_negative},
        {"image_size", {config.image_height, config.image_width}},
        {"defect_contrast", config.defect_contrast},
        {"noise_std", config.noise_std},
    };
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

} // namespace qvision::ingest
