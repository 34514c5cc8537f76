#include "qvision/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace qvision::trees {
namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0; // weighted Gini after the split
};

double gini(double w_pos, double w_neg) {
    double w = w_pos + w_neg;
    if (w <= 0.0) return 0.0;
    double p = w_pos / w, q = w_neg / w;
    return 1.0 - p * p - q * q;
}

/// Best (feature, threshold) over all candidate midpoints, minimizing the
/// weight-averaged child Gini. Deterministic tie-break: lowest feature
/// index, then lowest threshold.
SplitChoice best_split(const Matrix& x, const std::vector<int>& y,
                       const std::vector<double>& weights,
                       const std::vector<std::size_t>& idx) {
    SplitChoice best;
    double total_pos = 0.0, total_neg = 0.0;
    for (std::size_t s : idx) (y[s] > 0 ? total_pos : total_neg) += weights[s];
    double total = total_pos + total_neg;
    if (total <= 0.0) return best;

    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return x(a, f) < x(b, f);
        });
        double left_pos = 0.0, left_neg = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            std::size_t s = order[i];
            (y[s] > 0 ? left_pos : left_neg) += weights[s];
            double v = x(s, f);
            double next = x(order[i + 1], f);
            if (next <= v) continue; // duplicate value, no midpoint here
            double threshold = (v + next) / 2.0;
            double wl = left_pos + left_neg;
            double wr = total - wl;
            double impurity = (wl * gini(left_pos, left_neg) +
                               wr * gini(total_pos - left_pos, total_neg - left_neg)) /
                              total;
            if (!best.found || impurity < best.impurity) {
                best = {true, int(f), threshold, impurity};
            }
            // Later candidates with equal impurity lose: the scan order is
            // (feature asc, threshold asc), which is exactly the tie-break.
        }
    }
    return best;
}

int majority_label(const std::vector<int>& y, const std::vector<double>& weights,
                   const std::vector<std::size_t>& idx) {
    double s = 0.0;
    for (std::size_t i : idx) s += weights[i] * y[i];
    return s >= 0.0 ? +1 : -1;
}

int build_node(const Matrix& x, const std::vector<int>& y,
               const std::vector<double>& weights, std::vector<std::size_t> idx,
               int depth, int max_depth, std::vector<TreeNode>& nodes) {
    int node_index = int(nodes.size());
    nodes.emplace_back();

    double w_pos = 0.0, w_neg = 0.0;
    for (std::size_t i : idx) (y[i] > 0 ? w_pos : w_neg) += weights[i];
    bool pure = (w_pos == 0.0) || (w_neg == 0.0);

    if (pure || depth >= max_depth) {
        nodes[node_index].label = majority_label(y, weights, idx);
        return node_index;
    }

    SplitChoice split = best_split(x, y, weights, idx);
    double parent_impurity = gini(w_pos, w_neg);
    if (!split.found || split.impurity >= parent_impurity - 1e-12) {
        nodes[node_index].label = majority_label(y, weights, idx);
        return node_index;
    }

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx)
        (x(i, std::size_t(split.feature)) <= split.threshold ? left_idx : right_idx)
            .push_back(i);
    idx.clear();
    idx.shrink_to_fit();

    nodes[node_index].feature = split.feature;
    nodes[node_index].threshold = split.threshold;
    int left = build_node(x, y, weights, std::move(left_idx), depth + 1, max_depth, nodes);
    int right = build_node(x, y, weights, std::move(right_idx), depth + 1, max_depth, nodes);
    nodes[node_index].left = left;
    nodes[node_index].right = right;
    return node_index;
}

} // namespace

DecisionTree tree_fit(const Matrix& x, const std::vector<int>& y,
                      const std::vector<double>& weights, int max_depth) {
    if (x.rows() == 0 || x.cols() == 0) throw ShapeError("tree_fit: empty input");
    if (y.size() != x.rows() || weights.size() != x.rows())
        throw ShapeError("tree_fit: label/weight length mismatch");
    if (max_depth < 0) throw ConfigError("tree_fit: negative max_depth");

    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw WeightError("tree_fit: negative sample weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw WeightError("tree_fit: weights must sum to 1");

    DecisionTree tree;
    tree.max_depth = max_depth;
    std::vector<std::size_t> idx(x.rows());
    std::iota(idx.begin(), idx.end(), 0);
    build_node(x, y, weights, std::move(idx), 0, max_depth, tree.nodes);
    return tree;
}

int tree_predict(const DecisionTree& tree, std::span<const double> x) {
    const TreeNode* node = &tree.nodes.front();
    while (!node->is_leaf()) {
        if (std::size_t(node->feature) >= x.size())
            throw ShapeError("tree_predict: feature index beyond input length");
        node = &tree.nodes[std::size_t(x[std::size_t(node->feature)] <= node->threshold
                                           ? node->left
                                           : node->right)];
    }
    return node->label;
}

std::vector<int> tree_predict_batch(const DecisionTree& tree, const Matrix& x) {
    std::vector<int> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) out[i] = tree_predict(tree, x.row(i));
    return out;
}

std::string tree_to_json(const DecisionTree& tree) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : tree.nodes) {
        if (n.is_leaf())
            nodes.push_back({{"label", n.label}});
        else
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right}});
    }
    nlohmann::json j{{"max_depth", tree.max_depth}, {"nodes", nodes}};
    return j.dump();
}

DecisionTree tree_from_json(const std::string& text) {
    try {
        nlohmann::json j = nlohmann::json::parse(text);
        DecisionTree tree;
        tree.max_depth = j.at("max_depth").get<int>();
        for (const auto& n : j.at("nodes")) {
            TreeNode node;
            if (n.contains("feature")) {
                node.feature = n.at("feature").get<int>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<int>();
                node.right = n.at("right").get<int>();
            } else {
                node.label = n.at("label").get<int>();
            }
            tree.nodes.push_back(node);
        }
        if (tree.nodes.empty()) throw IoError("tree JSON has no nodes");
        return tree;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed tree JSON: ") + e.what());
    }
}

} // namespace qvision::trees
