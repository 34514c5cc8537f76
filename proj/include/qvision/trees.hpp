#pragma once

#include <span>
#include <string>
#include <vector>

#include "qvision/matrix.hpp"

namespace qvision::trees {

/// One node of a binary CART tree. Internal nodes test
/// x[feature] <= threshold (left on true); leaves carry label +1 or -1
/// and have feature == -1.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = +1;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const TreeNode&) const = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // root at index 0
    int max_depth = 0;

    bool operator==(const DecisionTree&) const = default;
};

/// Greedy weighted-Gini CART. weights must be non-negative and sum to 1
/// within 1e-9 (WeightError otherwise). Splits are midpoints between
/// consecutive distinct feature values; ties break on lowest feature
/// index, then lowest threshold; leaves predict the sign of the weighted
/// label sum with ties going to +1.
DecisionTree tree_fit(const Matrix& x, const std::vector<int>& y,
                      const std::vector<double>& weights, int max_depth);

int tree_predict(const DecisionTree& tree, std::span<const double> x);

std::vector<int> tree_predict_batch(const DecisionTree& tree, const Matrix& x);

std::string tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const std::string& text);

} // namespace qvision::trees
