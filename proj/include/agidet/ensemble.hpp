#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::ensemble {

// Borrowed row-major view over a numeric matrix.
struct DataView {
    const double* data = nullptr;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    double at(std::size_t r, std::size_t c) const { return data[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const { return {data + r * n_cols, n_cols}; }
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double n0 = 0.0;     // class counts at classification leaves
    double n1 = 0.0;
    double value = 0.0;  // leaf output for regression trees

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth_reached = 0;

    const TreeNode& leaf_for(std::span<const double> row) const;
};

// Gini impurity of a binary count pair; throws EmptyNode on zero total.
double gini(double c0, double c1);

enum class ForestMode { RANDOM_FOREST, EXTRA_TREES };

struct ForestParams {
    int n_trees = 100;
    int min_samples_split = 2;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestMode mode = ForestMode::RANDOM_FOREST;
    int n_features = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

struct BoostParams {
    int n_rounds = 100;
    int max_depth = 6;
    double learning_rate = 0.3;
    double l2_lambda = 1.0;
    int min_samples_split = 2;
};

struct BoostedModel {
    std::vector<DecisionTree> trees;  // regression trees on gradient statistics
    double base_score = 0.0;          // prior log-odds
    double learning_rate = 0.3;
    double l2_lambda = 1.0;
    int max_depth = 6;
    int n_features = 0;
    std::vector<double> round_loss;  // training log-loss after each round
    std::vector<std::string> warnings;
};

// RANDOM_FOREST: bootstrap rows, best Gini split over a sqrt(d) feature
// subset, thresholds at midpoints of sorted unique values. EXTRA_TREES:
// full sample, one uniform-random threshold per candidate feature.
// Single-class training is allowed; the model then predicts that class
// with probability 1 and records a warning.
ForestModel fit_forest(const DataView& x, const std::vector<int>& y, ForestMode mode,
                       const ForestParams& params, std::uint64_t seed);

// Logistic-loss boosting: leaf value -G/(H + lambda), depth-limited exact
// greedy splits over all features.
BoostedModel fit_boosted(const DataView& x, const std::vector<int>& y,
                         const BoostParams& params, std::uint64_t seed);

std::vector<std::array<double, 2>> predict_proba(const ForestModel& m, const DataView& x);
std::vector<std::array<double, 2>> predict_proba(const BoostedModel& m, const DataView& x);

enum class ClassifierKind { RANDOM_FOREST, EXTRA_TREES, BOOSTED };

const char* classifier_kind_name(ClassifierKind k);
ClassifierKind classifier_kind_from_name(const std::string& s);

struct Hyperparams {
    ForestParams forest;
    BoostParams boost;
};

// Facade over the three model families with a uniform probability surface.
struct Classifier {
    ClassifierKind kind = ClassifierKind::RANDOM_FOREST;
    std::optional<ForestModel> forest;
    std::optional<BoostedModel> boosted;

    std::vector<std::array<double, 2>> predict_proba(const DataView& x) const;
};

Classifier fit_classifier(ClassifierKind kind, const DataView& x, const std::vector<int>& y,
                          const Hyperparams& hp, std::uint64_t seed);

void save_model(const Classifier& model, const std::filesystem::path& file);
Classifier load_model(const std::filesystem::path& file);

}  // namespace agidet::ensemble
