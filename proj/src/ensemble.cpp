#include "agidet/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "agidet/model_file.hpp"
#include "agidet/parallel.hpp"
#include "agidet/rng.hpp"

namespace agidet::ensemble {

const TreeNode& DecisionTree::leaf_for(std::span<const double> row) const {
    const TreeNode* n = &nodes[0];
    while (!n->is_leaf()) {
        n = row[static_cast<std::size_t>(n->feature)] <= n->threshold ? &nodes[n->left]
                                                                      : &nodes[n->right];
    }
    return *n;
}

double gini(double c0, double c1) {
    double total = c0 + c1;
    if (total <= 0.0) throw EmptyNode("gini of an empty count pair");
    double p0 = c0 / total, p1 = c1 / total;
    return 1.0 - (p0 * p0 + p1 * p1);
}

namespace {

void check_labels(const std::vector<int>& y, std::size_t n_rows) {
    if (y.size() != n_rows) throw ShapeMismatch("label count differs from row count");
    for (int v : y) {
        if (v != 0 && v != 1) throw Error("labels must be 0 or 1");
    }
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();  // weighted child impurity
};

// One classification tree; rows may contain duplicates (bootstrap).
class ForestTreeBuilder {
public:
    ForestTreeBuilder(const DataView& x, const std::vector<int>& y, ForestMode mode,
                      int min_split, std::uint64_t seed)
        : x_(x), y_(y), mode_(mode), min_split_(min_split), rng_(seed) {
        k_ = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(x.n_cols)))));
        feature_order_.resize(x.n_cols);
        std::iota(feature_order_.begin(), feature_order_.end(), 0);
    }

    DecisionTree build(std::vector<int> rows) {
        tree_.nodes.clear();
        tree_.max_depth_reached = 0;
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    int make_leaf(double c0, double c1) {
        TreeNode n;
        n.n0 = c0;
        n.n1 = c1;
        n.value = c0 + c1 > 0 ? c1 / (c0 + c1) : 0.0;
        tree_.nodes.push_back(n);
        return static_cast<int>(tree_.nodes.size()) - 1;
    }

    // Best Gini split over sorted unique midpoints of one feature.
    bool evaluate_exact(int f, const std::vector<int>& rows, SplitChoice& best) {
        vals_.clear();
        for (int r : rows) vals_.emplace_back(x_.at(r, f), y_[r]);
        std::sort(vals_.begin(), vals_.end());
        if (vals_.front().first == vals_.back().first) return false;

        double total = static_cast<double>(rows.size());
        double t0 = 0, t1 = 0;
        for (auto& [v, label] : vals_) (label ? t1 : t0) += 1.0;

        bool found = false;
        double l0 = 0, l1 = 0;
        for (std::size_t i = 0; i + 1 < vals_.size(); ++i) {
            (vals_[i].second ? l1 : l0) += 1.0;
            if (vals_[i].first == vals_[i + 1].first) continue;
            double nl = l0 + l1, nr = total - nl;
            double r0 = t0 - l0, r1 = t1 - l1;
            double score = (nl * gini(l0, l1) + nr * gini(r0, r1)) / total;
            if (score < best.score) {
                best.score = score;
                best.feature = f;
                best.threshold = (vals_[i].first + vals_[i + 1].first) / 2.0;
            }
            found = true;
        }
        return found;
    }

    // One uniform-random threshold on one feature.
    bool evaluate_random(int f, const std::vector<int>& rows, SplitChoice& best) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (int r : rows) {
            double v = x_.at(r, f);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (!(hi > lo)) return false;
        double thr = rng_.uniform(lo, hi);
        double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
        for (int r : rows) {
            if (x_.at(r, f) <= thr) {
                (y_[r] ? l1 : l0) += 1.0;
            } else {
                (y_[r] ? r1 : r0) += 1.0;
            }
        }
        double nl = l0 + l1, nr = r0 + r1;
        if (nl == 0.0 || nr == 0.0) return false;
        double total = nl + nr;
        double score = (nl * gini(l0, l1) + nr * gini(r0, r1)) / total;
        if (score < best.score) {
            best.score = score;
            best.feature = f;
            best.threshold = thr;
        }
        return true;
    }

    int grow(std::vector<int> rows, int depth) {
        tree_.max_depth_reached = std::max(tree_.max_depth_reached, depth);
        double c0 = 0, c1 = 0;
        for (int r : rows) (y_[r] ? c1 : c0) += 1.0;
        if (c0 == 0.0 || c1 == 0.0 || rows.size() < static_cast<std::size_t>(min_split_)) {
            return make_leaf(c0, c1);
        }

        rng_.shuffle(feature_order_);
        SplitChoice best;
        std::size_t valid_seen = 0;
        for (int f : feature_order_) {
            if (valid_seen >= k_) break;
            bool valid = mode_ == ForestMode::RANDOM_FOREST ? evaluate_exact(f, rows, best)
                                                            : evaluate_random(f, rows, best);
            if (valid) ++valid_seen;
        }
        if (best.feature < 0) return make_leaf(c0, c1);

        std::vector<int> left, right;
        for (int r : rows) {
            (x_.at(r, best.feature) <= best.threshold ? left : right).push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        TreeNode n;
        n.feature = best.feature;
        n.threshold = best.threshold;
        tree_.nodes.push_back(n);
        auto id = static_cast<int>(tree_.nodes.size()) - 1;
        tree_.nodes[id].left = grow(std::move(left), depth + 1);
        tree_.nodes[id].right = grow(std::move(right), depth + 1);
        return id;
    }

    const DataView& x_;
    const std::vector<int>& y_;
    ForestMode mode_;
    int min_split_;
    std::size_t k_;
    Rng rng_;
    std::vector<int> feature_order_;
    std::vector<std::pair<double, int>> vals_;
    DecisionTree tree_;
};

}  // namespace

ForestModel fit_forest(const DataView& x, const std::vector<int>& y, ForestMode mode,
                       const ForestParams& params, std::uint64_t seed) {
    check_labels(y, x.n_rows);
    if (x.n_rows == 0) throw Error("cannot fit a forest on zero rows");

    ForestModel model;
    model.mode = mode;
    model.n_features = static_cast<int>(x.n_cols);
    model.seed = seed;
    model.trees.resize(static_cast<std::size_t>(params.n_trees));

    bool has0 = std::find(y.begin(), y.end(), 0) != y.end();
    bool has1 = std::find(y.begin(), y.end(), 1) != y.end();
    if (!has0 || !has1) {
        model.warnings.push_back("SingleClassTraining: training labels hold one class only");
    }

    parallel_for(model.trees.size(), [&](std::size_t t) {
        std::uint64_t tree_seed = derive_seed(seed, t);
        Rng boot(derive_seed(tree_seed, 0));
        std::vector<int> rows(x.n_rows);
        if (mode == ForestMode::RANDOM_FOREST) {
            for (int& r : rows) r = static_cast<int>(boot.below(x.n_rows));
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        ForestTreeBuilder builder(x, y, mode, params.min_samples_split,
                                  derive_seed(tree_seed, 1));
        model.trees[t] = builder.build(std::move(rows));
    });
    return model;
}

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// Level-wise exact-greedy regression tree over gradient statistics.
// Feature orderings are presorted once per fit and shared across rounds.
class BoostTreeBuilder {
public:
    BoostTreeBuilder(const DataView& x, const BoostParams& params,
                     const std::vector<std::vector<int>>& sorted_idx)
        : x_(x), params_(params), sorted_idx_(sorted_idx) {}

    DecisionTree build(const std::vector<double>& grad, const std::vector<double>& hess) {
        const std::size_t n = x_.n_rows;
        DecisionTree tree;

        struct Work {
            int node_id;
            double g_sum, h_sum;
            std::size_t count;
        };

        std::vector<int> slot_of_row(n, 0);
        double g0 = 0, h0 = 0;
        for (std::size_t r = 0; r < n; ++r) {
            g0 += grad[r];
            h0 += hess[r];
        }
        tree.nodes.push_back(TreeNode{});
        std::vector<Work> level{{0, g0, h0, n}};

        for (int depth = 0; depth < params_.max_depth && !level.empty(); ++depth) {
            tree.max_depth_reached = depth;
            const std::size_t ns = level.size();
            std::vector<SplitChoice> best(ns);
            std::vector<double> best_gain(ns, 0.0);

            std::vector<double> run_g(ns), run_h(ns), prev_val(ns);
            std::vector<std::size_t> run_c(ns);
            std::vector<std::uint8_t> started(ns);

            for (std::size_t f = 0; f < x_.n_cols; ++f) {
                std::fill(run_g.begin(), run_g.end(), 0.0);
                std::fill(run_h.begin(), run_h.end(), 0.0);
                std::fill(run_c.begin(), run_c.end(), 0);
                std::fill(started.begin(), started.end(), 0);

                for (int r : sorted_idx_[f]) {
                    int s = slot_of_row[static_cast<std::size_t>(r)];
                    if (s < 0) continue;
                    double v = x_.at(static_cast<std::size_t>(r), f);
                    const Work& w = level[static_cast<std::size_t>(s)];
                    if (started[s] && v != prev_val[s] && run_c[s] > 0 && run_c[s] < w.count) {
                        double gl = run_g[s], hl = run_h[s];
                        double gr = w.g_sum - gl, hr = w.h_sum - hl;
                        double lam = params_.l2_lambda;
                        double gain = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) -
                                             w.g_sum * w.g_sum / (w.h_sum + lam));
                        if (gain > best_gain[s] + 1e-12) {
                            best_gain[s] = gain;
                            best[s].feature = static_cast<int>(f);
                            best[s].threshold = (prev_val[s] + v) / 2.0;
                        }
                    }
                    run_g[s] += grad[static_cast<std::size_t>(r)];
                    run_h[s] += hess[static_cast<std::size_t>(r)];
                    run_c[s] += 1;
                    prev_val[s] = v;
                    started[s] = 1;
                }
            }

            // materialize splits; unsplit nodes become leaves
            std::vector<Work> next;
            std::vector<int> slot_map(ns, -1);  // old slot -> base of child pair in `next`
            for (std::size_t s = 0; s < ns; ++s) {
                Work& w = level[s];
                bool split = best[s].feature >= 0 && best_gain[s] > 1e-12 &&
                             w.count >= static_cast<std::size_t>(params_.min_samples_split);
                TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node_id)];
                if (!split) {
                    node.value = -w.g_sum / (w.h_sum + params_.l2_lambda);
                    continue;
                }
                node.feature = best[s].feature;
                node.threshold = best[s].threshold;
                tree.nodes.push_back(TreeNode{});
                tree.nodes.push_back(TreeNode{});
                node.left = static_cast<int>(tree.nodes.size()) - 2;
                node.right = static_cast<int>(tree.nodes.size()) - 1;
                slot_map[s] = static_cast<int>(next.size());
                next.push_back({node.left, 0.0, 0.0, 0});
                next.push_back({node.right, 0.0, 0.0, 0});
                tree.max_depth_reached = depth + 1;
            }

            for (std::size_t r = 0; r < n; ++r) {
                int s = slot_of_row[r];
                if (s < 0) continue;
                if (slot_map[static_cast<std::size_t>(s)] < 0) {
                    slot_of_row[r] = -1;  // settled in a leaf
                    continue;
                }
                const TreeNode& node =
                    tree.nodes[static_cast<std::size_t>(level[static_cast<std::size_t>(s)].node_id)];
                int child = slot_map[static_cast<std::size_t>(s)] +
                            (x_.at(r, node.feature) <= node.threshold ? 0 : 1);
                slot_of_row[r] = child;
                Work& cw = next[static_cast<std::size_t>(child)];
                cw.g_sum += grad[r];
                cw.h_sum += hess[r];
                cw.count += 1;
            }
            level = std::move(next);
        }

        // depth limit reached: remaining nodes become leaves
        for (const auto& w : level) {
            TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node_id)];
            node.value = -w.g_sum / (w.h_sum + params_.l2_lambda);
        }
        return tree;
    }

private:
    const DataView& x_;
    const BoostParams& params_;
    const std::vector<std::vector<int>>& sorted_idx_;
};

}  // namespace

BoostedModel fit_boosted(const DataView& x, const std::vector<int>& y,
                         const BoostParams& params, std::uint64_t seed) {
    (void)seed;  // exact greedy boosting is deterministic without it
    check_labels(y, x.n_rows);
    if (x.n_rows == 0) throw Error("cannot fit boosted trees on zero rows");

    BoostedModel model;
    model.learning_rate = params.learning_rate;
    model.l2_lambda = params.l2_lambda;
    model.max_depth = params.max_depth;
    model.n_features = static_cast<int>(x.n_cols);

    const std::size_t n = x.n_rows;
    double pos = 0;
    for (int v : y) pos += v;
    double rate = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
    model.base_score = std::log(rate / (1.0 - rate));

    if (pos == 0 || pos == static_cast<double>(n)) {
        model.warnings.push_back(
            "SingleClassTraining: base score saturates, no boosting rounds run");
        return model;
    }

    // presorted feature orderings, reused by every round
    std::vector<std::vector<int>> sorted_idx(x.n_cols);
    parallel_for(x.n_cols, [&](std::size_t f) {
        auto& idx = sorted_idx[f];
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(),
                         [&](int a, int b) { return x.at(a, f) < x.at(b, f); });
    });

    std::vector<double> margin(n, model.base_score);
    std::vector<double> grad(n), hess(n);
    BoostTreeBuilder builder(x, params, sorted_idx);

    for (int round = 0; round < params.n_rounds; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            double p = sigmoid(margin[r]);
            grad[r] = p - static_cast<double>(y[r]);
            hess[r] = std::max(p * (1.0 - p), 1e-16);
        }
        DecisionTree tree = builder.build(grad, hess);
        for (std::size_t r = 0; r < n; ++r) {
            margin[r] += params.learning_rate * tree.leaf_for(x.row(r)).value;
        }
        model.trees.push_back(std::move(tree));

        double loss = 0;
        for (std::size_t r = 0; r < n; ++r) {
            double p = std::clamp(sigmoid(margin[r]), 1e-12, 1.0 - 1e-12);
            loss -= y[r] ? std::log(p) : std::log(1.0 - p);
        }
        model.round_loss.push_back(loss / static_cast<double>(n));
    }
    return model;
}

std::vector<std::array<double, 2>> predict_proba(const ForestModel& m, const DataView& x) {
    if (static_cast<int>(x.n_cols) != m.n_features) {
        throw ShapeMismatch("forest expects " + std::to_string(m.n_features) + " features, got " +
                            std::to_string(x.n_cols));
    }
    std::vector<std::array<double, 2>> out(x.n_rows);
    parallel_for(x.n_rows, [&](std::size_t r) {
        double p1 = 0.0;
        for (const DecisionTree& t : m.trees) {
            const TreeNode& leaf = t.leaf_for(x.row(r));
            double total = leaf.n0 + leaf.n1;
            p1 += total > 0 ? leaf.n1 / total : 0.5;
        }
        p1 /= static_cast<double>(m.trees.size());
        out[r] = {1.0 - p1, p1};
    });
    return out;
}

std::vector<std::array<double, 2>> predict_proba(const BoostedModel& m, const DataView& x) {
    if (static_cast<int>(x.n_cols) != m.n_features) {
        throw ShapeMismatch("boosted model expects " + std::to_string(m.n_features) +
                            " features, got " + std::to_string(x.n_cols));
    }
    std::vector<std::array<double, 2>> out(x.n_rows);
    parallel_for(x.n_rows, [&](std::size_t r) {
        double margin = m.base_score;
        for (const DecisionTree& t : m.trees) {
            margin += m.learning_rate * t.leaf_for(x.row(r)).value;
        }
        double p1 = sigmoid(margin);
        out[r] = {1.0 - p1, p1};
    });
    return out;
}

const char* classifier_kind_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::RANDOM_FOREST: return "random_forest";
        case ClassifierKind::EXTRA_TREES: return "extra_trees";
        case ClassifierKind::BOOSTED: return "boosted";
    }
    return "?";
}

ClassifierKind classifier_kind_from_name(const std::string& s) {
    if (s == "random_forest" || s == "rf") return ClassifierKind::RANDOM_FOREST;
    if (s == "extra_trees" || s == "et") return ClassifierKind::EXTRA_TREES;
    if (s == "boosted" || s == "gb") return ClassifierKind::BOOSTED;
    throw Error("unknown classifier kind '" + s + "'");
}

std::vector<std::array<double, 2>> Classifier::predict_proba(const DataView& x) const {
    if (kind == ClassifierKind::BOOSTED) return ensemble::predict_proba(*boosted, x);
    return ensemble::predict_proba(*forest, x);
}

Classifier fit_classifier(ClassifierKind kind, const DataView& x, const std::vector<int>& y,
                          const Hyperparams& hp, std::uint64_t seed) {
    Classifier c;
    c.kind = kind;
    switch (kind) {
        case ClassifierKind::RANDOM_FOREST:
            c.forest = fit_forest(x, y, ForestMode::RANDOM_FOREST, hp.forest, seed);
            break;
        case ClassifierKind::EXTRA_TREES:
            c.forest = fit_forest(x, y, ForestMode::EXTRA_TREES, hp.forest, seed);
            break;
        case ClassifierKind::BOOSTED:
            c.boosted = fit_boosted(x, y, hp.boost, seed);
            break;
    }
    return c;
}

namespace {

model_file::Json tree_to_json(const DecisionTree& t) {
    model_file::Json nodes = model_file::Json::array();
    for (const TreeNode& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.n0, n.n1, n.value});
    }
    model_file::Json j;
    j["max_depth_reached"] = t.max_depth_reached;
    j["nodes"] = std::move(nodes);
    return j;
}

DecisionTree tree_from_json(const model_file::Json& j) {
    DecisionTree t;
    t.max_depth_reached = j.at("max_depth_reached").get<int>();
    for (const auto& n : j.at("nodes")) {
        TreeNode node;
        node.feature = n.at(0).get<int>();
        node.threshold = n.at(1).get<double>();
        node.left = n.at(2).get<int>();
        node.right = n.at(3).get<int>();
        node.n0 = n.at(4).get<double>();
        node.n1 = n.at(5).get<double>();
        node.value = n.at(6).get<double>();
        t.nodes.push_back(node);
    }
    if (t.nodes.empty()) throw CorruptModel("tree with no nodes");
    return t;
}

}  // namespace

void save_model(const Classifier& model, const std::filesystem::path& file) {
    model_file::Json j;
    j["model_kind"] = classifier_kind_name(model.kind);
    if (model.kind == ClassifierKind::BOOSTED) {
        const BoostedModel& b = *model.boosted;
        j["base_score"] = b.base_score;
        j["learning_rate"] = b.learning_rate;
        j["l2_lambda"] = b.l2_lambda;
        j["max_depth"] = b.max_depth;
        j["n_features"] = b.n_features;
        j["round_loss"] = b.round_loss;
        j["warnings"] = b.warnings;
        j["trees"] = model_file::Json::array();
        for (const DecisionTree& t : b.trees) j["trees"].push_back(tree_to_json(t));
    } else {
        const ForestModel& f = *model.forest;
        j["n_features"] = f.n_features;
        j["seed"] = f.seed;
        j["warnings"] = f.warnings;
        j["trees"] = model_file::Json::array();
        for (const DecisionTree& t : f.trees) j["trees"].push_back(tree_to_json(t));
    }
    model_file::write(j, file);
}

Classifier load_model(const std::filesystem::path& file) {
    // Peek the kind first, then re-read with the kind-checked reader.
    std::string kind_name;
    {
        std::ifstream in(file);
        if (!in) throw CorruptModel("cannot open model file: " + file.string());
        model_file::Json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw CorruptModel(file.string() + ": " + e.what());
        }
        if (!doc.contains("model_kind") || !doc["model_kind"].is_string()) {
            throw CorruptModel(file.string() + ": missing model_kind");
        }
        kind_name = doc["model_kind"].get<std::string>();
    }

    Classifier c;
    c.kind = classifier_kind_from_name(kind_name);
    model_file::Json j = model_file::read(file, kind_name);
    try {
        if (c.kind == ClassifierKind::BOOSTED) {
            BoostedModel b;
            b.base_score = j.at("base_score").get<double>();
            b.learning_rate = j.at("learning_rate").get<double>();
            b.l2_lambda = j.at("l2_lambda").get<double>();
            b.max_depth = j.at("max_depth").get<int>();
            b.n_features = j.at("n_features").get<int>();
            b.round_loss = j.at("round_loss").get<std::vector<double>>();
            b.warnings = j.at("warnings").get<std::vector<std::string>>();
            for (const auto& t : j.at("trees")) b.trees.push_back(tree_from_json(t));
            c.boosted = std::move(b);
        } else {
            ForestModel f;
            f.mode = c.kind == ClassifierKind::EXTRA_TREES ? ForestMode::EXTRA_TREES
                                                           : ForestMode::RANDOM_FOREST;
            f.n_features = j.at("n_features").get<int>();
            f.seed = j.at("seed").get<std::uint64_t>();
            f.warnings = j.at("warnings").get<std::vector<std::string>>();
            for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t));
            if (f.trees.empty()) throw CorruptModel("forest with no trees");
            c.forest = std::move(f);
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(file.string() + ": " + e.what());
    }
    return c;
}

}  // namespace agidet::ensemble
