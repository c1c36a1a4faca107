#pragma once

// Independent reference implementations used as test oracles. Everything
// here is written against the definitions directly, separate from the
// library code paths it checks.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "agidet/ensemble.hpp"
#include "agidet/vae.hpp"

namespace oracle {

// ---- statistics (features module) -----------------------------------

struct StatSet {
    double mean, stddev, minimum, maximum, ptp, sum, energy, skewness, kurtosis,
        peak_count, rms, line_integral, count_above_mean, count_below_mean, sign_changes,
        iqr, ipr_5_95, p05, p95, hist_entropy, perm_entropy, ssa_entropy;

    std::array<double, 22> in_catalog_order() const;
};

StatSet brute_stats(const std::vector<double>& x);

// ---- metrics (eval module) -------------------------------------------

// Concordant-pair AUC with ties counted 1/2; O(n^2).
double pair_count_auc(std::span<const double> scores, std::span<const int> labels);

// Per-row recount of weighted precision/recall/F1 from raw predictions.
struct RecountPrf {
    double precision_weighted, recall_weighted, f1_weighted;
};
RecountPrf recount_weighted_prf(const std::vector<int>& truth, const std::vector<int>& pred);

// ---- VAE ---------------------------------------------------------------

// Plain-loop forward pass through the encoder/decoder, written separately
// from the library implementation.
std::pair<std::vector<double>, std::vector<double>> forward_encode(
    const agidet::vae::VaeParams& p, const std::vector<double>& x);
std::vector<double> forward_decode(const agidet::vae::VaeParams& p,
                                   const std::vector<double>& z);

// Central finite differences of batch_vae_loss over every parameter.
agidet::vae::VaeParams fd_gradients(const agidet::vae::VaeParams& p,
                                    const std::vector<std::vector<double>>& x,
                                    const std::vector<std::vector<double>>& eps, double h);

// Largest mixed relative error between analytic and finite-difference
// parameter gradients (denominator floored at 1e-3).
double max_grad_rel_error(const agidet::vae::VaeParams& analytic,
                          const agidet::vae::VaeParams& fd);

// ---- trees --------------------------------------------------------------

// Recursive traversal, independent of DecisionTree::leaf_for.
const agidet::ensemble::TreeNode& traverse_tree(const agidet::ensemble::DecisionTree& t,
                                                std::span<const double> row);

// ---- intervals ----------------------------------------------------------

// Total intersection length of [a0,a1) with a set of disjoint intervals.
double interval_intersection(double a0, double a1,
                             const std::vector<std::pair<double, double>>& spans);

// ---- separable blobs ------------------------------------------------------

struct Blobs {
    std::vector<double> x;  // row-major, n x d
    std::vector<int> y;
    std::size_t n_rows = 0, n_cols = 0;
};

// Two Gaussian classes at +-delta/2 along every axis.
Blobs gaussian_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t d, double delta);

}  // namespace oracle
