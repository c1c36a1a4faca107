#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "agidet/ensemble.hpp"
#include "agidet/features.hpp"

namespace agidet::selftrain {

struct SelfTrainConfig {
    double threshold = 0.7;  // strictly-greater admission rule
    int max_iter = 100;
    ensemble::ClassifierKind base = ensemble::ClassifierKind::RANDOM_FOREST;
    std::uint64_t seed = 0;
    ensemble::Hyperparams hp;
};

enum class Termination { CONVERGED, MAX_ITER, NO_UNLABELED };

const char* termination_name(Termination t);

struct IterationStats {
    int iteration = 0;
    int n_newly_labeled = 0;
    int n_remaining_unlabeled = 0;
    int pseudo_normal = 0;     // running totals over all iterations so far
    int pseudo_agitation = 0;
};

struct SelfTrainReport {
    std::vector<IterationStats> iterations;
    Termination termination = Termination::CONVERGED;
    int final_normal = 0;
    int final_agitation = 0;
    int remaining_unlabeled = 0;
};

// Audit record: every admitted row carries the probability that admitted it.
struct PseudoLabel {
    std::size_t row = 0;
    features::Label label = features::Label::NORMAL;
    double probability = 0.0;
    int iteration = 0;
};

struct SelfTrainResult {
    ensemble::Classifier model;
    std::vector<features::Label> labels;  // input labels plus pseudo-labels
    std::vector<PseudoLabel> assignments;
    SelfTrainReport report;
};

// Fit on labeled rows, pseudo-label unlabeled rows whose max class
// probability exceeds the threshold, refit from scratch, repeat. Original
// labels are never modified; pseudo-labels are permanent. Requires at
// least one labeled row of each class (MissingClass otherwise).
SelfTrainResult self_train(const ensemble::DataView& x,
                           const std::vector<features::Label>& labels,
                           const SelfTrainConfig& cfg);

// Convenience overload returning the augmented matrix.
struct SelfTrainMatrixResult {
    ensemble::Classifier model;
    features::FeatureMatrix augmented;
    std::vector<PseudoLabel> assignments;
    SelfTrainReport report;
};
SelfTrainMatrixResult self_train(const features::FeatureMatrix& m, const SelfTrainConfig& cfg);

// CSV: iter,new_labels,remaining_unlabeled,pseudo_normal,pseudo_agitation
// plus a trailing summary line with the termination reason.
void write_report_csv(const SelfTrainReport& r, const std::filesystem::path& file);

}  // namespace agidet::selftrain
