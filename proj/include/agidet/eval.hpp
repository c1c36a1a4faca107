#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "agidet/ensemble.hpp"
#include "agidet/features.hpp"
#include "agidet/selftrain.hpp"

namespace agidet::eval {

struct SplitSpec {
    double test_fraction = 0.30;
    bool stratified = true;
    std::uint64_t seed = 0;
};

// AGITATION is the positive class everywhere.
struct ConfusionMatrix {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
};

// (TPR + TNR) / 2; throws UndefinedClassRate when a class is absent.
double balanced_accuracy(const ConfusionMatrix& cm);

struct PrfScores {
    double precision_pos = 0, recall_pos = 0, f1_pos = 0;
    double precision_neg = 0, recall_neg = 0, f1_neg = 0;
    double precision_weighted = 0, recall_weighted = 0, f1_weighted = 0;
    bool zero_division = false;  // set when any 0/0 was resolved to 0
};

PrfScores prf_scores(const ConfusionMatrix& cm);

struct CurvePoint {
    double threshold = 0, x = 0, y = 0;
};

struct CurveResult {
    double auc = 0;
    std::vector<CurvePoint> points;
};

// Threshold sweep over sorted unique scores (ties grouped), trapezoidal
// area over (FPR, TPR). Throws SingleClassScores unless both classes occur.
CurveResult roc_auc(std::span<const double> scores, std::span<const int> labels);

// Same sweep over (recall, precision); auc is step-interpolated average
// precision.
CurveResult pr_curve(std::span<const double> scores, std::span<const int> labels);

// Seeded stratified split of 0/1 labels into (train, test) index sets;
// per-class test counts land within +-1 of count * test_fraction.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const SplitSpec& spec);

enum class Mode { SUPERVISED, SELF_TRAIN };
enum class Representation { RAW, VAE };

const char* mode_name(Mode m);
const char* representation_name(Representation r);

struct LabelCounts {
    std::int64_t train_normal_initial = 0;
    std::int64_t train_agitation_initial = 0;
    std::int64_t train_normal_final = 0;
    std::int64_t train_agitation_final = 0;
    std::int64_t unlabeled_initial = 0;
    std::int64_t unlabeled_remaining = 0;
    std::int64_t test_normal = 0;
    std::int64_t test_agitation = 0;
};

struct EvalReport {
    ensemble::ClassifierKind kind = ensemble::ClassifierKind::RANDOM_FOREST;
    Mode mode = Mode::SUPERVISED;
    Representation representation = Representation::RAW;
    std::uint64_t master_seed = 0;

    ConfusionMatrix cm;
    double balanced_accuracy = 0;
    PrfScores prf;
    double auc_roc = 0;
    double auc_pr = 0;
    std::vector<CurvePoint> roc_points;
    std::vector<CurvePoint> pr_points;
    double processing_time_seconds = 0;
    LabelCounts counts;
    selftrain::SelfTrainReport selftrain_report;  // empty for SUPERVISED
};

struct ExperimentConfig {
    ensemble::ClassifierKind kind = ensemble::ClassifierKind::RANDOM_FOREST;
    Mode mode = Mode::SUPERVISED;
    Representation representation = Representation::RAW;
    std::uint64_t master_seed = 0;
    double test_fraction = 0.30;
    double selftrain_threshold = 0.7;
    int selftrain_max_iter = 100;
    ensemble::Hyperparams hp;
};

// Splits the labeled rows 70/30 (unlabeled rows only ever feed the
// SELF_TRAIN pool), times fit+predict on a monotonic clock, and scores the
// untouched test set. The representation tag is metadata; the matrix is
// expected to already be in that representation.
EvalReport run_experiment(const features::FeatureMatrix& m, const ExperimentConfig& cfg);

void write_report_json(const EvalReport& r, const std::filesystem::path& file);
void write_curve_csv(const std::vector<CurvePoint>& points, const std::filesystem::path& file);

}  // namespace agidet::eval
