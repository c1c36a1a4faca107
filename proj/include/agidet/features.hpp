#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "agidet/ingest.hpp"
#include "agidet/preprocess.hpp"

namespace agidet::features {

struct WindowSpec {
    double length_s = 60.0;
    double overlap_s = 0.0;  // fixed at 0
};

inline constexpr int kStatCount = 22;

// The canonical per-stream statistic list; 22 x 9 streams = 198 columns.
struct FeatureCatalog {
    std::vector<std::string> stats;
    std::string version;

    static FeatureCatalog canonical();
};

enum class Label : std::uint8_t { NORMAL = 0, AGITATION = 1, UNLABELED = 2 };

const char* label_name(Label l);
Label label_from_name(const std::string& s);

struct RowMeta {
    std::string participant_id;
    std::string session_id;
    double window_start = 0.0;  // unix seconds
};

// Row-major matrix of window features with per-row provenance and labels.
struct FeatureMatrix {
    std::vector<std::string> column_names;
    std::vector<double> values;  // n_rows() x column_names.size()
    std::vector<RowMeta> row_meta;
    std::vector<Label> row_labels;

    std::size_t n_cols() const { return column_names.size(); }
    std::size_t n_rows() const { return row_meta.size(); }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * n_cols(), n_cols()};
    }
    double at(std::size_t r, std::size_t c) const { return values[r * n_cols() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_cols() + c]; }
};

// Raw statistics; each operates on an arbitrary-length sequence.
// NaN encodes undefined results (zero-variance skewness etc.).
namespace stats {
double mean(std::span<const double> x);
double stddev(std::span<const double> x);  // population
double minimum(std::span<const double> x);
double maximum(std::span<const double> x);
double peak_to_peak(std::span<const double> x);
double sum(std::span<const double> x);
double energy(std::span<const double> x);  // sum of squares
double skewness(std::span<const double> x);
double kurtosis(std::span<const double> x);  // excess
double peak_count(std::span<const double> x);
double rms(std::span<const double> x);
double line_integral(std::span<const double> x);  // sum |x[i+1]-x[i]|
double count_above_mean(std::span<const double> x);
double count_below_mean(std::span<const double> x);
double sign_changes(std::span<const double> x);
double percentile(std::span<const double> x, double p);  // linear interpolation
double iqr(std::span<const double> x);                   // P75 - P25
double ipr_5_95(std::span<const double> x);
double hist_entropy(std::span<const double> x);  // 16 equal-width bins, nats
double perm_entropy(std::span<const double> x);  // order 3, stride 1, nats
double ssa_entropy(std::span<const double> x);   // embedding 10, nats
}  // namespace stats

// The 22 catalog statistics in catalog order. Gap samples are dropped before
// computing; when more than half the window is gap, every output is NaN.
std::array<double, kStatCount> stat_features(std::span<const double> window,
                                             std::span<const std::uint8_t> gaps = {});

// 1-minute non-overlapping windows over all 9 streams; columns are
// "<stream>.<stat>" in stream-major order; the trailing partial window is
// discarded. Rows start UNLABELED.
FeatureMatrix extract_features(const preprocess::AlignedSession& aligned,
                               const WindowSpec& spec, const FeatureCatalog& catalog);

struct DropResult {
    FeatureMatrix matrix;
    std::vector<std::string> removed;
};

// Removes every column containing a non-finite value.
DropResult drop_invalid_columns(const FeatureMatrix& m);

// Window label rule: AGITATION when the window shares at least one grid
// sample with an AGITATION span; otherwise NORMAL when the session is fully
// labeled, else UNLABELED.
FeatureMatrix label_windows(const FeatureMatrix& m, const ingest::LabelSet& labels);

// CSV: participant_id,session_id,window_start,label,<col...>; reals carry
// 17 significant digits for a lossless round-trip.
void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& file);
FeatureMatrix read_feature_csv(const std::filesystem::path& file);

// Row-wise concatenation; all parts must share the column list.
FeatureMatrix concat_rows(const std::vector<FeatureMatrix>& parts);

}  // namespace agidet::features
