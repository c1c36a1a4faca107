#include "agidet/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace agidet::features {

namespace {
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}

FeatureCatalog FeatureCatalog::canonical() {
    FeatureCatalog c;
    c.version = "1";
    c.stats = {
        "mean", "std", "min", "max", "ptp", "sum", "energy", "skewness", "kurtosis",
        "peak_count", "rms", "line_integral", "count_above_mean", "count_below_mean",
        "sign_changes", "iqr", "ipr_5_95", "p05", "p95", "hist_entropy", "perm_entropy",
        "ssa_entropy",
    };
    return c;
}

const char* label_name(Label l) {
    switch (l) {
        case Label::NORMAL: return "NORMAL";
        case Label::AGITATION: return "AGITATION";
        case Label::UNLABELED: return "UNLABELED";
    }
    return "?";
}

Label label_from_name(const std::string& s) {
    if (s == "NORMAL") return Label::NORMAL;
    if (s == "AGITATION") return Label::AGITATION;
    if (s == "UNLABELED") return Label::UNLABELED;
    throw Error("unknown label '" + s + "'");
}

namespace stats {

double mean(std::span<const double> x) {
    if (x.empty()) return kNan;
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

namespace {

// Central moments up to the requested order.
std::array<double, 5> central_moments(std::span<const double> x) {
    std::array<double, 5> m{};
    if (x.empty()) return m;
    double mu = mean(x);
    for (double v : x) {
        double d = v - mu;
        double d2 = d * d;
        m[2] += d2;
        m[3] += d2 * d;
        m[4] += d2 * d2;
    }
    auto n = static_cast<double>(x.size());
    m[2] /= n;
    m[3] /= n;
    m[4] /= n;
    return m;
}

}  // namespace

double stddev(std::span<const double> x) {
    if (x.empty()) return kNan;
    return std::sqrt(central_moments(x)[2]);
}

double minimum(std::span<const double> x) {
    if (x.empty()) return kNan;
    return *std::min_element(x.begin(), x.end());
}

double maximum(std::span<const double> x) {
    if (x.empty()) return kNan;
    return *std::max_element(x.begin(), x.end());
}

double peak_to_peak(std::span<const double> x) {
    if (x.empty()) return kNan;
    return maximum(x) - minimum(x);
}

double sum(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
}

double energy(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return s;
}

double skewness(std::span<const double> x) {
    if (x.size() < 2) return kNan;
    auto m = central_moments(x);
    if (m[2] <= 0.0) return kNan;
    return m[3] / std::pow(m[2], 1.5);
}

double kurtosis(std::span<const double> x) {
    if (x.size() < 2) return kNan;
    auto m = central_moments(x);
    if (m[2] <= 0.0) return kNan;
    return m[4] / (m[2] * m[2]) - 3.0;
}

double peak_count(std::span<const double> x) {
    if (x.size() < 3) return 0.0;
    double c = 0.0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] > x[i + 1]) c += 1.0;
    }
    return c;
}

double rms(std::span<const double> x) {
    if (x.empty()) return kNan;
    return std::sqrt(energy(x) / static_cast<double>(x.size()));
}

double line_integral(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += std::abs(x[i] - x[i - 1]);
    return s;
}

double count_above_mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double mu = mean(x);
    double c = 0.0;
    for (double v : x) c += v > mu ? 1.0 : 0.0;
    return c;
}

double count_below_mean(std::span<const double> x) {
    if (x.empty()) return 0.0;
    double mu = mean(x);
    double c = 0.0;
    for (double v : x) c += v < mu ? 1.0 : 0.0;
    return c;
}

double sign_changes(std::span<const double> x) {
    double c = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] * x[i - 1] < 0.0) c += 1.0;
    }
    return c;
}

double percentile(std::span<const double> x, double p) {
    if (x.empty()) return kNan;
    std::vector<double> s(x.begin(), x.end());
    std::sort(s.begin(), s.end());
    double h = (static_cast<double>(s.size()) - 1.0) * p / 100.0;
    auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= s.size()) return s.back();
    double frac = h - static_cast<double>(lo);
    return s[lo] + (s[lo + 1] - s[lo]) * frac;
}

double iqr(std::span<const double> x) { return percentile(x, 75.0) - percentile(x, 25.0); }

double ipr_5_95(std::span<const double> x) { return percentile(x, 95.0) - percentile(x, 5.0); }

double hist_entropy(std::span<const double> x) {
    if (x.empty()) return kNan;
    constexpr int kBins = 16;
    double lo = minimum(x), hi = maximum(x);
    if (!(hi > lo)) return 0.0;  // all mass in one bin
    std::array<double, kBins> counts{};
    double width = (hi - lo) / kBins;
    for (double v : x) {
        int b = std::min(kBins - 1, static_cast<int>((v - lo) / width));
        counts[b] += 1.0;
    }
    auto n = static_cast<double>(x.size());
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            double p = c / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

double perm_entropy(std::span<const double> x) {
    if (x.size() < 3) return kNan;
    std::array<double, 9> counts{};
    for (std::size_t i = 0; i + 2 < x.size(); ++i) {
        std::array<int, 3> ord = {0, 1, 2};
        std::stable_sort(ord.begin(), ord.end(),
                         [&](int a, int b) { return x[i + a] < x[i + b]; });
        counts[ord[0] * 3 + ord[1]] += 1.0;
    }
    auto n = static_cast<double>(x.size() - 2);
    double h = 0.0;
    for (double c : counts) {
        if (c > 0.0) {
            double p = c / n;
            h -= p * std::log(p);
        }
    }
    return h;
}

namespace {

// Cyclic Jacobi eigenvalues of a small symmetric matrix (row-major).
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
    auto at = [&](int r, int c) -> double& { return a[r * n + c]; };
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (at(p, q) == 0.0) continue;
                double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (int i = 0; i < n; ++i) eig[i] = at(i, i);
    return eig;
}

}  // namespace

double ssa_entropy(std::span<const double> x) {
    if (x.empty()) return kNan;
    const int m = static_cast<int>(std::min<std::size_t>(10, x.size()));
    const auto k = static_cast<int>(x.size()) - m + 1;

    // Gram matrix of the trajectory rows: G[a][b] = sum_j x[a+j] x[b+j].
    std::vector<double> g(static_cast<std::size_t>(m) * m, 0.0);
    for (int a = 0; a < m; ++a) {
        for (int b = a; b < m; ++b) {
            double s = 0.0;
            for (int j = 0; j < k; ++j) s += x[a + j] * x[b + j];
            g[a * m + b] = s;
            g[b * m + a] = s;
        }
    }
    std::vector<double> eig = jacobi_eigenvalues(std::move(g), m);
    double total = 0.0;
    for (double v : eig) total += std::max(0.0, v);
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double v : eig) {
        if (v > 0.0) {
            double p = v / total;
            if (p > 0.0) h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace stats

std::array<double, kStatCount> stat_features(std::span<const double> window,
                                             std::span<const std::uint8_t> gaps) {
    std::vector<double> clean;
    std::size_t n_gap = 0;
    if (!gaps.empty()) {
        clean.reserve(window.size());
        for (std::size_t i = 0; i < window.size(); ++i) {
            if (i < gaps.size() && gaps[i]) {
                ++n_gap;
            } else {
                clean.push_back(window[i]);
            }
        }
        window = clean;
    }

    std::array<double, kStatCount> out;
    if (window.empty() || n_gap * 2 > (window.size() + n_gap)) {
        out.fill(kNan);
        return out;
    }

    using namespace stats;
    out[0] = mean(window);
    out[1] = stddev(window);
    out[2] = minimum(window);
    out[3] = maximum(window);
    out[4] = peak_to_peak(window);
    out[5] = sum(window);
    out[6] = energy(window);
    out[7] = skewness(window);
    out[8] = kurtosis(window);
    out[9] = peak_count(window);
    out[10] = rms(window);
    out[11] = line_integral(window);
    out[12] = count_above_mean(window);
    out[13] = count_below_mean(window);
    out[14] = sign_changes(window);
    out[15] = iqr(window);
    out[16] = ipr_5_95(window);
    out[17] = percentile(window, 5.0);
    out[18] = percentile(window, 95.0);
    out[19] = hist_entropy(window);
    out[20] = perm_entropy(window);
    out[21] = ssa_entropy(window);
    return out;
}

FeatureMatrix extract_features(const preprocess::AlignedSession& aligned,
                               const WindowSpec& spec, const FeatureCatalog& catalog) {
    if (spec.overlap_s != 0.0) throw Error("window overlap is fixed at 0");
    if (catalog.stats.size() != kStatCount) throw Error("catalog must hold 22 statistics");

    const auto spw =
        static_cast<std::size_t>(std::lround(spec.length_s * aligned.grid_rate));
    const std::size_t n_windows = spw > 0 ? aligned.length() / spw : 0;
    if (n_windows == 0) throw NoCompleteWindow("session shorter than one window");

    FeatureMatrix m;
    m.column_names.reserve(preprocess::kStreamCount * kStatCount);
    for (int s = 0; s < preprocess::kStreamCount; ++s) {
        for (const std::string& st : catalog.stats) {
            m.column_names.push_back(
                std::string(preprocess::stream_name(static_cast<preprocess::Stream>(s))) + "." +
                st);
        }
    }
    m.values.resize(n_windows * m.n_cols());
    m.row_meta.resize(n_windows);
    m.row_labels.assign(n_windows, Label::UNLABELED);

    for (std::size_t w = 0; w < n_windows; ++w) {
        m.row_meta[w].participant_id = aligned.participant_id;
        m.row_meta[w].session_id = aligned.session_id;
        m.row_meta[w].window_start =
            aligned.grid_start + static_cast<double>(w) * spec.length_s;

        std::span<const std::uint8_t> gaps{aligned.gap_mask.data() + w * spw, spw};
        for (int s = 0; s < preprocess::kStreamCount; ++s) {
            std::span<const double> win{aligned.streams[s].data() + w * spw, spw};
            auto feats = stat_features(win, gaps);
            std::copy(feats.begin(), feats.end(),
                      m.values.begin() + static_cast<std::ptrdiff_t>(w * m.n_cols() +
                                                                     s * kStatCount));
        }
    }
    return m;
}

DropResult drop_invalid_columns(const FeatureMatrix& m) {
    const std::size_t nc = m.n_cols(), nr = m.n_rows();
    std::vector<std::uint8_t> keep(nc, 1);
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t c = 0; c < nc; ++c) {
            if (keep[c] && !std::isfinite(m.at(r, c))) keep[c] = 0;
        }
    }

    DropResult res;
    std::vector<std::size_t> kept_idx;
    for (std::size_t c = 0; c < nc; ++c) {
        if (keep[c]) {
            kept_idx.push_back(c);
            res.matrix.column_names.push_back(m.column_names[c]);
        } else {
            res.removed.push_back(m.column_names[c]);
        }
    }
    if (kept_idx.empty()) throw AllColumnsInvalid("every column holds a non-finite value");

    res.matrix.values.resize(nr * kept_idx.size());
    for (std::size_t r = 0; r < nr; ++r) {
        for (std::size_t k = 0; k < kept_idx.size(); ++k) {
            res.matrix.values[r * kept_idx.size() + k] = m.at(r, kept_idx[k]);
        }
    }
    res.matrix.row_meta = m.row_meta;
    res.matrix.row_labels = m.row_labels;
    return res;
}

FeatureMatrix label_windows(const FeatureMatrix& m, const ingest::LabelSet& labels) {
    for (const RowMeta& meta : m.row_meta) {
        if (meta.participant_id != labels.participant_id ||
            meta.session_id != labels.session_id) {
            throw SessionMismatch(meta.participant_id + "/" + meta.session_id + " vs labels " +
                                  labels.participant_id + "/" + labels.session_id);
        }
    }

    FeatureMatrix out = m;
    const double rate = preprocess::kGridRate;
    const auto spw = static_cast<long long>(std::lround(60.0 * rate));
    for (std::size_t r = 0; r < out.n_rows(); ++r) {
        double t0 = out.row_meta[r].window_start;
        bool agitated = false;
        for (const ingest::LabelSpan& s : labels.spans) {
            if (s.cls != ingest::SpanClass::AGITATION) continue;
            // grid sample k lies in [s.start, s.end) iff k >= (start-t0)*rate
            // and k < (end-t0)*rate
            auto k_lo = static_cast<long long>(std::ceil((s.start - t0) * rate - 1e-9));
            auto k_hi = static_cast<long long>(std::ceil((s.end - t0) * rate - 1e-9)) - 1;
            if (std::max(k_lo, 0LL) <= std::min(k_hi, spw - 1)) {
                agitated = true;
                break;
            }
        }
        out.row_labels[r] =
            agitated ? Label::AGITATION
                     : (labels.fully_labeled ? Label::NORMAL : Label::UNLABELED);
    }
    return out;
}

void write_feature_csv(const FeatureMatrix& m, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "participant_id,session_id,window_start,label";
    for (const std::string& c : m.column_names) out << ',' << c;
    out << "\n";
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        const RowMeta& meta = m.row_meta[r];
        out << meta.participant_id << ',' << meta.session_id << ','
            << fmt_g17(meta.window_start) << ',' << label_name(m.row_labels[r]);
        auto row = m.row(r);
        for (double v : row) out << ',' << fmt_g17(v);
        out << "\n";
    }
}

FeatureMatrix read_feature_csv(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("cannot open feature file: " + file.string());

    std::string line;
    if (!std::getline(in, line)) throw Error("empty feature file: " + file.string());
    std::vector<std::string> head;
    {
        std::istringstream is(line);
        std::string f;
        while (std::getline(is, f, ',')) {
            while (!f.empty() && f.back() == '\r') f.pop_back();
            head.push_back(f);
        }
    }
    if (head.size() < 4 || head[0] != "participant_id" || head[1] != "session_id" ||
        head[2] != "window_start" || head[3] != "label") {
        throw Error("bad feature file header: " + file.string());
    }

    FeatureMatrix m;
    m.column_names.assign(head.begin() + 4, head.end());
    const std::size_t nc = m.n_cols();
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        std::istringstream is(line);
        std::string f;
        RowMeta meta;
        std::getline(is, meta.participant_id, ',');
        std::getline(is, meta.session_id, ',');
        std::getline(is, f, ',');
        meta.window_start = parse_double_strict(f);
        std::getline(is, f, ',');
        while (!f.empty() && f.back() == '\r') f.pop_back();
        m.row_labels.push_back(label_from_name(f));
        m.row_meta.push_back(std::move(meta));
        std::size_t got = 0;
        while (std::getline(is, f, ',')) {
            while (!f.empty() && f.back() == '\r') f.pop_back();
            m.values.push_back(parse_double_strict(f));
            ++got;
        }
        if (got != nc) throw Error("feature row width mismatch in " + file.string());
    }
    return m;
}

FeatureMatrix concat_rows(const std::vector<FeatureMatrix>& parts) {
    FeatureMatrix out;
    for (const FeatureMatrix& p : parts) {
        if (out.column_names.empty()) {
            out.column_names = p.column_names;
        } else if (out.column_names != p.column_names) {
            throw ColumnMismatch("concat_rows parts disagree on columns");
        }
        out.values.insert(out.values.end(), p.values.begin(), p.values.end());
        out.row_meta.insert(out.row_meta.end(), p.row_meta.begin(), p.row_meta.end());
        out.row_labels.insert(out.row_labels.end(), p.row_labels.begin(), p.row_labels.end());
    }
    return out;
}

}  // namespace agidet::features
