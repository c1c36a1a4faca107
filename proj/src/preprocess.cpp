#include "agidet/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <limits>
#include <numbers>

namespace agidet::preprocess {

namespace {

constexpr double kPi = std::numbers::pi;

// Complex analog pole -> digital biquad denominator via bilinear transform.
std::complex<double> bilinear(std::complex<double> s, double fs) {
    return (2.0 * fs + s) / (2.0 * fs - s);
}

std::vector<BiquadSection> butter_design(int order, double cutoff_hz, double sample_rate,
                                         bool highpass) {
    if (order < 1) throw Error("filter order must be >= 1");
    if (cutoff_hz <= 0.0) throw Error("cutoff must be positive");
    if (cutoff_hz >= sample_rate / 2.0) {
        throw CutoffAboveNyquist("cutoff " + fmt_g17(cutoff_hz) + " Hz >= Nyquist of " +
                                 fmt_g17(sample_rate) + " Hz series");
    }

    const double warped = 2.0 * sample_rate * std::tan(kPi * cutoff_hz / sample_rate);
    std::vector<BiquadSection> sections;

    // Conjugate analog prototype pole pairs, low-pass: p = wc * e^{i theta};
    // high-pass: p = wc / e^{i theta}.
    for (int k = 0; k < order / 2; ++k) {
        double theta = kPi * (2.0 * k + order + 1.0) / (2.0 * order);
        std::complex<double> proto(std::cos(theta), std::sin(theta));
        std::complex<double> pole = highpass ? warped / proto : warped * proto;
        std::complex<double> zp = bilinear(pole, sample_rate);

        BiquadSection s;
        s.a1 = -2.0 * zp.real();
        s.a2 = std::norm(zp);
        if (highpass) {
            double g = (1.0 - s.a1 + s.a2) / 4.0;  // unit gain at Nyquist
            s.b0 = g; s.b1 = -2.0 * g; s.b2 = g;
        } else {
            double g = (1.0 + s.a1 + s.a2) / 4.0;  // unit gain at DC
            s.b0 = g; s.b1 = 2.0 * g; s.b2 = g;
        }
        sections.push_back(s);
    }

    if (order % 2 == 1) {
        // Real prototype pole maps to -wc for both transforms.
        std::complex<double> zp = bilinear(std::complex<double>(-warped, 0.0), sample_rate);
        BiquadSection s;
        s.a1 = -zp.real();
        s.a2 = 0.0;
        if (highpass) {
            double g = (1.0 - s.a1) / 2.0;
            s.b0 = g; s.b1 = -g; s.b2 = 0.0;
        } else {
            double g = (1.0 + s.a1) / 2.0;
            s.b0 = g; s.b1 = g; s.b2 = 0.0;
        }
        sections.push_back(s);
    }
    return sections;
}

double section_pole_radius(const BiquadSection& s) {
    if (s.a2 == 0.0) return std::abs(s.a1);
    double disc = s.a1 * s.a1 - 4.0 * s.a2;
    if (disc < 0.0) return std::sqrt(s.a2);
    double r1 = std::abs((-s.a1 + std::sqrt(disc)) / 2.0);
    double r2 = std::abs((-s.a1 - std::sqrt(disc)) / 2.0);
    return std::max(r1, r2);
}

// Samples needed for the slowest pole to decay below 1e-9.
std::size_t settle_length(const std::vector<BiquadSection>& sections) {
    double r = 0.0;
    for (const auto& s : sections) r = std::max(r, section_pole_radius(s));
    if (r <= 0.0) return 8;
    if (r >= 1.0) return 1 << 14;  // guard; Butterworth poles are inside the unit circle
    double k = std::log(1e-9) / std::log(r);
    return static_cast<std::size_t>(std::min(std::ceil(k), 16384.0)) + 1;
}

// One section, direct form II transposed, steady-state initial conditions
// scaled by the first sample.
void apply_section(const BiquadSection& s, std::vector<double>& x) {
    if (x.empty()) return;
    double dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
    double s1 = (dc - s.b0) * x[0];
    double s2 = (s.b2 - s.a2 * dc) * x[0];
    for (double& xi : x) {
        double y = s.b0 * xi + s1;
        s1 = s.b1 * xi - s.a1 * y + s2;
        s2 = s.b2 * xi - s.a2 * y;
        xi = y;
    }
}

}  // namespace

std::vector<BiquadSection> butter_lowpass(int order, double cutoff_hz, double sample_rate) {
    return butter_design(order, cutoff_hz, sample_rate, false);
}

std::vector<BiquadSection> butter_highpass(int order, double cutoff_hz, double sample_rate) {
    return butter_design(order, cutoff_hz, sample_rate, true);
}

std::vector<double> filtfilt(const std::vector<BiquadSection>& sections,
                             const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) return {};

    std::size_t pad = std::min(settle_length(sections), n - 1);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[0] - x[pad - i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 0; i < pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 2 - i]);

    for (const auto& s : sections) apply_section(s, ext);
    std::reverse(ext.begin(), ext.end());
    for (const auto& s : sections) apply_section(s, ext);
    std::reverse(ext.begin(), ext.end());

    return {ext.begin() + static_cast<std::ptrdiff_t>(pad),
            ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

ingest::ChannelSeries lowpass_filter(const ingest::ChannelSeries& s, double cutoff_hz,
                                     int order) {
    auto sections = butter_lowpass(order, cutoff_hz, s.sample_rate);
    ingest::ChannelSeries out = s;
    out.values = filtfilt(sections, s.values);
    return out;
}

std::vector<double> bvp_bandpass(const ingest::ChannelSeries& bvp) {
    auto hp = butter_highpass(4, 0.5, bvp.sample_rate);
    auto lp = butter_lowpass(4, 4.0, bvp.sample_rate);
    return filtfilt(lp, filtfilt(hp, bvp.values));
}

GridSpec grid_for(const ingest::ChannelSeries& s, double grid_rate) {
    GridSpec g;
    g.rate = grid_rate;
    g.start = std::ceil(s.start_time * grid_rate - 1e-9) / grid_rate;
    double span = s.end_time() - g.start;
    g.n = span > 0 ? static_cast<std::size_t>(std::floor(span * grid_rate + 1e-9)) : 0;
    return g;
}

namespace {

// Shared binning core. Returns per-bin (sum, count).
void bin_samples(const ingest::ChannelSeries& s, const GridSpec& grid,
                 std::vector<double>& sum, std::vector<std::size_t>& count) {
    sum.assign(grid.n, 0.0);
    count.assign(grid.n, 0);
    for (std::size_t j = 0; j < s.values.size(); ++j) {
        double t = s.start_time + static_cast<double>(j) / s.sample_rate;
        double pos = (t - grid.start) * grid.rate + 1e-9;
        if (pos < 0.0) continue;
        auto b = static_cast<std::size_t>(pos);
        if (b >= grid.n) continue;
        sum[b] += s.values[j];
        count[b] += 1;
    }
}

void fill_empty_bins(std::vector<double>& out, const std::vector<std::size_t>& count) {
    const std::size_t n = out.size();
    std::size_t last_filled = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (count[i] > 0) {
            if (last_filled == n && i > 0) {
                for (std::size_t k = 0; k < i; ++k) out[k] = out[i];
            } else if (last_filled != n) {
                for (std::size_t k = last_filled + 1; k < i; ++k) out[k] = out[last_filled];
            }
            last_filled = i;
        }
    }
    if (last_filled != n) {
        for (std::size_t k = last_filled + 1; k < n; ++k) out[k] = out[last_filled];
    }
}

}  // namespace

std::vector<double> resample_to_grid(const ingest::ChannelSeries& s, const GridSpec& grid) {
    std::vector<double> sum;
    std::vector<std::size_t> count;
    bin_samples(s, grid, sum, count);
    for (std::size_t i = 0; i < grid.n; ++i) {
        if (count[i] == 1) continue;  // sum already holds the sample bitwise
        if (count[i] > 1) sum[i] /= static_cast<double>(count[i]);
    }
    fill_empty_bins(sum, count);
    return sum;
}

std::vector<double> resample_to_grid(const ingest::ChannelSeries& s, double grid_rate) {
    return resample_to_grid(s, grid_for(s, grid_rate));
}

std::vector<std::uint8_t> resample_mask(const ingest::ChannelSeries& s,
                                        const std::vector<std::uint8_t>& mask,
                                        const GridSpec& grid) {
    std::vector<std::uint8_t> out(grid.n, 0);
    if (mask.empty()) return out;
    for (std::size_t j = 0; j < mask.size(); ++j) {
        if (!mask[j]) continue;
        double t = s.start_time + static_cast<double>(j) / s.sample_rate;
        double pos = (t - grid.start) * grid.rate + 1e-9;
        if (pos < 0.0) continue;
        auto b = static_cast<std::size_t>(pos);
        if (b < grid.n) out[b] = 1;
    }
    return out;
}

namespace {

struct Peak {
    std::size_t index;
    double height;
};

// Topographic prominence with a 10 s search cap on each side.
double prominence(const std::vector<double>& y, std::size_t i, std::size_t wlen) {
    double h = y[i];
    std::size_t lo = i > wlen ? i - wlen : 0;
    std::size_t hi = std::min(y.size() - 1, i + wlen);

    double left_min = h;
    for (std::size_t j = i; j-- > lo;) {
        if (y[j] > h) break;
        left_min = std::min(left_min, y[j]);
    }
    double right_min = h;
    for (std::size_t j = i + 1; j <= hi; ++j) {
        if (y[j] > h) break;
        right_min = std::min(right_min, y[j]);
    }
    return h - std::max(left_min, right_min);
}

}  // namespace

IbiSeries detect_ibi(const ingest::ChannelSeries& bvp) {
    const double rate = bvp.sample_rate;
    std::vector<double> y = bvp_bandpass(bvp);
    const std::size_t n = y.size();
    if (n < 3) throw NoBeatsDetected("signal too short");

    // rolling 10 s standard deviation via prefix sums
    std::vector<double> p1(n + 1, 0.0), p2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        p1[i + 1] = p1[i] + y[i];
        p2[i + 1] = p2[i] + y[i] * y[i];
    }
    const auto half = static_cast<std::size_t>(std::lround(5.0 * rate));
    auto rolling_std = [&](std::size_t i) {
        std::size_t lo = i > half ? i - half : 0;
        std::size_t hi = std::min(n - 1, i + half);
        auto m = static_cast<double>(hi - lo + 1);
        double mean = (p1[hi + 1] - p1[lo]) / m;
        double var = (p2[hi + 1] - p2[lo]) / m - mean * mean;
        return std::sqrt(std::max(0.0, var));
    };

    const auto wlen = static_cast<std::size_t>(std::lround(10.0 * rate));
    std::vector<Peak> candidates;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (!(y[i] > y[i - 1] && y[i] >= y[i + 1])) continue;
        double thresh = 0.3 * rolling_std(i);
        if (thresh <= 0.0) continue;  // flat neighborhood carries no beats
        if (prominence(y, i, wlen) >= thresh) candidates.push_back({i, y[i]});
    }
    if (candidates.size() < 2) throw NoBeatsDetected("fewer than 2 peaks survive");

    // Enforce the 0.33 s minimum distance, keeping taller peaks first.
    std::stable_sort(candidates.begin(), candidates.end(), [](const Peak& a, const Peak& b) {
        if (a.height != b.height) return a.height > b.height;
        return a.index < b.index;
    });
    const auto min_dist = static_cast<std::size_t>(std::ceil(kIbiMin * rate - 1e-9));
    std::vector<std::size_t> accepted;
    std::vector<std::uint8_t> blocked(n, 0);
    for (const Peak& p : candidates) {
        if (blocked[p.index]) continue;
        accepted.push_back(p.index);
        std::size_t lo = p.index > min_dist ? p.index - min_dist + 1 : 0;
        std::size_t hi = std::min(n - 1, p.index + min_dist - 1);
        for (std::size_t j = lo; j <= hi; ++j) blocked[j] = 1;
    }
    std::sort(accepted.begin(), accepted.end());
    if (accepted.size() < 2) throw NoBeatsDetected("fewer than 2 peaks survive spacing");

    std::vector<double> times(accepted.size());
    for (std::size_t k = 0; k < accepted.size(); ++k) {
        times[k] = bvp.start_time + static_cast<double>(accepted[k]) / rate;
    }

    // Physiological gating: keep the longest contiguous run whose
    // consecutive intervals all lie in [0.33, 2.0] s.
    std::size_t best_lo = 0, best_len = 0;
    std::size_t run_lo = 0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        double d = times[k + 1] - times[k];
        bool ok = d >= kIbiMin - 1e-12 && d <= kIbiMax + 1e-12;
        if (!ok) {
            run_lo = k + 1;
            continue;
        }
        std::size_t len = k + 1 - run_lo;
        if (len > best_len) {
            best_len = len;
            best_lo = run_lo;
        }
    }
    if (best_len == 0) throw NoBeatsDetected("no physiologically plausible intervals");

    IbiSeries out;
    out.beat_times.assign(times.begin() + static_cast<std::ptrdiff_t>(best_lo),
                          times.begin() + static_cast<std::ptrdiff_t>(best_lo + best_len + 1));
    out.intervals.resize(best_len);
    for (std::size_t k = 0; k < best_len; ++k) {
        out.intervals[k] = out.beat_times[k + 1] - out.beat_times[k];
    }
    return out;
}

std::pair<ingest::ChannelSeries, std::vector<std::uint8_t>> eda_artifact_removal(
    const ingest::ChannelSeries& eda) {
    ingest::ChannelSeries out = eda;
    const std::size_t n = out.values.size();
    std::vector<std::uint8_t> invalid(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        bool bad = out.values[i] < 0.01 || out.values[i] > 100.0 || !std::isfinite(out.values[i]);
        if (i < out.gaps.size() && out.gaps[i]) bad = true;
        invalid[i] = bad ? 1 : 0;
    }

    std::vector<std::uint8_t> gap_mask(n, 0);
    const auto max_interp = static_cast<std::size_t>(std::lround(5.0 * out.sample_rate));

    std::size_t i = 0;
    while (i < n) {
        if (!invalid[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && invalid[j]) ++j;
        bool has_left = i > 0;
        bool has_right = j < n;
        std::size_t run = j - i;

        if (has_left && has_right && run <= max_interp) {
            double v0 = out.values[i - 1];
            double v1 = out.values[j];
            auto len = static_cast<double>(run + 1);
            for (std::size_t k = i; k < j; ++k) {
                double f = static_cast<double>(k - i + 1) / len;
                out.values[k] = v0 + (v1 - v0) * f;
            }
        } else {
            for (std::size_t k = i; k < j; ++k) {
                if (has_left && has_right) {
                    out.values[k] = (k - (i - 1) <= j - k) ? out.values[i - 1] : out.values[j];
                } else if (has_left) {
                    out.values[k] = out.values[i - 1];
                } else if (has_right) {
                    out.values[k] = out.values[j];
                }
                gap_mask[k] = 1;
            }
        }
        i = j;
    }
    out.gaps.assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) out.gaps[k] = gap_mask[k];
    return {std::move(out), std::move(gap_mask)};
}

EdaComponents eda_decompose(const ingest::ChannelSeries& eda) {
    EdaComponents c;
    auto lp = butter_lowpass(4, 1.0, eda.sample_rate);
    c.smoothed = filtfilt(lp, eda.values);

    const std::size_t n = c.smoothed.size();
    c.tonic.resize(n);
    c.phasic.resize(n);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + c.smoothed[i];

    const auto half = static_cast<std::size_t>(std::lround(15.0 * eda.sample_rate));
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t lo = i > half ? i - half : 0;
        std::size_t hi = std::min(n - 1, i + half);
        c.tonic[i] = (prefix[hi + 1] - prefix[lo]) / static_cast<double>(hi - lo + 1);
        c.phasic[i] = c.smoothed[i] - c.tonic[i];
    }
    return c;
}

const char* stream_name(Stream s) {
    switch (s) {
        case Stream::ACC_X: return "ACC_X";
        case Stream::ACC_Y: return "ACC_Y";
        case Stream::ACC_Z: return "ACC_Z";
        case Stream::ACC_MAG: return "ACC_MAG";
        case Stream::BVP_F: return "BVP_F";
        case Stream::HR: return "HR";
        case Stream::EDA_PHASIC: return "EDA_PHASIC";
        case Stream::EDA_TONIC: return "EDA_TONIC";
        case Stream::TEMP: return "TEMP";
    }
    return "?";
}

namespace {

double hr_at(const IbiSeries& ibi, double t) {
    const auto& bt = ibi.beat_times;
    if (t <= bt.front()) return 60.0 / ibi.intervals.front();
    if (t >= bt.back()) return 60.0 / ibi.intervals.back();
    auto it = std::upper_bound(bt.begin(), bt.end(), t);
    auto k = static_cast<std::size_t>(std::distance(bt.begin(), it)) - 1;
    if (k >= ibi.intervals.size()) k = ibi.intervals.size() - 1;
    return 60.0 / ibi.intervals[k];
}

}  // namespace

AlignedSession align_session(const ingest::SessionRecording& rec) {
    using ingest::Channel;
    using ingest::ChannelSeries;

    double common_start = -std::numeric_limits<double>::infinity();
    double common_end = std::numeric_limits<double>::infinity();
    for (const ChannelSeries& ch : rec.channels) {
        common_start = std::max(common_start, ch.start_time);
        common_end = std::min(common_end, ch.end_time());
    }

    GridSpec grid;
    grid.rate = kGridRate;
    grid.start = std::ceil(common_start * kGridRate - 1e-9) / kGridRate;
    double span = common_end - grid.start;
    grid.n = span > 0 ? static_cast<std::size_t>(std::floor(span * kGridRate + 1e-9)) : 0;
    if (grid.n < 240) {
        throw InsufficientOverlap("common span " + fmt_g17(std::max(0.0, span)) +
                                  " s is below one 60 s window");
    }

    AlignedSession out;
    out.participant_id = rec.participant_id;
    out.session_id = rec.session_id;
    out.grid_start = grid.start;
    out.grid_rate = grid.rate;

    auto set = [&](Stream s, std::vector<double> v) {
        out.streams[static_cast<int>(s)] = std::move(v);
    };

    // accelerometer: 10 Hz low-pass, order 4, then decimation
    ChannelSeries ax = lowpass_filter(rec.channel(Channel::ACC_X), 10.0, 4);
    ChannelSeries ay = lowpass_filter(rec.channel(Channel::ACC_Y), 10.0, 4);
    ChannelSeries az = lowpass_filter(rec.channel(Channel::ACC_Z), 10.0, 4);
    set(Stream::ACC_X, resample_to_grid(ax, grid));
    set(Stream::ACC_Y, resample_to_grid(ay, grid));
    set(Stream::ACC_Z, resample_to_grid(az, grid));

    std::vector<double> mag(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        double x = out.stream(Stream::ACC_X)[i];
        double y = out.stream(Stream::ACC_Y)[i];
        double z = out.stream(Stream::ACC_Z)[i];
        mag[i] = std::sqrt(x * x + y * y + z * z);
    }
    set(Stream::ACC_MAG, std::move(mag));

    // BVP: band-passed stream plus the beat-derived heart rate
    const ChannelSeries& bvp = rec.channel(Channel::BVP);
    ChannelSeries bvp_f = bvp;
    bvp_f.values = bvp_bandpass(bvp);
    set(Stream::BVP_F, resample_to_grid(bvp_f, grid));

    IbiSeries ibi = detect_ibi(bvp);
    std::vector<double> hr(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) hr[i] = hr_at(ibi, grid.time_at(i));
    set(Stream::HR, std::move(hr));

    // EDA: clean, decompose, align both parts
    auto [eda_clean, eda_gap] = eda_artifact_removal(rec.channel(Channel::EDA));
    EdaComponents comp = eda_decompose(eda_clean);
    ChannelSeries tmp = eda_clean;
    tmp.values = comp.phasic;
    set(Stream::EDA_PHASIC, resample_to_grid(tmp, grid));
    tmp.values = comp.tonic;
    set(Stream::EDA_TONIC, resample_to_grid(tmp, grid));

    set(Stream::TEMP, resample_to_grid(rec.channel(Channel::TEMP), grid));

    // gap mask: union of parse gaps on every channel plus EDA artifact gaps
    out.gap_mask.assign(grid.n, 0);
    auto fold = [&](const ChannelSeries& src, const std::vector<std::uint8_t>& m) {
        auto g = resample_mask(src, m, grid);
        for (std::size_t i = 0; i < grid.n; ++i) out.gap_mask[i] |= g[i];
    };
    for (const ChannelSeries& ch : rec.channels) fold(ch, ch.gaps);
    fold(eda_clean, eda_gap);

    return out;
}

void write_aligned_csv(const AlignedSession& s, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "t,acc_x,acc_y,acc_z,acc_mag,bvp_f,hr,eda_phasic,eda_tonic,temp,gap\n";
    for (std::size_t i = 0; i < s.length(); ++i) {
        out << fmt_g17(s.grid_start + static_cast<double>(i) / s.grid_rate);
        for (int k = 0; k < kStreamCount; ++k) out << ',' << fmt_g17(s.streams[k][i]);
        out << ',' << int(s.gap_mask[i]) << "\n";
    }
}

}  // namespace agidet::preprocess
