#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "agidet/ingest.hpp"

namespace agidet::preprocess {

inline constexpr double kGridRate = 4.0;  // Hz, the common analysis rate

// Second-order IIR section, direct form II transposed, a0 normalized to 1.
struct BiquadSection {
    double b0 = 0, b1 = 0, b2 = 0;
    double a1 = 0, a2 = 0;
};

// Butterworth designs via bilinear transform with frequency prewarping.
// Odd orders produce a trailing first-order section (b2 = a2 = 0).
std::vector<BiquadSection> butter_lowpass(int order, double cutoff_hz, double sample_rate);
std::vector<BiquadSection> butter_highpass(int order, double cutoff_hz, double sample_rate);

// Zero-phase application: odd-reflection padding, steady-state initial
// conditions, forward pass then backward pass. Output length == input length.
std::vector<double> filtfilt(const std::vector<BiquadSection>& sections,
                             const std::vector<double>& x);

// Zero-phase Butterworth low-pass of the given order; throws
// CutoffAboveNyquist when cutoff >= sample_rate / 2.
ingest::ChannelSeries lowpass_filter(const ingest::ChannelSeries& s, double cutoff_hz, int order);

// 0.5-4 Hz band-pass used for beat detection and the filtered BVP stream.
std::vector<double> bvp_bandpass(const ingest::ChannelSeries& bvp);

struct GridSpec {
    double start = 0.0;  // unix seconds, multiple of 1/rate
    double rate = kGridRate;
    std::size_t n = 0;

    double time_at(std::size_t i) const { return start + static_cast<double>(i) / rate; }
};

// Grid-aligned output span for a series: the smallest epoch-anchored grid
// covering exactly the samples of the series.
GridSpec grid_for(const ingest::ChannelSeries& s, double grid_rate);

// Bin-mean decimation onto the grid: output k is the mean of source samples
// with timestamps in [t_k, t_k + 1/rate). Identity when rates and phases
// match. Empty bins hold the nearest filled value.
std::vector<double> resample_to_grid(const ingest::ChannelSeries& s, const GridSpec& grid);
std::vector<double> resample_to_grid(const ingest::ChannelSeries& s, double grid_rate);

// Same binning for gap masks: a bin is a gap when any source sample in it is.
std::vector<std::uint8_t> resample_mask(const ingest::ChannelSeries& s,
                                        const std::vector<std::uint8_t>& mask,
                                        const GridSpec& grid);

// Inter-beat intervals: intervals[i] = beat_times[i+1] - beat_times[i],
// every interval within [0.33, 2.0] s.
struct IbiSeries {
    std::vector<double> beat_times;  // unix seconds, strictly increasing
    std::vector<double> intervals;   // seconds, size = beat_times.size() - 1
};

inline constexpr double kIbiMin = 0.33;
inline constexpr double kIbiMax = 2.0;

// Band-pass, local-maximum peak picking (min distance 0.33 s, prominence
// >= 0.3 x rolling 10 s std), then physiological gating of the intervals.
// Throws NoBeatsDetected when fewer than two beats survive.
IbiSeries detect_ibi(const ingest::ChannelSeries& bvp);

// Samples outside [0.01, 100] uS are invalid; runs <= 5 s are linearly
// interpolated, longer runs are held at the nearest valid value and flagged.
std::pair<ingest::ChannelSeries, std::vector<std::uint8_t>> eda_artifact_removal(
    const ingest::ChannelSeries& eda);

struct EdaComponents {
    std::vector<double> tonic;
    std::vector<double> phasic;
    std::vector<double> smoothed;  // tonic + phasic == smoothed exactly
};

// 1 Hz low-pass smoothing, tonic = centered 30 s moving mean of the smoothed
// signal (edge windows truncated), phasic = smoothed - tonic.
EdaComponents eda_decompose(const ingest::ChannelSeries& eda);

enum class Stream {
    ACC_X = 0, ACC_Y, ACC_Z, ACC_MAG, BVP_F, HR, EDA_PHASIC, EDA_TONIC, TEMP
};
inline constexpr int kStreamCount = 9;

const char* stream_name(Stream s);

// All raw channels cleaned, derived, and resampled onto one 4 Hz grid,
// trimmed to the common overlapping span.
struct AlignedSession {
    std::string participant_id;
    std::string session_id;
    double grid_start = 0.0;
    double grid_rate = kGridRate;
    std::array<std::vector<double>, kStreamCount> streams;
    std::vector<std::uint8_t> gap_mask;

    std::size_t length() const { return gap_mask.size(); }
    const std::vector<double>& stream(Stream s) const { return streams[static_cast<int>(s)]; }
};

// Full per-session pipeline; throws InsufficientOverlap when the channels
// share less than one 60 s window.
AlignedSession align_session(const ingest::SessionRecording& rec);

// Debug dump: t,acc_x,acc_y,acc_z,acc_mag,bvp_f,hr,eda_phasic,eda_tonic,temp,gap
void write_aligned_csv(const AlignedSession& s, const std::filesystem::path& file);

}  // namespace agidet::preprocess
