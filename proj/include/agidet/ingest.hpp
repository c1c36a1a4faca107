#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agidet/common.hpp"

namespace agidet::ingest {

enum class Channel { ACC_X = 0, ACC_Y, ACC_Z, BVP, EDA, TEMP };
inline constexpr int kChannelCount = 6;

const char* channel_name(Channel c);

// One raw sensor channel. Values are in physical units after parsing
// (ACC in g, EDA in microsiemens, TEMP in Celsius, BVP in device units).
// Unusable file entries are kept as gap markers, never dropped, so
// len(values)/sample_rate always equals the file's implied duration.
struct ChannelSeries {
    Channel name = Channel::ACC_X;
    double start_time = 0.0;   // unix seconds UTC
    double sample_rate = 0.0;  // Hz
    std::vector<double> values;
    std::vector<std::uint8_t> gaps;  // same length as values; 1 = gap marker

    double duration() const {
        return sample_rate > 0 ? static_cast<double>(values.size()) / sample_rate : 0.0;
    }
    double end_time() const { return start_time + duration(); }
    bool has_gaps() const;
};

struct SessionRecording {
    std::string participant_id;
    std::string session_id;
    std::array<ChannelSeries, kChannelCount> channels;

    const ChannelSeries& channel(Channel c) const { return channels[static_cast<int>(c)]; }
    ChannelSeries& channel(Channel c) { return channels[static_cast<int>(c)]; }
};

enum class SpanClass { NORMAL = 0, AGITATION = 1 };

const char* span_class_name(SpanClass c);

// Half-open interval [start, end) of one labeled episode.
struct LabelSpan {
    double start = 0.0;  // unix seconds
    double end = 0.0;
    SpanClass cls = SpanClass::NORMAL;
};

struct LabelSet {
    std::string participant_id;
    std::string session_id;
    std::vector<LabelSpan> spans;  // sorted by start, pairwise non-overlapping
    bool fully_labeled = false;
};

struct ValidationFinding {
    std::string kind;  // "coverage_gap" | "span_misaligned" | "span_outside"
    std::string detail;
    double seconds = 0.0;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;
    double usable_minutes = 0.0;

    bool clean() const { return findings.empty(); }
};

// Parses an E4-style archive directory: {ACC,BVP,EDA,TEMP}.csv, each with
// row 1 = start unix timestamp (repeated per column), row 2 = sample rate,
// rows 3+ = samples. ACC raw counts are scaled by 1/64 to g.
// Participant/session ids come from the directory name "<pid>_<sid>".
SessionRecording parse_e4_archive(const std::filesystem::path& dir);

// Inverse of parse_e4_archive; ACC is written back as integer counts.
void write_e4_archive(const SessionRecording& rec, const std::filesystem::path& dir);

// Label file format:
//   participant_id,session_id,fully_labeled
//   P01,S01,true
//   start_unix,end_unix,class
//   1600000000,1600000120,AGITATION
// Spans come back sorted; overlapping same-class spans are merged; a
// NORMAL span overlapping an AGITATION span raises OverlapConflict.
LabelSet parse_labels(const std::filesystem::path& file);

void write_labels(const LabelSet& labels, const std::filesystem::path& file);

// Report-only consistency check of labels against the recording.
ValidationReport validate_session(const SessionRecording& rec, const LabelSet& labels);

}  // namespace agidet::ingest
