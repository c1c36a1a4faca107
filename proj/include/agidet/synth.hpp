#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "agidet/ingest.hpp"

namespace agidet::synth {

// One agitation episode in a generated session. During the episode the
// heart rate rises, movement variance multiplies, electrodermal bursts
// come faster, and skin temperature drifts upward.
struct EpisodeSpec {
    double start_s = 0.0;     // offset from session start
    double duration_s = 0.0;  // within [120 s, 217 min]
    double hr_delta = 25.0;          // bpm
    double acc_var_multiplier = 5.0;
    double eda_burst_rate = 2.0;     // events/min during the episode
    double temp_delta = 0.3;         // degrees C
};

inline constexpr double kEpisodeMinS = 120.0;
inline constexpr double kEpisodeMaxS = 217.0 * 60.0;

struct CohortSpec {
    int n_participants = 14;
    int n_labeled = 5;
    double normal_minutes = 1880.4;
    double aa_minutes = 147.5;
    double unlabeled_minutes = 3746.3;
    std::uint64_t seed = 0;

    // Minute targets at a fraction of the reference cohort
    // (18804 / 1475 / 37463 at scale 1).
    static CohortSpec scaled(double scale, std::uint64_t seed);
};

// Baseline signal model: 70 bpm pulse train with beat jitter, gravity-only
// accelerometer noise, 1-4 uS tonic drift with sparse phasic bursts,
// 33 +- 0.3 C temperature drift. Native rates 64/32/4/4 Hz. The label
// spans equal the episode intervals exactly; fully_labeled is left false
// for the caller to set.
std::pair<ingest::SessionRecording, ingest::LabelSet> generate_session(
    std::uint64_t seed, double duration_s, const std::vector<EpisodeSpec>& episodes,
    const std::string& participant_id = "P00", const std::string& session_id = "S00",
    double start_time = 1600000000.0);

struct SessionBundle {
    ingest::SessionRecording recording;
    ingest::LabelSet labels;                // empty spans for unlabeled sessions
    std::vector<EpisodeSpec> true_episodes; // generator ground truth, labeled or not
};

// n_participants sessions, the first n_labeled fully labeled; realized
// class minutes land within +-5% of the spec targets.
std::vector<SessionBundle> generate_cohort(const CohortSpec& spec);

// Writes E4 archives plus label files under dir/<pid>_<sid>/.
void write_cohort(const std::vector<SessionBundle>& cohort, const std::filesystem::path& dir);

}  // namespace agidet::synth
