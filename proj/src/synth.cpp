#include "agidet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "agidet/rng.hpp"

namespace agidet::synth {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

const EpisodeSpec* episode_at(const std::vector<EpisodeSpec>& eps, double t) {
    for (const EpisodeSpec& e : eps) {
        if (t >= e.start_s && t < e.start_s + e.duration_s) return &e;
    }
    return nullptr;
}

// Benign movement bursts: elevated accelerometer variance without the
// physiological episode signature, so motion alone is not diagnostic.
struct BenignBurst {
    double start_s, duration_s;
};

std::vector<BenignBurst> draw_benign_bursts(double duration_s,
                                            const std::vector<EpisodeSpec>& eps, Rng& rng) {
    std::vector<BenignBurst> out;
    double t = 0.0;
    while (true) {
        t += rng.uniform(1800.0, 5400.0);  // roughly one per hour
        if (t >= duration_s) break;
        BenignBurst b{t, rng.uniform(60.0, 180.0)};
        bool clash = false;
        for (const EpisodeSpec& e : eps) {
            if (b.start_s < e.start_s + e.duration_s + 60.0 &&
                e.start_s < b.start_s + b.duration_s + 60.0) {
                clash = true;
                break;
            }
        }
        if (!clash) out.push_back(b);
        t += b.duration_s;
    }
    return out;
}

ingest::ChannelSeries make_channel(ingest::Channel name, double start, double rate,
                                   std::size_t n) {
    ingest::ChannelSeries s;
    s.name = name;
    s.start_time = start;
    s.sample_rate = rate;
    s.values.assign(n, 0.0);
    s.gaps.assign(n, 0);
    return s;
}

double quantize_counts(double g) { return std::round(g * 64.0) / 64.0; }

}  // namespace

std::pair<ingest::SessionRecording, ingest::LabelSet> generate_session(
    std::uint64_t seed, double duration_s, const std::vector<EpisodeSpec>& episodes,
    const std::string& participant_id, const std::string& session_id, double start_time) {
    if (duration_s <= 0.0) throw Error("session duration must be positive");

    std::vector<EpisodeSpec> eps = episodes;
    std::sort(eps.begin(), eps.end(),
              [](const EpisodeSpec& a, const EpisodeSpec& b) { return a.start_s < b.start_s; });
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (eps[i].duration_s < kEpisodeMinS - 1e-9 || eps[i].duration_s > kEpisodeMaxS + 1e-9) {
            throw Error("episode duration outside [2, 217] minutes");
        }
        if (eps[i].start_s < 0.0 || eps[i].start_s + eps[i].duration_s > duration_s) {
            throw Error("episode outside the session span");
        }
        if (i > 0 && eps[i].start_s < eps[i - 1].start_s + eps[i - 1].duration_s) {
            throw OverlappingEpisodes("episodes at " + fmt_g17(eps[i - 1].start_s) + " and " +
                                      fmt_g17(eps[i].start_s));
        }
    }

    ingest::SessionRecording rec;
    rec.participant_id = participant_id;
    rec.session_id = session_id;

    const auto n64 = static_cast<std::size_t>(std::llround(duration_s * 64.0));
    const auto n32 = static_cast<std::size_t>(std::llround(duration_s * 32.0));
    const auto n4 = static_cast<std::size_t>(std::llround(duration_s * 4.0));

    // ---- BVP: pulse train with per-beat jitter -------------------------
    {
        Rng rng(derive_seed(seed, 0));
        auto& bvp = rec.channel(ingest::Channel::BVP);
        bvp = make_channel(ingest::Channel::BVP, start_time, 64.0, n64);

        double phase0 = rng.uniform(0.0, 0.6);
        double t_beat = 0.05 + phase0;
        while (t_beat < duration_s) {
            const EpisodeSpec* e = episode_at(eps, t_beat);
            double hr = 70.0 + (e ? e->hr_delta : 0.0) + 1.5 * std::sin(kTwoPi * t_beat / 600.0) +
                        rng.normal(0.0, 0.8);
            hr = std::clamp(hr, 40.0, 180.0);
            double ibi = 60.0 / hr;

            auto i0 = static_cast<std::size_t>(std::ceil(t_beat * 64.0));
            auto i1 = std::min(n64, static_cast<std::size_t>(std::ceil((t_beat + ibi) * 64.0)));
            for (std::size_t i = i0; i < i1; ++i) {
                double u = (static_cast<double>(i) / 64.0 - t_beat) / ibi;
                double systolic = std::exp(-(u - 0.30) * (u - 0.30) / 0.008);
                double dicrotic = 0.35 * std::exp(-(u - 0.62) * (u - 0.62) / 0.02);
                bvp.values[i] = systolic + dicrotic;
            }
            t_beat += ibi;
        }
        for (double& v : bvp.values) v += rng.normal(0.0, 0.04);
    }

    // ---- ACC: gravity plus noise, variance raised by episodes and by
    // benign movement bursts ---------------------------------------------
    {
        Rng rng(derive_seed(seed, 1));
        auto bursts = draw_benign_bursts(duration_s, eps, rng);
        auto& ax = rec.channel(ingest::Channel::ACC_X);
        auto& ay = rec.channel(ingest::Channel::ACC_Y);
        auto& az = rec.channel(ingest::Channel::ACC_Z);
        ax = make_channel(ingest::Channel::ACC_X, start_time, 32.0, n32);
        ay = make_channel(ingest::Channel::ACC_Y, start_time, 32.0, n32);
        az = make_channel(ingest::Channel::ACC_Z, start_time, 32.0, n32);

        constexpr double kBaseSigma = 0.02;
        for (std::size_t i = 0; i < n32; ++i) {
            double t = static_cast<double>(i) / 32.0;
            const EpisodeSpec* e = episode_at(eps, t);
            double mult = e ? e->acc_var_multiplier : 1.0;
            for (const BenignBurst& b : bursts) {
                if (t >= b.start_s && t < b.start_s + b.duration_s) {
                    mult = std::max(mult, 3.0);
                    break;
                }
            }
            double sigma = kBaseSigma * std::sqrt(mult);
            ax.values[i] = quantize_counts(rng.normal(0.0, sigma));
            ay.values[i] = quantize_counts(rng.normal(0.0, sigma));
            az.values[i] = quantize_counts(1.0 + rng.normal(0.0, sigma));
        }
    }

    // ---- EDA: tonic drift plus sparse phasic bursts ---------------------
    {
        Rng rng(derive_seed(seed, 2));
        auto& eda = rec.channel(ingest::Channel::EDA);
        eda = make_channel(ingest::Channel::EDA, start_time, 4.0, n4);

        double phi = rng.uniform(0.0, kTwoPi);
        double walk = 0.0;
        std::vector<double> burst(n4, 0.0);
        for (std::size_t i = 0; i < n4; ++i) {
            double t = static_cast<double>(i) / 4.0;
            const EpisodeSpec* e = episode_at(eps, t);
            double rate_per_min = e ? e->eda_burst_rate : 0.5;
            if (rng.uniform() < rate_per_min / 60.0 / 4.0) {
                double amp = rng.uniform(0.15, 0.6);
                for (std::size_t j = i; j < std::min(n4, i + 4 * 12); ++j) {
                    double tau = static_cast<double>(j - i) / 4.0;
                    burst[j] += amp * (tau / 0.75) * std::exp(1.0 - tau / 0.75);
                }
            }
            walk = std::clamp(walk + rng.normal(0.0, 0.002), -0.5, 0.5);
            double tonic = 2.2 + 0.8 * std::sin(kTwoPi * t / 3600.0 + phi) + walk;
            eda.values[i] = std::clamp(tonic + burst[i] + rng.normal(0.0, 0.005), 0.05, 99.0);
        }
    }

    // ---- TEMP: slow drift with a small episode rise ----------------------
    {
        Rng rng(derive_seed(seed, 3));
        auto& temp = rec.channel(ingest::Channel::TEMP);
        temp = make_channel(ingest::Channel::TEMP, start_time, 4.0, n4);
        double phi = rng.uniform(0.0, kTwoPi);
        for (std::size_t i = 0; i < n4; ++i) {
            double t = static_cast<double>(i) / 4.0;
            const EpisodeSpec* e = episode_at(eps, t);
            temp.values[i] = 33.0 + 0.25 * std::sin(kTwoPi * t / 5400.0 + phi) +
                             (e ? e->temp_delta : 0.0) + rng.normal(0.0, 0.01);
        }
    }

    ingest::LabelSet labels;
    labels.participant_id = participant_id;
    labels.session_id = session_id;
    labels.fully_labeled = false;
    for (const EpisodeSpec& e : eps) {
        labels.spans.push_back({start_time + e.start_s, start_time + e.start_s + e.duration_s,
                                ingest::SpanClass::AGITATION});
    }
    return {std::move(rec), std::move(labels)};
}

CohortSpec CohortSpec::scaled(double scale, std::uint64_t seed) {
    if (scale <= 0.0) throw InfeasibleTargets("scale must be positive");
    CohortSpec s;
    s.normal_minutes = 18804.0 * scale;
    s.aa_minutes = 1475.0 * scale;
    s.unlabeled_minutes = 37463.0 * scale;
    s.seed = seed;
    return s;
}

namespace {

// Integer minute parts, each in [2, 217], summing exactly to quota.
std::vector<int> partition_minutes(int quota, Rng& rng) {
    if (quota < 2) return {};
    int k = std::clamp(quota / 10, 1, quota / 2);
    std::vector<int> parts(static_cast<std::size_t>(k), 2);
    int rem = quota - 2 * k;
    while (rem > 0) {
        auto i = static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(k)));
        if (parts[i] < 217) {
            parts[i] += 1;
            --rem;
        }
    }
    return parts;
}

// Start minutes with one-minute edge margins and two-minute separations.
std::vector<double> place_episodes(const std::vector<int>& parts, double session_min, Rng& rng) {
    const std::size_t k = parts.size();
    if (k == 0) return {};
    double need = 2.0 + 2.0 * static_cast<double>(k - 1);
    for (int p : parts) need += p;
    if (need > session_min) throw InfeasibleTargets("episodes do not fit the session");

    for (int attempt = 0; attempt < 200; ++attempt) {
        std::vector<std::pair<double, std::size_t>> starts(k);
        for (std::size_t i = 0; i < k; ++i) {
            starts[i] = {rng.uniform(1.0, session_min - parts[i] - 1.0), i};
        }
        std::sort(starts.begin(), starts.end());
        bool ok = true;
        for (std::size_t i = 0; i + 1 < k; ++i) {
            if (starts[i].first + parts[starts[i].second] + 2.0 > starts[i + 1].first) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        std::vector<double> out(k);
        for (auto& [s, idx] : starts) out[idx] = s;
        return out;
    }

    // dense sessions: spread the parts evenly instead
    double total_parts = 0;
    for (int p : parts) total_parts += p;
    double gap = (session_min - 2.0 - total_parts) / static_cast<double>(k);
    std::vector<double> out(k);
    double cursor = 1.0;
    for (std::size_t i = 0; i < k; ++i) {
        out[i] = cursor;
        cursor += parts[i] + gap;
    }
    return out;
}

std::vector<EpisodeSpec> make_episodes(const std::vector<int>& parts,
                                       const std::vector<double>& starts, Rng& rng) {
    std::vector<EpisodeSpec> eps;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        EpisodeSpec e;
        e.start_s = starts[i] * 60.0;
        e.duration_s = static_cast<double>(parts[i]) * 60.0;
        e.hr_delta = rng.uniform(18.0, 32.0);
        e.acc_var_multiplier = rng.uniform(3.0, 8.0);
        e.eda_burst_rate = rng.uniform(1.5, 2.5);
        e.temp_delta = rng.uniform(0.2, 0.4);
        eps.push_back(e);
    }
    std::sort(eps.begin(), eps.end(),
              [](const EpisodeSpec& a, const EpisodeSpec& b) { return a.start_s < b.start_s; });
    return eps;
}

}  // namespace

std::vector<SessionBundle> generate_cohort(const CohortSpec& spec) {
    if (spec.n_labeled > spec.n_participants || spec.n_labeled < 1) {
        throw InfeasibleTargets("need 1 <= n_labeled <= n_participants");
    }
    if (spec.normal_minutes <= 0 || spec.aa_minutes <= 0 || spec.unlabeled_minutes <= 0) {
        throw InfeasibleTargets("minute targets must be positive");
    }
    const int n_unlabeled = spec.n_participants - spec.n_labeled;
    if (n_unlabeled < 1) throw InfeasibleTargets("need at least one unlabeled participant");

    Rng rng(derive_seed(spec.seed, 100));

    // integer AA quotas per labeled session
    auto aa_total = static_cast<int>(std::llround(spec.aa_minutes));
    std::vector<int> aa_quota(static_cast<std::size_t>(spec.n_labeled),
                              aa_total / spec.n_labeled);
    for (int i = 0; i < aa_total % spec.n_labeled; ++i) aa_quota[static_cast<std::size_t>(i)] += 1;
    for (std::size_t i = 0; i + 1 < aa_quota.size(); ++i) {
        if (aa_quota[i] == 1) {  // singles cannot form a 2-minute episode
            aa_quota[i + 1] += 1;
            aa_quota[i] = 0;
        }
    }

    // session durations with jitter, exact totals
    double labeled_total = spec.normal_minutes + spec.aa_minutes;
    auto split_minutes = [&](double total, int n) {
        std::vector<int> mins(static_cast<std::size_t>(n),
                              static_cast<int>(std::llround(total / n)));
        for (std::size_t i = 0; i + 1 < mins.size(); ++i) {
            mins[i] += static_cast<int>(rng.below(17)) - 8;
        }
        // last session absorbs the jitter so the sum lands on round(total)
        int sum_first = 0;
        for (std::size_t i = 0; i + 1 < mins.size(); ++i) sum_first += mins[i];
        mins.back() = static_cast<int>(std::llround(total)) - sum_first;
        return mins;
    };
    std::vector<int> labeled_minutes = split_minutes(labeled_total, spec.n_labeled);
    std::vector<int> unlabeled_minutes = split_minutes(spec.unlabeled_minutes, n_unlabeled);

    double aa_fraction = spec.aa_minutes / labeled_total;

    std::vector<SessionBundle> cohort;
    for (int i = 0; i < spec.n_participants; ++i) {
        bool labeled = i < spec.n_labeled;
        int minutes = labeled ? labeled_minutes[static_cast<std::size_t>(i)]
                              : unlabeled_minutes[static_cast<std::size_t>(i - spec.n_labeled)];
        if (minutes < 10) throw InfeasibleTargets("session shorter than 10 minutes");

        int quota = labeled ? aa_quota[static_cast<std::size_t>(i)]
                            : static_cast<int>(std::llround(minutes * aa_fraction));
        auto parts = partition_minutes(quota, rng);
        auto starts = place_episodes(parts, static_cast<double>(minutes), rng);
        auto episodes = make_episodes(parts, starts, rng);

        char pid[8], sid[8];
        std::snprintf(pid, sizeof(pid), "P%02d", i + 1);
        std::snprintf(sid, sizeof(sid), "S01");
        double start_time = 1600000000.0 + static_cast<double>(i) * 1000000.0;

        auto [rec, labels] = generate_session(derive_seed(spec.seed, static_cast<std::uint64_t>(i)),
                                              static_cast<double>(minutes) * 60.0, episodes, pid,
                                              sid, start_time);
        SessionBundle b;
        b.recording = std::move(rec);
        b.true_episodes = episodes;
        if (labeled) {
            b.labels = std::move(labels);
            b.labels.fully_labeled = true;
        } else {
            b.labels.participant_id = pid;
            b.labels.session_id = sid;
            b.labels.fully_labeled = false;  // spans stay empty
        }
        cohort.push_back(std::move(b));
    }
    return cohort;
}

void write_cohort(const std::vector<SessionBundle>& cohort, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const SessionBundle& b : cohort) {
        auto sdir = dir / (b.recording.participant_id + "_" + b.recording.session_id);
        ingest::write_e4_archive(b.recording, sdir);
        ingest::write_labels(b.labels, sdir / "labels.csv");
    }
}

}  // namespace agidet::synth
