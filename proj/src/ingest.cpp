#include "agidet/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace agidet::ingest {

const char* channel_name(Channel c) {
    switch (c) {
        case Channel::ACC_X: return "ACC_X";
        case Channel::ACC_Y: return "ACC_Y";
        case Channel::ACC_Z: return "ACC_Z";
        case Channel::BVP: return "BVP";
        case Channel::EDA: return "EDA";
        case Channel::TEMP: return "TEMP";
    }
    return "?";
}

const char* span_class_name(SpanClass c) {
    return c == SpanClass::AGITATION ? "AGITATION" : "NORMAL";
}

bool ChannelSeries::has_gaps() const {
    return std::find(gaps.begin(), gaps.end(), std::uint8_t{1}) != gaps.end();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

// Parses one sample field. Non-numeric or non-finite entries become gap
// markers holding the previous valid value.
void push_sample(std::vector<double>& values, std::vector<std::uint8_t>& gaps,
                 const std::string& field) {
    double v = 0.0;
    bool ok = true;
    try {
        v = parse_double_strict(field);
    } catch (const std::invalid_argument&) {
        ok = false;
    }
    if (ok && !std::isfinite(v)) ok = false;
    if (!ok) {
        values.push_back(values.empty() ? 0.0 : values.back());
        gaps.push_back(1);
    } else {
        values.push_back(v);
        gaps.push_back(0);
    }
}

struct RawFile {
    double start = 0.0;
    double rate = 0.0;
    std::vector<std::vector<double>> columns;
    std::vector<std::vector<std::uint8_t>> gap_columns;
};

RawFile read_channel_file(const fs::path& file, std::size_t n_cols) {
    std::ifstream in(file);
    if (!in) throw MissingChannel(file.string());
    RawFile raw;
    raw.columns.resize(n_cols);
    raw.gap_columns.resize(n_cols);

    std::string line;
    if (!std::getline(in, line)) throw MalformedHeader(file.string() + ": empty file");
    auto head = split_csv(line);
    if (head.empty()) throw MalformedHeader(file.string() + ": missing timestamp row");
    try {
        raw.start = parse_double_strict(head[0]);
    } catch (const std::invalid_argument&) {
        throw MalformedHeader(file.string() + ": timestamp row not numeric");
    }

    if (!std::getline(in, line)) throw MalformedHeader(file.string() + ": missing rate row");
    auto rate_row = split_csv(line);
    if (rate_row.empty()) throw MalformedHeader(file.string() + ": missing rate row");
    try {
        raw.rate = parse_double_strict(rate_row[0]);
    } catch (const std::invalid_argument&) {
        throw MalformedHeader(file.string() + ": rate row not numeric");
    }
    if (raw.rate < 0.0) throw NonMonotonicData(file.string() + ": negative sample rate");
    if (raw.rate == 0.0) throw MalformedHeader(file.string() + ": zero sample rate");

    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv(line);
        for (std::size_t c = 0; c < n_cols; ++c) {
            const std::string field = c < fields.size() ? fields[c] : std::string();
            push_sample(raw.columns[c], raw.gap_columns[c], field);
        }
    }
    return raw;
}

ChannelSeries make_series(Channel name, const RawFile& raw, std::size_t col, double scale) {
    ChannelSeries s;
    s.name = name;
    s.start_time = raw.start;
    s.sample_rate = raw.rate;
    s.values = raw.columns[col];
    s.gaps = raw.gap_columns[col];
    if (scale != 1.0) {
        for (double& v : s.values) v *= scale;
    }
    return s;
}

void write_channel_file(const fs::path& file, double start, double rate,
                        const std::vector<const ChannelSeries*>& cols, bool as_counts) {
    std::ofstream out(file);
    std::string ts = fmt_g17(start);
    std::string rs = fmt_g17(rate);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << ts;
    out << "\n";
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << rs;
    out << "\n";
    const std::size_t n = cols[0]->values.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (c) out << ',';
            if (as_counts) {
                out << static_cast<long long>(std::llround(cols[c]->values[i] * 64.0));
            } else {
                out << fmt_g17(cols[c]->values[i]);
            }
        }
        out << "\n";
    }
}

}  // namespace

SessionRecording parse_e4_archive(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw MissingChannel("no such archive directory: " + dir.string());

    SessionRecording rec;
    std::string stem = dir.filename().string();
    if (stem.empty()) stem = dir.parent_path().filename().string();
    auto us = stem.rfind('_');
    if (us != std::string::npos && us + 1 < stem.size()) {
        rec.participant_id = stem.substr(0, us);
        rec.session_id = stem.substr(us + 1);
    } else {
        rec.participant_id = stem;
        rec.session_id = "1";
    }

    for (const char* required : {"ACC.csv", "BVP.csv", "EDA.csv", "TEMP.csv"}) {
        if (!fs::exists(dir / required)) throw MissingChannel((dir / required).string());
    }

    RawFile acc = read_channel_file(dir / "ACC.csv", 3);
    rec.channel(Channel::ACC_X) = make_series(Channel::ACC_X, acc, 0, 1.0 / 64.0);
    rec.channel(Channel::ACC_Y) = make_series(Channel::ACC_Y, acc, 1, 1.0 / 64.0);
    rec.channel(Channel::ACC_Z) = make_series(Channel::ACC_Z, acc, 2, 1.0 / 64.0);

    RawFile bvp = read_channel_file(dir / "BVP.csv", 1);
    rec.channel(Channel::BVP) = make_series(Channel::BVP, bvp, 0, 1.0);

    RawFile eda = read_channel_file(dir / "EDA.csv", 1);
    rec.channel(Channel::EDA) = make_series(Channel::EDA, eda, 0, 1.0);

    RawFile temp = read_channel_file(dir / "TEMP.csv", 1);
    rec.channel(Channel::TEMP) = make_series(Channel::TEMP, temp, 0, 1.0);

    return rec;
}

void write_e4_archive(const SessionRecording& rec, const fs::path& dir) {
    fs::create_directories(dir);
    const ChannelSeries& ax = rec.channel(Channel::ACC_X);
    write_channel_file(dir / "ACC.csv", ax.start_time, ax.sample_rate,
                       {&ax, &rec.channel(Channel::ACC_Y), &rec.channel(Channel::ACC_Z)}, true);
    const ChannelSeries& bvp = rec.channel(Channel::BVP);
    write_channel_file(dir / "BVP.csv", bvp.start_time, bvp.sample_rate, {&bvp}, false);
    const ChannelSeries& eda = rec.channel(Channel::EDA);
    write_channel_file(dir / "EDA.csv", eda.start_time, eda.sample_rate, {&eda}, false);
    const ChannelSeries& temp = rec.channel(Channel::TEMP);
    write_channel_file(dir / "TEMP.csv", temp.start_time, temp.sample_rate, {&temp}, false);
}

namespace {

// Merges overlapping same-class spans in a start-sorted list; flags any
// cross-class overlap.
std::vector<LabelSpan> merge_spans(std::vector<LabelSpan> spans) {
    std::stable_sort(spans.begin(), spans.end(),
                     [](const LabelSpan& a, const LabelSpan& b) { return a.start < b.start; });
    std::vector<LabelSpan> merged;
    for (const LabelSpan& s : spans) {
        if (!merged.empty() && s.start < merged.back().end) {
            if (merged.back().cls != s.cls) {
                throw OverlapConflict("NORMAL span overlapping AGITATION span at t=" +
                                      fmt_g17(s.start));
            }
            merged.back().end = std::max(merged.back().end, s.end);
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

}  // namespace

LabelSet parse_labels(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw MalformedHeader("cannot open label file: " + file.string());

    std::string line;
    if (!std::getline(in, line) || split_csv(line) != std::vector<std::string>{
            "participant_id", "session_id", "fully_labeled"}) {
        throw MalformedHeader(file.string() + ": expected label file header");
    }
    if (!std::getline(in, line)) throw MalformedHeader(file.string() + ": missing session row");
    auto meta = split_csv(line);
    if (meta.size() != 3) throw MalformedHeader(file.string() + ": bad session row");

    LabelSet set;
    set.participant_id = meta[0];
    set.session_id = meta[1];
    if (meta[2] == "true" || meta[2] == "1") {
        set.fully_labeled = true;
    } else if (meta[2] == "false" || meta[2] == "0") {
        set.fully_labeled = false;
    } else {
        throw MalformedHeader(file.string() + ": fully_labeled must be true/false");
    }

    if (!std::getline(in, line) ||
        split_csv(line) != std::vector<std::string>{"start_unix", "end_unix", "class"}) {
        throw MalformedHeader(file.string() + ": expected span header");
    }

    std::vector<LabelSpan> spans;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto f = split_csv(line);
        if (f.size() != 3) throw MalformedHeader(file.string() + ": bad span row: " + line);
        LabelSpan s;
        s.start = parse_double_strict(f[0]);
        s.end = parse_double_strict(f[1]);
        if (f[2] == "NORMAL") {
            s.cls = SpanClass::NORMAL;
        } else if (f[2] == "AGITATION") {
            s.cls = SpanClass::AGITATION;
        } else {
            throw MalformedHeader(file.string() + ": unknown class '" + f[2] + "'");
        }
        if (s.end <= s.start) {
            throw InvalidSpan("end <= start: [" + fmt_g17(s.start) + ", " + fmt_g17(s.end) + ")");
        }
        spans.push_back(s);
    }
    set.spans = merge_spans(std::move(spans));
    return set;
}

void write_labels(const LabelSet& labels, const fs::path& file) {
    std::ofstream out(file);
    out << "participant_id,session_id,fully_labeled\n";
    out << labels.participant_id << ',' << labels.session_id << ','
        << (labels.fully_labeled ? "true" : "false") << "\n";
    out << "start_unix,end_unix,class\n";
    for (const LabelSpan& s : labels.spans) {
        out << fmt_g17(s.start) << ',' << fmt_g17(s.end) << ',' << span_class_name(s.cls) << "\n";
    }
}

ValidationReport validate_session(const SessionRecording& rec, const LabelSet& labels) {
    ValidationReport report;

    double common_start = -std::numeric_limits<double>::infinity();
    double common_end = std::numeric_limits<double>::infinity();
    for (const ChannelSeries& ch : rec.channels) {
        common_start = std::max(common_start, ch.start_time);
        common_end = std::min(common_end, ch.end_time());
    }
    double usable = std::max(0.0, common_end - common_start);
    report.usable_minutes = usable / 60.0;

    for (const ChannelSeries& ch : rec.channels) {
        std::size_t i = 0;
        while (i < ch.gaps.size()) {
            if (ch.gaps[i]) {
                std::size_t j = i;
                while (j < ch.gaps.size() && ch.gaps[j]) ++j;
                ValidationFinding f;
                f.kind = "coverage_gap";
                f.detail = channel_name(ch.name);
                f.seconds = static_cast<double>(j - i) / ch.sample_rate;
                report.findings.push_back(f);
                i = j;
            } else {
                ++i;
            }
        }
    }

    for (const LabelSpan& s : labels.spans) {
        double inside_start = std::max(s.start, common_start);
        double inside_end = std::min(s.end, common_end);
        double inside = std::max(0.0, inside_end - inside_start);
        double outside = (s.end - s.start) - inside;
        if (outside > 0.0) {
            ValidationFinding f;
            f.kind = inside > 0.0 ? "span_misaligned" : "span_outside";
            f.detail = std::string(span_class_name(s.cls)) + " [" + fmt_g17(s.start) + ", " +
                       fmt_g17(s.end) + ")";
            f.seconds = outside;
            report.findings.push_back(f);
        }
    }
    return report;
}

}  // namespace agidet::ingest
