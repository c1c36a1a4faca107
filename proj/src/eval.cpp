#include "agidet/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "agidet/model_file.hpp"
#include "agidet/rng.hpp"
#include "agidet/seeds.hpp"

namespace agidet::eval {

double balanced_accuracy(const ConfusionMatrix& cm) {
    if (cm.tp + cm.fn == 0 || cm.tn + cm.fp == 0) {
        throw UndefinedClassRate("both classes must appear among the scored rows");
    }
    double tpr = static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    double tnr = static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
    return (tpr + tnr) / 2.0;
}

namespace {

double safe_div(std::int64_t num, std::int64_t den, bool& flagged) {
    if (den == 0) {
        flagged = true;
        return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
}

double f1_of(double p, double r, bool& flagged) {
    if (p + r == 0.0) {
        flagged = true;
        return 0.0;
    }
    return 2.0 * p * r / (p + r);
}

}  // namespace

PrfScores prf_scores(const ConfusionMatrix& cm) {
    PrfScores s;
    s.precision_pos = safe_div(cm.tp, cm.tp + cm.fp, s.zero_division);
    s.recall_pos = safe_div(cm.tp, cm.tp + cm.fn, s.zero_division);
    s.f1_pos = f1_of(s.precision_pos, s.recall_pos, s.zero_division);
    s.precision_neg = safe_div(cm.tn, cm.tn + cm.fn, s.zero_division);
    s.recall_neg = safe_div(cm.tn, cm.tn + cm.fp, s.zero_division);
    s.f1_neg = f1_of(s.precision_neg, s.recall_neg, s.zero_division);

    auto support_pos = static_cast<double>(cm.tp + cm.fn);
    auto support_neg = static_cast<double>(cm.tn + cm.fp);
    double total = support_pos + support_neg;
    if (total > 0) {
        s.precision_weighted = (support_pos * s.precision_pos + support_neg * s.precision_neg) / total;
        s.recall_weighted = (support_pos * s.recall_pos + support_neg * s.recall_neg) / total;
        s.f1_weighted = (support_pos * s.f1_pos + support_neg * s.f1_neg) / total;
    }
    return s;
}

namespace {

struct SweepCounts {
    double threshold;
    std::int64_t tp, fp;  // predictions positive at score >= threshold
};

// Cumulative counts at each distinct score, descending.
std::vector<SweepCounts> threshold_sweep(std::span<const double> scores,
                                         std::span<const int> labels, std::int64_t& n_pos,
                                         std::int64_t& n_neg) {
    if (scores.size() != labels.size()) throw ShapeMismatch("scores/labels length mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    n_pos = 0;
    n_neg = 0;
    for (int l : labels) (l ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw SingleClassScores("ROC/PR need both classes present");
    }

    std::vector<SweepCounts> sweep;
    std::int64_t tp = 0, fp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        (labels[order[k]] ? tp : fp) += 1;
        bool last_of_tie = k + 1 == order.size() || scores[order[k + 1]] != scores[order[k]];
        if (last_of_tie) sweep.push_back({scores[order[k]], tp, fp});
    }
    return sweep;
}

}  // namespace

CurveResult roc_auc(std::span<const double> scores, std::span<const int> labels) {
    std::int64_t n_pos = 0, n_neg = 0;
    auto sweep = threshold_sweep(scores, labels, n_pos, n_neg);

    CurveResult res;
    res.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double prev_x = 0.0, prev_y = 0.0;
    for (const SweepCounts& s : sweep) {
        double x = static_cast<double>(s.fp) / static_cast<double>(n_neg);
        double y = static_cast<double>(s.tp) / static_cast<double>(n_pos);
        res.auc += (x - prev_x) * (y + prev_y) / 2.0;
        res.points.push_back({s.threshold, x, y});
        prev_x = x;
        prev_y = y;
    }
    return res;
}

CurveResult pr_curve(std::span<const double> scores, std::span<const int> labels) {
    std::int64_t n_pos = 0, n_neg = 0;
    auto sweep = threshold_sweep(scores, labels, n_pos, n_neg);

    CurveResult res;
    res.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
    double prev_recall = 0.0;
    for (const SweepCounts& s : sweep) {
        double recall = static_cast<double>(s.tp) / static_cast<double>(n_pos);
        double precision = static_cast<double>(s.tp) / static_cast<double>(s.tp + s.fp);
        res.auc += (recall - prev_recall) * precision;  // step interpolation
        res.points.push_back({s.threshold, recall, precision});
        prev_recall = recall;
    }
    return res;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_split(
    const std::vector<int>& labels, const SplitSpec& spec) {
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw Error("test_fraction must lie in (0, 1)");
    }
    Rng rng(spec.seed);
    std::vector<std::size_t> train, test;
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) idx.push_back(i);
        }
        if (idx.size() < 2) {
            throw ClassTooSmall("class " + std::to_string(cls) + " has " +
                                std::to_string(idx.size()) + " rows, need >= 2");
        }
        rng.shuffle(idx);
        auto n_test = static_cast<std::size_t>(
            std::llround(static_cast<double>(idx.size()) * spec.test_fraction));
        n_test = std::clamp<std::size_t>(n_test, 1, idx.size() - 1);
        test.insert(test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

const char* mode_name(Mode m) {
    return m == Mode::SUPERVISED ? "supervised" : "selftrain";
}

const char* representation_name(Representation r) { return r == Representation::RAW ? "raw" : "vae"; }

EvalReport run_experiment(const features::FeatureMatrix& m, const ExperimentConfig& cfg) {
    using features::Label;

    EvalReport rep;
    rep.kind = cfg.kind;
    rep.mode = cfg.mode;
    rep.representation = cfg.representation;
    rep.master_seed = cfg.master_seed;

    // labeled rows enter the split; unlabeled rows are a train-side pool
    std::vector<std::size_t> labeled_rows;
    std::vector<std::size_t> pool_rows;
    std::vector<int> labeled_y;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        if (m.row_labels[r] == Label::UNLABELED) {
            pool_rows.push_back(r);
        } else {
            labeled_rows.push_back(r);
            labeled_y.push_back(m.row_labels[r] == Label::AGITATION ? 1 : 0);
        }
    }

    SplitSpec split;
    split.test_fraction = cfg.test_fraction;
    split.seed = seeds::for_stream(cfg.master_seed, seeds::kSplit);
    auto [train_local, test_local] = stratified_split(labeled_y, split);

    const std::size_t nc = m.n_cols();
    auto gather = [&](const std::vector<std::size_t>& rows, std::vector<double>& buf) {
        buf.clear();
        buf.reserve(rows.size() * nc);
        for (std::size_t r : rows) {
            auto row = m.row(r);
            buf.insert(buf.end(), row.begin(), row.end());
        }
    };

    std::vector<std::size_t> train_rows, test_rows;
    for (std::size_t k : train_local) train_rows.push_back(labeled_rows[k]);
    for (std::size_t k : test_local) test_rows.push_back(labeled_rows[k]);

    for (std::size_t k : train_local) {
        (labeled_y[k] ? rep.counts.train_agitation_initial : rep.counts.train_normal_initial) += 1;
    }
    for (std::size_t k : test_local) {
        (labeled_y[k] ? rep.counts.test_agitation : rep.counts.test_normal) += 1;
    }
    rep.counts.unlabeled_initial = static_cast<std::int64_t>(pool_rows.size());

    const std::uint64_t model_seed = seeds::for_stream(cfg.master_seed, seeds::kModel);

    std::vector<double> test_buf;
    gather(test_rows, test_buf);
    ensemble::DataView test_view{test_buf.data(), test_rows.size(), nc};

    std::vector<std::array<double, 2>> proba;
    auto t0 = std::chrono::steady_clock::now();

    if (cfg.mode == Mode::SUPERVISED) {
        std::vector<double> train_buf;
        gather(train_rows, train_buf);
        std::vector<int> y;
        for (std::size_t k : train_local) y.push_back(labeled_y[k]);
        ensemble::DataView train_view{train_buf.data(), train_rows.size(), nc};
        auto model = ensemble::fit_classifier(cfg.kind, train_view, y, cfg.hp, model_seed);
        proba = model.predict_proba(test_view);
        rep.counts.train_normal_final = rep.counts.train_normal_initial;
        rep.counts.train_agitation_final = rep.counts.train_agitation_initial;
    } else {
        // train rows keep their labels; pool rows go in unlabeled
        std::vector<std::size_t> st_rows = train_rows;
        st_rows.insert(st_rows.end(), pool_rows.begin(), pool_rows.end());
        std::vector<double> st_buf;
        gather(st_rows, st_buf);
        std::vector<Label> st_labels;
        for (std::size_t k : train_local) {
            st_labels.push_back(labeled_y[k] ? Label::AGITATION : Label::NORMAL);
        }
        st_labels.insert(st_labels.end(), pool_rows.size(), Label::UNLABELED);

        selftrain::SelfTrainConfig st;
        st.threshold = cfg.selftrain_threshold;
        st.max_iter = cfg.selftrain_max_iter;
        st.base = cfg.kind;
        st.seed = model_seed;
        st.hp = cfg.hp;
        ensemble::DataView st_view{st_buf.data(), st_rows.size(), nc};
        auto result = selftrain::self_train(st_view, st_labels, st);
        proba = result.model.predict_proba(test_view);

        rep.selftrain_report = result.report;
        rep.counts.train_normal_final = result.report.final_normal;
        rep.counts.train_agitation_final = result.report.final_agitation;
        rep.counts.unlabeled_remaining = result.report.remaining_unlabeled;
    }

    auto t1 = std::chrono::steady_clock::now();
    rep.processing_time_seconds = std::chrono::duration<double>(t1 - t0).count();

    std::vector<double> scores(proba.size());
    std::vector<int> test_y;
    for (std::size_t k : test_local) test_y.push_back(labeled_y[k]);
    for (std::size_t i = 0; i < proba.size(); ++i) {
        scores[i] = proba[i][1];
        bool predicted_pos = proba[i][1] > 0.5;
        if (test_y[i] == 1) {
            (predicted_pos ? rep.cm.tp : rep.cm.fn) += 1;
        } else {
            (predicted_pos ? rep.cm.fp : rep.cm.tn) += 1;
        }
    }

    rep.balanced_accuracy = balanced_accuracy(rep.cm);
    rep.prf = prf_scores(rep.cm);
    CurveResult roc = roc_auc(scores, test_y);
    CurveResult pr = pr_curve(scores, test_y);
    rep.auc_roc = roc.auc;
    rep.auc_pr = pr.auc;
    rep.roc_points = std::move(roc.points);
    rep.pr_points = std::move(pr.points);
    return rep;
}

void write_report_json(const EvalReport& r, const std::filesystem::path& file) {
    model_file::Json j;
    j["classifier"] = ensemble::classifier_kind_name(r.kind);
    j["mode"] = mode_name(r.mode);
    j["representation"] = representation_name(r.representation);
    j["master_seed"] = r.master_seed;
    j["confusion"] = {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"tn", r.cm.tn}, {"fn", r.cm.fn}};
    j["balanced_accuracy"] = r.balanced_accuracy;
    j["precision"] = {{"agitation", r.prf.precision_pos},
                      {"normal", r.prf.precision_neg},
                      {"weighted", r.prf.precision_weighted}};
    j["recall"] = {{"agitation", r.prf.recall_pos},
                   {"normal", r.prf.recall_neg},
                   {"weighted", r.prf.recall_weighted}};
    j["f1"] = {{"agitation", r.prf.f1_pos},
               {"normal", r.prf.f1_neg},
               {"weighted", r.prf.f1_weighted}};
    j["zero_division_flag"] = r.prf.zero_division;
    j["auc_roc"] = r.auc_roc;
    j["auc_pr"] = r.auc_pr;
    j["processing_time_seconds"] = r.processing_time_seconds;
    j["label_counts"] = {{"train_normal_initial", r.counts.train_normal_initial},
                         {"train_agitation_initial", r.counts.train_agitation_initial},
                         {"train_normal_final", r.counts.train_normal_final},
                         {"train_agitation_final", r.counts.train_agitation_final},
                         {"unlabeled_initial", r.counts.unlabeled_initial},
                         {"unlabeled_remaining", r.counts.unlabeled_remaining},
                         {"test_normal", r.counts.test_normal},
                         {"test_agitation", r.counts.test_agitation}};
    if (r.mode == Mode::SELF_TRAIN) {
        j["selftrain"] = {{"iterations", r.selftrain_report.iterations.size()},
                          {"termination", selftrain::termination_name(r.selftrain_report.termination)}};
    }
    std::ofstream out(file);
    out << j.dump(2) << "\n";
}

void write_curve_csv(const std::vector<CurvePoint>& points, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "threshold,x,y\n";
    for (const CurvePoint& p : points) {
        out << fmt_g17(p.threshold) << ',' << fmt_g17(p.x) << ',' << fmt_g17(p.y) << "\n";
    }
}

}  // namespace agidet::eval
