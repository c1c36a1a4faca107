#include "agidet/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "agidet/model_file.hpp"
#include "agidet/preprocess.hpp"
#include "agidet/seeds.hpp"
#include "agidet/selftrain.hpp"
#include "agidet/synth.hpp"

namespace fs = std::filesystem;

namespace agidet::pipeline {

namespace {

std::string experiment_slug(eval::Representation rep, eval::Mode mode,
                            ensemble::ClassifierKind kind) {
    return std::string(eval::representation_name(rep)) + "_" + eval::mode_name(mode) + "_" +
           ensemble::classifier_kind_name(kind);
}

std::string pct(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", v * 100.0);
    return buf;
}

std::string seconds_str(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f s", v);
    return buf;
}

const char* classifier_display_name(ensemble::ClassifierKind k) {
    switch (k) {
        case ensemble::ClassifierKind::RANDOM_FOREST: return "Random Forest";
        case ensemble::ClassifierKind::EXTRA_TREES: return "Extra Trees";
        case ensemble::ClassifierKind::BOOSTED: return "Gradient Boosting";
    }
    return "?";
}

void write_table(const std::string& title, const std::vector<const eval::EvalReport*>& reports,
                 const fs::path& file) {
    std::ofstream out(file);
    out << "# " << title << "\n\n";
    out << "| Evaluation Metric |";
    for (const auto* r : reports) out << ' ' << classifier_display_name(r->kind) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < reports.size(); ++i) out << "---|";
    out << "\n";

    auto row = [&](const std::string& name, auto getter) {
        out << "| " << name << " |";
        for (const auto* r : reports) out << ' ' << getter(*r) << " |";
        out << "\n";
    };
    row("Normal/AA Labels", [](const eval::EvalReport& r) {
        return std::to_string(r.counts.train_normal_final) + "/" +
               std::to_string(r.counts.train_agitation_final);
    });
    row("Balanced Accuracy",
        [](const eval::EvalReport& r) { return pct(r.balanced_accuracy); });
    row("Precision", [](const eval::EvalReport& r) { return pct(r.prf.precision_weighted); });
    row("Recall", [](const eval::EvalReport& r) { return pct(r.prf.recall_weighted); });
    row("F1-Score", [](const eval::EvalReport& r) { return pct(r.prf.f1_weighted); });
    row("AUC ROC", [](const eval::EvalReport& r) { return pct(r.auc_roc); });
    row("Processing Time",
        [](const eval::EvalReport& r) { return seconds_str(r.processing_time_seconds); });
}

}  // namespace

features::FeatureMatrix load_features_from_sessions(const fs::path& data_dir) {
    if (!fs::is_directory(data_dir)) {
        throw DataError("data directory not found: " + data_dir.string());
    }
    std::vector<fs::path> session_dirs;
    for (const auto& entry : fs::directory_iterator(data_dir)) {
        if (entry.is_directory()) session_dirs.push_back(entry.path());
    }
    std::sort(session_dirs.begin(), session_dirs.end());
    if (session_dirs.empty()) {
        throw DataError("no session directories under " + data_dir.string());
    }

    std::vector<features::FeatureMatrix> parts;
    const auto catalog = features::FeatureCatalog::canonical();
    const features::WindowSpec window;
    for (const fs::path& dir : session_dirs) {
        ingest::SessionRecording rec = ingest::parse_e4_archive(dir);
        ingest::LabelSet labels;
        if (fs::exists(dir / "labels.csv")) {
            labels = ingest::parse_labels(dir / "labels.csv");
        } else {
            labels.participant_id = rec.participant_id;
            labels.session_id = rec.session_id;
            labels.fully_labeled = false;
        }
        auto aligned = preprocess::align_session(rec);
        auto m = features::extract_features(aligned, window, catalog);
        parts.push_back(features::label_windows(m, labels));
    }
    return features::concat_rows(parts);
}

vae::TrainedVae train_vae_stage(const features::FeatureMatrix& raw, const vae::VaeConfig& base,
                                std::uint64_t master_seed) {
    vae::VaeConfig cfg = base;
    cfg.seed = seeds::for_stream(master_seed, seeds::kVae);
    return vae::train(raw, cfg);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
    // validate inputs before touching the output directory
    fs::path data_root;
    if (cfg.use_synth) {
        data_root = fs::path(cfg.out_dir) / "cohort";
    } else {
        if (cfg.data_dir.empty() || !fs::is_directory(cfg.data_dir)) {
            throw DataError("input data directory not found: " + cfg.data_dir);
        }
        data_root = cfg.data_dir;
    }

    fs::create_directories(cfg.out_dir);
    if (cfg.use_synth) {
        auto spec = synth::CohortSpec::scaled(cfg.synth_scale,
                                              seeds::for_stream(cfg.master_seed, seeds::kSynth));
        auto cohort = synth::generate_cohort(spec);
        synth::write_cohort(cohort, data_root);
    }

    features::FeatureMatrix all = load_features_from_sessions(data_root);
    features::DropResult dropped = features::drop_invalid_columns(all);
    const features::FeatureMatrix& raw = dropped.matrix;
    features::write_feature_csv(raw, fs::path(cfg.out_dir) / "features_raw.csv");

    vae::TrainedVae model = train_vae_stage(raw, cfg.vae, cfg.master_seed);
    vae::save_vae(model, fs::path(cfg.out_dir) / "vae_model.json");
    vae::write_history_csv(model.history, fs::path(cfg.out_dir) / "vae_history.csv");

    features::FeatureMatrix encoded = vae::transform(raw, model.params, model.norm);
    features::write_feature_csv(encoded, fs::path(cfg.out_dir) / "features_vae.csv");

    PipelineResult result;
    result.removed_columns = dropped.removed;

    const std::vector<std::pair<eval::Mode, eval::Representation>> configs = {
        {eval::Mode::SUPERVISED, eval::Representation::RAW},
        {eval::Mode::SUPERVISED, eval::Representation::VAE},
        {eval::Mode::SELF_TRAIN, eval::Representation::RAW},
        {eval::Mode::SELF_TRAIN, eval::Representation::VAE},
    };
    const std::vector<ensemble::ClassifierKind> kinds = {
        ensemble::ClassifierKind::RANDOM_FOREST,
        ensemble::ClassifierKind::EXTRA_TREES,
        ensemble::ClassifierKind::BOOSTED,
    };
    const std::vector<std::string> table_titles = {
        "Supervised learning on extracted features",
        "Supervised learning on autoencoder features",
        "Self-training on extracted features",
        "Self-training on autoencoder features",
    };

    fs::create_directories(fs::path(cfg.out_dir) / "tables");
    for (std::size_t c = 0; c < configs.size(); ++c) {
        auto [mode, rep] = configs[c];
        const features::FeatureMatrix& m =
            rep == eval::Representation::RAW ? raw : encoded;

        std::vector<const eval::EvalReport*> table_reports;
        for (ensemble::ClassifierKind kind : kinds) {
            eval::ExperimentConfig ec;
            ec.kind = kind;
            ec.mode = mode;
            ec.representation = rep;
            ec.master_seed = cfg.master_seed;
            ec.test_fraction = cfg.test_fraction;
            ec.selftrain_threshold = cfg.selftrain_threshold;
            ec.selftrain_max_iter = cfg.selftrain_max_iter;
            ec.hp = cfg.hp;

            ExperimentOutcome outcome;
            outcome.representation = rep;
            outcome.mode = mode;
            outcome.kind = kind;
            outcome.report = eval::run_experiment(m, ec);

            fs::path edir = fs::path(cfg.out_dir) / "experiments" / experiment_slug(rep, mode, kind);
            fs::create_directories(edir);
            eval::write_report_json(outcome.report, edir / "report.json");
            eval::write_curve_csv(outcome.report.roc_points, edir / "roc.csv");
            eval::write_curve_csv(outcome.report.pr_points, edir / "pr.csv");
            if (mode == eval::Mode::SELF_TRAIN) {
                selftrain::write_report_csv(outcome.report.selftrain_report,
                                            edir / "selftrain.csv");
            }
            outcome.directory = edir.string();
            result.experiments.push_back(std::move(outcome));
        }
        for (std::size_t k = result.experiments.size() - kinds.size();
             k < result.experiments.size(); ++k) {
            table_reports.push_back(&result.experiments[k].report);
        }
        char fname[32];
        std::snprintf(fname, sizeof(fname), "table_%zu.md", c + 1);
        write_table(table_titles[c], table_reports, fs::path(cfg.out_dir) / "tables" / fname);
    }

    // machine-readable summary; excludes wall-clock timings so reruns with
    // the same seed are byte-identical
    model_file::Json summary;
    summary["schema_version"] = 1;
    summary["config"] = {
        {"master_seed", cfg.master_seed},
        {"use_synth", cfg.use_synth},
        {"synth_scale", cfg.synth_scale},
        {"data_dir", cfg.use_synth ? std::string("cohort") : cfg.data_dir},
        {"window", {{"length_s", 60.0}, {"overlap_s", 0.0}}},
        {"vae",
         {{"hidden_dims", cfg.vae.hidden_dims},
          {"latent_dim", cfg.vae.latent_dim},
          {"epochs", cfg.vae.epochs},
          {"batch_size", cfg.vae.batch_size},
          {"learning_rate", cfg.vae.learning_rate},
          {"validation_fraction", cfg.vae.validation_fraction}}},
        {"forest", {{"n_trees", cfg.hp.forest.n_trees},
                    {"min_samples_split", cfg.hp.forest.min_samples_split}}},
        {"boost",
         {{"n_rounds", cfg.hp.boost.n_rounds},
          {"max_depth", cfg.hp.boost.max_depth},
          {"learning_rate", cfg.hp.boost.learning_rate},
          {"l2_lambda", cfg.hp.boost.l2_lambda}}},
        {"selftrain",
         {{"threshold", cfg.selftrain_threshold}, {"max_iter", cfg.selftrain_max_iter}}},
        {"split", {{"test_fraction", cfg.test_fraction}}},
    };
    summary["columns"] = {{"raw_count", raw.n_cols()},
                          {"removed", result.removed_columns}};
    summary["vae_training"] = {
        {"epochs", model.history.size()},
        {"first_train_vae", model.history.front().train_vae},
        {"final_train_vae", model.history.back().train_vae},
        {"final_val_vae", model.history.back().val_vae},
        {"final_train_mse", model.history.back().train_mse},
        {"final_val_mse", model.history.back().val_mse},
    };
    summary["experiments"] = model_file::Json::array();
    for (const ExperimentOutcome& e : result.experiments) {
        const eval::EvalReport& r = e.report;
        model_file::Json je;
        je["representation"] = eval::representation_name(e.representation);
        je["mode"] = eval::mode_name(e.mode);
        je["classifier"] = ensemble::classifier_kind_name(e.kind);
        je["balanced_accuracy"] = r.balanced_accuracy;
        je["precision_weighted"] = r.prf.precision_weighted;
        je["recall_weighted"] = r.prf.recall_weighted;
        je["f1_weighted"] = r.prf.f1_weighted;
        je["precision_agitation"] = r.prf.precision_pos;
        je["recall_agitation"] = r.prf.recall_pos;
        je["f1_agitation"] = r.prf.f1_pos;
        je["auc_roc"] = r.auc_roc;
        je["auc_pr"] = r.auc_pr;
        je["confusion"] = {{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"tn", r.cm.tn}, {"fn", r.cm.fn}};
        je["labels_final"] = {{"normal", r.counts.train_normal_final},
                              {"agitation", r.counts.train_agitation_final}};
        je["unlabeled_remaining"] = r.counts.unlabeled_remaining;
        if (e.mode == eval::Mode::SELF_TRAIN) {
            je["selftrain_iterations"] = r.selftrain_report.iterations.size();
            je["selftrain_termination"] =
                selftrain::termination_name(r.selftrain_report.termination);
        }
        summary["experiments"].push_back(std::move(je));
    }

    result.summary_path = fs::path(cfg.out_dir) / "summary.json";
    {
        std::ofstream out(result.summary_path);
        out << summary.dump(2) << "\n";
    }
    return result;
}

}  // namespace agidet::pipeline
