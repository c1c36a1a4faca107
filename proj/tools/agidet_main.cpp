#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>

#include "agidet/config.hpp"
#include "agidet/eval.hpp"
#include "agidet/ingest.hpp"
#include "agidet/pipeline.hpp"
#include "agidet/preprocess.hpp"
#include "agidet/seeds.hpp"
#include "agidet/selftrain.hpp"
#include "agidet/synth.hpp"
#include "agidet/vae.hpp"

namespace fs = std::filesystem;
using namespace agidet;

namespace {

int classify_exit(const Error& e) {
    // 1 = configuration, 2 = data, 3 = training/other
    if (dynamic_cast<const ConfigError*>(&e)) return 1;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const MissingChannel*>(&e) ||
        dynamic_cast<const MalformedHeader*>(&e) || dynamic_cast<const NonMonotonicData*>(&e) ||
        dynamic_cast<const InvalidSpan*>(&e) || dynamic_cast<const OverlapConflict*>(&e) ||
        dynamic_cast<const SessionMismatch*>(&e) || dynamic_cast<const InsufficientOverlap*>(&e) ||
        dynamic_cast<const NoBeatsDetected*>(&e) || dynamic_cast<const NoCompleteWindow*>(&e) ||
        dynamic_cast<const AllColumnsInvalid*>(&e) || dynamic_cast<const CorruptModel*>(&e) ||
        dynamic_cast<const VersionMismatch*>(&e) || dynamic_cast<const ColumnMismatch*>(&e)) {
        return 2;
    }
    return 3;
}

std::vector<int> labeled_targets(const features::FeatureMatrix& m, std::vector<double>& buf) {
    std::vector<int> y;
    buf.clear();
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        if (m.row_labels[r] == features::Label::UNLABELED) continue;
        auto row = m.row(r);
        buf.insert(buf.end(), row.begin(), row.end());
        y.push_back(m.row_labels[r] == features::Label::AGITATION ? 1 : 0);
    }
    return y;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wristband agitation detection: preprocessing, autoencoder "
                 "representation, self-training, and evaluation"};
    app.require_subcommand(1);

    std::function<int()> action;

    // ---- synth ----------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("synth", "Generate a synthetic wristband cohort");
        auto out = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(0);
        auto scale = std::make_shared<double>(0.1);
        cmd->add_option("--out", *out, "Output directory")->required();
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->add_option("--scale", *scale, "Fraction of the reference cohort minutes");
        cmd->callback([=, &action] {
            action = [=] {
                auto spec = synth::CohortSpec::scaled(*scale, seeds::for_stream(*seed, seeds::kSynth));
                auto cohort = synth::generate_cohort(spec);
                synth::write_cohort(cohort, *out);
                std::cout << "wrote " << cohort.size() << " sessions to " << *out << "\n";
                return 0;
            };
        });
    }

    // ---- ingest ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("ingest", "Parse and validate session archives");
        auto data = std::make_shared<std::string>();
        cmd->add_option("--data", *data, "Directory of session directories")->required();
        cmd->callback([=, &action] {
            action = [=] {
                if (!fs::is_directory(*data)) throw DataError("no such directory: " + *data);
                std::vector<fs::path> dirs;
                for (const auto& e : fs::directory_iterator(*data)) {
                    if (e.is_directory()) dirs.push_back(e.path());
                }
                std::sort(dirs.begin(), dirs.end());
                if (dirs.empty()) throw DataError("no session directories under " + *data);
                for (const auto& dir : dirs) {
                    auto rec = ingest::parse_e4_archive(dir);
                    ingest::LabelSet labels;
                    if (fs::exists(dir / "labels.csv")) {
                        labels = ingest::parse_labels(dir / "labels.csv");
                    } else {
                        labels.participant_id = rec.participant_id;
                        labels.session_id = rec.session_id;
                    }
                    auto report = ingest::validate_session(rec, labels);
                    std::cout << rec.participant_id << "/" << rec.session_id << ": "
                              << report.usable_minutes << " usable minutes, "
                              << labels.spans.size() << " spans, " << report.findings.size()
                              << " findings\n";
                    for (const auto& f : report.findings) {
                        std::cout << "  " << f.kind << " " << f.detail << " (" << f.seconds
                                  << " s)\n";
                    }
                }
                return 0;
            };
        });
    }

    // ---- extract --------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("extract", "Window sessions into a feature matrix");
        auto data = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--data", *data, "Directory of session directories")->required();
        cmd->add_option("--out", *out, "Feature CSV path")->required();
        cmd->callback([=, &action] {
            action = [=] {
                auto all = pipeline::load_features_from_sessions(*data);
                auto dropped = features::drop_invalid_columns(all);
                features::write_feature_csv(dropped.matrix, *out);
                std::cout << "wrote " << dropped.matrix.n_rows() << " x "
                          << dropped.matrix.n_cols() << " matrix (" << dropped.removed.size()
                          << " columns removed) to " << *out << "\n";
                return 0;
            };
        });
    }

    // ---- train-vae ------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("train-vae", "Train the autoencoder representation");
        auto feats = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto history = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(0);
        auto epochs = std::make_shared<int>(50);
        auto batch = std::make_shared<int>(128);
        auto latent = std::make_shared<int>(100);
        cmd->add_option("--features", *feats, "Feature CSV")->required();
        cmd->add_option("--out", *out, "Model file path")->required();
        cmd->add_option("--history", *history, "Training history CSV path");
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->add_option("--epochs", *epochs, "Training epochs");
        cmd->add_option("--batch-size", *batch, "Mini-batch size");
        cmd->add_option("--latent-dim", *latent, "Latent dimensionality");
        cmd->callback([=, &action] {
            action = [=] {
                auto m = features::read_feature_csv(*feats);
                vae::VaeConfig cfg;
                cfg.epochs = *epochs;
                cfg.batch_size = *batch;
                cfg.latent_dim = *latent;
                auto model = pipeline::train_vae_stage(m, cfg, *seed);
                vae::save_vae(model, *out);
                if (!history->empty()) vae::write_history_csv(model.history, *history);
                std::cout << "final train loss " << model.history.back().train_vae
                          << ", val loss " << model.history.back().val_vae << "\n";
                return 0;
            };
        });
    }

    // ---- encode ---------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("encode", "Project features through a trained encoder");
        auto feats = std::make_shared<std::string>();
        auto model_path = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--features", *feats, "Feature CSV")->required();
        cmd->add_option("--model", *model_path, "Trained model file")->required();
        cmd->add_option("--out", *out, "Encoded CSV path")->required();
        cmd->callback([=, &action] {
            action = [=] {
                auto m = features::read_feature_csv(*feats);
                auto model = vae::load_vae(*model_path);
                auto enc = vae::transform(m, model.params, model.norm);
                features::write_feature_csv(enc, *out);
                std::cout << "wrote " << enc.n_rows() << " x " << enc.n_cols() << " matrix to "
                          << *out << "\n";
                return 0;
            };
        });
    }

    // ---- fit ------------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("fit", "Supervised fit on the labeled rows");
        auto feats = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto kind = std::make_shared<std::string>("rf");
        auto seed = std::make_shared<std::uint64_t>(0);
        cmd->add_option("--features", *feats, "Feature CSV")->required();
        cmd->add_option("--out", *out, "Model file path")->required();
        cmd->add_option("--classifier", *kind, "rf | et | boosted");
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->callback([=, &action] {
            action = [=] {
                auto m = features::read_feature_csv(*feats);
                std::vector<double> buf;
                auto y = labeled_targets(m, buf);
                if (y.empty()) throw DataError("no labeled rows in " + *feats);
                ensemble::DataView x{buf.data(), y.size(), m.n_cols()};
                auto model = ensemble::fit_classifier(ensemble::classifier_kind_from_name(*kind),
                                                      x, y, ensemble::Hyperparams{},
                                                      seeds::for_stream(*seed, seeds::kModel));
                ensemble::save_model(model, *out);
                std::cout << "fit " << *kind << " on " << y.size() << " rows\n";
                return 0;
            };
        });
    }

    // ---- self-train -----------------------------------------------------
    {
        auto* cmd = app.add_subcommand("self-train",
                                       "Pseudo-label unlabeled rows and fit the final model");
        auto feats = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto report = std::make_shared<std::string>();
        auto augmented = std::make_shared<std::string>();
        auto kind = std::make_shared<std::string>("rf");
        auto seed = std::make_shared<std::uint64_t>(0);
        auto threshold = std::make_shared<double>(0.7);
        auto max_iter = std::make_shared<int>(100);
        cmd->add_option("--features", *feats, "Feature CSV")->required();
        cmd->add_option("--out", *out, "Model file path")->required();
        cmd->add_option("--report", *report, "Per-iteration report CSV path");
        cmd->add_option("--augmented", *augmented, "Augmented feature CSV path");
        cmd->add_option("--classifier", *kind, "rf | et | boosted");
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->add_option("--threshold", *threshold, "Pseudo-label admission threshold");
        cmd->add_option("--max-iter", *max_iter, "Iteration cap");
        cmd->callback([=, &action] {
            action = [=] {
                auto m = features::read_feature_csv(*feats);
                selftrain::SelfTrainConfig cfg;
                cfg.base = ensemble::classifier_kind_from_name(*kind);
                cfg.seed = seeds::for_stream(*seed, seeds::kModel);
                cfg.threshold = *threshold;
                cfg.max_iter = *max_iter;
                auto result = selftrain::self_train(m, cfg);
                ensemble::save_model(result.model, *out);
                if (!report->empty()) selftrain::write_report_csv(result.report, *report);
                if (!augmented->empty()) features::write_feature_csv(result.augmented, *augmented);
                std::cout << "self-training: " << result.report.iterations.size()
                          << " iterations, " << selftrain::termination_name(result.report.termination)
                          << ", final normal/AA " << result.report.final_normal << "/"
                          << result.report.final_agitation << "\n";
                return 0;
            };
        });
    }

    // ---- evaluate -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("evaluate", "Run one train/test experiment");
        auto feats = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto kind = std::make_shared<std::string>("rf");
        auto mode = std::make_shared<std::string>("supervised");
        auto rep = std::make_shared<std::string>("raw");
        auto seed = std::make_shared<std::uint64_t>(0);
        auto test_fraction = std::make_shared<double>(0.30);
        cmd->add_option("--features", *feats, "Feature CSV")->required();
        cmd->add_option("--out", *out, "Report directory")->required();
        cmd->add_option("--classifier", *kind, "rf | et | boosted");
        cmd->add_option("--mode", *mode, "supervised | selftrain");
        cmd->add_option("--representation", *rep, "raw | vae (metadata tag)");
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->add_option("--test-fraction", *test_fraction, "Held-out fraction");
        cmd->callback([=, &action] {
            action = [=] {
                auto m = features::read_feature_csv(*feats);
                eval::ExperimentConfig cfg;
                cfg.kind = ensemble::classifier_kind_from_name(*kind);
                if (*mode == "supervised") {
                    cfg.mode = eval::Mode::SUPERVISED;
                } else if (*mode == "selftrain") {
                    cfg.mode = eval::Mode::SELF_TRAIN;
                } else {
                    throw ConfigError("--mode must be supervised or selftrain");
                }
                if (*rep == "raw") {
                    cfg.representation = eval::Representation::RAW;
                } else if (*rep == "vae") {
                    cfg.representation = eval::Representation::VAE;
                } else {
                    throw ConfigError("--representation must be raw or vae");
                }
                cfg.master_seed = *seed;
                cfg.test_fraction = *test_fraction;
                auto report = eval::run_experiment(m, cfg);
                fs::create_directories(*out);
                eval::write_report_json(report, fs::path(*out) / "report.json");
                eval::write_curve_csv(report.roc_points, fs::path(*out) / "roc.csv");
                eval::write_curve_csv(report.pr_points, fs::path(*out) / "pr.csv");
                if (cfg.mode == eval::Mode::SELF_TRAIN) {
                    selftrain::write_report_csv(report.selftrain_report,
                                                fs::path(*out) / "selftrain.csv");
                }
                std::printf("balanced accuracy %.4f, auc roc %.4f, auc pr %.4f\n",
                            report.balanced_accuracy, report.auc_roc, report.auc_pr);
                return 0;
            };
        });
    }

    // ---- pipeline -------------------------------------------------------
    {
        auto* cmd = app.add_subcommand("pipeline", "Run the full 12-experiment matrix");
        auto data = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>("out");
        auto config_path = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(0);
        auto scale = std::make_shared<double>(0.1);
        auto use_synth = std::make_shared<bool>(false);
        cmd->add_flag("--synth", *use_synth, "Generate the synthetic cohort");
        cmd->add_option("--data", *data, "Directory of session directories");
        cmd->add_option("--out", *out, "Output directory");
        cmd->add_option("--config", *config_path, "Config file (INI sections)");
        cmd->add_option("--seed", *seed, "Master seed");
        cmd->add_option("--scale", *scale, "Synthetic cohort scale");
        cmd->callback([=, &action] {
            action = [=] {
                pipeline::PipelineConfig cfg;
                if (!config_path->empty()) {
                    cfg = config::apply_config(config::ConfigDoc::parse_file(*config_path), cfg);
                }
                // flags override the config file
                if (*use_synth && !data->empty()) {
                    throw ConfigError("--synth and --data are mutually exclusive");
                }
                if (*use_synth) cfg.use_synth = true;
                if (!data->empty()) {
                    cfg.data_dir = *data;
                    cfg.use_synth = false;
                }
                cfg.out_dir = *out;
                cfg.master_seed = *seed;
                cfg.synth_scale = *scale;
                if (!cfg.use_synth && cfg.data_dir.empty()) {
                    throw ConfigError("pipeline needs --synth or --data <dir>");
                }
                auto result = pipeline::run_pipeline(cfg);
                std::cout << "wrote " << result.experiments.size() << " experiment reports and "
                          << result.summary_path.string() << "\n";
                return 0;
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        return action ? action() : 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify_exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
