#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agidet/ensemble.hpp"
#include "agidet/eval.hpp"
#include "agidet/features.hpp"
#include "agidet/vae.hpp"

namespace agidet::pipeline {

struct PipelineConfig {
    bool use_synth = false;
    double synth_scale = 0.1;
    std::string data_dir;  // session directories with E4 csv files + labels.csv
    std::string out_dir = "out";
    std::uint64_t master_seed = 0;

    vae::VaeConfig vae;  // input_dim resolved from the surviving columns
    ensemble::Hyperparams hp;
    double selftrain_threshold = 0.7;
    int selftrain_max_iter = 100;
    double test_fraction = 0.30;
};

struct ExperimentOutcome {
    eval::Representation representation;
    eval::Mode mode;
    ensemble::ClassifierKind kind;
    eval::EvalReport report;
    std::string directory;  // where report.json and curves were written
};

struct PipelineResult {
    std::filesystem::path summary_path;
    std::vector<ExperimentOutcome> experiments;  // 12 entries
    std::vector<std::string> removed_columns;
};

// Loads or generates the cohort, builds the labeled feature matrix, trains
// the VAE, runs the {raw,vae} x {supervised,selftrain} x {rf,et,boosted}
// matrix, and writes reports, four Markdown tables, and a deterministic
// machine-readable summary (timings stay out of the summary).
PipelineResult run_pipeline(const PipelineConfig& cfg);

// Building blocks shared with the CLI subcommands; each stage derives its
// component seed from the master seed it receives.
features::FeatureMatrix load_features_from_sessions(const std::filesystem::path& data_dir);
vae::TrainedVae train_vae_stage(const features::FeatureMatrix& raw, const vae::VaeConfig& base,
                                std::uint64_t master_seed);

}  // namespace agidet::pipeline
