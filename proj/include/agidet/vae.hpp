#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "agidet/features.hpp"

namespace agidet {
class Rng;
}

namespace agidet::vae {

struct VaeConfig {
    int input_dim = 0;  // filled from the surviving feature count
    std::vector<int> hidden_dims{256, 128, 100};
    int latent_dim = 100;
    int epochs = 50;
    int batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    double validation_fraction = 0.1;
};

// Per-column min-max scaling onto [0,1] (clamped); constant columns map
// to 0.5. Fit on training rows only.
struct Normalizer {
    std::vector<std::string> columns;
    std::vector<double> col_min;
    std::vector<double> col_max;

    static Normalizer fit(const features::FeatureMatrix& m,
                          const std::vector<std::size_t>& rows = {});
    std::vector<double> apply_row(std::span<const double> row) const;
    features::FeatureMatrix apply(const features::FeatureMatrix& m) const;
};

struct Affine {
    int in = 0, out = 0;
    std::vector<double> w;  // row-major, out x in
    std::vector<double> b;  // out
};

// Encoder ReLU stack, two linear heads, mirrored decoder ReLU stack,
// sigmoid output layer.
struct VaeParams {
    std::vector<Affine> encoder;
    Affine head_mean;
    Affine head_logvar;
    std::vector<Affine> decoder;
    Affine output;

    int input_dim() const { return encoder.empty() ? output.out : encoder.front().in; }
    int latent_dim() const { return head_mean.out; }
};

struct LatentCode {
    std::vector<double> z_mean;
    std::vector<double> z_log_var;
    std::vector<double> z;
    std::vector<double> epsilon;
};

struct EpochStats {
    double train_vae = 0, val_vae = 0, train_mse = 0, val_mse = 0;
};
using TrainHistory = std::vector<EpochStats>;

std::pair<std::vector<double>, std::vector<double>> encode(std::span<const double> x,
                                                           const VaeParams& p);

// z = z_mean + exp(0.5 * z_log_var) * epsilon, elementwise.
std::vector<double> sample_z(std::span<const double> z_mean,
                             std::span<const double> z_log_var,
                             std::span<const double> epsilon);

std::vector<double> decode(std::span<const double> z, const VaeParams& p);

struct Losses {
    double xent = 0;  // summed over features
    double kl = 0;    // summed over latent dims
    double per_sample = 0;
};

// Predictions are clamped to [1e-7, 1-1e-7] before the logs.
Losses vae_losses(std::span<const double> x, std::span<const double> x_decoded,
                  std::span<const double> z_mean, std::span<const double> z_log_var);

// Mean over samples of (xent + kl) for a batch with fixed per-sample epsilon.
// The pure loss evaluation is the target for finite-difference checks.
double batch_vae_loss(const VaeParams& p, const std::vector<std::vector<double>>& x,
                      const std::vector<std::vector<double>>& eps);

// Analytic gradients of batch_vae_loss, same shapes as the parameters.
VaeParams batch_vae_gradients(const VaeParams& p, const std::vector<std::vector<double>>& x,
                              const std::vector<std::vector<double>>& eps);

// Seeded uniform fan-in initialization.
VaeParams init_params(const VaeConfig& cfg, Rng& rng);

struct TrainedVae {
    VaeConfig config;
    VaeParams params;
    Normalizer norm;
    TrainHistory history;
};

// Adam (0.9/0.999) over shuffled mini-batches; one epsilon draw per sample
// per forward pass; deterministic for a fixed seed. Throws NonFiniteLoss
// with the epoch index on divergence.
TrainedVae train(const features::FeatureMatrix& m, const VaeConfig& cfg);

// Rows replaced by z_mean; columns "z_000".."z_<latent-1>"; labels and
// row_meta preserved. Throws ColumnMismatch when m's columns differ from
// the columns the normalizer was fit on.
features::FeatureMatrix transform(const features::FeatureMatrix& m, const VaeParams& p,
                                  const Normalizer& n);

void save_vae(const TrainedVae& model, const std::filesystem::path& file);
TrainedVae load_vae(const std::filesystem::path& file);

void write_history_csv(const TrainHistory& h, const std::filesystem::path& file);

}  // namespace agidet::vae
