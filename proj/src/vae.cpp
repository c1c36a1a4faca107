#include "agidet/vae.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "agidet/model_file.hpp"
#include "agidet/rng.hpp"

namespace agidet::vae {

namespace {

constexpr double kClamp = 1e-7;

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void affine_forward(const Affine& a, const double* x, double* y) {
    for (int o = 0; o < a.out; ++o) {
        const double* wr = a.w.data() + static_cast<std::size_t>(o) * a.in;
        double s = a.b[o];
        for (int i = 0; i < a.in; ++i) s += wr[i] * x[i];
        y[o] = s;
    }
}

// Accumulates parameter gradients and writes the input gradient (dx is
// overwritten, not accumulated).
void affine_backward(const Affine& a, const double* x, const double* dy, Affine& grad,
                     double* dx) {
    if (dx) std::fill(dx, dx + a.in, 0.0);
    for (int o = 0; o < a.out; ++o) {
        double g = dy[o];
        grad.b[o] += g;
        double* gw = grad.w.data() + static_cast<std::size_t>(o) * a.in;
        const double* wr = a.w.data() + static_cast<std::size_t>(o) * a.in;
        for (int i = 0; i < a.in; ++i) {
            gw[i] += g * x[i];
            if (dx) dx[i] += g * wr[i];
        }
    }
}

Affine zero_like(const Affine& a) {
    Affine g;
    g.in = a.in;
    g.out = a.out;
    g.w.assign(a.w.size(), 0.0);
    g.b.assign(a.b.size(), 0.0);
    return g;
}

VaeParams zero_like(const VaeParams& p) {
    VaeParams g;
    for (const Affine& a : p.encoder) g.encoder.push_back(zero_like(a));
    g.head_mean = zero_like(p.head_mean);
    g.head_logvar = zero_like(p.head_logvar);
    for (const Affine& a : p.decoder) g.decoder.push_back(zero_like(a));
    g.output = zero_like(p.output);
    return g;
}

// Per-sample forward cache; buffers sized once and reused across samples.
struct Tape {
    std::vector<std::vector<double>> enc_act;  // enc_act[0] = x copy, then ReLU outputs
    std::vector<double> z_mean, z_log_var, z;
    std::vector<std::vector<double>> dec_act;  // dec_act[0] = z copy, then ReLU outputs
    std::vector<double> logits, x_hat;

    void resize(const VaeParams& p) {
        enc_act.resize(p.encoder.size() + 1);
        enc_act[0].resize(p.input_dim());
        for (std::size_t l = 0; l < p.encoder.size(); ++l) {
            enc_act[l + 1].resize(p.encoder[l].out);
        }
        z_mean.resize(p.latent_dim());
        z_log_var.resize(p.latent_dim());
        z.resize(p.latent_dim());
        dec_act.resize(p.decoder.size() + 1);
        dec_act[0].resize(p.latent_dim());
        for (std::size_t l = 0; l < p.decoder.size(); ++l) {
            dec_act[l + 1].resize(p.decoder[l].out);
        }
        logits.resize(p.output.out);
        x_hat.resize(p.output.out);
    }
};

Losses forward_sample(const VaeParams& p, std::span<const double> x,
                      std::span<const double> eps, Tape& t) {
    std::copy(x.begin(), x.end(), t.enc_act[0].begin());
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        affine_forward(p.encoder[l], t.enc_act[l].data(), t.enc_act[l + 1].data());
        for (double& v : t.enc_act[l + 1]) v = v > 0.0 ? v : 0.0;
    }
    const auto& h = t.enc_act.back();
    affine_forward(p.head_mean, h.data(), t.z_mean.data());
    affine_forward(p.head_logvar, h.data(), t.z_log_var.data());

    for (int i = 0; i < p.latent_dim(); ++i) {
        t.z[i] = t.z_mean[i] + std::exp(0.5 * t.z_log_var[i]) * eps[i];
    }
    assert([&] {
        for (int i = 0; i < p.latent_dim(); ++i) {
            double expect = t.z_mean[i] + std::exp(0.5 * t.z_log_var[i]) * eps[i];
            if (t.z[i] != expect) return false;
        }
        return true;
    }());

    std::copy(t.z.begin(), t.z.end(), t.dec_act[0].begin());
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
        affine_forward(p.decoder[l], t.dec_act[l].data(), t.dec_act[l + 1].data());
        for (double& v : t.dec_act[l + 1]) v = v > 0.0 ? v : 0.0;
    }
    affine_forward(p.output, t.dec_act.back().data(), t.logits.data());
    for (std::size_t j = 0; j < t.logits.size(); ++j) t.x_hat[j] = sigmoid(t.logits[j]);

    return vae_losses(x, t.x_hat, t.z_mean, t.z_log_var);
}

// Reverse pass for one sample; `scale` is the per-sample weight (1/B).
void backward_sample(const VaeParams& p, std::span<const double> x,
                     std::span<const double> eps, const Tape& t, double scale,
                     VaeParams& grads) {
    const int d_in = p.input_dim();
    const int d_lat = p.latent_dim();

    std::vector<double> dlogits(d_in);
    for (int j = 0; j < d_in; ++j) dlogits[j] = scale * (t.x_hat[j] - x[j]);

    std::vector<double> dcur;
    dcur.resize(p.output.in);
    affine_backward(p.output, t.dec_act.back().data(), dlogits.data(), grads.output,
                    dcur.data());

    std::vector<double> dprev;
    for (std::size_t l = p.decoder.size(); l-- > 0;) {
        // ReLU mask on this layer's output
        for (int o = 0; o < p.decoder[l].out; ++o) {
            if (t.dec_act[l + 1][o] <= 0.0) dcur[o] = 0.0;
        }
        dprev.resize(p.decoder[l].in);
        affine_backward(p.decoder[l], t.dec_act[l].data(), dcur.data(), grads.decoder[l],
                        dprev.data());
        std::swap(dcur, dprev);
    }

    // dcur now holds dL/dz
    std::vector<double> dmu(d_lat), dlv(d_lat);
    for (int i = 0; i < d_lat; ++i) {
        dmu[i] = dcur[i] + scale * t.z_mean[i];
        dlv[i] = dcur[i] * 0.5 * std::exp(0.5 * t.z_log_var[i]) * eps[i] +
                 scale * 0.5 * (std::exp(t.z_log_var[i]) - 1.0);
    }

    std::vector<double> dh(p.head_mean.in, 0.0), dh2(p.head_logvar.in);
    affine_backward(p.head_mean, t.enc_act.back().data(), dmu.data(), grads.head_mean,
                    dh.data());
    affine_backward(p.head_logvar, t.enc_act.back().data(), dlv.data(), grads.head_logvar,
                    dh2.data());
    for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh2[i];

    dcur = std::move(dh);
    for (std::size_t l = p.encoder.size(); l-- > 0;) {
        for (int o = 0; o < p.encoder[l].out; ++o) {
            if (t.enc_act[l + 1][o] <= 0.0) dcur[o] = 0.0;
        }
        dprev.resize(p.encoder[l].in);
        affine_backward(p.encoder[l], t.enc_act[l].data(), dcur.data(), grads.encoder[l],
                        l > 0 ? dprev.data() : nullptr);
        std::swap(dcur, dprev);
    }
}

double mse_of(std::span<const double> x, std::span<const double> x_hat) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double d = x[j] - x_hat[j];
        s += d * d;
    }
    return s / static_cast<double>(x.size());
}

}  // namespace

Normalizer Normalizer::fit(const features::FeatureMatrix& m,
                           const std::vector<std::size_t>& rows) {
    Normalizer n;
    n.columns = m.column_names;
    const std::size_t nc = m.n_cols();
    n.col_min.assign(nc, std::numeric_limits<double>::infinity());
    n.col_max.assign(nc, -std::numeric_limits<double>::infinity());
    auto fold = [&](std::size_t r) {
        for (std::size_t c = 0; c < nc; ++c) {
            n.col_min[c] = std::min(n.col_min[c], m.at(r, c));
            n.col_max[c] = std::max(n.col_max[c], m.at(r, c));
        }
    };
    if (rows.empty()) {
        for (std::size_t r = 0; r < m.n_rows(); ++r) fold(r);
    } else {
        for (std::size_t r : rows) fold(r);
    }
    return n;
}

std::vector<double> Normalizer::apply_row(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
        double span = col_max[c] - col_min[c];
        if (span <= 0.0) {
            out[c] = 0.5;
        } else {
            out[c] = std::clamp((row[c] - col_min[c]) / span, 0.0, 1.0);
        }
    }
    return out;
}

features::FeatureMatrix Normalizer::apply(const features::FeatureMatrix& m) const {
    features::FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto row = apply_row(m.row(r));
        std::copy(row.begin(), row.end(),
                  out.values.begin() + static_cast<std::ptrdiff_t>(r * m.n_cols()));
    }
    return out;
}

std::pair<std::vector<double>, std::vector<double>> encode(std::span<const double> x,
                                                           const VaeParams& p) {
    if (static_cast<int>(x.size()) != p.input_dim()) {
        throw ShapeMismatch("encode input of " + std::to_string(x.size()) + ", expected " +
                            std::to_string(p.input_dim()));
    }
    std::vector<double> cur(x.begin(), x.end()), next;
    for (const Affine& a : p.encoder) {
        next.resize(a.out);
        affine_forward(a, cur.data(), next.data());
        for (double& v : next) v = v > 0.0 ? v : 0.0;
        std::swap(cur, next);
    }
    std::vector<double> mu(p.head_mean.out), lv(p.head_logvar.out);
    affine_forward(p.head_mean, cur.data(), mu.data());
    affine_forward(p.head_logvar, cur.data(), lv.data());
    return {std::move(mu), std::move(lv)};
}

std::vector<double> sample_z(std::span<const double> z_mean, std::span<const double> z_log_var,
                             std::span<const double> epsilon) {
    if (z_mean.size() != z_log_var.size() || z_mean.size() != epsilon.size()) {
        throw ShapeMismatch("sample_z length mismatch");
    }
    std::vector<double> z(z_mean.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        z[i] = z_mean[i] + std::exp(0.5 * z_log_var[i]) * epsilon[i];
    }
    return z;
}

std::vector<double> decode(std::span<const double> z, const VaeParams& p) {
    if (static_cast<int>(z.size()) != p.latent_dim()) {
        throw ShapeMismatch("decode input of " + std::to_string(z.size()) + ", expected " +
                            std::to_string(p.latent_dim()));
    }
    std::vector<double> cur(z.begin(), z.end()), next;
    for (const Affine& a : p.decoder) {
        next.resize(a.out);
        affine_forward(a, cur.data(), next.data());
        for (double& v : next) v = v > 0.0 ? v : 0.0;
        std::swap(cur, next);
    }
    std::vector<double> out(p.output.out);
    affine_forward(p.output, cur.data(), out.data());
    for (double& v : out) v = sigmoid(v);
    return out;
}

Losses vae_losses(std::span<const double> x, std::span<const double> x_decoded,
                  std::span<const double> z_mean, std::span<const double> z_log_var) {
    Losses l;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double p = std::clamp(x_decoded[j], kClamp, 1.0 - kClamp);
        l.xent -= x[j] * std::log(p) + (1.0 - x[j]) * std::log(1.0 - p);
    }
    for (std::size_t i = 0; i < z_mean.size(); ++i) {
        l.kl += 1.0 + z_log_var[i] - z_mean[i] * z_mean[i] - std::exp(z_log_var[i]);
    }
    l.kl *= -0.5;
    l.per_sample = l.xent + l.kl;
    return l;
}

double batch_vae_loss(const VaeParams& p, const std::vector<std::vector<double>>& x,
                      const std::vector<std::vector<double>>& eps) {
    Tape t;
    t.resize(p);
    double total = 0.0;
    for (std::size_t s = 0; s < x.size(); ++s) {
        total += forward_sample(p, x[s], eps[s], t).per_sample;
    }
    return total / static_cast<double>(x.size());
}

VaeParams batch_vae_gradients(const VaeParams& p, const std::vector<std::vector<double>>& x,
                              const std::vector<std::vector<double>>& eps) {
    VaeParams grads = zero_like(p);
    Tape t;
    t.resize(p);
    double scale = 1.0 / static_cast<double>(x.size());
    for (std::size_t s = 0; s < x.size(); ++s) {
        forward_sample(p, x[s], eps[s], t);
        backward_sample(p, x[s], eps[s], t, scale, grads);
    }
    return grads;
}

namespace {

Affine init_affine(int in, int out, Rng& rng) {
    Affine a;
    a.in = in;
    a.out = out;
    a.w.resize(static_cast<std::size_t>(in) * out);
    a.b.assign(out, 0.0);
    double limit = std::sqrt(1.0 / in);
    for (double& w : a.w) w = rng.uniform(-limit, limit);
    return a;
}

}  // namespace

VaeParams init_params(const VaeConfig& cfg, Rng& rng) {
    if (cfg.input_dim <= 0 || cfg.latent_dim <= 0) throw Error("VAE dims must be positive");
    VaeParams p;
    int prev = cfg.input_dim;
    for (int h : cfg.hidden_dims) {
        p.encoder.push_back(init_affine(prev, h, rng));
        prev = h;
    }
    p.head_mean = init_affine(prev, cfg.latent_dim, rng);
    p.head_logvar = init_affine(prev, cfg.latent_dim, rng);
    prev = cfg.latent_dim;
    for (auto it = cfg.hidden_dims.rbegin(); it != cfg.hidden_dims.rend(); ++it) {
        p.decoder.push_back(init_affine(prev, *it, rng));
        prev = *it;
    }
    p.output = init_affine(prev, cfg.input_dim, rng);
    return p;
}

namespace {

struct AdamState {
    VaeParams m, v;
    long long t = 0;
};

void adam_update(VaeParams& p, const VaeParams& g, AdamState& st, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    st.t += 1;
    double c1 = 1.0 - std::pow(b1, static_cast<double>(st.t));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(st.t));

    auto upd = [&](Affine& pa, const Affine& ga, Affine& ma, Affine& va) {
        for (std::size_t i = 0; i < pa.w.size(); ++i) {
            ma.w[i] = b1 * ma.w[i] + (1.0 - b1) * ga.w[i];
            va.w[i] = b2 * va.w[i] + (1.0 - b2) * ga.w[i] * ga.w[i];
            pa.w[i] -= lr * (ma.w[i] / c1) / (std::sqrt(va.w[i] / c2) + eps);
        }
        for (std::size_t i = 0; i < pa.b.size(); ++i) {
            ma.b[i] = b1 * ma.b[i] + (1.0 - b1) * ga.b[i];
            va.b[i] = b2 * va.b[i] + (1.0 - b2) * ga.b[i] * ga.b[i];
            pa.b[i] -= lr * (ma.b[i] / c1) / (std::sqrt(va.b[i] / c2) + eps);
        }
    };
    for (std::size_t l = 0; l < p.encoder.size(); ++l) {
        upd(p.encoder[l], g.encoder[l], st.m.encoder[l], st.v.encoder[l]);
    }
    upd(p.head_mean, g.head_mean, st.m.head_mean, st.v.head_mean);
    upd(p.head_logvar, g.head_logvar, st.m.head_logvar, st.v.head_logvar);
    for (std::size_t l = 0; l < p.decoder.size(); ++l) {
        upd(p.decoder[l], g.decoder[l], st.m.decoder[l], st.v.decoder[l]);
    }
    upd(p.output, g.output, st.m.output, st.v.output);
}

void zero_grads(VaeParams& g) {
    auto z = [](Affine& a) {
        std::fill(a.w.begin(), a.w.end(), 0.0);
        std::fill(a.b.begin(), a.b.end(), 0.0);
    };
    for (Affine& a : g.encoder) z(a);
    z(g.head_mean);
    z(g.head_logvar);
    for (Affine& a : g.decoder) z(a);
    z(g.output);
}

}  // namespace

TrainedVae train(const features::FeatureMatrix& m, const VaeConfig& cfg) {
    if (m.n_rows() == 0) throw Error("cannot train on an empty matrix");
    for (double v : m.values) {
        if (!std::isfinite(v)) throw Error("training matrix must be finite");
    }

    VaeConfig config = cfg;
    config.input_dim = static_cast<int>(m.n_cols());

    Rng rng(config.seed);

    // held-out validation split
    std::vector<std::size_t> order(m.n_rows());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    auto n_val = static_cast<std::size_t>(
        std::llround(static_cast<double>(m.n_rows()) * config.validation_fraction));
    if (n_val >= m.n_rows()) n_val = m.n_rows() - 1;
    std::vector<std::size_t> train_rows(order.begin(),
                                        order.end() - static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> val_rows(order.end() - static_cast<std::ptrdiff_t>(n_val),
                                      order.end());

    TrainedVae model;
    model.config = config;
    model.norm = Normalizer::fit(m, train_rows);

    // normalize every row once up front
    std::vector<std::vector<double>> rows(m.n_rows());
    for (std::size_t r = 0; r < m.n_rows(); ++r) rows[r] = model.norm.apply_row(m.row(r));

    model.params = init_params(config, rng);
    VaeParams grads = zero_like(model.params);
    AdamState adam{zero_like(model.params), zero_like(model.params), 0};

    Tape tape;
    tape.resize(model.params);
    std::vector<double> eps(config.latent_dim);

    const auto n_train = train_rows.size();
    const auto bsz = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        rng.shuffle(train_rows);
        double epoch_loss = 0.0, epoch_mse = 0.0;

        for (std::size_t start = 0; start < n_train; start += bsz) {
            std::size_t stop = std::min(n_train, start + bsz);
            zero_grads(grads);
            double batch_loss = 0.0;
            double scale = 1.0 / static_cast<double>(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& x = rows[train_rows[k]];
                for (double& e : eps) e = rng.normal();
                Losses l = forward_sample(model.params, x, eps, tape);
                batch_loss += l.per_sample;
                epoch_loss += l.per_sample;
                epoch_mse += mse_of(x, tape.x_hat);
                backward_sample(model.params, x, eps, tape, scale, grads);
            }
            if (!std::isfinite(batch_loss)) {
                throw NonFiniteLoss("diverged at epoch " + std::to_string(epoch));
            }
            adam_update(model.params, grads, adam, config.learning_rate);
        }

        EpochStats es;
        es.train_vae = epoch_loss / static_cast<double>(n_train);
        es.train_mse = epoch_mse / static_cast<double>(n_train);

        double val_loss = 0.0, val_mse = 0.0;
        for (std::size_t r : val_rows) {
            for (double& e : eps) e = rng.normal();
            Losses l = forward_sample(model.params, rows[r], eps, tape);
            val_loss += l.per_sample;
            val_mse += mse_of(rows[r], tape.x_hat);
        }
        if (!val_rows.empty()) {
            es.val_vae = val_loss / static_cast<double>(val_rows.size());
            es.val_mse = val_mse / static_cast<double>(val_rows.size());
        }
        model.history.push_back(es);
    }
    return model;
}

features::FeatureMatrix transform(const features::FeatureMatrix& m, const VaeParams& p,
                                  const Normalizer& n) {
    if (m.column_names != n.columns) {
        throw ColumnMismatch("matrix columns differ from the columns the model was trained on");
    }
    features::FeatureMatrix out;
    out.row_meta = m.row_meta;
    out.row_labels = m.row_labels;
    const int lat = p.latent_dim();
    out.column_names.reserve(lat);
    for (int i = 0; i < lat; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "z_%03d", i);
        out.column_names.emplace_back(buf);
    }
    out.values.resize(m.n_rows() * static_cast<std::size_t>(lat));
    for (std::size_t r = 0; r < m.n_rows(); ++r) {
        auto x = n.apply_row(m.row(r));
        auto [mu, lv] = encode(x, p);
        std::copy(mu.begin(), mu.end(),
                  out.values.begin() + static_cast<std::ptrdiff_t>(r * lat));
    }
    return out;
}

namespace {

model_file::Json affine_to_json(const Affine& a) {
    model_file::Json j;
    j["in"] = a.in;
    j["out"] = a.out;
    j["w"] = a.w;
    j["b"] = a.b;
    return j;
}

Affine affine_from_json(const model_file::Json& j) {
    Affine a;
    a.in = j.at("in").get<int>();
    a.out = j.at("out").get<int>();
    a.w = j.at("w").get<std::vector<double>>();
    a.b = j.at("b").get<std::vector<double>>();
    if (a.w.size() != static_cast<std::size_t>(a.in) * a.out ||
        a.b.size() != static_cast<std::size_t>(a.out)) {
        throw CorruptModel("affine layer shape mismatch");
    }
    return a;
}

}  // namespace

void save_vae(const TrainedVae& model, const std::filesystem::path& file) {
    model_file::Json j;
    j["model_kind"] = "vae";
    j["config"] = {{"input_dim", model.config.input_dim},
                   {"hidden_dims", model.config.hidden_dims},
                   {"latent_dim", model.config.latent_dim},
                   {"epochs", model.config.epochs},
                   {"batch_size", model.config.batch_size},
                   {"learning_rate", model.config.learning_rate},
                   {"seed", model.config.seed},
                   {"validation_fraction", model.config.validation_fraction}};
    j["normalizer"] = {{"columns", model.norm.columns},
                       {"min", model.norm.col_min},
                       {"max", model.norm.col_max}};
    j["encoder"] = model_file::Json::array();
    for (const Affine& a : model.params.encoder) j["encoder"].push_back(affine_to_json(a));
    j["head_mean"] = affine_to_json(model.params.head_mean);
    j["head_logvar"] = affine_to_json(model.params.head_logvar);
    j["decoder"] = model_file::Json::array();
    for (const Affine& a : model.params.decoder) j["decoder"].push_back(affine_to_json(a));
    j["output"] = affine_to_json(model.params.output);
    j["history"] = model_file::Json::array();
    for (const EpochStats& e : model.history) {
        j["history"].push_back({e.train_vae, e.val_vae, e.train_mse, e.val_mse});
    }
    model_file::write(j, file);
}

TrainedVae load_vae(const std::filesystem::path& file) {
    model_file::Json j = model_file::read(file, "vae");
    TrainedVae model;
    try {
        const auto& c = j.at("config");
        model.config.input_dim = c.at("input_dim").get<int>();
        model.config.hidden_dims = c.at("hidden_dims").get<std::vector<int>>();
        model.config.latent_dim = c.at("latent_dim").get<int>();
        model.config.epochs = c.at("epochs").get<int>();
        model.config.batch_size = c.at("batch_size").get<int>();
        model.config.learning_rate = c.at("learning_rate").get<double>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        model.config.validation_fraction = c.at("validation_fraction").get<double>();

        const auto& n = j.at("normalizer");
        model.norm.columns = n.at("columns").get<std::vector<std::string>>();
        model.norm.col_min = n.at("min").get<std::vector<double>>();
        model.norm.col_max = n.at("max").get<std::vector<double>>();

        for (const auto& a : j.at("encoder")) model.params.encoder.push_back(affine_from_json(a));
        model.params.head_mean = affine_from_json(j.at("head_mean"));
        model.params.head_logvar = affine_from_json(j.at("head_logvar"));
        for (const auto& a : j.at("decoder")) model.params.decoder.push_back(affine_from_json(a));
        model.params.output = affine_from_json(j.at("output"));

        for (const auto& e : j.at("history")) {
            EpochStats es;
            es.train_vae = e.at(0).get<double>();
            es.val_vae = e.at(1).get<double>();
            es.train_mse = e.at(2).get<double>();
            es.val_mse = e.at(3).get<double>();
            model.history.push_back(es);
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(file.string() + ": " + e.what());
    }
    return model;
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "epoch,train_vae,val_vae,train_mse,val_mse\n";
    for (std::size_t i = 0; i < h.size(); ++i) {
        out << i + 1 << ',' << fmt_g17(h[i].train_vae) << ',' << fmt_g17(h[i].val_vae) << ','
            << fmt_g17(h[i].train_mse) << ',' << fmt_g17(h[i].val_mse) << "\n";
    }
}

}  // namespace agidet::vae
