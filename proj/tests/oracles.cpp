#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "agidet/rng.hpp"

namespace oracle {

namespace {

double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

double naive_percentile(std::vector<double> s, double p) {
    std::sort(s.begin(), s.end());
    double h = (static_cast<double>(s.size()) - 1.0) * p / 100.0;
    auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= s.size()) return s.back();
    return s[lo] * (1.0 - (h - lo)) + s[lo + 1] * (h - lo);
}

// Classical Jacobi with largest-off-diagonal pivoting; deliberately a
// different strategy from the library's cyclic sweeps.
std::vector<double> eigenvalues_pivot_jacobi(std::vector<std::vector<double>> a) {
    const std::size_t n = a.size();
    for (int iter = 0; iter < 20000; ++iter) {
        std::size_t p = 0, q = 1;
        double big = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                if (std::abs(a[i][j]) > big) {
                    big = std::abs(a[i][j]);
                    p = i;
                    q = j;
                }
            }
        }
        if (big < 1e-14) break;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
            double akp = a[k][p], akq = a[k][q];
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
            double apk = a[p][k], aqk = a[q][k];
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a[i][i];
    return eig;
}

double shannon(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) return 0.0;
    double h = 0.0;
    for (double w : weights) {
        if (w > 0.0) {
            double p = w / total;
            h -= p * std::log(p);
        }
    }
    return h;
}

}  // namespace

StatSet brute_stats(const std::vector<double>& x) {
    StatSet s{};
    const auto n = static_cast<double>(x.size());
    if (x.empty()) {
        double v = nan_value();
        s = {v, v, v, v, v, v, v, v, v, 0, v, 0, 0, 0, 0, v, v, v, v, v, v, v};
        return s;
    }

    s.sum = 0;
    for (double v : x) s.sum += v;
    s.mean = s.sum / n;
    s.minimum = x[0];
    s.maximum = x[0];
    for (double v : x) {
        s.minimum = std::min(s.minimum, v);
        s.maximum = std::max(s.maximum, v);
    }
    s.ptp = s.maximum - s.minimum;

    double m2 = 0, m3 = 0, m4 = 0;
    for (double v : x) {
        m2 += std::pow(v - s.mean, 2.0);
        m3 += std::pow(v - s.mean, 3.0);
        m4 += std::pow(v - s.mean, 4.0);
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    s.stddev = std::sqrt(m2);
    s.skewness = (x.size() >= 2 && m2 > 0) ? m3 / std::pow(m2, 1.5) : nan_value();
    s.kurtosis = (x.size() >= 2 && m2 > 0) ? m4 / (m2 * m2) - 3.0 : nan_value();

    s.energy = 0;
    for (double v : x) s.energy += v * v;
    s.rms = std::sqrt(s.energy / n);

    s.peak_count = 0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i) {
        if (x[i] > x[i - 1] && x[i] > x[i + 1]) s.peak_count += 1;
    }

    s.line_integral = 0;
    for (std::size_t i = 1; i < x.size(); ++i) s.line_integral += std::abs(x[i] - x[i - 1]);

    s.count_above_mean = 0;
    s.count_below_mean = 0;
    for (double v : x) {
        if (v > s.mean) s.count_above_mean += 1;
        if (v < s.mean) s.count_below_mean += 1;
    }

    s.sign_changes = 0;
    for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] * x[i - 1] < 0) s.sign_changes += 1;
    }

    s.p05 = naive_percentile(x, 5);
    s.p95 = naive_percentile(x, 95);
    s.iqr = naive_percentile(x, 75) - naive_percentile(x, 25);
    s.ipr_5_95 = s.p95 - s.p05;

    if (s.maximum > s.minimum) {
        std::vector<double> bins(16, 0.0);
        for (double v : x) {
            auto b = static_cast<int>((v - s.minimum) / (s.maximum - s.minimum) * 16.0);
            bins[static_cast<std::size_t>(std::min(b, 15))] += 1.0;
        }
        s.hist_entropy = shannon(bins);
    } else {
        s.hist_entropy = 0.0;
    }

    if (x.size() >= 3) {
        std::map<std::array<int, 2>, double> patterns;
        for (std::size_t i = 0; i + 2 < x.size(); ++i) {
            // rank of each position, ties broken by position
            std::array<std::pair<double, int>, 3> v{{{x[i], 0}, {x[i + 1], 1}, {x[i + 2], 2}}};
            std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
                return a.first < b.first;
            });
            patterns[{v[0].second, v[1].second}] += 1.0;
        }
        std::vector<double> weights;
        for (const auto& [k, w] : patterns) weights.push_back(w);
        s.perm_entropy = shannon(weights);
    } else {
        s.perm_entropy = nan_value();
    }

    {
        const std::size_t m = std::min<std::size_t>(10, x.size());
        const std::size_t k = x.size() - m + 1;
        std::vector<std::vector<double>> g(m, std::vector<double>(m, 0.0));
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = 0; b < m; ++b) {
                for (std::size_t j = 0; j < k; ++j) g[a][b] += x[a + j] * x[b + j];
            }
        }
        auto eig = eigenvalues_pivot_jacobi(g);
        std::vector<double> pos;
        for (double v : eig) {
            if (v > 0) pos.push_back(v);
        }
        s.ssa_entropy = shannon(pos);
    }
    return s;
}

std::array<double, 22> StatSet::in_catalog_order() const {
    return {mean, stddev, minimum, maximum, ptp, sum, energy, skewness, kurtosis,
            peak_count, rms, line_integral, count_above_mean, count_below_mean, sign_changes,
            iqr, ipr_5_95, p05, p95, hist_entropy, perm_entropy, ssa_entropy};
}

double pair_count_auc(std::span<const double> scores, std::span<const int> labels) {
    double concordant = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                concordant += 1.0;
            } else if (scores[i] == scores[j]) {
                concordant += 0.5;
            }
        }
    }
    return concordant / static_cast<double>(pairs);
}

RecountPrf recount_weighted_prf(const std::vector<int>& truth, const std::vector<int>& pred) {
    RecountPrf out{0, 0, 0};
    double total = static_cast<double>(truth.size());
    for (int cls : {0, 1}) {
        double support = 0, tp = 0, predicted = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            if (truth[i] == cls) support += 1;
            if (pred[i] == cls) predicted += 1;
            if (truth[i] == cls && pred[i] == cls) tp += 1;
        }
        double precision = predicted > 0 ? tp / predicted : 0.0;
        double recall = support > 0 ? tp / support : 0.0;
        double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
        out.precision_weighted += support / total * precision;
        out.recall_weighted += support / total * recall;
        out.f1_weighted += support / total * f1;
    }
    return out;
}

namespace {

std::vector<double> dense(const agidet::vae::Affine& a, const std::vector<double>& in) {
    std::vector<double> out(static_cast<std::size_t>(a.out), 0.0);
    for (int o = 0; o < a.out; ++o) {
        double acc = a.b[static_cast<std::size_t>(o)];
        for (int i = 0; i < a.in; ++i) {
            acc += a.w[static_cast<std::size_t>(o) * a.in + i] * in[static_cast<std::size_t>(i)];
        }
        out[static_cast<std::size_t>(o)] = acc;
    }
    return out;
}

std::vector<double> relu(std::vector<double> v) {
    for (double& x : v) x = std::max(0.0, x);
    return v;
}

}  // namespace

std::pair<std::vector<double>, std::vector<double>> forward_encode(
    const agidet::vae::VaeParams& p, const std::vector<double>& x) {
    std::vector<double> h = x;
    for (const auto& layer : p.encoder) h = relu(dense(layer, h));
    return {dense(p.head_mean, h), dense(p.head_logvar, h)};
}

std::vector<double> forward_decode(const agidet::vae::VaeParams& p,
                                   const std::vector<double>& z) {
    std::vector<double> h = z;
    for (const auto& layer : p.decoder) h = relu(dense(layer, h));
    std::vector<double> out = dense(p.output, h);
    for (double& v : out) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

namespace {

template <class Fn>
void for_each_param(agidet::vae::VaeParams& p, Fn fn) {
    for (auto& a : p.encoder) {
        for (double& w : a.w) fn(w);
        for (double& b : a.b) fn(b);
    }
    for (double& w : p.head_mean.w) fn(w);
    for (double& b : p.head_mean.b) fn(b);
    for (double& w : p.head_logvar.w) fn(w);
    for (double& b : p.head_logvar.b) fn(b);
    for (auto& a : p.decoder) {
        for (double& w : a.w) fn(w);
        for (double& b : a.b) fn(b);
    }
    for (double& w : p.output.w) fn(w);
    for (double& b : p.output.b) fn(b);
}

}  // namespace

agidet::vae::VaeParams fd_gradients(const agidet::vae::VaeParams& p,
                                    const std::vector<std::vector<double>>& x,
                                    const std::vector<std::vector<double>>& eps, double h) {
    agidet::vae::VaeParams work = p;
    agidet::vae::VaeParams grads = p;

    std::vector<double*> work_slots, grad_slots;
    for_each_param(work, [&](double& v) { work_slots.push_back(&v); });
    for_each_param(grads, [&](double& v) { grad_slots.push_back(&v); });

    for (std::size_t i = 0; i < work_slots.size(); ++i) {
        double original = *work_slots[i];
        *work_slots[i] = original + h;
        double up = agidet::vae::batch_vae_loss(work, x, eps);
        *work_slots[i] = original - h;
        double down = agidet::vae::batch_vae_loss(work, x, eps);
        *work_slots[i] = original;
        *grad_slots[i] = (up - down) / (2.0 * h);
    }
    return grads;
}

double max_grad_rel_error(const agidet::vae::VaeParams& analytic,
                          const agidet::vae::VaeParams& fd) {
    std::vector<const double*> a_slots, f_slots;
    auto collect = [](const agidet::vae::VaeParams& p, std::vector<const double*>& out) {
        auto& mut = const_cast<agidet::vae::VaeParams&>(p);
        for_each_param(mut, [&](double& v) { out.push_back(&v); });
    };
    collect(analytic, a_slots);
    collect(fd, f_slots);

    double worst = 0.0;
    for (std::size_t i = 0; i < a_slots.size(); ++i) {
        double a = *a_slots[i], f = *f_slots[i];
        double denom = std::max({std::abs(a), std::abs(f), 1e-3});
        worst = std::max(worst, std::abs(a - f) / denom);
    }
    return worst;
}

const agidet::ensemble::TreeNode& traverse_tree(const agidet::ensemble::DecisionTree& t,
                                                std::span<const double> row) {
    std::size_t id = 0;
    while (true) {
        const auto& node = t.nodes[id];
        if (node.feature < 0) return node;
        double v = row[static_cast<std::size_t>(node.feature)];
        id = static_cast<std::size_t>(v <= node.threshold ? node.left : node.right);
    }
}

double interval_intersection(double a0, double a1,
                             const std::vector<std::pair<double, double>>& spans) {
    double total = 0.0;
    for (const auto& [s, e] : spans) {
        total += std::max(0.0, std::min(a1, e) - std::max(a0, s));
    }
    return total;
}

Blobs gaussian_blobs(std::uint64_t seed, std::size_t n_per_class, std::size_t d, double delta) {
    agidet::Rng rng(seed);
    Blobs b;
    b.n_rows = 2 * n_per_class;
    b.n_cols = d;
    b.x.resize(b.n_rows * d);
    b.y.resize(b.n_rows);
    for (std::size_t r = 0; r < b.n_rows; ++r) {
        int cls = r < n_per_class ? 0 : 1;
        b.y[r] = cls;
        double center = cls == 0 ? -delta / 2.0 : delta / 2.0;
        for (std::size_t c = 0; c < d; ++c) b.x[r * d + c] = center + rng.normal();
    }
    return b;
}

}  // namespace oracle
