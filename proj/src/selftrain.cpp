#include "agidet/selftrain.hpp"

#include <algorithm>
#include <fstream>

namespace agidet::selftrain {

const char* termination_name(Termination t) {
    switch (t) {
        case Termination::CONVERGED: return "CONVERGED";
        case Termination::MAX_ITER: return "MAX_ITER";
        case Termination::NO_UNLABELED: return "NO_UNLABELED";
    }
    return "?";
}

SelfTrainResult self_train(const ensemble::DataView& x,
                           const std::vector<features::Label>& labels,
                           const SelfTrainConfig& cfg) {
    using features::Label;
    if (labels.size() != x.n_rows) throw ShapeMismatch("label count differs from row count");
    if (!(cfg.threshold > 0.5 && cfg.threshold < 1.0)) {
        throw Error("self-training threshold must lie in (0.5, 1)");
    }
    if (cfg.max_iter < 1) throw Error("max_iter must be >= 1");

    SelfTrainResult res;
    res.labels = labels;

    bool has_normal = false, has_agitation = false;
    for (Label l : labels) {
        has_normal |= l == Label::NORMAL;
        has_agitation |= l == Label::AGITATION;
    }
    if (!has_normal || !has_agitation) {
        throw MissingClass("labeled rows must include both classes");
    }

    // Row-index scratch reused across iterations; data rows are gathered
    // into a dense buffer for each fit.
    std::vector<std::size_t> unlabeled;
    for (std::size_t r = 0; r < labels.size(); ++r) {
        if (labels[r] == Label::UNLABELED) unlabeled.push_back(r);
    }

    std::vector<double> buf;
    std::vector<int> y;
    auto fit_current = [&]() {
        buf.clear();
        y.clear();
        for (std::size_t r = 0; r < res.labels.size(); ++r) {
            if (res.labels[r] == Label::UNLABELED) continue;
            auto row = x.row(r);
            buf.insert(buf.end(), row.begin(), row.end());
            y.push_back(res.labels[r] == Label::AGITATION ? 1 : 0);
        }
        ensemble::DataView train{buf.data(), y.size(), x.n_cols};
        return ensemble::fit_classifier(cfg.base, train, y, cfg.hp, cfg.seed);
    };

    int pseudo_normal = 0, pseudo_agitation = 0;
    int iter = 0;

    if (unlabeled.empty()) {
        res.model = fit_current();
        res.report.termination = Termination::NO_UNLABELED;
    } else {
        while (true) {
            ++iter;
            res.model = fit_current();

            std::vector<double> pool_buf;
            pool_buf.reserve(unlabeled.size() * x.n_cols);
            for (std::size_t r : unlabeled) {
                auto row = x.row(r);
                pool_buf.insert(pool_buf.end(), row.begin(), row.end());
            }
            ensemble::DataView pool{pool_buf.data(), unlabeled.size(), x.n_cols};
            auto proba = res.model.predict_proba(pool);

            std::vector<std::size_t> still_unlabeled;
            int admitted = 0;
            for (std::size_t k = 0; k < unlabeled.size(); ++k) {
                double p_max = std::max(proba[k][0], proba[k][1]);
                if (p_max > cfg.threshold) {
                    Label assigned =
                        proba[k][1] >= proba[k][0] ? Label::AGITATION : Label::NORMAL;
                    res.labels[unlabeled[k]] = assigned;
                    res.assignments.push_back({unlabeled[k], assigned, p_max, iter});
                    (assigned == Label::AGITATION ? pseudo_agitation : pseudo_normal) += 1;
                    ++admitted;
                } else {
                    still_unlabeled.push_back(unlabeled[k]);
                }
            }
            unlabeled = std::move(still_unlabeled);

            res.report.iterations.push_back({iter, admitted,
                                             static_cast<int>(unlabeled.size()), pseudo_normal,
                                             pseudo_agitation});

            if (admitted == 0) {
                res.report.termination = Termination::CONVERGED;
                break;
            }
            if (unlabeled.empty() || iter >= cfg.max_iter) {
                // final refit over the newly completed label set
                res.model = fit_current();
                res.report.termination =
                    unlabeled.empty() ? Termination::NO_UNLABELED : Termination::MAX_ITER;
                break;
            }
        }
    }

    for (features::Label l : res.labels) {
        if (l == Label::NORMAL) res.report.final_normal += 1;
        if (l == Label::AGITATION) res.report.final_agitation += 1;
    }
    res.report.remaining_unlabeled = static_cast<int>(unlabeled.size());
    return res;
}

SelfTrainMatrixResult self_train(const features::FeatureMatrix& m, const SelfTrainConfig& cfg) {
    ensemble::DataView x{m.values.data(), m.n_rows(), m.n_cols()};
    SelfTrainResult r = self_train(x, m.row_labels, cfg);
    SelfTrainMatrixResult out;
    out.model = std::move(r.model);
    out.augmented = m;
    out.augmented.row_labels = std::move(r.labels);
    out.assignments = std::move(r.assignments);
    out.report = std::move(r.report);
    return out;
}

void write_report_csv(const SelfTrainReport& r, const std::filesystem::path& file) {
    std::ofstream out(file);
    out << "iter,new_labels,remaining_unlabeled,pseudo_normal,pseudo_agitation\n";
    for (const IterationStats& it : r.iterations) {
        out << it.iteration << ',' << it.n_newly_labeled << ',' << it.n_remaining_unlabeled
            << ',' << it.pseudo_normal << ',' << it.pseudo_agitation << "\n";
    }
    out << "termination," << termination_name(r.termination) << ",final_normal="
        << r.final_normal << ",final_agitation=" << r.final_agitation
        << ",remaining_unlabeled=" << r.remaining_unlabeled << "\n";
}

}  // namespace agidet::selftrain
