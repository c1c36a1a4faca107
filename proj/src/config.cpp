#include "agidet/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace agidet::config {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

ConfigDoc ConfigDoc::parse_string(const std::string& text) {
    ConfigDoc doc;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno) + ": unterminated section");
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        doc.values[section.empty() ? key : section + "." + key] = value;
    }
    return doc;
}

ConfigDoc ConfigDoc::parse_file(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

std::optional<std::string> ConfigDoc::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    return it->second;
}

double ConfigDoc::get_double(const std::string& key, double fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        return parse_double_strict(*v);
    } catch (const std::invalid_argument&) {
        throw ConfigError(key + ": expected a number, got '" + *v + "'");
    }
}

int ConfigDoc::get_int(const std::string& key, int fallback) const {
    double d = get_double(key, static_cast<double>(fallback));
    auto i = static_cast<int>(d);
    if (static_cast<double>(i) != d) throw ConfigError(key + ": expected an integer");
    return i;
}

std::uint64_t ConfigDoc::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
        std::size_t pos = 0;
        std::uint64_t out = std::stoull(*v, &pos);
        if (pos != v->size()) throw std::invalid_argument("trailing");
        return out;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an unsigned integer, got '" + *v + "'");
    }
}

std::string ConfigDoc::get_string(const std::string& key, const std::string& fallback) const {
    return get(key).value_or(fallback);
}

pipeline::PipelineConfig apply_config(const ConfigDoc& doc, pipeline::PipelineConfig base) {
    static const std::set<std::string> known = {
        "pipeline.seed",          "pipeline.out",
        "pipeline.data",          "pipeline.synth",
        "pipeline.synth_scale",   "vae.epochs",
        "vae.batch_size",         "vae.learning_rate",
        "vae.latent_dim",         "vae.hidden_dims",
        "vae.validation_fraction", "forest.n_trees",
        "forest.min_samples_split", "boost.n_rounds",
        "boost.max_depth",        "boost.learning_rate",
        "boost.l2_lambda",        "selftrain.threshold",
        "selftrain.max_iter",     "split.test_fraction",
    };
    for (const auto& [key, value] : doc.values) {
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }

    base.master_seed = doc.get_u64("pipeline.seed", base.master_seed);
    base.out_dir = doc.get_string("pipeline.out", base.out_dir);
    base.data_dir = doc.get_string("pipeline.data", base.data_dir);
    if (auto v = doc.get("pipeline.synth")) {
        if (*v == "true" || *v == "1") {
            base.use_synth = true;
        } else if (*v == "false" || *v == "0") {
            base.use_synth = false;
        } else {
            throw ConfigError("pipeline.synth: expected true/false");
        }
    }
    base.synth_scale = doc.get_double("pipeline.synth_scale", base.synth_scale);

    base.vae.epochs = doc.get_int("vae.epochs", base.vae.epochs);
    base.vae.batch_size = doc.get_int("vae.batch_size", base.vae.batch_size);
    base.vae.learning_rate = doc.get_double("vae.learning_rate", base.vae.learning_rate);
    base.vae.latent_dim = doc.get_int("vae.latent_dim", base.vae.latent_dim);
    base.vae.validation_fraction =
        doc.get_double("vae.validation_fraction", base.vae.validation_fraction);
    if (auto v = doc.get("vae.hidden_dims")) {
        std::vector<int> dims;
        std::istringstream is(*v);
        std::string part;
        while (std::getline(is, part, ',')) {
            try {
                dims.push_back(static_cast<int>(parse_double_strict(part)));
            } catch (const std::invalid_argument&) {
                throw ConfigError("vae.hidden_dims: expected comma-separated integers");
            }
        }
        if (dims.empty()) throw ConfigError("vae.hidden_dims: empty list");
        base.vae.hidden_dims = dims;
    }

    base.hp.forest.n_trees = doc.get_int("forest.n_trees", base.hp.forest.n_trees);
    base.hp.forest.min_samples_split =
        doc.get_int("forest.min_samples_split", base.hp.forest.min_samples_split);
    base.hp.boost.n_rounds = doc.get_int("boost.n_rounds", base.hp.boost.n_rounds);
    base.hp.boost.max_depth = doc.get_int("boost.max_depth", base.hp.boost.max_depth);
    base.hp.boost.learning_rate =
        doc.get_double("boost.learning_rate", base.hp.boost.learning_rate);
    base.hp.boost.l2_lambda = doc.get_double("boost.l2_lambda", base.hp.boost.l2_lambda);

    base.selftrain_threshold = doc.get_double("selftrain.threshold", base.selftrain_threshold);
    base.selftrain_max_iter = doc.get_int("selftrain.max_iter", base.selftrain_max_iter);
    base.test_fraction = doc.get_double("split.test_fraction", base.test_fraction);
    return base;
}

}  // namespace agidet::config
