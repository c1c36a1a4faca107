#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "agidet/pipeline.hpp"

namespace agidet::config {

// Flat INI-style document: [section] headers, key = value lines, '#'
// comments. Keys are addressed as "section.key".
struct ConfigDoc {
    std::map<std::string, std::string> values;

    static ConfigDoc parse_file(const std::filesystem::path& file);
    static ConfigDoc parse_string(const std::string& text);

    std::optional<std::string> get(const std::string& key) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
};

// Applies a config document over defaults; unknown keys raise ConfigError.
pipeline::PipelineConfig apply_config(const ConfigDoc& doc,
                                      pipeline::PipelineConfig base);

}  // namespace agidet::config
