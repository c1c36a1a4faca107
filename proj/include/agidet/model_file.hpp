#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "agidet/common.hpp"

namespace agidet::model_file {

inline constexpr int kFormatVersion = 1;

// Shared structured-text container for every trained model; a
// "model_kind" field discriminates. Keys keep insertion order so that
// identical models serialize to identical bytes.
using Json = nlohmann::ordered_json;

inline void write(const Json& body, const std::filesystem::path& file) {
    Json doc;
    doc["format_version"] = kFormatVersion;
    for (auto it = body.begin(); it != body.end(); ++it) doc[it.key()] = it.value();
    std::ofstream out(file);
    if (!out) throw Error("cannot write model file: " + file.string());
    out << doc.dump(2) << "\n";
}

inline Json read(const std::filesystem::path& file, const std::string& expected_kind) {
    std::ifstream in(file);
    if (!in) throw CorruptModel("cannot open model file: " + file.string());
    Json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptModel(file.string() + ": " + e.what());
    }
    if (!doc.contains("format_version") || !doc["format_version"].is_number_integer()) {
        throw CorruptModel(file.string() + ": missing format_version");
    }
    if (doc["format_version"].get<int>() != kFormatVersion) {
        throw VersionMismatch(file.string() + ": format_version " +
                              std::to_string(doc["format_version"].get<int>()) +
                              ", expected " + std::to_string(kFormatVersion));
    }
    if (!doc.contains("model_kind") || doc["model_kind"] != expected_kind) {
        throw CorruptModel(file.string() + ": expected model_kind '" + expected_kind + "'");
    }
    return doc;
}

}  // namespace agidet::model_file
