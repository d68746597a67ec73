#include "dmtl/run_config.hpp"

#include "dmtl/checkpoint.hpp"
#include "dmtl/error.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <vector>

namespace dmtl {

RunConfig::RunConfig(std::string command, const nlohmann::json& file) : command_(std::move(command)) {
    if (file.is_null()) return;
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    for (const auto& [key, value] : file.items()) {
        if (key == command_) {
            if (!value.is_object()) throw UsageError("config section '" + key + "' must be an object");
            section_ = value;
        } else if (!value.is_object()) {
            top_[key] = value;
        }
    }
}

void RunConfig::check_section_keys() const {
    for (const auto& [key, value] : section_.items()) {
        if (!settings_.contains(key)) throw UsageError("unknown key '" + key + "' in config section '" + command_ + "'");
    }
}

nlohmann::json RunConfig::document() const {
    return {{"command", command_}, {"tool_version", kToolVersion}, {"settings", settings_}};
}

nlohmann::json load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw UsageError("config file " + path.string() + " must hold a JSON object");
    return doc;
}

std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
    std::string out = "\"";
    for (char c : text) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::vector<std::string> parse_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else if (c != '\r') {
            fields.back() += c;
        }
    }
    if (quoted) throw Error("unterminated quote in CSV line");
    return fields;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw Error("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("cannot write " + path.string());
}

void write_sidecar(const std::filesystem::path& artifact, const nlohmann::json& run_document) {
    write_file(artifact.string() + ".run.json", run_document.dump(2) + "\n");
}

}  // namespace dmtl
