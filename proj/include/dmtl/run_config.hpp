#pragma once

#include "dmtl/error.hpp"
#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace dmtl {

// Settings for one command, resolved in increasing precedence from built-in
// defaults, the config file's top-level keys, the config file's section named
// after the command, and explicit flags. Every resolved value is recorded so
// the document can be written next to (or into) each artifact.
class RunConfig {
public:
    RunConfig(std::string command, const nlohmann::json& file);

    template <class T>
    T resolve(const std::string& key, const std::optional<T>& flag, T fallback) {
        T value = flag ? *flag : lookup<T>(key).value_or(std::move(fallback));
        settings_[key] = value;
        return value;
    }

    // Records a derived value that has no flag of its own.
    void set(const std::string& key, nlohmann::json value) { settings_[key] = std::move(value); }

    // Throws UsageError for keys in the command's section that no option read.
    void check_section_keys() const;

    // {"command", "tool_version", "settings"}
    nlohmann::json document() const;

private:
    template <class T>
    std::optional<T> lookup(const std::string& key) const {
        for (const nlohmann::json* source : {&section_, &top_}) {
            const auto it = source->find(key);
            if (it == source->end()) continue;
            if (!compatible<T>(*it)) throw UsageError("config key '" + key + "' has the wrong type");
            return it->template get<T>();
        }
        return std::nullopt;
    }

    template <class T>
    static bool compatible(const nlohmann::json& value) {
        if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
            if (!value.is_number_integer()) return false;
            if constexpr (std::is_unsigned_v<T>) return value.is_number_unsigned();
        }
        try {
            (void)value.template get<T>();
            return true;
        } catch (const nlohmann::json::exception&) {
            return false;
        }
    }

    std::string command_;
    nlohmann::json top_ = nlohmann::json::object();
    nlohmann::json section_ = nlohmann::json::object();
    nlohmann::json settings_ = nlohmann::json::object();
};

// A JSON object; UsageError when the file is missing or malformed.
nlohmann::json load_config_file(const std::filesystem::path& path);

// Shortest decimal text that reads back to the same double.
std::string format_double(double value);

// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_field(std::string_view text);
std::vector<std::string> parse_csv_line(std::string_view line);

// Writes `bytes` to `path`, creating parent directories. Error on failure.
void write_file(const std::filesystem::path& path, std::string_view bytes);

// `<path>.run.json` holding the run document, for artifacts that cannot embed it.
void write_sidecar(const std::filesystem::path& artifact, const nlohmann::json& run_document);

}  // namespace dmtl
