#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dmtl {

// A rated transcript (behavior ratings on a 1..9 scale) or a single
// utterance with a categorical emotion.
struct LabeledSession {
    std::string session_id;
    std::string group_id;
    std::vector<std::string> sentences;
    std::map<std::string, double> ratings;
    std::optional<std::string> emotion;

    bool operator==(const LabeledSession&) const = default;
};

// JSON lines: {session_id, group_id, sentences, ratings | emotion}.
// Ratings outside [1, 9] and duplicate session ids are rejected.
std::vector<LabeledSession> read_sessions(std::istream& in);
std::vector<LabeledSession> load_sessions(const std::filesystem::path& path);
void write_sessions(std::ostream& out, const std::vector<LabeledSession>& sessions);

}  // namespace dmtl
