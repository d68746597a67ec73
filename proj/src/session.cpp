#include "dmtl/session.hpp"

#include "dmtl/error.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace dmtl {

namespace {

LabeledSession parse_session(const nlohmann::json& j) {
    LabeledSession s;
    s.session_id = j.at("session_id").get<std::string>();
    s.group_id = j.at("group_id").get<std::string>();
    s.sentences = j.at("sentences").get<std::vector<std::string>>();
    if (j.contains("ratings")) {
        for (const auto& [behavior, value] : j.at("ratings").items()) {
            const double r = value.get<double>();
            if (!(r >= 1.0 && r <= 9.0)) {
                throw Error("session " + s.session_id + ": rating for " + behavior + " outside [1, 9]");
            }
            s.ratings[behavior] = r;
        }
    }
    if (j.contains("emotion") && !j.at("emotion").is_null()) s.emotion = j.at("emotion").get<std::string>();
    return s;
}

}  // namespace

std::vector<LabeledSession> read_sessions(std::istream& in) {
    std::vector<LabeledSession> sessions;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            sessions.push_back(parse_session(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error("sessions line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(sessions.back().session_id).second) {
            throw Error("duplicate session id " + sessions.back().session_id);
        }
    }
    return sessions;
}

std::vector<LabeledSession> load_sessions(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open sessions file " + path.string());
    return read_sessions(in);
}

void write_sessions(std::ostream& out, const std::vector<LabeledSession>& sessions) {
    for (const auto& s : sessions) {
        nlohmann::json j;
        j["session_id"] = s.session_id;
        j["group_id"] = s.group_id;
        j["sentences"] = s.sentences;
        if (!s.ratings.empty()) j["ratings"] = s.ratings;
        if (s.emotion) j["emotion"] = *s.emotion;
        out << j.dump() << '\n';
    }
}

}  // namespace dmtl
