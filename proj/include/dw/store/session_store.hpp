#pragma once

// Flat-file persistence: one JSON document per session under
// <root>/sessions, the schema library at <root>/schemas.json, and an
// append-only what-if journal per session.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dw/consult.hpp"
#include "dw/error.hpp"
#include "dw/library.hpp"
#include "dw/schema.hpp"
#include "dw/store/codec.hpp"

namespace dw {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("IO_ERROR", "cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

/// Writes to a sibling temporary file and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    auto tmp = path;
    tmp += ".tmp" + std::to_string(rng());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("IO_ERROR", "cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw Error("IO_ERROR", "short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("IO_ERROR", "cannot replace '" + path.string() + "'");
    }
}

class SessionStore {
public:
    explicit SessionStore(std::filesystem::path root) : root_(std::move(root)) {
        std::filesystem::create_directories(sessions_dir());
    }

    const std::filesystem::path& root() const { return root_; }

    /// Loads <root>/schemas.json, writing the shipped library there first if
    /// the file does not exist.
    SchemaLibrary load_library() const {
        const auto path = root_ / "schemas.json";
        if (!std::filesystem::exists(path)) write_file_atomic(path, to_json(shipped_library()).dump(2) + "\n");
        return library_from_json(parse_json(read_file(path)));
    }

    void save(const Session& s) const {
        check_id(s.id);
        write_file_atomic(session_path(s.id), to_json(s).dump(2) + "\n");
    }

    std::optional<Session> load(const std::string& id) const {
        if (!valid_id(id)) return std::nullopt;
        const auto path = session_path(id);
        if (!std::filesystem::exists(path)) return std::nullopt;
        return session_from_json(parse_json(read_file(path)));
    }

    bool exists(const std::string& id) const {
        return valid_id(id) && std::filesystem::exists(session_path(id));
    }

    /// Session ids, sorted.
    std::vector<std::string> list() const {
        std::vector<std::string> ids;
        for (const auto& entry : std::filesystem::directory_iterator(sessions_dir())) {
            const auto& p = entry.path();
            if (p.extension() == ".json" && p.stem().extension().empty()) ids.push_back(p.stem().string());
        }
        std::sort(ids.begin(), ids.end());
        return ids;
    }

    void append_audit(const std::string& id, const Json& record) const {
        check_id(id);
        std::ofstream out(sessions_dir() / (id + ".audit.jsonl"), std::ios::app);
        if (!out) throw Error("IO_ERROR", "cannot append to audit journal of '" + id + "'");
        out << record.dump() << '\n';
    }

    std::vector<Json> audit(const std::string& id) const {
        std::vector<Json> out;
        if (!valid_id(id)) return out;
        std::ifstream in(sessions_dir() / (id + ".audit.jsonl"));
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) out.push_back(parse_json(line));
        return out;
    }

    static bool valid_id(const std::string& id) {
        return !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](char c) {
                   return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_';
               });
    }

private:
    std::filesystem::path sessions_dir() const { return root_ / "sessions"; }
    std::filesystem::path session_path(const std::string& id) const { return sessions_dir() / (id + ".json"); }

    static void check_id(const std::string& id) {
        if (!valid_id(id)) throw Error("BAD_ID", "invalid session id '" + id + "'");
    }

    std::filesystem::path root_;
};

}  // namespace dw
