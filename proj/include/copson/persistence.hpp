#pragma once

// Versioned report envelopes and CSV tables on disk. Every write goes to a
// sibling temp file first and is renamed into place.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "copson/json_io.hpp"

namespace copson {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

/// A version newer than this build understands.
class IncompatibleSchema : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ReportEnvelope {
    int schema_version = kSchemaVersion;
    std::string tool_version = kToolVersion;
    std::string config_digest;
    Json payload;
    std::string timestamp;  // ISO 8601, UTC

    bool operator==(const ReportEnvelope&) const = default;
};

/// Current UTC time; SOURCE_DATE_EPOCH pins it for reproducible output.
inline std::string utc_timestamp() {
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* s = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(s, &end, 10);
        if (end != s && *end == '\0') now = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline ReportEnvelope make_envelope(const Json& config, Json payload) {
    ReportEnvelope e;
    e.config_digest = digest(config);
    e.payload = std::move(payload);
    e.timestamp = utc_timestamp();
    return e;
}

inline Json to_json(const ReportEnvelope& e) {
    return {{"schema_version", e.schema_version},
            {"tool_version", e.tool_version},
            {"config_digest", e.config_digest},
            {"payload", e.payload},
            {"timestamp", e.timestamp}};
}

inline ReportEnvelope envelope_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidInput("/: expected an object");
    for (const char* k : {"schema_version", "tool_version", "config_digest", "payload", "timestamp"})
        if (!j.contains(k)) throw InvalidInput(std::string("/") + k + ": missing");
    if (!j.at("schema_version").is_number_integer()) throw InvalidInput("/schema_version: expected an integer");
    ReportEnvelope e;
    e.schema_version = j.at("schema_version").get<int>();
    if (e.schema_version > kSchemaVersion)
        throw IncompatibleSchema("report schema_version " + std::to_string(e.schema_version) +
                                 " is newer than supported version " + std::to_string(kSchemaVersion));
    if (e.schema_version < 1) throw InvalidInput("/schema_version: must be >= 1");
    e.tool_version = j.at("tool_version").get<std::string>();
    e.config_digest = j.at("config_digest").get<std::string>();
    e.payload = j.at("payload");
    e.timestamp = j.at("timestamp").get<std::string>();
    return e;
}

/// Writes `text` to `path` through a temp file in the same directory.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    if (!fs::exists(dir)) throw InvalidInput("output directory does not exist: " + dir.string());
    fs::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InvalidInput("cannot open for writing: " + tmp.string());
        out << text;
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    fs::rename(tmp, path);
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_report(const ReportEnvelope& e, const std::filesystem::path& path) {
    write_text_atomic(path, canonical_dump(to_json(e)) + "\n");
}

inline ReportEnvelope read_report(const std::filesystem::path& path) {
    return envelope_from_json(parse_json_text(read_text(path)));
}

// CSV. Fields are numbers, "inf", or plain tokens; anything with a comma,
// quote or newline is quoted.

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& r) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += csv_field(r[i]);
            }
            out += '\n';
        };
        line(header);
        for (const auto& r : rows) {
            if (r.size() != header.size()) throw InvalidInput("csv row width does not match header");
            line(r);
        }
        return out;
    }
};

inline void write_csv(const CsvTable& t, const std::filesystem::path& path) { write_text_atomic(path, t.str()); }

}  // namespace copson
