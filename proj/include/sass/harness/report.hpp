#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"

namespace sass::harness {

inline constexpr int kReportSchemaVersion = 1;

using ojson = nlohmann::ordered_json;

/// Pipeline failure tagged with the stage that raised it.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string s, const std::string& what) : std::runtime_error("[" + s + "] " + what), stage(std::move(s)) {}
};

struct OutputFile {
    std::string name;
    std::string content;
};

/// Stamps the shared header every report carries.
inline ojson report_header(const std::string& kind, std::uint64_t seed) {
    ojson j;
    j["schema_version"] = kReportSchemaVersion;
    j["kind"] = kind;
    j["seed"] = seed;
    return j;
}

inline std::string csv_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Writes every file or none: existing outputs are refused unless `force`.
inline void emit_files(const std::filesystem::path& dir, const std::vector<OutputFile>& files, bool force) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    if (!force)
        for (const auto& f : files)
            if (std::filesystem::exists(dir / f.name))
                throw UsageError((dir / f.name).string() + " already exists (pass --force to overwrite)");
    for (const auto& f : files) {
        const auto tmp = dir / (f.name + ".tmp");
        {
            std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
            if (!os) throw IoError("cannot write " + tmp.string());
            os << f.content;
            if (!os) throw IoError("write failed on " + tmp.string());
        }
        std::filesystem::rename(tmp, dir / f.name, ec);
        if (ec) throw IoError("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline ojson read_json_file(const std::filesystem::path& p) {
    try {
        return ojson::parse(read_file(p));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(p.string() + ": " + e.what());
    }
}

}  // namespace sass::harness
