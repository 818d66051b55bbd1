#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sass/error.hpp"

namespace sass::services {

using ojson = nlohmann::ordered_json;

/// Named append-only record streams plus one replaceable state document.
class Storage {
public:
    virtual ~Storage() = default;
    virtual void append(const std::string& stream, const ojson& record) = 0;
    virtual std::vector<ojson> read(const std::string& stream) const = 0;
    virtual void put_state(const ojson& state) = 0;
    virtual std::optional<ojson> get_state() const = 0;
};

class MemoryStorage final : public Storage {
public:
    void append(const std::string& stream, const ojson& record) override {
        std::lock_guard lock(mu_);
        streams_[stream].push_back(record);
    }
    std::vector<ojson> read(const std::string& stream) const override {
        std::lock_guard lock(mu_);
        auto it = streams_.find(stream);
        return it == streams_.end() ? std::vector<ojson>{} : it->second;
    }
    void put_state(const ojson& state) override {
        std::lock_guard lock(mu_);
        state_ = state;
    }
    std::optional<ojson> get_state() const override {
        std::lock_guard lock(mu_);
        return state_;
    }

private:
    mutable std::mutex mu_;
    std::map<std::string, std::vector<ojson>> streams_;
    std::optional<ojson> state_;
};

/// One NDJSON file per stream under `dir`; state.json is replaced atomically.
class FileStorage final : public Storage {
public:
    explicit FileStorage(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw IoError("cannot create store directory " + dir_.string() + ": " + ec.message());
    }

    void append(const std::string& stream, const ojson& record) override {
        std::lock_guard lock(mu_);
        std::ofstream os(path(stream), std::ios::app);
        if (!os) throw IoError("cannot open " + path(stream).string());
        os << record.dump() << '\n';
        os.flush();
        if (!os) throw IoError("write failed on " + path(stream).string());
    }

    std::vector<ojson> read(const std::string& stream) const override {
        std::lock_guard lock(mu_);
        std::vector<ojson> out;
        std::ifstream is(path(stream));
        if (!is) return out;
        std::string line;
        std::size_t n = 0;
        while (std::getline(is, line)) {
            ++n;
            if (line.empty()) continue;
            try {
                out.push_back(ojson::parse(line));
            } catch (const nlohmann::json::parse_error&) {
                throw IntegrityError(path(stream).string() + ": corrupt record at line " + std::to_string(n));
            }
        }
        return out;
    }

    void put_state(const ojson& state) override {
        std::lock_guard lock(mu_);
        const auto tmp = dir_ / "state.json.tmp";
        {
            std::ofstream os(tmp, std::ios::trunc);
            os << state.dump(2) << '\n';
            if (!os) throw IoError("cannot write " + tmp.string());
        }
        std::filesystem::rename(tmp, dir_ / "state.json");
    }

    std::optional<ojson> get_state() const override {
        std::lock_guard lock(mu_);
        std::ifstream is(dir_ / "state.json");
        if (!is) return std::nullopt;
        try {
            return ojson::parse(is);
        } catch (const nlohmann::json::parse_error&) {
            throw IntegrityError("corrupt state.json in " + dir_.string());
        }
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path path(const std::string& stream) const { return dir_ / (stream + ".ndjson"); }

    std::filesystem::path dir_;
    mutable std::mutex mu_;
};

}  // namespace sass::services
