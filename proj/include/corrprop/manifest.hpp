#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

// Run manifests: every CLI run writes outputs plus a manifest.json holding
// the full configuration, the global seed and a digest of every output file.
// Re-running a subcommand with --config <manifest.json> in serial mode
// reproduces the outputs byte for byte.

namespace corrprop {

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = 0xCBF29CE484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ull;
    }
    return h;
}

inline std::uint64_t file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot digest missing file: " + path);
    std::uint64_t h = 0xCBF29CE484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
        h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
    return h;
}

inline std::string iso8601_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct RunManifest {
    std::string command;
    nlohmann::json config;
    std::uint64_t seed = 0;
    std::string version = "corrprop 0.1.0";
    std::string started;
    std::string finished;
    int threads = 1;
    std::vector<std::string> outputs;
    std::vector<std::uint64_t> digests;

    void add_output(const std::string& path) {
        outputs.push_back(path);
        digests.push_back(file_digest(path));
    }

    nlohmann::json to_json() const {
        nlohmann::json files = nlohmann::json::array();
        for (std::size_t i = 0; i < outputs.size(); ++i)
            files.push_back({{"path", outputs[i]},
                             {"fnv1a64", digests[i]},
                             {"bytes", std::filesystem::file_size(outputs[i])}});
        return {{"command", command}, {"config", config},   {"seed", seed},
                {"version", version}, {"started", started}, {"finished", finished},
                {"threads", threads}, {"outputs", files}};
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write manifest: " + path);
        out << to_json().dump(2) << '\n';
    }
};

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

}  // namespace corrprop
