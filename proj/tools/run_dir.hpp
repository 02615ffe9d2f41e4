#pragma once

// Run-directory plumbing for the CLI: fixed layout, input hashing and run.json.

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "gendir/error.hpp"

namespace gendir::cli {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kRunSchemaVersion = 1;

inline std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + p.string() + "'");
    return {std::istreambuf_iterator<char>(in), {}};
}

inline void write_file(const fs::path& p, const std::string& text) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    out << text;
}

inline std::string sha256_hex(const std::string& bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

/// One run directory: jobs/, results/, dumps/, reports/ and run.json.
class RunDir {
public:
    RunDir(fs::path root, std::uint64_t seed) : root_(std::move(root)), seed_(seed) {
        for (const char* sub : {"jobs", "results", "dumps", "reports"}) fs::create_directories(root_ / sub);
        const auto log = root_ / "run.json";
        if (fs::exists(log)) {
            try {
                run_ = nlohmann::ordered_json::parse(read_file(log));
            } catch (const nlohmann::json::exception& e) {
                throw ValidationError("run.json: " + std::string(e.what()));
            }
        } else {
            run_["version"] = kRunSchemaVersion;
            run_["tool"] = {{"name", "gendir"}, {"version", kToolVersion}};
            run_["seed"] = seed;
            run_["steps"] = nlohmann::ordered_json::object();
        }
    }

    const fs::path& root() const { return root_; }
    fs::path jobs(const std::string& f) const { return root_ / "jobs" / f; }
    fs::path results(const std::string& f) const { return root_ / "results" / f; }
    fs::path dumps(const std::string& f) const { return root_ / "dumps" / f; }
    fs::path reports(const std::string& f) const { return root_ / "reports" / f; }

    /// Path as recorded in run.json: relative inside the run directory, else the file name.
    std::string display(const fs::path& p) const {
        const auto abs = fs::weakly_canonical(fs::absolute(p));
        const auto base = fs::weakly_canonical(fs::absolute(root_));
        const auto rel = abs.lexically_relative(base);
        if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
        return "external/" + abs.filename().string();
    }

    /// Records one invocation. Inputs are hashed file by file (directories expanded).
    void record(const std::string& step, const std::vector<fs::path>& inputs, nlohmann::ordered_json params,
                const std::vector<fs::path>& outputs, const std::vector<std::string>& warnings = {}) {
        nlohmann::ordered_json s;
        s["seed"] = seed_;
        auto in = nlohmann::ordered_json::array();
        for (const auto& p : inputs) {
            for (const auto& f : expand(p)) in.push_back({{"path", display(f)}, {"sha256", sha256_hex(read_file(f))}});
        }
        s["inputs"] = std::move(in);
        s["params"] = std::move(params);
        auto out = nlohmann::ordered_json::array();
        for (const auto& p : outputs) out.push_back(display(p));
        s["outputs"] = std::move(out);
        if (!warnings.empty()) s["warnings"] = warnings;
        run_["steps"][step] = std::move(s);
        write_file(root_ / "run.json", run_.dump(2) + "\n");
    }

private:
    static std::vector<fs::path> expand(const fs::path& p) {
        if (!fs::is_directory(p)) return {p};
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(p)) {
            if (e.is_regular_file()) files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        return files;
    }

    fs::path root_;
    std::uint64_t seed_;
    nlohmann::ordered_json run_;
};

} // namespace gendir::cli
