#pragma once

// File handshake between the numeric core and a model extractor.
//
//   <dir>/manifest.json   version, model_id, dim, dtype "f32le", rows, records
//   <dir>/vectors.bin     row-major little-endian float32, rows x dim
//   <dir>/results.jsonl   (probe results only) one object per job
//
// Probe jobs are JSON Lines with the fields of ProbeJob.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "gendir/error.hpp"

namespace gendir::io {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kDtype = "f32le";

// ---------------------------------------------------------------------------
// Embedding dumps

struct DumpRecord {
    std::string key;
    std::size_t row_offset = 0;
    std::size_t row_count = 0;
};

class EmbeddingDump {
public:
    EmbeddingDump() = default;
    EmbeddingDump(std::string model_id, std::size_t dim) : model_id_(std::move(model_id)), dim_(dim) {
        if (dim_ == 0) throw ValidationError("dump: dim must be positive");
    }

    const std::string& model_id() const { return model_id_; }
    std::size_t dim() const { return dim_; }
    std::size_t rows() const { return dim_ ? data_.size() / dim_ : 0; }
    const std::vector<DumpRecord>& records() const { return records_; }
    std::span<const float> data() const { return data_; }

    bool contains(const std::string& key) const { return index_.count(key) != 0; }

    /// Appends `values` (row_count x dim, row-major) under a new key.
    void add(const std::string& key, std::span<const float> values) {
        if (dim_ == 0) throw ValidationError("dump: dim not set");
        if (values.empty() || values.size() % dim_ != 0) {
            throw ValidationError("dump: record '" + key + "' has " + std::to_string(values.size()) +
                                  " values, not a positive multiple of dim " + std::to_string(dim_));
        }
        if (contains(key)) throw ValidationError("dump: duplicate key '" + key + "'");
        index_.emplace(key, records_.size());
        records_.push_back({key, rows(), values.size() / dim_});
        data_.insert(data_.end(), values.begin(), values.end());
    }

    void add(const std::string& key, std::span<const double> values) {
        std::vector<float> f(values.begin(), values.end());
        add(key, std::span<const float>(f));
    }

    const DumpRecord& record(const std::string& key) const {
        const auto it = index_.find(key);
        if (it == index_.end()) throw ValidationError("dump: missing key '" + key + "'");
        return records_[it->second];
    }

    /// All rows of a record, row-major.
    std::span<const float> values(const std::string& key) const {
        const auto& r = record(key);
        return std::span<const float>(data_).subspan(r.row_offset * dim_, r.row_count * dim_);
    }

    /// One row of a record.
    std::span<const float> row(const std::string& key, std::size_t i = 0) const {
        const auto& r = record(key);
        if (i >= r.row_count) throw ValidationError("dump: row index out of range for '" + key + "'");
        return std::span<const float>(data_).subspan((r.row_offset + i) * dim_, dim_);
    }

    /// Row of a record widened to double.
    std::vector<double> vector(const std::string& key, std::size_t i = 0) const {
        const auto r = row(key, i);
        return {r.begin(), r.end()};
    }

    /// Rebuilds a dump from parsed parts; used by the reader.
    static EmbeddingDump from_parts(std::string model_id, std::size_t dim, std::vector<DumpRecord> records,
                                    std::vector<float> data) {
        EmbeddingDump d;
        d.model_id_ = std::move(model_id);
        d.dim_ = dim;
        d.records_ = std::move(records);
        d.data_ = std::move(data);
        for (std::size_t i = 0; i < d.records_.size(); ++i) {
            if (!d.index_.emplace(d.records_[i].key, i).second) {
                throw ValidationError("dump: duplicate key '" + d.records_[i].key + "'");
            }
        }
        return d;
    }

private:
    std::string model_id_;
    std::size_t dim_ = 0;
    std::vector<DumpRecord> records_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<float> data_;
};

/// Throws ValidationError naming the first offending record.
inline void validate_dump(const EmbeddingDump& dump) {
    if (dump.dim() == 0) throw ValidationError("dump: dim must be positive");
    if (dump.data().size() % dump.dim() != 0) throw ValidationError("dump: data size not a multiple of dim");
    const std::size_t rows = dump.rows();
    for (const auto& r : dump.records()) {
        if (r.row_count == 0) throw ValidationError("dump: record '" + r.key + "' is empty");
        if (r.row_offset > rows || r.row_count > rows - r.row_offset) {
            throw ValidationError("dump: range overflow in record '" + r.key + "' (rows " +
                                  std::to_string(r.row_offset) + "+" + std::to_string(r.row_count) + " > " +
                                  std::to_string(rows) + ")");
        }
        const auto v = dump.data().subspan(r.row_offset * dump.dim(), r.row_count * dump.dim());
        for (float x : v) {
            if (!std::isfinite(x)) throw ValidationError("dump: non-finite value in record '" + r.key + "'");
        }
    }
}

namespace detail {

inline std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        v = ((v & 0xFF) << 24) | ((v & 0xFF00) << 8) | ((v >> 8) & 0xFF00) | (v >> 24);
    }
    return v;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
}

} // namespace detail

inline void write_dump(const std::filesystem::path& dir, const EmbeddingDump& dump) {
    validate_dump(dump);
    std::filesystem::create_directories(dir);

    nlohmann::ordered_json manifest;
    manifest["version"] = kSchemaVersion;
    manifest["model_id"] = dump.model_id();
    manifest["dim"] = dump.dim();
    manifest["dtype"] = kDtype;
    manifest["rows"] = dump.rows();
    auto records = nlohmann::ordered_json::array();
    for (const auto& r : dump.records()) {
        records.push_back({{"key", r.key}, {"row_offset", r.row_offset}, {"row_count", r.row_count}});
    }
    manifest["records"] = std::move(records);
    detail::write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::ofstream bin(dir / "vectors.bin", std::ios::binary | std::ios::trunc);
    if (!bin) throw Error("cannot write '" + (dir / "vectors.bin").string() + "'");
    std::vector<std::uint32_t> words(dump.data().size());
    for (std::size_t i = 0; i < words.size(); ++i) {
        words[i] = detail::to_le(std::bit_cast<std::uint32_t>(dump.data()[i]));
    }
    bin.write(reinterpret_cast<const char*>(words.data()), static_cast<std::streamsize>(words.size() * 4));
}

inline EmbeddingDump read_dump(const std::filesystem::path& dir) {
    std::ifstream mf(dir / "manifest.json", std::ios::binary);
    if (!mf) throw ValidationError("dump: cannot open '" + (dir / "manifest.json").string() + "'");
    nlohmann::json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dump: malformed manifest: ") + e.what());
    }

    std::vector<DumpRecord> records;
    std::size_t dim = 0, rows = 0;
    std::string model_id;
    try {
        if (!manifest.contains("version")) throw ValidationError("dump: manifest lacks version field");
        if (manifest.at("version").get<int>() != kSchemaVersion) {
            throw ValidationError("dump: unsupported schema version " + manifest.at("version").dump());
        }
        if (manifest.at("dtype").get<std::string>() != kDtype) {
            throw ValidationError("dump: unsupported dtype " + manifest.at("dtype").dump());
        }
        model_id = manifest.at("model_id").get<std::string>();
        dim = manifest.at("dim").get<std::size_t>();
        rows = manifest.at("rows").get<std::size_t>();
        for (const auto& r : manifest.at("records")) {
            records.push_back({r.at("key").get<std::string>(), r.at("row_offset").get<std::size_t>(),
                               r.at("row_count").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dump: malformed manifest: ") + e.what());
    }
    if (dim == 0) throw ValidationError("dump: dim must be positive");

    const auto bin_path = dir / "vectors.bin";
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(bin_path, ec);
    if (ec) throw ValidationError("dump: cannot open '" + bin_path.string() + "'");
    if (bytes != rows * dim * 4) {
        throw ValidationError("dump: vectors.bin holds " + std::to_string(bytes) + " bytes, manifest implies " +
                              std::to_string(rows * dim * 4));
    }
    std::vector<std::uint32_t> words(rows * dim);
    std::ifstream bin(bin_path, std::ios::binary);
    bin.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(bytes));
    std::vector<float> data(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) data[i] = std::bit_cast<float>(detail::to_le(words[i]));

    auto dump = EmbeddingDump::from_parts(std::move(model_id), dim, std::move(records), std::move(data));
    validate_dump(dump);
    return dump;
}

// ---------------------------------------------------------------------------
// Probe jobs

struct CaptureSpan {
    std::string label;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
};

struct ProbeJob {
    std::string id;
    std::string prompt;
    std::vector<CaptureSpan> capture_spans;
    std::vector<std::string> capture_logit_tokens;
    bool capture_next_token_logits = false;
};

inline void validate_job(const ProbeJob& job) {
    if (job.id.empty()) throw ValidationError("job: empty id");
    if (job.id.find('/') != std::string::npos) throw ValidationError("job '" + job.id + "': id contains '/'");
    std::set<std::string> labels;
    for (const auto& s : job.capture_spans) {
        if (s.char_start >= s.char_end || s.char_end > job.prompt.size()) {
            throw ValidationError("job '" + job.id + "': span '" + s.label + "' outside prompt");
        }
        if (!labels.insert(s.label).second) {
            throw ValidationError("job '" + job.id + "': duplicate label '" + s.label + "'");
        }
    }
}

inline nlohmann::ordered_json to_json(const ProbeJob& job) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = job.id;
    j["prompt"] = job.prompt;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& s : job.capture_spans) {
        spans.push_back({{"label", s.label}, {"char_start", s.char_start}, {"char_end", s.char_end}});
    }
    j["capture_spans"] = std::move(spans);
    j["capture_logit_tokens"] = job.capture_logit_tokens;
    j["capture_next_token_logits"] = job.capture_next_token_logits;
    return j;
}

namespace detail {

inline void check_version(const nlohmann::json& j, const std::string& what) {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion) {
        throw ValidationError(what + ": unsupported schema version " + j.at("schema_version").dump());
    }
}

} // namespace detail

inline ProbeJob job_from_json(const nlohmann::json& j) {
    ProbeJob job;
    try {
        detail::check_version(j, "job");
        job.id = j.at("id").get<std::string>();
        job.prompt = j.at("prompt").get<std::string>();
        for (const auto& s : j.at("capture_spans")) {
            job.capture_spans.push_back({s.at("label").get<std::string>(), s.at("char_start").get<std::size_t>(),
                                         s.at("char_end").get<std::size_t>()});
        }
        job.capture_logit_tokens = j.at("capture_logit_tokens").get<std::vector<std::string>>();
        job.capture_next_token_logits = j.at("capture_next_token_logits").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("job: malformed record: ") + e.what());
    }
    validate_job(job);
    return job;
}

/// Writes one job per line; ids must be unique within the file.
inline void write_probe_jobs(std::ostream& out, std::span<const ProbeJob> jobs) {
    std::set<std::string> ids;
    for (const auto& job : jobs) {
        validate_job(job);
        if (!ids.insert(job.id).second) throw ValidationError("jobs: duplicate id '" + job.id + "'");
        out << to_json(job).dump() << '\n';
    }
}

inline std::vector<ProbeJob> read_probe_jobs(std::istream& in) {
    std::vector<ProbeJob> jobs;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception&) {
            throw ValidationError("jobs: line " + std::to_string(lineno) + " is not valid JSON");
        }
        auto job = job_from_json(j);
        if (!ids.insert(job.id).second) throw ValidationError("jobs: duplicate id '" + job.id + "'");
        jobs.push_back(std::move(job));
    }
    return jobs;
}

inline std::vector<ProbeJob> read_probe_jobs(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return read_probe_jobs(in);
}

// ---------------------------------------------------------------------------
// Probe results

struct JobResult {
    std::string id;
    bool ok = true;
    std::string reason;
    /// Token -> logit at the position after the prompt.
    std::map<std::string, double> logits;
};

/// Results for one or more shards: per-job status plus span vectors keyed "id/label".
struct ProbeResultSet {
    std::map<std::string, JobResult> jobs;
    EmbeddingDump vectors;

    const JobResult& at(const std::string& id) const {
        const auto it = jobs.find(id);
        if (it == jobs.end()) throw ValidationError("results: missing job '" + id + "'");
        return it->second;
    }

    std::span<const float> span_vector(const std::string& id, const std::string& label) const {
        return vectors.row(id + "/" + label);
    }

    double logit(const std::string& id, const std::string& token) const {
        const auto& r = at(id);
        const auto it = r.logits.find(token);
        if (it == r.logits.end()) throw ValidationError("results: job '" + id + "' lacks logit for '" + token + "'");
        return it->second;
    }
};

inline std::string vector_key(const std::string& id, const std::string& label) { return id + "/" + label; }

inline nlohmann::ordered_json to_json(const JobResult& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = r.id;
    j["status"] = r.ok ? "ok" : "failed";
    if (!r.ok) j["reason"] = r.reason;
    nlohmann::ordered_json logits = nlohmann::ordered_json::object();
    for (const auto& [tok, v] : r.logits) logits[tok] = v;
    j["logits"] = std::move(logits);
    return j;
}

/// Writes a result shard directory: results.jsonl plus the span-vector dump.
inline void write_probe_results(const std::filesystem::path& dir, std::span<const JobResult> results,
                                const EmbeddingDump& vectors) {
    std::filesystem::create_directories(dir);
    std::string text;
    for (const auto& r : results) text += to_json(r).dump() + "\n";
    detail::write_text(dir / "results.jsonl", text);
    write_dump(dir, vectors);
}

inline void read_result_lines(std::istream& in, std::map<std::string, JobResult>& into) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        JobResult r;
        try {
            const auto j = nlohmann::json::parse(line);
            detail::check_version(j, "results");
            r.id = j.at("id").get<std::string>();
            const auto status = j.at("status").get<std::string>();
            if (status != "ok" && status != "failed") throw ValidationError("results: bad status '" + status + "'");
            r.ok = status == "ok";
            if (j.contains("reason")) r.reason = j.at("reason").get<std::string>();
            if (j.contains("logits")) {
                for (const auto& [tok, v] : j.at("logits").items()) {
                    const double x = v.get<double>();
                    if (!std::isfinite(x)) throw ValidationError("results: non-finite logit in '" + r.id + "'");
                    r.logits.emplace(tok, x);
                }
            }
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("results: line " + std::to_string(lineno) + ": " + e.what());
        }
        const auto id = r.id;
        if (!into.emplace(id, std::move(r)).second) throw ValidationError("results: duplicate job id '" + id + "'");
    }
}

/// Reads and merges result shard directories.
inline ProbeResultSet read_probe_results(std::span<const std::filesystem::path> shard_dirs) {
    ProbeResultSet set;
    std::vector<EmbeddingDump> dumps;
    for (const auto& dir : shard_dirs) {
        std::ifstream in(dir / "results.jsonl", std::ios::binary);
        if (!in) throw ValidationError("results: cannot open '" + (dir / "results.jsonl").string() + "'");
        read_result_lines(in, set.jobs);
        if (std::filesystem::exists(dir / "manifest.json")) dumps.push_back(read_dump(dir));
    }
    if (dumps.size() == 1) {
        set.vectors = std::move(dumps.front());
    } else if (!dumps.empty()) {
        EmbeddingDump merged(dumps.front().model_id(), dumps.front().dim());
        for (const auto& d : dumps) {
            if (d.dim() != merged.dim()) throw ValidationError("results: shards disagree on dim");
            for (const auto& r : d.records()) merged.add(r.key, d.values(r.key));
        }
        set.vectors = std::move(merged);
    }
    return set;
}

/// Marks jobs whose requested spans or logit tokens are absent as failed, then
/// throws IncompleteResultsError if any job is missing or failed.
inline void require_complete(std::span<const ProbeJob> jobs, const ProbeResultSet& results) {
    std::size_t missing = 0;
    std::string first;
    for (const auto& job : jobs) {
        bool good = false;
        const auto it = results.jobs.find(job.id);
        if (it != results.jobs.end() && it->second.ok) {
            good = true;
            for (const auto& tok : job.capture_logit_tokens) {
                if (!it->second.logits.count(tok)) good = false;
            }
            for (const auto& s : job.capture_spans) {
                if (!results.vectors.contains(vector_key(job.id, s.label))) good = false;
            }
        }
        if (!good) {
            if (missing == 0) first = job.id;
            ++missing;
        }
    }
    if (missing) throw IncompleteResultsError(missing, first);
}

} // namespace gendir::io
