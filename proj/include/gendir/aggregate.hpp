#pragma once

// Three-level averaging: subtokens -> occurrences -> contexts.
// All sums are accumulated in double regardless of the storage type.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gendir/embedding_io.hpp"
#include "gendir/error.hpp"

namespace gendir::aggregate {

struct AveragedEmbedding {
    std::string key;
    std::vector<double> vector;
    std::size_t context_count = 0;
};

/// Column-wise mean of a row-major `rows x dim` block.
template <class T>
std::vector<double> mean_rows(std::span<const T> values, std::size_t dim) {
    if (dim == 0) throw ValidationError("average: dim must be positive");
    if (values.empty() || values.size() % dim != 0) throw ValidationError("average: need at least one row");
    const std::size_t rows = values.size() / dim;
    std::vector<double> acc(dim, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < dim; ++c) acc[c] += static_cast<double>(values[r * dim + c]);
    }
    for (auto& a : acc) a /= static_cast<double>(rows);
    return acc;
}

/// Mean over the subtokens of one multiply-tokenized word.
template <class T>
std::vector<double> average_subtokens(std::span<const T> token_vectors, std::size_t dim) {
    return mean_rows(token_vectors, dim);
}

/// Mean over the occurrences of a word within one sentence.
template <class T>
std::vector<double> average_occurrences(std::span<const T> occurrence_vectors, std::size_t dim) {
    return mean_rows(occurrence_vectors, dim);
}

template <class T>
AveragedEmbedding average_contexts(std::string key, std::span<const T> context_vectors, std::size_t dim) {
    auto v = mean_rows(context_vectors, dim);
    for (double x : v) {
        if (!std::isfinite(x)) throw ValidationError("average: non-finite mean for '" + key + "'");
    }
    return {std::move(key), std::move(v), context_vectors.size() / dim};
}

/// Aggregation key of a job: the id up to the first '#', or the whole id.
inline std::string group_of(const std::string& job_id) { return job_id.substr(0, job_id.find('#')); }

/// Averages span vectors of probe results into one embedding per group.
/// Each job contributes one context: the mean of its captured spans whose
/// label starts with `label_prefix`.
inline std::vector<AveragedEmbedding> aggregate_results(std::span<const io::ProbeJob> jobs,
                                                        const io::ProbeResultSet& results,
                                                        const std::string& label_prefix = "") {
    io::require_complete(jobs, results);
    const std::size_t dim = results.vectors.dim();

    std::map<std::string, std::vector<double>> contexts;  // group -> concatenated context rows
    for (const auto& job : jobs) {
        std::vector<float> occurrences;
        for (const auto& s : job.capture_spans) {
            if (s.label.rfind(label_prefix, 0) != 0) continue;
            const auto v = results.span_vector(job.id, s.label);
            occurrences.insert(occurrences.end(), v.begin(), v.end());
        }
        if (occurrences.empty()) continue;
        const auto ctx = average_occurrences(std::span<const float>(occurrences), dim);
        auto& rows = contexts[group_of(job.id)];
        rows.insert(rows.end(), ctx.begin(), ctx.end());
    }

    std::vector<AveragedEmbedding> out;
    out.reserve(contexts.size());
    for (auto& [key, rows] : contexts) out.push_back(average_contexts(key, std::span<const double>(rows), dim));
    return out;
}

inline io::EmbeddingDump to_dump(const std::string& model_id, std::span<const AveragedEmbedding> embeddings) {
    if (embeddings.empty()) throw ValidationError("aggregate: nothing to write");
    io::EmbeddingDump dump(model_id, embeddings.front().vector.size());
    for (const auto& e : embeddings) dump.add(e.key, std::span<const double>(e.vector));
    return dump;
}

} // namespace gendir::aggregate
