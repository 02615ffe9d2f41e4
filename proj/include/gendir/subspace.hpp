#pragma once

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gendir/aggregate.hpp"
#include "gendir/error.hpp"

namespace gendir::subspace {

/// Stacked deviations from pair centres: rows 2j and 2j+1 are w_f - c_j and w_m - c_j.
struct DifferenceMatrix {
    Eigen::MatrixXd rows;
    std::vector<std::string> pair_keys;
};

struct EmbeddingPair {
    aggregate::AveragedEmbedding female;
    aggregate::AveragedEmbedding male;
};

inline DifferenceMatrix build_difference_matrix(std::span<const EmbeddingPair> pairs) {
    if (pairs.size() < 2) throw ValidationError("difference matrix: need at least two pairs");
    const auto dim = pairs.front().female.vector.size();
    if (dim == 0) throw ValidationError("difference matrix: empty embeddings");

    DifferenceMatrix out;
    out.rows.resize(static_cast<Eigen::Index>(2 * pairs.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const auto& f = pairs[j].female.vector;
        const auto& m = pairs[j].male.vector;
        if (f.size() != dim || m.size() != dim) {
            throw ValidationError("difference matrix: dim mismatch in pair " + pairs[j].female.key + "/" +
                                  pairs[j].male.key);
        }
        for (std::size_t c = 0; c < dim; ++c) {
            // w_f - (w_f + w_m)/2 = (w_f - w_m)/2, so the two rows are exact negations.
            const double half = 0.5 * (f[c] - m[c]);
            out.rows(static_cast<Eigen::Index>(2 * j), static_cast<Eigen::Index>(c)) = half;
            out.rows(static_cast<Eigen::Index>(2 * j + 1), static_cast<Eigen::Index>(c)) = -half;
        }
        out.pair_keys.push_back(pairs[j].female.key + "|" + pairs[j].male.key);
    }
    return out;
}

struct PcaOptions {
    /// Singular values below `rank_tolerance * sigma_1` count as zero when forming
    /// ratios. Negative selects max(rows, dim) * FLT_EPSILON, the resolution of
    /// float32-stored embeddings.
    double rank_tolerance = -1.0;
};

struct PcaResult {
    /// k x dim, orthonormal rows, descending singular value.
    Eigen::MatrixXd components;
    /// sigma_i^2 / sum sigma^2 over all min(rows, dim) singular values.
    std::vector<double> explained_variance_ratios;
    std::vector<double> singular_values;
};

/// Flips `v` so its largest-magnitude coordinate (first on ties) is positive.
inline void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        if (std::abs(v[i]) > std::abs(v[best])) best = i;
    }
    if (v[best] < 0) v = -v;
}

/// Uncentred PCA of the row matrix via SVD.
inline PcaResult pca(const Eigen::MatrixXd& matrix, std::size_t k, PcaOptions options = {}) {
    if (matrix.rows() < 2) throw ValidationError("pca: need at least two rows");
    if (k == 0) throw ValidationError("pca: k must be at least 1");
    if (!matrix.allFinite()) throw ValidationError("pca: non-finite input");
    const auto n_values = static_cast<std::size_t>(std::min(matrix.rows(), matrix.cols()));
    if (k > n_values) throw ValidationError("pca: k exceeds min(rows, dim)");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix, Eigen::ComputeThinV);
    const Eigen::VectorXd& sigma = svd.singularValues();
    if (sigma.size() == 0 || sigma[0] == 0.0) throw ValidationError("pca: matrix has rank 0");

    const double tol_rel = options.rank_tolerance >= 0.0
                               ? options.rank_tolerance
                               : static_cast<double>(std::max(matrix.rows(), matrix.cols())) * FLT_EPSILON;
    const double cutoff = tol_rel * sigma[0];

    PcaResult out;
    double total = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double s = sigma[i] > cutoff || i == 0 ? sigma[i] : 0.0;
        out.singular_values.push_back(s);
        total += s * s;
    }
    for (double s : out.singular_values) out.explained_variance_ratios.push_back(s * s / total);

    out.components.resize(static_cast<Eigen::Index>(k), matrix.cols());
    for (std::size_t i = 0; i < k; ++i) {
        Eigen::VectorXd v = svd.matrixV().col(static_cast<Eigen::Index>(i));
        canonicalize_sign(v);
        out.components.row(static_cast<Eigen::Index>(i)) = v.transpose();
    }
    return out;
}

enum class DirectionMode { first, second, avg };

inline std::string_view to_string(DirectionMode m) {
    switch (m) {
        case DirectionMode::first: return "first";
        case DirectionMode::second: return "second";
        case DirectionMode::avg: return "avg";
    }
    return "?";
}

inline DirectionMode parse_mode(std::string_view s) {
    if (s == "first") return DirectionMode::first;
    if (s == "second") return DirectionMode::second;
    if (s == "avg") return DirectionMode::avg;
    throw ValidationError("unknown direction mode '" + std::string(s) + "'");
}

inline constexpr std::string_view kSignConvention = "positive=female";

struct GenderDirection {
    std::vector<double> vector;
    DirectionMode mode = DirectionMode::first;
    std::vector<double> explained_variance_ratios;
    std::string sign_convention = std::string(kSignConvention);
};

inline GenderDirection select_direction(const PcaResult& pca_result, DirectionMode mode) {
    const auto& pcs = pca_result.components;
    const Eigen::Index need = mode == DirectionMode::first ? 1 : 2;
    if (pcs.rows() < need) throw ValidationError("select_direction: mode needs " + std::to_string(need) + " PCs");

    Eigen::VectorXd v;
    switch (mode) {
        case DirectionMode::first: v = pcs.row(0).transpose(); break;
        case DirectionMode::second: v = pcs.row(1).transpose(); break;
        case DirectionMode::avg: v = 0.5 * (pcs.row(0) + pcs.row(1)).transpose(); break;
    }
    v.normalize();
    GenderDirection g;
    g.vector.assign(v.data(), v.data() + v.size());
    g.mode = mode;
    g.explained_variance_ratios = pca_result.explained_variance_ratios;
    return g;
}

namespace detail {

inline double mean_dot(std::span<const std::vector<double>> embeddings, const std::vector<double>& g) {
    if (embeddings.empty()) throw ValidationError("align_sign: no reference embeddings");
    double total = 0.0;
    for (const auto& e : embeddings) {
        if (e.size() != g.size()) throw ValidationError("align_sign: dim mismatch");
        double d = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) d += e[i] * g[i];
        total += d;
    }
    return total / static_cast<double>(embeddings.size());
}

} // namespace detail

/// Orients the direction so female words project higher than male words.
inline GenderDirection align_sign(GenderDirection direction, std::span<const std::vector<double>> female,
                                  std::span<const std::vector<double>> male) {
    if (detail::mean_dot(female, direction.vector) < detail::mean_dot(male, direction.vector)) {
        for (auto& x : direction.vector) x = -x;
    }
    return direction;
}

inline PcaResult random_baseline(std::span<const EmbeddingPair> random_pairs, std::size_t k = 1,
                                 PcaOptions options = {}) {
    return pca(build_difference_matrix(random_pairs).rows, k, options);
}

} // namespace gendir::subspace
