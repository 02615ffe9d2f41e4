#pragma once

// Binary gender classification of first-name embeddings, used to check that a
// one-dimensional projection keeps the gender signal of the full embedding.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "gendir/error.hpp"
#include "gendir/rng.hpp"
#include "gendir/roster.hpp"
#include "gendir/stats.hpp"

namespace gendir::validate {

enum class GenderLabel : int { Male = 0, Female = 1 };

/// Female iff strictly above 50%; exactly 50 is Male.
inline GenderLabel binarize_gender(double pct_female) {
    return pct_female > 50.0 ? GenderLabel::Female : GenderLabel::Male;
}

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Stratified split by (race/ethnicity x binary label). Each stratum sends
/// floor(f * n) to train; the remaining floor(f * N) - sum floors slots go to
/// the strata with the largest fractional parts (earlier stratum on ties).
/// Index lists are returned ascending.
inline Split split_train_val(std::span<const NameRecord> records, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError("split: train fraction must lie in (0, 1)");
    }
    constexpr double eps = 1e-9;  // keeps 0.7 * 470 at 329 despite binary rounding

    std::vector<std::vector<std::size_t>> strata(kRaces.size() * 2);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto s = static_cast<std::size_t>(records[i].race_ethnicity) * 2 +
                       static_cast<std::size_t>(binarize_gender(records[i].pct_female));
        strata[s].push_back(i);
    }

    std::vector<std::size_t> take(strata.size());
    std::vector<double> frac(strata.size());
    std::size_t assigned = 0;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        const double exact = train_fraction * static_cast<double>(strata[s].size());
        take[s] = static_cast<std::size_t>(std::floor(exact + eps));
        frac[s] = exact - static_cast<double>(take[s]);
        assigned += take[s];
    }
    const auto target = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(records.size()) + eps));
    std::vector<std::size_t> order(strata.size());
    for (std::size_t s = 0; s < order.size(); ++s) order[s] = s;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return frac[a] > frac[b]; });
    for (std::size_t k = 0; assigned < target && k < order.size(); ++k) {
        if (take[order[k]] < strata[order[k]].size()) {
            ++take[order[k]];
            ++assigned;
        }
    }

    Split out;
    for (std::size_t s = 0; s < strata.size(); ++s) {
        auto members = strata[s];
        Rng rng(seed, "split:" + std::to_string(s));
        rng.shuffle(members);
        out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take[s]));
        out.val.insert(out.val.end(), members.begin() + static_cast<std::ptrdiff_t>(take[s]), members.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    return out;
}

// ---------------------------------------------------------------------------
// Classifiers

struct LogRegOptions {
    double l2 = 1e-4;
    int iterations = 2000;
    /// Non-positive picks 1/L with L = 0.25 * max ||[x, 1]||^2 + l2.
    double learning_rate = 0.0;
};

struct LogisticRegression {
    Eigen::VectorXd weights;
    double bias = 0.0;

    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const {
        const Eigen::ArrayXd z = ((x * weights).array() + bias);
        return (1.0 / (1.0 + (-z).exp())).matrix();
    }

    std::vector<int> predict(const Eigen::MatrixXd& x) const {
        const auto p = predict_proba(x);
        std::vector<int> out(static_cast<std::size_t>(p.size()));
        for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = p[i] > 0.5 ? 1 : 0;
        return out;
    }
};

namespace detail {

inline void check_xy(const Eigen::MatrixXd& x, std::span<const int> y) {
    if (x.rows() == 0) throw ValidationError("classifier: no training rows");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ValidationError("classifier: label count mismatch");
    for (int v : y) {
        if (v != 0 && v != 1) throw ValidationError("classifier: labels must be 0 or 1");
    }
}

} // namespace detail

/// Full-batch gradient descent on mean log-loss + (l2 / 2) ||w||^2, from zero.
inline LogisticRegression train_logreg(const Eigen::MatrixXd& x, std::span<const int> y, LogRegOptions options = {}) {
    detail::check_xy(x, y);
    const auto n = static_cast<double>(x.rows());
    Eigen::VectorXd target(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) target[i] = y[static_cast<std::size_t>(i)];

    double lr = options.learning_rate;
    if (lr <= 0.0) {
        const double max_norm2 = x.rowwise().squaredNorm().maxCoeff() + 1.0;
        lr = 1.0 / (0.25 * max_norm2 + options.l2);
    }

    LogisticRegression model{Eigen::VectorXd::Zero(x.cols()), 0.0};
    for (int it = 0; it < options.iterations; ++it) {
        const Eigen::VectorXd residual = model.predict_proba(x) - target;
        const Eigen::VectorXd grad_w = x.transpose() * residual / n + options.l2 * model.weights;
        const double grad_b = residual.sum() / n;
        model.weights -= lr * grad_w;
        model.bias -= lr * grad_b;
    }
    return model;
}

struct GaussianNB {
    Eigen::MatrixXd means;      // 2 x f
    Eigen::MatrixXd variances;  // 2 x f
    std::array<double, 2> log_priors{};

    /// Per-row class log-likelihood plus log prior, columns (Male, Female).
    Eigen::MatrixXd joint_log_likelihood(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd out(x.rows(), 2);
        for (int c = 0; c < 2; ++c) {
            const Eigen::ArrayXd var = variances.row(c).transpose().array();
            const double log_norm = -0.5 * (Eigen::log(2.0 * std::numbers::pi * var)).sum();
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const Eigen::ArrayXd d = x.row(i).transpose().array() - means.row(c).transpose().array();
                out(i, c) = log_priors[static_cast<std::size_t>(c)] + log_norm - 0.5 * (d * d / var).sum();
            }
        }
        return out;
    }

    /// Posterior class probabilities, rows summing to one.
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const {
        Eigen::MatrixXd jll = joint_log_likelihood(x);
        for (Eigen::Index i = 0; i < jll.rows(); ++i) {
            const double m = jll.row(i).maxCoeff();
            const Eigen::ArrayXd e = (jll.row(i).array() - m).exp();
            jll.row(i) = (e / e.sum()).matrix().transpose();
        }
        return jll;
    }

    /// Argmax; ties go to Male.
    std::vector<int> predict(const Eigen::MatrixXd& x) const {
        const auto jll = joint_log_likelihood(x);
        std::vector<int> out(static_cast<std::size_t>(x.rows()));
        for (Eigen::Index i = 0; i < x.rows(); ++i) out[static_cast<std::size_t>(i)] = jll(i, 1) > jll(i, 0) ? 1 : 0;
        return out;
    }
};

inline GaussianNB train_gnb(const Eigen::MatrixXd& x, std::span<const int> y, double var_floor = 1e-9) {
    detail::check_xy(x, y);
    GaussianNB model;
    model.means = Eigen::MatrixXd::Zero(2, x.cols());
    model.variances = Eigen::MatrixXd::Zero(2, x.cols());
    std::array<double, 2> counts{};
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int c = y[static_cast<std::size_t>(i)];
        model.means.row(c) += x.row(i);
        counts[static_cast<std::size_t>(c)] += 1.0;
    }
    if (counts[0] == 0.0 || counts[1] == 0.0) throw ValidationError("gnb: both classes must be present");
    for (int c = 0; c < 2; ++c) model.means.row(c) /= counts[static_cast<std::size_t>(c)];
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const int c = y[static_cast<std::size_t>(i)];
        model.variances.row(c) += (x.row(i) - model.means.row(c)).array().square().matrix();
    }
    for (int c = 0; c < 2; ++c) {
        model.variances.row(c) /= counts[static_cast<std::size_t>(c)];
        model.variances.row(c) = model.variances.row(c).cwiseMax(var_floor);
        model.log_priors[static_cast<std::size_t>(c)] = std::log(counts[static_cast<std::size_t>(c)] / static_cast<double>(x.rows()));
    }
    return model;
}

template <class Model>
double evaluate(const Model& model, const Eigen::MatrixXd& x, std::span<const int> y) {
    if (static_cast<std::size_t>(x.rows()) != y.size() || y.empty()) {
        throw ValidationError("evaluate: label count mismatch");
    }
    const auto pred = model.predict(x);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i) correct += pred[i] == y[i];
    return static_cast<double>(correct) / static_cast<double>(y.size());
}

// ---------------------------------------------------------------------------
// Protocol

enum class FeatureKind { full_embedding, dot_g1, dot_g2, dot_gavg, dot_random };
enum class ModelKind { logreg, gnb };

inline constexpr std::array<FeatureKind, 5> kFeatureKinds = {FeatureKind::full_embedding, FeatureKind::dot_g1,
                                                             FeatureKind::dot_g2, FeatureKind::dot_gavg,
                                                             FeatureKind::dot_random};

inline std::string_view to_string(FeatureKind f) {
    switch (f) {
        case FeatureKind::full_embedding: return "full_embedding";
        case FeatureKind::dot_g1: return "dot_g1";
        case FeatureKind::dot_g2: return "dot_g2";
        case FeatureKind::dot_gavg: return "dot_gavg";
        case FeatureKind::dot_random: return "dot_random";
    }
    return "?";
}

inline std::string_view to_string(ModelKind m) { return m == ModelKind::logreg ? "logreg" : "gnb"; }

/// Directions available as projection features; absent ones are skipped.
struct DirectionSet {
    std::optional<std::vector<double>> first, second, avg, random;

    const std::optional<std::vector<double>>& get(FeatureKind f) const {
        switch (f) {
            case FeatureKind::dot_g1: return first;
            case FeatureKind::dot_g2: return second;
            case FeatureKind::dot_gavg: return avg;
            case FeatureKind::dot_random: return random;
            default: break;
        }
        throw ValidationError("no direction for feature " + std::string(to_string(f)));
    }
};

/// Full embeddings, or their raw (unstandardised) projection on one direction.
inline Eigen::MatrixXd build_features(const Eigen::MatrixXd& embeddings, FeatureKind kind, const DirectionSet& dirs) {
    if (kind == FeatureKind::full_embedding) return embeddings;
    const auto& g = dirs.get(kind);
    if (!g) throw ValidationError("missing direction for feature " + std::string(to_string(kind)));
    if (static_cast<Eigen::Index>(g->size()) != embeddings.cols()) throw ValidationError("direction dim mismatch");
    const Eigen::Map<const Eigen::VectorXd> gv(g->data(), static_cast<Eigen::Index>(g->size()));
    return embeddings * gv;
}

struct ClassifierRun {
    FeatureKind feature;
    ModelKind model;
    std::uint64_t seed;
    double accuracy;
};

struct ProtocolRow {
    FeatureKind feature;
    ModelKind model;
    std::vector<double> accuracies;
    stats::MeanStd summary;
};

struct ProtocolOptions {
    double train_fraction = 0.7;
    LogRegOptions logreg{};
    double gnb_var_floor = 1e-9;
};

/// Trains and scores both classifiers on every available feature for each seed.
/// `embeddings` row i belongs to `roster[i]`.
inline std::vector<ProtocolRow> run_protocol(std::span<const NameRecord> roster, const Eigen::MatrixXd& embeddings,
                                             const DirectionSet& dirs, std::span<const std::uint64_t> seeds,
                                             const ProtocolOptions& options = {},
                                             std::vector<ClassifierRun>* runs = nullptr) {
    if (static_cast<std::size_t>(embeddings.rows()) != roster.size()) {
        throw ValidationError("protocol: embedding rows do not match roster");
    }
    std::vector<int> labels(roster.size());
    for (std::size_t i = 0; i < roster.size(); ++i) labels[i] = static_cast<int>(binarize_gender(roster[i].pct_female));

    std::vector<ProtocolRow> rows;
    for (auto feature : kFeatureKinds) {
        if (feature != FeatureKind::full_embedding && !dirs.get(feature)) continue;
        const auto x = build_features(embeddings, feature, dirs);
        for (auto model : {ModelKind::logreg, ModelKind::gnb}) rows.push_back({feature, model, {}, {}});
        auto& lr_row = rows[rows.size() - 2];
        auto& nb_row = rows[rows.size() - 1];

        for (auto seed : seeds) {
            const auto split = split_train_val(roster, options.train_fraction, seed);
            auto gather = [&](const std::vector<std::size_t>& idx, Eigen::MatrixXd& xs, std::vector<int>& ys) {
                xs.resize(static_cast<Eigen::Index>(idx.size()), x.cols());
                ys.resize(idx.size());
                for (std::size_t k = 0; k < idx.size(); ++k) {
                    xs.row(static_cast<Eigen::Index>(k)) = x.row(static_cast<Eigen::Index>(idx[k]));
                    ys[k] = labels[idx[k]];
                }
            };
            Eigen::MatrixXd xt, xv;
            std::vector<int> yt, yv;
            gather(split.train, xt, yt);
            gather(split.val, xv, yv);

            const double acc_lr = evaluate(train_logreg(xt, yt, options.logreg), xv, yv);
            const double acc_nb = evaluate(train_gnb(xt, yt, options.gnb_var_floor), xv, yv);
            lr_row.accuracies.push_back(acc_lr);
            nb_row.accuracies.push_back(acc_nb);
            if (runs) {
                runs->push_back({feature, ModelKind::logreg, seed, acc_lr});
                runs->push_back({feature, ModelKind::gnb, seed, acc_nb});
            }
        }
        lr_row.summary = stats::mean_std(lr_row.accuracies);
        nb_row.summary = stats::mean_std(nb_row.accuracies);
    }
    return rows;
}

} // namespace gendir::validate
