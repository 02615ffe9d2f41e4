#pragma once

// The three studies: correlation with real-world statistics, occupational
// context shift, and downstream occupation-prediction bias.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gendir/corpus.hpp"
#include "gendir/embedding_io.hpp"
#include "gendir/error.hpp"
#include "gendir/occupations.hpp"
#include "gendir/probe.hpp"
#include "gendir/roster.hpp"
#include "gendir/stats.hpp"

namespace gendir::analysis {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Real-world statistics

/// Index i of the census bucket with edge_i <= p < edge_{i+1}; 100 maps to the last bucket.
inline std::size_t gender_bucket(double pct_female) {
    if (!(pct_female >= 0.0 && pct_female <= 100.0)) throw ValidationError("pct_female out of [0, 100]");
    for (std::size_t i = 0; i + 1 < kBucketEdges.size(); ++i) {
        if (pct_female < kBucketEdges[i + 1]) return i;
    }
    return kBucketEdges.size() - 2;
}

/// Affine map of each census bucket onto the matching decile.
inline double bucket_smooth(double pct_female) {
    const auto i = gender_bucket(pct_female);
    const double lo = kBucketEdges[i], hi = kBucketEdges[i + 1];
    return 10.0 * static_cast<double>(i) + 10.0 * (pct_female - lo) / (hi - lo);
}

struct CorrelationStudy {
    stats::CorrelationResult pct_vs_dot;
    stats::CorrelationResult pct_vs_prior;
    stats::CorrelationResult dot_vs_prior;
};

/// Pairwise Pearson between smoothed %female, DOT(n_wiki, g) and P_prior(Female).
inline CorrelationStudy correlation_study(std::span<const double> smoothed_pct, std::span<const double> dot_wiki,
                                          std::span<const double> p_prior) {
    return {stats::pearson(smoothed_pct, dot_wiki), stats::pearson(smoothed_pct, p_prior),
            stats::pearson(dot_wiki, p_prior)};
}

// ---------------------------------------------------------------------------
// Occupational context shift

inline constexpr std::string_view kBaselineCondition = "person";

struct ContextShiftRecord {
    std::string name;
    double pct_female = 0.0;
    std::string condition;  // occupation or "person"
    double dot_first = 0.0;
    double dot_second = 0.0;
    double p_female = 0.0;
    double p_prior = 0.0;
};

struct ContextShiftRow {
    std::size_t bucket = 0;
    std::string condition;
    std::size_t n = 0;
    double mean_delta_dot = 0.0;
    double median_delta_dot = 0.0;
    double mean_delta_p = 0.0;
    double median_delta_p = 0.0;
    bool baseline = false;
};

namespace detail {

inline double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? kNaN : s / static_cast<double>(v.size());
}

} // namespace detail

/// Per (gender bucket, condition): mean and median of dot_second - dot_first and
/// of p_female - p_prior. Occupation rows come first (bucket, then condition
/// order of first appearance); the "person" baseline rows follow.
inline std::vector<ContextShiftRow> context_shift_study(std::span<const ContextShiftRecord> records) {
    std::vector<std::string> conditions;
    for (const auto& r : records) {
        if (std::find(conditions.begin(), conditions.end(), r.condition) == conditions.end()) {
            conditions.push_back(r.condition);
        }
    }
    std::map<std::pair<std::size_t, std::string>, std::pair<std::vector<double>, std::vector<double>>> groups;
    for (const auto& r : records) {
        auto& g = groups[{gender_bucket(r.pct_female), r.condition}];
        g.first.push_back(r.dot_second - r.dot_first);
        g.second.push_back(r.p_female - r.p_prior);
    }

    std::vector<ContextShiftRow> rows, baseline;
    for (std::size_t b = 0; b + 1 < kBucketEdges.size(); ++b) {
        for (const auto& c : conditions) {
            const auto it = groups.find({b, c});
            if (it == groups.end()) continue;
            const auto& [dd, dp] = it->second;
            ContextShiftRow row{b, c, dd.size(), detail::mean(dd), detail::median(dd), detail::mean(dp),
                                detail::median(dp), c == kBaselineCondition};
            (row.baseline ? baseline : rows).push_back(row);
        }
    }
    rows.insert(rows.end(), baseline.begin(), baseline.end());
    return rows;
}

// ---------------------------------------------------------------------------
// Downstream occupation prediction

/// Fraction of biographies whose predicted occupation equals the true one.
inline double tpr(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
    if (predicted.size() != truth.size()) throw ValidationError("tpr: length mismatch");
    if (predicted.empty()) throw ValidationError("tpr: no predictions");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

/// Pearson of per-name TPR against per-name %female.
inline stats::CorrelationResult bias_coefficient(std::span<const double> tpr_per_name,
                                                 std::span<const double> pct_female) {
    return stats::pearson(pct_female, tpr_per_name);
}

/// Spearman of per-name mean DOT(n_bios, g) against mean P(true occupation).
inline stats::CorrelationResult internal_coefficient(std::span<const double> mean_dot,
                                                     std::span<const double> mean_p_true) {
    return stats::spearman(mean_dot, mean_p_true);
}

/// Spearman between bias and internal coefficients across occupations,
/// skipping occupations where either is undefined (NaN).
inline stats::CorrelationResult coefficient_agreement(std::span<const double> bias, std::span<const double> internal) {
    if (bias.size() != internal.size()) throw ValidationError("coefficient_agreement: length mismatch");
    std::vector<double> b, i;
    for (std::size_t k = 0; k < bias.size(); ++k) {
        if (std::isnan(bias[k]) || std::isnan(internal[k])) continue;
        b.push_back(bias[k]);
        i.push_back(internal[k]);
    }
    return stats::spearman(b, i);
}

inline constexpr std::string_view kAnonymizedName = "X";

/// Streams the (name x biography) prompts of the downstream task. Jobs are
/// ordered by biography (file order), then by name.
class DownstreamJobs {
public:
    DownstreamJobs(std::vector<std::string> names, std::vector<BiographySample> bios,
                   std::vector<std::string> occupations)
        : names_(std::move(names)), bios_(std::move(bios)), occupations_(std::move(occupations)),
          template_(corpus::occupation_prediction_prompt()) {
        for (const auto& b : bios_) {
            if (std::find(occupations_.begin(), occupations_.end(), b.occupation) == occupations_.end()) {
                throw ValidationError("bios: occupation '" + b.occupation + "' is not configured");
            }
        }
    }

    std::size_t count() const { return names_.size() * bios_.size(); }

    const std::vector<std::string>& names() const { return names_; }
    const std::vector<BiographySample>& bios() const { return bios_; }
    const std::vector<std::string>& occupations() const { return occupations_; }

    /// Calls fn(name_index, bio_index) for every job in order.
    void for_each(const std::function<void(std::size_t, std::size_t)>& fn) const {
        for (std::size_t b = 0; b < bios_.size(); ++b) {
            for (std::size_t n = 0; n < names_.size(); ++n) fn(n, b);
        }
    }

    std::string job_id(std::size_t name, std::size_t bio) const {
        return "ds|" + bios_[bio].occupation + "|" + std::to_string(bio) + "|" + names_[name];
    }

    io::ProbeJob make_job(std::size_t name, std::size_t bio) const {
        const auto p = corpus::instantiate_prompt(template_, names_[name], std::nullopt, bios_[bio].bio_text);
        io::ProbeJob job{job_id(name, bio), p.text, {}, occupations_, true};
        for (const auto& s : p.name_spans) job.capture_spans.push_back({s.label, s.span.start, s.span.end});
        return job;
    }

private:
    std::vector<std::string> names_;
    std::vector<BiographySample> bios_;
    std::vector<std::string> occupations_;
    corpus::PromptTemplate template_;
};

/// Number of jobs for a roster size and per-occupation biography counts.
inline std::size_t downstream_job_count(std::size_t names, std::span<const std::size_t> bios_per_occupation) {
    std::size_t total = 0;
    for (auto b : bios_per_occupation) total += b;
    return names * total;
}

struct NameOccupationStats {
    std::string name;
    double tpr = 0.0;
    double mean_dot = 0.0;
    double mean_p_true = 0.0;
};

struct DownstreamStats {
    /// occupation -> per-name stats in roster order.
    std::map<std::string, std::vector<NameOccupationStats>> per_occupation;
};

inline constexpr std::string_view kBiosCaptureLabel = "name_last";

/// TPR, mean DOT(n_bios, g) at the last name occurrence, and mean P(true
/// occupation) for every (occupation, name). Aborts on incomplete results.
inline DownstreamStats downstream_stats(const DownstreamJobs& jobs, const io::ProbeResultSet& results,
                                        std::span<const double> direction) {
    std::size_t missing = 0;
    std::string first_missing;
    jobs.for_each([&](std::size_t n, std::size_t b) {
        const auto id = jobs.job_id(n, b);
        const auto it = results.jobs.find(id);
        if (it == results.jobs.end() || !it->second.ok ||
            !results.vectors.contains(io::vector_key(id, std::string(kBiosCaptureLabel)))) {
            if (!missing++) first_missing = id;
        }
    });
    if (missing) throw IncompleteResultsError(missing, first_missing);

    const auto& occs = jobs.occupations();
    struct Acc {
        std::vector<std::size_t> pred, truth;
        double dot = 0.0, p = 0.0;
    };
    std::map<std::string, std::vector<Acc>> acc;
    for (const auto& o : occs) acc[o].resize(jobs.names().size());

    jobs.for_each([&](std::size_t n, std::size_t b) {
        const auto id = jobs.job_id(n, b);
        const auto& bio = jobs.bios()[b];
        const auto truth = static_cast<std::size_t>(std::find(occs.begin(), occs.end(), bio.occupation) - occs.begin());
        const auto dist = probe::occupation_distribution(results.at(id).logits, occs);
        auto& a = acc[bio.occupation][n];
        a.pred.push_back(dist.predicted);
        a.truth.push_back(truth);
        a.p += dist.probabilities[truth];
        a.dot += probe::project(results.span_vector(id, std::string(kBiosCaptureLabel)), direction);
    });

    DownstreamStats out;
    for (const auto& o : occs) {
        auto& list = out.per_occupation[o];
        for (std::size_t n = 0; n < jobs.names().size(); ++n) {
            const auto& a = acc[o][n];
            if (a.pred.empty()) continue;
            const double count = static_cast<double>(a.pred.size());
            list.push_back({jobs.names()[n], tpr(a.pred, a.truth), a.dot / count, a.p / count});
        }
        if (list.empty()) out.per_occupation.erase(o);
    }
    return out;
}

struct BiasReportRow {
    std::string occupation;
    double pct_female_bios = kNaN;
    double bias_coefficient = kNaN;
    double bias_p = kNaN;
    double bias_p_corrected = kNaN;
    double internal_coefficient = kNaN;
    double internal_p = kNaN;
    double internal_p_corrected = kNaN;
};

struct BiasReport {
    /// Sorted by descending bias coefficient; undefined coefficients last.
    std::vector<BiasReportRow> rows;
    std::optional<stats::CorrelationResult> agreement;
    std::vector<std::string> warnings;
};

/// Builds the per-occupation report. Holm correction runs separately over the
/// defined bias p-values and the defined internal p-values.
inline BiasReport bias_report(const DownstreamStats& ds, std::span<const NameRecord> roster,
                              std::span<const OccupationRecord> occupations) {
    std::map<std::string, double> pct;
    for (const auto& r : roster) pct[r.name] = r.pct_female;

    BiasReport report;
    for (const auto& o : occupations) {
        const auto it = ds.per_occupation.find(o.occupation);
        if (it == ds.per_occupation.end()) continue;
        BiasReportRow row;
        row.occupation = o.occupation;
        row.pct_female_bios = o.pct_female_bios;
        std::vector<double> x, t, d, p;
        for (const auto& s : it->second) {
            const auto pit = pct.find(s.name);
            if (pit == pct.end()) throw ValidationError("bias report: name '" + s.name + "' not in roster");
            x.push_back(pit->second);
            t.push_back(s.tpr);
            d.push_back(s.mean_dot);
            p.push_back(s.mean_p_true);
        }
        try {
            const auto r = bias_coefficient(t, x);
            row.bias_coefficient = r.coefficient;
            row.bias_p = r.p_value;
        } catch (const UndefinedCorrelation&) {
            report.warnings.push_back("bias coefficient undefined for '" + o.occupation + "' (constant TPR)");
        }
        try {
            const auto r = internal_coefficient(d, p);
            row.internal_coefficient = r.coefficient;
            row.internal_p = r.p_value;
        } catch (const UndefinedCorrelation&) {
            report.warnings.push_back("internal coefficient undefined for '" + o.occupation + "'");
        }
        report.rows.push_back(row);
    }

    auto correct = [&](double BiasReportRow::*raw, double BiasReportRow::*out) {
        std::vector<double> ps;
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < report.rows.size(); ++k) {
            if (!std::isnan(report.rows[k].*raw)) {
                ps.push_back(report.rows[k].*raw);
                idx.push_back(k);
            }
        }
        const auto adj = stats::holm_bonferroni(ps);
        for (std::size_t k = 0; k < idx.size(); ++k) report.rows[idx[k]].*out = adj[k];
    };
    correct(&BiasReportRow::bias_p, &BiasReportRow::bias_p_corrected);
    correct(&BiasReportRow::internal_p, &BiasReportRow::internal_p_corrected);

    std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
        if (std::isnan(a.bias_coefficient)) return false;
        if (std::isnan(b.bias_coefficient)) return true;
        return a.bias_coefficient > b.bias_coefficient;
    });

    std::vector<double> bias, internal;
    for (const auto& r : report.rows) {
        bias.push_back(r.bias_coefficient);
        internal.push_back(r.internal_coefficient);
    }
    try {
        report.agreement = coefficient_agreement(bias, internal);
    } catch (const Error& e) {
        report.warnings.push_back(std::string("coefficient agreement unavailable: ") + e.what());
    }
    return report;
}

struct AnonymizedBaseline {
    std::string occupation;
    double tpr = 0.0;
    double mean_dot = 0.0;
    double mean_p_true = 0.0;
};

/// Reference lines from the prompts whose name is replaced by "X".
inline std::vector<AnonymizedBaseline> anonymized_baseline(const DownstreamStats& anonymized) {
    std::vector<AnonymizedBaseline> out;
    for (const auto& [occ, list] : anonymized.per_occupation) {
        for (const auto& s : list) {
            if (s.name == kAnonymizedName) out.push_back({occ, s.tpr, s.mean_dot, s.mean_p_true});
        }
    }
    return out;
}

/// "†" for p < 0.001, "*" for p < 0.005, else empty.
inline std::string significance_marker(double p_corrected) {
    if (std::isnan(p_corrected)) return "";
    if (p_corrected < 0.001) return "†";
    if (p_corrected < 0.005) return "*";
    return "";
}

} // namespace gendir::analysis
