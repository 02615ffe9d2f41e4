#pragma once

// CSV emitters for every study plus minimal SVG renderers that read those CSVs.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gendir/analysis.hpp"
#include "gendir/csv.hpp"
#include "gendir/validate.hpp"

namespace gendir::report {

struct DotRow {
    std::string name;
    std::string condition;
    std::string occurrence;  // first | second | bios_last
    double dot = 0.0;
};

struct PFemaleRow {
    std::string name;
    std::string condition;
    double p_female = 0.0;
};

inline void write_dot_csv(std::ostream& out, std::span<const DotRow> rows) {
    csv::write_row(out, {"name", "condition", "occurrence", "dot"});
    for (const auto& r : rows) csv::write_row(out, {r.name, r.condition, r.occurrence, csv::fmt(r.dot)});
}

inline void write_p_female_csv(std::ostream& out, std::span<const PFemaleRow> rows) {
    csv::write_row(out, {"name", "condition", "p_female"});
    for (const auto& r : rows) csv::write_row(out, {r.name, r.condition, csv::fmt(r.p_female)});
}

/// Rows = classifier, two columns (mean, std) per feature kind.
inline void write_protocol_csv(std::ostream& out, std::span<const validate::ProtocolRow> rows) {
    csv::Row header{"model"};
    for (auto f : validate::kFeatureKinds) {
        header.push_back(std::string(to_string(f)) + "_mean");
        header.push_back(std::string(to_string(f)) + "_std");
    }
    csv::write_row(out, header);
    for (auto m : {validate::ModelKind::logreg, validate::ModelKind::gnb}) {
        csv::Row row{std::string(to_string(m))};
        bool any = false;
        for (auto f : validate::kFeatureKinds) {
            const auto it = std::find_if(rows.begin(), rows.end(),
                                         [&](const auto& r) { return r.feature == f && r.model == m; });
            if (it == rows.end()) {
                row.insert(row.end(), {"", ""});
            } else {
                row.push_back(csv::fmt(it->summary.mean));
                row.push_back(csv::fmt(it->summary.std));
                any = true;
            }
        }
        if (any) csv::write_row(out, row);
    }
}

inline void write_protocol_runs_csv(std::ostream& out, std::span<const validate::ClassifierRun> runs) {
    csv::write_row(out, {"feature_kind", "model", "seed", "accuracy"});
    for (const auto& r : runs) {
        csv::write_row(out, {std::string(to_string(r.feature)), std::string(to_string(r.model)),
                             std::to_string(r.seed), csv::fmt(r.accuracy)});
    }
}

struct NameCorrelationRow {
    std::string name;
    double pct_female = 0.0;
    double smoothed_pct = 0.0;
    double dot_wiki = 0.0;
    double p_prior = 0.0;
};

inline void write_name_correlation_csv(std::ostream& out, std::span<const NameCorrelationRow> rows) {
    csv::write_row(out, {"name", "pct_female", "smoothed_pct", "dot_wiki", "p_prior"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.name, csv::fmt(r.pct_female), csv::fmt(r.smoothed_pct), csv::fmt(r.dot_wiki),
                             csv::fmt(r.p_prior)});
    }
}

inline void write_correlation_summary_csv(std::ostream& out, const analysis::CorrelationStudy& s) {
    csv::write_row(out, {"pair", "r", "p_value", "n"});
    auto row = [&](std::string_view pair, const stats::CorrelationResult& c) {
        csv::write_row(out, {std::string(pair), csv::fmt(c.coefficient), csv::fmt(c.p_value), std::to_string(c.n)});
    };
    row("smoothed_pct~dot_wiki", s.pct_vs_dot);
    row("smoothed_pct~p_prior", s.pct_vs_prior);
    row("dot_wiki~p_prior", s.dot_vs_prior);
}

inline void write_context_shift_csv(std::ostream& out, std::span<const analysis::ContextShiftRow> rows) {
    csv::write_row(out, {"bucket", "condition", "n", "mean_delta_dot", "median_delta_dot", "mean_delta_p",
                         "median_delta_p", "baseline"});
    for (const auto& r : rows) {
        csv::write_row(out, {std::to_string(r.bucket), r.condition, std::to_string(r.n), csv::fmt(r.mean_delta_dot),
                             csv::fmt(r.median_delta_dot), csv::fmt(r.mean_delta_p), csv::fmt(r.median_delta_p),
                             r.baseline ? "1" : "0"});
    }
}

/// One scatter point per (occupation, name).
inline void write_downstream_scatter_csv(std::ostream& out, const analysis::DownstreamStats& ds,
                                         std::span<const NameRecord> roster) {
    csv::write_row(out, {"occupation", "name", "pct_female", "tpr", "mean_dot", "mean_p_true"});
    for (const auto& [occ, list] : ds.per_occupation) {
        for (const auto& s : list) {
            const auto it = std::find_if(roster.begin(), roster.end(), [&](const auto& r) { return r.name == s.name; });
            const double pct = it == roster.end() ? analysis::kNaN : it->pct_female;
            csv::write_row(out, {occ, s.name, csv::fmt(pct), csv::fmt(s.tpr), csv::fmt(s.mean_dot),
                                 csv::fmt(s.mean_p_true)});
        }
    }
}

inline void write_bias_report_csv(std::ostream& out, const analysis::BiasReport& report) {
    csv::write_row(out, {"occupation", "pct_female_bios", "bias_coefficient", "bias_p", "bias_p_corrected",
                         "bias_marker", "internal_coefficient", "internal_p", "internal_p_corrected",
                         "internal_marker"});
    for (const auto& r : report.rows) {
        csv::write_row(out, {r.occupation, csv::fmt(r.pct_female_bios), csv::fmt(r.bias_coefficient),
                             csv::fmt(r.bias_p), csv::fmt(r.bias_p_corrected),
                             analysis::significance_marker(r.bias_p_corrected), csv::fmt(r.internal_coefficient),
                             csv::fmt(r.internal_p), csv::fmt(r.internal_p_corrected),
                             analysis::significance_marker(r.internal_p_corrected)});
    }
}

inline void write_anonymized_csv(std::ostream& out, std::span<const analysis::AnonymizedBaseline> rows) {
    csv::write_row(out, {"occupation", "tpr", "mean_dot", "mean_p_true"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.occupation, csv::fmt(r.tpr), csv::fmt(r.mean_dot), csv::fmt(r.mean_p_true)});
    }
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Diverging blue-white-red for v in [lo, hi] centred at 0 when the range spans it.
inline std::string diverging(double v, double lo, double hi) {
    if (std::isnan(v)) return "#cccccc";
    const double m = std::max(std::abs(lo), std::abs(hi));
    const double t = m > 0 ? std::clamp(v / m, -1.0, 1.0) : 0.0;
    const int fade = static_cast<int>(std::lround(255 * (1 - std::abs(t))));
    char buf[8];
    if (t >= 0) std::snprintf(buf, sizeof buf, "#ff%02x%02x", fade, fade);
    else std::snprintf(buf, sizeof buf, "#%02x%02xff", fade, fade);
    return buf;
}

} // namespace detail

/// Heatmap with one row per table row and one cell per named numeric column.
/// Cells show the value (two decimals) followed by the column's marker when
/// `<column>` has a sibling `<prefix>_marker` given in `markers`.
inline std::string heatmap_svg(const csv::Table& table, std::string_view label_column,
                               std::span<const std::string> value_columns, std::span<const std::string> marker_columns) {
    constexpr int cell_w = 110, cell_h = 22, label_w = 150, header_h = 40;
    const auto lc = table.column(label_column);
    std::vector<std::size_t> vc, mc;
    for (const auto& c : value_columns) vc.push_back(table.column(c));
    for (std::size_t k = 0; k < value_columns.size(); ++k) {
        mc.push_back(k < marker_columns.size() && !marker_columns[k].empty() ? table.column(marker_columns[k])
                                                                             : static_cast<std::size_t>(-1));
    }
    const int width = label_w + cell_w * static_cast<int>(vc.size());
    const int height = header_h + cell_h * static_cast<int>(table.rows.size());

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    for (std::size_t k = 0; k < vc.size(); ++k) {
        o << "<text x=\"" << label_w + cell_w * static_cast<int>(k) + cell_w / 2 << "\" y=\"" << header_h - 10
          << "\" text-anchor=\"middle\">" << detail::xml_escape(value_columns[k]) << "</text>\n";
    }
    for (std::size_t k = 0; k < vc.size(); ++k) {
        // Each column is coloured on its own scale.
        double lo = 0.0, hi = 0.0;
        for (const auto& row : table.rows) {
            const double v = csv::parse_double(row[vc[k]], value_columns[k]);
            if (std::isnan(v)) continue;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        for (std::size_t r = 0; r < table.rows.size(); ++r) {
            const auto& row = table.rows[r];
            const double v = csv::parse_double(row[vc[k]], value_columns[k]);
            const int x = label_w + cell_w * static_cast<int>(k), y = header_h + cell_h * static_cast<int>(r);
            o << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w << "\" height=\"" << cell_h
              << "\" fill=\"" << detail::diverging(v, lo, hi) << "\" stroke=\"#ffffff\"/>\n";
            std::string text = std::isnan(v) ? "n/a" : detail::num(v);
            if (mc[k] != static_cast<std::size_t>(-1)) text += row[mc[k]];
            o << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + cell_h - 7 << "\" text-anchor=\"middle\">"
              << detail::xml_escape(text) << "</text>\n";
        }
    }
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        o << "<text x=\"" << label_w - 6 << "\" y=\"" << header_h + cell_h * static_cast<int>(r) + cell_h - 7
          << "\" text-anchor=\"end\">" << detail::xml_escape(table.rows[r][lc]) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

/// The three-column bias heatmap, rows in CSV order.
inline std::string bias_heatmap_svg(const csv::Table& bias_report_csv) {
    const std::vector<std::string> values{"pct_female_bios", "bias_coefficient", "internal_coefficient"};
    const std::vector<std::string> markers{"", "bias_marker", "internal_marker"};
    return heatmap_svg(bias_report_csv, "occupation", values, markers);
}

/// Scatter of two numeric columns, optionally restricted to rows whose
/// `filter_column` equals `filter_value`.
inline std::string scatter_svg(const csv::Table& table, std::string_view x_column, std::string_view y_column,
                               std::string_view title, std::string_view filter_column = {},
                               std::string_view filter_value = {}) {
    constexpr int w = 420, h = 320, margin = 50;
    const auto xc = table.column(x_column), yc = table.column(y_column);
    const auto fc = filter_column.empty() ? static_cast<std::size_t>(-1) : table.column(filter_column);
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : table.rows) {
        if (fc != static_cast<std::size_t>(-1) && row[fc] != filter_value) continue;
        const double x = csv::parse_double(row[xc], x_column), y = csv::parse_double(row[yc], y_column);
        if (std::isfinite(x) && std::isfinite(y)) pts.emplace_back(x, y);
    }
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (!pts.empty()) {
        x0 = x1 = pts[0].first;
        y0 = y1 = pts[0].second;
        for (const auto& [x, y] : pts) {
            x0 = std::min(x0, x), x1 = std::max(x1, x);
            y0 = std::min(y0, y), y1 = std::max(y1, y);
        }
    }
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
    const auto px = [&](double x) { return margin + (x - x0) / (x1 - x0) * (w - 2 * margin); };
    const auto py = [&](double y) { return h - margin - (y - y0) / (y1 - y0) * (h - 2 * margin); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\">" << detail::xml_escape(title) << "</text>\n";
    o << "<line x1=\"" << margin << "\" y1=\"" << h - margin << "\" x2=\"" << w - margin << "\" y2=\"" << h - margin
      << "\" stroke=\"black\"/>\n";
    o << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << h - margin
      << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << w / 2 << "\" y=\"" << h - 15 << "\" text-anchor=\"middle\">" << detail::xml_escape(x_column)
      << " [" << detail::num(x0) << ", " << detail::num(x1) << "]</text>\n";
    o << "<text x=\"15\" y=\"" << h / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " << h / 2 << ")\">"
      << detail::xml_escape(y_column) << " [" << detail::num(y0) << ", " << detail::num(y1) << "]</text>\n";
    for (const auto& [x, y] : pts) {
        o << "<circle cx=\"" << detail::num(px(x)) << "\" cy=\"" << detail::num(py(y))
          << "\" r=\"2.5\" fill=\"#3366cc\" fill-opacity=\"0.6\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace gendir::report
