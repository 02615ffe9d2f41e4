#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "gendir/csv.hpp"
#include "gendir/error.hpp"
#include "gendir/rng.hpp"

namespace gendir {

enum class Race { White, Black, Hispanic, Asian };

inline constexpr std::array<Race, 4> kRaces = {Race::White, Race::Black, Race::Hispanic, Race::Asian};

inline std::string_view to_string(Race r) {
    switch (r) {
        case Race::White: return "White";
        case Race::Black: return "Black";
        case Race::Hispanic: return "Hispanic";
        case Race::Asian: return "Asian";
    }
    return "?";
}

inline Race parse_race(std::string_view s) {
    for (auto r : kRaces) {
        if (to_string(r) == s) return r;
    }
    throw ValidationError("unknown race_ethnicity tag '" + std::string(s) + "'");
}

struct NameRecord {
    std::string name;
    double pct_female = 0.0;
    Race race_ethnicity = Race::White;
    long long frequency = 0;
};

/// Percent-female bucket edges of the name census.
inline constexpr std::array<double, 11> kBucketEdges = {0, 2, 5, 10, 25, 50, 75, 90, 95, 98, 100};

/// Names per (race, bucket) in the 470-name roster.
inline constexpr std::array<std::array<int, 10>, 4> kRosterCensus = {{
    {30, 21, 8, 5, 6, 10, 9, 13, 17, 30},   // White
    {30, 9, 14, 18, 6, 12, 8, 10, 27, 30},  // Black
    {30, 1, 0, 1, 0, 0, 1, 0, 4, 30},       // Hispanic
    {14, 2, 5, 4, 11, 7, 11, 3, 6, 27},     // Asian
}};

inline void validate_roster(const std::vector<NameRecord>& roster) {
    std::set<std::string> seen;
    for (const auto& r : roster) {
        if (r.name.empty()) throw ValidationError("roster: empty name");
        if (!(r.pct_female >= 0.0 && r.pct_female <= 100.0)) {
            throw ValidationError("roster: pct_female out of range for '" + r.name + "'");
        }
        if (!seen.insert(r.name).second) throw ValidationError("roster: duplicate name '" + r.name + "'");
    }
}

/// CSV `name,pct_female,race_ethnicity,frequency`.
inline std::vector<NameRecord> read_roster(std::istream& in) {
    const auto t = csv::read(in);
    const auto cn = t.column("name"), cp = t.column("pct_female"), cr = t.column("race_ethnicity"),
               cf = t.column("frequency");
    std::vector<NameRecord> roster;
    for (const auto& row : t.rows) {
        roster.push_back({row[cn], csv::parse_double(row[cp], "pct_female"), parse_race(row[cr]),
                          csv::parse_int(row[cf], "frequency")});
    }
    validate_roster(roster);
    return roster;
}

inline std::vector<NameRecord> read_roster_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_roster(in);
}

inline void write_roster(std::ostream& out, const std::vector<NameRecord>& roster) {
    csv::write_row(out, {"name", "pct_female", "race_ethnicity", "frequency"});
    for (const auto& r : roster) {
        csv::write_row(out, {r.name, csv::fmt(r.pct_female), std::string(to_string(r.race_ethnicity)),
                             std::to_string(r.frequency)});
    }
}

/// Synthetic roster of `count` names whose (race, bucket) mix follows the census
/// proportions (largest-remainder rounding); %female is uniform within a bucket.
inline std::vector<NameRecord> synthetic_roster(std::size_t count, std::uint64_t seed) {
    int total = 0;
    for (const auto& row : kRosterCensus)
        for (int c : row) total += c;

    struct Cell {
        std::size_t race, bucket, n;
        double frac;
    };
    std::vector<Cell> cells;
    std::size_t assigned = 0;
    for (std::size_t r = 0; r < 4; ++r) {
        for (std::size_t b = 0; b < 10; ++b) {
            const double exact = static_cast<double>(count) * kRosterCensus[r][b] / total;
            const auto n = static_cast<std::size_t>(exact);
            cells.push_back({r, b, n, exact - static_cast<double>(n)});
            assigned += n;
        }
    }
    std::vector<std::size_t> order(cells.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return cells[a].frac > cells[b].frac; });
    for (std::size_t k = 0; assigned < count; ++k, ++assigned) ++cells[order[k % order.size()]].n;

    Rng rng(seed, "roster");
    std::vector<NameRecord> roster;
    roster.reserve(count);
    for (const auto& c : cells) {
        for (std::size_t i = 0; i < c.n; ++i) {
            const double lo = kBucketEdges[c.bucket], hi = kBucketEdges[c.bucket + 1];
            // Round to 0.01 so the CSV form is exact enough to re-read identically.
            double pct = std::round((lo + (hi - lo) * rng.uniform()) * 100.0) / 100.0;
            if (pct >= hi && hi < 100.0) pct = std::round((hi - 0.01) * 100.0) / 100.0;
            char name[32];
            std::snprintf(name, sizeof name, "Syn%04zu", roster.size());
            roster.push_back({name, pct, kRaces[c.race], 200 + static_cast<long long>(rng.below(5000))});
        }
    }
    return roster;
}

} // namespace gendir
