#pragma once

#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gendir/csv.hpp"
#include "gendir/error.hpp"

namespace gendir {

struct OccupationRecord {
    std::string occupation;
    double pct_female_bios = 0.0;
};

enum class BioGender { F, M };

struct BiographySample {
    std::string occupation;
    /// Contains "[NAME]" where the subject's name was; redacted pronouns kept verbatim.
    std::string bio_text;
    BioGender true_gender = BioGender::F;
};

/// The 28 biography occupations, in configured (tie-breaking) order.
inline constexpr std::array<std::string_view, 28> kDefaultOccupations = {
    "accountant",   "architect", "attorney",          "chiropractor", "comedian",    "composer",
    "dentist",      "dietitian", "dj",                "filmmaker",    "interior designer",
    "journalist",   "model",     "nurse",             "painter",      "paralegal",   "pastor",
    "personal trainer", "photographer", "physician",  "poet",         "professor",   "psychologist",
    "rapper",       "software engineer", "surgeon",   "teacher",      "yoga teacher"};

inline void validate_occupations(const std::vector<OccupationRecord>& occs) {
    std::set<std::string> seen;
    for (const auto& o : occs) {
        if (o.occupation.empty()) throw ValidationError("occupations: empty name");
        if (!(o.pct_female_bios >= 0.0 && o.pct_female_bios <= 100.0)) {
            throw ValidationError("occupations: pct_female_bios out of range for '" + o.occupation + "'");
        }
        if (!seen.insert(o.occupation).second) {
            throw ValidationError("occupations: duplicate occupation '" + o.occupation + "'");
        }
    }
}

/// CSV `occupation,pct_female_bios`.
inline std::vector<OccupationRecord> read_occupations(std::istream& in) {
    const auto t = csv::read(in);
    const auto co = t.column("occupation"), cp = t.column("pct_female_bios");
    std::vector<OccupationRecord> out;
    for (const auto& row : t.rows) out.push_back({row[co], csv::parse_double(row[cp], "pct_female_bios")});
    validate_occupations(out);
    return out;
}

inline std::vector<OccupationRecord> read_occupations_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_occupations(in);
}

inline void write_occupations(std::ostream& out, const std::vector<OccupationRecord>& occs) {
    csv::write_row(out, {"occupation", "pct_female_bios"});
    for (const auto& o : occs) csv::write_row(out, {o.occupation, csv::fmt(o.pct_female_bios)});
}

inline BioGender parse_bio_gender(std::string_view s) {
    if (s == "F") return BioGender::F;
    if (s == "M") return BioGender::M;
    throw ValidationError("bios: true_gender must be F or M, got '" + std::string(s) + "'");
}

inline std::string_view to_string(BioGender g) { return g == BioGender::F ? "F" : "M"; }

/// JSON Lines with fields occupation, true_gender, bio_text.
inline std::vector<BiographySample> read_bios_jsonl(std::istream& in) {
    std::vector<BiographySample> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        try {
            const auto j = nlohmann::json::parse(line);
            out.push_back({j.at("occupation").get<std::string>(), j.at("bio_text").get<std::string>(),
                           parse_bio_gender(j.at("true_gender").get<std::string>())});
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("bios: line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

/// CSV with header `occupation,true_gender,bio_text`.
inline std::vector<BiographySample> read_bios_csv(std::istream& in) {
    const auto t = csv::read(in);
    const auto co = t.column("occupation"), cg = t.column("true_gender"), cb = t.column("bio_text");
    std::vector<BiographySample> out;
    for (const auto& row : t.rows) out.push_back({row[co], row[cb], parse_bio_gender(row[cg])});
    return out;
}

/// Dispatches on the extension (.csv, otherwise JSON Lines).
inline std::vector<BiographySample> read_bios_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_bios_csv(in);
    return read_bios_jsonl(in);
}

inline void write_bios_jsonl(std::ostream& out, const std::vector<BiographySample>& bios) {
    for (const auto& b : bios) {
        nlohmann::ordered_json j;
        j["occupation"] = b.occupation;
        j["true_gender"] = std::string(to_string(b.true_gender));
        j["bio_text"] = b.bio_text;
        out << j.dump() << '\n';
    }
}

} // namespace gendir
