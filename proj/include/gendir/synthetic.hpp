#pragma once

// Synthetic embedding spaces with a planted gender axis, and a simulated model
// that answers probe jobs from such a space. Both serve as oracles for the
// numeric pipeline; nothing here is used on real model output.
//
// Construction (a = planted unit axis, every base vector orthogonal to a):
//   gendered pair j:  base_j +/- alpha * a + N(0, sigma^2 I)
//   random word:      base_w + N(0, sigma^2 I)
//   roster name:      base_names + alpha * (2 * pct_female / 100 - 1) * a + N(0, sigma^2 I)
//   other words:      base_w + N(0, sigma^2 I)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gendir/corpus.hpp"
#include "gendir/embedding_io.hpp"
#include "gendir/error.hpp"
#include "gendir/occupations.hpp"
#include "gendir/rng.hpp"
#include "gendir/roster.hpp"

namespace gendir::synth {

struct SynthConfig {
    std::size_t dim = 64;
    std::size_t pair_count = 9;
    /// Unit vector; empty draws one from the seed.
    std::vector<double> planted_axis;
    double alpha = 1.0;
    double sigma = 0.05;
    double base_scale = 1.0;
    std::uint64_t seed = 7;
    std::string model_id = "synthetic";
};

inline constexpr std::string_view kAxisKey = "meta:planted_axis";

inline std::string word_key(std::string_view w) { return "word:" + std::string(w); }
inline std::string name_key(std::string_view n) { return "name:" + std::string(n); }

/// The gendered table extended with placeholder pairs when more than nine are requested.
inline corpus::PairTable gendered_table(std::size_t pair_count) {
    auto pairs = corpus::gendered_pairs().pairs();
    if (pair_count < pairs.size()) pairs.resize(pair_count);
    for (std::size_t j = pairs.size(); j < pair_count; ++j) {
        pairs.push_back({"fword" + std::to_string(j), "mword" + std::to_string(j)});
    }
    return corpus::PairTable(std::move(pairs));
}

class SyntheticSpace {
public:
    SyntheticSpace(SynthConfig config, std::vector<NameRecord> roster)
        : config_(std::move(config)), gendered_(gendered_table(config_.pair_count)),
          random_(corpus::random_pairs()), roster_(std::move(roster)) {
        if (config_.dim < 2) throw ValidationError("synthetic space: dim must be at least 2");
        if (config_.pair_count < 2) throw ValidationError("synthetic space: need at least two pairs");
        if (!(config_.sigma >= 0.0)) throw ValidationError("synthetic space: sigma must be non-negative");

        if (config_.planted_axis.empty()) {
            Rng rng(config_.seed, "axis");
            axis_.resize(config_.dim);
            for (auto& x : axis_) x = rng.normal();
            normalize(axis_);
        } else {
            if (config_.planted_axis.size() != config_.dim) {
                throw ValidationError("synthetic space: planted axis has wrong dimension");
            }
            double n2 = 0.0;
            for (double x : config_.planted_axis) n2 += x * x;
            if (std::abs(std::sqrt(n2) - 1.0) > 1e-9) throw ValidationError("synthetic space: planted axis is not unit");
            axis_ = config_.planted_axis;
        }
        for (std::size_t j = 0; j < gendered_.size(); ++j) {
            pair_index_.emplace(gendered_.pairs()[j].female_word, std::make_pair(j, +1.0));
            pair_index_.emplace(gendered_.pairs()[j].male_word, std::make_pair(j, -1.0));
        }
        for (std::size_t i = 0; i < roster_.size(); ++i) name_index_.emplace(roster_[i].name, i);
    }

    const SynthConfig& config() const { return config_; }
    const std::vector<double>& axis() const { return axis_; }
    const corpus::PairTable& gendered() const { return gendered_; }
    const corpus::PairTable& random() const { return random_; }
    const std::vector<NameRecord>& roster() const { return roster_; }

    bool is_name(std::string_view token) const { return name_index_.count(std::string(token)) != 0; }

    /// Vector of a roster name or (case-insensitively) any other word.
    std::vector<double> vector_of(std::string_view token) const {
        if (const auto it = name_index_.find(std::string(token)); it != name_index_.end()) {
            const auto& rec = roster_[it->second];
            auto v = base("names");
            axpy(config_.alpha * (2.0 * rec.pct_female / 100.0 - 1.0), axis_, v);
            add_noise(v, "name:" + rec.name);
            return v;
        }
        const auto lower = corpus::detail::to_lower(token);
        if (const auto it = pair_index_.find(lower); it != pair_index_.end()) {
            auto v = base("pair:" + std::to_string(it->second.first));
            axpy(it->second.second * config_.alpha, axis_, v);
            add_noise(v, "word:" + lower);
            return v;
        }
        auto v = base("word:" + lower);
        add_noise(v, "word:" + lower);
        return v;
    }

    /// Dump of every gendered word, random word and roster name, plus the planted axis.
    io::EmbeddingDump dump() const {
        io::EmbeddingDump d(config_.model_id, config_.dim);
        for (const auto* table : {&gendered_, &random_}) {
            for (const auto& p : table->pairs()) {
                d.add(word_key(p.female_word), std::span<const double>(vector_of(p.female_word)));
                d.add(word_key(p.male_word), std::span<const double>(vector_of(p.male_word)));
            }
        }
        for (const auto& r : roster_) d.add(name_key(r.name), std::span<const double>(vector_of(r.name)));
        d.add(std::string(kAxisKey), std::span<const double>(axis_));
        return d;
    }

private:
    static void normalize(std::vector<double>& v) {
        double n2 = 0.0;
        for (double x : v) n2 += x * x;
        const double n = std::sqrt(n2);
        for (auto& x : v) x /= n;
    }

    static void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
    }

    /// Base vector for a key, with its planted-axis component removed.
    std::vector<double> base(const std::string& key) const {
        Rng rng(config_.seed, "base:" + key);
        std::vector<double> v(config_.dim);
        for (auto& x : v) x = config_.base_scale * rng.normal();
        double along = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) along += v[i] * axis_[i];
        axpy(-along, axis_, v);
        return v;
    }

    void add_noise(std::vector<double>& v, const std::string& key) const {
        if (config_.sigma == 0.0) return;
        Rng rng(config_.seed, "noise:" + key);
        for (auto& x : v) x += config_.sigma * rng.normal();
    }

    SynthConfig config_;
    corpus::PairTable gendered_;
    corpus::PairTable random_;
    std::vector<NameRecord> roster_;
    std::vector<double> axis_;
    std::unordered_map<std::string, std::pair<std::size_t, double>> pair_index_;
    std::unordered_map<std::string, std::size_t> name_index_;
};

inline io::EmbeddingDump generate_synthetic_space(const SynthConfig& config, std::vector<NameRecord> roster) {
    return SyntheticSpace(config, std::move(roster)).dump();
}

// ---------------------------------------------------------------------------
// Simulated model

struct SimulationConfig {
    /// Per-coordinate scale of the context vector added to every captured span.
    double context_sigma = 0.5;
    /// Shift along the axis per unit lean of each occupation mentioned before the span.
    double occupation_pull = 0.1;
    /// logit(female) - logit(male) = scale * d.
    double gender_logit_scale = 4.0;
    /// Logit bonus for an occupation mentioned in the prompt.
    double occupation_cue = 0.5;
    /// logit(o) gains scale * lean(o) * d.
    double occupation_logit_scale = 2.0;
    /// Occupation -> lean in [-1, 1]; positive is female-leaning.
    std::map<std::string, double> occupation_lean;
};

/// +1 above 50% female, -1 below, 0 at exactly 50.
inline std::map<std::string, double> sign_leans(std::span<const OccupationRecord> occupations) {
    std::map<std::string, double> out;
    for (const auto& o : occupations) {
        out[o.occupation] = o.pct_female_bios > 50.0 ? 1.0 : (o.pct_female_bios < 50.0 ? -1.0 : 0.0);
    }
    return out;
}

struct SimulatedShard {
    std::vector<io::JobResult> results;
    io::EmbeddingDump vectors;
};

/// Answers probe jobs from a synthetic space. A captured span's vector is the
/// token's space vector plus a context vector that depends only on the prompt
/// with that token masked out, so swapping the name in a fixed context moves
/// every span by the same amount. Occupations pull a span along the axis only
/// when mentioned before it. The projection d of the last captured span on
/// the planted axis drives the logits.
class SimulatedModel {
public:
    SimulatedModel(const SyntheticSpace& space, SimulationConfig config) : space_(space), config_(std::move(config)) {}

    SimulatedShard run(std::span<const io::ProbeJob> jobs) const {
        SimulatedShard out{{}, io::EmbeddingDump(space_.config().model_id, space_.config().dim)};
        out.results.reserve(jobs.size());
        for (const auto& job : jobs) {
            io::validate_job(job);
            io::JobResult r;
            r.id = job.id;

            // Occupation mentions as (first offset, lean).
            std::vector<std::pair<std::size_t, double>> mentions;
            std::vector<std::string> mentioned;
            for (const auto& [occ, lean] : config_.occupation_lean) {
                const auto hits = corpus::find_occurrences(job.prompt, occ);
                if (!hits.empty()) {
                    mentions.emplace_back(hits.front().start, lean);
                    mentioned.push_back(occ);
                }
            }

            double d = 0.0;
            for (const auto& span : job.capture_spans) {
                const auto token = job.prompt.substr(span.char_start, span.char_end - span.char_start);
                double pull = 0.0;
                for (const auto& [at, lean] : mentions) {
                    if (at < span.char_start) pull += lean;
                }
                auto v = space_.vector_of(token);
                add_context(v, job.prompt, token, pull);
                std::vector<float> f(v.begin(), v.end());
                out.vectors.add(io::vector_key(job.id, span.label), std::span<const float>(f));
                d = 0.0;
                for (std::size_t i = 0; i < f.size(); ++i) d += static_cast<double>(f[i]) * space_.axis()[i];
            }

            for (const auto& tok : job.capture_logit_tokens) {
                double logit = 0.0;
                if (tok == "female") {
                    logit = 0.5 * config_.gender_logit_scale * d;
                } else if (tok == "male") {
                    logit = -0.5 * config_.gender_logit_scale * d;
                } else if (const auto it = config_.occupation_lean.find(tok); it != config_.occupation_lean.end()) {
                    const bool cued = std::find(mentioned.begin(), mentioned.end(), tok) != mentioned.end();
                    logit = (cued ? config_.occupation_cue : 0.0) + config_.occupation_logit_scale * it->second * d;
                }
                r.logits[tok] = logit;
            }
            out.results.push_back(std::move(r));
        }
        return out;
    }

private:
    void add_context(std::vector<double>& v, const std::string& prompt, const std::string& token, double pull) const {
        const auto masked = corpus::replace_all_words(prompt, token, "\x01");
        Rng rng(space_.config().seed, "ctx:" + masked);
        for (auto& x : v) x += config_.context_sigma * rng.normal();
        const auto& a = space_.axis();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += config_.occupation_pull * pull * a[i];
    }

    const SyntheticSpace& space_;
    SimulationConfig config_;
};

// ---------------------------------------------------------------------------
// Synthetic text fixtures

/// One sentence per line; every gendered and random word appears in several.
inline std::vector<std::string> synthetic_corpus(const corpus::PairTable& gendered, const corpus::PairTable& random,
                                                 std::size_t sentences_per_word, std::uint64_t seed) {
    static constexpr std::array<std::string_view, 6> frames = {
        "Yesterday the {W} walked past the old {R} near the station.",
        "Everyone agreed that {W} had seen the {R} before.",
        "In the morning {W} found a {R} by the window.",
        "The story mentions {W} and a {R} in the first chapter.",
        "After lunch {W} talked about the {R} for an hour.",
        "It was {W} who painted the {R} last summer."};
    std::vector<std::string> words;
    for (const auto& p : gendered.pairs()) {
        words.push_back(p.female_word);
        words.push_back(p.male_word);
    }
    std::vector<std::string> fillers;
    for (const auto& p : random.pairs()) {
        fillers.push_back(p.female_word);
        fillers.push_back(p.male_word);
    }
    Rng rng(seed, "corpus");
    std::vector<std::string> lines;
    for (std::size_t k = 0; k < sentences_per_word; ++k) {
        for (const auto& w : words) {
            auto s = corpus::replace_all(frames[rng.below(frames.size())], "{W}", w);
            lines.push_back(corpus::replace_all(s, "{R}", fillers[rng.below(fillers.size())]));
        }
        for (const auto& r : fillers) {
            auto s = corpus::replace_all(frames[rng.below(frames.size())], "{W}", "someone");
            lines.push_back(corpus::replace_all(s, "{R}", r));
        }
    }
    return lines;
}

/// Context sentences for name embeddings: `per_name` sentences for each seed name.
inline std::vector<std::pair<std::string, std::string>> synthetic_name_sentences(
    std::span<const NameRecord> seed_names, std::size_t per_name) {
    static constexpr std::array<std::string_view, 10> frames = {
        "{N} moved to the city to study engineering.",      "{N} was born in a small town by the river.",
        "Critics praised {N} for the second album.",        "{N} served on the council for six years.",
        "The award was presented to {N} in the spring.",    "{N} later returned to teach at the academy.",
        "Reports describe {N} as a skilled negotiator.",    "{N} founded a local newspaper in the valley.",
        "The mural by {N} still hangs in the library.",     "{N} retired after a long career in medicine."};
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& n : seed_names) {
        for (std::size_t k = 0; k < per_name; ++k) {
            out.emplace_back(n.name, corpus::replace_all(frames[k % frames.size()], "{N}", n.name));
        }
    }
    return out;
}

/// `per_gender` bios of each gender per occupation; each mentions its occupation.
inline std::vector<BiographySample> synthetic_bios(std::span<const OccupationRecord> occupations,
                                                   std::size_t per_gender, std::uint64_t seed) {
    static constexpr std::array<std::string_view, 5> frames = {
        "[NAME] is a {O} with {K} years of experience. _ lives in the north of the region.",
        "[NAME] has worked as a {O} for {K} years and _ enjoys mentoring others.",
        "Trained abroad, [NAME] became a {O} {K} years ago. _ is known for careful work.",
        "[NAME] is a {O} based downtown. Over {K} years _ has built a loyal following.",
        "As a {O}, [NAME] spent {K} years on community projects before _ moved on."};
    Rng rng(seed, "bios");
    std::vector<BiographySample> out;
    for (const auto& o : occupations) {
        for (std::size_t k = 0; k < 2 * per_gender; ++k) {
            auto text = corpus::replace_all(frames[rng.below(frames.size())], "{O}", o.occupation);
            text = corpus::replace_all(text, "{K}", std::to_string(2 + rng.below(30)));
            out.push_back({o.occupation, text, k % 2 == 0 ? BioGender::F : BioGender::M});
        }
    }
    return out;
}

} // namespace gendir::synth
