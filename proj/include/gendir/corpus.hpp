#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gendir/csv.hpp"
#include "gendir/error.hpp"
#include "gendir/rng.hpp"

namespace gendir::corpus {

// ---------------------------------------------------------------------------
// Text primitives

/// Half-open byte range [start, end) into a UTF-8 string.
struct Span {
    std::size_t start = 0;
    std::size_t end = 0;
    friend bool operator==(const Span&, const Span&) = default;
};

namespace detail {

inline char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
inline char ascii_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = ascii_lower(c);
    return out;
}

/// Decodes the code point starting at `i`; returns (code point, byte length).
/// Malformed bytes decode as themselves with length 1.
inline std::pair<char32_t, std::size_t> decode_at(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    auto cont = [&](std::size_t k) -> int {
        if (i + k >= s.size()) return -1;
        const auto b = static_cast<unsigned char>(s[i + k]);
        return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
    };
    if (b0 < 0x80) return {b0, 1};
    if ((b0 & 0xE0) == 0xC0) {
        const int c1 = cont(1);
        if (c1 >= 0) return {static_cast<char32_t>(((b0 & 0x1F) << 6) | c1), 2};
    } else if ((b0 & 0xF0) == 0xE0) {
        const int c1 = cont(1), c2 = cont(2);
        if (c1 >= 0 && c2 >= 0) return {static_cast<char32_t>(((b0 & 0x0F) << 12) | (c1 << 6) | c2), 3};
    } else if ((b0 & 0xF8) == 0xF0) {
        const int c1 = cont(1), c2 = cont(2), c3 = cont(3);
        if (c1 >= 0 && c2 >= 0 && c3 >= 0)
            return {static_cast<char32_t>(((b0 & 0x07) << 18) | (c1 << 12) | (c2 << 6) | c3), 4};
    }
    return {b0, 1};
}

/// Start byte of the code point that ends just before `i` (i > 0).
inline std::size_t previous_start(std::string_view s, std::size_t i) {
    std::size_t j = i - 1;
    std::size_t steps = 0;
    while (j > 0 && steps < 3 && (static_cast<unsigned char>(s[j]) & 0xC0) == 0x80) {
        --j;
        ++steps;
    }
    const auto [cp, len] = decode_at(s, j);
    return (j + len == i) ? j : i - 1;
}

} // namespace detail

/// Word characters: ASCII letters, digits and '_', plus any non-ASCII code point
/// outside the common punctuation, symbol and space blocks.
inline bool is_word_codepoint(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9') || cp == '_';
    }
    if (cp <= 0xBF) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, arrows, math, box drawing
    if (cp >= 0x2E00 && cp <= 0x2E7F) return false;  // supplemental punctuation
    if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp == 0xFEFF || cp == 0xFFFD) return false;
    return true;
}

inline bool word_char_before(std::string_view s, std::size_t i) {
    if (i == 0) return false;
    return is_word_codepoint(detail::decode_at(s, detail::previous_start(s, i)).first);
}

inline bool word_char_at(std::string_view s, std::size_t i) {
    if (i >= s.size()) return false;
    return is_word_codepoint(detail::decode_at(s, i).first);
}

struct MatchPolicy {
    bool case_insensitive = true;
    bool whole_word = true;
};

/// All non-overlapping occurrences of `word` in `text`, ascending.
inline std::vector<Span> find_occurrences(std::string_view text, std::string_view word, MatchPolicy policy = {}) {
    std::vector<Span> spans;
    if (word.empty() || word.size() > text.size()) return spans;
    auto equal_at = [&](std::size_t i) {
        for (std::size_t k = 0; k < word.size(); ++k) {
            char a = text[i + k], b = word[k];
            if (policy.case_insensitive) {
                a = detail::ascii_lower(a);
                b = detail::ascii_lower(b);
            }
            if (a != b) return false;
        }
        return true;
    };
    std::size_t i = 0;
    while (i + word.size() <= text.size()) {
        if (equal_at(i) &&
            (!policy.whole_word || (!word_char_before(text, i) && !word_char_at(text, i + word.size())))) {
            spans.push_back({i, i + word.size()});
            i += word.size();
        } else {
            ++i;
        }
    }
    return spans;
}

/// Maximal runs of word code points.
inline std::vector<Span> word_tokens(std::string_view text) {
    std::vector<Span> tokens;
    std::size_t i = 0;
    std::size_t start = 0;
    bool inside = false;
    while (i < text.size()) {
        const auto [cp, len] = detail::decode_at(text, i);
        const bool w = is_word_codepoint(cp);
        if (w && !inside) {
            start = i;
            inside = true;
        } else if (!w && inside) {
            tokens.push_back({start, i});
            inside = false;
        }
        i += len;
    }
    if (inside) tokens.push_back({start, text.size()});
    return tokens;
}

// ---------------------------------------------------------------------------
// Word-pair tables

struct GenderedPair {
    std::string female_word;
    std::string male_word;
};

/// Involutive word-to-counterpart table, stored lowercase.
class PairTable {
public:
    PairTable() = default;

    explicit PairTable(std::vector<GenderedPair> pairs) : pairs_(std::move(pairs)) {
        for (auto& p : pairs_) {
            p.female_word = detail::to_lower(p.female_word);
            p.male_word = detail::to_lower(p.male_word);
            if (p.female_word.empty() || p.male_word.empty()) throw ValidationError("pair table: empty word");
            if (p.female_word == p.male_word) {
                throw ValidationError("pair table: pair '" + p.female_word + "' maps a word to itself");
            }
            for (const auto& w : {p.female_word, p.male_word}) {
                const auto toks = word_tokens(w);
                if (toks.size() != 1 || toks.front() != Span{0, w.size()}) {
                    throw ValidationError("pair table: '" + w + "' is not a single word");
                }
            }
            if (!counterpart_.emplace(p.female_word, p.male_word).second ||
                !counterpart_.emplace(p.male_word, p.female_word).second) {
                throw ValidationError("pair table: word listed twice near '" + p.female_word + "," +
                                      p.male_word + "'");
            }
        }
    }

    const std::vector<GenderedPair>& pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }

    /// Counterpart of a (case-insensitive) word, if it is in the table.
    std::optional<std::string> lookup(std::string_view word) const {
        const auto it = counterpart_.find(detail::to_lower(word));
        if (it == counterpart_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::vector<GenderedPair> pairs_;
    std::unordered_map<std::string, std::string> counterpart_;
};

/// Gendered pairs used for the gender direction (first names excluded).
inline PairTable gendered_pairs() {
    return PairTable({{"she", "he"},
                      {"her", "his"},
                      {"woman", "man"},
                      {"herself", "himself"},
                      {"daughter", "son"},
                      {"mother", "father"},
                      {"gal", "guy"},
                      {"girl", "boy"},
                      {"female", "male"}});
}

/// Column-aligned unrelated word pairs for the random baseline.
inline PairTable random_pairs() {
    return PairTable({{"book", "vase"},
                      {"sun", "elephant"},
                      {"ice", "xylophone"},
                      {"tree", "jungle"},
                      {"flower", "umbrella"},
                      {"river", "pencil"},
                      {"house", "kite"},
                      {"dog", "notebook"},
                      {"car", "guitar"},
                      {"mountain", "zebra"}});
}

/// Reads a two-column pair CSV (`female_word,male_word` or `word_a,word_b`).
inline PairTable read_pair_table(std::istream& in) {
    const auto table = csv::read(in);
    if (table.header.size() != 2) throw ValidationError("pair table: expected exactly two columns");
    std::vector<GenderedPair> pairs;
    for (const auto& row : table.rows) pairs.push_back({row[0], row[1]});
    return PairTable(std::move(pairs));
}

// ---------------------------------------------------------------------------
// Context mining and counterfactuals

struct ContextSentence {
    std::string text;
    /// The word the spans point at.
    std::string target;
    std::vector<Span> target_spans;
    std::string source_id;
};

struct MineOptions {
    MatchPolicy policy{};
    /// Sample `limit` matches uniformly instead of taking the first ones; the
    /// sample is returned in corpus order.
    std::optional<std::uint64_t> shuffle_seed{};
    std::string source_prefix = "line";
};

/// First `limit` sentences (one per element, corpus order) containing `target`.
inline std::vector<ContextSentence> mine_contexts(std::span<const std::string> sentences, std::string_view target,
                                                  std::size_t limit, const MineOptions& options = {}) {
    if (limit < 1) throw ValidationError("mine_contexts: limit must be at least 1");
    if (target.empty()) throw ValidationError("mine_contexts: empty target word");

    std::vector<ContextSentence> out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        if (!options.shuffle_seed && out.size() >= limit) break;
        auto spans = find_occurrences(sentences[i], target, options.policy);
        if (spans.empty()) continue;
        out.push_back({sentences[i], std::string(target), std::move(spans),
                       options.source_prefix + ":" + std::to_string(i + 1)});
    }
    if (out.empty()) throw NoContextsError(std::string(target));

    if (options.shuffle_seed && out.size() > limit) {
        std::vector<std::size_t> idx(out.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Rng rng(*options.shuffle_seed, target);
        rng.shuffle(idx);
        idx.resize(limit);
        std::sort(idx.begin(), idx.end());
        std::vector<ContextSentence> sampled;
        sampled.reserve(limit);
        for (auto i : idx) sampled.push_back(std::move(out[i]));
        out = std::move(sampled);
    }
    return out;
}

/// Splits a stream into sentences, one per line (trailing CR stripped).
inline std::vector<std::string> read_sentences(std::istream& in) {
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
    }
    return lines;
}

namespace detail {

enum class Casing { lower, title, upper, mixed };

inline Casing casing_of(std::string_view token) {
    bool any_upper = false, any_lower = false, first_upper = false, rest_upper = false;
    for (std::size_t i = 0; i < token.size(); ++i) {
        const char c = token[i];
        const bool up = c >= 'A' && c <= 'Z';
        const bool lo = c >= 'a' && c <= 'z';
        any_upper |= up;
        any_lower |= lo;
        if (i == 0) first_upper = up;
        else rest_upper |= up;
    }
    if (!any_upper) return Casing::lower;
    if (!any_lower) return token.size() == 1 ? Casing::title : Casing::upper;
    if (first_upper && !rest_upper) return Casing::title;
    return Casing::mixed;
}

inline std::string apply_casing(std::string word, Casing casing) {
    if (casing == Casing::upper) {
        for (auto& c : word) c = ascii_upper(c);
    } else if (casing == Casing::title && !word.empty()) {
        word[0] = ascii_upper(word[0]);
    }
    return word;
}

} // namespace detail

/// Replaces every whole-word table entry by its counterpart, keeping lower,
/// Title and ALL-CAPS casing. Mixed-case tokens ("sHe") are left untouched so
/// the swap stays an involution.
inline std::string swap_text(std::string_view text, const PairTable& table) {
    std::string out;
    out.reserve(text.size() + 16);
    std::size_t cursor = 0;
    for (const auto& tok : word_tokens(text)) {
        const auto word = text.substr(tok.start, tok.end - tok.start);
        const auto counterpart = table.lookup(word);
        if (!counterpart) continue;
        const auto casing = detail::casing_of(word);
        if (casing == detail::Casing::mixed) continue;
        out.append(text.substr(cursor, tok.start - cursor));
        out.append(detail::apply_casing(*counterpart, casing));
        cursor = tok.end;
    }
    out.append(text.substr(cursor));
    return out;
}

inline ContextSentence swap_counterfactual(const ContextSentence& sentence, const PairTable& table,
                                           MatchPolicy policy = {}) {
    ContextSentence out;
    out.text = swap_text(sentence.text, table);
    out.target = table.lookup(sentence.target).value_or(sentence.target);
    out.target_spans = find_occurrences(out.text, out.target, policy);
    out.source_id = sentence.source_id;
    return out;
}

// ---------------------------------------------------------------------------
// Prompt templates

struct LabeledSpan {
    std::string label;
    Span span;
};

struct InstantiatedPrompt {
    std::string text;
    std::vector<LabeledSpan> name_spans;
};

inline constexpr std::array<std::string_view, 4> kPlaceholders = {"{NAME}", "{ARTICLE}", "{OCC.}", "{BIO}"};

/// Placeholder in the bio text that is replaced by the probed name.
inline constexpr std::string_view kBioNamePlaceholder = "[NAME]";

class PromptTemplate {
public:
    PromptTemplate(std::string text, std::vector<std::string> capture_labels)
        : text_(std::move(text)), labels_(std::move(capture_labels)) {
        std::size_t names = 0;
        for (std::size_t i = 0; i < text_.size(); ++i) {
            if (text_[i] != '{') continue;
            const auto close = text_.find('}', i);
            if (close == std::string::npos) throw ValidationError("prompt template: unterminated placeholder");
            const auto ph = std::string_view(text_).substr(i, close - i + 1);
            if (std::find(kPlaceholders.begin(), kPlaceholders.end(), ph) == kPlaceholders.end()) {
                throw ValidationError("prompt template: unknown placeholder " + std::string(ph));
            }
            if (ph == "{NAME}") ++names;
            i = close;
        }
        if (names != labels_.size()) {
            throw ValidationError("prompt template: " + std::to_string(names) + " {NAME} occurrences but " +
                                  std::to_string(labels_.size()) + " capture labels");
        }
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            for (std::size_t j = i + 1; j < labels_.size(); ++j) {
                if (labels_[i] == labels_[j]) throw ValidationError("prompt template: duplicate label " + labels_[i]);
            }
        }
    }

    const std::string& text() const { return text_; }
    const std::vector<std::string>& capture_labels() const { return labels_; }
    bool uses(std::string_view placeholder) const { return text_.find(placeholder) != std::string::npos; }

private:
    std::string text_;
    std::vector<std::string> labels_;
};

/// Name-only gender question used for the prior probability.
inline PromptTemplate prior_prompt() {
    return PromptTemplate("Question: Is {NAME} male or female? Answer: {NAME} is ", {"name_first", "name_last"});
}

/// Gender question with an occupational context.
inline PromptTemplate gender_prediction_prompt() {
    return PromptTemplate("Question: {NAME} is {ARTICLE} {OCC.}. Is {NAME} male or female? Answer: {NAME} is ",
                          {"name_first", "name_second", "name_last"});
}

/// Occupation prediction from a biography.
inline PromptTemplate occupation_prediction_prompt() {
    return PromptTemplate("Read the description about {NAME} below and predict their occupation.\n{BIO}\n"
                          "What's {NAME}'s occupation? Output an occupation only. No preambles. No explanations.",
                          {"name_first", "name_last"});
}

/// "an" before a vowel letter, else "a".
inline std::string indefinite_article(std::string_view occupation) {
    if (occupation.empty()) return "a";
    const char c = detail::ascii_lower(occupation.front());
    return (c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u') ? "an" : "a";
}

inline std::string replace_all(std::string_view text, std::string_view from, std::string_view to) {
    std::string out;
    std::size_t cursor = 0;
    for (auto pos = text.find(from); pos != std::string_view::npos; pos = text.find(from, cursor)) {
        out.append(text.substr(cursor, pos - cursor));
        out.append(to);
        cursor = pos + from.size();
    }
    out.append(text.substr(cursor));
    return out;
}

/// Replaces whole-word, case-sensitive occurrences of `word`.
inline std::string replace_all_words(std::string_view text, std::string_view word, std::string_view to) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& s : find_occurrences(text, word, {.case_insensitive = false, .whole_word = true})) {
        out.append(text.substr(cursor, s.start - cursor));
        out.append(to);
        cursor = s.end;
    }
    out.append(text.substr(cursor));
    return out;
}

inline InstantiatedPrompt instantiate_prompt(const PromptTemplate& tmpl, std::string_view name,
                                             const std::optional<std::string>& occupation = std::nullopt,
                                             const std::optional<std::string>& bio = std::nullopt) {
    if (tmpl.uses("{OCC.}") && !occupation) throw ValidationError("prompt: missing substitution for {OCC.}");
    if (tmpl.uses("{ARTICLE}") && !occupation) throw ValidationError("prompt: missing substitution for {ARTICLE}");
    if (tmpl.uses("{BIO}") && !bio) throw ValidationError("prompt: missing substitution for {BIO}");
    if (tmpl.uses("{NAME}") && name.empty()) throw ValidationError("prompt: missing substitution for {NAME}");

    InstantiatedPrompt out;
    const std::string_view text = tmpl.text();
    std::size_t label = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '{') {
            out.text.push_back(text[i++]);
            continue;
        }
        const auto close = text.find('}', i);
        const auto ph = text.substr(i, close - i + 1);
        if (ph == "{NAME}") {
            const auto start = out.text.size();
            out.text.append(name);
            out.name_spans.push_back({tmpl.capture_labels()[label++], {start, out.text.size()}});
        } else if (ph == "{ARTICLE}") {
            out.text.append(indefinite_article(*occupation));
        } else if (ph == "{OCC.}") {
            out.text.append(*occupation);
        } else {
            out.text.append(replace_all(*bio, kBioNamePlaceholder, name));
        }
        i = close + 1;
    }
    return out;
}

} // namespace gendir::corpus
