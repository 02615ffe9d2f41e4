// gendir: command-line front end for the gender-direction toolkit.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gendir/gendir.hpp"
#include "run_dir.hpp"

namespace {

using namespace gendir;
using cli::RunDir;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// JSON config files

class ConfigJSON : public CLI::Config {
public:
    std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
        nlohmann::json j;
        for (const CLI::Option* opt : app->get_options({})) {
            if (opt->get_configurable() && !opt->get_lnames().empty()) {
                const auto name = opt->get_lnames()[0];
                if (opt->count() > 0) {
                    j[name] = opt->results().size() == 1 ? nlohmann::json(opt->results()[0]) : nlohmann::json(opt->results());
                } else if (default_also && !opt->get_default_str().empty()) {
                    j[name] = opt->get_default_str();
                }
            }
        }
        for (const CLI::App* sub : app->get_subcommands({})) {
            j[sub->get_name()] = nlohmann::json::parse(to_config(sub, default_also, false, ""));
        }
        return j.dump(2);
    }

    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        nlohmann::json j;
        try {
            input >> j;
        } catch (const nlohmann::json::exception& e) {
            throw CLI::ConversionError(std::string("config: ") + e.what());
        }
        std::vector<CLI::ConfigItem> items;
        walk(j, "", {}, items);
        return items;
    }

private:
    static void walk(const nlohmann::json& j, const std::string& name, std::vector<std::string> prefix,
                     std::vector<CLI::ConfigItem>& out) {
        if (j.is_object()) {
            if (!name.empty()) prefix.push_back(name);
            for (const auto& [k, v] : j.items()) walk(v, k, prefix, out);
            return;
        }
        CLI::ConfigItem item;
        item.parents = prefix;
        item.name = name;
        auto scalar = [](const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
        if (j.is_array()) {
            for (const auto& v : j) item.inputs.push_back(scalar(v));
        } else {
            item.inputs.push_back(scalar(j));
        }
        out.push_back(std::move(item));
    }
};

// ---------------------------------------------------------------------------
// Structured errors

struct ExitError {
    int code;
    ordered_json body;
};

int report_error(const ExitError& e) {
    std::cerr << e.body.dump() << '\n';
    return e.code;
}

ExitError to_exit(const Error& e) {
    ordered_json body{{"error", e.kind()}, {"message", e.what()}};
    int code = 2;
    if (const auto* inc = dynamic_cast<const IncompleteResultsError*>(&e)) {
        body["missing"] = inc->missing();
        body["first_missing"] = inc->first_missing();
        code = 3;
    } else if (const auto* nc = dynamic_cast<const NoContextsError*>(&e)) {
        body["word"] = nc->word();
    } else if (!dynamic_cast<const ValidationError*>(&e) && !dynamic_cast<const UndefinedCorrelation*>(&e)) {
        code = 1;
    }
    return {code, body};
}

// ---------------------------------------------------------------------------
// Shared helpers

struct Globals {
    std::string run_dir;
    std::uint64_t seed = 7;
};

std::string stem_of(const fs::path& p) { return p.stem().string(); }

/// results/<stem> plus any shard directories results/<stem>-*.
std::vector<fs::path> default_results(const RunDir& run, const std::string& stem) {
    std::vector<fs::path> out;
    const auto base = run.results(stem);
    if (fs::is_directory(base)) out.push_back(base);
    const auto dir = run.root() / "results";
    std::vector<fs::path> shards;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (e.is_directory() && name.rfind(stem + "-", 0) == 0) shards.push_back(e.path());
    }
    std::sort(shards.begin(), shards.end());
    out.insert(out.end(), shards.begin(), shards.end());
    if (out.empty()) throw IncompleteResultsError(0, "no result shards for '" + stem + "' under results/");
    return out;
}

std::vector<fs::path> results_or_default(const RunDir& run, const std::vector<std::string>& given,
                                         const std::string& stem) {
    if (given.empty()) return default_results(run, stem);
    return {given.begin(), given.end()};
}

fs::path synthetic_dir(const RunDir& run) { return run.dumps("synthetic"); }

/// Explicit path, else the first candidate that exists.
fs::path pick(const std::string& given, std::initializer_list<fs::path> candidates, const std::string& what) {
    if (!given.empty()) return given;
    for (const auto& c : candidates) {
        if (fs::exists(c)) return c;
    }
    throw ValidationError("no " + what + " given and no default found (looked for " +
                          std::data(candidates)->generic_string() + ")");
}

std::vector<NameRecord> load_roster(const fs::path& p) { return read_roster_file(p.string()); }

std::vector<OccupationRecord> load_occupations(const fs::path& p) { return read_occupations_file(p.string()); }

corpus::PairTable load_pairs(const std::string& path, bool random) {
    if (path.empty()) return random ? corpus::random_pairs() : corpus::gendered_pairs();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return corpus::read_pair_table(in);
}

std::vector<io::ProbeJob> load_jobs(const fs::path& p) { return io::read_probe_jobs(p); }

void write_jobs(const fs::path& p, std::span<const io::ProbeJob> jobs) {
    std::ostringstream out;
    io::write_probe_jobs(out, jobs);
    cli::write_file(p, out.str());
}

io::ProbeJob job_from_prompt(std::string id, const corpus::InstantiatedPrompt& p, std::vector<std::string> tokens) {
    io::ProbeJob job{std::move(id), p.text, {}, std::move(tokens), true};
    for (const auto& s : p.name_spans) job.capture_spans.push_back({s.label, s.span.start, s.span.end});
    return job;
}

template <class Fn>
std::string csv_text(Fn&& fn) {
    std::ostringstream out;
    fn(out);
    return out.str();
}

fs::path direction_dir(const RunDir& run) { return run.dumps("direction"); }

std::vector<double> load_direction(const RunDir& run, const std::string& mode) {
    subspace::parse_mode(mode == "random" ? "first" : mode);
    const auto dump = io::read_dump(direction_dir(run));
    const auto key = "direction:" + mode;
    if (!dump.contains(key)) throw ValidationError("direction dump lacks '" + key + "'");
    const auto row = dump.row(key);
    return {row.begin(), row.end()};
}

/// Name embeddings: aggregated dumps/names, else the raw synthetic space.
fs::path names_dump_path(const RunDir& run, const std::string& given) {
    return pick(given, {run.dumps("names"), synthetic_dir(run)}, "name embedding dump");
}

std::vector<double> name_vector(const io::EmbeddingDump& dump, const std::string& name) {
    const auto key = synth::name_key(name);
    if (!dump.contains(key)) throw ValidationError("embedding dump lacks '" + key + "'");
    const auto row = dump.row(key);
    return {row.begin(), row.end()};
}

std::vector<std::string> occupation_names(const std::vector<OccupationRecord>& occs) {
    std::vector<std::string> out;
    for (const auto& o : occs) out.push_back(o.occupation);
    return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::size_t dim = 64, pairs = 9, names = 200, bios_per_gender = 20, sentences_per_word = 4, name_sentences = 4,
                seed_names = 3;
    double alpha = 1.0, sigma = 0.05, context_sigma = 0.5, occupation_pull = 0.1, logit_scale = 2.0;
    std::string occupations, roster, answer, out_dir;
};

std::vector<OccupationRecord> default_synth_occupations() {
    return {{"nurse", 90.9}, {"dietitian", 92.8}, {"pastor", 24.09}, {"comedian", 21.1}};
}

synth::SimulationConfig simulation_from(const nlohmann::json& j, const std::vector<OccupationRecord>& occs) {
    synth::SimulationConfig sim;
    sim.context_sigma = j.at("context_sigma").get<double>();
    sim.occupation_pull = j.at("occupation_pull").get<double>();
    sim.gender_logit_scale = j.at("gender_logit_scale").get<double>();
    sim.occupation_cue = j.at("occupation_cue").get<double>();
    sim.occupation_logit_scale = j.at("occupation_logit_scale").get<double>();
    sim.occupation_lean = synth::sign_leans(occs);
    return sim;
}

void cmd_synth_create(const Globals& g, const SynthOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path dir = o.out_dir.empty() ? synthetic_dir(run) : fs::path(o.out_dir);
    fs::create_directories(dir);

    std::vector<fs::path> inputs;
    std::vector<NameRecord> roster;
    if (o.roster.empty()) {
        roster = synthetic_roster(o.names, g.seed);
    } else {
        roster = load_roster(o.roster);
        inputs.push_back(o.roster);
    }
    std::vector<OccupationRecord> occs = default_synth_occupations();
    if (!o.occupations.empty()) {
        occs = load_occupations(o.occupations);
        inputs.push_back(o.occupations);
    }

    synth::SynthConfig cfg;
    cfg.dim = o.dim;
    cfg.pair_count = o.pairs;
    cfg.alpha = o.alpha;
    cfg.sigma = o.sigma;
    cfg.seed = g.seed;
    const synth::SyntheticSpace space(cfg, roster);
    io::write_dump(dir, space.dump());

    ordered_json meta;
    meta["dim"] = o.dim;
    meta["pairs"] = o.pairs;
    meta["alpha"] = o.alpha;
    meta["sigma"] = o.sigma;
    meta["seed"] = g.seed;
    meta["model_id"] = cfg.model_id;
    synth::SimulationConfig sim;
    meta["simulation"] = {{"context_sigma", o.context_sigma},
                          {"occupation_pull", o.occupation_pull},
                          {"gender_logit_scale", sim.gender_logit_scale},
                          {"occupation_cue", sim.occupation_cue},
                          {"occupation_logit_scale", o.logit_scale}};
    cli::write_file(dir / "synth.json", meta.dump(2) + "\n");

    cli::write_file(dir / "roster.csv", csv_text([&](std::ostream& out) { write_roster(out, roster); }));
    cli::write_file(dir / "occupations.csv", csv_text([&](std::ostream& out) { write_occupations(out, occs); }));
    cli::write_file(dir / "bios.jsonl", csv_text([&](std::ostream& out) {
                        write_bios_jsonl(out, synth::synthetic_bios(occs, o.bios_per_gender, g.seed));
                    }));
    std::string corpus_text;
    for (const auto& line : synth::synthetic_corpus(space.gendered(), space.random(), o.sentences_per_word, g.seed)) {
        corpus_text += line + "\n";
    }
    cli::write_file(dir / "corpus.txt", corpus_text);

    const std::size_t seeds = std::min(o.seed_names, roster.size());
    const std::span<const NameRecord> seed_names(roster.data(), seeds);
    cli::write_file(dir / "name_sentences.csv", csv_text([&](std::ostream& out) {
                        csv::write_row(out, {"name", "sentence"});
                        for (const auto& [name, sentence] : synth::synthetic_name_sentences(seed_names, o.name_sentences)) {
                            csv::write_row(out, {name, sentence});
                        }
                    }));

    ordered_json params = meta;
    params["names"] = roster.size();
    params["bios_per_gender"] = o.bios_per_gender;
    params["sentences_per_word"] = o.sentences_per_word;
    params["name_sentences"] = o.name_sentences;
    params["seed_names"] = seeds;
    run.record("synth", inputs, params,
               {dir / "manifest.json", dir / "vectors.bin", dir / "synth.json", dir / "roster.csv",
                dir / "occupations.csv", dir / "bios.jsonl", dir / "corpus.txt", dir / "name_sentences.csv"});
}

void cmd_synth_answer(const Globals& g, const SynthOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path dir = o.out_dir.empty() ? synthetic_dir(run) : fs::path(o.out_dir);
    const auto meta = nlohmann::json::parse(cli::read_file(dir / "synth.json"));
    const auto roster = load_roster(dir / "roster.csv");
    const auto occs = load_occupations(dir / "occupations.csv");

    synth::SynthConfig cfg;
    cfg.dim = meta.at("dim").get<std::size_t>();
    cfg.pair_count = meta.at("pairs").get<std::size_t>();
    cfg.alpha = meta.at("alpha").get<double>();
    cfg.sigma = meta.at("sigma").get<double>();
    cfg.seed = meta.at("seed").get<std::uint64_t>();
    cfg.model_id = meta.at("model_id").get<std::string>();
    const synth::SyntheticSpace space(cfg, roster);
    const synth::SimulatedModel model(space, simulation_from(meta.at("simulation"), occs));

    const fs::path jobs_path = o.answer;
    const auto jobs = load_jobs(jobs_path);
    const auto shard = model.run(jobs);
    const auto out = run.results(stem_of(jobs_path));
    io::write_probe_results(out, shard.results, shard.vectors);
    run.record("synth:answer:" + stem_of(jobs_path),
               {jobs_path, dir / "synth.json", dir / "roster.csv", dir / "occupations.csv"},
               {{"jobs", jobs.size()}}, {out / "results.jsonl", out / "manifest.json", out / "vectors.bin"});
}

// ---------------------------------------------------------------------------
// mine-contexts / build-jobs / aggregate

struct MineOpts {
    std::string corpus, pairs, random, out;
    std::size_t limit = 3000;
    bool shuffle = false;
};

ordered_json context_to_json(const corpus::ContextSentence& c) {
    ordered_json j;
    j["word"] = c.target;
    j["source_id"] = c.source_id;
    j["text"] = c.text;
    auto spans = ordered_json::array();
    for (const auto& s : c.target_spans) spans.push_back({s.start, s.end});
    j["spans"] = std::move(spans);
    return j;
}

corpus::ContextSentence context_from_json(const nlohmann::json& j) {
    corpus::ContextSentence c;
    c.target = j.at("word").get<std::string>();
    c.source_id = j.at("source_id").get<std::string>();
    c.text = j.at("text").get<std::string>();
    for (const auto& s : j.at("spans")) c.target_spans.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    return c;
}

void cmd_mine(const Globals& g, const MineOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path corpus_path = pick(o.corpus, {synthetic_dir(run) / "corpus.txt"}, "corpus");
    std::ifstream in(corpus_path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + corpus_path.string() + "'");
    const auto sentences = corpus::read_sentences(in);

    corpus::MineOptions mo;
    if (o.shuffle) mo.shuffle_seed = g.seed;
    std::string text;
    std::size_t count = 0;
    for (bool random : {false, true}) {
        const auto table = load_pairs(random ? o.random : o.pairs, random);
        for (const auto& p : table.pairs()) {
            for (const auto& w : {p.female_word, p.male_word}) {
                for (const auto& c : corpus::mine_contexts(sentences, w, o.limit, mo)) {
                    text += context_to_json(c).dump() + "\n";
                    ++count;
                }
            }
        }
    }
    const fs::path out = o.out.empty() ? run.jobs("contexts.jsonl") : fs::path(o.out);
    cli::write_file(out, text);
    std::vector<fs::path> inputs{corpus_path};
    if (!o.pairs.empty()) inputs.push_back(o.pairs);
    if (!o.random.empty()) inputs.push_back(o.random);
    run.record("mine-contexts", inputs, {{"limit", o.limit}, {"shuffle", o.shuffle}, {"contexts", count}}, {out});
}

struct BuildOpts {
    std::string kind, contexts, pairs, random, names, sentences, out;
};

void cmd_build_words(RunDir& run, const BuildOpts& o) {
    const fs::path ctx_path = o.contexts.empty() ? run.jobs("contexts.jsonl") : fs::path(o.contexts);
    std::map<std::string, std::vector<corpus::ContextSentence>> by_word;
    {
        std::istringstream in(cli::read_file(ctx_path));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto c = context_from_json(nlohmann::json::parse(line));
            by_word[c.target].push_back(std::move(c));
        }
    }
    std::vector<io::ProbeJob> jobs;
    for (bool random : {false, true}) {
        const auto table = load_pairs(random ? o.random : o.pairs, random);
        for (const auto& p : table.pairs()) {
            for (const auto& [word, other] : {std::pair{p.female_word, p.male_word}, std::pair{p.male_word, p.female_word}}) {
                std::vector<corpus::ContextSentence> pool = by_word[word];
                if (pool.empty()) throw NoContextsError(word);
                for (const auto& c : by_word[other]) pool.push_back(corpus::swap_counterfactual(c, table));
                std::size_t k = 0;
                for (const auto& c : pool) {
                    if (c.target_spans.empty()) continue;
                    io::ProbeJob job{synth::word_key(word) + "#" + std::to_string(k++), c.text, {}, {}, false};
                    for (std::size_t i = 0; i < c.target_spans.size(); ++i) {
                        job.capture_spans.push_back(
                            {"occ" + std::to_string(i), c.target_spans[i].start, c.target_spans[i].end});
                    }
                    jobs.push_back(std::move(job));
                }
            }
        }
    }
    const fs::path out = o.out.empty() ? run.jobs("words.jsonl") : fs::path(o.out);
    write_jobs(out, jobs);
    std::vector<fs::path> inputs{ctx_path};
    if (!o.pairs.empty()) inputs.push_back(o.pairs);
    if (!o.random.empty()) inputs.push_back(o.random);
    run.record("build-jobs:words", inputs, {{"kind", "words"}, {"jobs", jobs.size()}}, {out});
}

void cmd_build_names(RunDir& run, const BuildOpts& o) {
    const fs::path roster_path = pick(o.names, {synthetic_dir(run) / "roster.csv"}, "roster");
    const fs::path sent_path = pick(o.sentences, {synthetic_dir(run) / "name_sentences.csv"}, "name sentences");
    const auto roster = load_roster(roster_path);
    const auto table = csv::read_file(sent_path.string());
    const auto cn = table.column("name"), cs = table.column("sentence");

    std::vector<io::ProbeJob> jobs;
    for (const auto& r : roster) {
        std::size_t k = 0;
        for (const auto& row : table.rows) {
            const auto text = corpus::replace_all_words(row[cs], row[cn], r.name);
            const auto spans = corpus::find_occurrences(text, r.name, {.case_insensitive = false, .whole_word = true});
            if (spans.empty()) throw ValidationError("name sentence lacks its seed name '" + row[cn] + "': " + row[cs]);
            io::ProbeJob job{synth::name_key(r.name) + "#" + std::to_string(k++), text, {}, {}, false};
            for (std::size_t i = 0; i < spans.size(); ++i) {
                job.capture_spans.push_back({"occ" + std::to_string(i), spans[i].start, spans[i].end});
            }
            jobs.push_back(std::move(job));
        }
    }
    const fs::path out = o.out.empty() ? run.jobs("names.jsonl") : fs::path(o.out);
    write_jobs(out, jobs);
    run.record("build-jobs:names", {roster_path, sent_path}, {{"kind", "names"}, {"jobs", jobs.size()}}, {out});
}

void cmd_build_jobs(const Globals& g, const BuildOpts& o) {
    RunDir run(g.run_dir, g.seed);
    if (o.kind == "words") return cmd_build_words(run, o);
    if (o.kind == "names") return cmd_build_names(run, o);
    throw ValidationError("build-jobs: --kind must be 'words' or 'names'");
}

struct AggregateOpts {
    std::string jobs, out;
    std::vector<std::string> results;
};

void cmd_aggregate(const Globals& g, const AggregateOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path jobs_path = o.jobs;
    const auto stem = stem_of(jobs_path);
    const auto jobs = load_jobs(jobs_path);
    const auto shards = results_or_default(run, o.results, stem);
    const auto results = io::read_probe_results(shards);
    const auto averaged = aggregate::aggregate_results(jobs, results, "occ");
    const fs::path out = o.out.empty() ? run.dumps(stem) : fs::path(o.out);
    io::write_dump(out, aggregate::to_dump(results.vectors.model_id(), averaged));
    std::vector<fs::path> inputs{jobs_path};
    inputs.insert(inputs.end(), shards.begin(), shards.end());
    run.record("aggregate:" + stem, inputs, {{"label_prefix", "occ"}, {"groups", averaged.size()}},
               {out / "manifest.json", out / "vectors.bin"});
}

// ---------------------------------------------------------------------------
// direction / validate

struct DirectionOpts {
    std::string dump, pairs, random;
};

std::vector<subspace::EmbeddingPair> pairs_from_dump(const io::EmbeddingDump& dump, const corpus::PairTable& table) {
    std::vector<subspace::EmbeddingPair> out;
    auto get = [&](const std::string& w) {
        const auto key = synth::word_key(w);
        if (!dump.contains(key)) throw ValidationError("embedding dump lacks '" + key + "'");
        const auto row = dump.row(key);
        return aggregate::AveragedEmbedding{key, {row.begin(), row.end()}, 1};
    };
    for (const auto& p : table.pairs()) out.push_back({get(p.female_word), get(p.male_word)});
    return out;
}

void cmd_direction(const Globals& g, const DirectionOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path src = pick(o.dump, {run.dumps("words"), synthetic_dir(run)}, "word embedding dump");
    const auto dump = io::read_dump(src);
    const auto gendered = pairs_from_dump(dump, load_pairs(o.pairs, false));
    const auto random = pairs_from_dump(dump, load_pairs(o.random, true));

    const auto gm = subspace::build_difference_matrix(gendered).rows;
    const auto rm = subspace::build_difference_matrix(random).rows;
    const auto full = [](const Eigen::MatrixXd& m) {
        return static_cast<std::size_t>(std::min(m.rows(), m.cols()));
    };
    const auto gp = subspace::pca(gm, full(gm));
    const auto rp = subspace::pca(rm, full(rm));

    std::vector<std::vector<double>> female, male;
    for (const auto& p : gendered) {
        female.push_back(p.female.vector);
        male.push_back(p.male.vector);
    }
    io::EmbeddingDump out(dump.model_id(), dump.dim());
    ordered_json meta;
    meta["source"] = run.display(src);
    meta["sign_convention"] = "positive=female";
    for (const auto mode : {subspace::DirectionMode::first, subspace::DirectionMode::second, subspace::DirectionMode::avg}) {
        const auto d = subspace::align_sign(subspace::select_direction(gp, mode), female, male);
        const std::string name = mode == subspace::DirectionMode::first    ? "first"
                                 : mode == subspace::DirectionMode::second ? "second"
                                                                           : "avg";
        out.add("direction:" + name, std::span<const double>(d.vector));
    }
    const auto rdir = subspace::select_direction(rp, subspace::DirectionMode::first);
    out.add("direction:random", std::span<const double>(rdir.vector));
    meta["evr_first"] = gp.explained_variance_ratios[0];
    meta["evr_second"] = gp.explained_variance_ratios.size() > 1 ? gp.explained_variance_ratios[1] : 0.0;
    meta["random_evr_first"] = rp.explained_variance_ratios[0];
    std::optional<io::EmbeddingDump> axis_src;
    const std::string axis_key(synth::kAxisKey);
    if (dump.contains(axis_key)) {
        axis_src = dump;
    } else if (fs::exists(synthetic_dir(run) / "manifest.json")) {
        axis_src = io::read_dump(synthetic_dir(run));
    }
    if (axis_src && axis_src->contains(axis_key) && axis_src->dim() == dump.dim()) {
        const auto axis = axis_src->row(axis_key);
        const auto first = out.row("direction:first");
        double c = 0.0;
        for (std::size_t i = 0; i < axis.size(); ++i) c += static_cast<double>(axis[i]) * first[i];
        meta["cos_planted_axis"] = c;
    }

    const auto dir = direction_dir(run);
    io::write_dump(dir, out);
    cli::write_file(dir / "direction.json", meta.dump(2) + "\n");
    const auto pca_csv = run.reports("pca.csv");
    cli::write_file(pca_csv, csv_text([&](std::ostream& os) {
                        csv::write_row(os, {"pairs", "component", "explained_variance_ratio", "singular_value"});
                        for (const auto& [label, r] : {std::pair{"gendered", &gp}, std::pair{"random", &rp}}) {
                            for (std::size_t i = 0; i < r->explained_variance_ratios.size(); ++i) {
                                csv::write_row(os, {label, std::to_string(i + 1),
                                                    csv::fmt(r->explained_variance_ratios[i]),
                                                    csv::fmt(r->singular_values[i])});
                            }
                        }
                    }));
    std::vector<fs::path> inputs{src};
    if (!o.pairs.empty()) inputs.push_back(o.pairs);
    if (!o.random.empty()) inputs.push_back(o.random);
    run.record("direction", inputs, meta, {dir / "manifest.json", dir / "vectors.bin", dir / "direction.json", pca_csv});
}

struct ValidateOpts {
    std::string names, embeddings;
    std::size_t seeds = 5;
    double train_fraction = 0.7;
};

void cmd_validate(const Globals& g, const ValidateOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path roster_path = pick(o.names, {synthetic_dir(run) / "roster.csv"}, "roster");
    const fs::path emb_path = names_dump_path(run, o.embeddings);
    const auto roster = load_roster(roster_path);
    const auto dump = io::read_dump(emb_path);

    Eigen::MatrixXd x(static_cast<Eigen::Index>(roster.size()), static_cast<Eigen::Index>(dump.dim()));
    for (std::size_t i = 0; i < roster.size(); ++i) {
        const auto v = name_vector(dump, roster[i].name);
        for (std::size_t c = 0; c < v.size(); ++c) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[c];
    }
    validate::DirectionSet dirs;
    const auto ddump = io::read_dump(direction_dir(run));
    auto load = [&](const char* key) -> std::optional<std::vector<double>> {
        if (!ddump.contains(key)) return std::nullopt;
        const auto row = ddump.row(key);
        return std::vector<double>(row.begin(), row.end());
    };
    dirs.first = load("direction:first");
    dirs.second = load("direction:second");
    dirs.avg = load("direction:avg");
    dirs.random = load("direction:random");

    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < o.seeds; ++i) seeds.push_back(g.seed + i);
    validate::ProtocolOptions po;
    po.train_fraction = o.train_fraction;
    std::vector<validate::ClassifierRun> runs;
    const auto rows = validate::run_protocol(roster, x, dirs, seeds, po, &runs);

    const auto table = run.reports("table1.csv"), runs_csv = run.reports("table1_runs.csv");
    cli::write_file(table, csv_text([&](std::ostream& os) { report::write_protocol_csv(os, rows); }));
    cli::write_file(runs_csv, csv_text([&](std::ostream& os) { report::write_protocol_runs_csv(os, runs); }));
    run.record("validate", {roster_path, emb_path, direction_dir(run)},
               {{"seeds", seeds}, {"train_fraction", o.train_fraction}}, {table, runs_csv});
}

// ---------------------------------------------------------------------------
// prior-probe / context-shift

struct ProbeOpts {
    std::string names, occupations, embeddings, mode = "first", prior_results_stem = "prior";
    std::vector<std::string> results;
    bool emit = false;
};

const std::vector<std::string> kGenderTokens{"female", "male"};

std::vector<io::ProbeJob> prior_jobs(const std::vector<NameRecord>& roster) {
    std::vector<io::ProbeJob> jobs;
    const auto tmpl = corpus::prior_prompt();
    for (const auto& r : roster) {
        jobs.push_back(job_from_prompt("prior|" + r.name, corpus::instantiate_prompt(tmpl, r.name), kGenderTokens));
    }
    return jobs;
}

double p_female_of(const io::ProbeResultSet& rs, const std::string& id) {
    return probe::two_way_softmax(rs.logit(id, "female"), rs.logit(id, "male")).first;
}

void cmd_prior(const Globals& g, const ProbeOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path roster_path = pick(o.names, {synthetic_dir(run) / "roster.csv"}, "roster");
    const auto roster = load_roster(roster_path);
    const auto jobs = prior_jobs(roster);
    if (o.emit) {
        const auto out = run.jobs("prior.jsonl");
        write_jobs(out, jobs);
        run.record("prior-probe:emit", {roster_path}, {{"jobs", jobs.size()}}, {out});
        return;
    }
    const auto shards = results_or_default(run, o.results, "prior");
    const auto rs = io::read_probe_results(shards);
    io::require_complete(jobs, rs);
    const fs::path emb_path = names_dump_path(run, o.embeddings);
    const auto dump = io::read_dump(emb_path);
    const auto g_vec = load_direction(run, o.mode);

    std::vector<report::PFemaleRow> prows;
    std::vector<report::NameCorrelationRow> crows;
    std::vector<double> smooth, dots, priors;
    for (const auto& r : roster) {
        const double p = p_female_of(rs, "prior|" + r.name);
        const double d = probe::project(name_vector(dump, r.name), g_vec);
        prows.push_back({r.name, "prior", p});
        crows.push_back({r.name, r.pct_female, analysis::bucket_smooth(r.pct_female), d, p});
        smooth.push_back(crows.back().smoothed_pct);
        dots.push_back(d);
        priors.push_back(p);
    }
    const auto study = analysis::correlation_study(smooth, dots, priors);
    const auto p_csv = run.reports("prior_p_female.csv"), n_csv = run.reports("name_correlation.csv"),
               c_csv = run.reports("correlation.csv");
    cli::write_file(p_csv, csv_text([&](std::ostream& os) { report::write_p_female_csv(os, prows); }));
    cli::write_file(n_csv, csv_text([&](std::ostream& os) { report::write_name_correlation_csv(os, crows); }));
    cli::write_file(c_csv, csv_text([&](std::ostream& os) { report::write_correlation_summary_csv(os, study); }));
    std::vector<fs::path> inputs{roster_path, emb_path, direction_dir(run)};
    inputs.insert(inputs.end(), shards.begin(), shards.end());
    run.record("prior-probe", inputs, {{"mode", o.mode}}, {p_csv, n_csv, c_csv});
}

std::vector<std::string> shift_conditions(const std::vector<OccupationRecord>& occs) {
    auto out = occupation_names(occs);
    out.emplace_back(analysis::kBaselineCondition);
    return out;
}

std::string shift_id(const std::string& condition, const std::string& name) { return "cs|" + condition + "|" + name; }

void cmd_context_shift(const Globals& g, const ProbeOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path roster_path = pick(o.names, {synthetic_dir(run) / "roster.csv"}, "roster");
    const fs::path occ_path = pick(o.occupations, {synthetic_dir(run) / "occupations.csv"}, "occupations");
    const auto roster = load_roster(roster_path);
    const auto conditions = shift_conditions(load_occupations(occ_path));

    std::vector<io::ProbeJob> jobs;
    const auto tmpl = corpus::gender_prediction_prompt();
    for (const auto& c : conditions) {
        for (const auto& r : roster) {
            jobs.push_back(job_from_prompt(shift_id(c, r.name), corpus::instantiate_prompt(tmpl, r.name, c), kGenderTokens));
        }
    }
    if (o.emit) {
        const auto out = run.jobs("context_shift.jsonl");
        write_jobs(out, jobs);
        run.record("context-shift:emit", {roster_path, occ_path}, {{"jobs", jobs.size()}}, {out});
        return;
    }
    const auto shards = results_or_default(run, o.results, "context_shift");
    const auto rs = io::read_probe_results(shards);
    io::require_complete(jobs, rs);
    const auto prior_shards = default_results(run, o.prior_results_stem);
    const auto prior = io::read_probe_results(prior_shards);
    io::require_complete(prior_jobs(roster), prior);
    const auto g_vec = load_direction(run, o.mode);

    std::vector<report::DotRow> drows;
    std::vector<report::PFemaleRow> prows;
    std::vector<analysis::ContextShiftRecord> recs;
    for (const auto& c : conditions) {
        for (const auto& r : roster) {
            const auto id = shift_id(c, r.name);
            const double d1 = probe::project(rs.span_vector(id, "name_first"), std::span<const double>(g_vec));
            const double d2 = probe::project(rs.span_vector(id, "name_second"), std::span<const double>(g_vec));
            const double d3 = probe::project(rs.span_vector(id, "name_last"), std::span<const double>(g_vec));
            const double p = p_female_of(rs, id);
            drows.push_back({r.name, c, "first", d1});
            drows.push_back({r.name, c, "second", d2});
            drows.push_back({r.name, c, "last", d3});
            prows.push_back({r.name, c, p});
            recs.push_back({r.name, r.pct_female, c, d1, d2, p, p_female_of(prior, "prior|" + r.name)});
        }
    }
    const auto rows = analysis::context_shift_study(recs);
    const auto d_csv = run.reports("context_shift_dot.csv"), p_csv = run.reports("context_shift_p_female.csv"),
               s_csv = run.reports("context_shift.csv");
    cli::write_file(d_csv, csv_text([&](std::ostream& os) { report::write_dot_csv(os, drows); }));
    cli::write_file(p_csv, csv_text([&](std::ostream& os) { report::write_p_female_csv(os, prows); }));
    cli::write_file(s_csv, csv_text([&](std::ostream& os) { report::write_context_shift_csv(os, rows); }));
    std::vector<fs::path> inputs{roster_path, occ_path, direction_dir(run)};
    inputs.insert(inputs.end(), shards.begin(), shards.end());
    inputs.insert(inputs.end(), prior_shards.begin(), prior_shards.end());
    run.record("context-shift", inputs, {{"mode", o.mode}}, {d_csv, p_csv, s_csv});
}

// ---------------------------------------------------------------------------
// downstream

struct DownstreamOpts {
    std::string names, occupations, bios, mode = "first";
    std::vector<std::string> results;
    bool emit = false, count_only = false, anonymized = false;
};

void cmd_downstream(const Globals& g, const DownstreamOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const fs::path roster_path = pick(o.names, {synthetic_dir(run) / "roster.csv"}, "roster");
    const fs::path occ_path = pick(o.occupations, {synthetic_dir(run) / "occupations.csv"}, "occupations");
    const fs::path bios_path = pick(o.bios, {synthetic_dir(run) / "bios.jsonl"}, "biographies");
    const auto roster = load_roster(roster_path);
    const auto occs = load_occupations(occ_path);
    auto bios = read_bios_file(bios_path.string());

    std::vector<std::string> names;
    if (o.anonymized) {
        names.emplace_back(analysis::kAnonymizedName);
    } else {
        for (const auto& r : roster) names.push_back(r.name);
    }
    const analysis::DownstreamJobs jobs(names, std::move(bios), occupation_names(occs));
    std::cout << ordered_json{{"command", "downstream"}, {"anonymized", o.anonymized}, {"jobs", jobs.count()}}.dump()
              << std::endl;
    if (o.count_only) return;

    const std::string stem = o.anonymized ? "downstream_anonymized" : "downstream";
    const std::vector<fs::path> base_inputs{roster_path, occ_path, bios_path};
    if (o.emit) {
        const auto out = run.jobs(stem + ".jsonl");
        fs::create_directories(out.parent_path());
        std::ofstream os(out, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write '" + out.string() + "'");
        jobs.for_each([&](std::size_t n, std::size_t b) {
            const auto job = jobs.make_job(n, b);
            io::validate_job(job);
            os << io::to_json(job).dump() << '\n';
        });
        os.close();
        run.record("downstream:emit" + std::string(o.anonymized ? ":anonymized" : ""), base_inputs,
                   {{"jobs", jobs.count()}, {"anonymized", o.anonymized}}, {out});
        return;
    }

    const auto shards = results_or_default(run, o.results, stem);
    const auto rs = io::read_probe_results(shards);
    const auto g_vec = load_direction(run, o.mode);
    const auto ds = analysis::downstream_stats(jobs, rs, g_vec);
    std::vector<fs::path> inputs = base_inputs;
    inputs.push_back(direction_dir(run));
    inputs.insert(inputs.end(), shards.begin(), shards.end());

    if (o.anonymized) {
        const auto out = run.reports("anonymized.csv");
        const auto base = analysis::anonymized_baseline(ds);
        cli::write_file(out, csv_text([&](std::ostream& os) { report::write_anonymized_csv(os, base); }));
        run.record("downstream:anonymized", inputs, {{"mode", o.mode}}, {out});
        return;
    }
    const auto rep = analysis::bias_report(ds, roster, occs);
    for (const auto& w : rep.warnings) std::cerr << ordered_json{{"warning", w}}.dump() << '\n';
    const auto scatter = run.reports("downstream_scatter.csv"), bias = run.reports("bias_report.csv");
    cli::write_file(scatter, csv_text([&](std::ostream& os) { report::write_downstream_scatter_csv(os, ds, roster); }));
    cli::write_file(bias, csv_text([&](std::ostream& os) { report::write_bias_report_csv(os, rep); }));
    ordered_json params{{"mode", o.mode}};
    if (rep.agreement) {
        params["agreement"] = {{"rho", rep.agreement->coefficient},
                               {"p_value", rep.agreement->p_value},
                               {"n", rep.agreement->n}};
    }
    run.record("downstream", inputs, params, {scatter, bias}, rep.warnings);
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
    std::string fig = "all";
};

std::string file_safe(std::string s) {
    for (auto& c : s) {
        if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
    }
    return s;
}

void cmd_report(const Globals& g, const ReportOpts& o) {
    RunDir run(g.run_dir, g.seed);
    const bool all = o.fig == "all";
    if (!all && o.fig != "heatmap" && o.fig != "scatter" && o.fig != "correlation") {
        throw ValidationError("report: --fig must be heatmap, scatter, correlation or all");
    }
    std::vector<fs::path> inputs, outputs;
    auto need = [&](const fs::path& p) {
        if (fs::exists(p)) return true;
        if (!all) throw ValidationError("report: missing input '" + run.display(p) + "'");
        return false;
    };

    if ((all || o.fig == "heatmap") && need(run.reports("bias_report.csv"))) {
        const auto src = run.reports("bias_report.csv");
        const auto full = csv::read_file(src.string());
        csv::Table t;
        t.header = {"occupation", "pct_female_bios", "bias_coefficient", "bias_marker", "internal_coefficient",
                    "internal_marker"};
        for (const auto& row : full.rows) {
            csv::Row r;
            for (const auto& h : t.header) r.push_back(row[full.column(h)]);
            t.rows.push_back(std::move(r));
        }
        const auto hcsv = run.reports("bias_heatmap.csv"), hsvg = run.reports("bias_heatmap.svg");
        cli::write_file(hcsv, csv_text([&](std::ostream& os) {
                            csv::write_row(os, t.header);
                            for (const auto& r : t.rows) csv::write_row(os, r);
                        }));
        cli::write_file(hsvg, report::bias_heatmap_svg(csv::read_file(hcsv.string())));
        inputs.push_back(src);
        outputs.insert(outputs.end(), {hcsv, hsvg});
    }
    if ((all || o.fig == "scatter") && need(run.reports("downstream_scatter.csv"))) {
        const auto src = run.reports("downstream_scatter.csv");
        const auto t = csv::read_file(src.string());
        std::vector<std::string> occs;
        for (const auto& row : t.rows) {
            const auto& occ = row[t.column("occupation")];
            if (std::find(occs.begin(), occs.end(), occ) == occs.end()) occs.push_back(occ);
        }
        for (const auto& occ : occs) {
            const auto a = run.reports("scatter/" + file_safe(occ) + "_tpr.svg");
            const auto b = run.reports("scatter/" + file_safe(occ) + "_internal.svg");
            cli::write_file(a, report::scatter_svg(t, "pct_female", "tpr", occ + ": TPR by %female", "occupation", occ));
            cli::write_file(b, report::scatter_svg(t, "mean_dot", "mean_p_true", occ + ": P(true) by projection",
                                                   "occupation", occ));
            outputs.insert(outputs.end(), {a, b});
        }
        inputs.push_back(src);
    }
    if ((all || o.fig == "correlation") && need(run.reports("name_correlation.csv"))) {
        const auto src = run.reports("name_correlation.csv");
        const auto t = csv::read_file(src.string());
        const std::vector<std::tuple<std::string, std::string, std::string>> figs{
            {"smoothed_pct", "dot_wiki", "correlation_pct_dot.svg"},
            {"smoothed_pct", "p_prior", "correlation_pct_prior.svg"},
            {"dot_wiki", "p_prior", "correlation_dot_prior.svg"}};
        for (const auto& [x, y, file] : figs) {
            const auto out = run.reports(file);
            cli::write_file(out, report::scatter_svg(t, x, y, y + " by " + x));
            outputs.push_back(out);
        }
        inputs.push_back(src);
    }
    if (outputs.empty()) throw ValidationError("report: no report CSVs found under reports/");
    run.record("report:" + o.fig, inputs, {{"fig", o.fig}}, outputs);
}

// ---------------------------------------------------------------------------

std::string default_run_root() {
    const char* env = std::getenv("GENDIR_RUN_ROOT");
    return env && *env ? env : ".";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gendir: gender-direction extraction, validation and bias analysis"};
    app.require_subcommand(1);
    app.allow_config_extras(CLI::config_extras_mode::error);

    Globals g;
    g.run_dir = default_run_root();
    app.add_option("--run-dir", g.run_dir, "Run directory (default: $GENDIR_RUN_ROOT or .)");
    app.add_option("--seed", g.seed, "Global seed")->capture_default_str();
    app.set_config("--config", "", "TOML or JSON config file");
    for (int i = 1; i + 1 < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && fs::path(argv[i + 1]).extension() == ".json") {
            app.config_formatter(std::make_shared<ConfigJSON>());
        }
    }

    SynthOpts so;
    auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic space, or answer a job file from it");
    synth_cmd->add_option("--dim", so.dim)->capture_default_str();
    synth_cmd->add_option("--pairs", so.pairs, "Gendered pair count")->capture_default_str();
    synth_cmd->add_option("--alpha", so.alpha, "Planted strength")->capture_default_str();
    synth_cmd->add_option("--sigma", so.sigma, "Isotropic noise")->capture_default_str();
    synth_cmd->add_option("--names", so.names, "Synthetic roster size")->capture_default_str();
    synth_cmd->add_option("--roster", so.roster, "Use this roster instead of a synthetic one");
    synth_cmd->add_option("--occupations", so.occupations, "occupation,pct_female_bios CSV");
    synth_cmd->add_option("--bios-per-gender", so.bios_per_gender)->capture_default_str();
    synth_cmd->add_option("--sentences-per-word", so.sentences_per_word)->capture_default_str();
    synth_cmd->add_option("--name-sentences", so.name_sentences)->capture_default_str();
    synth_cmd->add_option("--seed-names", so.seed_names)->capture_default_str();
    synth_cmd->add_option("--context-sigma", so.context_sigma)->capture_default_str();
    synth_cmd->add_option("--occupation-pull", so.occupation_pull)->capture_default_str();
    synth_cmd->add_option("--logit-scale", so.logit_scale, "Occupation logit slope in the projection")
        ->capture_default_str();
    synth_cmd->add_option("--answer", so.answer, "Job file to answer with the simulated model");
    synth_cmd->add_option("--space", so.out_dir, "Synthetic space directory (default dumps/synthetic)");

    MineOpts mo;
    auto* mine_cmd = app.add_subcommand("mine-contexts", "Collect context sentences for every pair word");
    mine_cmd->add_option("--corpus", mo.corpus, "One sentence per line");
    mine_cmd->add_option("--pairs", mo.pairs, "Gendered pair CSV");
    mine_cmd->add_option("--random", mo.random, "Random pair CSV");
    mine_cmd->add_option("--limit", mo.limit, "Contexts per word")->capture_default_str();
    mine_cmd->add_flag("--shuffle", mo.shuffle, "Sample matches with the global seed");
    mine_cmd->add_option("--out", mo.out);

    BuildOpts bo;
    auto* build_cmd = app.add_subcommand("build-jobs", "Write probe jobs for word or name embeddings");
    build_cmd->add_option("--kind", bo.kind)->required()->check(CLI::IsMember({"words", "names"}));
    build_cmd->add_option("--contexts", bo.contexts);
    build_cmd->add_option("--pairs", bo.pairs);
    build_cmd->add_option("--random", bo.random);
    build_cmd->add_option("--names", bo.names, "Roster CSV");
    build_cmd->add_option("--sentences", bo.sentences, "name,sentence CSV of seed contexts");
    build_cmd->add_option("--out", bo.out);

    AggregateOpts ao;
    auto* agg_cmd = app.add_subcommand("aggregate", "Average probe results into one embedding per word or name");
    agg_cmd->add_option("--jobs", ao.jobs)->required();
    agg_cmd->add_option("--results", ao.results, "Result shard directories");
    agg_cmd->add_option("--out", ao.out);

    DirectionOpts dopts;
    auto* dir_cmd = app.add_subcommand("direction", "Extract the gender direction");
    dir_cmd->add_option("--dump", dopts.dump, "Word embedding dump");
    dir_cmd->add_option("--pairs", dopts.pairs);
    dir_cmd->add_option("--random", dopts.random);

    ValidateOpts vo;
    auto* val_cmd = app.add_subcommand("validate", "Classifier protocol on name embeddings");
    val_cmd->add_option("--names", vo.names, "Roster CSV");
    val_cmd->add_option("--embeddings", vo.embeddings, "Name embedding dump");
    val_cmd->add_option("--seeds", vo.seeds, "Number of splits")->capture_default_str();
    val_cmd->add_option("--train-fraction", vo.train_fraction)->capture_default_str();

    ProbeOpts po;
    auto* prior_cmd = app.add_subcommand("prior-probe", "Name-only gender probe");
    prior_cmd->add_option("--names", po.names, "Roster CSV");
    prior_cmd->add_option("--embeddings", po.embeddings, "Name embedding dump");
    prior_cmd->add_option("--results", po.results);
    prior_cmd->add_option("--mode", po.mode)->check(CLI::IsMember({"first", "second", "avg"}))->capture_default_str();
    prior_cmd->add_flag("--emit", po.emit, "Write jobs instead of analysing results");

    ProbeOpts co;
    auto* cs_cmd = app.add_subcommand("context-shift", "Gender probe under occupational context");
    cs_cmd->add_option("--names", co.names, "Roster CSV");
    cs_cmd->add_option("--occupations", co.occupations, "Occupation CSV");
    cs_cmd->add_option("--results", co.results);
    cs_cmd->add_option("--mode", co.mode)->check(CLI::IsMember({"first", "second", "avg"}))->capture_default_str();
    cs_cmd->add_flag("--emit", co.emit, "Write jobs instead of analysing results");

    DownstreamOpts dso;
    auto* ds_cmd = app.add_subcommand("downstream", "Occupation prediction from biographies");
    ds_cmd->add_option("--names", dso.names, "Roster CSV");
    ds_cmd->add_option("--occupations", dso.occupations, "Occupation CSV");
    ds_cmd->add_option("--bios", dso.bios, "Biographies (.jsonl or .csv)");
    ds_cmd->add_option("--results", dso.results);
    ds_cmd->add_option("--mode", dso.mode)->check(CLI::IsMember({"first", "second", "avg"}))->capture_default_str();
    ds_cmd->add_flag("--emit", dso.emit, "Write jobs instead of analysing results");
    ds_cmd->add_flag("--count-only", dso.count_only, "Report the job count and stop");
    ds_cmd->add_flag("--anonymized", dso.anonymized, "Replace every name by X");

    ReportOpts ro;
    auto* rep_cmd = app.add_subcommand("report", "Render figures from report CSVs");
    rep_cmd->add_option("--fig", ro.fig)->check(CLI::IsMember({"heatmap", "scatter", "correlation", "all"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error({2, ordered_json{{"error", "usage"}, {"message", e.what()}}});
    }

    try {
        if (*synth_cmd) {
            so.answer.empty() ? cmd_synth_create(g, so) : cmd_synth_answer(g, so);
        } else if (*mine_cmd) {
            cmd_mine(g, mo);
        } else if (*build_cmd) {
            cmd_build_jobs(g, bo);
        } else if (*agg_cmd) {
            cmd_aggregate(g, ao);
        } else if (*dir_cmd) {
            cmd_direction(g, dopts);
        } else if (*val_cmd) {
            cmd_validate(g, vo);
        } else if (*prior_cmd) {
            cmd_prior(g, po);
        } else if (*cs_cmd) {
            cmd_context_shift(g, co);
        } else if (*ds_cmd) {
            cmd_downstream(g, dso);
        } else if (*rep_cmd) {
            cmd_report(g, ro);
        }
    } catch (const Error& e) {
        return report_error(to_exit(e));
    } catch (const nlohmann::json::exception& e) {
        return report_error({2, ordered_json{{"error", "validation"}, {"message", e.what()}}});
    } catch (const fs::filesystem_error& e) {
        return report_error({1, ordered_json{{"error", "io"}, {"message", e.what()}}});
    } catch (const std::exception& e) {
        return report_error({1, ordered_json{{"error", "internal"}, {"message", e.what()}}});
    }
    return 0;
}
