#pragma once

// Library-level synthetic pipelines shared by the unit and acceptance tests.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gendir/gendir.hpp"

namespace fixture {

using namespace gendir;

/// Mixed-lean occupations: two female-leaning, two male-leaning.
inline std::vector<OccupationRecord> four_occupations() {
    return {{"nurse", 90.9}, {"dietitian", 92.8}, {"pastor", 24.09}, {"comedian", 21.1}};
}

struct Direction {
    std::vector<double> vector;
    double evr = 0.0;
};

/// First-PC direction of a pair table stored in a synthetic dump, sign-aligned.
inline Direction direction_from_dump(const corpus::PairTable& table, const io::EmbeddingDump& dump) {
    std::vector<subspace::EmbeddingPair> pairs;
    std::vector<std::vector<double>> female, male;
    auto get = [&](const std::string& w) {
        const auto row = dump.row(synth::word_key(w));
        return aggregate::AveragedEmbedding{synth::word_key(w), std::vector<double>(row.begin(), row.end()), 1};
    };
    for (const auto& p : table.pairs()) {
        pairs.push_back({get(p.female_word), get(p.male_word)});
        female.push_back(pairs.back().female.vector);
        male.push_back(pairs.back().male.vector);
    }
    const auto r = subspace::pca(subspace::build_difference_matrix(pairs).rows, 1);
    const auto g = subspace::align_sign(subspace::select_direction(r, subspace::DirectionMode::first), female, male);
    return {g.vector, r.explained_variance_ratios[0]};
}

struct BiasRun {
    analysis::DownstreamStats stats;
    analysis::BiasReport report;
    std::map<std::string, double> lean;
};

/// Synthetic roster, simulated model, downstream prompts, bias report.
inline BiasRun bias_pipeline(std::size_t names, std::size_t bios_per_gender, double occupation_logit_scale,
                             std::uint64_t seed = 7) {
    const auto roster = synthetic_roster(names, seed);
    synth::SynthConfig cfg;
    cfg.seed = seed;
    const synth::SyntheticSpace space(cfg, roster);
    const auto direction = direction_from_dump(space.gendered(), space.dump());

    const auto occs = four_occupations();
    synth::SimulationConfig sim;
    sim.occupation_lean = synth::sign_leans(occs);
    sim.occupation_logit_scale = occupation_logit_scale;
    const synth::SimulatedModel model(space, sim);

    std::vector<std::string> name_list, occ_names;
    for (const auto& r : roster) name_list.push_back(r.name);
    for (const auto& o : occs) occ_names.push_back(o.occupation);
    const analysis::DownstreamJobs jobs(name_list, synth::synthetic_bios(occs, bios_per_gender, seed), occ_names);

    std::vector<io::ProbeJob> batch;
    batch.reserve(jobs.count());
    jobs.for_each([&](std::size_t n, std::size_t b) { batch.push_back(jobs.make_job(n, b)); });
    auto shard = model.run(batch);

    io::ProbeResultSet results;
    for (auto& r : shard.results) results.jobs.emplace(r.id, std::move(r));
    results.vectors = std::move(shard.vectors);

    BiasRun out;
    out.stats = analysis::downstream_stats(jobs, results, direction.vector);
    out.report = analysis::bias_report(out.stats, roster, occs);
    out.lean = sim.occupation_lean;
    return out;
}

/// Name embeddings of a synthetic roster, one row per name.
inline Eigen::MatrixXd name_matrix(const io::EmbeddingDump& dump, const std::vector<NameRecord>& roster) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(roster.size()), static_cast<Eigen::Index>(dump.dim()));
    for (std::size_t i = 0; i < roster.size(); ++i) {
        const auto row = dump.row(synth::name_key(roster[i].name));
        for (std::size_t c = 0; c < row.size(); ++c) {
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    return x;
}

} // namespace fixture
