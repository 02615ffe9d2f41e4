#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pipeline_fixture.hpp"

using namespace gendir;
using namespace gendir::synth;

namespace {

double dot(std::span<const float> a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < b.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<float> values(const io::EmbeddingDump& d) { return {d.data().begin(), d.data().end()}; }

std::vector<NameRecord> tiny_roster() {
    return {{"Ana", 100.0, Race::Hispanic, 10}, {"Sam", 50.0, Race::White, 10}, {"Bo", 0.0, Race::Asian, 10}};
}

} // namespace

TEST(Synthetic, NoiselessPairsAreExactlyPlanted) {
    SynthConfig cfg;
    cfg.sigma = 0.0;
    cfg.alpha = 1.5;
    const SyntheticSpace space(cfg, tiny_roster());
    for (const auto& p : space.gendered().pairs()) {
        const auto f = space.vector_of(p.female_word), m = space.vector_of(p.male_word);
        for (std::size_t i = 0; i < f.size(); ++i) EXPECT_NEAR((f[i] - m[i]) / 2, 1.5 * space.axis()[i], 1e-12);
    }
    const auto dir = fixture::direction_from_dump(space.gendered(), space.dump());
    EXPECT_EQ(dir.evr, 1.0);
    double c = 0;
    for (std::size_t i = 0; i < dir.vector.size(); ++i) c += dir.vector[i] * space.axis()[i];
    EXPECT_NEAR(c, 1.0, 1e-6);
}

TEST(Synthetic, NameComponentFollowsPercentFemale) {
    SynthConfig cfg;
    cfg.sigma = 0.0;
    const SyntheticSpace space(cfg, tiny_roster());
    const auto d = space.dump();
    EXPECT_NEAR(dot(d.row("name:Ana"), space.axis()), 1.0, 1e-6);
    EXPECT_NEAR(dot(d.row("name:Sam"), space.axis()), 0.0, 1e-6);
    EXPECT_NEAR(dot(d.row("name:Bo"), space.axis()), -1.0, 1e-6);
}

TEST(Synthetic, PlantedRecoveryWithNoise) {
    SynthConfig cfg;
    cfg.sigma = 0.05;
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        const SyntheticSpace space(cfg, tiny_roster());
        const auto dir = fixture::direction_from_dump(space.gendered(), space.dump());
        double c = 0;
        for (std::size_t i = 0; i < dir.vector.size(); ++i) c += dir.vector[i] * space.axis()[i];
        EXPECT_GE(c, 0.99);
        EXPECT_GE(dir.evr, 0.9);
    }
}

TEST(Synthetic, Reproducible) {
    SynthConfig cfg;
    const auto a = generate_synthetic_space(cfg, tiny_roster());
    const auto b = generate_synthetic_space(cfg, tiny_roster());
    EXPECT_EQ(values(a), values(b));
    cfg.seed = 8;
    EXPECT_NE(values(generate_synthetic_space(cfg, tiny_roster())), values(a));
}

TEST(Synthetic, ConfigErrors) {
    SynthConfig cfg;
    cfg.dim = 1;
    EXPECT_THROW(SyntheticSpace(cfg, {}), ValidationError);
    cfg = {};
    cfg.planted_axis = std::vector<double>(64, 1.0);
    EXPECT_THROW(SyntheticSpace(cfg, {}), ValidationError);
    cfg = {};
    cfg.sigma = -1;
    EXPECT_THROW(SyntheticSpace(cfg, {}), ValidationError);
}

TEST(Synthetic, SimulatedModelAnswersGenderProbe) {
    SynthConfig cfg;
    const SyntheticSpace space(cfg, tiny_roster());
    const SimulatedModel model(space, {});
    std::vector<io::ProbeJob> jobs;
    for (const auto& n : tiny_roster()) {
        const auto p = corpus::instantiate_prompt(corpus::prior_prompt(), n.name);
        io::ProbeJob j{"prior|" + n.name, p.text, {}, {"female", "male"}, true};
        for (const auto& s : p.name_spans) j.capture_spans.push_back({s.label, s.span.start, s.span.end});
        jobs.push_back(j);
    }
    const auto shard = model.run(jobs);
    ASSERT_EQ(shard.results.size(), 3u);
    auto p_female = [&](std::size_t i) {
        const auto& l = shard.results[i].logits;
        return probe::two_way_softmax(l.at("female"), l.at("male")).first;
    };
    EXPECT_GT(p_female(0), p_female(1));
    EXPECT_GT(p_female(1), p_female(2));
    EXPECT_TRUE(shard.vectors.contains("prior|Ana/name_last"));

    // Deterministic across runs.
    const auto again = model.run(jobs);
    EXPECT_EQ(values(again.vectors), values(shard.vectors));
}

TEST(Synthetic, TextFixtures) {
    const auto lines = synthetic_corpus(corpus::gendered_pairs(), corpus::random_pairs(), 3, 1);
    const auto gendered = corpus::gendered_pairs();
    for (const auto& p : gendered.pairs()) {
        const auto ctx = corpus::mine_contexts(lines, p.female_word, 3000);
        EXPECT_GE(ctx.size(), 3u) << p.female_word;
    }
    const auto roster = tiny_roster();
    EXPECT_EQ(synthetic_name_sentences(roster, 4).size(), 12u);
    const auto bios = synthetic_bios(fixture::four_occupations(), 5, 1);
    EXPECT_EQ(bios.size(), 40u);
    for (const auto& b : bios) {
        EXPECT_NE(b.bio_text.find("[NAME]"), std::string::npos);
        EXPECT_FALSE(corpus::find_occurrences(b.bio_text, b.occupation).empty());
    }
}

TEST(Synthetic, OccupationPullsOnlyLaterSpans) {
    SynthConfig cfg;
    const SyntheticSpace space(cfg, tiny_roster());
    SimulationConfig sim;
    sim.occupation_lean = sign_leans(std::vector<OccupationRecord>{{"nurse", 90.9}, {"pastor", 24.09}});
    const SimulatedModel model(space, sim);
    std::vector<io::ProbeJob> jobs;
    for (const std::string occ : {"nurse", "pastor"}) {
        const auto p = corpus::instantiate_prompt(corpus::gender_prediction_prompt(), "Ana", occ);
        io::ProbeJob j{occ, p.text, {}, {}, false};
        for (const auto& s : p.name_spans) j.capture_spans.push_back({s.label, s.span.start, s.span.end});
        jobs.push_back(j);
    }
    const auto shard = model.run(jobs);
    auto proj = [&](const std::string& key) { return dot(shard.vectors.row(key), space.axis()); };
    EXPECT_NEAR(proj("nurse/name_second") - proj("nurse/name_first"), sim.occupation_pull, 1e-5);
    EXPECT_NEAR(proj("pastor/name_second") - proj("pastor/name_first"), -sim.occupation_pull, 1e-5);
}
