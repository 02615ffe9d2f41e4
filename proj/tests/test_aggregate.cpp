#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "gendir/aggregate.hpp"
#include "gendir/rng.hpp"

using namespace gendir;
using namespace gendir::aggregate;

namespace {

std::vector<double> random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed, "agg");
    std::vector<double> m(rows * dim);
    for (auto& x : m) x = rng.normal();
    return m;
}

// Independent column mean: per column, walk the rows.
std::vector<double> loop_mean(const std::vector<double>& m, std::size_t dim) {
    const std::size_t rows = m.size() / dim;
    std::vector<double> out(dim);
    for (std::size_t c = 0; c < dim; ++c) {
        long double s = 0;
        for (std::size_t r = 0; r < rows; ++r) s += m[r * dim + c];
        out[c] = static_cast<double>(s / rows);
    }
    return out;
}

} // namespace

TEST(Aggregate, SingleRowIsIdentity) {
    const std::vector<double> v{1.5, -2, 3};
    EXPECT_EQ(average_subtokens(std::span<const double>(v), 3), v);
    const auto c = average_contexts("k", std::span<const double>(v), 3);
    EXPECT_EQ(c.vector, v);
    EXPECT_EQ(c.context_count, 1u);
}

TEST(Aggregate, Midpoint) {
    const std::vector<float> rows{1, 0, 0, 1};
    EXPECT_EQ(average_occurrences(std::span<const float>(rows), 2), (std::vector<double>{0.5, 0.5}));
}

TEST(Aggregate, MatchesLoopOracle) {
    const auto m = random_matrix(5, 8, 1);
    const auto got = average_subtokens(std::span<const double>(m), 8);
    const auto want = loop_mean(m, 8);
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
}

TEST(Aggregate, EmptyInputRejected) {
    const std::vector<double> none;
    EXPECT_THROW(average_subtokens(std::span<const double>(none), 4), ValidationError);
    const std::vector<double> ragged{1, 2, 3};
    EXPECT_THROW(average_contexts("k", std::span<const double>(ragged), 2), ValidationError);
}

TEST(Aggregate, ContextCounts) {
    const auto words = random_matrix(6000, 4, 2);
    EXPECT_EQ(average_contexts("word:she", std::span<const double>(words), 4).context_count, 6000u);
    const auto names = random_matrix(240, 4, 3);
    EXPECT_EQ(average_contexts("name:Khoa", std::span<const double>(names), 4).context_count, 240u);
}

TEST(Aggregate, Float64AccumulationOfManyFloat32Rows) {
    // 6000 rows of 0.1f: a float32 running sum drifts, a double sum does not.
    const std::vector<float> rows(6000, 0.1f);
    const auto mean = average_contexts("k", std::span<const float>(rows), 1).vector[0];
    EXPECT_NEAR(mean, static_cast<double>(0.1f), 1e-12);
}

TEST(Aggregate, PermutationInvariantAndCommutesWithLinearMap) {
    const std::size_t rows = 50, dim = 6;
    auto m = random_matrix(rows, dim, 4);
    const auto base = average_contexts("k", std::span<const double>(m), dim).vector;

    // Permute rows.
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    Rng rng(4, "perm");
    rng.shuffle(order);
    std::vector<double> p(m.size());
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&m[order[r] * dim], dim, &p[r * dim]);
    const auto perm = average_contexts("k", std::span<const double>(p), dim).vector;
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(perm[i], base[i], 1e-6 * std::max(1.0, std::abs(base[i])));

    // A * mean(rows) == mean(A * rows).
    const auto a = random_matrix(dim, dim, 5);
    auto apply = [&](const double* v) {
        std::vector<double> out(dim, 0.0);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) out[i] += a[i * dim + j] * v[j];
        return out;
    };
    std::vector<double> mapped;
    for (std::size_t r = 0; r < rows; ++r) {
        const auto row = apply(&m[r * dim]);
        mapped.insert(mapped.end(), row.begin(), row.end());
    }
    const auto lhs = apply(base.data());
    const auto rhs = average_contexts("k", std::span<const double>(mapped), dim).vector;
    for (std::size_t i = 0; i < dim; ++i) EXPECT_NEAR(lhs[i], rhs[i], 1e-6 * std::max(1.0, std::abs(lhs[i])));
}

TEST(Aggregate, GroupOf) {
    EXPECT_EQ(group_of("word:she#17"), "word:she");
    EXPECT_EQ(group_of("name:Carie#3"), "name:Carie");
    EXPECT_EQ(group_of("plain"), "plain");
}

TEST(Aggregate, ResultsAveragedPerOccurrenceThenContext) {
    // Two contexts for "word:her": the first has two occurrences.
    std::vector<io::ProbeJob> jobs{
        {"word:her#0", "her and her", {{"occ0", 0, 3}, {"occ1", 8, 11}}, {}, false},
        {"word:her#1", "her", {{"occ0", 0, 3}}, {}, false},
        {"word:his#0", "his", {{"occ0", 0, 3}, {"other", 0, 1}}, {}, false}};
    io::ProbeResultSet rs;
    rs.vectors = io::EmbeddingDump("m", 2);
    auto put = [&](const std::string& key, std::vector<float> v) { rs.vectors.add(key, std::span<const float>(v)); };
    put("word:her#0/occ0", {2, 0});
    put("word:her#0/occ1", {0, 2});
    put("word:her#1/occ0", {4, 4});
    put("word:his#0/occ0", {1, 1});
    put("word:his#0/other", {100, 100});
    for (const auto& j : jobs) rs.jobs[j.id] = {j.id, true, "", {}};

    const auto out = aggregate_results(jobs, rs, "occ");
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].key, "word:her");
    // mean( mean([2,0],[0,2]) , [4,4] ) = mean([1,1],[4,4]) = [2.5, 2.5]
    EXPECT_EQ(out[0].vector, (std::vector<double>{2.5, 2.5}));
    EXPECT_EQ(out[0].context_count, 2u);
    EXPECT_EQ(out[1].vector, (std::vector<double>{1, 1}));

    rs.jobs.erase("word:her#1");
    EXPECT_THROW(aggregate_results(jobs, rs, "occ"), IncompleteResultsError);
}
