#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "gendir/rng.hpp"
#include "gendir/subspace.hpp"

using namespace gendir;
using namespace gendir::subspace;
using aggregate::AveragedEmbedding;

namespace {

EmbeddingPair make_pair(std::vector<double> f, std::vector<double> m) {
    return {AveragedEmbedding{"f", std::move(f), 1}, AveragedEmbedding{"m", std::move(m), 1}};
}

// Pairs whose halves are base +- a * u + noise.
std::vector<EmbeddingPair> planted_pairs(std::size_t d, std::size_t dim, const std::vector<double>& u, double sigma,
                                         std::uint64_t seed) {
    Rng rng(seed, "pairs");
    std::vector<EmbeddingPair> out;
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> base(dim), f(dim), m(dim);
        for (auto& b : base) b = rng.normal();
        for (std::size_t i = 0; i < dim; ++i) {
            f[i] = base[i] + u[i] + sigma * rng.normal();
            m[i] = base[i] - u[i] + sigma * rng.normal();
        }
        out.push_back(make_pair(f, m));
    }
    return out;
}

std::vector<double> random_unit(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed, "axis");
    std::vector<double> u(dim);
    double n = 0;
    for (auto& x : u) {
        x = rng.normal();
        n += x * x;
    }
    for (auto& x : u) x /= std::sqrt(n);
    return u;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace

TEST(Subspace, DifferenceMatrixForcedExample) {
    const std::vector<EmbeddingPair> pairs{make_pair({2, 0}, {0, 0}), make_pair({0, 4}, {0, 0})};
    const auto d = build_difference_matrix(pairs);
    ASSERT_EQ(d.rows.rows(), 4);
    EXPECT_EQ(d.rows(0, 0), 1.0);
    EXPECT_EQ(d.rows(0, 1), 0.0);
    EXPECT_EQ(d.rows(1, 0), -1.0);
    EXPECT_EQ(d.rows(3, 1), -2.0);
    EXPECT_EQ(d.pair_keys.size(), 2u);
}

TEST(Subspace, DifferenceRowsAreExactNegations) {
    const auto pairs = planted_pairs(9, 16, random_unit(16, 1), 0.3, 1);
    const auto d = build_difference_matrix(pairs);
    EXPECT_EQ(d.rows.rows(), 18);
    for (Eigen::Index j = 0; j < 9; ++j) {
        EXPECT_TRUE((d.rows.row(2 * j) == -d.rows.row(2 * j + 1)));
        EXPECT_LE((d.rows.row(2 * j) + d.rows.row(2 * j + 1)).norm(), 1e-6);
    }
}

TEST(Subspace, DifferenceMatrixErrors) {
    const std::vector<EmbeddingPair> one{make_pair({1, 2}, {3, 4})};
    EXPECT_THROW(build_difference_matrix(one), ValidationError);
    const std::vector<EmbeddingPair> mismatch{make_pair({1, 2}, {3, 4}), make_pair({1, 2, 3}, {3, 4, 5})};
    EXPECT_THROW(build_difference_matrix(mismatch), ValidationError);
}

TEST(Subspace, NoiselessRecoveryHasUnitRatio) {
    const auto u = random_unit(32, 2);
    const auto pairs = planted_pairs(9, 32, u, 0.0, 2);
    const auto r = pca(build_difference_matrix(pairs).rows, 1);
    EXPECT_EQ(r.explained_variance_ratios[0], 1.0);
    const std::vector<double> pc(r.components.row(0).data(), r.components.row(0).data() + 32);
    EXPECT_NEAR(std::abs(dot(pc, u)), 1.0, 1e-12);
}

TEST(Subspace, TwoDirectionRatios) {
    // Strengths 2 and 1 along orthogonal axes: sigma^2 proportional to 4 and 1.
    Eigen::MatrixXd m(4, 3);
    m << 2, 0, 0, -2, 0, 0, 0, 1, 0, 0, -1, 0;
    const auto r = pca(m, 2);
    ASSERT_EQ(r.explained_variance_ratios.size(), 3u);
    EXPECT_NEAR(r.explained_variance_ratios[0], 0.8, 1e-15);
    EXPECT_NEAR(r.explained_variance_ratios[1], 0.2, 1e-15);
    EXPECT_EQ(r.explained_variance_ratios[2], 0.0);
    EXPECT_NEAR(r.components(0, 0), 1.0, 1e-15);
    EXPECT_NEAR(r.components(1, 1), 1.0, 1e-15);
}

TEST(Subspace, PcaInvariants) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto pairs = planted_pairs(9, 12, random_unit(12, seed), 0.5, seed);
        const auto m = build_difference_matrix(pairs).rows;
        const auto r = pca(m, 9, {.rank_tolerance = 0.0});

        // Orthonormal components.
        const Eigen::MatrixXd gram = r.components * r.components.transpose();
        EXPECT_LE((gram - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-8);

        // Ratios non-negative, descending, sum to one.
        double sum = 0;
        for (std::size_t i = 0; i < r.explained_variance_ratios.size(); ++i) {
            EXPECT_GE(r.explained_variance_ratios[i], 0.0);
            if (i) {
                EXPECT_LE(r.explained_variance_ratios[i], r.explained_variance_ratios[i - 1]);
            }
            sum += r.explained_variance_ratios[i];
        }
        EXPECT_NEAR(sum, 1.0, 1e-9);

        // Row space has rank <= 9 (one per pair); projecting back reproduces the matrix.
        const Eigen::MatrixXd recon = m * r.components.transpose() * r.components;
        EXPECT_LE((recon - m).norm() / m.norm(), 1e-6);

        // Row permutation leaves components unchanged up to sign, and canonical sign fixes it.
        Eigen::MatrixXd shuffled = m;
        shuffled.row(0).swap(shuffled.row(7));
        shuffled.row(3).swap(shuffled.row(12));
        const auto rp = pca(shuffled, 2, {.rank_tolerance = 0.0});
        EXPECT_LE((rp.components.row(0) - r.components.row(0)).norm(), 1e-8);
    }
}

TEST(Subspace, CanonicalSign) {
    Eigen::VectorXd v(3);
    v << 0.1, -0.9, 0.3;
    canonicalize_sign(v);
    EXPECT_GT(v[1], 0);
}

TEST(Subspace, PcaErrors) {
    EXPECT_THROW(pca(Eigen::MatrixXd::Zero(4, 3), 1), ValidationError);
    EXPECT_THROW(pca(Eigen::MatrixXd::Ones(1, 3), 1), ValidationError);
    EXPECT_THROW(pca(Eigen::MatrixXd::Ones(4, 3), 0), ValidationError);
    EXPECT_THROW(pca(Eigen::MatrixXd::Ones(4, 3), 4), ValidationError);
    Eigen::MatrixXd nan = Eigen::MatrixXd::Ones(4, 3);
    nan(1, 1) = std::nan("");
    EXPECT_THROW(pca(nan, 1), ValidationError);
}

TEST(Subspace, SelectDirectionModes) {
    Eigen::MatrixXd m(4, 3);
    m << 2, 0, 0, -2, 0, 0, 0, 1, 0, 0, -1, 0;
    const auto r = pca(m, 2);
    const auto first = select_direction(r, DirectionMode::first);
    const auto second = select_direction(r, DirectionMode::second);
    const auto avg = select_direction(r, DirectionMode::avg);
    EXPECT_NEAR(first.vector[0], 1.0, 1e-15);
    EXPECT_NEAR(second.vector[1], 1.0, 1e-15);
    EXPECT_NEAR(avg.vector[0], std::sqrt(0.5), 1e-15);
    EXPECT_NEAR(avg.vector[1], std::sqrt(0.5), 1e-15);
    for (const auto& g : {first, second, avg}) {
        EXPECT_NEAR(dot(g.vector, g.vector), 1.0, 1e-9);
        EXPECT_EQ(g.sign_convention, "positive=female");
    }
    EXPECT_THROW(select_direction(pca(m, 1), DirectionMode::avg), ValidationError);
    EXPECT_EQ(parse_mode("avg"), DirectionMode::avg);
    EXPECT_THROW(parse_mode("third"), ValidationError);
}

TEST(Subspace, AlignSign) {
    const auto u = random_unit(16, 3);
    const auto pairs = planted_pairs(9, 16, u, 0.05, 3);
    std::vector<std::vector<double>> female, male;
    for (const auto& p : pairs) {
        female.push_back(p.female.vector);
        male.push_back(p.male.vector);
    }
    auto g = select_direction(pca(build_difference_matrix(pairs).rows, 1), DirectionMode::first);
    const auto aligned = align_sign(g, female, male);
    EXPECT_GT(dot(aligned.vector, u), 0.0);

    // Idempotent, and a negated input comes back identical.
    EXPECT_EQ(align_sign(aligned, female, male).vector, aligned.vector);
    auto negated = aligned;
    for (auto& x : negated.vector) x = -x;
    EXPECT_EQ(align_sign(negated, female, male).vector, aligned.vector);
}

TEST(Subspace, RandomBaselineDecaysGradually) {
    Rng rng(8, "random");
    std::vector<EmbeddingPair> pairs;
    for (int j = 0; j < 10; ++j) {
        std::vector<double> a(32), b(32);
        for (auto& x : a) x = rng.normal();
        for (auto& x : b) x = rng.normal();
        pairs.push_back(make_pair(a, b));
    }
    const auto r = random_baseline(pairs, 1);
    EXPECT_LT(r.explained_variance_ratios[0], 0.4);
    const auto gendered = pca(build_difference_matrix(planted_pairs(9, 32, random_unit(32, 8), 0.05, 8)).rows, 1);
    EXPECT_GT(gendered.explained_variance_ratios[0], 2 * r.explained_variance_ratios[0]);
}
