#pragma once

// Turns captured logits and span vectors into probabilities and projections.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gendir/error.hpp"

namespace gendir::probe {

/// Dot product accumulated in double.
template <class A, class B>
double project(std::span<const A> embedding, std::span<const B> direction) {
    if (embedding.size() != direction.size()) throw ValidationError("project: dim mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < embedding.size(); ++i) {
        acc += static_cast<double>(embedding[i]) * static_cast<double>(direction[i]);
    }
    return acc;
}

inline double project(const std::vector<double>& embedding, const std::vector<double>& direction) {
    return project(std::span<const double>(embedding), std::span<const double>(direction));
}

/// Softmax over two logits; p_a + p_b == 1.
inline std::pair<double, double> two_way_softmax(double logit_a, double logit_b) {
    const double delta = logit_b - logit_a;
    double p_a;
    if (delta >= 0.0) {
        const double e = std::exp(-delta);
        p_a = e / (1.0 + e);
    } else {
        p_a = 1.0 / (1.0 + std::exp(delta));
    }
    return {p_a, 1.0 - p_a};
}

struct OccupationDistribution {
    /// In configured occupation order.
    std::vector<double> probabilities;
    std::size_t predicted = 0;
};

/// Softmax over the configured occupations' logits; argmax ties go to the
/// earliest occupation in `occupations`.
inline OccupationDistribution occupation_distribution(const std::map<std::string, double>& logits,
                                                      std::span<const std::string> occupations) {
    if (occupations.empty()) throw ValidationError("occupation_distribution: no occupations configured");
    std::vector<double> z;
    z.reserve(occupations.size());
    for (const auto& occ : occupations) {
        const auto it = logits.find(occ);
        if (it == logits.end()) throw ValidationError("occupation_distribution: missing logit for '" + occ + "'");
        z.push_back(it->second);
    }
    OccupationDistribution out;
    double max = z[0];
    for (std::size_t i = 1; i < z.size(); ++i) {
        if (z[i] > max) {
            max = z[i];
            out.predicted = i;
        }
    }
    double total = 0.0;
    out.probabilities.resize(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) {
        out.probabilities[i] = std::exp(z[i] - max);
        total += out.probabilities[i];
    }
    for (auto& p : out.probabilities) p /= total;
    return out;
}

} // namespace gendir::probe
