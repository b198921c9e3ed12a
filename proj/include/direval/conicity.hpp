#ifndef DIREVAL_CONICITY_HPP
#define DIREVAL_CONICITY_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "direval/corpus.hpp"
#include "direval/error.hpp"
#include "direval/textcore.hpp"

namespace direval {

namespace detail {

inline Vector nonzero_mean(std::span<const Vector> set) {
    if (set.empty()) throw DomainError("conicity of an empty vector set");
    Vector m = mean_vector(set);
    if (norm(m) == 0.0) throw DomainError("vector set has a zero mean vector");
    return m;
}

} // namespace detail

// Alignment to mean: cosine of v with the mean of `set`.
inline double atm(std::span<const double> v, std::span<const Vector> set) {
    const Vector m = detail::nonzero_mean(set);
    return cosine(v, m);
}

// Mean alignment-to-mean over the set. Low values mean the vectors are spread
// out; 1 means they all point the same way.
inline double conicity(std::span<const Vector> set) {
    const Vector m = detail::nonzero_mean(set);
    double sum = 0.0;
    for (const auto& v : set) sum += cosine(v, m);
    return sum / static_cast<double>(set.size());
}

struct LabeledEmbedding {
    std::string candidate_id;
    CandidateType candidate_type = CandidateType::positive;
    Vector vector;
};

struct LabeledEmbeddingSet {
    std::string context_id;
    std::vector<LabeledEmbedding> entries;
};

struct ContextConicity {
    std::string context_id;
    double positives = 0.0;
    std::optional<double> with_random;
    std::optional<double> with_adversarial;
};

struct ConicityReport {
    std::vector<ContextConicity> contexts;
    double mean_positives = 0.0;
    // Absent when no context had that negative type.
    std::optional<double> mean_with_random;
    std::optional<double> mean_with_adversarial;
    std::size_t n_with_random = 0;
    std::size_t n_with_adversarial = 0;
};

// Conicity of P, P+R and P+A per context, then unweighted means over contexts.
inline ConicityReport set_analysis(std::span<const LabeledEmbeddingSet> sets) {
    ConicityReport report;
    double sum_p = 0.0, sum_r = 0.0, sum_a = 0.0;
    for (const auto& s : sets) {
        std::vector<Vector> p, r, a;
        for (const auto& e : s.entries) {
            switch (e.candidate_type) {
            case CandidateType::positive: p.push_back(e.vector); break;
            case CandidateType::random_negative: r.push_back(e.vector); break;
            case CandidateType::adversarial_negative: a.push_back(e.vector); break;
            case CandidateType::generated: break;
            }
        }
        if (p.empty()) throw ValidationError("context '" + s.context_id + "' has no positive embeddings");
        ContextConicity c;
        c.context_id = s.context_id;
        c.positives = conicity(p);
        sum_p += c.positives;
        auto with = [&](const std::vector<Vector>& extra) {
            std::vector<Vector> u = p;
            u.insert(u.end(), extra.begin(), extra.end());
            return conicity(u);
        };
        if (!r.empty()) {
            c.with_random = with(r);
            sum_r += *c.with_random;
            ++report.n_with_random;
        }
        if (!a.empty()) {
            c.with_adversarial = with(a);
            sum_a += *c.with_adversarial;
            ++report.n_with_adversarial;
        }
        report.contexts.push_back(std::move(c));
    }
    if (report.contexts.empty()) throw ValidationError("conicity analysis over an empty set");
    report.mean_positives = sum_p / static_cast<double>(report.contexts.size());
    if (report.n_with_random) report.mean_with_random = sum_r / static_cast<double>(report.n_with_random);
    if (report.n_with_adversarial)
        report.mean_with_adversarial = sum_a / static_cast<double>(report.n_with_adversarial);
    return report;
}

} // namespace direval

#endif // DIREVAL_CONICITY_HPP
