#ifndef DIREVAL_METRICS_HPP
#define DIREVAL_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "direval/error.hpp"
#include "direval/porter.hpp"
#include "direval/textcore.hpp"

namespace direval {

enum class ExtremaRule { abs, signed_max };

struct MetricConfig {
    int bleu_max_order = 4;
    double bleu_epsilon = 1e-9;
    double rouge_beta = 1.2;
    double meteor_fmean_recall_weight = 9.0;
    double meteor_penalty_gamma = 0.5;
    double meteor_penalty_power = 3.0;
    ExtremaRule extrema_rule = ExtremaRule::abs;
};

inline void validate(const MetricConfig& c) {
    if (c.bleu_max_order < 1 || c.bleu_max_order > 4) throw ValidationError("bleu_max_order must be in 1..4");
    if (!(c.bleu_epsilon > 0.0)) throw ValidationError("bleu_epsilon must be positive");
    if (!(c.rouge_beta > 0.0)) throw ValidationError("rouge_beta must be positive");
}

struct WeightedReference {
    TokenSeq tokens;
    double weight = 1.0;
};

namespace detail {

inline void require_tokens(const TokenSeq& s, const char* what) {
    if (s.empty()) throw ValidationError(std::string(what) + " is empty");
}

inline void require_refs(std::size_t n) {
    if (n == 0) throw ValidationError("reference list is empty");
}

// Reference length closest to the candidate length, ties broken toward the shorter.
template <class Lengths>
double closest_ref_length(std::size_t cand_len, const Lengths& lengths) {
    std::size_t best = 0;
    bool have = false;
    for (std::size_t len : lengths) {
        const auto d = [&](std::size_t x) { return x > cand_len ? x - cand_len : cand_len - x; };
        if (!have || d(len) < d(best) || (d(len) == d(best) && len < best)) {
            best = len;
            have = true;
        }
    }
    return static_cast<double>(best);
}

inline double brevity_penalty(std::size_t cand_len, double ref_len) {
    const auto c = static_cast<double>(cand_len);
    return c >= ref_len ? 1.0 : std::exp(1.0 - ref_len / c);
}

} // namespace detail

// Sentence-level BLEU with multi-reference clipping. Orders above the
// candidate length are dropped from the geometric mean, and zero clipped
// counts are replaced by config.bleu_epsilon.
inline double bleu_k(const TokenSeq& candidate, std::span<const TokenSeq> references, int k,
                     const MetricConfig& config = {}) {
    detail::require_tokens(candidate, "candidate");
    detail::require_refs(references.size());
    for (const auto& r : references) detail::require_tokens(r, "reference");
    if (k < 1 || k > 4) throw ValidationError("BLEU order must be in 1..4");

    const std::size_t order = std::min<std::size_t>(static_cast<std::size_t>(k), candidate.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= order; ++n) {
        const NGramCounts cand = ngrams(candidate, n);
        std::map<TokenSeq, std::size_t> max_ref;
        for (const auto& r : references)
            for (const auto& [g, c] : ngrams(r, n).counts) {
                auto& m = max_ref[g];
                m = std::max(m, c);
            }
        double clipped = 0.0;
        for (const auto& [g, c] : cand.counts) {
            auto it = max_ref.find(g);
            if (it != max_ref.end()) clipped += static_cast<double>(std::min(c, it->second));
        }
        if (clipped == 0.0) clipped = config.bleu_epsilon;
        log_sum += std::log(clipped / static_cast<double>(cand.total()));
    }
    std::vector<std::size_t> lengths;
    for (const auto& r : references) lengths.push_back(r.size());
    const double bp = detail::brevity_penalty(candidate.size(), detail::closest_ref_length(candidate.size(), lengths));
    return bp * std::exp(log_sum / static_cast<double>(order));
}

struct DeltaBleuScore {
    double score = 0.0;
    // Weighted unigram precision before clamping; negative when the candidate
    // mostly matches negative references.
    double unclamped_p1 = 0.0;
};

// deltaBLEU: an n-gram earns the largest weighted clipped count among the
// references that contain it. Precisions are floored at the epsilon used by
// bleu_k; brevity is measured against positive-weight references only.
inline DeltaBleuScore delta_bleu(const TokenSeq& candidate, std::span<const WeightedReference> references, int k,
                                 const MetricConfig& config = {}) {
    detail::require_tokens(candidate, "candidate");
    detail::require_refs(references.size());
    if (k < 1 || k > 4) throw ValidationError("BLEU order must be in 1..4");
    std::vector<std::size_t> positive_lengths;
    for (const auto& r : references) {
        detail::require_tokens(r.tokens, "reference");
        if (!(r.weight >= -1.0 && r.weight <= 1.0)) throw ValidationError("reference weight must lie in [-1, 1]");
        if (r.weight > 0.0) positive_lengths.push_back(r.tokens.size());
    }
    if (positive_lengths.empty()) throw ValidationError("deltaBLEU needs at least one positive-weight reference");

    DeltaBleuScore out;
    const std::size_t order = std::min<std::size_t>(static_cast<std::size_t>(k), candidate.size());
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= order; ++n) {
        const NGramCounts cand = ngrams(candidate, n);
        std::vector<NGramCounts> ref_counts;
        ref_counts.reserve(references.size());
        for (const auto& r : references) ref_counts.push_back(ngrams(r.tokens, n));

        double numerator = 0.0;
        for (const auto& [g, c] : cand.counts) {
            double best = 0.0;
            bool found = false;
            for (std::size_t i = 0; i < references.size(); ++i) {
                const std::size_t rc = ref_counts[i].count(g);
                if (rc == 0) continue;
                const double v = references[i].weight * static_cast<double>(std::min(c, rc));
                if (!found || v > best) best = v;
                found = true;
            }
            numerator += best;
        }
        const auto denom = static_cast<double>(cand.total());
        if (n == 1) out.unclamped_p1 = numerator / denom;
        log_sum += std::log(std::max(numerator, config.bleu_epsilon) / denom);
    }
    const double bp =
        detail::brevity_penalty(candidate.size(), detail::closest_ref_length(candidate.size(), positive_lengths));
    out.score = bp * std::exp(log_sum / static_cast<double>(order));
    return out;
}

// ROUGE-L with the multi-reference rule of taking the best precision and the
// best recall independently over references.
inline double rouge_l(const TokenSeq& candidate, std::span<const TokenSeq> references,
                      const MetricConfig& config = {}) {
    detail::require_tokens(candidate, "candidate");
    detail::require_refs(references.size());
    double p = 0.0, r = 0.0;
    for (const auto& ref : references) {
        detail::require_tokens(ref, "reference");
        const auto lcs = static_cast<double>(lcs_length(candidate, ref));
        p = std::max(p, lcs / static_cast<double>(candidate.size()));
        r = std::max(r, lcs / static_cast<double>(ref.size()));
    }
    if (p == 0.0 && r == 0.0) return 0.0;
    const double b2 = config.rouge_beta * config.rouge_beta;
    return (1.0 + b2) * p * r / (r + b2 * p);
}

struct MeteorResources {
    bool use_stems = true;
    const SynonymLexicon* synonyms = nullptr;
};

struct MeteorDetail {
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double fmean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

// METEOR without paraphrase tables. Alignment is built in three greedy
// passes (exact, Porter stem, synonym); each pass walks the candidate left to
// right and takes the first unaligned reference token that matches.
inline MeteorDetail meteor_detail(const TokenSeq& candidate, const TokenSeq& reference,
                                  const MeteorResources& resources = {}, const MetricConfig& config = {}) {
    detail::require_tokens(candidate, "candidate");
    detail::require_tokens(reference, "reference");

    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> cand_to_ref(candidate.size(), none);
    std::vector<bool> ref_used(reference.size(), false);

    auto pass = [&](auto&& same) {
        for (std::size_t i = 0; i < candidate.size(); ++i) {
            if (cand_to_ref[i] != none) continue;
            for (std::size_t j = 0; j < reference.size(); ++j) {
                if (ref_used[j] || !same(i, j)) continue;
                cand_to_ref[i] = j;
                ref_used[j] = true;
                break;
            }
        }
    };
    pass([&](std::size_t i, std::size_t j) { return candidate[i] == reference[j]; });
    if (resources.use_stems) {
        std::vector<std::string> cs, rs;
        for (const auto& t : candidate) cs.push_back(stem(t));
        for (const auto& t : reference) rs.push_back(stem(t));
        pass([&](std::size_t i, std::size_t j) { return cs[i] == rs[j]; });
    }
    if (resources.synonyms) {
        pass([&](std::size_t i, std::size_t j) { return resources.synonyms->are_synonyms(candidate[i], reference[j]); });
    }

    MeteorDetail d;
    std::size_t prev_c = none, prev_r = none;
    for (std::size_t i = 0; i < candidate.size(); ++i) {
        const std::size_t j = cand_to_ref[i];
        if (j == none) continue;
        ++d.matches;
        if (prev_c == none || i != prev_c + 1 || j != prev_r + 1) ++d.chunks;
        prev_c = i;
        prev_r = j;
    }
    if (d.matches == 0) return d;

    const auto m = static_cast<double>(d.matches);
    d.precision = m / static_cast<double>(candidate.size());
    d.recall = m / static_cast<double>(reference.size());
    const double w = config.meteor_fmean_recall_weight;
    d.fmean = (1.0 + w) * d.precision * d.recall / (d.recall + w * d.precision);
    d.penalty = config.meteor_penalty_gamma *
                std::pow(static_cast<double>(d.chunks) / m, config.meteor_penalty_power);
    d.score = d.fmean * (1.0 - d.penalty);
    return d;
}

inline double meteor(const TokenSeq& candidate, const TokenSeq& reference, const MeteorResources& resources = {},
                     const MetricConfig& config = {}) {
    return meteor_detail(candidate, reference, resources, config).score;
}

// ---------------------------------------------------------------------------
// Static word-embedding metrics. Out-of-vocabulary tokens are skipped; a side
// with no known token is an error.

namespace detail {

inline std::vector<Vector> known_vectors(const TokenSeq& seq, const EmbeddingTable& table, const char* side) {
    auto vs = table.lookup(seq);
    if (vs.empty()) throw DomainError(std::string(side) + " has no in-vocabulary token");
    return vs;
}

inline Vector extrema_vector(const std::vector<Vector>& vs, ExtremaRule rule) {
    Vector out = vs.front();
    for (std::size_t k = 1; k < vs.size(); ++k) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            const double x = vs[k][i];
            if (rule == ExtremaRule::signed_max) {
                out[i] = std::max(out[i], x);
            } else if (std::abs(x) > std::abs(out[i]) || (std::abs(x) == std::abs(out[i]) && x > out[i])) {
                out[i] = x;
            }
        }
    }
    return out;
}

// Mean over `from` of the best cosine against any vector in `to`.
inline double mean_max_cosine(const std::vector<Vector>& from, const std::vector<Vector>& to) {
    double sum = 0.0;
    for (const auto& u : from) {
        double best = -1.0;
        for (const auto& v : to) best = std::max(best, cosine(u, v));
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

} // namespace detail

inline double embedding_average(const TokenSeq& candidate, const TokenSeq& reference, const EmbeddingTable& table) {
    const auto c = detail::known_vectors(candidate, table, "candidate");
    const auto r = detail::known_vectors(reference, table, "reference");
    return cosine(mean_vector(c), mean_vector(r));
}

inline Vector extrema_vector(const TokenSeq& seq, const EmbeddingTable& table, ExtremaRule rule = ExtremaRule::abs) {
    return detail::extrema_vector(detail::known_vectors(seq, table, "sentence"), rule);
}

inline double vector_extrema(const TokenSeq& candidate, const TokenSeq& reference, const EmbeddingTable& table,
                             ExtremaRule rule = ExtremaRule::abs) {
    const auto c = detail::known_vectors(candidate, table, "candidate");
    const auto r = detail::known_vectors(reference, table, "reference");
    return cosine(detail::extrema_vector(c, rule), detail::extrema_vector(r, rule));
}

inline double greedy_matching(const TokenSeq& candidate, const TokenSeq& reference, const EmbeddingTable& table) {
    const auto c = detail::known_vectors(candidate, table, "candidate");
    const auto r = detail::known_vectors(reference, table, "reference");
    return 0.5 * (detail::mean_max_cosine(c, r) + detail::mean_max_cosine(r, c));
}

struct BertScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

// Greedy token matching over contextual vectors, no idf weighting or rescaling.
inline BertScore bertscore(const std::vector<Vector>& candidate, const std::vector<Vector>& reference) {
    if (candidate.empty() || reference.empty()) throw ValidationError("BERTScore needs non-empty vector lists");
    const std::size_t dim = candidate.front().size();
    for (const auto* side : {&candidate, &reference})
        for (const auto& v : *side)
            if (v.size() != dim) throw DomainError("BERTScore: dimension mismatch");
    BertScore s;
    s.precision = detail::mean_max_cosine(candidate, reference);
    s.recall = detail::mean_max_cosine(reference, candidate);
    const double sum = s.precision + s.recall;
    s.f1 = sum == 0.0 ? 0.0 : 2.0 * s.precision * s.recall / sum;
    return s;
}

// ---------------------------------------------------------------------------
// Multi-reference aggregation for single-reference metrics.

enum class Aggregation { max, avg };

template <class Metric, class Candidate, class Reference>
double aggregate_multi_ref(Metric&& metric, const Candidate& candidate, std::span<const Reference> references,
                           Aggregation strategy) {
    detail::require_refs(references.size());
    double best = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& r : references) {
        const double s = metric(candidate, r);
        best = std::max(best, s);
        sum += s;
    }
    return strategy == Aggregation::max ? best : sum / static_cast<double>(references.size());
}

} // namespace direval

#endif // DIREVAL_METRICS_HPP
