#ifndef DIREVAL_PIPELINE_HPP
#define DIREVAL_PIPELINE_HPP

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "direval/corpus.hpp"
#include "direval/error.hpp"
#include "direval/io.hpp"
#include "direval/metrics.hpp"
#include "direval/stats.hpp"

namespace direval {

// ---------------------------------------------------------------------------
// Metric and reference-mode names used on the command line and in score files.

enum class MetricKind { bleu, meteor, rouge_l, delta_bleu, embedding_average, vector_extrema, greedy, bertscore };

struct MetricId {
    MetricKind kind = MetricKind::bleu;
    int order = 4;  // BLEU family only
    std::string name;

    bool cosine_based() const {
        return kind == MetricKind::embedding_average || kind == MetricKind::vector_extrema ||
               kind == MetricKind::greedy;
    }
    bool has_standard_aggregation() const {
        return kind == MetricKind::bleu || kind == MetricKind::rouge_l || kind == MetricKind::delta_bleu;
    }
};

inline MetricId parse_metric(std::string_view s) {
    auto order_suffix = [&](std::string_view prefix, int fallback) -> std::optional<int> {
        if (s.substr(0, prefix.size()) != prefix) return std::nullopt;
        auto rest = s.substr(prefix.size());
        if (rest.empty()) return fallback;
        if (rest.size() == 1 && rest[0] >= '1' && rest[0] <= '4') return rest[0] - '0';
        return std::nullopt;
    };
    MetricId id;
    id.name = std::string(s);
    if (auto k = order_suffix("deltableu", 4)) {
        id.kind = MetricKind::delta_bleu;
        id.order = *k;
        return id;
    }
    if (s != "bleu") {
        if (auto k = order_suffix("bleu", 4)) {
            id.kind = MetricKind::bleu;
            id.order = *k;
            return id;
        }
    }
    static const std::map<std::string_view, MetricKind> names = {
        {"meteor", MetricKind::meteor},
        {"rougel", MetricKind::rouge_l},
        {"embavg", MetricKind::embedding_average},
        {"extrema", MetricKind::vector_extrema},
        {"greedy", MetricKind::greedy},
        {"bertscore", MetricKind::bertscore},
    };
    auto it = names.find(s);
    if (it == names.end())
        throw ValidationError("unknown metric '" + std::string(s) +
                              "' (expected bleu1-4, meteor, rougel, deltableu[1-4], embavg, extrema, greedy, "
                              "bertscore)");
    id.kind = it->second;
    return id;
}

// Everything before the first ':' of a score-file metric label.
inline MetricId metric_of_label(std::string_view label) { return parse_metric(label.substr(0, label.find(':'))); }

enum class RefsMode { single, multi_max, multi_avg, standard, delta };

inline RefsMode parse_refs_mode(std::string_view s) {
    if (s == "single") return RefsMode::single;
    if (s == "multi-max") return RefsMode::multi_max;
    if (s == "multi-avg") return RefsMode::multi_avg;
    if (s == "standard") return RefsMode::standard;
    if (s == "delta") return RefsMode::delta;
    throw ValidationError("unknown reference mode '" + std::string(s) +
                          "' (expected single, multi-max, multi-avg, standard, delta)");
}

inline std::string_view to_string(RefsMode m) {
    switch (m) {
    case RefsMode::single: return "single";
    case RefsMode::multi_max: return "multi-max";
    case RefsMode::multi_avg: return "multi-avg";
    case RefsMode::standard: return "standard";
    case RefsMode::delta: return "delta";
    }
    return "?";
}

// Instance layout required by a (metric, refs) pair. deltaBLEU always uses
// the weighted layout; "standard" and "delta" are synonyms for it.
inline ReferenceMode instance_layout(const MetricId& metric, RefsMode refs) {
    if (metric.kind == MetricKind::delta_bleu) {
        if (refs != RefsMode::delta && refs != RefsMode::standard)
            throw ValidationError("deltableu requires --refs delta or standard");
        return ReferenceMode::delta;
    }
    switch (refs) {
    case RefsMode::single: return ReferenceMode::single;
    case RefsMode::multi_max:
    case RefsMode::multi_avg: return ReferenceMode::multi;
    case RefsMode::standard:
        if (!metric.has_standard_aggregation())
            throw ValidationError(metric.name + " has no standard multi-reference aggregation");
        return ReferenceMode::multi;
    case RefsMode::delta: throw ValidationError("--refs delta is only valid for deltableu");
    }
    return ReferenceMode::multi;
}

inline std::string score_label(const MetricId& metric, RefsMode refs) {
    return metric.name + ":" + std::string(to_string(refs));
}

struct ScoringResources {
    const EmbeddingTable* embeddings = nullptr;
    const ContextualEmbeddings* contextual = nullptr;
    const SynonymLexicon* synonyms = nullptr;
};

// Names the command-line flag that supplies a missing resource.
inline void require_resources(const MetricId& metric, const ScoringResources& res) {
    if (metric.cosine_based() && !res.embeddings)
        throw ResourceError("metric " + metric.name + " requires --embeddings");
    if (metric.kind == MetricKind::bertscore && !res.contextual)
        throw ResourceError("metric bertscore requires --ctx-embeddings");
}

namespace detail {

inline const std::vector<Vector>& contextual_for(const ContextualEmbeddings& ce, const std::string& id) {
    const auto* v = ce.find(id);
    if (!v) throw ResourceError("no contextual embedding for '" + id + "'");
    return *v;
}

} // namespace detail

// Score of one instance under (metric, refs).
inline double score_instance(const EvalInstance& inst, const MetricId& metric, RefsMode refs,
                             const ScoringResources& res, const MetricConfig& config = {}) {
    if (inst.references.empty()) throw ValidationError("instance '" + inst.candidate_id + "' has no references");
    const Aggregation agg = refs == RefsMode::multi_avg ? Aggregation::avg : Aggregation::max;

    if (metric.kind == MetricKind::bertscore) {
        const auto& cand = detail::contextual_for(*res.contextual, inst.candidate_id);
        std::vector<std::string> ids = inst.reference_ids;
        auto one = [&](const std::vector<Vector>& c, const std::string& ref_id) {
            return bertscore(c, detail::contextual_for(*res.contextual, ref_id)).f1;
        };
        return aggregate_multi_ref(one, cand, std::span<const std::string>(ids), agg);
    }

    const TokenSeq cand = tokenize(inst.candidate);
    if (cand.empty()) throw ValidationError("candidate '" + inst.candidate_id + "' has no tokens");
    std::vector<TokenSeq> refs_tok;
    for (const auto& r : inst.references) refs_tok.push_back(tokenize(r));
    std::span<const TokenSeq> refs_span(refs_tok);

    switch (metric.kind) {
    case MetricKind::delta_bleu: {
        std::vector<WeightedReference> w;
        for (std::size_t i = 0; i < refs_tok.size(); ++i) w.push_back({refs_tok[i], inst.reference_weights[i]});
        return delta_bleu(cand, w, metric.order, config).score;
    }
    case MetricKind::bleu:
        if (refs == RefsMode::standard || refs == RefsMode::single) return bleu_k(cand, refs_span, metric.order, config);
        return aggregate_multi_ref(
            [&](const TokenSeq& c, const TokenSeq& r) {
                return bleu_k(c, std::span<const TokenSeq>(&r, 1), metric.order, config);
            },
            cand, refs_span, agg);
    case MetricKind::rouge_l:
        if (refs == RefsMode::standard || refs == RefsMode::single) return rouge_l(cand, refs_span, config);
        return aggregate_multi_ref(
            [&](const TokenSeq& c, const TokenSeq& r) { return rouge_l(c, std::span<const TokenSeq>(&r, 1), config); },
            cand, refs_span, agg);
    case MetricKind::meteor: {
        MeteorResources mr{true, res.synonyms};
        return aggregate_multi_ref([&](const TokenSeq& c, const TokenSeq& r) { return meteor(c, r, mr, config); },
                                   cand, refs_span, agg);
    }
    case MetricKind::embedding_average:
        return aggregate_multi_ref(
            [&](const TokenSeq& c, const TokenSeq& r) { return embedding_average(c, r, *res.embeddings); }, cand,
            refs_span, agg);
    case MetricKind::vector_extrema:
        return aggregate_multi_ref(
            [&](const TokenSeq& c, const TokenSeq& r) {
                return vector_extrema(c, r, *res.embeddings, config.extrema_rule);
            },
            cand, refs_span, agg);
    case MetricKind::greedy:
        return aggregate_multi_ref(
            [&](const TokenSeq& c, const TokenSeq& r) { return greedy_matching(c, r, *res.embeddings); }, cand,
            refs_span, agg);
    case MetricKind::bertscore: break;
    }
    throw ValidationError("unsupported metric");
}

inline std::vector<ScoreRecord> score_instances(std::span<const EvalInstance> instances, const MetricId& metric,
                                                RefsMode refs, const ScoringResources& res,
                                                const MetricConfig& config = {}) {
    validate(config);
    require_resources(metric, res);
    const std::string label = score_label(metric, refs);
    std::vector<ScoreRecord> out;
    out.reserve(instances.size());
    for (const auto& inst : instances) {
        double s = 0.0;
        try {
            s = score_instance(inst, metric, refs, res, config);
        } catch (const DomainError& e) {
            throw DomainError(inst.candidate_id + ": " + e.what());
        }
        out.push_back({inst.context_id, inst.candidate_id, inst.candidate_type, label, s});
    }
    sort_canonical(out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation report

struct EvalReport {
    std::string metric;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double pbc = 0.0;
    double pbc_p = 1.0;
    double threshold = 0.0;
    double accuracy = 0.0;
    ConfusionMatrix confusion;
    Quartiles quartiles_pos;
    Quartiles quartiles_neg;
    std::string score_transform = "identity";
    std::string threshold_mode;
    std::string fit_slice;
    std::string eval_slice;
    // Fraction of each candidate type classified positive at the threshold.
    std::map<std::string, double> predicted_positive_fraction;
};

struct ThresholdMode {
    bool grid = true;
    double fixed = 0.5;
    ThresholdGrid search{};
};

inline ThresholdMode parse_threshold_mode(std::string_view s) {
    ThresholdMode m;
    if (s == "grid") return m;
    m.grid = false;
    try {
        std::size_t used = 0;
        m.fixed = std::stod(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
        throw ValidationError("--threshold must be 'grid' or a number, got '" + std::string(s) + "'");
    }
    return m;
}

struct EvaluateOptions {
    ThresholdMode threshold;
    const SplitManifest* split = nullptr;
};

namespace detail {

struct Labeled {
    std::vector<double> scores;
    std::vector<int> labels;
    std::vector<CandidateType> types;
};

inline Labeled labeled(std::span<const ScoreRecord> records, const std::unordered_set<std::string>* contexts,
                       bool affine) {
    Labeled out;
    for (const auto& r : records) {
        if (contexts && !contexts->count(r.context_id)) continue;
        out.scores.push_back(affine ? (r.score + 1.0) / 2.0 : r.score);
        out.labels.push_back(r.candidate_type == CandidateType::positive ? 1 : 0);
        out.types.push_back(r.candidate_type);
    }
    return out;
}

inline std::string single_metric(std::span<const ScoreRecord> records) {
    if (records.empty()) throw ValidationError("score file is empty");
    const std::string& m = records.front().metric;
    for (const auto& r : records)
        if (r.metric != m) throw ValidationError("score file mixes metrics '" + m + "' and '" + r.metric + "'");
    return m;
}

inline bool is_cosine_label(const std::string& label) {
    try {
        return metric_of_label(label).cosine_based();
    } catch (const ValidationError&) {
        return false;  // externally produced scores, e.g. a trained scorer
    }
}

} // namespace detail

// Labels come from candidate_type (positive = 1). With a split manifest the
// grid threshold is fit on validation contexts and everything else is
// measured on test contexts; without one both use the whole file.
inline EvalReport evaluate(std::span<const ScoreRecord> records, const EvaluateOptions& opt = {}) {
    EvalReport rep;
    rep.metric = detail::single_metric(records);
    const bool affine = detail::is_cosine_label(rep.metric);
    if (affine) rep.score_transform = "(x+1)/2";

    std::unordered_set<std::string> valid_ids, test_ids;
    if (opt.split) {
        valid_ids.insert(opt.split->valid_ids.begin(), opt.split->valid_ids.end());
        test_ids.insert(opt.split->test_ids.begin(), opt.split->test_ids.end());
    }
    const auto eval = detail::labeled(records, opt.split ? &test_ids : nullptr, affine);
    rep.eval_slice = opt.split ? "test" : "all";
    for (int l : eval.labels) (l ? rep.n_pos : rep.n_neg) += 1;
    if (rep.n_pos == 0 || rep.n_neg == 0)
        throw ValidationError("evaluation slice must contain both positive and negative candidates");

    if (opt.threshold.grid) {
        rep.threshold_mode = "grid";
        if (opt.split) {
            const auto fit = detail::labeled(records, &valid_ids, affine);
            rep.fit_slice = "valid";
            rep.threshold = best_threshold(fit.scores, fit.labels, opt.threshold.search);
        } else {
            rep.fit_slice = "all";
            rep.threshold = best_threshold(eval.scores, eval.labels, opt.threshold.search);
        }
    } else {
        rep.threshold_mode = "fixed";
        rep.fit_slice = "none";
        rep.threshold = opt.threshold.fixed;
    }

    const auto corr = point_biserial(eval.scores, eval.labels);
    rep.pbc = corr.r;
    rep.pbc_p = corr.p;
    const auto acc = accuracy_at(eval.scores, eval.labels, rep.threshold);
    rep.accuracy = acc.accuracy;
    rep.confusion = acc.confusion;

    std::vector<double> pos, neg;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_type;
    for (std::size_t i = 0; i < eval.scores.size(); ++i) {
        (eval.labels[i] ? pos : neg).push_back(eval.scores[i]);
        auto& [hit, total] = per_type[std::string(to_string(eval.types[i]))];
        ++total;
        if (eval.scores[i] >= rep.threshold) ++hit;
    }
    rep.quartiles_pos = quartile_summary(pos);
    rep.quartiles_neg = quartile_summary(neg);
    for (const auto& [type, ht] : per_type)
        rep.predicted_positive_fraction[type] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
    return rep;
}

inline nlohmann::json to_json(const Quartiles& q) {
    return {{"min", q.min}, {"q1", q.q1}, {"median", q.median}, {"q3", q.q3}, {"max", q.max}};
}

inline nlohmann::json to_json(const ConfusionMatrix& c) {
    return {{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
}

inline nlohmann::json to_json(const EvalReport& r) {
    return {{"metric", r.metric},
            {"n_pos", r.n_pos},
            {"n_neg", r.n_neg},
            {"pbc", r.pbc},
            {"pbc_p", r.pbc_p},
            {"threshold", r.threshold},
            {"accuracy", r.accuracy},
            {"confusion", to_json(r.confusion)},
            {"quartiles_pos", to_json(r.quartiles_pos)},
            {"quartiles_neg", to_json(r.quartiles_neg)},
            {"score_transform", r.score_transform},
            {"threshold_mode", r.threshold_mode},
            {"fit_slice", r.fit_slice},
            {"eval_slice", r.eval_slice},
            {"predicted_positive_fraction", r.predicted_positive_fraction}};
}

// ---------------------------------------------------------------------------
// Joins for correlate / compare

using RecordKey = std::pair<std::string, std::string>;

// Thrown when two files do not cover the same (context_id, candidate_id) set.
class JoinError : public ValidationError {
public:
    explicit JoinError(const std::vector<std::string>& offenders, std::size_t total)
        : ValidationError(message(offenders, total)) {}

private:
    static std::string message(const std::vector<std::string>& offenders, std::size_t total) {
        std::string m = std::to_string(total) + " id(s) present in only one file:";
        for (const auto& o : offenders) m += "\n  " + o;
        return m;
    }
};

template <class A, class B, class Fn>
void join_by_key(const std::vector<A>& a, const std::vector<B>& b, const char* a_name, const char* b_name, Fn&& fn) {
    std::map<RecordKey, const B*> bmap;
    for (const auto& r : b)
        if (!bmap.emplace(RecordKey{r.context_id, r.candidate_id}, &r).second)
            throw ValidationError(std::string("duplicate id in ") + b_name + ": " + r.context_id + " " +
                                  r.candidate_id);
    std::set<RecordKey> seen;
    std::vector<std::string> offenders;
    std::size_t missing = 0;
    auto offend = [&](const RecordKey& k, const char* only) {
        ++missing;
        if (offenders.size() < 10) offenders.push_back(k.first + " " + k.second + " (only in " + only + ")");
    };
    std::vector<std::pair<const A*, const B*>> pairs;
    for (const auto& r : a) {
        RecordKey k{r.context_id, r.candidate_id};
        if (!seen.insert(k).second)
            throw ValidationError(std::string("duplicate id in ") + a_name + ": " + k.first + " " + k.second);
        auto it = bmap.find(k);
        if (it == bmap.end()) offend(k, a_name);
        else pairs.emplace_back(&r, it->second);
    }
    for (const auto& [k, p] : bmap)
        if (!seen.count(k)) offend(k, b_name);
    if (missing) throw JoinError(offenders, missing);
    for (const auto& [x, y] : pairs) fn(*x, *y);
}

struct CorrelationReport {
    std::string metric;
    std::size_t n = 0;
    Correlation pearson_r;
    Correlation spearman_r;
    Correlation kendall;
};

inline CorrelationReport correlate(const std::vector<ScoreRecord>& scores, const std::vector<HumanRating>& ratings) {
    CorrelationReport rep;
    rep.metric = detail::single_metric(scores);
    std::vector<double> x, y;
    join_by_key(scores, ratings, "scores", "ratings", [&](const ScoreRecord& s, const HumanRating& h) {
        x.push_back(s.score);
        y.push_back(h.rating);
    });
    rep.n = x.size();
    rep.pearson_r = pearson(x, y);
    rep.spearman_r = spearman(x, y);
    rep.kendall = kendall_tau(x, y);
    return rep;
}

inline nlohmann::json to_json(const CorrelationReport& r) {
    auto c = [](const Correlation& c) { return nlohmann::json{{"r", c.r}, {"p", c.p}}; };
    return {{"metric", r.metric},
            {"n", r.n},
            {"pearson", c(r.pearson_r)},
            {"spearman", c(r.spearman_r)},
            {"kendall_tau_b", c(r.kendall)}};
}

struct ComparisonReport {
    std::string metric_a;
    std::string metric_b;
    std::size_t n = 0;
    double pbc_a = 0.0;
    double pbc_b = 0.0;
    double r_ab = 0.0;
    TestResult williams;
    double threshold_a = 0.0;
    double threshold_b = 0.0;
    ConfusionMatrix confusion_a;
    ConfusionMatrix confusion_b;
    TestResult chi_squared;
};

// Williams' test on the two metrics' point-biserial correlations with the
// label, and a chi-squared test on their accuracies at their own thresholds.
inline ComparisonReport compare(const std::vector<ScoreRecord>& a, const std::vector<ScoreRecord>& b,
                                const EvaluateOptions& opt = {}) {
    ComparisonReport rep;
    const auto ra = evaluate(a, opt);
    const auto rb = evaluate(b, opt);
    rep.metric_a = ra.metric;
    rep.metric_b = rb.metric;
    rep.threshold_a = ra.threshold;
    rep.threshold_b = rb.threshold;
    rep.confusion_a = ra.confusion;
    rep.confusion_b = rb.confusion;

    std::unordered_set<std::string> test_ids;
    if (opt.split) test_ids.insert(opt.split->test_ids.begin(), opt.split->test_ids.end());
    const bool aff_a = ra.score_transform != "identity", aff_b = rb.score_transform != "identity";
    std::vector<double> xa, xb;
    std::vector<int> labels;
    join_by_key(a, b, "first score file", "second score file", [&](const ScoreRecord& x, const ScoreRecord& y) {
        if (x.candidate_type != y.candidate_type)
            throw ValidationError("candidate type differs between files for " + x.candidate_id);
        if (opt.split && !test_ids.count(x.context_id)) return;
        xa.push_back(aff_a ? (x.score + 1) / 2 : x.score);
        xb.push_back(aff_b ? (y.score + 1) / 2 : y.score);
        labels.push_back(x.candidate_type == CandidateType::positive ? 1 : 0);
    });
    rep.n = xa.size();
    rep.pbc_a = point_biserial(xa, labels).r;
    rep.pbc_b = point_biserial(xb, labels).r;
    rep.r_ab = pearson(xa, xb).r;
    rep.williams = williams_test(rep.pbc_a, rep.pbc_b, rep.r_ab, rep.n);
    const auto& ca = rep.confusion_a;
    const auto& cb = rep.confusion_b;
    rep.chi_squared = chi_squared_2x2(ca.tp + ca.tn, ca.fp + ca.fn, cb.tp + cb.tn, cb.fp + cb.fn);
    return rep;
}

inline nlohmann::json to_json(const ComparisonReport& r) {
    return {{"metric_a", r.metric_a},
            {"metric_b", r.metric_b},
            {"n", r.n},
            {"pbc_a", r.pbc_a},
            {"pbc_b", r.pbc_b},
            {"r_ab", r.r_ab},
            {"williams", {{"t", r.williams.statistic}, {"p", r.williams.p}}},
            {"threshold_a", r.threshold_a},
            {"threshold_b", r.threshold_b},
            {"accuracy_a", r.confusion_a.accuracy()},
            {"accuracy_b", r.confusion_b.accuracy()},
            {"confusion_a", to_json(r.confusion_a)},
            {"confusion_b", to_json(r.confusion_b)},
            {"chi_squared", {{"statistic", r.chi_squared.statistic}, {"p", r.chi_squared.p}}}};
}

} // namespace direval

#endif // DIREVAL_PIPELINE_HPP
