#ifndef DIREVAL_CORPUS_HPP
#define DIREVAL_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "direval/error.hpp"
#include "direval/rng.hpp"
#include "direval/textcore.hpp"

namespace direval {

// Every evaluation context carries this many positives and, when present,
// this many negatives of each type.
inline constexpr std::size_t kResponsesPerType = 5;

enum class Speaker { FS, SS };

struct Utterance {
    Speaker speaker = Speaker::FS;
    std::string text;
};

struct DialogContext {
    std::string id;
    std::vector<Utterance> utterances;
};

struct ResponseSet {
    std::vector<std::string> positives;
    std::vector<std::string> random_negatives;
    std::vector<std::string> adversarial_negatives;
};

struct DialogRecord {
    DialogContext context;
    ResponseSet responses;

    const std::string& id() const { return context.id; }
};

using Corpus = std::vector<DialogRecord>;

enum class CandidateType { positive, random_negative, adversarial_negative, generated };

inline std::string_view to_string(CandidateType t) {
    switch (t) {
    case CandidateType::positive: return "positive";
    case CandidateType::random_negative: return "random_negative";
    case CandidateType::adversarial_negative: return "adversarial_negative";
    case CandidateType::generated: return "generated";
    }
    return "?";
}

inline CandidateType candidate_type_from_string(std::string_view s) {
    if (s == "positive") return CandidateType::positive;
    if (s == "random_negative") return CandidateType::random_negative;
    if (s == "adversarial_negative") return CandidateType::adversarial_negative;
    if (s == "generated") return CandidateType::generated;
    throw ValidationError("unknown candidate type '" + std::string(s) + "'");
}

enum class NegativeType { random, adversarial };
enum class ReferenceMode { single, multi, delta };

struct EvalInstance {
    std::string context_id;
    std::string candidate_id;
    CandidateType candidate_type = CandidateType::positive;
    std::string candidate;
    std::vector<std::string> references;
    std::vector<std::string> reference_ids;
    std::vector<double> reference_weights;
    int label = 0;
    // Candidate id this one was derived from (mutated instances only).
    std::string source_id;
};

struct CorpusStats {
    std::size_t n_contexts = 0;
    double avg_turns = 0.0;
    double avg_words_per_context = 0.0;
    double avg_words_per_utterance = 0.0;
    double avg_words_per_positive = 0.0;
    double avg_words_per_adversarial = 0.0;
    std::size_t n_contexts_with_adv = 0;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double valid_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
};

struct CorpusSplit {
    Corpus train;
    Corpus valid;
    Corpus test;
};

// ---------------------------------------------------------------------------
// Validation and JSONL I/O

inline bool has_non_space(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return !is_space(c); });
}

inline void validate(const DialogRecord& r) {
    if (r.context.id.empty()) throw ValidationError("record with empty id");
    const std::string& id = r.context.id;
    if (r.context.utterances.empty()) throw ValidationError("context '" + id + "' has no utterances");
    for (const auto& u : r.context.utterances)
        if (!has_non_space(u.text)) throw ValidationError("context '" + id + "' has a blank utterance");
    if (r.responses.positives.empty()) throw ValidationError("context '" + id + "' has no positive responses");
    auto check = [&](const std::vector<std::string>& list, const char* what) {
        for (const auto& s : list)
            if (!has_non_space(s)) throw ValidationError("context '" + id + "' has an empty " + what + " response");
    };
    check(r.responses.positives, "positive");
    check(r.responses.random_negatives, "random negative");
    check(r.responses.adversarial_negatives, "adversarial negative");
}

inline nlohmann::json to_json(const DialogRecord& r) {
    nlohmann::json ctx = nlohmann::json::array();
    for (const auto& u : r.context.utterances)
        ctx.push_back({{"speaker", u.speaker == Speaker::FS ? "FS" : "SS"}, {"text", u.text}});
    return {{"id", r.context.id},
            {"context", std::move(ctx)},
            {"positive_responses", r.responses.positives},
            {"random_negatives", r.responses.random_negatives},
            {"adversarial_negatives", r.responses.adversarial_negatives}};
}

inline DialogRecord record_from_json(const nlohmann::json& j) {
    DialogRecord r;
    r.context.id = j.at("id").get<std::string>();
    for (const auto& u : j.at("context")) {
        const auto sp = u.at("speaker").get<std::string>();
        if (sp != "FS" && sp != "SS") throw ValidationError("speaker must be FS or SS, got '" + sp + "'");
        r.context.utterances.push_back({sp == "FS" ? Speaker::FS : Speaker::SS, u.at("text").get<std::string>()});
    }
    r.responses.positives = j.at("positive_responses").get<std::vector<std::string>>();
    if (auto it = j.find("random_negatives"); it != j.end() && !it->is_null())
        r.responses.random_negatives = it->get<std::vector<std::string>>();
    if (auto it = j.find("adversarial_negatives"); it != j.end() && !it->is_null())
        r.responses.adversarial_negatives = it->get<std::vector<std::string>>();
    return r;
}

inline Corpus load_dataset(std::istream& in) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (!has_non_space(line)) continue;
        DialogRecord r;
        try {
            r = record_from_json(nlohmann::json::parse(line));
            validate(r);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), lineno);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
        if (!seen.insert(r.context.id).second)
            throw ValidationError("duplicate context id '" + r.context.id + "' at line " + std::to_string(lineno));
        corpus.push_back(std::move(r));
    }
    return corpus;
}

inline Corpus load_dataset(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return load_dataset(in);
}

inline void write_dataset(std::ostream& out, const Corpus& corpus) {
    for (const auto& r : corpus) out << to_json(r).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Statistics

inline CorpusStats corpus_stats(const Corpus& corpus) {
    if (corpus.empty()) throw ValidationError("corpus is empty");
    CorpusStats s;
    s.n_contexts = corpus.size();
    std::size_t turns = 0, context_words = 0, positives = 0, positive_words = 0, adv = 0, adv_words = 0;
    for (const auto& r : corpus) {
        turns += r.context.utterances.size();
        for (const auto& u : r.context.utterances) context_words += word_count(u.text);
        for (const auto& p : r.responses.positives) {
            ++positives;
            positive_words += word_count(p);
        }
        for (const auto& a : r.responses.adversarial_negatives) {
            ++adv;
            adv_words += word_count(a);
        }
        if (!r.responses.adversarial_negatives.empty()) ++s.n_contexts_with_adv;
    }
    const auto n = static_cast<double>(corpus.size());
    s.avg_turns = static_cast<double>(turns) / n;
    s.avg_words_per_context = static_cast<double>(context_words) / n;
    s.avg_words_per_utterance = turns ? static_cast<double>(context_words) / static_cast<double>(turns) : 0.0;
    s.avg_words_per_positive = positives ? static_cast<double>(positive_words) / static_cast<double>(positives) : 0.0;
    s.avg_words_per_adversarial = adv ? static_cast<double>(adv_words) / static_cast<double>(adv) : 0.0;
    return s;
}

inline nlohmann::json to_json(const CorpusStats& s) {
    return {{"n_contexts", s.n_contexts},
            {"avg_turns", s.avg_turns},
            {"avg_words_per_context", s.avg_words_per_context},
            {"avg_words_per_utterance", s.avg_words_per_utterance},
            {"avg_words_per_positive", s.avg_words_per_positive},
            {"avg_words_per_adversarial", s.avg_words_per_adversarial},
            {"n_contexts_with_adv", s.n_contexts_with_adv}};
}

// ---------------------------------------------------------------------------
// Random negatives

// Fills random_negatives of every context with k positives drawn without
// replacement from other contexts, skipping responses shorter than min_words
// and any string that also appears in the receiving context's own response
// set. Each context draws from its own stream seeded by (seed, context id), so
// the result does not depend on corpus order.
inline Corpus sample_random_negatives(const Corpus& corpus, std::size_t k, std::size_t min_words,
                                      std::uint64_t seed) {
    if (corpus.size() < 2) throw ValidationError("random-negative sampling needs at least 2 contexts");

    struct PoolEntry {
        std::size_t owner;
        const std::string* text;
    };
    std::vector<PoolEntry> pool;
    std::vector<std::size_t> own_eligible(corpus.size(), 0);
    // Pool in id order so indices drawn from it do not depend on input order.
    std::vector<std::size_t> by_id(corpus.size());
    for (std::size_t i = 0; i < by_id.size(); ++i) by_id[i] = i;
    std::sort(by_id.begin(), by_id.end(), [&](auto a, auto b) { return corpus[a].id() < corpus[b].id(); });
    for (std::size_t i : by_id) {
        for (const auto& p : corpus[i].responses.positives) {
            if (word_count(p) < min_words) continue;
            pool.push_back({i, &p});
            ++own_eligible[i];
        }
    }

    Corpus out = corpus;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& rs = corpus[i].responses;
        std::unordered_set<std::string_view> own;
        for (const auto* list : {&rs.positives, &rs.random_negatives, &rs.adversarial_negatives})
            for (const auto& s : *list) own.insert(s);
        auto eligible = [&](const PoolEntry& e) { return e.owner != i && own.count(*e.text) == 0; };

        Rng rng = make_rng(seed, corpus[i].id());
        std::vector<std::size_t> chosen;
        std::unordered_set<std::size_t> taken;
        std::unordered_set<std::string_view> taken_text;

        // Rejection sampling over the shared pool; fall back to an explicit
        // candidate list when the pool is small relative to what is excluded.
        const std::size_t upper = pool.size() - own_eligible[i];
        if (upper >= 4 * k && upper > 0) {
            std::size_t attempts = 0;
            const std::size_t max_attempts = 64 * k + 64;
            while (chosen.size() < k && attempts++ < max_attempts) {
                std::size_t idx = uniform_index(rng, pool.size());
                const auto& e = pool[idx];
                if (!eligible(e) || taken.count(idx) || taken_text.count(*e.text)) continue;
                taken.insert(idx);
                taken_text.insert(*e.text);
                chosen.push_back(idx);
            }
        }
        if (chosen.size() < k) {
            chosen.clear();
            taken_text.clear();
            std::vector<std::size_t> candidates;
            for (std::size_t idx = 0; idx < pool.size(); ++idx)
                if (eligible(pool[idx])) candidates.push_back(idx);
            shuffle(candidates, rng);
            for (std::size_t idx : candidates) {
                if (chosen.size() == k) break;
                if (taken_text.insert(*pool[idx].text).second) chosen.push_back(idx);
            }
            if (chosen.size() < k)
                throw ValidationError("insufficient random-negative pool for context '" + corpus[i].id() + "': " +
                                      std::to_string(chosen.size()) + " eligible, need " + std::to_string(k));
        }
        auto& negs = out[i].responses.random_negatives;
        negs.clear();
        for (std::size_t idx : chosen) negs.push_back(*pool[idx].text);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting

inline void validate(const SplitSpec& spec) {
    for (double f : {spec.train_fraction, spec.valid_fraction, spec.test_fraction})
        if (!(f > 0.0 && f < 1.0)) throw ValidationError("split fractions must lie in (0, 1)");
    if (std::abs(spec.train_fraction + spec.valid_fraction + spec.test_fraction - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1");
}

// Sizes: floor(n * valid_fraction), floor(n * test_fraction), train gets the rest.
inline CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
    validate(spec);
    if (corpus.size() < 3) throw ValidationError("split needs at least 3 contexts");
    const auto n = corpus.size();
    // The small slack keeps products like 0.29 * 100 from flooring to 28.
    auto part = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 1e-9)); };
    const std::size_t n_valid = part(spec.valid_fraction);
    const std::size_t n_test = part(spec.test_fraction);

    // Shuffle ids in sorted order so the partition ignores input order.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return corpus[a].id() < corpus[b].id(); });
    Rng rng = make_rng(spec.seed, "split");
    shuffle(order, rng);

    CorpusSplit out;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& r = corpus[order[k]];
        if (k < n_valid) out.valid.push_back(r);
        else if (k < n_valid + n_test) out.test.push_back(r);
        else out.train.push_back(r);
    }
    return out;
}

// Persisted form of a split, consumed by the evaluate command so thresholds
// are fit on validation contexts only.
struct SplitManifest {
    SplitSpec spec;
    std::vector<std::string> train_ids;
    std::vector<std::string> valid_ids;
    std::vector<std::string> test_ids;
};

inline SplitManifest make_manifest(const CorpusSplit& s, const SplitSpec& spec) {
    SplitManifest m{spec, {}, {}, {}};
    for (const auto& r : s.train) m.train_ids.push_back(r.id());
    for (const auto& r : s.valid) m.valid_ids.push_back(r.id());
    for (const auto& r : s.test) m.test_ids.push_back(r.id());
    std::sort(m.train_ids.begin(), m.train_ids.end());
    std::sort(m.valid_ids.begin(), m.valid_ids.end());
    std::sort(m.test_ids.begin(), m.test_ids.end());
    return m;
}

inline nlohmann::json to_json(const SplitManifest& m) {
    return {{"seed", m.spec.seed},
            {"fractions", {m.spec.train_fraction, m.spec.valid_fraction, m.spec.test_fraction}},
            {"train", m.train_ids},
            {"valid", m.valid_ids},
            {"test", m.test_ids}};
}

inline SplitManifest split_manifest_from_json(const nlohmann::json& j) {
    SplitManifest m;
    try {
        m.spec.seed = j.at("seed").get<std::uint64_t>();
        const auto f = j.at("fractions").get<std::vector<double>>();
        if (f.size() != 3) throw ValidationError("split manifest 'fractions' must have 3 entries");
        m.spec.train_fraction = f[0];
        m.spec.valid_fraction = f[1];
        m.spec.test_fraction = f[2];
        m.train_ids = j.at("train").get<std::vector<std::string>>();
        m.valid_ids = j.at("valid").get<std::vector<std::string>>();
        m.test_ids = j.at("test").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("split manifest: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Evaluation instances

inline std::string candidate_id(const std::string& context_id, std::string_view kind, std::size_t index) {
    return context_id + "/" + std::string(kind) + "/" + std::to_string(index);
}

// Each positive is a candidate against the other positives; each negative is
// a candidate against the first four positives (multi), one positive chosen by
// cyclic index (single), or against four positives with weight +1 plus four
// other negatives with weight -1 (delta).
inline std::vector<EvalInstance> build_eval_instances(const Corpus& corpus, NegativeType negative_type,
                                                      ReferenceMode mode) {
    constexpr std::size_t K = kResponsesPerType;
    const bool adversarial = negative_type == NegativeType::adversarial;
    const std::string_view neg_kind = adversarial ? "adv" : "rand";
    const CandidateType neg_type = adversarial ? CandidateType::adversarial_negative : CandidateType::random_negative;

    std::vector<EvalInstance> out;
    out.reserve(corpus.size() * 2 * K);
    for (const auto& r : corpus) {
        const auto& pos = r.responses.positives;
        const auto& neg = adversarial ? r.responses.adversarial_negatives : r.responses.random_negatives;
        if (pos.size() != K || neg.size() != K)
            throw ValidationError("context '" + r.id() + "' needs " + std::to_string(K) + " positives and " +
                                  std::to_string(K) + " " + std::string(adversarial ? "adversarial" : "random") +
                                  " negatives, has " + std::to_string(pos.size()) + " and " +
                                  std::to_string(neg.size()));

        auto add_ref = [](EvalInstance& inst, const std::string& text, std::string id, double w) {
            inst.references.push_back(text);
            inst.reference_ids.push_back(std::move(id));
            inst.reference_weights.push_back(w);
        };

        auto make = [&](bool positive, std::size_t i) {
            EvalInstance inst;
            inst.context_id = r.id();
            inst.candidate_type = positive ? CandidateType::positive : neg_type;
            inst.candidate_id = candidate_id(r.id(), positive ? "pos" : neg_kind, i);
            inst.candidate = positive ? pos[i] : neg[i];
            inst.label = positive ? 1 : 0;
            switch (mode) {
            case ReferenceMode::single: {
                const std::size_t j = (i + 1) % K;
                add_ref(inst, pos[j], candidate_id(r.id(), "pos", j), 1.0);
                break;
            }
            case ReferenceMode::multi:
            case ReferenceMode::delta: {
                std::size_t added = 0;
                for (std::size_t j = 0; j < K && added < K - 1; ++j) {
                    if (positive && j == i) continue;
                    add_ref(inst, pos[j], candidate_id(r.id(), "pos", j), 1.0);
                    ++added;
                }
                if (mode == ReferenceMode::delta) {
                    added = 0;
                    for (std::size_t j = 0; j < K && added < K - 1; ++j) {
                        if (!positive && j == i) continue;
                        add_ref(inst, neg[j], candidate_id(r.id(), neg_kind, j), -1.0);
                        ++added;
                    }
                }
                break;
            }
            }
            out.push_back(std::move(inst));
        };

        for (std::size_t i = 0; i < K; ++i) make(true, i);
        for (std::size_t i = 0; i < K; ++i) make(false, i);
    }
    return out;
}

} // namespace direval

#endif // DIREVAL_CORPUS_HPP
