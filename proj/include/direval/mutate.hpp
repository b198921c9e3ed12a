#ifndef DIREVAL_MUTATE_HPP
#define DIREVAL_MUTATE_HPP

#include <algorithm>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "direval/corpus.hpp"
#include "direval/error.hpp"
#include "direval/rng.hpp"
#include "direval/textcore.hpp"

namespace direval {

enum class MutationKind { reverse, jumble, nouns_only, drop_punct, drop_stopwords, synonym_swap };

inline std::string_view to_string(MutationKind k) {
    switch (k) {
    case MutationKind::reverse: return "reverse";
    case MutationKind::jumble: return "jumble";
    case MutationKind::nouns_only: return "nouns_only";
    case MutationKind::drop_punct: return "drop_punct";
    case MutationKind::drop_stopwords: return "drop_stopwords";
    case MutationKind::synonym_swap: return "synonym_swap";
    }
    return "?";
}

inline MutationKind mutation_kind_from_string(std::string_view s) {
    for (auto k : {MutationKind::reverse, MutationKind::jumble, MutationKind::nouns_only, MutationKind::drop_punct,
                   MutationKind::drop_stopwords, MutationKind::synonym_swap})
        if (to_string(k) == s) return k;
    throw ValidationError("unknown mutation kind '" + std::string(s) + "'");
}

struct MutationSpec {
    MutationKind kind = MutationKind::reverse;
    std::uint64_t seed = 0;
    double swap_rate = 1.0;
};

struct MutationLexicons {
    const StopwordList* stopwords = nullptr;
    const SynonymLexicon* synonyms = nullptr;
    const PosLexicon* pos = nullptr;
};

// Applies one transformation. Randomised kinds draw from a stream seeded by
// (spec.seed, item_key); batch callers pass the candidate id as the key.
inline TokenSeq apply(const MutationSpec& spec, const TokenSeq& seq, const MutationLexicons& lex = {},
                      std::string_view item_key = {}) {
    if (seq.empty()) throw ValidationError("cannot mutate an empty token sequence");
    if (!(spec.swap_rate > 0.0 && spec.swap_rate <= 1.0)) throw ValidationError("swap_rate must lie in (0, 1]");

    TokenSeq out;
    switch (spec.kind) {
    case MutationKind::reverse:
        out.assign(seq.rbegin(), seq.rend());
        break;
    case MutationKind::jumble: {
        Rng rng = make_rng(spec.seed, item_key);
        std::vector<std::size_t> perm(seq.size());
        auto draw = [&] {
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            shuffle(perm, rng);
        };
        draw();
        if (seq.size() > 1 && std::is_sorted(perm.begin(), perm.end())) draw();
        for (std::size_t i : perm) out.push_back(seq[i]);
        break;
    }
    case MutationKind::nouns_only:
        if (!lex.pos) throw ResourceError("nouns_only needs a POS lexicon");
        for (const auto& t : seq)
            if (lex.pos->is_noun(t)) out.push_back(t);
        break;
    case MutationKind::drop_punct:
        for (const auto& t : seq)
            if (!is_all_punct(t)) out.push_back(t);
        break;
    case MutationKind::drop_stopwords:
        if (!lex.stopwords) throw ResourceError("drop_stopwords needs a stopword list");
        for (const auto& t : seq)
            if (!lex.stopwords->contains(t)) out.push_back(t);
        break;
    case MutationKind::synonym_swap: {
        if (!lex.synonyms) throw ResourceError("synonym_swap needs a synonym lexicon");
        Rng rng = make_rng(spec.seed, item_key);
        for (const auto& t : seq) {
            const auto* syns = lex.synonyms->find(t);
            if (syns && uniform_real(rng) < spec.swap_rate)
                out.push_back((*syns)[uniform_index(rng, syns->size())]);
            else
                out.push_back(t);
        }
        break;
    }
    }
    return out;
}

struct MutationBatch {
    std::vector<EvalInstance> instances;
    // Instances whose mutation removed every token.
    std::vector<std::string> empty_outputs;
};

// Mutates every positive response. Each output is a label-0 candidate scored
// against the context's other positives, carrying the source positive's id.
inline MutationBatch mutate_corpus(const Corpus& corpus, const MutationSpec& spec, const MutationLexicons& lex = {}) {
    MutationBatch batch;
    const std::string kind = "gen-" + std::string(to_string(spec.kind));
    for (const auto& r : corpus) {
        const auto& pos = r.responses.positives;
        if (pos.empty()) throw ValidationError("context '" + r.id() + "' has no positives to mutate");
        for (std::size_t i = 0; i < pos.size(); ++i) {
            EvalInstance inst;
            inst.context_id = r.id();
            inst.candidate_id = candidate_id(r.id(), kind, i);
            inst.candidate_type = CandidateType::generated;
            inst.source_id = candidate_id(r.id(), "pos", i);
            inst.label = 0;
            const TokenSeq mutated = apply(spec, tokenize(pos[i]), lex, inst.source_id);
            if (mutated.empty()) batch.empty_outputs.push_back(inst.candidate_id);
            inst.candidate = join(mutated);
            for (std::size_t j = 0; j < pos.size(); ++j) {
                if (j == i) continue;
                inst.references.push_back(pos[j]);
                inst.reference_ids.push_back(candidate_id(r.id(), "pos", j));
                inst.reference_weights.push_back(1.0);
            }
            batch.instances.push_back(std::move(inst));
        }
    }
    return batch;
}

} // namespace direval

#endif // DIREVAL_MUTATE_HPP
