#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "direval/metrics.hpp"

using namespace direval;

namespace {

EmbeddingTable orthonormal_table() {
    EmbeddingTable t;
    t.insert("e1", {1, 0, 0});
    t.insert("e2", {0, 1, 0});
    t.insert("e3", {0, 0, 1});
    t.insert("diag", {1, 1, 0});
    return t;
}

TokenSeq random_sentence(std::mt19937& rng, std::size_t min_len, std::size_t max_len, int vocab) {
    TokenSeq s(min_len + rng() % (max_len - min_len + 1));
    for (auto& t : s) t = "w" + std::to_string(rng() % static_cast<unsigned>(vocab));
    return s;
}

} // namespace

TEST(Bleu, IdentityIsOne) {
    const TokenSeq s{"the", "cat", "sat", "down"};
    for (int k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(bleu_k(s, std::vector<TokenSeq>{s}, k), 1.0);
}

TEST(Bleu, HandClippedCounts) {
    EXPECT_DOUBLE_EQ(bleu_k({"the", "cat"}, std::vector<TokenSeq>{{"the", "dog"}}, 1), 0.5);
    EXPECT_DOUBLE_EQ(bleu_k({"the", "the"}, std::vector<TokenSeq>{{"the", "cat"}, {"a", "the"}}, 1), 0.5);
}

TEST(Bleu, BrevityPenaltyPicksClosestShorterReference) {
    // candidate length 3; references of length 2 and 4 are equally close, the shorter wins, so BP = 1.
    const TokenSeq c{"a", "b", "c"};
    EXPECT_DOUBLE_EQ(bleu_k(c, std::vector<TokenSeq>{{"a", "b"}, {"a", "b", "c", "d"}}, 1), 1.0);
    // Single longer reference: BP = exp(1 - 4/3), precision 1.
    EXPECT_NEAR(bleu_k(c, std::vector<TokenSeq>{{"a", "b", "c", "d"}}, 1), std::exp(1.0 - 4.0 / 3.0), 1e-12);
}

TEST(Bleu, ZeroMatchesUseEpsilon) {
    MetricConfig cfg;
    cfg.bleu_epsilon = 1e-3;
    // unigram precision eps/2, BP 1
    EXPECT_NEAR(bleu_k({"x", "y"}, std::vector<TokenSeq>{{"a", "b"}}, 1, cfg), 0.5e-3, 1e-15);
}

TEST(Bleu, ErrorsOnEmptyInput) {
    EXPECT_THROW(bleu_k({}, std::vector<TokenSeq>{{"a"}}, 1), ValidationError);
    EXPECT_THROW(bleu_k({"a"}, std::vector<TokenSeq>{}, 1), ValidationError);
    EXPECT_THROW(bleu_k({"a"}, std::vector<TokenSeq>{{"a"}}, 5), ValidationError);
}

TEST(Bleu, StandardMultiRefAtLeastAnySingleReference) {
    std::mt19937 rng(23);
    for (int trial = 0; trial < 2000; ++trial) {
        const auto c = random_sentence(rng, 1, 8, 6);
        std::vector<TokenSeq> refs;
        for (int i = 0; i < 4; ++i) refs.push_back(random_sentence(rng, 1, 8, 6));
        for (int k = 1; k <= 4; ++k) {
            // Only holds when the brevity penalty is shared, so use equal-length references.
            std::vector<TokenSeq> same_len;
            for (auto r : refs) {
                r.resize(c.size(), "pad");
                same_len.push_back(r);
            }
            const double multi = bleu_k(c, same_len, k);
            for (const auto& r : same_len) EXPECT_GE(multi + 1e-15, bleu_k(c, std::vector<TokenSeq>{r}, k));
        }
    }
}

TEST(DeltaBleu, SinglePositiveReferenceReducesToBleu) {
    std::mt19937 rng(29);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = random_sentence(rng, 1, 8, 5);
        const auto r = random_sentence(rng, 1, 8, 5);
        for (int k = 1; k <= 4; ++k)
            EXPECT_DOUBLE_EQ(delta_bleu(c, std::vector<WeightedReference>{{r, 1.0}}, k).score,
                             bleu_k(c, std::vector<TokenSeq>{r}, k));
    }
}

TEST(DeltaBleu, AllPositiveWeightsMatchBleuClipping) {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 500; ++trial) {
        const auto c = random_sentence(rng, 1, 8, 5);
        std::vector<TokenSeq> refs;
        std::vector<WeightedReference> weighted;
        for (int i = 0; i < 3; ++i) {
            refs.push_back(random_sentence(rng, 1, 8, 5));
            weighted.push_back({refs.back(), 1.0});
        }
        for (int k = 1; k <= 4; ++k) EXPECT_NEAR(delta_bleu(c, weighted, k).score, bleu_k(c, refs, k), 1e-14);
    }
}

TEST(DeltaBleu, Identity) {
    EXPECT_DOUBLE_EQ(delta_bleu({"good", "idea"}, std::vector<WeightedReference>{{{"good", "idea"}, 1.0}}, 2).score,
                     1.0);
}

TEST(DeltaBleu, NegativeReferencesPenalise) {
    const auto s = delta_bleu({"the", "cat"},
                              std::vector<WeightedReference>{{{"the", "cat"}, -1.0}, {{"a", "dog"}, 1.0}}, 1);
    EXPECT_DOUBLE_EQ(s.unclamped_p1, -1.0);
    EXPECT_GE(s.score, 0.0);
    EXPECT_LT(s.score, 1e-6);
}

TEST(DeltaBleu, PositiveMatchBeatsNegativeMatch) {
    // "the" appears in both a +1 and a -1 reference: the larger weighted count wins.
    const auto s = delta_bleu({"the", "cat"},
                              std::vector<WeightedReference>{{{"the", "dog"}, 1.0}, {{"the", "cat"}, -1.0}}, 1);
    EXPECT_DOUBLE_EQ(s.unclamped_p1, 0.0);  // (+1 for "the") + (-1 for "cat")
}

TEST(DeltaBleu, RequiresPositiveReference) {
    EXPECT_THROW(delta_bleu({"a"}, std::vector<WeightedReference>{{{"a"}, -1.0}}, 1), ValidationError);
}

TEST(DeltaBleu, UnclampedP1InRange) {
    std::mt19937 rng(37);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto c = random_sentence(rng, 1, 8, 4);
        std::vector<WeightedReference> refs{{random_sentence(rng, 1, 8, 4), 1.0}};
        for (int i = 0; i < 3; ++i) refs.push_back({random_sentence(rng, 1, 8, 4), (rng() % 2) ? 1.0 : -1.0});
        const auto s = delta_bleu(c, refs, 4);
        EXPECT_GE(s.unclamped_p1, -1.0);
        EXPECT_LE(s.unclamped_p1, 1.0);
        EXPECT_GE(s.score, 0.0);
        EXPECT_LE(s.score, 1.0);
    }
}

TEST(RougeL, Examples) {
    const TokenSeq s{"a", "b", "c"};
    EXPECT_DOUBLE_EQ(rouge_l(s, std::vector<TokenSeq>{s}), 1.0);
    EXPECT_DOUBLE_EQ(rouge_l(s, std::vector<TokenSeq>{{"x", "y"}}), 0.0);
    // P = 3/4, R = 1, beta = 1.2: 2.44 * 0.75 / (1 + 1.44 * 0.75)
    const double f = rouge_l({"a", "b", "c", "d"}, std::vector<TokenSeq>{{"a", "c", "d"}});
    EXPECT_NEAR(f, 2.44 * 0.75 / (1 + 1.44 * 0.75), 1e-12);
    EXPECT_NEAR(f, 0.87981, 1e-4);
}

TEST(RougeL, PrecisionAndRecallMaximisedIndependently) {
    // ref1 gives P = 2/2, R = 2/4; ref2 gives P = 1/2, R = 1/1.
    const double f = rouge_l({"a", "b"}, std::vector<TokenSeq>{{"a", "b", "x", "y"}, {"b"}});
    EXPECT_NEAR(f, 2.44 * 1.0 * 1.0 / (1.0 + 1.44 * 1.0), 1e-12);
}

TEST(Meteor, IdentityOfThreeTokens) {
    const TokenSeq s{"the", "cat", "sat"};
    const auto d = meteor_detail(s, s);
    EXPECT_EQ(d.matches, 3u);
    EXPECT_EQ(d.chunks, 1u);
    EXPECT_DOUBLE_EQ(d.fmean, 1.0);
    EXPECT_NEAR(d.score, 1.0 - 0.5 / 27.0, 1e-12);
    EXPECT_NEAR(d.score, 0.98148, 1e-4);
}

TEST(Meteor, NoMatches) { EXPECT_DOUBLE_EQ(meteor({"x"}, {"y"}), 0.0); }

TEST(Meteor, StemMatch) {
    const auto d = meteor_detail({"cats"}, {"cat"});
    EXPECT_EQ(d.matches, 1u);
    EXPECT_EQ(d.chunks, 1u);
    EXPECT_DOUBLE_EQ(d.penalty, 0.5);
    EXPECT_DOUBLE_EQ(d.score, 0.5);
}

TEST(Meteor, StemStageCanBeDisabled) {
    EXPECT_DOUBLE_EQ(meteor({"cats"}, {"cat"}, MeteorResources{false, nullptr}), 0.0);
}

TEST(Meteor, SynonymStage) {
    const SynonymLexicon lex{{"good", {"fine"}}};
    const auto d = meteor_detail({"fine", "idea"}, {"good", "idea"}, MeteorResources{true, &lex});
    EXPECT_EQ(d.matches, 2u);
    EXPECT_EQ(d.chunks, 1u);
    EXPECT_EQ(meteor_detail({"fine", "idea"}, {"good", "idea"}).matches, 1u);
}

TEST(Meteor, ChunksCountContiguousRuns) {
    // alignment a->a, b->b, c->c with reference order c a b: runs [a b] and [c]
    const auto d = meteor_detail({"a", "b", "c"}, {"c", "a", "b"});
    EXPECT_EQ(d.matches, 3u);
    EXPECT_EQ(d.chunks, 2u);
    EXPECT_NEAR(d.score, 1.0 - 0.5 * std::pow(2.0 / 3.0, 3), 1e-12);
}

TEST(Meteor, IdentityAtLeast098ForThreeOrMoreTokens) {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 500; ++trial) {
        const auto s = random_sentence(rng, 3, 15, 8);
        EXPECT_GE(meteor(s, s), 0.98 - 1e-9);
    }
}

TEST(EmbeddingMetrics, EmbeddingAverage) {
    const auto t = orthonormal_table();
    EXPECT_NEAR(embedding_average({"e1", "e2"}, {"e1", "e2"}, t), 1.0, 1e-12);
    EXPECT_NEAR(embedding_average({"e1"}, {"e2"}, t), 0.0, 1e-12);
    EXPECT_NEAR(embedding_average({"e1", "e2"}, {"e1"}, t), 0.70710678, 1e-8);
}

TEST(EmbeddingMetrics, OutOfVocabularySkippedButNotEverything) {
    const auto t = orthonormal_table();
    EXPECT_NEAR(embedding_average({"e1", "zzz"}, {"e1"}, t), 1.0, 1e-12);
    EXPECT_THROW(embedding_average({"zzz"}, {"e1"}, t), DomainError);
    EXPECT_THROW(greedy_matching({"e1"}, {"qqq"}, t), DomainError);
}

TEST(EmbeddingMetrics, ExtremaVector) {
    EmbeddingTable t;
    t.insert("u", {1, -2});
    t.insert("v", {3, 1});
    t.insert("p", {2, 0});
    t.insert("n", {-2, 0});
    EXPECT_EQ(extrema_vector({"u", "v"}, t), (Vector{3, -2}));
    EXPECT_NEAR(vector_extrema({"u", "v"}, {"v", "u"}, t), 1.0, 1e-12);
    // tie between +2 and -2 resolves to +2
    EXPECT_EQ(extrema_vector({"n", "p"}, t), (Vector{2, 0}));
    EXPECT_EQ(extrema_vector({"u", "v"}, t, ExtremaRule::signed_max), (Vector{3, 1}));
}

TEST(EmbeddingMetrics, GreedyMatching) {
    const auto t = orthonormal_table();
    EXPECT_NEAR(greedy_matching({"e1", "e2"}, {"e2", "e1"}, t), 1.0, 1e-12);
    EXPECT_NEAR(greedy_matching({"e1"}, {"e2"}, t), 0.0, 1e-12);
    EXPECT_NEAR(greedy_matching({"e1", "e2"}, {"e1"}, t), 0.75, 1e-12);
}

TEST(BertScoreTest, Examples) {
    const Vector e1{1, 0}, e2{0, 1};
    const auto same = bertscore({e1, e2}, {e1, e2});
    EXPECT_DOUBLE_EQ(same.f1, 1.0);
    EXPECT_DOUBLE_EQ(bertscore({e1}, {e2}).f1, 0.0);
    const auto s = bertscore({e1, e2}, {e1});
    EXPECT_DOUBLE_EQ(s.precision, 0.5);
    EXPECT_DOUBLE_EQ(s.recall, 1.0);
    EXPECT_NEAR(s.f1, 2.0 / 3.0, 1e-12);
}

TEST(BertScoreTest, Errors) {
    EXPECT_THROW(bertscore({}, {{1, 0}}), ValidationError);
    EXPECT_THROW(bertscore({{1, 0}}, {{1, 0, 0}}), DomainError);
}

TEST(Aggregation, MaxAndAverage) {
    const std::vector<double> refs{0.2, 0.8};
    auto id = [](int, double r) { return r; };
    EXPECT_DOUBLE_EQ(aggregate_multi_ref(id, 0, std::span<const double>(refs), Aggregation::max), 0.8);
    EXPECT_DOUBLE_EQ(aggregate_multi_ref(id, 0, std::span<const double>(refs), Aggregation::avg), 0.5);
    EXPECT_THROW(aggregate_multi_ref(id, 0, std::span<const double>(), Aggregation::max), ValidationError);
}

TEST(Aggregation, SingleReferenceIsTheMetric) {
    const TokenSeq c{"a", "b", "c"}, r{"a", "c"};
    auto m = [](const TokenSeq& x, const TokenSeq& y) { return meteor(x, y); };
    std::vector<TokenSeq> one{r};
    EXPECT_DOUBLE_EQ(aggregate_multi_ref(m, c, std::span<const TokenSeq>(one), Aggregation::max), meteor(c, r));
    EXPECT_DOUBLE_EQ(aggregate_multi_ref(m, c, std::span<const TokenSeq>(one), Aggregation::avg), meteor(c, r));
}

TEST(Aggregation, OrderInvariance) {
    std::mt19937 rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        const auto c = random_sentence(rng, 1, 8, 6);
        std::vector<TokenSeq> refs;
        for (int i = 0; i < 4; ++i) refs.push_back(random_sentence(rng, 1, 8, 6));
        auto shuffled = refs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_DOUBLE_EQ(bleu_k(c, refs, 2), bleu_k(c, shuffled, 2));
        EXPECT_DOUBLE_EQ(rouge_l(c, refs), rouge_l(c, shuffled));
        auto m = [](const TokenSeq& x, const TokenSeq& y) { return meteor(x, y); };
        EXPECT_DOUBLE_EQ(aggregate_multi_ref(m, c, std::span<const TokenSeq>(refs), Aggregation::max),
                         aggregate_multi_ref(m, c, std::span<const TokenSeq>(shuffled), Aggregation::max));
        EXPECT_NEAR(aggregate_multi_ref(m, c, std::span<const TokenSeq>(refs), Aggregation::avg),
                    aggregate_multi_ref(m, c, std::span<const TokenSeq>(shuffled), Aggregation::avg), 1e-15);
    }
}
