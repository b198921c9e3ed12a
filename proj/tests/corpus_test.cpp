#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "direval/corpus.hpp"

using namespace direval;

namespace {

const std::string kData = DIREVAL_TEST_DATA;

Corpus toy() { return load_dataset(kData + "/toy_corpus.jsonl"); }

DialogRecord synthetic_record(const std::string& id, std::size_t salt) {
    DialogRecord r;
    r.context.id = id;
    r.context.utterances = {{Speaker::FS, "hello there " + id}};
    for (std::size_t i = 0; i < kResponsesPerType; ++i) {
        r.responses.positives.push_back("answer number " + std::to_string(i) + " for " + id + " salt " +
                                        std::to_string(salt));
        r.responses.adversarial_negatives.push_back("tricky reply " + std::to_string(i) + " for " + id);
    }
    return r;
}

Corpus synthetic(std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "d%05zu", i);
        c.push_back(synthetic_record(buf, i));
    }
    return c;
}

} // namespace

TEST(Dataset, LoadsToyCorpus) {
    const auto c = toy();
    ASSERT_EQ(c.size(), 10u);
    EXPECT_EQ(c.front().id(), "c01");
    EXPECT_EQ(c.front().context.utterances.size(), 2u);
    EXPECT_EQ(c.front().context.utterances[1].speaker, Speaker::SS);
    EXPECT_EQ(c.front().responses.positives.size(), 5u);
    EXPECT_TRUE(c.front().responses.random_negatives.empty());
}

TEST(Dataset, RoundTrip) {
    const auto c = toy();
    std::stringstream ss;
    write_dataset(ss, c);
    const auto again = load_dataset(ss);
    ASSERT_EQ(again.size(), c.size());
    std::stringstream ss2;
    write_dataset(ss2, again);
    EXPECT_EQ(ss.str(), ss2.str());
}

TEST(Dataset, DuplicateIdNamesTheId) {
    const auto line = to_json(synthetic_record("dup", 0)).dump();
    std::istringstream in(line + "\n" + line + "\n");
    try {
        load_dataset(in);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("dup"), std::string::npos);
    }
}

TEST(Dataset, MalformedLineReportsLineNumber) {
    const auto good = to_json(synthetic_record("a", 0)).dump();
    std::istringstream in(good + "\n\n{not json\n");
    try {
        load_dataset(in);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(Dataset, ValidationRejectsWrongShapes) {
    auto r = synthetic_record("x", 0);
    r.responses.positives.clear();
    EXPECT_THROW(validate(r), ValidationError);

    r = synthetic_record("x", 0);
    r.context.utterances.clear();
    EXPECT_THROW(validate(r), ValidationError);

    r = synthetic_record("x", 0);
    r.responses.positives[2] = "   ";
    EXPECT_THROW(validate(r), ValidationError);

    auto j = to_json(synthetic_record("x", 0));
    j["context"][0]["speaker"] = "XX";
    std::istringstream in(j.dump() + "\n");
    EXPECT_THROW(load_dataset(in), ParseError);
}

TEST(Dataset, MissingFileIsResourceError) { EXPECT_THROW(load_dataset("/nonexistent/file.jsonl"), ResourceError); }

TEST(Stats, HandComputed) {
    DialogRecord r;
    r.context.id = "s";
    r.context.utterances = {{Speaker::FS, "one two three"}, {Speaker::SS, "four five"}};
    r.responses.positives = {"a b", "a b c d", "x", "y y", "z"};
    r.responses.adversarial_negatives = {"q q q", "q", "q", "q", "q q q q q"};
    auto r2 = r;
    r2.context.id = "t";
    r2.context.utterances = {{Speaker::FS, "just one"}};
    r2.responses.adversarial_negatives.clear();
    const auto s = corpus_stats({r, r2});
    EXPECT_EQ(s.n_contexts, 2u);
    EXPECT_DOUBLE_EQ(s.avg_turns, 1.5);
    EXPECT_DOUBLE_EQ(s.avg_words_per_context, 3.5);
    EXPECT_DOUBLE_EQ(s.avg_words_per_utterance, 7.0 / 3.0);
    EXPECT_DOUBLE_EQ(s.avg_words_per_positive, 2.0);
    EXPECT_DOUBLE_EQ(s.avg_words_per_adversarial, 2.2);
    EXPECT_EQ(s.n_contexts_with_adv, 1u);
    EXPECT_THROW(corpus_stats({}), ValidationError);
}

TEST(RandomNegatives, GoldenToyOutput) {
    const auto sampled = sample_random_negatives(toy(), 5, 6, 7);
    const auto golden = load_dataset(kData + "/golden_negatives_k5_w6_s7.jsonl");
    ASSERT_EQ(sampled.size(), golden.size());
    for (std::size_t i = 0; i < sampled.size(); ++i) {
        EXPECT_EQ(sampled[i].id(), golden[i].id());
        EXPECT_EQ(sampled[i].responses.random_negatives, golden[i].responses.random_negatives);
    }
}

TEST(RandomNegatives, Invariants) {
    const auto c = toy();
    for (std::uint64_t seed : {0ull, 1ull, 99ull, 123456789ull}) {
        const auto s = sample_random_negatives(c, 5, 6, seed);
        std::set<std::string> all_positives;
        for (const auto& r : c)
            for (const auto& p : r.responses.positives) all_positives.insert(p);
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto& negs = s[i].responses.random_negatives;
            ASSERT_EQ(negs.size(), 5u);
            EXPECT_EQ(std::set<std::string>(negs.begin(), negs.end()).size(), 5u);
            const auto& own = c[i].responses;
            for (const auto& n : negs) {
                EXPECT_GE(word_count(n), 6u);
                EXPECT_TRUE(all_positives.count(n));
                EXPECT_EQ(std::count(own.positives.begin(), own.positives.end(), n), 0);
                EXPECT_EQ(std::count(own.adversarial_negatives.begin(), own.adversarial_negatives.end(), n), 0);
            }
            // everything else untouched
            EXPECT_EQ(s[i].responses.positives, own.positives);
            EXPECT_EQ(s[i].responses.adversarial_negatives, own.adversarial_negatives);
        }
    }
}

TEST(RandomNegatives, DeterministicAndOrderIndependent) {
    const auto c = toy();
    const auto a = sample_random_negatives(c, 5, 6, 42);
    const auto b = sample_random_negatives(c, 5, 6, 42);
    auto reversed = c;
    std::reverse(reversed.begin(), reversed.end());
    const auto r = sample_random_negatives(reversed, 5, 6, 42);
    for (std::size_t i = 0; i < c.size(); ++i) {
        EXPECT_EQ(a[i].responses.random_negatives, b[i].responses.random_negatives);
        EXPECT_EQ(a[i].responses.random_negatives, r[c.size() - 1 - i].responses.random_negatives);
    }
    const auto other = sample_random_negatives(c, 5, 6, 43);
    bool differs = false;
    for (std::size_t i = 0; i < c.size(); ++i)
        differs |= other[i].responses.random_negatives != a[i].responses.random_negatives;
    EXPECT_TRUE(differs);
}

TEST(RandomNegatives, InsufficientPoolNamesContext) {
    auto c = toy();
    c.resize(2);
    try {
        sample_random_negatives(c, 5, 100, 0);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("c0"), std::string::npos);
    }
}

TEST(RandomNegatives, LargeCorpusUsesRejectionPath) {
    const auto c = synthetic(500);
    const auto s = sample_random_negatives(c, 5, 3, 11);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& negs = s[i].responses.random_negatives;
        ASSERT_EQ(negs.size(), 5u);
        EXPECT_EQ(std::set<std::string>(negs.begin(), negs.end()).size(), 5u);
        for (const auto& n : negs) EXPECT_EQ(n.find(" for " + c[i].id() + " "), std::string::npos);
    }
}

TEST(Split, SizesAndDisjointness) {
    for (std::size_t n : {3u, 10u, 11u, 97u, 100u, 1000u}) {
        const auto c = synthetic(n);
        const auto s = split(c, {0.8, 0.1, 0.1, 5});
        EXPECT_EQ(s.valid.size(), n / 10);
        EXPECT_EQ(s.test.size(), n / 10);
        EXPECT_EQ(s.train.size() + s.valid.size() + s.test.size(), n);
        std::set<std::string> ids;
        for (const auto* part : {&s.train, &s.valid, &s.test})
            for (const auto& r : *part) ids.insert(r.id());
        EXPECT_EQ(ids.size(), n);
    }
}

TEST(Split, FullCorpusSizes) {
    // 19071 contexts at 0.8/0.1/0.1
    const auto c = synthetic(19071);
    const auto s = split(c, {0.8, 0.1, 0.1, 0});
    EXPECT_EQ(s.train.size(), 15257u);
    EXPECT_EQ(s.valid.size(), 1907u);
    EXPECT_EQ(s.test.size(), 1907u);
}

TEST(Split, DeterministicAndOrderIndependent) {
    auto c = synthetic(50);
    const auto a = make_manifest(split(c, {0.6, 0.2, 0.2, 9}), {0.6, 0.2, 0.2, 9});
    std::reverse(c.begin(), c.end());
    const auto b = make_manifest(split(c, {0.6, 0.2, 0.2, 9}), {0.6, 0.2, 0.2, 9});
    EXPECT_EQ(a.train_ids, b.train_ids);
    EXPECT_EQ(a.valid_ids, b.valid_ids);
    EXPECT_EQ(a.test_ids, b.test_ids);
    const auto other = make_manifest(split(c, {0.6, 0.2, 0.2, 10}), {0.6, 0.2, 0.2, 10});
    EXPECT_NE(a.test_ids, other.test_ids);
}

TEST(Split, RejectsBadFractions) {
    const auto c = synthetic(10);
    EXPECT_THROW(split(c, {0.5, 0.3, 0.3, 0}), ValidationError);
    EXPECT_THROW(split(c, {1.0, 0.0, 0.0, 0}), ValidationError);
    EXPECT_THROW(split(synthetic(2), {0.8, 0.1, 0.1, 0}), ValidationError);
}

TEST(Split, ManifestRoundTrip) {
    const SplitSpec spec{0.8, 0.1, 0.1, 3};
    const auto m = make_manifest(split(synthetic(20), spec), spec);
    const auto back = split_manifest_from_json(nlohmann::json::parse(to_json(m).dump()));
    EXPECT_EQ(back.spec.seed, 3u);
    EXPECT_EQ(back.train_ids, m.train_ids);
    EXPECT_EQ(back.valid_ids, m.valid_ids);
    EXPECT_EQ(back.test_ids, m.test_ids);
    EXPECT_THROW(split_manifest_from_json(nlohmann::json::parse("{\"seed\": 1}")), ParseError);
}

TEST(Instances, CountsAndLabels) {
    const auto c = toy();
    for (auto mode : {ReferenceMode::single, ReferenceMode::multi, ReferenceMode::delta}) {
        const auto inst = build_eval_instances(c, NegativeType::adversarial, mode);
        ASSERT_EQ(inst.size(), c.size() * 10);
        std::size_t pos = 0;
        std::set<std::string> ids;
        for (const auto& e : inst) {
            pos += e.label;
            ids.insert(e.candidate_id);
            EXPECT_EQ(e.label == 1, e.candidate_type == CandidateType::positive);
            EXPECT_EQ(e.references.size(), e.reference_weights.size());
            EXPECT_EQ(e.references.size(), e.reference_ids.size());
            // a candidate is never its own reference
            EXPECT_EQ(std::count(e.reference_ids.begin(), e.reference_ids.end(), e.candidate_id), 0);
        }
        EXPECT_EQ(pos, c.size() * 5);
        EXPECT_EQ(ids.size(), inst.size());
    }
}

TEST(Instances, ReferenceLayouts) {
    const auto c = toy();
    const auto& r = c.front();
    const auto single = build_eval_instances(c, NegativeType::adversarial, ReferenceMode::single);
    EXPECT_EQ(single[0].candidate_id, "c01/pos/0");
    EXPECT_EQ(single[0].references, std::vector<std::string>{r.responses.positives[1]});
    EXPECT_EQ(single[9].candidate_id, "c01/adv/4");
    EXPECT_EQ(single[9].references, std::vector<std::string>{r.responses.positives[0]});

    const auto multi = build_eval_instances(c, NegativeType::adversarial, ReferenceMode::multi);
    EXPECT_EQ(multi[2].reference_ids, (std::vector<std::string>{"c01/pos/0", "c01/pos/1", "c01/pos/3", "c01/pos/4"}));
    EXPECT_EQ(multi[7].reference_ids, (std::vector<std::string>{"c01/pos/0", "c01/pos/1", "c01/pos/2", "c01/pos/3"}));

    const auto delta = build_eval_instances(c, NegativeType::adversarial, ReferenceMode::delta);
    EXPECT_EQ(delta[7].reference_ids,
              (std::vector<std::string>{"c01/pos/0", "c01/pos/1", "c01/pos/2", "c01/pos/3", "c01/adv/0", "c01/adv/1",
                                        "c01/adv/3", "c01/adv/4"}));
    EXPECT_EQ(delta[7].reference_weights, (std::vector<double>{1, 1, 1, 1, -1, -1, -1, -1}));
    EXPECT_EQ(delta[0].reference_ids.size(), 8u);
}

TEST(Instances, MissingNegativesIsAnError) {
    EXPECT_THROW(build_eval_instances(toy(), NegativeType::random, ReferenceMode::multi), ValidationError);
    const auto filled = sample_random_negatives(toy(), 5, 6, 7);
    const auto inst = build_eval_instances(filled, NegativeType::random, ReferenceMode::multi);
    EXPECT_EQ(inst[5].candidate_id, "c01/rand/0");
    EXPECT_EQ(inst[5].candidate_type, CandidateType::random_negative);
}

TEST(CandidateTypes, StringRoundTrip) {
    for (auto t : {CandidateType::positive, CandidateType::random_negative, CandidateType::adversarial_negative,
                   CandidateType::generated})
        EXPECT_EQ(candidate_type_from_string(to_string(t)), t);
    EXPECT_THROW(candidate_type_from_string("nope"), ValidationError);
}
