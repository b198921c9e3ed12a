// direval: command-line driver for the dialogue-evaluation toolkit.
//
// Exit codes: 0 success, 2 usage or validation error, 3 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "direval/conicity.hpp"
#include "direval/corpus.hpp"
#include "direval/io.hpp"
#include "direval/metrics.hpp"
#include "direval/mutate.hpp"
#include "direval/pipeline.hpp"
#include "direval/stats.hpp"
#include "direval/version.hpp"

namespace {

using nlohmann::json;
using namespace direval;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

struct Options {
    std::string dataset;
    std::string metric;
    std::string negatives = "random";
    std::string refs = "multi-max";
    std::string embeddings;
    std::string ctx_embeddings;
    std::string stopwords;
    std::string synonyms;
    std::string pos_lexicon;
    std::optional<std::uint64_t> seed;
    std::string split_manifest;
    std::string threshold = "grid";
    std::string out;
    std::vector<std::string> scores;
    std::string ratings;
    std::string kind;
    double swap_rate = 1.0;
    std::size_t k = kResponsesPerType;
    std::size_t min_words = 6;
    std::vector<double> fractions{0.8, 0.1, 0.1};
    double bleu_epsilon = MetricConfig{}.bleu_epsilon;
    double rouge_beta = MetricConfig{}.rouge_beta;
    std::string extrema_rule = "abs";
    bool text = false;
};

std::uint64_t resolve_seed(const Options& o) {
    if (o.seed) return *o.seed;
    if (const char* env = std::getenv("DIREVAL_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError("DIREVAL_SEED must be an unsigned integer");
    }
    return 0;
}

MetricConfig metric_config(const Options& o) {
    MetricConfig c;
    c.bleu_epsilon = o.bleu_epsilon;
    c.rouge_beta = o.rouge_beta;
    if (o.extrema_rule == "abs") c.extrema_rule = ExtremaRule::abs;
    else if (o.extrema_rule == "signed_max") c.extrema_rule = ExtremaRule::signed_max;
    else throw ValidationError("--extrema-rule must be abs or signed_max");
    validate(c);
    return c;
}

NegativeType negative_type(const std::string& s) {
    if (s == "random") return NegativeType::random;
    if (s == "adversarial") return NegativeType::adversarial;
    throw ValidationError("--negatives must be random or adversarial");
}

// Writes the primary output and its run manifest. Without --out the output
// goes to stdout and the manifest to stderr.
void emit(const Options& o, const std::string& command, const std::string& contents, json inputs, json config,
          std::optional<std::uint64_t> seed = std::nullopt) {
    json manifest = {{"command", command},
                     {"inputs", std::move(inputs)},
                     {"seed", seed ? json(*seed) : json(nullptr)},
                     {"config", std::move(config)},
                     {"tool_version", kVersion},
                     {"output_digest", digest_hex(contents)}};
    if (o.out.empty()) {
        std::cout << contents;
        std::cerr << manifest.dump() << '\n';
    } else {
        write_file_atomic(o.out, contents);
        write_file_atomic(o.out + ".manifest.json", manifest.dump(2) + "\n");
    }
}

// --- ingest ---------------------------------------------------------------

int cmd_ingest(const Options& o) {
    const Corpus corpus = load_dataset(o.dataset);
    const CorpusStats stats = corpus_stats(corpus);
    emit(o, "ingest", to_json(stats).dump(2) + "\n", {{"dataset", o.dataset}}, json::object());
    return kExitOk;
}

// --- sample-negatives -----------------------------------------------------

int cmd_sample(const Options& o) {
    const auto seed = resolve_seed(o);
    const Corpus corpus = load_dataset(o.dataset);
    const Corpus sampled = sample_random_negatives(corpus, o.k, o.min_words, seed);
    std::ostringstream ss;
    write_dataset(ss, sampled);
    emit(o, "sample-negatives", ss.str(), {{"dataset", o.dataset}}, {{"k", o.k}, {"min_words", o.min_words}}, seed);
    return kExitOk;
}

// --- split ----------------------------------------------------------------

int cmd_split(const Options& o) {
    if (o.fractions.size() != 3) throw ValidationError("--fractions takes exactly three values");
    SplitSpec spec{o.fractions[0], o.fractions[1], o.fractions[2], resolve_seed(o)};
    const Corpus corpus = load_dataset(o.dataset);
    const auto manifest = make_manifest(split(corpus, spec), spec);
    emit(o, "split", to_json(manifest).dump(2) + "\n", {{"dataset", o.dataset}},
         {{"fractions", o.fractions}}, spec.seed);
    return kExitOk;
}

// --- score ----------------------------------------------------------------

struct LoadedResources {
    std::optional<EmbeddingTable> embeddings;
    std::optional<ContextualEmbeddings> contextual;
    std::optional<SynonymLexicon> synonyms;

    ScoringResources view() const {
        return {embeddings ? &*embeddings : nullptr, contextual ? &*contextual : nullptr,
                synonyms ? &*synonyms : nullptr};
    }
};

LoadedResources load_resources(const Options& o, const MetricId& metric) {
    LoadedResources r;
    if (!o.embeddings.empty()) r.embeddings = load_embeddings(o.embeddings);
    if (!o.ctx_embeddings.empty()) r.contextual = read_contextual_embeddings(o.ctx_embeddings);
    if (!o.synonyms.empty()) r.synonyms = load_synonyms(o.synonyms);
    require_resources(metric, r.view());
    return r;
}

json resource_inputs(const Options& o) {
    json j = json::object();
    for (const auto& [k, v] : std::map<std::string, std::string>{{"embeddings", o.embeddings},
                                                                 {"ctx_embeddings", o.ctx_embeddings},
                                                                 {"synonyms", o.synonyms},
                                                                 {"stopwords", o.stopwords},
                                                                 {"pos_lexicon", o.pos_lexicon}})
        if (!v.empty()) j[k] = v;
    return j;
}

json metric_config_json(const MetricConfig& c) {
    return {{"bleu_epsilon", c.bleu_epsilon},
            {"rouge_beta", c.rouge_beta},
            {"extrema_rule", c.extrema_rule == ExtremaRule::abs ? "abs" : "signed_max"}};
}

std::string render_scores(std::vector<ScoreRecord> records) {
    std::ostringstream ss;
    write_scores(ss, std::move(records));
    return ss.str();
}

int cmd_score(const Options& o) {
    const MetricId metric = parse_metric(o.metric);
    const RefsMode refs = parse_refs_mode(o.refs);
    const ReferenceMode layout = instance_layout(metric, refs);
    const NegativeType neg = negative_type(o.negatives);
    const MetricConfig config = metric_config(o);
    const auto resources = load_resources(o, metric);

    Corpus corpus = load_dataset(o.dataset);
    // Contexts without any negatives of the requested type are skipped.
    std::size_t skipped = 0;
    std::erase_if(corpus, [&](const DialogRecord& r) {
        const auto& list = neg == NegativeType::adversarial ? r.responses.adversarial_negatives
                                                             : r.responses.random_negatives;
        const bool drop = list.empty();
        skipped += drop;
        return drop;
    });
    if (corpus.empty()) throw ValidationError("no context has " + o.negatives + " negatives");
    const auto instances = build_eval_instances(corpus, neg, layout);
    const auto records = score_instances(instances, metric, refs, resources.view(), config);

    json inputs = resource_inputs(o);
    inputs["dataset"] = o.dataset;
    json cfg = metric_config_json(config);
    cfg["metric"] = metric.name;
    cfg["refs"] = o.refs;
    cfg["negatives"] = o.negatives;
    cfg["contexts_scored"] = corpus.size();
    cfg["contexts_skipped"] = skipped;
    emit(o, "score", render_scores(records), std::move(inputs), std::move(cfg));
    return kExitOk;
}

// --- evaluate -------------------------------------------------------------

std::optional<SplitManifest> load_split(const Options& o) {
    if (o.split_manifest.empty()) return std::nullopt;
    std::ifstream in(o.split_manifest);
    if (!in) throw ResourceError("cannot open '" + o.split_manifest + "'");
    try {
        return split_manifest_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw ParseError(std::string("split manifest: ") + e.what());
    }
}

std::string text_table(const EvalReport& r) {
    std::ostringstream ss;
    auto q = [](const Quartiles& x) {
        std::ostringstream s;
        s << x.min << " / " << x.q1 << " / " << x.median << " / " << x.q3 << " / " << x.max;
        return s.str();
    };
    ss << "metric      " << r.metric << "\n"
       << "n_pos/n_neg " << r.n_pos << " / " << r.n_neg << "\n"
       << "pbc (p)     " << r.pbc << " (" << r.pbc_p << ")\n"
       << "threshold   " << r.threshold << " [" << r.threshold_mode << ", fit on " << r.fit_slice << "]\n"
       << "accuracy    " << 100.0 * r.accuracy << "%\n"
       << "tp fn fp tn " << r.confusion.tp << " " << r.confusion.fn << " " << r.confusion.fp << " "
       << r.confusion.tn << "\n"
       << "pos box     " << q(r.quartiles_pos) << "\n"
       << "neg box     " << q(r.quartiles_neg) << "\n";
    return ss.str();
}

int cmd_evaluate(const Options& o) {
    if (o.scores.size() != 1) throw ValidationError("evaluate takes exactly one --scores file");
    const auto records = read_scores(o.scores[0]);
    const auto split = load_split(o);
    EvaluateOptions opt{parse_threshold_mode(o.threshold), split ? &*split : nullptr};
    const EvalReport rep = evaluate(records, opt);
    json inputs = {{"scores", o.scores[0]}};
    if (split) inputs["split_manifest"] = o.split_manifest;
    if (o.text) std::cerr << text_table(rep);
    emit(o, "evaluate", to_json(rep).dump(2) + "\n", std::move(inputs), {{"threshold", o.threshold}});
    return kExitOk;
}

// --- mutate ---------------------------------------------------------------

int cmd_mutate(const Options& o) {
    const auto seed = resolve_seed(o);
    MutationSpec spec{mutation_kind_from_string(o.kind), seed, o.swap_rate};
    std::optional<StopwordList> stop;
    std::optional<SynonymLexicon> syn;
    std::optional<PosLexicon> pos;
    if (!o.stopwords.empty()) stop = load_stopwords(o.stopwords);
    if (!o.synonyms.empty()) syn = load_synonyms(o.synonyms);
    if (!o.pos_lexicon.empty()) pos = load_pos_lexicon(o.pos_lexicon);
    if (spec.kind == MutationKind::drop_stopwords && !stop) throw ResourceError("drop_stopwords requires --stopwords");
    if (spec.kind == MutationKind::synonym_swap && !syn) throw ResourceError("synonym_swap requires --synonyms");
    if (spec.kind == MutationKind::nouns_only && !pos) throw ResourceError("nouns_only requires --pos-lexicon");
    MutationLexicons lex{stop ? &*stop : nullptr, syn ? &*syn : nullptr, pos ? &*pos : nullptr};

    const Corpus corpus = load_dataset(o.dataset);
    MutationBatch batch = mutate_corpus(corpus, spec, lex);
    sort_canonical(batch.instances);

    json inputs = resource_inputs(o);
    inputs["dataset"] = o.dataset;
    json cfg = {{"kind", o.kind}, {"swap_rate", o.swap_rate}, {"empty_outputs", batch.empty_outputs.size()}};

    std::string contents;
    if (o.metric.empty()) {
        std::ostringstream ss;
        for (const auto& inst : batch.instances) {
            json j = {{"context_id", inst.context_id},
                      {"candidate_id", inst.candidate_id},
                      {"candidate_type", to_string(inst.candidate_type)},
                      {"source_id", inst.source_id},
                      {"mutation", o.kind},
                      {"candidate", inst.candidate},
                      {"references", inst.references},
                      {"label", inst.label}};
            ss << j.dump() << '\n';
        }
        contents = ss.str();
    } else {
        const MetricId metric = parse_metric(o.metric);
        const RefsMode refs = parse_refs_mode(o.refs);
        if (instance_layout(metric, refs) != ReferenceMode::multi && refs != RefsMode::single)
            throw ValidationError("mutated candidates are scored against the other positives; --refs delta is not "
                                  "supported here");
        const MetricConfig config = metric_config(o);
        const auto resources = load_resources(o, metric);
        std::vector<EvalInstance> scorable;
        for (auto& inst : batch.instances) {
            if (inst.candidate.empty()) continue;
            if (refs == RefsMode::single) {
                inst.references.resize(1);
                inst.reference_ids.resize(1);
                inst.reference_weights.resize(1);
            }
            scorable.push_back(std::move(inst));
        }
        contents = render_scores(score_instances(scorable, metric, refs, resources.view(), config));
        cfg["metric"] = metric.name;
        cfg["refs"] = o.refs;
    }
    emit(o, "mutate", contents, std::move(inputs), std::move(cfg), seed);
    return kExitOk;
}

// --- conicity -------------------------------------------------------------

int cmd_conicity(const Options& o) {
    const auto sets = read_sentence_embeddings(o.ctx_embeddings);
    const ConicityReport rep = set_analysis(sets);
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json per_context = json::array();
    for (const auto& c : rep.contexts)
        per_context.push_back({{"context_id", c.context_id},
                               {"P", c.positives},
                               {"P+R", opt(c.with_random)},
                               {"P+A", opt(c.with_adversarial)}});
    json j = {{"n_contexts", rep.contexts.size()},
              {"mean_conicity", {{"P", rep.mean_positives},
                                 {"P+R", opt(rep.mean_with_random)},
                                 {"P+A", opt(rep.mean_with_adversarial)}}},
              {"n_contexts_with_random", rep.n_with_random},
              {"n_contexts_with_adversarial", rep.n_with_adversarial},
              {"contexts", std::move(per_context)}};
    emit(o, "conicity", j.dump(2) + "\n", {{"ctx_embeddings", o.ctx_embeddings}}, json::object());
    return kExitOk;
}

// --- correlate / compare --------------------------------------------------

int cmd_correlate(const Options& o) {
    if (o.scores.size() != 1) throw ValidationError("correlate takes exactly one --scores file");
    const auto rep = correlate(read_scores(o.scores[0]), read_ratings(o.ratings));
    emit(o, "correlate", to_json(rep).dump(2) + "\n", {{"scores", o.scores[0]}, {"ratings", o.ratings}},
         json::object());
    return kExitOk;
}

int cmd_compare(const Options& o) {
    if (o.scores.size() != 2) throw ValidationError("compare takes exactly two --scores files");
    const auto split = load_split(o);
    EvaluateOptions opt{parse_threshold_mode(o.threshold), split ? &*split : nullptr};
    const auto rep = compare(read_scores(o.scores[0]), read_scores(o.scores[1]), opt);
    json inputs = {{"scores", o.scores}};
    if (split) inputs["split_manifest"] = o.split_manifest;
    emit(o, "compare", to_json(rep).dump(2) + "\n", std::move(inputs), {{"threshold", o.threshold}});
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    Options o;
    CLI::App app{"direval: dialogue response evaluation toolkit", "direval"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    auto add_out = [&](CLI::App* c) { c->add_option("--out", o.out, "Output path (stdout when omitted)"); };
    auto add_seed = [&](CLI::App* c) {
        c->add_option("--seed", o.seed, "Random seed (falls back to $DIREVAL_SEED, then 0)");
    };
    auto add_metric_config = [&](CLI::App* c) {
        c->add_option("--bleu-epsilon", o.bleu_epsilon, "Replacement for zero BLEU precisions");
        c->add_option("--rouge-beta", o.rouge_beta, "ROUGE-L recall weight");
        c->add_option("--extrema-rule", o.extrema_rule, "Vector extrema rule: abs or signed_max");
    };
    auto add_resources = [&](CLI::App* c) {
        c->add_option("--embeddings", o.embeddings, "Word vectors, 'token v1 ... vd' per line");
        c->add_option("--ctx-embeddings", o.ctx_embeddings, "Contextual embedding JSONL");
        c->add_option("--synonyms", o.synonyms, "Synonym lexicon, 'word<TAB>syn1,syn2'");
        c->add_option("--stopwords", o.stopwords, "Stopword list, one per line");
        c->add_option("--pos-lexicon", o.pos_lexicon, "POS lexicon, 'word<TAB>TAG1,TAG2'");
    };

    auto* ingest = app.add_subcommand("ingest", "Validate a dataset and print corpus statistics");
    ingest->add_option("--dataset", o.dataset, "Dataset JSONL")->required();
    add_out(ingest);

    auto* sample = app.add_subcommand("sample-negatives", "Fill random negatives from other contexts' positives");
    sample->add_option("--dataset", o.dataset, "Dataset JSONL")->required();
    sample->add_option("--k", o.k, "Negatives per context");
    sample->add_option("--min-words", o.min_words, "Minimum whitespace words per sampled response");
    add_seed(sample);
    add_out(sample);

    auto* split_cmd = app.add_subcommand("split", "Write a train/valid/test split manifest");
    split_cmd->add_option("--dataset", o.dataset, "Dataset JSONL")->required();
    split_cmd->add_option("--fractions", o.fractions, "Train, valid and test fractions")->expected(3)->delimiter(',');
    add_seed(split_cmd);
    add_out(split_cmd);

    auto* score = app.add_subcommand("score", "Score every evaluation instance with one metric");
    score->add_option("--dataset", o.dataset, "Dataset JSONL")->required();
    score->add_option("--metric", o.metric, "Metric name")->required();
    score->add_option("--negatives", o.negatives, "random or adversarial");
    score->add_option("--refs", o.refs, "single, multi-max, multi-avg, standard or delta");
    add_resources(score);
    add_metric_config(score);
    add_seed(score);
    add_out(score);

    auto* evaluate_cmd = app.add_subcommand("evaluate", "PBC, threshold, accuracy and quartiles for a score file");
    evaluate_cmd->add_option("--scores", o.scores, "Score-file JSONL")->required();
    evaluate_cmd->add_option("--threshold", o.threshold, "grid or a fixed threshold such as 0.5");
    evaluate_cmd->add_option("--split-manifest", o.split_manifest, "Fit on valid, report on test");
    evaluate_cmd->add_flag("--text", o.text, "Also print a plain-text table to stderr");
    add_out(evaluate_cmd);

    auto* mutate_cmd = app.add_subcommand("mutate", "Apply a synthetic transformation to every positive");
    mutate_cmd->add_option("--dataset", o.dataset, "Dataset JSONL")->required();
    mutate_cmd->add_option("--kind", o.kind,
                           "reverse, jumble, nouns_only, drop_punct, drop_stopwords or synonym_swap")
        ->required();
    mutate_cmd->add_option("--swap-rate", o.swap_rate, "Replacement probability for synonym_swap");
    mutate_cmd->add_option("--metric", o.metric, "Score the mutated responses instead of writing them");
    mutate_cmd->add_option("--refs", o.refs, "Reference mode when scoring");
    add_resources(mutate_cmd);
    add_metric_config(mutate_cmd);
    add_seed(mutate_cmd);
    add_out(mutate_cmd);

    auto* conicity_cmd = app.add_subcommand("conicity", "Conicity of P, P+R and P+A per context");
    conicity_cmd->add_option("--ctx-embeddings", o.ctx_embeddings, "Sentence-vector JSONL")->required();
    add_out(conicity_cmd);

    auto* correlate_cmd = app.add_subcommand("correlate", "Correlate a score file with human ratings");
    correlate_cmd->add_option("--scores", o.scores, "Score-file JSONL")->required();
    correlate_cmd->add_option("--ratings", o.ratings, "Human-rating JSONL")->required();
    add_out(correlate_cmd);

    auto* compare_cmd = app.add_subcommand("compare", "Williams and chi-squared tests between two score files");
    compare_cmd->add_option("--scores", o.scores, "Two score files")->required()->expected(2);
    compare_cmd->add_option("--threshold", o.threshold, "grid or a fixed threshold");
    compare_cmd->add_option("--split-manifest", o.split_manifest, "Fit on valid, report on test");
    add_out(compare_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*ingest) return cmd_ingest(o);
        if (*sample) return cmd_sample(o);
        if (*split_cmd) return cmd_split(o);
        if (*score) return cmd_score(o);
        if (*evaluate_cmd) return cmd_evaluate(o);
        if (*mutate_cmd) return cmd_mutate(o);
        if (*conicity_cmd) return cmd_conicity(o);
        if (*correlate_cmd) return cmd_correlate(o);
        if (*compare_cmd) return cmd_compare(o);
    } catch (const direval::Error& e) {
        std::cerr << "direval: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "direval: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitUsage;
}
