#ifndef DIREVAL_IO_HPP
#define DIREVAL_IO_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <tuple>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <unistd.h>

#include "json.hpp"

#include "direval/conicity.hpp"
#include "direval/corpus.hpp"
#include "direval/error.hpp"
#include "direval/rng.hpp"
#include "direval/textcore.hpp"

namespace direval {

struct ScoreRecord {
    std::string context_id;
    std::string candidate_id;
    CandidateType candidate_type = CandidateType::positive;
    std::string metric;
    double score = 0.0;
};

struct HumanRating {
    std::string context_id;
    std::string candidate_id;
    double rating = 0.0;
};

// Canonical record order: (context_id, candidate_id).
template <class T>
void sort_canonical(std::vector<T>& v) {
    std::sort(v.begin(), v.end(), [](const T& a, const T& b) {
        return std::tie(a.context_id, a.candidate_id) < std::tie(b.context_id, b.candidate_id);
    });
}

namespace detail {

// Calls fn(json, line_number) for every non-blank line; JSON errors become
// ParseErrors carrying the line number.
template <class Fn>
void for_each_jsonl(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (!has_non_space(line)) continue;
        try {
            fn(nlohmann::json::parse(line), lineno);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(e.what(), lineno);
        } catch (const ValidationError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
}

inline double finite_or_throw(double v, const char* what) {
    if (!std::isfinite(v)) throw ValidationError(std::string(what) + " must be finite");
    return v;
}

} // namespace detail

inline nlohmann::json to_json(const ScoreRecord& r) {
    return {{"context_id", r.context_id},
            {"candidate_id", r.candidate_id},
            {"candidate_type", to_string(r.candidate_type)},
            {"metric", r.metric},
            {"score", r.score}};
}

inline std::vector<ScoreRecord> read_scores(std::istream& in) {
    std::vector<ScoreRecord> out;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
        ScoreRecord r;
        r.context_id = j.at("context_id").get<std::string>();
        r.candidate_id = j.at("candidate_id").get<std::string>();
        r.candidate_type = candidate_type_from_string(j.at("candidate_type").get<std::string>());
        r.metric = j.at("metric").get<std::string>();
        r.score = detail::finite_or_throw(j.at("score").get<double>(), "score");
        out.push_back(std::move(r));
    });
    return out;
}

inline std::vector<ScoreRecord> read_scores(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return read_scores(in);
}

inline void write_scores(std::ostream& out, std::vector<ScoreRecord> records) {
    sort_canonical(records);
    for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<HumanRating> read_ratings(const std::string& path) {
    auto in = detail::open_or_throw(path);
    std::vector<HumanRating> out;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
        out.push_back({j.at("context_id").get<std::string>(), j.at("candidate_id").get<std::string>(),
                       detail::finite_or_throw(j.at("rating").get<double>(), "rating")});
    });
    return out;
}

// Per-candidate token vectors for BERTScore, keyed by candidate id.
class ContextualEmbeddings {
public:
    void insert(std::string id, std::vector<Vector> vectors) {
        if (vectors.empty()) throw ValidationError("no vectors for '" + id + "'");
        const std::size_t d = vectors.front().size();
        if (d == 0) throw ValidationError("zero-dimensional vectors for '" + id + "'");
        for (const auto& v : vectors)
            if (v.size() != d) throw ValidationError("inconsistent vector dimensions for '" + id + "'");
        if (dim_ == 0) dim_ = d;
        if (d != dim_) throw ValidationError("vectors for '" + id + "' have dimension " + std::to_string(d) +
                                             ", expected " + std::to_string(dim_));
        vectors_.insert_or_assign(std::move(id), std::move(vectors));
    }

    const std::vector<Vector>* find(const std::string& id) const {
        auto it = vectors_.find(id);
        return it == vectors_.end() ? nullptr : &it->second;
    }

    std::size_t size() const noexcept { return vectors_.size(); }
    std::size_t dim() const noexcept { return dim_; }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<Vector>> vectors_;
};

// {"candidate_id": str, "tokens": [str], "vectors": [[real x dim]]}
inline ContextualEmbeddings read_contextual_embeddings(std::istream& in) {
    ContextualEmbeddings out;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
        auto id = j.at("candidate_id").get<std::string>();
        auto vectors = j.at("vectors").get<std::vector<Vector>>();
        if (auto it = j.find("tokens"); it != j.end() && it->size() != vectors.size())
            throw ValidationError("'" + id + "': tokens and vectors differ in length");
        out.insert(std::move(id), std::move(vectors));
    });
    return out;
}

inline ContextualEmbeddings read_contextual_embeddings(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return read_contextual_embeddings(in);
}

// One sentence vector per candidate, grouped by context in file order:
// {"candidate_id", "context_id", "candidate_type", "vector": [real x dim]}
inline std::vector<LabeledEmbeddingSet> read_sentence_embeddings(std::istream& in) {
    std::vector<LabeledEmbeddingSet> sets;
    std::unordered_map<std::string, std::size_t> index;
    std::size_t dim = 0;
    detail::for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t) {
        LabeledEmbedding e;
        e.candidate_id = j.at("candidate_id").get<std::string>();
        e.candidate_type = candidate_type_from_string(j.at("candidate_type").get<std::string>());
        e.vector = j.at("vector").get<Vector>();
        if (e.vector.empty()) throw ValidationError("empty vector for '" + e.candidate_id + "'");
        if (dim == 0) dim = e.vector.size();
        if (e.vector.size() != dim) throw ValidationError("vector for '" + e.candidate_id + "' has dimension " +
                                                          std::to_string(e.vector.size()) + ", expected " +
                                                          std::to_string(dim));
        if (norm(e.vector) == 0.0) throw ValidationError("zero vector for '" + e.candidate_id + "'");
        const auto ctx = j.at("context_id").get<std::string>();
        auto [it, fresh] = index.try_emplace(ctx, sets.size());
        if (fresh) sets.push_back({ctx, {}});
        sets[it->second].entries.push_back(std::move(e));
    });
    return sets;
}

inline std::vector<LabeledEmbeddingSet> read_sentence_embeddings(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return read_sentence_embeddings(in);
}

inline std::string digest_hex(std::string_view bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return std::string("fnv1a64:") + buf;
}

// Writes to a sibling temp file, then renames over the target.
inline void write_file_atomic(const std::string& path, std::string_view contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ResourceError("cannot write '" + tmp.string() + "'");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw ResourceError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw ResourceError("cannot rename onto '" + path + "'");
    }
}

} // namespace direval

#endif // DIREVAL_IO_HPP
