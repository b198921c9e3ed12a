#ifndef DIREVAL_TEXTCORE_HPP
#define DIREVAL_TEXTCORE_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "direval/error.hpp"

namespace direval {

// Lowercase, whitespace-free tokens. Produced by tokenize().
using TokenSeq = std::vector<std::string>;
using Vector = std::vector<double>;

inline bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
inline bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline bool is_all_punct(std::string_view tok) {
    return !tok.empty() && std::all_of(tok.begin(), tok.end(), is_punct);
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Lowercases, splits on whitespace, then peels leading and trailing
// punctuation characters off each chunk one character at a time. Punctuation
// inside a chunk ("don't", "e-mail") stays put.
inline TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) {
            std::string_view chunk = text.substr(i, j - i);
            std::size_t b = 0, e = chunk.size();
            while (b < e && is_punct(chunk[b])) ++b;
            while (e > b && is_punct(chunk[e - 1])) --e;
            for (std::size_t k = 0; k < b; ++k) out.emplace_back(1, chunk[k]);
            if (e > b) out.push_back(to_lower(chunk.substr(b, e - b)));
            for (std::size_t k = e; k < chunk.size(); ++k) out.emplace_back(1, chunk[k]);
        }
        i = j;
    }
    return out;
}

inline std::string join(const TokenSeq& seq, std::string_view sep = " ") {
    std::string out;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i) out += sep;
        out += seq[i];
    }
    return out;
}

// Whitespace word count, used for corpus statistics and length filters.
inline std::size_t word_count(std::string_view text) {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : text) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

struct NGramCounts {
    std::size_t n = 1;
    std::map<TokenSeq, std::size_t> counts;

    std::size_t total() const {
        std::size_t t = 0;
        for (const auto& [g, c] : counts) t += c;
        return t;
    }
    std::size_t count(const TokenSeq& gram) const {
        auto it = counts.find(gram);
        return it == counts.end() ? 0 : it->second;
    }
};

inline NGramCounts ngrams(const TokenSeq& seq, std::size_t n) {
    if (n == 0) throw ValidationError("ngram order must be at least 1");
    NGramCounts out;
    out.n = n;
    if (seq.size() < n) return out;
    for (std::size_t i = 0; i + n <= seq.size(); ++i)
        ++out.counts[TokenSeq(seq.begin() + static_cast<std::ptrdiff_t>(i),
                              seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return out;
}

template <class Seq>
std::size_t lcs_length(const Seq& a, const Seq& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

inline double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

inline double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

inline double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw DomainError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
    const double nu = norm(u), nv = norm(v);
    if (nu == 0.0 || nv == 0.0) throw DomainError("cosine: zero-norm vector");
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

inline Vector mean_vector(std::span<const Vector> vs) {
    if (vs.empty()) throw DomainError("mean of an empty vector set");
    Vector m(vs.front().size(), 0.0);
    for (const auto& v : vs) {
        if (v.size() != m.size()) throw DomainError("vector set has inconsistent dimensions");
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += v[i];
    }
    for (double& x : m) x /= static_cast<double>(vs.size());
    return m;
}

namespace detail {

inline double parse_double(std::string_view field, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError("non-numeric field '" + std::string(field) + "'", line);
    return v;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_space(line[i])) ++i;
        std::size_t j = i;
        while (j < line.size() && !is_space(line[j])) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = s.find(sep, start);
        std::string_view part = s.substr(start, pos == std::string_view::npos ? s.npos : pos - start);
        while (!part.empty() && is_space(part.front())) part.remove_prefix(1);
        while (!part.empty() && is_space(part.back())) part.remove_suffix(1);
        if (!part.empty()) out.emplace_back(part);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ResourceError("cannot open '" + path + "'");
    return in;
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

} // namespace detail

// Static word vectors. Lookups of unknown tokens return nullptr; metric code
// skips them.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return vectors_.size(); }

    void insert(std::string token, Vector v) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_ || dim_ == 0)
            throw ValidationError("embedding for '" + token + "' has dimension " + std::to_string(v.size()) +
                                  ", expected " + std::to_string(dim_));
        vectors_.insert_or_assign(std::move(token), std::move(v));
    }

    const Vector* find(const std::string& token) const {
        auto it = vectors_.find(token);
        return it == vectors_.end() ? nullptr : &it->second;
    }

    // In-vocabulary vectors of a sentence, in token order.
    std::vector<Vector> lookup(const TokenSeq& seq) const {
        std::vector<Vector> out;
        for (const auto& t : seq)
            if (const Vector* v = find(t)) out.push_back(*v);
        return out;
    }

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, Vector> vectors_;
};

// "token v1 ... vd" per line, no header. Later duplicates overwrite earlier ones.
inline EmbeddingTable load_embeddings(std::istream& in) {
    EmbeddingTable table;
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        auto fields = detail::split_ws(line);
        if (fields.empty()) continue;
        if (fields.size() < 2) throw ParseError("expected a token followed by at least one value", lineno);
        const std::size_t d = fields.size() - 1;
        if (dim == 0) dim = d;
        if (d != dim)
            throw ParseError("dimension mismatch: got " + std::to_string(d) + " values, expected " +
                                 std::to_string(dim),
                             lineno);
        Vector v(d);
        for (std::size_t i = 0; i < d; ++i) v[i] = detail::parse_double(fields[i + 1], lineno);
        table.insert(std::string(fields[0]), std::move(v));
    }
    if (table.size() == 0) throw ParseError("no vectors");
    return table;
}

inline EmbeddingTable load_embeddings(const std::string& path) {
    auto in = detail::open_or_throw(path);
    return load_embeddings(in);
}

class StopwordList {
public:
    StopwordList() = default;
    StopwordList(std::initializer_list<std::string> words) {
        for (const auto& w : words) words_.insert(to_lower(w));
    }
    void insert(std::string_view w) { words_.insert(to_lower(w)); }
    bool contains(const std::string& w) const { return words_.count(w) != 0; }
    std::size_t size() const noexcept { return words_.size(); }

private:
    std::unordered_set<std::string> words_;
};

class SynonymLexicon {
public:
    SynonymLexicon() = default;
    SynonymLexicon(std::initializer_list<std::pair<const std::string, std::vector<std::string>>> entries) {
        for (const auto& [w, syns] : entries) insert(w, syns);
    }

    void insert(std::string_view word, std::vector<std::string> synonyms) {
        if (synonyms.empty()) throw ValidationError("empty synonym list for '" + std::string(word) + "'");
        for (auto& s : synonyms) s = to_lower(s);
        entries_[to_lower(word)] = std::move(synonyms);
    }

    const std::vector<std::string>* find(const std::string& w) const {
        auto it = entries_.find(w);
        return it == entries_.end() ? nullptr : &it->second;
    }

    bool are_synonyms(const std::string& a, const std::string& b) const {
        auto has = [](const std::vector<std::string>* list, const std::string& x) {
            return list && std::find(list->begin(), list->end(), x) != list->end();
        };
        return has(find(a), b) || has(find(b), a);
    }

    std::size_t size() const noexcept { return entries_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> entries_;
};

class PosLexicon {
public:
    PosLexicon() = default;
    PosLexicon(std::initializer_list<std::pair<const std::string, std::set<std::string>>> entries) {
        for (const auto& [w, tags] : entries) tags_[to_lower(w)] = tags;
    }

    void insert(std::string_view word, std::set<std::string> tags) { tags_[to_lower(word)] = std::move(tags); }

    bool has_tag(const std::string& w, const std::string& tag) const {
        auto it = tags_.find(w);
        return it != tags_.end() && it->second.count(tag) != 0;
    }
    bool is_noun(const std::string& w) const { return has_tag(w, "NOUN"); }

    std::size_t size() const noexcept { return tags_.size(); }

private:
    std::unordered_map<std::string, std::set<std::string>> tags_;
};

// One word per line; blank lines and lines starting with '#' are ignored.
inline StopwordList load_stopwords(const std::string& path) {
    auto in = detail::open_or_throw(path);
    StopwordList out;
    std::string line;
    while (std::getline(in, line)) {
        detail::strip_cr(line);
        auto fields = detail::split_ws(line);
        if (fields.empty() || fields[0].front() == '#') continue;
        out.insert(fields[0]);
    }
    return out;
}

namespace detail {

template <class Fn>
void read_tab_lexicon(const std::string& path, Fn&& on_entry) {
    auto in = open_or_throw(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        strip_cr(line);
        if (split_ws(line).empty() || line.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("expected 'word<TAB>item,item,...'", lineno);
        auto word = split_ws(std::string_view(line).substr(0, tab));
        auto items = split_on(std::string_view(line).substr(tab + 1), ',');
        if (word.size() != 1) throw ParseError("expected a single word before the tab", lineno);
        if (items.empty()) throw ParseError("empty list for '" + std::string(word[0]) + "'", lineno);
        on_entry(std::string(word[0]), std::move(items));
    }
}

} // namespace detail

// "word<TAB>syn1,syn2,..."
inline SynonymLexicon load_synonyms(const std::string& path) {
    SynonymLexicon out;
    detail::read_tab_lexicon(path, [&](std::string w, std::vector<std::string> syns) {
        out.insert(w, std::move(syns));
    });
    return out;
}

// "word<TAB>TAG1,TAG2,..."
inline PosLexicon load_pos_lexicon(const std::string& path) {
    PosLexicon out;
    detail::read_tab_lexicon(path, [&](std::string w, std::vector<std::string> tags) {
        out.insert(w, std::set<std::string>(tags.begin(), tags.end()));
    });
    return out;
}

} // namespace direval

#endif // DIREVAL_TEXTCORE_HPP
