#ifndef DIREVAL_PORTER_HPP
#define DIREVAL_PORTER_HPP

#include <string>
#include <string_view>
#include <utility>

namespace direval {

// Porter (1980) suffix-stripping stemmer, as published: no length guard for
// one- and two-letter words and no later revisions (bli/logi). Input must be
// lowercase; tokens containing non-letters come back unchanged.
class PorterStemmer {
public:
    std::string operator()(std::string_view word) const {
        for (char c : word)
            if (c < 'a' || c > 'z') return std::string(word);
        std::string w(word);
        if (w.empty()) return w;
        step1a(w);
        step1b(w);
        step1c(w);
        step2(w);
        step3(w);
        step4(w);
        step5(w);
        return w;
    }

private:
    struct Rule {
        std::string_view suffix;
        std::string_view replacement;
    };

    static bool cons(const std::string& w, std::size_t i) {
        switch (w[i]) {
        case 'a': case 'e': case 'i': case 'o': case 'u':
            return false;
        case 'y':
            return i == 0 ? true : !cons(w, i - 1);
        default:
            return true;
        }
    }

    // Number of VC sequences in w[0, len).
    static int measure(const std::string& w, std::size_t len) {
        int m = 0;
        std::size_t i = 0;
        while (i < len && cons(w, i)) ++i;
        while (i < len) {
            while (i < len && !cons(w, i)) ++i;
            if (i >= len) break;
            while (i < len && cons(w, i)) ++i;
            ++m;
        }
        return m;
    }

    static bool has_vowel(const std::string& w, std::size_t len) {
        for (std::size_t i = 0; i < len; ++i)
            if (!cons(w, i)) return true;
        return false;
    }

    static bool double_cons(const std::string& w, std::size_t len) {
        return len >= 2 && w[len - 1] == w[len - 2] && cons(w, len - 1);
    }

    // *o: stem ends consonant-vowel-consonant, last consonant not w, x or y.
    static bool cvc(const std::string& w, std::size_t len) {
        if (len < 3) return false;
        const std::size_t i = len - 1;
        if (!cons(w, i) || cons(w, i - 1) || !cons(w, i - 2)) return false;
        return w[i] != 'w' && w[i] != 'x' && w[i] != 'y';
    }

    static bool ends_with(const std::string& w, std::string_view s) {
        return w.size() >= s.size() && std::string_view(w).substr(w.size() - s.size()) == s;
    }

    static void replace_suffix(std::string& w, std::size_t suffix_len, std::string_view repl) {
        w.resize(w.size() - suffix_len);
        w += repl;
    }

    // Longest matching suffix wins; if its condition fails nothing else is tried.
    template <std::size_t N, class Cond>
    static bool apply_rules(std::string& w, const Rule (&rules)[N], Cond&& cond) {
        const Rule* best = nullptr;
        for (const auto& r : rules)
            if (ends_with(w, r.suffix) && (!best || r.suffix.size() > best->suffix.size())) best = &r;
        if (!best) return false;
        const std::size_t stem_len = w.size() - best->suffix.size();
        if (!cond(w, stem_len, best->suffix)) return false;
        replace_suffix(w, best->suffix.size(), best->replacement);
        return true;
    }

    static void step1a(std::string& w) {
        if (ends_with(w, "sses")) replace_suffix(w, 4, "ss");
        else if (ends_with(w, "ies")) replace_suffix(w, 3, "i");
        else if (ends_with(w, "ss")) return;
        else if (ends_with(w, "s")) replace_suffix(w, 1, "");
    }

    static void step1b(std::string& w) {
        if (ends_with(w, "eed")) {
            if (measure(w, w.size() - 3) > 0) replace_suffix(w, 3, "ee");
            return;
        }
        bool stripped = false;
        if (ends_with(w, "ed") && has_vowel(w, w.size() - 2)) {
            replace_suffix(w, 2, "");
            stripped = true;
        } else if (ends_with(w, "ing") && has_vowel(w, w.size() - 3)) {
            replace_suffix(w, 3, "");
            stripped = true;
        }
        if (!stripped) return;
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
            w += 'e';
        } else if (double_cons(w, w.size())) {
            const char last = w.back();
            if (last != 'l' && last != 's' && last != 'z') w.pop_back();
        } else if (measure(w, w.size()) == 1 && cvc(w, w.size())) {
            w += 'e';
        }
    }

    static void step1c(std::string& w) {
        if (ends_with(w, "y") && has_vowel(w, w.size() - 1)) w.back() = 'i';
    }

    static void step2(std::string& w) {
        static constexpr Rule rules[] = {
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},  {"anci", "ance"},
            {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},    {"entli", "ent"},
            {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
            {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},  {"biliti", "ble"},
        };
        apply_rules(w, rules, [](const std::string& s, std::size_t len, std::string_view) {
            return measure(s, len) > 0;
        });
    }

    static void step3(std::string& w) {
        static constexpr Rule rules[] = {
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
            {"ical", "ic"},  {"ful", ""},   {"ness", ""},
        };
        apply_rules(w, rules, [](const std::string& s, std::size_t len, std::string_view) {
            return measure(s, len) > 0;
        });
    }

    static void step4(std::string& w) {
        static constexpr Rule rules[] = {
            {"al", ""},  {"ance", ""}, {"ence", ""}, {"er", ""},  {"ic", ""},   {"able", ""}, {"ible", ""},
            {"ant", ""}, {"ement", ""}, {"ment", ""}, {"ent", ""}, {"ion", ""}, {"ou", ""},   {"ism", ""},
            {"ate", ""}, {"iti", ""},  {"ous", ""},  {"ive", ""}, {"ize", ""},
        };
        apply_rules(w, rules, [](const std::string& s, std::size_t len, std::string_view suffix) {
            if (measure(s, len) <= 1) return false;
            if (suffix == "ion") return len > 0 && (s[len - 1] == 's' || s[len - 1] == 't');
            return true;
        });
    }

    static void step5(std::string& w) {
        if (ends_with(w, "e")) {
            const std::size_t len = w.size() - 1;
            const int m = measure(w, len);
            if (m > 1 || (m == 1 && !cvc(w, len))) w.pop_back();
        }
        if (w.size() >= 2 && w.back() == 'l' && double_cons(w, w.size()) && measure(w, w.size()) > 1)
            w.pop_back();
    }
};

inline std::string stem(std::string_view word) { return PorterStemmer{}(word); }

} // namespace direval

#endif // DIREVAL_PORTER_HPP
