#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "antiphish/rng.hpp"
#include "antiphish/tfidf.hpp"

using namespace antiphish;

// Independent brute-force evaluation of TF, IDF and their product, written
// against the definitions alone. Kept deliberately naive.
namespace oracle {

std::vector<std::string> ngrams(const std::string& doc, int min_n, int max_n) {
    std::vector<std::string> out;
    for (int n = min_n; n <= max_n; ++n)
        for (size_t i = 0; i + n <= doc.size(); ++i) out.push_back(doc.substr(i, n));
    return out;
}

double tf(const std::string& term, const std::string& doc, int min_n, int max_n) {
    auto grams = ngrams(doc, min_n, max_n);
    if (grams.empty()) return 0.0;
    size_t count = 0;
    for (const auto& g : grams) count += g == term;
    return static_cast<double>(count) / static_cast<double>(grams.size());
}

double idf(const std::string& term, const std::vector<std::string>& corpus, int min_n,
           int max_n) {
    size_t df = 0;
    for (const auto& doc : corpus) {
        bool found = false;
        for (const auto& g : ngrams(doc, min_n, max_n)) found |= g == term;
        df += found;
    }
    return std::log(static_cast<double>(corpus.size()) / static_cast<double>(df));
}

double tfidf(const std::string& term, const std::string& doc,
             const std::vector<std::string>& corpus, int min_n, int max_n) {
    return tf(term, doc, min_n, max_n) * idf(term, corpus, min_n, max_n);
}

}  // namespace oracle

TEST_CASE("idf values on the two-document example corpus") {
    TfidfVocabulary v = fit_vocabulary({"abab", "abcd"}, 1, 1, 5000);
    REQUIRE(v.terms == std::vector<std::string>{"a", "b", "c", "d"});
    CHECK(v.idf[v.term_index.at("a")] == 0.0);
    CHECK(v.idf[v.term_index.at("c")] == Catch::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK_THROWS_AS(fit_vocabulary({}, 1, 1, 100), EmptyCorpus);
}

TEST_CASE("universal terms get idf 0 and stay in the vocabulary") {
    TfidfVocabulary v = fit_vocabulary({"xa", "xb", "xc"}, 1, 1, 5000);
    CHECK(v.idf[v.term_index.at("x")] == 0.0);
    ClfVector row = transform("xa", v);
    // the idf-0 term contributes weight 0 but the column exists
    for (const auto& [col, w] : row)
        if (v.terms[col] == "x") CHECK(w == 0.0);
}

TEST_CASE("feature cap keeps top terms by corpus frequency") {
    TfidfVocabulary v = fit_vocabulary({"abab", "abcd"}, 1, 1, 2);
    REQUIRE(v.terms.size() == 2);
    CHECK(v.terms[0] == "a");
    CHECK(v.terms[1] == "b");
}

TEST_CASE("cap ties break lexicographically") {
    // every unigram occurs exactly once; survivors must be the smallest two
    TfidfVocabulary v = fit_vocabulary({"dcba"}, 1, 1, 2);
    REQUIRE(v.terms == std::vector<std::string>{"a", "b"});
}

TEST_CASE("transform matches the worked example") {
    TfidfVocabulary v = fit_vocabulary({"abab", "abcd"}, 1, 1, 5000);
    ClfVector row = transform("abcd", v);
    double wc = 0.0;
    for (const auto& [col, w] : row)
        if (v.terms[col] == "c") wc = w;
    CHECK(wc == Catch::Approx(0.25 * std::log(2.0)).epsilon(1e-15));

    ClfVector abab = transform("abab", v);
    for (const auto& [col, w] : abab)
        if (v.terms[col] == "a") CHECK(w == 0.0);

    CHECK(transform("zz", v).empty());
    CHECK(transform("", v).empty());
}

TEST_CASE("transform matches the brute-force oracle on random corpora") {
    Rng rng(2024);
    const std::string alphabet = "abcdex./-";
    for (int trial = 0; trial < 50; ++trial) {
        int min_n = 1 + static_cast<int>(rng.below(2));
        int max_n = min_n + static_cast<int>(rng.below(3));
        std::vector<std::string> corpus;
        size_t docs = 1 + rng.below(10);
        for (size_t d = 0; d < docs; ++d) {
            std::string doc;
            size_t len = rng.below(14);
            for (size_t i = 0; i < len; ++i) doc += alphabet[rng.below(alphabet.size())];
            corpus.push_back(doc);
        }
        TfidfVocabulary v = fit_vocabulary(corpus, min_n, max_n, 5000);
        for (const auto& doc : corpus) {
            ClfVector row = transform(doc, v);
            std::map<std::string, double> got;
            for (const auto& [col, w] : row) got[v.terms[col]] = w;
            for (const auto& term : v.terms) {
                double expect = oracle::tfidf(term, doc, corpus, min_n, max_n);
                double have = got.count(term) ? got[term] : 0.0;
                CHECK(std::abs(have - expect) <= 1e-12);
            }
        }
    }
}

TEST_CASE("weights are non-negative; removing the cap preserves survivors") {
    Rng rng(5);
    const std::string alphabet = "abcdefg";
    std::vector<std::string> corpus;
    for (int d = 0; d < 8; ++d) {
        std::string doc;
        for (int i = 0; i < 10; ++i) doc += alphabet[rng.below(alphabet.size())];
        corpus.push_back(doc);
    }
    TfidfVocabulary capped = fit_vocabulary(corpus, 1, 2, 5);
    TfidfVocabulary full = fit_vocabulary(corpus, 1, 2, 100000);
    CHECK(capped.terms.size() <= 5);
    for (const auto& doc : corpus) {
        std::map<std::string, double> full_w;
        for (const auto& [col, w] : transform(doc, full)) {
            CHECK(w >= 0.0);
            full_w[full.terms[col]] = w;
        }
        for (const auto& [col, w] : transform(doc, capped))
            CHECK(w == full_w[capped.terms[col]]);
    }
}

TEST_CASE("to_sequence pads, truncates, maps unknowns") {
    CharMap m;
    m.index['a'] = 2;
    m.index['b'] = 3;
    m.index['c'] = 4;
    m.alphabet_size = 5;
    CHECK(to_sequence("abca", m, 6) == std::vector<int>{2, 3, 4, 2, 0, 0});
    CHECK(to_sequence("", m, 6) == std::vector<int>{0, 0, 0, 0, 0, 0});
    CHECK(to_sequence("ax", m, 6) == std::vector<int>{2, 1, 0, 0, 0, 0});
    CHECK(to_sequence("abcabc", m, 3) == std::vector<int>{2, 3, 4});
}

TEST_CASE("default charmap covers printable ASCII") {
    CharMap m = default_charmap();
    CHECK(m.alphabet_size == 97);
    CHECK(m.lookup(' ') == 2);
    CHECK(m.lookup('~') == 96);
    CHECK(m.lookup('\n') == 1);  // unknown
}

TEST_CASE("vocabulary round-trips through its file format") {
    TfidfVocabulary v = fit_vocabulary({"abab", "abcd", "a/b"}, 1, 3, 10);
    std::ostringstream out;
    save_vocabulary(v, out);
    std::istringstream in(out.str());
    TfidfVocabulary back = load_vocabulary(in);
    CHECK(back.terms == v.terms);
    CHECK(back.idf == v.idf);
    CHECK(back.min_n == v.min_n);
    CHECK(back.max_n == v.max_n);
    CHECK(back.corpus_size == v.corpus_size);
}
