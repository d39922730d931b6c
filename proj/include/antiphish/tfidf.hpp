#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"

namespace antiphish {

// Character-level TF-IDF over URL strings.
//   TF(t,d)   = count of t in d / total in-range n-grams of d
//   IDF(t,D)  = ln(D / df(t)), unsmoothed
//   weight    = TF * IDF
// The vocabulary is capped: top max_features by total corpus frequency,
// ties broken lexicographically. Columns are dense, assigned in
// lexicographic term order.
struct TfidfVocabulary {
    int min_n = 1;
    int max_n = 3;
    size_t max_features = 5000;
    size_t corpus_size = 0;  // D
    std::vector<std::string> terms;  // by column id
    std::vector<double> idf;         // by column id
    std::unordered_map<std::string, size_t> term_index;

    size_t n_columns() const { return terms.size(); }
};

// sparse row: (column, weight) sorted by column
using ClfVector = std::vector<std::pair<size_t, double>>;

namespace detail {

template <typename Fn>
inline void for_each_ngram(std::string_view doc, int min_n, int max_n, Fn&& fn) {
    const size_t len = doc.size();
    for (int n = min_n; n <= max_n; ++n) {
        if (len < static_cast<size_t>(n)) break;
        for (size_t i = 0; i + n <= len; ++i) fn(doc.substr(i, n));
    }
}

}  // namespace detail

inline TfidfVocabulary fit_vocabulary(const std::vector<std::string>& corpus,
                                      int min_n = 1, int max_n = 3,
                                      size_t max_features = 5000) {
    if (corpus.empty()) throw EmptyCorpus("fit_vocabulary: empty corpus");
    if (min_n < 1 || max_n < min_n || max_n > 6)
        throw ConfigError("fit_vocabulary: need 1 <= min_n <= max_n <= 6");
    if (max_features == 0) throw ConfigError("fit_vocabulary: max_features must be positive");

    // ordered map keeps the tie-break and column assignment lexicographic
    std::map<std::string, std::pair<uint64_t, uint64_t>> stats;  // term -> (tf total, df)
    std::unordered_map<std::string_view, uint64_t> doc_counts;
    for (const auto& doc : corpus) {
        doc_counts.clear();
        detail::for_each_ngram(doc, min_n, max_n,
                               [&](std::string_view g) { doc_counts[g]++; });
        for (const auto& [gram, count] : doc_counts) {
            auto& s = stats[std::string(gram)];
            s.first += count;
            s.second += 1;
        }
    }

    std::vector<const std::pair<const std::string, std::pair<uint64_t, uint64_t>>*> order;
    order.reserve(stats.size());
    for (const auto& kv : stats) order.push_back(&kv);
    if (order.size() > max_features) {
        std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
            return a->second.first > b->second.first;  // stable: lexicographic among equals
        });
        order.resize(max_features);
        std::sort(order.begin(), order.end(),
                  [](const auto* a, const auto* b) { return a->first < b->first; });
    }

    TfidfVocabulary vocab;
    vocab.min_n = min_n;
    vocab.max_n = max_n;
    vocab.max_features = max_features;
    vocab.corpus_size = corpus.size();
    const double D = static_cast<double>(corpus.size());
    for (const auto* kv : order) {
        vocab.term_index.emplace(kv->first, vocab.terms.size());
        vocab.terms.push_back(kv->first);
        vocab.idf.push_back(std::log(D / static_cast<double>(kv->second.second)));
    }
    return vocab;
}

inline ClfVector transform(std::string_view url, const TfidfVocabulary& vocab) {
    size_t total = 0;
    std::map<size_t, uint64_t> counts;  // column -> raw count, ordered by column
    detail::for_each_ngram(url, vocab.min_n, vocab.max_n, [&](std::string_view g) {
        ++total;  // denominator spans every in-range n-gram, in or out of vocabulary
        auto it = vocab.term_index.find(std::string(g));
        if (it != vocab.term_index.end()) counts[it->second]++;
    });
    ClfVector out;
    out.reserve(counts.size());
    for (const auto& [col, count] : counts) {
        double tf = static_cast<double>(count) / static_cast<double>(total);
        out.emplace_back(col, tf * vocab.idf[col]);
    }
    return out;
}

// ---- character sequences for the LSTM --------------------------------------

// index 0 is padding, 1 is unknown; real characters start at 2
struct CharMap {
    std::unordered_map<char, int> index;
    int alphabet_size = 2;  // includes pad + unknown

    int lookup(char c) const {
        auto it = index.find(c);
        return it == index.end() ? 1 : it->second;
    }
};

// the 95 printable ASCII characters
inline CharMap default_charmap() {
    CharMap m;
    int next = 2;
    for (char c = 0x20; c <= 0x7e; ++c) m.index[c] = next++;
    m.alphabet_size = next;
    return m;
}

inline std::vector<int> to_sequence(std::string_view url, const CharMap& charmap,
                                    size_t max_len) {
    std::vector<int> seq(max_len, 0);
    const size_t n = std::min(url.size(), max_len);
    for (size_t i = 0; i < n; ++i) seq[i] = charmap.lookup(url[i]);
    return seq;
}

// ---- persistence: `term<TAB>column<TAB>idf` with a descriptive header ------

inline void save_vocabulary(const TfidfVocabulary& v, std::ostream& out) {
    out << "tfidf_vocab\tv1\t" << v.min_n << '\t' << v.max_n << '\t'
        << v.max_features << '\t' << v.corpus_size << '\n';
    for (size_t c = 0; c < v.terms.size(); ++c)
        out << v.terms[c] << '\t' << c << '\t' << fmt_double(v.idf[c]) << '\n';
}

inline TfidfVocabulary load_vocabulary(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty vocabulary file");
    TfidfVocabulary v;
    {
        char tag[32];
        char ver[8];
        unsigned long maxf = 0, d = 0;
        if (std::sscanf(header.c_str(), "%31[^\t]\t%7[^\t]\t%d\t%d\t%lu\t%lu", tag, ver,
                        &v.min_n, &v.max_n, &maxf, &d) != 6 ||
            std::string(tag) != "tfidf_vocab" || std::string(ver) != "v1")
            throw SchemaMismatch("bad vocabulary header");
        v.max_features = maxf;
        v.corpus_size = d;
    }
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t p1 = line.find('\t'), p2 = line.find('\t', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw ParseError(strfmt("vocabulary line %zu malformed", line_no));
        std::string term = line.substr(0, p1);
        size_t col = std::stoull(line.substr(p1 + 1, p2 - p1 - 1));
        double idf = std::stod(line.substr(p2 + 1));
        if (col != v.terms.size()) throw ParseError("vocabulary columns out of order");
        v.term_index.emplace(term, col);
        v.terms.push_back(std::move(term));
        v.idf.push_back(idf);
    }
    return v;
}

}  // namespace antiphish
