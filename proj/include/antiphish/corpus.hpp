#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

// One labeled, normalized URL sample. label: 0 = benign, 1 = phishing.
struct UrlRecord {
    std::string raw;
    std::string normalized;
    int label = 0;
    std::string source_id;
};

struct Dataset {
    std::vector<UrlRecord> records;
    size_t benign_count = 0;
    size_t phishing_count = 0;

    size_t size() const { return records.size(); }
    bool both_classes_present() const { return benign_count > 0 && phishing_count > 0; }

    void recount() {
        benign_count = phishing_count = 0;
        for (const auto& r : records) (r.label == 1 ? phishing_count : benign_count)++;
    }
};

struct SplitSpec {
    double train_fraction = 0.70;
    uint64_t seed = 42;
    bool stratified = true;
};

// Strips leading "http://", "https://" and "www." (repeatedly, in that
// order), lowercases the host portion and keeps path case untouched.
inline std::string normalize_url(std::string_view raw) {
    std::string_view s = trim(raw);
    for (;;) {
        if (starts_with_icase(s, "http://")) s.remove_prefix(7);
        else if (starts_with_icase(s, "https://")) s.remove_prefix(8);
        else if (starts_with_icase(s, "www.")) s.remove_prefix(4);
        else break;
    }
    if (s.empty())
        throw EmptyAfterNormalization(strfmt("nothing left after stripping prefixes of '%.*s'",
                                             static_cast<int>(raw.size()), raw.data()));
    size_t slash = s.find('/');
    std::string host = to_lower_ascii(s.substr(0, slash));
    if (slash == std::string_view::npos) return host;
    return host + std::string(s.substr(slash));
}

struct IngestSchema {
    std::string benign_alias = "benign";
    std::string phishing_alias = "phishing";
};

inline int parse_label(std::string_view field, const IngestSchema& schema, size_t line_no) {
    if (field == "0" || field == schema.benign_alias) return 0;
    if (field == "1" || field == schema.phishing_alias) return 1;
    throw LabelDomainError(strfmt("line %zu: label '%.*s' outside {0,1,%s,%s}", line_no,
                                  static_cast<int>(field.size()), field.data(),
                                  schema.benign_alias.c_str(), schema.phishing_alias.c_str()));
}

// Ingest format: one `label,url` per line, '#' lines ignored. Duplicates by
// normalized form are dropped, first occurrence wins.
inline Dataset load_dataset(std::istream& in, const IngestSchema& schema = {},
                            const std::string& source_id = "") {
    Dataset ds;
    std::unordered_set<std::string> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv = trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        size_t comma = sv.find(',');
        if (comma == std::string_view::npos)
            throw ParseError(strfmt("line %zu: expected 'label,url'", line_no));
        int label = parse_label(trim(sv.substr(0, comma)), schema, line_no);
        std::string_view url = trim(sv.substr(comma + 1));
        if (url.empty()) throw ParseError(strfmt("line %zu: empty url", line_no));
        UrlRecord rec;
        rec.raw = std::string(url);
        rec.normalized = normalize_url(url);
        rec.label = label;
        rec.source_id = source_id;
        if (seen.insert(rec.normalized).second) ds.records.push_back(std::move(rec));
    }
    ds.recount();
    return ds;
}

inline Dataset load_dataset(const std::string& path, const IngestSchema& schema = {}) {
    std::ifstream f(path);
    if (!f) throw DataError(strfmt("cannot open dataset file '%s'", path.c_str()));
    return load_dataset(f, schema, path);
}

// Canonical dataset file: normalized URLs, same `label,url` format.
inline void save_dataset(const Dataset& ds, std::ostream& out) {
    for (const auto& r : ds.records) out << r.label << ',' << r.normalized << '\n';
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError(strfmt("cannot write dataset file '%s'", path.c_str()));
    save_dataset(ds, f);
}

namespace detail {

inline long long round_half_away(double x) {
    return static_cast<long long>(x >= 0 ? std::floor(x + 0.5) : std::ceil(x - 0.5));
}

}  // namespace detail

// Deterministic 70/30-style partition. Stratified mode keeps the class ratio
// within one record per class while the train side stays round(fraction * n).
inline std::pair<Dataset, Dataset> split(const Dataset& ds, const SplitSpec& spec) {
    const size_t n = ds.size();
    if (n == 0) throw DataError("split: empty dataset");
    if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0)
        throw ConfigError("split: train_fraction must be in (0,1)");
    const size_t train_n = static_cast<size_t>(detail::round_half_away(spec.train_fraction * n));
    if (train_n == 0 || train_n == n)
        throw DegenerateSplit(strfmt("split of %zu records at fraction %g leaves a side empty",
                                     n, spec.train_fraction));

    std::vector<size_t> order;
    std::vector<bool> to_train(n, false);
    if (spec.stratified) {
        if (!ds.both_classes_present())
            throw SingleClassError("stratified split needs both classes present");
        std::vector<size_t> idx[2];
        for (size_t i = 0; i < n; ++i) idx[ds.records[i].label == 1 ? 1 : 0].push_back(i);
        // floor per class, then hand out the remainder by largest fractional part
        size_t take[2];
        double frac[2];
        size_t floor_sum = 0;
        for (int c = 0; c < 2; ++c) {
            double t = spec.train_fraction * static_cast<double>(idx[c].size());
            take[c] = static_cast<size_t>(std::floor(t));
            frac[c] = t - std::floor(t);
            floor_sum += take[c];
        }
        size_t remainder = train_n - floor_sum;
        if (remainder > 0) {
            int first = (frac[1] > frac[0]) ? 1 : 0;
            take[first] += 1;
            if (remainder > 1) take[1 - first] += 1;
        }
        Rng rng(spec.seed);
        for (int c = 0; c < 2; ++c) {
            rng.shuffle(idx[c]);
            take[c] = std::min(take[c], idx[c].size());
            for (size_t i = 0; i < take[c]; ++i) to_train[idx[c][i]] = true;
        }
    } else {
        order.resize(n);
        for (size_t i = 0; i < n; ++i) order[i] = i;
        Rng rng(spec.seed);
        rng.shuffle(order);
        for (size_t i = 0; i < train_n; ++i) to_train[order[i]] = true;
    }

    Dataset train, test;
    for (size_t i = 0; i < n; ++i)
        (to_train[i] ? train : test).records.push_back(ds.records[i]);
    train.recount();
    test.recount();
    if (train.size() == 0 || test.size() == 0)
        throw DegenerateSplit("split produced an empty side");
    return {std::move(train), std::move(test)};
}

}  // namespace antiphish
