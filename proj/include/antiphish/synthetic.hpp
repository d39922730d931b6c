#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/corpus.hpp"
#include "antiphish/rng.hpp"

namespace antiphish {

// Labeled URL corpora with a known class function, used by the test fixtures
// and the `ingest --synthetic` path.
//
// difficulty 0: phishing iff has_ip or has_at or normalized length > 60 —
// perfectly separable from lexical flags alone.
// difficulty d in (0,1]: a d-fraction of phishing URLs hides the overt trait
// and carries only character-level cues (brand+action tokens, dashed domains,
// odd TLDs), while some benign URLs pick up confounders (long paths, dashes).
struct SyntheticSpec {
    size_t n = 2000;
    uint64_t seed = 42;
    double difficulty = 0.0;
};

namespace detail {

inline const std::vector<std::string>& benign_words() {
    static const std::vector<std::string> v = {
        "news", "garden", "kitchen", "music", "travel", "recipes", "books", "weather",
        "sports", "science", "history", "photo", "forum", "wiki", "library", "school",
        "market", "health", "nature", "movies", "radio", "museum", "gallery", "craft"};
    return v;
}

inline const std::vector<std::string>& benign_domains() {
    static const std::vector<std::string> v = {
        "example", "openmaps", "dailynews", "cityguide", "homechef", "bluebird",
        "greenleaf", "riverside", "sunnyday", "bookworm", "stargazer", "quietwood",
        "redstone", "seabreeze", "hilltop", "meadowlark"};
    return v;
}

inline const std::vector<std::string>& brand_words() {
    static const std::vector<std::string> v = {
        "paypal", "amazon", "apple", "microsoft", "netflix", "chase", "wellsfargo",
        "dropbox", "facebook", "instagram", "ebay", "coinbase"};
    return v;
}

inline const std::vector<std::string>& phish_actions() {
    static const std::vector<std::string> v = {
        "login", "verify", "secure", "account", "update", "confirm", "signin",
        "banking", "webscr", "password", "unlock", "billing"};
    return v;
}

inline const std::vector<std::string>& benign_tlds() {
    static const std::vector<std::string> v = {"com", "org", "net", "edu", "io"};
    return v;
}

inline const std::vector<std::string>& phish_tlds() {
    static const std::vector<std::string> v = {"xyz", "top", "icu", "tk", "info", "biz"};
    return v;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.below(v.size())];
}

inline std::string digits(Rng& rng, size_t count) {
    std::string s;
    for (size_t i = 0; i < count; ++i) s += static_cast<char>('0' + rng.below(10));
    return s;
}

inline std::string benign_url(Rng& rng) {
    // short, clean, no ip/@, normalized length <= 60
    std::string u = pick(rng, benign_domains()) + digits(rng, 3) + "." +
                    pick(rng, benign_tlds());
    size_t segments = rng.below(3);
    for (size_t i = 0; i < segments && u.size() < 44; ++i)
        u += "/" + pick(rng, benign_words());
    if (rng.bernoulli(0.25) && u.size() < 50) u += "/p" + digits(rng, 3) + ".html";
    return u;
}

inline std::string overt_phish_url(Rng& rng) {
    switch (rng.below(3)) {
        case 0: {  // raw IPv4 host
            std::string u = strfmt("%d.%d.%d.%d", 1 + (int)rng.below(223),
                                   (int)rng.below(256), (int)rng.below(256),
                                   1 + (int)rng.below(254));
            u += "/" + pick(rng, phish_actions()) + digits(rng, 2);
            return u;
        }
        case 1: {  // @ redirection
            return pick(rng, benign_domains()) + "." + pick(rng, benign_tlds()) + "/" +
                   pick(rng, benign_words()) + "@" + pick(rng, brand_words()) + digits(rng, 3) +
                   "." + pick(rng, phish_tlds());
        }
        default: {  // very long query tail, > 60 chars normalized
            std::string u = pick(rng, benign_domains()) + digits(rng, 2) + "." +
                            pick(rng, benign_tlds()) + "/" + pick(rng, benign_words()) +
                            "?session=" + digits(rng, 24) + "&track=" + digits(rng, 24);
            return u;
        }
    }
}

inline std::string subtle_phish_url(Rng& rng) {
    // no ip/@/overlength; the signal lives in the character patterns
    std::string u = pick(rng, brand_words()) + "-" + pick(rng, phish_actions()) +
                    digits(rng, 2) + "." + pick(rng, phish_tlds());
    u += "/" + pick(rng, phish_actions());
    if (rng.bernoulli(0.5)) u += "/" + pick(rng, phish_actions()) + digits(rng, 1);
    if (u.size() > 60) u.resize(60);
    return u;
}

inline std::string hard_benign_url(Rng& rng) {
    // benign with confounders: a dash or a longer-but-legal path
    std::string u = pick(rng, benign_domains()) + "-" + pick(rng, benign_words()) + "." +
                    pick(rng, benign_tlds());
    u += "/" + pick(rng, benign_words()) + "/" + pick(rng, benign_words());
    if (u.size() > 60) u.resize(60);
    return u;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n < 20) throw ConfigError("generate_synthetic: n must be >= 20");
    if (spec.difficulty < 0.0 || spec.difficulty > 1.0)
        throw ConfigError("generate_synthetic: difficulty must be in [0,1]");
    Rng rng(spec.seed);
    Dataset ds;
    std::unordered_set<std::string> seen;
    while (ds.records.size() < spec.n) {
        int label = rng.bernoulli(0.5) ? 1 : 0;
        std::string url;
        if (label == 1) {
            url = (spec.difficulty > 0.0 && rng.bernoulli(spec.difficulty))
                      ? detail::subtle_phish_url(rng)
                      : detail::overt_phish_url(rng);
        } else {
            url = (spec.difficulty > 0.0 && rng.bernoulli(0.5 * spec.difficulty))
                      ? detail::hard_benign_url(rng)
                      : detail::benign_url(rng);
        }
        // benign sites mostly carry https, phishing mostly does not
        std::string raw = rng.bernoulli(label == 1 ? 0.25 : 0.75) ? "https://" + url : url;
        UrlRecord rec;
        rec.raw = raw;
        rec.normalized = normalize_url(raw);
        rec.label = label;
        rec.source_id = "synthetic";
        if (seen.insert(rec.normalized).second) ds.records.push_back(std::move(rec));
    }
    ds.recount();
    return ds;
}

}  // namespace antiphish
