#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <sstream>

#include "antiphish/corpus.hpp"
#include "antiphish/rng.hpp"

using namespace antiphish;

TEST_CASE("normalize_url strips schemes and www") {
    CHECK(normalize_url("https://www.example.com/a") == "example.com/a");
    CHECK(normalize_url("example.com/a") == "example.com/a");
    CHECK(normalize_url("http://WWW.PayPal.com/Login") == "paypal.com/Login");
    CHECK(normalize_url("http://www.https://a.com") == "a.com");
    CHECK(normalize_url("HTTPS://b.org/Q?x=1") == "b.org/Q?x=1");
}

TEST_CASE("normalize_url lowercases host only") {
    CHECK(normalize_url("ExAmPlE.CoM/KeepCase/Path") == "example.com/KeepCase/Path");
    CHECK(normalize_url("A.B:8080/Q") == "a.b:8080/Q");
}

TEST_CASE("normalize_url errors on empty result") {
    CHECK_THROWS_AS(normalize_url("https://www."), EmptyAfterNormalization);
    CHECK_THROWS_AS(normalize_url("http://"), EmptyAfterNormalization);
}

TEST_CASE("normalize_url is idempotent") {
    Rng rng(7);
    const std::string chars = "abcdefghijklmnopqrstuvwxyzABC./-_?=&@:%123";
    for (int trial = 0; trial < 200; ++trial) {
        std::string u;
        size_t len = 1 + rng.below(30);
        for (size_t i = 0; i < len; ++i) u += chars[rng.below(chars.size())];
        if (rng.bernoulli(0.3)) u = "http://" + u;
        if (rng.bernoulli(0.3)) u = "www." + u;
        std::string once;
        try {
            once = normalize_url(u);
        } catch (const EmptyAfterNormalization&) {
            continue;
        }
        CHECK(normalize_url(once) == once);
    }
}

TEST_CASE("load_dataset parses, normalizes, dedups") {
    std::istringstream in(
        "# comment line\n"
        "1,https://a.com\n"
        "0,b.org/x\n"
        "1,http://www.a.com\n"
        "0,a.com\n");
    Dataset ds = load_dataset(in);
    // rows 2 and 4 normalize to "a.com"; first occurrence wins
    REQUIRE(ds.size() == 2);
    CHECK(ds.records[0].normalized == "a.com");
    CHECK(ds.records[0].label == 1);
    CHECK(ds.records[1].normalized == "b.org/x");
    CHECK(ds.records[1].label == 0);
    CHECK(ds.phishing_count == 1);
    CHECK(ds.benign_count == 1);
}

TEST_CASE("load_dataset label aliases and errors") {
    std::istringstream ok("benign,x.com\nphishing,y.com\n");
    Dataset ds = load_dataset(ok);
    CHECK(ds.records[0].label == 0);
    CHECK(ds.records[1].label == 1);

    std::istringstream bad_label("2,c.com\n");
    CHECK_THROWS_AS(load_dataset(bad_label), LabelDomainError);
    std::istringstream bad_line("no-comma-here\n");
    CHECK_THROWS_AS(load_dataset(bad_line), ParseError);
}

static Dataset make_dataset(size_t n0, size_t n1) {
    Dataset ds;
    for (size_t i = 0; i < n0; ++i)
        ds.records.push_back({"", strfmt("benign%zu.com", i), 0, "t"});
    for (size_t i = 0; i < n1; ++i)
        ds.records.push_back({"", strfmt("phish%zu.com", i), 1, "t"});
    ds.recount();
    return ds;
}

TEST_CASE("split sizes and partition law") {
    Dataset ds = make_dataset(5, 5);
    SplitSpec spec;
    spec.train_fraction = 0.7;
    spec.seed = 123;
    auto [train, test] = split(ds, spec);
    CHECK(train.size() == 7);
    CHECK(test.size() == 3);

    std::multiset<std::string> all, back;
    for (const auto& r : ds.records) all.insert(r.normalized);
    for (const auto& r : train.records) back.insert(r.normalized);
    for (const auto& r : test.records) back.insert(r.normalized);
    CHECK(all == back);
}

TEST_CASE("split determinism") {
    Dataset ds = make_dataset(20, 20);
    SplitSpec spec;
    spec.seed = 99;
    auto [a1, b1] = split(ds, spec);
    auto [a2, b2] = split(ds, spec);
    REQUIRE(a1.size() == a2.size());
    for (size_t i = 0; i < a1.size(); ++i)
        CHECK(a1.records[i].normalized == a2.records[i].normalized);
    for (size_t i = 0; i < b1.size(); ++i)
        CHECK(b1.records[i].normalized == b2.records[i].normalized);
}

TEST_CASE("stratified split preserves class ratio within one record") {
    Dataset ds = make_dataset(500, 500);
    SplitSpec spec;
    spec.train_fraction = 0.7;
    spec.seed = 7;
    spec.stratified = true;
    auto [train, test] = split(ds, spec);
    CHECK(train.size() == 700);
    CHECK(train.benign_count >= 349);
    CHECK(train.benign_count <= 351);
    CHECK(train.phishing_count >= 349);
    CHECK(train.phishing_count <= 351);

    // uneven classes as well
    Dataset ds2 = make_dataset(731, 269);
    auto [tr2, te2] = split(ds2, spec);
    CHECK(tr2.size() == 700);
    long long expect0 = llround(0.7 * 731.0);
    CHECK(std::llabs(static_cast<long long>(tr2.benign_count) - expect0) <= 1);
}

TEST_CASE("split degenerate cases") {
    Dataset one = make_dataset(1, 1);
    SplitSpec spec;
    spec.train_fraction = 0.9;
    spec.stratified = false;
    CHECK_THROWS_AS(split(make_dataset(1, 0), spec), DegenerateSplit);
    SplitSpec strat;
    CHECK_THROWS_AS(split(make_dataset(4, 0), strat), SingleClassError);
}

TEST_CASE("dataset round-trips through the canonical file format") {
    Dataset ds = make_dataset(3, 2);
    std::ostringstream out;
    save_dataset(ds, out);
    std::istringstream in(out.str());
    Dataset back = load_dataset(in);
    REQUIRE(back.size() == ds.size());
    for (size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.records[i].normalized == ds.records[i].normalized);
        CHECK(back.records[i].label == ds.records[i].label);
    }
}
