#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "antiphish/common.hpp"
#include "antiphish/matrix.hpp"

namespace antiphish {

// Lexical URL features (URLF).
//
// Token steps follow the URL hierarchy: host tokens sit at step 1, each
// subsequent path segment increments the step, query tokens take the step of
// the segment that carries them.

inline bool is_url_delimiter(char c) {
    switch (c) {
        case '.': case '-': case '_': case '/': case '?':
        case '=': case '&': case '@': case ':': case '%':
            return true;
        default:
            return false;
    }
}

struct Token {
    std::string text;
    int step = 1;
};

inline std::vector<Token> tokenize(std::string_view normalized_url) {
    std::vector<Token> out;
    int step = 0;
    size_t pos = 0;
    while (pos <= normalized_url.size()) {
        size_t slash = normalized_url.find('/', pos);
        std::string_view segment = normalized_url.substr(
            pos, slash == std::string_view::npos ? std::string_view::npos : slash - pos);
        ++step;
        size_t start = 0;
        for (size_t i = 0; i <= segment.size(); ++i) {
            if (i == segment.size() || is_url_delimiter(segment[i])) {
                if (i > start) out.push_back({std::string(segment.substr(start, i - start)), step});
                start = i + 1;
            }
        }
        if (slash == std::string_view::npos) break;
        pos = slash + 1;
    }
    return out;
}

// Per-token occurrence counts by step, the inputs of the token weight
// W = (h/n) * sum_x N_x / x^2 with h the token length, n the corpus size and
// N_x the occurrences at step x.
struct TokenTable {
    struct Entry {
        std::map<int, uint64_t> count_by_step;
    };
    std::map<std::string, Entry> tokens;
    uint64_t corpus_size = 0;  // n, counts duplicates
    int max_step = 1;          // S

    bool contains(const std::string& t) const { return tokens.count(t) != 0; }
};

inline TokenTable build_token_table(const std::vector<std::string>& corpus) {
    if (corpus.empty()) throw EmptyCorpus("build_token_table: empty corpus");
    TokenTable table;
    table.corpus_size = corpus.size();
    for (const auto& url : corpus) {
        for (const auto& tok : tokenize(url)) {
            table.tokens[tok.text].count_by_step[tok.step]++;
            table.max_step = std::max(table.max_step, tok.step);
        }
    }
    return table;
}

inline double token_weight(const TokenTable& table, const std::string& token) {
    auto it = table.tokens.find(token);
    if (it == table.tokens.end())
        throw UnknownToken(strfmt("token '%s' not in table", token.c_str()));
    double sum = 0.0;
    for (const auto& [step, count] : it->second.count_by_step)
        sum += static_cast<double>(count) / (static_cast<double>(step) * static_cast<double>(step));
    double h = static_cast<double>(token.size());
    return h / static_cast<double>(table.corpus_size) * sum;
}

struct UrlfVector {
    bool has_ip = false;
    bool has_at = false;
    bool double_slash_redirect = false;
    bool dash_in_domain = false;
    int subdomain_dot_count = 0;
    bool https_scheme = false;
    double url_length = 0.0;
    double token_weight_sum = 0.0;
    double token_weight_max = 0.0;

    static constexpr size_t kArity = 9;

    std::array<double, kArity> as_array() const {
        return {has_ip ? 1.0 : 0.0,
                has_at ? 1.0 : 0.0,
                double_slash_redirect ? 1.0 : 0.0,
                dash_in_domain ? 1.0 : 0.0,
                static_cast<double>(subdomain_dot_count),
                https_scheme ? 1.0 : 0.0,
                url_length,
                token_weight_sum,
                token_weight_max};
    }

    static const std::array<const char*, kArity>& field_names() {
        static const std::array<const char*, kArity> names = {
            "has_ip", "has_at", "double_slash_redirect", "dash_in_domain",
            "subdomain_dot_count", "https_scheme", "url_length",
            "token_weight_sum", "token_weight_max"};
        return names;
    }
};

namespace detail {

// host = everything before the first '/', with any :port suffix removed
inline std::string_view host_of(std::string_view normalized) {
    std::string_view host = normalized.substr(0, normalized.find('/'));
    if (!host.empty() && host.front() == '[') {
        size_t close = host.find(']');
        if (close != std::string_view::npos) return host.substr(0, close + 1);
        return host;
    }
    size_t colon = host.rfind(':');
    if (colon != std::string_view::npos) host = host.substr(0, colon);
    return host;
}

inline bool is_dotted_quad(std::string_view host) {
    int part = 0, digits = 0, value = 0;
    for (char c : host) {
        if (c >= '0' && c <= '9') {
            if (++digits > 3) return false;
            value = value * 10 + (c - '0');
            if (value > 255) return false;
        } else if (c == '.') {
            if (digits == 0) return false;
            ++part;
            digits = value = 0;
        } else {
            return false;
        }
    }
    return part == 3 && digits > 0;
}

inline bool is_bracketed_ipv6(std::string_view host) {
    if (host.size() < 4 || host.front() != '[' || host.back() != ']') return false;
    bool saw_colon = false;
    for (char c : host.substr(1, host.size() - 2)) {
        bool hex = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
        if (c == ':') saw_colon = true;
        else if (!hex && c != '.') return false;
    }
    return saw_colon;
}

}  // namespace detail

inline UrlfVector extract_urlf(std::string_view raw_url, std::string_view normalized,
                               const TokenTable& table) {
    UrlfVector v;
    std::string_view host = detail::host_of(normalized);
    v.has_ip = detail::is_dotted_quad(host) || detail::is_bracketed_ipv6(host);
    v.has_at = normalized.find('@') != std::string_view::npos;
    v.double_slash_redirect = normalized.find("//") != std::string_view::npos;
    v.dash_in_domain = host.find('-') != std::string_view::npos;
    int dots = static_cast<int>(std::count(host.begin(), host.end(), '.'));
    v.subdomain_dot_count = std::max(0, dots - 1);
    v.https_scheme = starts_with_icase(trim(raw_url), "https://");
    v.url_length = static_cast<double>(normalized.size());
    for (const auto& tok : tokenize(normalized)) {
        auto it = table.tokens.find(tok.text);
        if (it == table.tokens.end()) continue;  // unseen token contributes 0
        double w = token_weight(table, tok.text);
        v.token_weight_sum += w;
        v.token_weight_max = std::max(v.token_weight_max, w);
    }
    return v;
}

// Min-max scaling to [0,1] with training-set bounds; constant columns map
// to 0. Applied before features enter distance-based learners.
struct MinMaxScaler {
    Vec lo, hi;

    void fit(const Matrix& X) {
        lo.assign(X.cols, 0.0);
        hi.assign(X.cols, 0.0);
        for (size_t c = 0; c < X.cols; ++c) {
            double mn = X(0, c), mx = X(0, c);
            for (size_t r = 1; r < X.rows; ++r) {
                mn = std::min(mn, X(r, c));
                mx = std::max(mx, X(r, c));
            }
            lo[c] = mn;
            hi[c] = mx;
        }
    }

    void apply(Matrix& X) const {
        if (X.cols != lo.size()) throw ArityMismatch("scaler arity mismatch");
        for (size_t c = 0; c < X.cols; ++c) {
            double range = hi[c] - lo[c];
            for (size_t r = 0; r < X.rows; ++r) {
                double& x = X(r, c);
                x = range > 0.0 ? (x - lo[c]) / range : 0.0;
            }
        }
    }

    void save(std::ostream& out) const {
        out << "minmax_scaler\tv1\t" << lo.size() << '\n';
        for (size_t c = 0; c < lo.size(); ++c)
            out << fmt_double(lo[c]) << '\t' << fmt_double(hi[c]) << '\n';
    }

    static MinMaxScaler load(std::istream& in) {
        std::string tag, version;
        size_t n = 0;
        in >> tag >> version >> n;
        if (tag != "minmax_scaler" || version != "v1")
            throw SchemaMismatch("bad scaler file header");
        MinMaxScaler s;
        s.lo.resize(n);
        s.hi.resize(n);
        for (size_t c = 0; c < n; ++c) in >> s.lo[c] >> s.hi[c];
        if (!in) throw ParseError("truncated scaler file");
        return s;
    }
};

// Feature dump for the CLI `featurize` command: header then one row per URL.
inline void dump_urlf_header(std::ostream& out) {
    const auto& names = UrlfVector::field_names();
    out << "url";
    for (const char* n : names) out << '\t' << n;
    out << '\n';
}

inline void dump_urlf_row(std::ostream& out, const std::string& url, const UrlfVector& v) {
    out << url;
    for (double x : v.as_array()) out << '\t' << fmt_double(x);
    out << '\n';
}

// TokenTable persistence: `token<TAB>step<TAB>count` rows.
inline void save_token_table(const TokenTable& t, std::ostream& out) {
    out << "token_table\tv1\t" << t.corpus_size << '\t' << t.max_step << '\n';
    for (const auto& [tok, entry] : t.tokens)
        for (const auto& [step, count] : entry.count_by_step)
            out << tok << '\t' << step << '\t' << count << '\n';
}

inline TokenTable load_token_table(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty token table file");
    TokenTable t;
    {
        size_t p1 = header.find('\t'), p2 = header.find('\t', p1 + 1), p3 = header.find('\t', p2 + 1);
        if (header.substr(0, p1) != "token_table" || p3 == std::string::npos)
            throw SchemaMismatch("bad token table header");
        t.corpus_size = std::stoull(header.substr(p2 + 1, p3 - p2 - 1));
        t.max_step = std::stoi(header.substr(p3 + 1));
    }
    std::string line;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        size_t p1 = line.find('\t'), p2 = line.find('\t', p1 + 1);
        if (p1 == std::string::npos || p2 == std::string::npos)
            throw ParseError(strfmt("token table line %zu malformed", line_no));
        std::string tok = line.substr(0, p1);
        int step = std::stoi(line.substr(p1 + 1, p2 - p1 - 1));
        uint64_t count = std::stoull(line.substr(p2 + 1));
        t.tokens[tok].count_by_step[step] = count;
    }
    return t;
}

}  // namespace antiphish
