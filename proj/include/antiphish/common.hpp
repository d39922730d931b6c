#pragma once

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace antiphish {

// ---- error taxonomy -------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error { using Error::Error; };
struct DataError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct SchemaError : Error { using Error::Error; };

struct EmptyAfterNormalization : DataError { using DataError::DataError; };
struct ParseError : DataError { using DataError::DataError; };
struct LabelDomainError : DataError { using DataError::DataError; };
struct DegenerateSplit : DataError { using DataError::DataError; };
struct EmptyCorpus : DataError { using DataError::DataError; };
struct UnknownToken : DataError { using DataError::DataError; };
struct SingleClassError : DataError { using DataError::DataError; };
struct NonFiniteFeature : NumericError { using NumericError::NumericError; };
struct ArityMismatch : SchemaError { using SchemaError::SchemaError; };
struct TooFewSamples : DataError { using DataError::DataError; };
struct ShapeMismatch : SchemaError { using SchemaError::SchemaError; };
struct NonFiniteActivation : NumericError { using NumericError::NumericError; };
struct NonFiniteUpdate : NumericError { using NumericError::NumericError; };
struct LengthMismatch : SchemaError { using SchemaError::SchemaError; };
struct SchemaMismatch : SchemaError { using SchemaError::SchemaError; };
struct EmptyEvaluation : DataError { using DataError::DataError; };

// ---- small helpers ---------------------------------------------------------

inline std::string strfmt(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    char buf[1024];
    std::vsnprintf(buf, sizeof(buf), fmt, ap);
    va_end(ap);
    return std::string(buf);
}

// Round-trip-exact decimal rendering of a double; identical across runs.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline bool starts_with_icase(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (size_t i = 0; i < prefix.size(); ++i) {
        char a = s[i], b = prefix[i];
        if (a >= 'A' && a <= 'Z') a = static_cast<char>(a - 'A' + 'a');
        if (b >= 'A' && b <= 'Z') b = static_cast<char>(b - 'A' + 'a');
        if (a != b) return false;
    }
    return true;
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::string_view trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// FNV-1a, used for config hashes and seed derivation.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hash_hex(uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

// ---- logging (ANTIPHISH_LOG: 0 = quiet, 1 = info, 2 = debug) ---------------

inline int log_level() {
    static int lvl = [] {
        const char* e = std::getenv("ANTIPHISH_LOG");
        return e ? std::atoi(e) : 0;
    }();
    return lvl;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= 1) std::fprintf(stderr, "[antiphish] %s\n", msg.c_str());
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= 2) std::fprintf(stderr, "[antiphish:debug] %s\n", msg.c_str());
}

}  // namespace antiphish
