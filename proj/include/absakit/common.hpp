#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>

namespace absakit {

// Error taxonomy mirrors the CLI exit codes: config=2, backend=3, data=4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class BackendError : public Error {
public:
    explicit BackendError(const std::string& msg, int status = 0, bool retryable = false,
                          bool auth = false)
        : Error(msg), status_(status), retryable_(retryable), auth_(auth) {}

    int status() const { return status_; }
    bool retryable() const { return retryable_; }
    bool auth_failure() const { return auth_; }

private:
    int status_;
    bool retryable_;
    bool auth_;
};

// Locale-independent ASCII classification; byte-identical output across
// platforms is a contract here, so the <cctype> locale-sensitive versions are
// deliberately avoided.
inline bool ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\v' || c == '\f' || c == '\r';
}
inline bool ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }
inline bool ascii_lower_c(char c) { return c >= 'a' && c <= 'z'; }
inline bool ascii_alnum(char c) {
    return ascii_digit(c) || ascii_upper(c) || ascii_lower_c(c);
}
inline char ascii_to_lower(char c) {
    return ascii_upper(c) ? static_cast<char>(c + ('a' - 'A')) : c;
}
inline char ascii_to_upper(char c) {
    return ascii_lower_c(c) ? static_cast<char>(c - ('a' - 'A')) : c;
}

inline std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && ascii_space(s[b])) ++b;
    while (e > b && ascii_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(ascii_to_lower(c));
    return out;
}

// Collapses internal whitespace runs to single spaces and trims the ends.
inline std::string squeeze_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_space = false;
    for (char c : s) {
        if (ascii_space(c)) {
            in_space = true;
            continue;
        }
        if (in_space && !out.empty()) out.push_back(' ');
        in_space = false;
        out.push_back(c);
    }
    return out;
}

// Case-folded, whitespace-normalized key used for pair matching and dedup.
inline std::string fold_key(std::string_view s) { return to_lower(squeeze_whitespace(s)); }

inline bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

}  // namespace absakit
