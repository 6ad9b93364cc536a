#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "absakit/common.hpp"

namespace absakit {

// Punctuation detached from word edges as standalone tokens. The same rule is
// shared by masking, span matching, and BIO tagging so token spans stay aligned.
inline bool is_detachable_punct(char c) {
    switch (c) {
        case '.': case ',': case '!': case '?': case ';': case ':':
        case '(': case ')': case '"': case '\'':
            return true;
        default:
            return false;
    }
}

// Whitespace split, then leading/trailing punctuation peeled off as separate
// tokens. Internal punctuation (contractions, decimals) is left in place.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        while (i < n && ascii_space(text[i])) ++i;
        if (i >= n) break;
        std::size_t j = i;
        while (j < n && !ascii_space(text[j])) ++j;
        std::string_view word = text.substr(i, j - i);
        i = j;

        std::size_t lead = 0;
        while (lead < word.size() && is_detachable_punct(word[lead])) ++lead;
        std::size_t tail = word.size();
        while (tail > lead && is_detachable_punct(word[tail - 1])) --tail;

        for (std::size_t k = 0; k < lead; ++k) tokens.emplace_back(1, word[k]);
        if (tail > lead) tokens.emplace_back(word.substr(lead, tail - lead));
        for (std::size_t k = tail; k < word.size(); ++k) tokens.emplace_back(1, word[k]);
    }
    return tokens;
}

// Canonical surface form: single spaces between tokens, no space before a
// detached punctuation token. Re-tokenizing the result is a fixed point.
inline std::string canonical_join(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& tok : tokens) {
        bool punct = tok.size() == 1 && is_detachable_punct(tok[0]);
        if (!out.empty() && !punct) out.push_back(' ');
        out += tok;
    }
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens, std::size_t begin,
                               std::size_t end) {
    std::string out;
    for (std::size_t i = begin; i < end && i < tokens.size(); ++i) {
        if (i > begin) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace absakit
