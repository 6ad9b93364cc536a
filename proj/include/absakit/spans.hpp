#pragma once

#include <optional>
#include <string>
#include <vector>

#include "absakit/core.hpp"
#include "absakit/tokenize.hpp"

namespace absakit {

// Half-open token window [begin, end).
struct TokenSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const TokenSpan&) const = default;
};

// Leftmost contiguous token window matching the tokenized aspect term.
inline std::optional<TokenSpan> find_exact_span(const std::vector<std::string>& tokens,
                                                std::string_view aspect_term,
                                                bool case_sensitive = false) {
    std::vector<std::string> needle = tokenize(aspect_term);
    if (needle.empty() || needle.size() > tokens.size()) return std::nullopt;
    auto eq = [&](const std::string& a, const std::string& b) {
        return case_sensitive ? a == b : to_lower(a) == to_lower(b);
    };
    for (std::size_t s = 0; s + needle.size() <= tokens.size(); ++s) {
        bool all = true;
        for (std::size_t k = 0; k < needle.size(); ++k) {
            if (!eq(tokens[s + k], needle[k])) {
                all = false;
                break;
            }
        }
        if (all) return TokenSpan{s, s + needle.size()};
    }
    return std::nullopt;
}

struct ClaimedSpans {
    // One entry per label; nullopt when no unclaimed occurrence was left.
    std::vector<std::optional<TokenSpan>> spans;
    std::size_t skipped = 0;
};

// Assigns each label its leftmost occurrence whose tokens are not already
// claimed by an earlier label. Shared by BIO encoding and aspect masking so
// both agree on which tokens belong to which aspect.
inline ClaimedSpans claim_label_spans(const std::vector<std::string>& tokens,
                                      const std::vector<AspectLabel>& labels,
                                      bool case_sensitive = false) {
    ClaimedSpans out;
    std::vector<bool> claimed(tokens.size(), false);
    for (const auto& label : labels) {
        std::vector<std::string> needle = tokenize(label.term);
        std::optional<TokenSpan> found;
        if (!needle.empty() && needle.size() <= tokens.size()) {
            auto eq = [&](const std::string& a, const std::string& b) {
                return case_sensitive ? a == b : to_lower(a) == to_lower(b);
            };
            for (std::size_t s = 0; s + needle.size() <= tokens.size() && !found; ++s) {
                bool all = true;
                for (std::size_t k = 0; k < needle.size(); ++k) {
                    if (claimed[s + k] || !eq(tokens[s + k], needle[k])) {
                        all = false;
                        break;
                    }
                }
                if (all) found = TokenSpan{s, s + needle.size()};
            }
        }
        if (found) {
            for (std::size_t k = found->begin; k < found->end; ++k) claimed[k] = true;
        } else {
            ++out.skipped;
        }
        out.spans.push_back(found);
    }
    return out;
}

}  // namespace absakit
