#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "absakit/core.hpp"
#include "absakit/spans.hpp"
#include "absakit/tokenize.hpp"

namespace absakit {

// Unit-cost character edit distance, two-row dynamic program.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
    if (a.size() < b.size()) std::swap(a, b);
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            std::size_t cost = a[i - 1] == b[j - 1] ? 0 : 1;
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + cost});
            diag = up;
        }
    }
    return row[b.size()];
}

struct NormalizeConfig {
    // Accept a fuzzy repair when levenshtein / candidate-length <= tau. The
    // candidate's character length is the divisor, which penalizes spuriously
    // long windows; 0.4 admits single-token typos and dropped plurals.
    double tau = 0.4;
    // Candidate n-gram lengths searched; defaults to aspect token count + 2.
    std::optional<std::size_t> max_ngram;
    bool case_sensitive = false;
    bool drop_empty_samples = true;  // dataset-level handling of zero-label samples

    void validate() const {
        if (tau < 0.0 || tau > 1.0) throw ConfigError("normalize.tau must be in [0, 1]");
        if (max_ngram && *max_ngram < 1) throw ConfigError("normalize.max_ngram must be >= 1");
    }
};

struct FuzzyMatch {
    std::string candidate;  // surface form from the sentence
    double score = 0.0;
    TokenSpan span;
};

// Minimum of levenshtein(fold(candidate), fold(aspect)) / len(candidate) over
// all contiguous token n-grams with n in [1, max_ngram]. Ties prefer the
// longer candidate, then the leftmost one.
inline std::optional<FuzzyMatch> best_fuzzy_ngram(const std::vector<std::string>& tokens,
                                                  std::string_view aspect_term,
                                                  const NormalizeConfig& config = {}) {
    if (tokens.empty()) return std::nullopt;
    std::size_t cap = config.max_ngram.value_or(tokenize(aspect_term).size() + 2);
    cap = std::min(cap, tokens.size());
    std::string target = config.case_sensitive ? std::string(aspect_term) : to_lower(aspect_term);

    std::optional<FuzzyMatch> best;
    for (std::size_t start = 0; start < tokens.size(); ++start) {
        for (std::size_t n = 1; n <= cap && start + n <= tokens.size(); ++n) {
            std::string surface = join_tokens(tokens, start, start + n);
            std::string folded = config.case_sensitive ? surface : to_lower(surface);
            double score = static_cast<double>(levenshtein(folded, target)) /
                           static_cast<double>(surface.size());
            bool better =
                !best || score < best->score ||
                (score == best->score && surface.size() > best->candidate.size());
            if (better) best = FuzzyMatch{std::move(surface), score, {start, start + n}};
        }
    }
    return best;
}

enum class NormalizeAction { kept, substituted, removed };

inline const char* to_string(NormalizeAction a) {
    switch (a) {
        case NormalizeAction::kept: return "kept";
        case NormalizeAction::substituted: return "substituted";
        default: return "removed";
    }
}

struct NormalizationOutcome {
    std::string sample_id;
    std::string original_term;
    NormalizeAction action = NormalizeAction::kept;
    std::optional<std::string> replacement;
    std::optional<double> score;
};

struct NormalizedSample {
    AbsaSample sample;
    std::vector<NormalizationOutcome> outcomes;
};

// Per label, in order: exact sub-sequence match keeps the label (rewritten to
// the sentence's surface form); otherwise the best fuzzy n-gram substitutes it
// when its score clears tau; otherwise the label is removed. Duplicates left
// by the rewrite collapse to the first occurrence. Idempotent.
inline NormalizedSample normalize_labels(const AbsaSample& input,
                                         const NormalizeConfig& config = {}) {
    config.validate();
    std::vector<std::string> tokens = tokenize(input.text);

    NormalizedSample result;
    result.sample = input;
    result.sample.labels.clear();
    result.sample.provenance.normalized = true;

    std::vector<AspectLabel> resolved;
    for (const auto& label : input.labels) {
        NormalizationOutcome outcome;
        outcome.sample_id = input.id;
        outcome.original_term = label.term;
        if (auto span = find_exact_span(tokens, label.term, config.case_sensitive)) {
            outcome.action = NormalizeAction::kept;
            resolved.emplace_back(join_tokens(tokens, span->begin, span->end), label.polarity);
        } else if (auto match = best_fuzzy_ngram(tokens, label.term, config);
                   match && match->score <= config.tau) {
            outcome.action = NormalizeAction::substituted;
            outcome.replacement = match->candidate;
            outcome.score = match->score;
            resolved.emplace_back(match->candidate, label.polarity);
        } else {
            outcome.action = NormalizeAction::removed;
        }
        result.outcomes.push_back(std::move(outcome));
    }

    for (const auto& label : resolved) {
        bool dup = false;
        for (const auto& have : result.sample.labels)
            if (have == label) dup = true;
        if (!dup) result.sample.labels.push_back(label);
    }
    return result;
}

struct NormalizeSummary {
    std::size_t kept = 0;
    std::size_t substituted = 0;
    std::size_t removed = 0;
    std::size_t zero_label_samples = 0;
    std::size_t dropped_samples = 0;
};

struct NormalizedDataset {
    Dataset dataset;
    NormalizeSummary summary;
    std::vector<NormalizationOutcome> outcomes;
};

inline NormalizedDataset normalize_dataset(const Dataset& input,
                                           const NormalizeConfig& config = {}) {
    NormalizedDataset result;
    result.dataset.name = input.name;
    result.dataset.domain = input.domain;
    result.dataset.domain_text = input.domain_text;
    for (const auto& sample : input.samples) {
        NormalizedSample normalized = normalize_labels(sample, config);
        for (const auto& outcome : normalized.outcomes) {
            switch (outcome.action) {
                case NormalizeAction::kept: ++result.summary.kept; break;
                case NormalizeAction::substituted: ++result.summary.substituted; break;
                case NormalizeAction::removed: ++result.summary.removed; break;
            }
            result.outcomes.push_back(outcome);
        }
        if (normalized.sample.labels.empty()) {
            ++result.summary.zero_label_samples;
            if (config.drop_empty_samples) {
                ++result.summary.dropped_samples;
                continue;
            }
        }
        result.dataset.samples.push_back(std::move(normalized.sample));
    }
    return result;
}

}  // namespace absakit
