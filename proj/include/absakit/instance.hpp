#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "absakit/corpus.hpp"
#include "absakit/keypoint.hpp"
#include "absakit/labels_fmt.hpp"
#include "absakit/llm.hpp"
#include "absakit/rng.hpp"
#include "absakit/spans.hpp"

namespace absakit {

struct MaskedToken {
    bool is_mask = false;
    std::string text;

    bool operator==(const MaskedToken&) const = default;
};

enum class MaskKind { context_preserve, aspect_preserve };

// A review with contiguous segments replaced by a single mask sentinel each.
// Invariants: at least one mask, at least one surviving token, never two
// adjacent masks (they collapse at construction).
struct MaskedReview {
    std::vector<MaskedToken> tokens;
    std::string source_id;
    MaskKind kind = MaskKind::context_preserve;

    std::string render() const {
        std::string out;
        for (const auto& tok : tokens) {
            if (!out.empty()) out.push_back(' ');
            out += tok.is_mask ? kMaskSentinel : tok.text;
        }
        return out;
    }
};

namespace detail {

inline std::optional<MaskedReview> make_masked_review(const std::vector<std::string>& tokens,
                                                      const std::vector<bool>& masked,
                                                      std::string source_id, MaskKind kind) {
    MaskedReview review;
    review.source_id = std::move(source_id);
    review.kind = kind;
    bool any_mask = false;
    bool any_token = false;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (masked[i]) {
            any_mask = true;
            if (!review.tokens.empty() && review.tokens.back().is_mask) continue;
            review.tokens.push_back({true, {}});
        } else {
            any_token = true;
            review.tokens.push_back({false, tokens[i]});
        }
    }
    if (!any_mask || !any_token) return std::nullopt;
    return review;
}

inline std::vector<bool> aspect_token_flags(const std::vector<std::string>& tokens,
                                            const AbsaSample& sample, std::size_t* located = nullptr) {
    std::vector<bool> flags(tokens.size(), false);
    ClaimedSpans claims = claim_label_spans(tokens, sample.labels);
    std::size_t found = 0;
    for (const auto& span : claims.spans) {
        if (!span) continue;
        ++found;
        for (std::size_t i = span->begin; i < span->end; ++i) flags[i] = true;
    }
    if (located) *located = found;
    return flags;
}

}  // namespace detail

// Context preservation: every aspect span plus m tokens on each side is
// masked. Pure in (sample, m); returns nothing when the window swallows the
// whole sentence, so the caller can skip that variant.
inline std::optional<MaskedReview> context_preservation_mask(const AbsaSample& sample, int m) {
    std::vector<std::string> tokens = tokenize(sample.text);
    if (tokens.empty()) return std::nullopt;
    std::vector<bool> masked(tokens.size(), false);
    ClaimedSpans claims = claim_label_spans(tokens, sample.labels);
    bool any_span = false;
    for (const auto& span : claims.spans) {
        if (!span) continue;
        any_span = true;
        std::size_t lo = span->begin > static_cast<std::size_t>(m)
                             ? span->begin - static_cast<std::size_t>(m)
                             : 0;
        std::size_t hi = std::min(tokens.size(), span->end + static_cast<std::size_t>(m));
        for (std::size_t i = lo; i < hi; ++i) masked[i] = true;
    }
    if (!any_span) return std::nullopt;
    return detail::make_masked_review(tokens, masked, sample.id, MaskKind::context_preserve);
}

// Aspect preservation: random 1-3 token segments outside the aspect spans are
// masked until the masked count reaches p_mask of all tokens (or the
// non-aspect supply runs out). Aspect tokens are never masked.
inline std::vector<MaskedReview> aspect_preservation_mask(const AbsaSample& sample, double p_mask,
                                                          std::size_t variants, Rng& rng) {
    if (p_mask <= 0.0 || p_mask > 1.0) throw DataError("p_mask must be in (0, 1]");
    std::vector<std::string> tokens = tokenize(sample.text);
    std::size_t located = 0;
    std::vector<bool> aspect = detail::aspect_token_flags(tokens, sample, &located);
    if (located == 0) throw DataError("aspect preservation requires a locatable aspect span");
    bool has_free_token = false;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!aspect[i]) has_free_token = true;
    if (!has_free_token) throw DataError("aspect preservation requires a non-aspect token");

    const double target = p_mask * static_cast<double>(tokens.size());
    std::vector<MaskedReview> out;
    for (std::size_t v = 0; v < variants; ++v) {
        std::vector<bool> masked(tokens.size(), false);
        std::size_t masked_count = 0;
        while (static_cast<double>(masked_count) < target) {
            // Segment length is capped near the target so the masked fraction
            // never overshoots p_mask by more than (max span - 1) / len.
            std::size_t len_cap = std::min<std::size_t>(
                3, static_cast<std::size_t>(
                       std::floor(target + 2.0 - static_cast<double>(masked_count))));
            // All maskable segments up to the cap, uniform over the set.
            std::vector<std::pair<std::size_t, std::size_t>> segments;
            for (std::size_t s = 0; s < tokens.size(); ++s) {
                for (std::size_t len = 1; len <= len_cap && s + len <= tokens.size(); ++len) {
                    bool free = true;
                    for (std::size_t i = s; i < s + len; ++i)
                        if (aspect[i] || masked[i]) free = false;
                    if (free) segments.emplace_back(s, len);
                    else break;
                }
            }
            if (segments.empty()) break;
            auto [start, len] = segments[rng.index(segments.size())];
            for (std::size_t i = start; i < start + len; ++i) masked[i] = true;
            masked_count += len;
        }
        auto review = detail::make_masked_review(tokens, masked, sample.id,
                                                 MaskKind::aspect_preserve);
        if (review) out.push_back(std::move(*review));
    }
    return out;
}

struct InstanceConfig {
    std::size_t k = 4;                      // samples requested per response
    std::size_t max_combinations = 1000;    // cap on sampled seed pairs
    std::vector<int> m_values = {0, 2};     // context-preservation window sizes
    double p_mask = 0.6;                    // aspect-preservation masked fraction
    std::size_t aspect_preserve_variants = 2;
    double temperature = 1.0;
    int max_tokens = 512;
    int max_in_flight = 4;

    void validate() const {
        if (k < 1) throw ConfigError("instance.k must be >= 1");
        if (p_mask <= 0.0 || p_mask > 1.0) throw ConfigError("instance.p_mask must be in (0, 1]");
        for (int m : m_values)
            if (m < 0) throw ConfigError("instance.m_values must be non-negative");
    }
};

namespace detail {

inline std::string example_block(const AbsaSample& sample) {
    return "Sentence: " + sample.text + "\nLabel: " + serialize_labels(sample.labels);
}

}  // namespace detail

inline std::string build_combine_prompt(const AbsaSample& first, const AbsaSample& second,
                                        const std::string& domain, std::size_t k) {
    std::string n = std::to_string(k);
    return "Given 2 " + domain + " example reviews with the labels, please combine them to "
           "generate " + n + " diverse sentences. Label each sentence by extracting the aspect "
           "term(s) and determine their corresponding sentiment polarity.\n"
           "\n"
           "Requirements:\n"
           "- Keep a consistent style and annotation standard with the examples.\n"
           "- Maintain the same format as the examples.\n"
           "- Combine the aspects and meanings of both examples in every generated sentence.\n"
           "\n"
           "Examples:\n"
           "\n"
           "1. " + detail::example_block(first) + "\n"
           "\n"
           "2. " + detail::example_block(second) + "\n"
           "\n" + n + " Diverse Combined Sentences with Labels:\n"
           "\n"
           "1. Sentence:";
}

inline std::string build_paraphrase_prompt(const AbsaSample& sample, const std::string& domain,
                                           std::size_t k) {
    std::string n = std::to_string(k);
    return "Given a " + domain + " example review with the label, please paraphrase it to "
           "generate " + n + " diverse sentences. Label each sentence by extracting the aspect "
           "term(s) and determine their corresponding sentiment polarity.\n"
           "\n"
           "Requirements:\n"
           "- Keep a consistent style and annotation standard with the example.\n"
           "- Maintain the same format as the example.\n"
           "- The meaning of the example sentence should be unchanged.\n"
           "\n"
           "Example:\n"
           "\n" + detail::example_block(sample) + "\n"
           "\n" + n + " Diverse Paraphrased Sentences with Labels:\n"
           "\n"
           "1. Sentence:";
}

inline std::string build_reconstruct_prompt(const MaskedReview& masked, const AbsaSample& exemplar,
                                            const std::string& domain, std::size_t k) {
    std::string n = std::to_string(k);
    return "Given a partially masked " + domain + " review sentence, please reconstruct it to "
           "generate " + n + " diverse sentences. Label each sentence by extracting the aspect "
           "term(s) and determine their corresponding sentiment polarity.\n"
           "\n"
           "Masked Sentence: " + masked.render() + "\n"
           "\n"
           "Requirements:\n"
           "- Keep a consistent style and annotation standard with the example.\n"
           "- Maintain the same format as the example.\n"
           "- The unmasked part of the should be unchanged.\n"
           "\n"
           "Example:\n"
           "\n" + detail::example_block(exemplar) + "\n"
           "\n" + n + " Diverse Reconstructed Sentences with Labels:\n"
           "\n"
           "1. Sentence:";
}

struct KSamplesResult {
    std::vector<AbsaSample> samples;
    std::size_t parse_failures = 0;
};

// Splits a completion into numbered "i. Sentence: ... Label: [...]" blocks.
// The generator usually omits the leading "1. Sentence:" because the prompt
// already ends with it; block one therefore starts at the text head.
inline KSamplesResult parse_k_samples(const std::string& text, std::size_t k,
                                      const Provenance& provenance) {
    std::vector<std::size_t> starts{0};
    std::vector<std::size_t> header_len{0};
    std::size_t search_from = 0;
    for (std::size_t i = 1; i <= k + 1; ++i) {
        std::string marker = std::to_string(i) + ". Sentence:";
        std::size_t pos = text.find(marker, search_from);
        if (pos == std::string::npos) {
            marker = std::to_string(i) + ".Sentence:";
            pos = text.find(marker, search_from);
        }
        if (pos == std::string::npos) continue;
        if (i == 1 && trim(text.substr(0, pos)).empty()) {
            starts[0] = pos;
            header_len[0] = marker.size();
        } else if (pos > starts.back()) {
            starts.push_back(pos);
            header_len.push_back(marker.size());
        }
        search_from = pos + marker.size();
    }

    KSamplesResult result;
    for (std::size_t b = 0; b < starts.size() && result.samples.size() < k; ++b) {
        std::size_t begin = starts[b] + header_len[b];
        std::size_t end = b + 1 < starts.size() ? starts[b + 1] : text.size();
        std::string block = text.substr(begin, end - begin);
        try {
            SentenceLabelBlock parsed = parse_sentence_label_block(block);
            AbsaSample sample;
            sample.text = std::move(parsed.sentence);
            sample.labels = std::move(parsed.labels);
            sample.provenance = provenance;
            sample.provenance.normalized = false;
            result.samples.push_back(std::move(sample));
        } catch (const DataError&) {
            ++result.parse_failures;
        }
    }
    if (result.samples.empty())
        throw DataError("no parseable sample blocks in completion: " + excerpt(text));
    return result;
}

struct InstanceStats {
    std::size_t combination_prompts = 0;
    std::size_t paraphrase_prompts = 0;
    std::size_t reconstruct_prompts = 0;
    std::size_t skipped_variants = 0;
    std::size_t request_failures = 0;
    std::size_t parse_failures = 0;
    std::size_t duplicates = 0;

    std::size_t prompts_issued() const {
        return combination_prompts + paraphrase_prompts + reconstruct_prompts;
    }
};

struct InstanceResult {
    std::vector<AbsaSample> samples;
    InstanceStats stats;
};

// Full instance-driven pass over the seed data: sampled pair combinations,
// one paraphrase per sample, and one reconstruction prompt per masking
// variant. Per-prompt parse failures are tolerated; the aggregate is deduped.
inline InstanceResult synthesize_instance(const Dataset& seed_data, const InstanceConfig& config,
                                          Backend& backend, const RetryPolicy& retry, Rng& rng) {
    if (seed_data.samples.empty()) throw DataError("instance synthesis requires seed data");
    config.validate();
    const std::string domain = seed_data.domain_name();
    const auto& samples = seed_data.samples;

    struct Pending {
        GenerationRequest request;
        Provenance provenance;
    };
    std::vector<Pending> pending;
    std::uint64_t next_id = 1;
    auto enqueue = [&](std::string prompt, Strategy strategy,
                       std::vector<std::string> source_ids) {
        Provenance prov;
        prov.strategy = strategy;
        prov.source_ids = std::move(source_ids);
        prov.request_id = std::to_string(next_id);
        pending.push_back({GenerationRequest{next_id, std::move(prompt), config.temperature,
                                             config.max_tokens},
                           std::move(prov)});
        ++next_id;
    };

    InstanceStats stats;

    // (a) sample combination over unordered pairs, capped at max_combinations
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < samples.size(); ++i)
        for (std::size_t j = i + 1; j < samples.size(); ++j) pairs.emplace_back(i, j);
    if (pairs.size() > config.max_combinations) {
        std::vector<std::pair<std::size_t, std::size_t>> chosen;
        for (std::size_t idx : rng.sample_indices(pairs.size(), config.max_combinations))
            chosen.push_back(pairs[idx]);
        pairs = std::move(chosen);
    }
    for (const auto& [i, j] : pairs) {
        enqueue(build_combine_prompt(samples[i], samples[j], domain, config.k),
                Strategy::combination, {samples[i].id, samples[j].id});
        ++stats.combination_prompts;
    }

    // (b) paraphrase, one per seed sample
    for (const auto& sample : samples) {
        enqueue(build_paraphrase_prompt(sample, domain, config.k), Strategy::paraphrase,
                {sample.id});
        ++stats.paraphrase_prompts;
    }

    // (c) selective reconstruction, one prompt per masking variant
    for (const auto& sample : samples) {
        for (int m : config.m_values) {
            auto masked = context_preservation_mask(sample, m);
            if (!masked) {
                ++stats.skipped_variants;
                continue;
            }
            enqueue(build_reconstruct_prompt(*masked, sample, domain, config.k),
                    Strategy::reconstruct_context, {sample.id});
            ++stats.reconstruct_prompts;
        }
        std::vector<MaskedReview> variants;
        try {
            variants = aspect_preservation_mask(sample, config.p_mask,
                                                config.aspect_preserve_variants, rng);
        } catch (const DataError&) {
            stats.skipped_variants += config.aspect_preserve_variants;
        }
        for (const auto& masked : variants) {
            enqueue(build_reconstruct_prompt(masked, sample, domain, config.k),
                    Strategy::reconstruct_aspect, {sample.id});
            ++stats.reconstruct_prompts;
        }
    }

    std::vector<GenerationRequest> requests;
    requests.reserve(pending.size());
    for (const auto& p : pending) requests.push_back(p.request);

    InstanceResult result;
    result.stats = stats;
    if (requests.empty()) return result;

    BatchResult batch = complete_batch(backend, requests, retry, config.max_in_flight);
    std::vector<AbsaSample> raw;
    for (std::size_t i = 0; i < batch.items.size(); ++i) {
        const BatchItem& item = batch.items[i];
        if (!item.ok()) {
            ++result.stats.request_failures;
            continue;
        }
        // items are sorted by id and ids were assigned densely from 1
        const Provenance& prov = pending[static_cast<std::size_t>(item.id - 1)].provenance;
        try {
            KSamplesResult parsed = parse_k_samples(item.response->text, config.k, prov);
            result.stats.parse_failures += parsed.parse_failures;
            for (auto& sample : parsed.samples) raw.push_back(std::move(sample));
        } catch (const DataError&) {
            ++result.stats.parse_failures;
        }
    }

    std::size_t before = raw.size();
    raw = dedup(raw);
    result.stats.duplicates = before - raw.size();
    for (std::size_t i = 0; i < raw.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "inst-%06zu", i + 1);
        raw[i].id = buf;
    }
    result.samples = std::move(raw);
    return result;
}

}  // namespace absakit
