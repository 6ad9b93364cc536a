#pragma once

#include <optional>
#include <string>
#include <vector>

#include "absakit/common.hpp"

namespace absakit {

// Mask sentinel rendered into prompts and noisy training data.
inline constexpr const char* kMaskSentinel = "<mask>";

enum class Polarity { positive, negative, neutral };

inline const char* to_string(Polarity p) {
    switch (p) {
        case Polarity::positive: return "positive";
        case Polarity::negative: return "negative";
        default: return "neutral";
    }
}

// Case-insensitive; accepts the short forms some generators emit.
inline std::optional<Polarity> parse_polarity(std::string_view s) {
    std::string k = to_lower(trim(s));
    if (k == "positive" || k == "pos") return Polarity::positive;
    if (k == "negative" || k == "neg") return Polarity::negative;
    if (k == "neutral" || k == "neu") return Polarity::neutral;
    return std::nullopt;
}

struct AspectLabel {
    std::string term;  // trimmed, internal whitespace squeezed
    Polarity polarity = Polarity::neutral;

    AspectLabel() = default;
    AspectLabel(std::string_view t, Polarity p) : term(squeeze_whitespace(t)), polarity(p) {}

    bool operator==(const AspectLabel&) const = default;
};

enum class Strategy {
    gold,
    keypoint,
    combination,
    paraphrase,
    reconstruct_context,
    reconstruct_aspect,
    pseudo_labeled,
};

inline const char* to_string(Strategy s) {
    switch (s) {
        case Strategy::gold: return "gold";
        case Strategy::keypoint: return "keypoint";
        case Strategy::combination: return "combination";
        case Strategy::paraphrase: return "paraphrase";
        case Strategy::reconstruct_context: return "reconstruct-context";
        case Strategy::reconstruct_aspect: return "reconstruct-aspect";
        default: return "pseudo-labeled";
    }
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "gold") return Strategy::gold;
    if (s == "keypoint") return Strategy::keypoint;
    if (s == "combination") return Strategy::combination;
    if (s == "paraphrase") return Strategy::paraphrase;
    if (s == "reconstruct-context") return Strategy::reconstruct_context;
    if (s == "reconstruct-aspect") return Strategy::reconstruct_aspect;
    if (s == "pseudo-labeled") return Strategy::pseudo_labeled;
    return std::nullopt;
}

// Expected source id count per strategy; -1 means unconstrained.
inline int expected_source_ids(Strategy s) {
    switch (s) {
        case Strategy::gold:
        case Strategy::keypoint: return 0;
        case Strategy::combination: return 2;
        case Strategy::paraphrase:
        case Strategy::reconstruct_context:
        case Strategy::reconstruct_aspect:
        case Strategy::pseudo_labeled: return 1;
    }
    return -1;
}

struct Provenance {
    Strategy strategy = Strategy::gold;
    std::vector<std::string> source_ids;
    std::optional<std::string> request_id;
    bool normalized = false;

    bool operator==(const Provenance&) const = default;

    void validate() const {
        int expect = expected_source_ids(strategy);
        if (expect >= 0 && static_cast<int>(source_ids.size()) != expect)
            throw DataError(std::string("provenance ") + to_string(strategy) + " expects " +
                            std::to_string(expect) + " source ids, got " +
                            std::to_string(source_ids.size()));
    }
};

struct AbsaSample {
    std::string id;
    std::string text;
    std::vector<AspectLabel> labels;
    Provenance provenance;

    bool operator==(const AbsaSample&) const = default;
};

enum class Domain { restaurant, laptop, other };

struct Dataset {
    std::string name;
    Domain domain = Domain::other;
    std::string domain_text;  // used when domain == other; otherwise derived
    std::vector<AbsaSample> samples;

    bool operator==(const Dataset&) const = default;

    std::string domain_name() const {
        switch (domain) {
            case Domain::restaurant: return "restaurant";
            case Domain::laptop: return "laptop";
            default: return domain_text.empty() ? "other" : domain_text;
        }
    }

    static Domain parse_domain(std::string_view s) {
        if (s == "restaurant") return Domain::restaurant;
        if (s == "laptop") return Domain::laptop;
        return Domain::other;
    }
};

}  // namespace absakit
