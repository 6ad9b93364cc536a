#pragma once

#include <functional>
#include <string>
#include <vector>

#include "absakit/labels_fmt.hpp"
#include "absakit/llm.hpp"
#include "absakit/rng.hpp"

namespace absakit {

// Deterministic generation stand-in. Each pipeline prompt family is recognized
// by an anchor string from its template; the response is well-formed for that
// family's expected output format and varies only with hash(prompt, seed).

struct MockScenario {
    std::string marker;
    std::function<std::string(const std::string& prompt, Rng& rng)> respond;
};

using MockScenarioTable = std::vector<MockScenario>;

namespace mockgen {

struct Opinion {
    const char* term;
    Polarity polarity;
};

inline const std::vector<Opinion>& opinion_lexicon() {
    static const std::vector<Opinion> table = {
        {"excellent", Polarity::positive},  {"delicious", Polarity::positive},
        {"friendly", Polarity::positive},   {"reliable", Polarity::positive},
        {"impressive", Polarity::positive}, {"cozy", Polarity::positive},
        {"charming", Polarity::positive},   {"efficient", Polarity::positive},
        {"terrible", Polarity::negative},   {"bland", Polarity::negative},
        {"rude", Polarity::negative},       {"sluggish", Polarity::negative},
        {"overpriced", Polarity::negative}, {"noisy", Polarity::negative},
        {"disappointing", Polarity::negative}, {"flimsy", Polarity::negative},
        {"average", Polarity::neutral},     {"ordinary", Polarity::neutral},
        {"standard", Polarity::neutral},    {"typical", Polarity::neutral},
        {"acceptable", Polarity::neutral},  {"plain", Polarity::neutral},
    };
    return table;
}

inline Polarity polarity_of_opinion(std::string_view opinion, Rng& rng) {
    std::string key = to_lower(trim(opinion));
    for (const auto& entry : opinion_lexicon())
        if (key == entry.term) return entry.polarity;
    switch (rng.uniform(3)) {
        case 0: return Polarity::positive;
        case 1: return Polarity::negative;
        default: return Polarity::neutral;
    }
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[rng.index(v.size())];
}

inline std::string capitalize(std::string s) {
    if (!s.empty()) s[0] = ascii_to_upper(s[0]);
    return s;
}

// Slot value following a literal marker, up to the given terminator.
inline std::string slot_after(const std::string& prompt, std::string_view marker,
                              char terminator) {
    std::size_t pos = prompt.find(marker);
    if (pos == std::string::npos) return {};
    pos += marker.size();
    std::size_t end = prompt.find(terminator, pos);
    if (end == std::string::npos) end = prompt.size();
    return trim(prompt.substr(pos, end - pos));
}

// All "Sentence: ... Label: [...]" exemplar blocks embedded in a prompt.
inline std::vector<SentenceLabelBlock> scan_example_blocks(const std::string& prompt) {
    std::vector<SentenceLabelBlock> blocks;
    std::size_t pos = 0;
    while ((pos = prompt.find("Sentence:", pos)) != std::string::npos) {
        std::size_t start = pos + 9;
        std::size_t label_pos = prompt.find("Label:", start);
        if (label_pos == std::string::npos) break;
        std::size_t next_sentence = prompt.find("Sentence:", start);
        if (next_sentence != std::string::npos && next_sentence < label_pos) {
            pos = next_sentence;
            continue;
        }
        SentenceLabelBlock block;
        block.sentence = squeeze_whitespace(prompt.substr(start, label_pos - start));
        std::size_t list_end = prompt.find('\n', label_pos);
        if (list_end == std::string::npos) list_end = prompt.size();
        try {
            block.labels = parse_label_list(prompt.substr(label_pos + 6, list_end - label_pos - 6));
        } catch (const DataError&) {
            pos = label_pos + 6;
            continue;
        }
        if (!block.sentence.empty()) blocks.push_back(std::move(block));
        pos = list_end;
    }
    return blocks;
}

inline const std::vector<std::string>& filler_phrases() {
    static const std::vector<std::string> v = {
        "for the price",  "during our visit",   "all evening",     "right out of the box",
        "on a busy night", "without any fuss",  "every single time", "despite the hype",
        "after a long wait", "from the first minute",
    };
    return v;
}

inline const std::vector<std::string>& filler_nouns() {
    static const std::vector<std::string> v = {
        "staff", "decor", "value", "portions", "setup", "packaging", "layout", "selection",
    };
    return v;
}

inline std::string opinion_for(Rng& rng, Polarity pol) {
    std::vector<std::string> pool;
    for (const auto& entry : opinion_lexicon())
        if (entry.polarity == pol) pool.push_back(entry.term);
    return pick(rng, pool);
}

// Deliberate slight corruption of a label term (applied to a small fraction of
// mock outputs) so the refinement stage has realistic near-misses to repair.
inline std::string corrupt_term(std::string term, Rng& rng) {
    if (term.size() < 4) return term;
    switch (rng.uniform(3)) {
        case 0: term.pop_back(); break;
        case 1: {
            std::size_t i = 1 + rng.index(term.size() - 2);
            std::swap(term[i], term[i + 1]);
            break;
        }
        default: term.insert(term.size() / 2, 1, term[term.size() / 2]); break;
    }
    return term;
}

inline std::string python_list(const std::vector<std::string>& entries) {
    std::string out = "[";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i) out += ", ";
        out += quote_single(entries[i]);
    }
    out += "]";
    return out;
}

inline std::string respond_subjects(const std::string& prompt, Rng& rng) {
    std::string domain = slot_after(prompt, "Brainstorm a list of ", ' ');
    if (domain.empty()) domain = "venue";
    static const std::vector<std::string> adjectives = {
        "lively", "family-run", "minimalist", "budget-friendly", "upscale", "quirky",
        "no-frills", "modern", "rustic", "compact", "premium", "versatile",
    };
    static const std::vector<std::string> angles = {
        "known for generous portions",   "aimed at late-night crowds",
        "focused on seasonal specials",  "built around an open kitchen",
        "popular with students",         "catering to remote workers",
        "with a rotating weekly menu",   "designed for long battery life",
        "tuned for quiet operation",     "marketed to frequent travelers",
        "with an emphasis on fresh ingredients", "offering adaptive performance settings",
    };
    std::size_t n = 10 + rng.index(6);
    std::vector<std::string> subjects;
    for (std::size_t i = 0; i < n; ++i)
        subjects.push_back("A " + pick(rng, adjectives) + " " + domain + " " + pick(rng, angles));
    return "Here is a brainstormed list:\n" + python_list(subjects);
}

inline std::string respond_categories(const std::string& prompt, Rng& rng) {
    static const std::vector<std::string> restaurant = {
        "food", "service", "ambiance", "price", "drinks", "menu", "location", "staff",
    };
    static const std::vector<std::string> laptop = {
        "performance", "battery", "screen", "keyboard", "software", "design", "price", "support",
    };
    static const std::vector<std::string> generic = {
        "quality", "service", "price", "design", "support", "experience",
    };
    const std::vector<std::string>* pool = &generic;
    if (contains(prompt, "restaurant")) pool = &restaurant;
    else if (contains(prompt, "laptop")) pool = &laptop;
    std::vector<std::string> cats = *pool;
    rng.shuffle(cats);
    cats.resize(std::min(cats.size(), 5 + rng.index(3)));
    return python_list(cats);
}

inline std::string respond_category_filter(const std::string& prompt, Rng&) {
    auto list = extract_first_list(prompt);
    std::vector<std::string> kept;
    if (list) {
        for (const auto& item : list->items)
            if (!item.is_list && !item.str.empty()) kept.push_back(item.str);
    }
    if (kept.size() > 4) kept.resize(kept.size() - 1);  // drop the least representative
    return "Reason: the retained categories are distinct and representative for this domain.\n" +
           python_list(kept);
}

inline std::string respond_aspect_terms(const std::string& prompt, Rng& rng) {
    std::string category = slot_after(prompt, "for the aspect category ", '\n');
    // The slot may be followed by "within the ... domain." on the same line.
    std::size_t cut = category.find(" within the ");
    if (cut != std::string::npos) category = trim(category.substr(0, cut));
    if (category.empty()) category = "general";
    static const std::vector<std::string> qualifiers = {
        "quality", "selection", "speed", "temperature", "texture", "layout", "life", "coverage",
    };
    std::vector<std::string> terms = {category};
    std::size_t extra = 5 + rng.index(3);
    for (std::size_t i = 0; i < extra; ++i) {
        if (rng.bernoulli(0.5)) terms.push_back(category + " " + pick(rng, qualifiers));
        else terms.push_back(pick(rng, qualifiers) + " of " + category);
    }
    return python_list(terms);
}

inline std::string respond_opinion_terms(const std::string&, Rng& rng) {
    std::vector<std::size_t> order(opinion_lexicon().size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t n = 9 + rng.index(4);
    std::vector<std::size_t> chosen(order.begin(),
                                    order.begin() + static_cast<long>(n));
    // every polarity class must appear in the pool
    bool seen[3] = {false, false, false};
    for (std::size_t i : chosen) seen[static_cast<int>(opinion_lexicon()[i].polarity)] = true;
    for (std::size_t i = n; i < order.size(); ++i) {
        int pol = static_cast<int>(opinion_lexicon()[order[i]].polarity);
        if (!seen[pol]) {
            chosen.push_back(order[i]);
            seen[pol] = true;
        }
    }
    std::string out = "[";
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto& entry = opinion_lexicon()[chosen[i]];
        if (i) out += ", ";
        out += std::string("[") + quote_single(entry.term) + ", " +
               quote_single(to_string(entry.polarity)) + "]";
    }
    out += "]";
    return out;
}

inline std::string render_label_line(std::vector<AspectLabel> labels, Rng& rng) {
    for (auto& label : labels)
        if (rng.bernoulli(0.08)) label.term = corrupt_term(label.term, rng);
    return "Label: " + serialize_labels(labels);
}

inline std::string respond_attribute(const std::string& prompt, Rng& rng) {
    std::string aspect = slot_after(prompt, "Mention the aspect term '", '\'');
    std::string opinion = slot_after(prompt, "by the opinion term '", '\'');
    if (aspect.empty()) aspect = "service";
    if (opinion.empty()) opinion = "average";
    Polarity pol = polarity_of_opinion(opinion, rng);

    bool mixed = contains(prompt, "Express mixed sentiments");
    bool implicit = contains(prompt, "Express an implicit sentiment");

    std::vector<AspectLabel> labels{{aspect, pol}};
    std::string sentence;
    if (implicit) {
        sentence = "You can guess how the " + aspect + " turned out " +
                   pick(rng, filler_phrases()) + ".";
    } else if (mixed) {
        Polarity other = pol == Polarity::negative ? Polarity::positive : Polarity::negative;
        std::string noun = pick(rng, filler_nouns());
        sentence = "The " + aspect + " was " + opinion + ", but the " + noun + " seemed " +
                   opinion_for(rng, other) + " " + pick(rng, filler_phrases()) + ".";
        labels.emplace_back(noun, other);
    } else {
        switch (rng.uniform(3)) {
            case 0:
                sentence = "The " + aspect + " was genuinely " + opinion + " " +
                           pick(rng, filler_phrases()) + ".";
                break;
            case 1:
                sentence = capitalize(opinion) + " " + aspect + " made the difference " +
                           pick(rng, filler_phrases()) + ".";
                break;
            default:
                sentence = "I found the " + aspect + " rather " + opinion + ", " +
                           pick(rng, filler_phrases()) + ".";
                break;
        }
    }
    std::string echo = rng.bernoulli(0.2) ? "Sentence: " : "";
    return echo + sentence + "\n" + render_label_line(labels, rng);
}

inline std::string clause_for(const AspectLabel& label, Rng& rng) {
    static const std::vector<std::string> verbs = {"was", "seemed", "felt", "stayed"};
    return "the " + label.term + " " + pick(rng, verbs) + " " +
           opinion_for(rng, label.polarity);
}

inline std::string numbered_blocks(const std::vector<std::string>& blocks) {
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (i == 0) {
            out += blocks[i];  // completes the prompt's trailing "1. Sentence:"
        } else {
            out += "\n\n" + std::to_string(i + 1) + ". Sentence: " + blocks[i];
        }
    }
    return out;
}

inline std::size_t requested_k(const std::string& prompt, std::string_view tail_marker) {
    // "{K} Diverse ... Sentences with Labels:" — K precedes the marker.
    std::size_t pos = prompt.find(tail_marker);
    if (pos == std::string::npos) return 4;
    std::size_t end = pos;
    while (end > 0 && prompt[end - 1] == ' ') --end;
    std::size_t start = end;
    while (start > 0 && ascii_digit(prompt[start - 1])) --start;
    if (start == end) return 4;
    return static_cast<std::size_t>(std::stoul(prompt.substr(start, end - start)));
}

inline std::string sentence_from_labels(const std::vector<AspectLabel>& labels, Rng& rng) {
    static const std::vector<std::string> connectors = {", and ", ", but ", " while ", ", yet "};
    std::string body;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) body += pick(rng, connectors);
        body += clause_for(labels[i], rng);
    }
    return capitalize(body) + " " + pick(rng, filler_phrases()) + ".";
}

inline std::string respond_combine(const std::string& prompt, Rng& rng) {
    auto examples = scan_example_blocks(prompt);
    std::vector<AspectLabel> pool;
    for (const auto& block : examples)
        for (const auto& label : block.labels) {
            bool dup = false;
            for (const auto& have : pool)
                if (fold_key(have.term) == fold_key(label.term) && have.polarity == label.polarity)
                    dup = true;
            if (!dup) pool.push_back(label);
        }
    if (pool.empty()) pool.emplace_back("service", Polarity::neutral);

    std::size_t k = requested_k(prompt, "Diverse Combined Sentences");
    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < k; ++i) {
        std::vector<AspectLabel> labels = pool;
        if (labels.size() > 3) labels.resize(3);
        blocks.push_back(sentence_from_labels(labels, rng) + "\n" +
                         render_label_line(labels, rng));
    }
    return numbered_blocks(blocks);
}

inline std::string respond_paraphrase(const std::string& prompt, Rng& rng) {
    auto examples = scan_example_blocks(prompt);
    std::vector<AspectLabel> labels =
        examples.empty() ? std::vector<AspectLabel>{{"service", Polarity::neutral}}
                         : examples.front().labels;
    if (labels.empty()) labels.emplace_back("service", Polarity::neutral);
    std::size_t k = requested_k(prompt, "Diverse Paraphrased Sentences");
    std::vector<std::string> blocks;
    for (std::size_t i = 0; i < k; ++i)
        blocks.push_back(sentence_from_labels(labels, rng) + "\n" +
                         render_label_line(labels, rng));
    return numbered_blocks(blocks);
}

inline std::string respond_reconstruct(const std::string& prompt, Rng& rng) {
    std::string masked = slot_after(prompt, "Masked Sentence:", '\n');
    auto examples = scan_example_blocks(prompt);
    std::vector<AspectLabel> source_labels =
        examples.empty() ? std::vector<AspectLabel>{} : examples.front().labels;

    std::size_t k = requested_k(prompt, "Diverse Reconstructed Sentences");
    std::vector<std::string> blocks;
    for (std::size_t b = 0; b < k; ++b) {
        std::string noun = pick(rng, filler_nouns());
        Polarity noun_pol = rng.bernoulli(0.5) ? Polarity::positive : Polarity::negative;
        bool noun_used = false;

        std::string sentence;
        std::size_t pos = 0;
        while (pos < masked.size()) {
            std::size_t m = masked.find("<mask>", pos);
            if (m == std::string::npos) {
                sentence += masked.substr(pos);
                break;
            }
            sentence += masked.substr(pos, m - pos);
            if (!noun_used) {
                sentence += "the " + noun + " was " + opinion_for(rng, noun_pol);
                noun_used = true;
            } else {
                sentence += pick(rng, filler_phrases());
            }
            pos = m + 6;
        }
        sentence = squeeze_whitespace(sentence);
        if (sentence.empty()) sentence = "The " + noun + " was " + opinion_for(rng, noun_pol) + ".";
        if (sentence.back() != '.' && sentence.back() != '!' && sentence.back() != '?')
            sentence += ".";
        sentence = capitalize(sentence);

        std::vector<AspectLabel> labels;
        for (const auto& label : source_labels)
            if (contains(to_lower(sentence), to_lower(label.term))) labels.push_back(label);
        if (noun_used) labels.emplace_back(noun, noun_pol);
        if (labels.empty() && !source_labels.empty()) labels.push_back(source_labels.front());
        if (labels.empty()) labels.emplace_back(noun, noun_pol);
        blocks.push_back(sentence + "\n" + render_label_line(labels, rng));
    }
    return numbered_blocks(blocks);
}

}  // namespace mockgen

inline const MockScenarioTable& default_scenarios() {
    static const MockScenarioTable table = {
        {"Please filter the list to retain only distinct", mockgen::respond_category_filter},
        {"descriptions (at least 200)", mockgen::respond_subjects},
        {"aspect categories in", mockgen::respond_categories},
        {"aspect terms for the aspect category", mockgen::respond_aspect_terms},
        {"opinion terms for the aspect category", mockgen::respond_opinion_terms},
        {"Mention the aspect term", mockgen::respond_attribute},
        {"Diverse Combined Sentences with Labels", mockgen::respond_combine},
        {"Diverse Paraphrased Sentences with Labels", mockgen::respond_paraphrase},
        {"Diverse Reconstructed Sentences with Labels", mockgen::respond_reconstruct},
    };
    return table;
}

// Deterministic in (prompt, seed). Unrecognized prompts are an error so tests
// cannot silently accept garbage.
inline std::string mock_complete(const MockScenarioTable& table, const std::string& prompt,
                                 std::uint64_t seed) {
    for (const auto& scenario : table) {
        if (contains(prompt, scenario.marker)) {
            Rng rng(splitmix64(fnv1a64(prompt) ^ seed));
            return scenario.respond(prompt, rng);
        }
    }
    throw BackendError("mock backend does not recognize this prompt: " + excerpt(prompt));
}

class MockBackend : public Backend {
public:
    explicit MockBackend(std::uint64_t seed = 0, const MockScenarioTable* table = nullptr)
        : seed_(seed), table_(table ? *table : default_scenarios()) {}

    GenerationResponse generate(const GenerationRequest& request) override {
        return GenerationResponse{request.id, mock_complete(table_, request.prompt, seed_), name()};
    }

    std::string name() const override { return "mock"; }

private:
    std::uint64_t seed_;
    MockScenarioTable table_;
};

}  // namespace absakit
