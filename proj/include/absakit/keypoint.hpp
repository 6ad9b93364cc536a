#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "absakit/corpus.hpp"
#include "absakit/labels_fmt.hpp"
#include "absakit/llm.hpp"
#include "absakit/rng.hpp"

namespace absakit {

enum class SentimentPattern { consistent, mixed, implicit };

inline const char* sentiment_expression(SentimentPattern p) {
    switch (p) {
        case SentimentPattern::consistent: return "a consistent sentiment";
        case SentimentPattern::mixed: return "mixed sentiments";
        default: return "an implicit sentiment";
    }
}

struct OpinionTerm {
    std::string term;
    Polarity polarity = Polarity::neutral;

    bool operator==(const OpinionTerm&) const = default;
};

// Brainstormed candidate pools for the four review attributes: subjects and
// categories first, then aspect/opinion terms per category (coarse to fine).
struct AttributePool {
    std::string domain;
    std::vector<std::string> review_subjects;
    std::vector<std::string> aspect_categories;
    std::map<std::string, std::vector<std::string>> aspect_terms;
    std::map<std::string, std::vector<OpinionTerm>> opinion_terms;

    void validate() const {
        if (review_subjects.empty()) throw DataError("attribute pool has no review subjects");
        if (aspect_categories.empty()) throw DataError("attribute pool has no aspect categories");
        for (const auto& cat : aspect_categories) {
            auto at = aspect_terms.find(cat);
            if (at == aspect_terms.end() || at->second.empty())
                throw DataError("attribute pool has no aspect terms for category '" + cat + "'");
            auto ot = opinion_terms.find(cat);
            if (ot == opinion_terms.end() || ot->second.empty())
                throw DataError("attribute pool has no opinion terms for category '" + cat + "'");
        }
        for (const auto& [cat, _] : aspect_terms)
            if (std::find(aspect_categories.begin(), aspect_categories.end(), cat) ==
                aspect_categories.end())
                throw DataError("aspect_terms key '" + cat + "' is not a known category");
        for (const auto& [cat, _] : opinion_terms)
            if (std::find(aspect_categories.begin(), aspect_categories.end(), cat) ==
                aspect_categories.end())
                throw DataError("opinion_terms key '" + cat + "' is not a known category");
    }

    nlohmann::json to_json() const {
        nlohmann::json at = nlohmann::json::object();
        for (const auto& [cat, terms] : aspect_terms) at[cat] = terms;
        nlohmann::json ot = nlohmann::json::object();
        for (const auto& [cat, opinions] : opinion_terms) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& o : opinions) rows.push_back({o.term, to_string(o.polarity)});
            ot[cat] = rows;
        }
        return nlohmann::json{{"domain", domain},
                              {"review_subjects", review_subjects},
                              {"aspect_categories", aspect_categories},
                              {"aspect_terms", at},
                              {"opinion_terms", ot}};
    }

    static AttributePool from_json(const nlohmann::json& j) {
        AttributePool pool;
        pool.domain = j.at("domain").get<std::string>();
        pool.review_subjects = j.at("review_subjects").get<std::vector<std::string>>();
        pool.aspect_categories = j.at("aspect_categories").get<std::vector<std::string>>();
        for (const auto& [cat, terms] : j.at("aspect_terms").items())
            pool.aspect_terms[cat] = terms.get<std::vector<std::string>>();
        for (const auto& [cat, rows] : j.at("opinion_terms").items()) {
            std::vector<OpinionTerm> opinions;
            for (const auto& row : rows) {
                auto pol = parse_polarity(row.at(1).get<std::string>());
                if (!pol) throw DataError("pool opinion with unknown polarity");
                opinions.push_back({row.at(0).get<std::string>(), *pol});
            }
            pool.opinion_terms[cat] = std::move(opinions);
        }
        pool.validate();
        return pool;
    }
};

inline AttributePool load_pool(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open pool file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed pool file " + path.string() + ": " + e.what());
    }
    return AttributePool::from_json(j);
}

inline void save_pool(const AttributePool& pool, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write pool file: " + path.string());
    out << pool.to_json().dump(2) << '\n';
}

// One sampled generation condition: a single (subject, category, aspect,
// opinion) tuple plus the two control attributes (style exemplars, pattern).
struct AttributeSet {
    std::string review_subject;
    std::string aspect_category;
    std::string aspect_term;
    OpinionTerm opinion_term;
    SentimentPattern sentiment_pattern = SentimentPattern::consistent;
    std::vector<AbsaSample> style_exemplars;
};

enum class PoolKind { subjects, categories, aspects, opinions };

inline std::string build_brainstorm_prompt(const std::string& domain, PoolKind kind,
                                           const std::string& category = {}) {
    switch (kind) {
        case PoolKind::subjects:
            return "Brainstorm a list of " + domain +
                   " descriptions (at least 200).\n"
                   "\n"
                   "Please adhere to the following guidelines:\n"
                   "- Names are not required.\n"
                   "- Summarize the core features and specialties in a short, neutral sentence.\n"
                   "\n"
                   "Your output should be a Python list of strings, with each element being a "
                   "description.";
        case PoolKind::categories:
            return "Brainstorm a list of commonly used aspect categories in " + domain +
                   " reviews.\n"
                   "\n"
                   "Please adhere to the following guidelines:\n"
                   "- Aspect categories should cover various potential aspects that opinions can "
                   "be expressed about within the corresponding domain.\n"
                   "- Aspect categories are coarse-grained overviews, not including specific "
                   "things.\n"
                   "\n"
                   "Your output should be a Python list of strings, with each element being a "
                   "brief word denoting an aspect category.";
        case PoolKind::aspects:
            if (category.empty()) throw DataError("aspect brainstorm requires a category");
            return "Brainstorm a list of commonly used aspect terms for the aspect category " +
                   category + " within the " + domain +
                   " domain.\n"
                   "\n"
                   "Please adhere to the following guidelines:\n"
                   "- Aspect terms should cover various potential things that opinions can be "
                   "expressed about within the corresponding category.\n"
                   "- Aspect terms are fine-grained and concrete things.\n"
                   "- Aspect terms are single or multiword terms naming particular aspects of "
                   "the target entity.\n"
                   "\n"
                   "Your output should be a Python list of strings, with each element being an "
                   "aspect term.";
        case PoolKind::opinions:
            if (category.empty()) throw DataError("opinion brainstorm requires a category");
            return "Brainstorm a list of commonly used opinion terms for the aspect category " +
                   category + " within the " + domain +
                   " domain.\n"
                   "Please adhere to the following guidelines:\n"
                   "- Opinion terms refer to the expression carrying subjective emotions.\n"
                   "- Provide diverse words and phrases covering positive, negative, and neutral "
                   "sentiments.\n"
                   "\n"
                   "Your output should be a Python list of lists, with each element being an "
                   "[opinion, sentiment] pair.";
    }
    throw DataError("unknown brainstorm kind");
}

// Follow-up turn after the category brainstorm.
inline std::string build_category_filter_prompt(const std::string& domain) {
    return "Please filter the list to retain only distinct and representative aspect categories "
           "within the " +
           domain + " domain. Output the reason for selection along with the filtered Python list.";
}

// Entries of the first bracketed list in the response: trimmed, empties
// discarded, duplicates removed case-insensitively.
inline std::vector<std::string> parse_term_list(const std::string& text) {
    auto list = extract_first_list(text);
    if (!list) throw DataError("no bracketed list found near: " + excerpt(text));
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : list->items) {
        if (item.is_list) continue;
        std::string term = squeeze_whitespace(item.str);
        if (term.empty()) continue;
        if (seen.insert(fold_key(term)).second) out.push_back(term);
    }
    return out;
}

// [term, sentiment] pairs; entries with an unmappable sentiment are dropped
// and counted rather than failing the whole pool.
inline std::vector<OpinionTerm> parse_opinion_list(const std::string& text,
                                                   std::size_t* dropped = nullptr) {
    auto list = extract_first_list(text);
    if (!list) throw DataError("no bracketed list found near: " + excerpt(text));
    std::vector<OpinionTerm> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : list->items) {
        if (!item.is_list || item.items.size() != 2 || item.items[0].is_list ||
            item.items[1].is_list) {
            if (dropped) ++*dropped;
            continue;
        }
        std::string term = squeeze_whitespace(item.items[0].str);
        auto pol = parse_polarity(item.items[1].str);
        if (term.empty() || !pol) {
            if (dropped) ++*dropped;
            continue;
        }
        std::string key = fold_key(term) + "\t" + to_string(*pol);
        if (seen.insert(key).second) out.push_back({term, *pol});
    }
    return out;
}

struct BrainstormOptions {
    std::filesystem::path cache_dir;  // empty disables the response cache
    double temperature = 1.0;
    int max_tokens = 2048;
    int max_in_flight = 4;
};

namespace detail {

inline std::string cache_slug(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (ascii_alnum(c)) out.push_back(ascii_to_lower(c));
        else out.push_back('_');
    }
    return out;
}

inline std::optional<std::string> cache_read(const std::filesystem::path& dir,
                                             const std::string& key) {
    if (dir.empty()) return std::nullopt;
    std::ifstream in(dir / (key + ".txt"), std::ios::binary);
    if (!in) return std::nullopt;
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

inline void cache_write(const std::filesystem::path& dir, const std::string& key,
                        const std::string& text) {
    if (dir.empty()) return;
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (key + ".txt"), std::ios::binary);
    out << text;
}

}  // namespace detail

// Coarse-to-fine brainstorm. Any failed request aborts: synthesis can tolerate
// dropped generations, but the pool has to be complete. Raw responses are
// cached per (domain, kind, category) so repeated runs skip paid calls.
inline AttributePool brainstorm_pool(const std::string& domain, Backend& backend,
                                     const RetryPolicy& retry, const BrainstormOptions& opts = {}) {
    std::uint64_t next_id = 1;
    auto ask = [&](const std::string& prompt, const std::string& key) {
        if (auto hit = detail::cache_read(opts.cache_dir, key)) return *hit;
        GenerationRequest request{next_id++, prompt, opts.temperature, opts.max_tokens};
        std::string text = complete(backend, request, retry).text;
        detail::cache_write(opts.cache_dir, key, text);
        return text;
    };

    AttributePool pool;
    pool.domain = domain;
    const std::string dslug = detail::cache_slug(domain);

    pool.review_subjects =
        parse_term_list(ask(build_brainstorm_prompt(domain, PoolKind::subjects),
                            dslug + "__subjects"));

    std::string raw_categories = ask(build_brainstorm_prompt(domain, PoolKind::categories),
                                     dslug + "__categories");
    std::string filter_prompt =
        raw_categories + "\n\n" + build_category_filter_prompt(domain);
    pool.aspect_categories =
        parse_term_list(ask(filter_prompt, dslug + "__categories_filtered"));
    if (pool.aspect_categories.empty()) throw DataError("brainstorm produced no aspect categories");

    for (const auto& category : pool.aspect_categories) {
        const std::string cslug = detail::cache_slug(category);
        pool.aspect_terms[category] =
            parse_term_list(ask(build_brainstorm_prompt(domain, PoolKind::aspects, category),
                                dslug + "__aspects__" + cslug));
        pool.opinion_terms[category] =
            parse_opinion_list(ask(build_brainstorm_prompt(domain, PoolKind::opinions, category),
                                   dslug + "__opinions__" + cslug));
    }
    pool.validate();
    return pool;
}

// Uniform draws from the pool lists plus k distinct style exemplars from the
// seed data. Draw order is fixed; the result is a pure function of rng state.
inline AttributeSet sample_attribute_set(const AttributePool& pool, const Dataset& seed_data,
                                         std::size_t k_exemplars, Rng& rng) {
    if (seed_data.samples.size() < k_exemplars)
        throw DataError("seed data has fewer samples than k_exemplars");
    AttributeSet set;
    set.review_subject = pool.review_subjects[rng.index(pool.review_subjects.size())];
    set.aspect_category = pool.aspect_categories[rng.index(pool.aspect_categories.size())];
    const auto& aspects = pool.aspect_terms.at(set.aspect_category);
    const auto& opinions = pool.opinion_terms.at(set.aspect_category);
    set.aspect_term = aspects[rng.index(aspects.size())];
    set.opinion_term = opinions[rng.index(opinions.size())];
    set.sentiment_pattern = static_cast<SentimentPattern>(rng.uniform(3));
    for (std::size_t i : rng.sample_indices(seed_data.samples.size(), k_exemplars))
        set.style_exemplars.push_back(seed_data.samples[i]);
    return set;
}

inline std::string build_attribute_prompt(const AttributeSet& set, const std::string& domain) {
    std::string prompt =
        "Write a review sentence for the " + domain + ": " + set.review_subject +
        " Label the sentence by extracting the aspect term(s) and identifying their "
        "corresponding sentiment polarity (positive, negative, or neutral).\n"
        "\n"
        "Requirements:\n"
        "- Keep a consistent style and annotation standard with the examples.\n"
        "- Mention the aspect term '" + set.aspect_term + "'.\n"
        "- Describe " + set.aspect_category + " by the opinion term '" + set.opinion_term.term +
        "'.\n"
        "- Express " + std::string(sentiment_expression(set.sentiment_pattern)) +
        " across aspects.\n"
        "\n"
        "Here are some examples:\n";
    for (const auto& exemplar : set.style_exemplars) {
        prompt += "\nSentence: " + exemplar.text + "\nLabel: " +
                  serialize_labels(exemplar.labels) + "\n";
    }
    prompt += "\nSentence:";
    return prompt;
}

inline AbsaSample parse_generated_sample(const std::string& text, Provenance provenance) {
    SentenceLabelBlock block = parse_sentence_label_block(text);
    AbsaSample sample;
    sample.text = std::move(block.sentence);
    sample.labels = std::move(block.labels);
    sample.provenance = std::move(provenance);
    sample.provenance.normalized = false;
    return sample;
}

struct SynthStats {
    std::size_t requests_issued = 0;
    std::size_t request_failures = 0;
    std::size_t parse_failures = 0;
    std::size_t duplicates = 0;
};

struct KeypointOptions {
    std::size_t n_target = 0;
    std::size_t k_exemplars = 4;
    double budget_factor = 1.5;  // request budget = ceil(budget_factor * n_target)
    double temperature = 1.0;
    int max_tokens = 256;
    int max_in_flight = 4;
    std::size_t batch_size = 32;
};

struct SynthResult {
    std::vector<AbsaSample> samples;
    SynthStats stats;
};

// Attribute-prompt synthesis loop: sample a set, build the prompt, batch the
// generation, parse. Unparseable or duplicate responses are skipped and
// counted; the loop stops at n_target unique samples or when the request
// budget runs out. Less than half the target by then is an error.
inline SynthResult synthesize_keypoint(const AttributePool& pool, const Dataset& seed_data,
                                       const KeypointOptions& opts, Backend& backend,
                                       const RetryPolicy& retry, Rng& rng) {
    if (opts.n_target < 1) throw DataError("keypoint n_target must be >= 1");
    pool.validate();

    const std::string domain = pool.domain;
    const auto budget = static_cast<std::size_t>(
        std::ceil(opts.budget_factor * static_cast<double>(opts.n_target)));

    SynthResult result;
    std::unordered_set<std::string> seen;
    std::uint64_t next_id = 1;

    while (result.samples.size() < opts.n_target && result.stats.requests_issued < budget) {
        std::size_t needed = opts.n_target - result.samples.size();
        std::size_t n_batch = std::min({opts.batch_size, budget - result.stats.requests_issued,
                                        std::max<std::size_t>(needed, 1)});
        std::vector<GenerationRequest> requests;
        requests.reserve(n_batch);
        for (std::size_t i = 0; i < n_batch; ++i) {
            AttributeSet set = sample_attribute_set(pool, seed_data, opts.k_exemplars, rng);
            requests.push_back(GenerationRequest{next_id++, build_attribute_prompt(set, domain),
                                                 opts.temperature, opts.max_tokens});
        }
        result.stats.requests_issued += n_batch;

        BatchResult batch = complete_batch(backend, requests, retry, opts.max_in_flight);
        for (const auto& item : batch.items) {
            if (result.samples.size() >= opts.n_target) break;
            if (!item.ok()) {
                ++result.stats.request_failures;
                continue;
            }
            Provenance prov;
            prov.strategy = Strategy::keypoint;
            prov.request_id = std::to_string(item.id);
            AbsaSample sample;
            try {
                sample = parse_generated_sample(item.response->text, prov);
            } catch (const DataError&) {
                ++result.stats.parse_failures;
                continue;
            }
            std::string key = to_lower(canonical_join(tokenize(sample.text)));
            if (!seen.insert(key).second) {
                ++result.stats.duplicates;
                continue;
            }
            char buf[16];
            std::snprintf(buf, sizeof buf, "kp-%06zu", result.samples.size() + 1);
            sample.id = buf;
            result.samples.push_back(std::move(sample));
        }
    }

    if (result.samples.size() * 2 < opts.n_target)
        throw DataError("keypoint synthesis yield too low: " +
                        std::to_string(result.samples.size()) + "/" +
                        std::to_string(opts.n_target) + " after " +
                        std::to_string(result.stats.requests_issued) + " requests (" +
                        std::to_string(result.stats.parse_failures) + " parse failures)");
    return result;
}

}  // namespace absakit
