#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>
#include <vector>

#include "absakit/core.hpp"
#include "absakit/rng.hpp"
#include "absakit/spans.hpp"
#include "absakit/tokenize.hpp"

namespace absakit {

struct FewShotSplit {
    Dataset train;
    Dataset dev;
};

// Uniform few-shot draw: floor(shot_fraction * N) samples, of which
// floor(dev_fraction * k) become the dev carve-out. Deterministic per seed.
inline FewShotSplit split_few_shot(const Dataset& dataset, double shot_fraction,
                                   double dev_fraction, std::uint64_t seed) {
    if (dataset.samples.empty()) throw DataError("cannot split an empty dataset");
    if (shot_fraction <= 0.0 || shot_fraction > 1.0)
        throw DataError("shot_fraction must be in (0, 1]");
    if (dev_fraction < 0.0 || dev_fraction >= 1.0)
        throw DataError("dev_fraction must be in [0, 1)");

    const std::size_t n = dataset.samples.size();
    const auto k = static_cast<std::size_t>(std::floor(shot_fraction * static_cast<double>(n)));
    const auto d = static_cast<std::size_t>(std::floor(dev_fraction * static_cast<double>(k)));

    Rng rng(seed);
    std::vector<std::size_t> drawn = rng.sample_indices(n, k);
    std::vector<std::size_t> dev_idx(drawn.begin(), drawn.begin() + static_cast<long>(d));
    std::vector<std::size_t> train_idx(drawn.begin() + static_cast<long>(d), drawn.end());
    std::sort(dev_idx.begin(), dev_idx.end());
    std::sort(train_idx.begin(), train_idx.end());

    FewShotSplit split;
    split.train.name = dataset.name + "-train";
    split.dev.name = dataset.name + "-dev";
    split.train.domain = split.dev.domain = dataset.domain;
    split.train.domain_text = split.dev.domain_text = dataset.domain_text;
    for (std::size_t i : train_idx) split.train.samples.push_back(dataset.samples[i]);
    for (std::size_t i : dev_idx) split.dev.samples.push_back(dataset.samples[i]);
    if (split.train.samples.empty())
        throw DataError("few-shot split produced an empty training set");
    return split;
}

// Seed data for synthesis: samples with at least one aspect term present as a
// contiguous token sub-sequence of the text (case-insensitive).
inline Dataset select_seed_data(const Dataset& dataset) {
    Dataset out;
    out.name = dataset.name + "-seed";
    out.domain = dataset.domain;
    out.domain_text = dataset.domain_text;
    for (const auto& sample : dataset.samples) {
        std::vector<std::string> tokens = tokenize(sample.text);
        bool explicit_aspect = false;
        for (const auto& label : sample.labels) {
            if (find_exact_span(tokens, label.term, false)) {
                explicit_aspect = true;
                break;
            }
        }
        if (explicit_aspect) out.samples.push_back(sample);
    }
    return out;
}

// First occurrence wins, keyed on the case-folded canonical token form so
// punctuation spacing and letter case do not create distinct entries.
inline std::vector<AbsaSample> dedup(const std::vector<AbsaSample>& samples) {
    std::vector<AbsaSample> out;
    std::unordered_set<std::string> seen;
    for (const auto& sample : samples) {
        std::string key = to_lower(canonical_join(tokenize(sample.text)));
        if (seen.insert(key).second) out.push_back(sample);
    }
    return out;
}

}  // namespace absakit
