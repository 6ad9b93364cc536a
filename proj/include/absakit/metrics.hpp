#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "absakit/core.hpp"
#include "absakit/tokenize.hpp"

namespace absakit {

struct EvalCounts {
    std::size_t gold_pairs = 0;
    std::size_t pred_pairs = 0;
    std::size_t matched_pairs = 0;
    std::size_t matched_aspects = 0;
};

struct EvalReport {
    double pair_precision = 0.0, pair_recall = 0.0, pair_f1 = 0.0;
    double aspect_precision = 0.0, aspect_recall = 0.0, aspect_f1 = 0.0;
    double sentiment_macro_f1 = 0.0;
    std::map<std::string, double> per_class_f1;
    EvalCounts counts;
    bool no_matched_aspects = false;

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"pair", {{"precision", pair_precision}, {"recall", pair_recall}, {"f1", pair_f1}}},
            {"aspect",
             {{"precision", aspect_precision}, {"recall", aspect_recall}, {"f1", aspect_f1}}},
            {"sentiment_macro_f1", sentiment_macro_f1},
            {"per_class_f1", per_class_f1},
            {"counts",
             {{"gold_pairs", counts.gold_pairs},
              {"pred_pairs", counts.pred_pairs},
              {"matched_pairs", counts.matched_pairs},
              {"matched_aspects", counts.matched_aspects}}},
            {"no_matched_aspects", no_matched_aspects}};
    }
};

inline double f1_score(double precision, double recall) {
    return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

// Micro pair/aspect F1 plus sentiment macro-F1 over aspect-matched pairs.
// Pairs match per sample on (case-folded whitespace-normalized term, polarity)
// as a multiset intersection; aspects ignore the polarity. Sentiment macro-F1
// pairs gold and predicted polarities of each matched term in label order and
// averages per-class F1 over the polarity classes present in the matched gold.
inline EvalReport evaluate(const Dataset& pred, const Dataset& gold) {
    if (pred.samples.size() != gold.samples.size())
        throw DataError("pred and gold datasets differ in size");
    std::unordered_map<std::string, const AbsaSample*> gold_by_id;
    for (const auto& sample : gold.samples) gold_by_id[sample.id] = &sample;

    EvalReport report;
    // confusion[gold][pred] over matched aspect instances
    std::size_t confusion[3][3] = {};

    std::unordered_set<std::string> seen_pred_ids;
    for (const auto& p : pred.samples) {
        auto it = gold_by_id.find(p.id);
        if (it == gold_by_id.end())
            throw DataError("prediction id '" + p.id + "' has no gold counterpart");
        if (!seen_pred_ids.insert(p.id).second)
            throw DataError("duplicate prediction id '" + p.id + "'");
        const AbsaSample& g = *it->second;

        report.counts.pred_pairs += p.labels.size();
        report.counts.gold_pairs += g.labels.size();

        std::unordered_map<std::string, std::size_t> gold_pair_count, pred_pair_count;
        std::unordered_map<std::string, std::vector<Polarity>> gold_by_term, pred_by_term;
        for (const auto& label : g.labels) {
            std::string term = fold_key(label.term);
            ++gold_pair_count[term + "\x1f" + to_string(label.polarity)];
            gold_by_term[term].push_back(label.polarity);
        }
        for (const auto& label : p.labels) {
            std::string term = fold_key(label.term);
            ++pred_pair_count[term + "\x1f" + to_string(label.polarity)];
            pred_by_term[term].push_back(label.polarity);
        }
        for (const auto& [key, count] : pred_pair_count) {
            auto git = gold_pair_count.find(key);
            if (git != gold_pair_count.end())
                report.counts.matched_pairs += std::min(count, git->second);
        }
        for (const auto& [term, pred_pols] : pred_by_term) {
            auto git = gold_by_term.find(term);
            if (git == gold_by_term.end()) continue;
            std::size_t m = std::min(pred_pols.size(), git->second.size());
            report.counts.matched_aspects += m;
            for (std::size_t i = 0; i < m; ++i)
                ++confusion[static_cast<int>(git->second[i])][static_cast<int>(pred_pols[i])];
        }
    }

    auto ratio = [](std::size_t num, std::size_t den) {
        return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
    };
    report.pair_precision = ratio(report.counts.matched_pairs, report.counts.pred_pairs);
    report.pair_recall = ratio(report.counts.matched_pairs, report.counts.gold_pairs);
    report.pair_f1 = f1_score(report.pair_precision, report.pair_recall);
    report.aspect_precision = ratio(report.counts.matched_aspects, report.counts.pred_pairs);
    report.aspect_recall = ratio(report.counts.matched_aspects, report.counts.gold_pairs);
    report.aspect_f1 = f1_score(report.aspect_precision, report.aspect_recall);

    if (report.counts.matched_aspects == 0) {
        report.no_matched_aspects = true;
        report.sentiment_macro_f1 = 0.0;
        return report;
    }
    double macro_sum = 0.0;
    std::size_t macro_n = 0;
    for (int c = 0; c < 3; ++c) {
        std::size_t gold_c = confusion[c][0] + confusion[c][1] + confusion[c][2];
        if (gold_c == 0) continue;  // class absent from matched gold
        std::size_t pred_c = confusion[0][c] + confusion[1][c] + confusion[2][c];
        double precision = ratio(confusion[c][c], pred_c);
        double recall = ratio(confusion[c][c], gold_c);
        double f1 = f1_score(precision, recall);
        report.per_class_f1[to_string(static_cast<Polarity>(c))] = f1;
        macro_sum += f1;
        ++macro_n;
    }
    report.sentiment_macro_f1 = macro_n > 0 ? macro_sum / static_cast<double>(macro_n) : 0.0;
    return report;
}

inline double pair_f1(const Dataset& pred, const Dataset& gold) {
    return evaluate(pred, gold).pair_f1;
}

inline double aspect_f1(const Dataset& pred, const Dataset& gold) {
    return evaluate(pred, gold).aspect_f1;
}

inline double sentiment_macro_f1(const Dataset& pred, const Dataset& gold) {
    return evaluate(pred, gold).sentiment_macro_f1;
}

// Unique over total token n-grams across the corpus; a lexical diversity proxy.
inline double distinct_n(const std::vector<AbsaSample>& samples, std::size_t n) {
    if (n < 1) throw DataError("distinct_n requires n >= 1");
    std::unordered_set<std::string> unique;
    std::size_t total = 0;
    for (const auto& sample : samples) {
        std::vector<std::string> tokens = tokenize(sample.text);
        if (tokens.size() < n) continue;
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            std::string gram;
            for (std::size_t j = 0; j < n; ++j) {
                if (j) gram.push_back('\x1f');
                gram += to_lower(tokens[i + j]);
            }
            unique.insert(std::move(gram));
            ++total;
        }
    }
    if (total == 0) throw DataError("corpus has no n-grams of length " + std::to_string(n));
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

}  // namespace absakit
