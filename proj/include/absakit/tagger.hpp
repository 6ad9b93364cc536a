#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "absakit/core.hpp"
#include "absakit/metrics.hpp"
#include "absakit/rng.hpp"
#include "absakit/spans.hpp"
#include "absakit/tokenize.hpp"

namespace absakit {

enum class Tag : std::uint8_t { O, B_POS, I_POS, B_NEG, I_NEG, B_NEU, I_NEU };
inline constexpr int kNumTags = 7;

inline const char* to_string(Tag t) {
    static const char* names[kNumTags] = {"O", "B-POS", "I-POS", "B-NEG", "I-NEG", "B-NEU",
                                          "I-NEU"};
    return names[static_cast<int>(t)];
}

inline std::optional<Tag> parse_tag(std::string_view s) {
    for (int i = 0; i < kNumTags; ++i)
        if (s == to_string(static_cast<Tag>(i))) return static_cast<Tag>(i);
    return std::nullopt;
}

inline bool is_begin(Tag t) {
    return t == Tag::B_POS || t == Tag::B_NEG || t == Tag::B_NEU;
}
inline bool is_inside(Tag t) {
    return t == Tag::I_POS || t == Tag::I_NEG || t == Tag::I_NEU;
}
inline Polarity tag_polarity(Tag t) {
    switch (t) {
        case Tag::B_POS: case Tag::I_POS: return Polarity::positive;
        case Tag::B_NEG: case Tag::I_NEG: return Polarity::negative;
        default: return Polarity::neutral;
    }
}
inline Tag begin_tag(Polarity p) {
    switch (p) {
        case Polarity::positive: return Tag::B_POS;
        case Polarity::negative: return Tag::B_NEG;
        default: return Tag::B_NEU;
    }
}
inline Tag inside_tag(Polarity p) {
    switch (p) {
        case Polarity::positive: return Tag::I_POS;
        case Polarity::negative: return Tag::I_NEG;
        default: return Tag::I_NEU;
    }
}

// No I-x at sequence start or after O; no I-x after a run of a different class.
inline bool is_well_formed(const std::vector<Tag>& tags) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (!is_inside(tags[i])) continue;
        if (i == 0) return false;
        Tag prev = tags[i - 1];
        if (prev == Tag::O) return false;
        if (tag_polarity(prev) != tag_polarity(tags[i])) return false;
    }
    return true;
}

struct TrainExample {
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
};

struct EncodeResult {
    TrainExample example;
    std::size_t skipped_labels = 0;
};

// Span-to-tag conversion. Labels claim their leftmost free occurrence in
// order; a label whose span tokens are already taken is skipped and counted.
inline EncodeResult encode_bio(const AbsaSample& sample) {
    EncodeResult result;
    result.example.tokens = tokenize(sample.text);
    result.example.tags.assign(result.example.tokens.size(), Tag::O);
    ClaimedSpans claims = claim_label_spans(result.example.tokens, sample.labels);
    result.skipped_labels = claims.skipped;
    for (std::size_t li = 0; li < sample.labels.size(); ++li) {
        const auto& span = claims.spans[li];
        if (!span) continue;
        Polarity pol = sample.labels[li].polarity;
        result.example.tags[span->begin] = begin_tag(pol);
        for (std::size_t i = span->begin + 1; i < span->end; ++i)
            result.example.tags[i] = inside_tag(pol);
    }
    return result;
}

struct DecodeResult {
    std::vector<AspectLabel> labels;
    std::size_t repairs = 0;  // headless I-x treated as B-x
};

inline DecodeResult decode_bio(const std::vector<std::string>& tokens,
                               const std::vector<Tag>& tags) {
    if (tokens.size() != tags.size())
        throw DataError("decode_bio: token/tag length mismatch (" +
                        std::to_string(tokens.size()) + " vs " + std::to_string(tags.size()) + ")");
    DecodeResult result;
    std::size_t run_start = 0;
    bool in_run = false;
    Polarity run_pol = Polarity::neutral;
    auto close_run = [&](std::size_t end) {
        if (!in_run) return;
        result.labels.emplace_back(join_tokens(tokens, run_start, end), run_pol);
        in_run = false;
    };
    for (std::size_t i = 0; i < tags.size(); ++i) {
        Tag t = tags[i];
        if (t == Tag::O) {
            close_run(i);
        } else if (is_begin(t)) {
            close_run(i);
            in_run = true;
            run_start = i;
            run_pol = tag_polarity(t);
        } else {  // inside
            if (in_run && tag_polarity(t) == run_pol) continue;
            close_run(i);
            ++result.repairs;
            in_run = true;
            run_start = i;
            run_pol = tag_polarity(t);
        }
    }
    close_run(tags.size());
    return result;
}

// Greedy left-to-right averaged perceptron. Training updates raw weights;
// prediction scores with the running average, which is maintained lazily via
// per-cell timestamps.
class TaggerModel {
public:
    bool trained() const { return steps_ > 0 || !table_.empty(); }
    std::uint64_t steps() const { return steps_; }
    std::size_t feature_count() const { return table_.size(); }

    void train_epoch(const std::vector<const TrainExample*>& order) {
        std::vector<std::string> features;
        for (const TrainExample* example : order) {
            Tag prev_pred = Tag::O;
            bool at_start = true;
            for (std::size_t i = 0; i < example->tokens.size(); ++i) {
                ++steps_;
                extract_features(example->tokens, i, at_start, prev_pred, features);
                Tag pred = score_argmax(features, /*averaged=*/false);
                Tag gold = example->tags[i];
                if (pred != gold) {
                    for (const auto& f : features) {
                        update(f, gold, +1.0);
                        update(f, pred, -1.0);
                    }
                }
                prev_pred = pred;
                at_start = false;
            }
        }
    }

    std::vector<Tag> decode(const std::vector<std::string>& tokens, bool averaged = true) const {
        std::vector<Tag> tags;
        tags.reserve(tokens.size());
        std::vector<std::string> features;
        Tag prev = Tag::O;
        bool at_start = true;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            extract_features(tokens, i, at_start, prev, features);
            Tag t = score_argmax(features, averaged);
            tags.push_back(t);
            prev = t;
            at_start = false;
        }
        return tags;
    }

    // Flat snapshot of the averaged weights, sorted for reproducible output.
    std::map<std::string, std::array<double, kNumTags>> averaged_weights() const {
        std::map<std::string, std::array<double, kNumTags>> out;
        for (const auto& [feature, cells] : table_) {
            std::array<double, kNumTags> row{};
            bool any = false;
            for (int t = 0; t < kNumTags; ++t) {
                row[t] = averaged_weight(cells[t]);
                if (row[t] != 0.0) any = true;
            }
            if (any) out[feature] = row;
        }
        return out;
    }

    void save(const std::filesystem::path& path) const {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw DataError("cannot write model file: " + path.string());
        auto weights = averaged_weights();
        out << "absakit-tagger v1\n";
        out << "steps\t" << steps_ << "\n";
        out << "features\t" << weights.size() << "\n";
        char buf[64];
        for (const auto& [feature, row] : weights) {
            for (int t = 0; t < kNumTags; ++t) {
                if (row[t] == 0.0) continue;
                std::snprintf(buf, sizeof buf, "%.17g", row[t]);
                out << feature << '\t' << to_string(static_cast<Tag>(t)) << '\t' << buf << '\n';
            }
        }
        if (!out) throw DataError("I/O failure while writing: " + path.string());
    }

    static TaggerModel load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw DataError("cannot open model file: " + path.string());
        std::string line;
        if (!std::getline(in, line) || line != "absakit-tagger v1")
            throw DataError("unrecognized model file header in " + path.string());
        TaggerModel model;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (starts_with(line, "steps\t") || starts_with(line, "features\t")) continue;
            std::size_t tab1 = line.find('\t');
            std::size_t tab2 = line.find('\t', tab1 + 1);
            if (tab1 == std::string::npos || tab2 == std::string::npos)
                throw DataError("malformed model line: " + line);
            std::string feature = line.substr(0, tab1);
            std::string second = line.substr(tab1 + 1, tab2 - tab1 - 1);
            auto tag = parse_tag(second);
            if (!tag) throw DataError("unknown tag in model file: " + second);
            // Loaded weights are the finalized averages; averaging state resets.
            model.table_[feature][static_cast<int>(*tag)].weight =
                std::stod(line.substr(tab2 + 1));
        }
        return model;
    }

private:
    struct Cell {
        double weight = 0.0;
        double total = 0.0;
        std::uint64_t stamp = 0;
    };

    double averaged_weight(const Cell& cell) const {
        if (steps_ == 0) return cell.weight;
        return (cell.total + cell.weight * static_cast<double>(steps_ - cell.stamp)) /
               static_cast<double>(steps_);
    }

    void update(const std::string& feature, Tag tag, double delta) {
        Cell& cell = table_[feature][static_cast<int>(tag)];
        cell.total += cell.weight * static_cast<double>(steps_ - cell.stamp);
        cell.stamp = steps_;
        cell.weight += delta;
    }

    Tag score_argmax(const std::vector<std::string>& features, bool averaged) const {
        std::array<double, kNumTags> scores{};
        for (const auto& f : features) {
            auto it = table_.find(f);
            if (it == table_.end()) continue;
            for (int t = 0; t < kNumTags; ++t)
                scores[t] += averaged ? averaged_weight(it->second[t]) : it->second[t].weight;
        }
        int best = 0;
        for (int t = 1; t < kNumTags; ++t)
            if (scores[t] > scores[best]) best = t;
        return static_cast<Tag>(best);
    }

    static void extract_features(const std::vector<std::string>& tokens, std::size_t i,
                                 bool at_start, Tag prev_tag,
                                 std::vector<std::string>& out) {
        out.clear();
        const std::string& word = tokens[i];
        std::string lower = to_lower(word);
        out.push_back("w=" + word);
        out.push_back("lw=" + lower);
        for (std::size_t n = 1; n <= 3 && n <= lower.size(); ++n) {
            out.push_back("p" + std::to_string(n) + "=" + lower.substr(0, n));
            out.push_back("s" + std::to_string(n) + "=" + lower.substr(lower.size() - n));
        }
        out.push_back("prev=" + (i > 0 ? to_lower(tokens[i - 1]) : std::string("<s>")));
        out.push_back("next=" +
                      (i + 1 < tokens.size() ? to_lower(tokens[i + 1]) : std::string("</s>")));
        out.push_back(std::string("ptag=") + (at_start ? "<s>" : to_string(prev_tag)));
        out.push_back(std::string("shape=") + shape_of(word));
    }

    static const char* shape_of(const std::string& word) {
        if (word.empty()) return "other";
        bool all_digit = true, all_punct = true;
        for (unsigned char c : word) {
            if (!ascii_digit(c)) all_digit = false;
            if (ascii_alnum(c)) all_punct = false;
        }
        if (all_digit) return "digit";
        if (all_punct) return "punct";
        if (ascii_upper(word[0])) return "cap";
        if (ascii_lower_c(word[0])) return "lower";
        return "other";
    }

    std::unordered_map<std::string, std::array<Cell, kNumTags>> table_;
    std::uint64_t steps_ = 0;
};

// Epochs of shuffled greedy-perceptron updates. Passing init continues
// training from an existing model (fine-tuning), averaging accumulator
// included.
inline TaggerModel train_tagger(const std::vector<TrainExample>& data, std::size_t epochs,
                                Rng& rng, const TaggerModel* init = nullptr) {
    if (data.empty()) throw DataError("cannot train on empty data");
    if (epochs < 1) throw DataError("epochs must be >= 1");
    TaggerModel model = init ? *init : TaggerModel{};
    std::vector<const TrainExample*> order;
    order.reserve(data.size());
    for (const auto& example : data) order.push_back(&example);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        model.train_epoch(order);
    }
    return model;
}

inline std::vector<AspectLabel> predict(const TaggerModel& model,
                                        const std::vector<std::string>& tokens) {
    return decode_bio(tokens, model.decode(tokens)).labels;
}

inline std::vector<TrainExample> encode_dataset(const Dataset& dataset,
                                                std::size_t* skipped = nullptr) {
    std::vector<TrainExample> out;
    out.reserve(dataset.samples.size());
    for (const auto& sample : dataset.samples) {
        EncodeResult encoded = encode_bio(sample);
        if (skipped) *skipped += encoded.skipped_labels;
        out.push_back(std::move(encoded.example));
    }
    return out;
}

// Teacher labeling: every sample's labels are replaced with the model's
// predictions; text and ids stay, provenance records the relabeling.
inline Dataset pseudo_label(const TaggerModel& model, const Dataset& dataset) {
    Dataset out;
    out.name = dataset.name;
    out.domain = dataset.domain;
    out.domain_text = dataset.domain_text;
    for (const auto& sample : dataset.samples) {
        AbsaSample labeled = sample;
        labeled.labels = predict(model, tokenize(sample.text));
        labeled.provenance.strategy = Strategy::pseudo_labeled;
        labeled.provenance.source_ids = {sample.id};
        labeled.provenance.request_id.reset();
        labeled.provenance.normalized = true;  // predictions are surface spans
        out.samples.push_back(std::move(labeled));
    }
    return out;
}

struct NoiseResult {
    std::vector<std::string> tokens;
    std::vector<Tag> tags;
    std::size_t deleted = 0;
    std::size_t masked = 0;
    std::size_t repairs = 0;
};

// Per-token disturbance: with probability p_noise a token is either deleted
// (tag removed, orphaned I-x repaired to B-x) or replaced by the mask sentinel
// (tag kept), with equal probability. Deleting everything falls back to the
// unmodified input.
inline NoiseResult inject_noise(const std::vector<std::string>& tokens,
                                const std::vector<Tag>& tags, double p_noise, Rng& rng) {
    if (tokens.size() != tags.size()) throw DataError("inject_noise: length mismatch");
    NoiseResult result;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (rng.bernoulli(p_noise)) {
            if (rng.bernoulli(0.5)) {
                ++result.deleted;
                continue;
            }
            result.tokens.emplace_back(kMaskSentinel);
            result.tags.push_back(tags[i]);
            ++result.masked;
        } else {
            result.tokens.push_back(tokens[i]);
            result.tags.push_back(tags[i]);
        }
    }
    if (result.tokens.empty()) {
        result = NoiseResult{};
        result.tokens = tokens;
        result.tags = tags;
        return result;
    }
    for (std::size_t i = 0; i < result.tags.size(); ++i) {
        if (!is_inside(result.tags[i])) continue;
        bool orphan = i == 0 || result.tags[i - 1] == Tag::O ||
                      tag_polarity(result.tags[i - 1]) != tag_polarity(result.tags[i]);
        if (orphan) {
            result.tags[i] = begin_tag(tag_polarity(result.tags[i]));
            ++result.repairs;
        }
    }
    return result;
}

struct SelfTrainConfig {
    double p_noise = 0.1;
    double noise_sample_fraction = 0.5;
    std::size_t max_iterations = 3;
    std::size_t pretrain_epochs = 5;   // synthetic-data epochs
    std::size_t finetune_epochs = 20;  // gold-data epochs
    double improvement_epsilon = 1e-4;

    void validate() const {
        if (p_noise < 0.0 || p_noise > 1.0)
            throw ConfigError("selftrain.p_noise must be in [0, 1]");
        if (noise_sample_fraction < 0.0 || noise_sample_fraction > 1.0)
            throw ConfigError("selftrain.noise_sample_fraction must be in [0, 1]");
        if (pretrain_epochs < 1 || finetune_epochs < 1)
            throw ConfigError("selftrain epochs must be >= 1");
    }
};

struct IterationRecord {
    std::size_t iteration = 0;  // 0 is the pre-loop teacher
    double dev_pair_f1 = 0.0;
    std::size_t noised_samples = 0;
    std::size_t deleted_tokens = 0;
    std::size_t masked_tokens = 0;
    std::size_t noise_repairs = 0;
};

struct SelfTrainResult {
    TaggerModel model;  // teacher with the best recorded dev score
    std::vector<IterationRecord> history;
    std::size_t best_iteration = 0;
    bool stopped_early = false;
};

namespace detail {

inline double dev_pair_f1(const TaggerModel& model, const Dataset& dev) {
    Dataset pred;
    pred.name = dev.name;
    for (const auto& sample : dev.samples) {
        AbsaSample p;
        p.id = sample.id;
        p.text = sample.text;
        p.labels = predict(model, tokenize(sample.text));
        pred.samples.push_back(std::move(p));
    }
    return evaluate(pred, dev).pair_f1;
}

}  // namespace detail

// Noisy self-training: pretrain on the synthetic data, fine-tune on gold to
// get teacher T0, then iterate pseudo-label -> noisy student from scratch ->
// gold fine-tune. Each student epoch re-draws the noised subset. Stops early
// once the dev pair F1 stops improving past epsilon; the returned teacher is
// the argmax of the recorded dev history.
inline SelfTrainResult self_train(const Dataset& synthetic, const Dataset& gold,
                                  const Dataset& dev, const SelfTrainConfig& config, Rng& rng) {
    config.validate();
    if (gold.samples.empty() || dev.samples.empty())
        throw DataError("self_train requires non-empty gold and dev datasets");
    if (synthetic.samples.empty()) throw DataError("self_train requires synthetic data");

    std::vector<TrainExample> syn_examples = encode_dataset(synthetic);
    std::vector<TrainExample> gold_examples = encode_dataset(gold);

    TaggerModel pretrained = train_tagger(syn_examples, config.pretrain_epochs, rng);
    TaggerModel teacher = train_tagger(gold_examples, config.finetune_epochs, rng, &pretrained);

    SelfTrainResult result;
    result.history.push_back({0, detail::dev_pair_f1(teacher, dev), 0, 0, 0, 0});
    result.model = teacher;
    result.best_iteration = 0;
    double best_f1 = result.history[0].dev_pair_f1;

    for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
        Dataset relabeled = pseudo_label(teacher, synthetic);
        std::vector<TrainExample> pseudo_examples = encode_dataset(relabeled);

        IterationRecord record;
        record.iteration = iter;

        TaggerModel student;
        const std::size_t n = pseudo_examples.size();
        const auto noised = static_cast<std::size_t>(
            std::floor(config.noise_sample_fraction * static_cast<double>(n)));
        for (std::size_t epoch = 0; epoch < config.pretrain_epochs; ++epoch) {
            std::vector<TrainExample> epoch_data = pseudo_examples;
            for (std::size_t idx : rng.sample_indices(n, noised)) {
                NoiseResult noisy = inject_noise(epoch_data[idx].tokens, epoch_data[idx].tags,
                                                 config.p_noise, rng);
                record.deleted_tokens += noisy.deleted;
                record.masked_tokens += noisy.masked;
                record.noise_repairs += noisy.repairs;
                epoch_data[idx].tokens = std::move(noisy.tokens);
                epoch_data[idx].tags = std::move(noisy.tags);
            }
            record.noised_samples += noised;
            std::vector<const TrainExample*> order;
            order.reserve(n);
            for (const auto& example : epoch_data) order.push_back(&example);
            rng.shuffle(order);
            student.train_epoch(order);
        }

        teacher = train_tagger(gold_examples, config.finetune_epochs, rng, &student);
        record.dev_pair_f1 = detail::dev_pair_f1(teacher, dev);
        result.history.push_back(record);

        if (record.dev_pair_f1 > best_f1) {
            result.model = teacher;
            result.best_iteration = iter;
        }
        if (record.dev_pair_f1 <= best_f1 + config.improvement_epsilon) {
            result.stopped_early = iter < config.max_iterations;
            break;
        }
        best_f1 = std::max(best_f1, record.dev_pair_f1);
    }
    return result;
}

}  // namespace absakit
