#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "absakit/config.hpp"
#include "absakit/corpus.hpp"
#include "absakit/digest.hpp"
#include "absakit/instance.hpp"
#include "absakit/jsonl.hpp"
#include "absakit/keypoint.hpp"
#include "absakit/llm_http.hpp"
#include "absakit/metrics.hpp"
#include "absakit/refine.hpp"
#include "absakit/tagger.hpp"

namespace absakit {

// Stage names seed the per-stage randomness; standalone CLI commands use the
// same names so a command-by-command run reproduces the pipeline bit-exactly.
namespace stage {
inline constexpr const char* split = "split";
inline constexpr const char* seed_select = "seed-select";
inline constexpr const char* brainstorm = "brainstorm";
inline constexpr const char* synth_kp = "synth-kp";
inline constexpr const char* synth_inst = "synth-inst";
inline constexpr const char* merge = "merge";
inline constexpr const char* refine = "refine";
inline constexpr const char* selftrain = "selftrain";
inline constexpr const char* eval = "eval";
}  // namespace stage

inline BackendConfig stage_backend(const PipelineConfig& config, const char* stage_name) {
    BackendConfig backend = config.backend;
    backend.mock_seed = stage_seed(config.seed, stage_name);
    return backend;
}

struct Manifest {
    std::string config_sha256;
    std::uint64_t seed = 0;
    nlohmann::json stages = nlohmann::json::array();

    void add_stage(const std::string& name, std::uint64_t stage_seed_value,
                   const std::vector<std::filesystem::path>& artifacts,
                   nlohmann::json stats = nlohmann::json::object()) {
        nlohmann::json files = nlohmann::json::array();
        for (const auto& path : artifacts)
            files.push_back({{"file", path.filename().string()}, {"sha256", sha256_file(path)}});
        stages.push_back({{"name", name},
                          {"seed", stage_seed_value},
                          {"artifacts", files},
                          {"stats", stats}});
    }

    nlohmann::json to_json() const {
        return nlohmann::json{
            {"config_sha256", config_sha256}, {"seed", seed}, {"stages", stages}};
    }
};

struct PipelineOutcome {
    std::filesystem::path workdir;
    nlohmann::json manifest;
    EvalReport dev_report;
    std::vector<IterationRecord> history;
};

namespace detail {

template <typename Fn>
auto run_stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("stage ") + name + ": " + e.what());
    } catch (const BackendError& e) {
        throw BackendError(std::string("stage ") + name + ": " + e.what(), e.status(),
                           e.retryable(), e.auth_failure());
    } catch (const Error& e) {
        throw DataError(std::string("stage ") + name + ": " + e.what());
    }
}

inline nlohmann::json history_json(const std::vector<IterationRecord>& history,
                                   std::size_t best_iteration, bool stopped_early) {
    nlohmann::json iterations = nlohmann::json::array();
    for (const auto& record : history)
        iterations.push_back({{"iteration", record.iteration},
                              {"dev_pair_f1", record.dev_pair_f1},
                              {"noised_samples", record.noised_samples},
                              {"deleted_tokens", record.deleted_tokens},
                              {"masked_tokens", record.masked_tokens},
                              {"noise_repairs", record.noise_repairs}});
    return nlohmann::json{{"iterations", iterations},
                          {"best_iteration", best_iteration},
                          {"stopped_early", stopped_early}};
}

inline void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace detail

// Full run: split -> seed selection -> pool -> dual-stream synthesis ->
// merge+dedup -> normalization -> self-training -> dev evaluation. Every stage
// writes its artifact into the workdir; the manifest records per-file SHA-256
// checksums, so identical (config, seed) runs are verifiable byte-for-byte.
inline PipelineOutcome run_pipeline(const PipelineConfig& config) {
    namespace fs = std::filesystem;
    const fs::path workdir = config.paths.workdir;
    fs::create_directories(workdir);

    Manifest manifest;
    manifest.config_sha256 = sha256_hex(config.raw_text);
    manifest.seed = config.seed;

    ReadOptions read_opts;
    read_opts.filter_conflict = config.corpus.filter_conflict;
    read_opts.domain = config.domain;

    // split
    Dataset train, dev;
    detail::run_stage(stage::split, [&] {
        Dataset gold = read_dataset(config.paths.gold_train, read_opts);
        if (!config.paths.dev.empty()) {
            dev = read_dataset(config.paths.dev, read_opts);
            train = split_few_shot(gold, config.corpus.shot_fraction, 0.0,
                                   stage_seed(config.seed, stage::split))
                        .train;
        } else {
            FewShotSplit split = split_few_shot(gold, config.corpus.shot_fraction,
                                                config.corpus.dev_fraction,
                                                stage_seed(config.seed, stage::split));
            train = std::move(split.train);
            dev = std::move(split.dev);
        }
        if (dev.samples.empty())
            throw DataError("dev set is empty; provide paths.dev or a dev_fraction > 0");
        write_dataset(train, workdir / "train.jsonl");
        write_dataset(dev, workdir / "dev.jsonl");
        return 0;
    });
    manifest.add_stage(stage::split, stage_seed(config.seed, stage::split),
                       {workdir / "train.jsonl", workdir / "dev.jsonl"},
                       {{"train_samples", train.samples.size()},
                        {"dev_samples", dev.samples.size()}});

    // seed selection
    Dataset seed_data;
    detail::run_stage(stage::seed_select, [&] {
        seed_data = select_seed_data(train);
        if (seed_data.samples.empty())
            throw DataError("no training samples with explicit aspects to use as seed data");
        write_dataset(seed_data, workdir / "seed.jsonl");
        return 0;
    });
    manifest.add_stage(stage::seed_select, stage_seed(config.seed, stage::seed_select),
                       {workdir / "seed.jsonl"}, {{"seed_samples", seed_data.samples.size()}});

    // attribute pool (only needed by the key-point stream)
    AttributePool pool;
    if (config.keypoint.enabled) {
        detail::run_stage(stage::brainstorm, [&] {
            if (!config.paths.pool.empty() && fs::exists(config.paths.pool)) {
                pool = load_pool(config.paths.pool);
            } else if (config.keypoint.brainstorm) {
                BackendConfig backend_cfg = stage_backend(config, stage::brainstorm);
                auto backend = make_backend(backend_cfg);
                BrainstormOptions opts;
                opts.cache_dir = workdir / "brainstorm_audit";
                opts.max_in_flight = backend_cfg.max_in_flight;
                opts.temperature = backend_cfg.temperature;
                pool = brainstorm_pool(config.domain, *backend, backend_cfg.retry, opts);
                if (!config.paths.pool.empty()) save_pool(pool, config.paths.pool);
            } else {
                throw ConfigError("attribute pool not found at '" + config.paths.pool.string() +
                                  "' and brainstorming is disabled");
            }
            save_pool(pool, workdir / "pool.json");
            return 0;
        });
        manifest.add_stage(stage::brainstorm, stage_seed(config.seed, stage::brainstorm),
                           {workdir / "pool.json"},
                           {{"categories", pool.aspect_categories.size()},
                            {"subjects", pool.review_subjects.size()}});
    }

    // key-point-driven stream
    std::vector<AbsaSample> synthetic;
    if (config.keypoint.enabled) {
        Dataset kp_out;
        kp_out.name = "keypoint";
        kp_out.domain = Dataset::parse_domain(config.domain);
        kp_out.domain_text = config.domain;
        SynthStats kp_stats;
        detail::run_stage(stage::synth_kp, [&] {
            BackendConfig backend_cfg = stage_backend(config, stage::synth_kp);
            auto backend = make_backend(backend_cfg);
            KeypointOptions opts;
            opts.n_target = config.keypoint.n_target;
            opts.k_exemplars = config.keypoint.k_exemplars;
            opts.budget_factor = config.keypoint.budget_factor;
            opts.temperature = backend_cfg.temperature;
            opts.max_in_flight = backend_cfg.max_in_flight;
            Rng rng(stage_seed(config.seed, stage::synth_kp));
            SynthResult result =
                synthesize_keypoint(pool, seed_data, opts, *backend, backend_cfg.retry, rng);
            kp_out.samples = std::move(result.samples);
            kp_stats = result.stats;
            write_dataset(kp_out, workdir / "kp.jsonl");
            return 0;
        });
        manifest.add_stage(stage::synth_kp, stage_seed(config.seed, stage::synth_kp),
                           {workdir / "kp.jsonl"},
                           {{"samples", kp_out.samples.size()},
                            {"requests", kp_stats.requests_issued},
                            {"parse_failures", kp_stats.parse_failures},
                            {"duplicates", kp_stats.duplicates}});
        for (auto& sample : kp_out.samples) synthetic.push_back(std::move(sample));
    }

    // instance-driven stream
    if (config.instance.enabled) {
        Dataset inst_out;
        inst_out.name = "instance";
        inst_out.domain = Dataset::parse_domain(config.domain);
        inst_out.domain_text = config.domain;
        InstanceStats inst_stats;
        detail::run_stage(stage::synth_inst, [&] {
            BackendConfig backend_cfg = stage_backend(config, stage::synth_inst);
            auto backend = make_backend(backend_cfg);
            Rng rng(stage_seed(config.seed, stage::synth_inst));
            InstanceResult result = synthesize_instance(seed_data, config.instance.config,
                                                        *backend, backend_cfg.retry, rng);
            inst_out.samples = std::move(result.samples);
            inst_stats = result.stats;
            write_dataset(inst_out, workdir / "inst.jsonl");
            return 0;
        });
        manifest.add_stage(stage::synth_inst, stage_seed(config.seed, stage::synth_inst),
                           {workdir / "inst.jsonl"},
                           {{"samples", inst_out.samples.size()},
                            {"prompts", inst_stats.prompts_issued()},
                            {"parse_failures", inst_stats.parse_failures},
                            {"skipped_variants", inst_stats.skipped_variants}});
        for (auto& sample : inst_out.samples) synthetic.push_back(std::move(sample));
    }

    // merge + dedup
    Dataset merged;
    merged.name = "merged";
    merged.domain = Dataset::parse_domain(config.domain);
    merged.domain_text = config.domain;
    detail::run_stage(stage::merge, [&] {
        merged.samples = dedup(synthetic);
        if (merged.samples.empty()) throw DataError("both synthesis streams produced no samples");
        write_dataset(merged, workdir / "merged.jsonl");
        return 0;
    });
    manifest.add_stage(stage::merge, stage_seed(config.seed, stage::merge),
                       {workdir / "merged.jsonl"}, {{"samples", merged.samples.size()}});

    // label normalization
    NormalizedDataset normalized;
    detail::run_stage(stage::refine, [&] {
        normalized = normalize_dataset(merged, config.normalize);
        if (normalized.dataset.samples.empty())
            throw DataError("normalization removed every synthetic sample");
        write_dataset(normalized.dataset, workdir / "normalized.jsonl");
        nlohmann::json outcomes = nlohmann::json::array();
        for (const auto& o : normalized.outcomes) {
            nlohmann::json row{{"sample_id", o.sample_id},
                               {"term", o.original_term},
                               {"action", to_string(o.action)}};
            if (o.replacement) row["replacement"] = *o.replacement;
            if (o.score) row["score"] = *o.score;
            outcomes.push_back(std::move(row));
        }
        detail::write_json(nlohmann::json{{"summary",
                                           {{"kept", normalized.summary.kept},
                                            {"substituted", normalized.summary.substituted},
                                            {"removed", normalized.summary.removed},
                                            {"zero_label_samples",
                                             normalized.summary.zero_label_samples},
                                            {"dropped_samples",
                                             normalized.summary.dropped_samples}}},
                                          {"outcomes", outcomes}},
                           workdir / "refine_report.json");
        return 0;
    });
    manifest.add_stage(stage::refine, stage_seed(config.seed, stage::refine),
                       {workdir / "normalized.jsonl", workdir / "refine_report.json"},
                       {{"kept", normalized.summary.kept},
                        {"substituted", normalized.summary.substituted},
                        {"removed", normalized.summary.removed}});

    // noisy self-training
    SelfTrainResult trained;
    detail::run_stage(stage::selftrain, [&] {
        Rng rng(stage_seed(config.seed, stage::selftrain));
        trained = self_train(normalized.dataset, train, dev, config.selftrain, rng);
        trained.model.save(workdir / "model.tsv");
        detail::write_json(
            detail::history_json(trained.history, trained.best_iteration, trained.stopped_early),
            workdir / "history.json");
        return 0;
    });
    manifest.add_stage(stage::selftrain, stage_seed(config.seed, stage::selftrain),
                       {workdir / "model.tsv", workdir / "history.json"},
                       {{"iterations", trained.history.size() - 1},
                        {"best_iteration", trained.best_iteration}});

    // final dev evaluation
    PipelineOutcome outcome;
    detail::run_stage(stage::eval, [&] {
        Dataset pred;
        pred.name = "pred-dev";
        for (const auto& sample : dev.samples) {
            AbsaSample p;
            p.id = sample.id;
            p.text = sample.text;
            p.labels = predict(trained.model, tokenize(sample.text));
            pred.samples.push_back(std::move(p));
        }
        outcome.dev_report = evaluate(pred, dev);
        detail::write_json(outcome.dev_report.to_json(), workdir / "eval.json");
        return 0;
    });
    manifest.add_stage(stage::eval, stage_seed(config.seed, stage::eval),
                       {workdir / "eval.json"},
                       {{"dev_pair_f1", outcome.dev_report.pair_f1}});

    outcome.workdir = workdir;
    outcome.manifest = manifest.to_json();
    outcome.history = trained.history;
    detail::write_json(outcome.manifest, workdir / "manifest.json");
    return outcome;
}

}  // namespace absakit
