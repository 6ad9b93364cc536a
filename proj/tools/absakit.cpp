// Command-line front end. Subcommands mirror the pipeline stages so each can
// run standalone; per-stage seeds derive from the global --seed the same way
// the pipeline derives them, which keeps the two execution styles bit-equal.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "absakit/pipeline.hpp"

namespace {

using namespace absakit;

struct BackendFlags {
    std::string kind = "mock";
    std::string model;
    std::string endpoint;
    std::string credential_env = "ABSAKIT_API_KEY";
    int max_in_flight = 4;
    int retry_attempts = 3;
    int backoff_ms = 250;
    double temperature = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("--backend", kind, "Generation backend: http or mock")
            ->check(CLI::IsMember({"http", "mock"}));
        cmd->add_option("--model", model, "Model name for the http backend");
        cmd->add_option("--endpoint", endpoint, "Chat-completions endpoint URL");
        cmd->add_option("--credential-env", credential_env,
                        "Environment variable holding the API credential");
        cmd->add_option("--max-in-flight", max_in_flight, "Max concurrent requests");
        cmd->add_option("--retry-attempts", retry_attempts, "Max attempts per request");
        cmd->add_option("--backoff-ms", backoff_ms, "Base backoff in milliseconds");
        cmd->add_option("--temperature", temperature, "Sampling temperature");
    }

    BackendConfig to_config(std::uint64_t global_seed, const char* stage_name) const {
        BackendConfig cfg;
        cfg.kind = BackendConfig::parse_kind(kind);
        cfg.model = model;
        cfg.endpoint = endpoint;
        cfg.credential_env = credential_env;
        cfg.max_in_flight = max_in_flight;
        cfg.retry = {retry_attempts, backoff_ms};
        cfg.temperature = temperature;
        cfg.mock_seed = stage_seed(global_seed, stage_name);
        cfg.validate();
        return cfg;
    }
};

Dataset read_jsonl(const std::string& path, const std::string& domain, bool filter_conflict) {
    ReadOptions opts;
    opts.domain = domain;
    opts.filter_conflict = filter_conflict;
    return read_dataset(path, opts);
}

int run(int argc, char** argv) {
    CLI::App app{"ABSA data synthesis and label refinement toolkit"};
    app.require_subcommand(1);

    // split
    auto* split_cmd = app.add_subcommand("split", "Few-shot split of a gold dataset");
    std::string split_in, split_train_out, split_dev_out, split_domain = "other";
    double shot = 0.05, dev_fraction = 0.2;
    std::uint64_t split_seed = 0;
    bool keep_conflict = false;
    split_cmd->add_option("--in", split_in, "Gold dataset (jsonl)")->required();
    split_cmd->add_option("--train-out", split_train_out, "Few-shot train output")->required();
    split_cmd->add_option("--dev-out", split_dev_out, "Dev carve-out output")->required();
    split_cmd->add_option("--shot", shot, "Fraction of samples to draw");
    split_cmd->add_option("--dev-fraction", dev_fraction, "Dev fraction of the draw");
    split_cmd->add_option("--seed", split_seed, "Global seed");
    split_cmd->add_option("--domain", split_domain, "Dataset domain");
    split_cmd->add_flag("--keep-conflict", keep_conflict, "Reject unknown polarities");
    split_cmd->callback([&] {
        Dataset gold = read_jsonl(split_in, split_domain, !keep_conflict);
        FewShotSplit split =
            split_few_shot(gold, shot, dev_fraction, stage_seed(split_seed, stage::split));
        write_dataset(split.train, split_train_out);
        write_dataset(split.dev, split_dev_out);
        std::printf("split: %zu train, %zu dev (from %zu)\n", split.train.samples.size(),
                    split.dev.samples.size(), gold.samples.size());
    });

    // brainstorm
    auto* brainstorm_cmd = app.add_subcommand("brainstorm", "Brainstorm an attribute pool");
    std::string bs_domain, bs_out, bs_audit;
    std::uint64_t bs_seed = 0;
    BackendFlags bs_backend;
    brainstorm_cmd->add_option("--domain", bs_domain, "Review domain")->required();
    brainstorm_cmd->add_option("--out", bs_out, "Pool JSON output")->required();
    brainstorm_cmd->add_option("--audit-dir", bs_audit, "Raw response cache directory");
    brainstorm_cmd->add_option("--seed", bs_seed, "Global seed");
    bs_backend.attach(brainstorm_cmd);
    brainstorm_cmd->callback([&] {
        BackendConfig cfg = bs_backend.to_config(bs_seed, stage::brainstorm);
        auto backend = make_backend(cfg);
        BrainstormOptions opts;
        if (!bs_audit.empty()) opts.cache_dir = bs_audit;
        opts.max_in_flight = cfg.max_in_flight;
        opts.temperature = cfg.temperature;
        AttributePool pool = brainstorm_pool(bs_domain, *backend, cfg.retry, opts);
        save_pool(pool, bs_out);
        std::printf("brainstorm: %zu subjects, %zu categories -> %s\n",
                    pool.review_subjects.size(), pool.aspect_categories.size(), bs_out.c_str());
    });

    // synth-kp
    auto* kp_cmd = app.add_subcommand("synth-kp", "Key-point-driven synthesis");
    std::string kp_pool, kp_seed_data, kp_out, kp_domain = "other";
    std::uint64_t kp_seed = 0;
    KeypointOptions kp_opts;
    BackendFlags kp_backend;
    kp_cmd->add_option("--pool", kp_pool, "Attribute pool JSON")->required();
    kp_cmd->add_option("--seed-data", kp_seed_data, "Seed dataset (jsonl)")->required();
    kp_cmd->add_option("--n", kp_opts.n_target, "Target sample count")->required();
    kp_cmd->add_option("--out", kp_out, "Output jsonl")->required();
    kp_cmd->add_option("--k-exemplars", kp_opts.k_exemplars, "Style exemplars per prompt");
    kp_cmd->add_option("--budget-factor", kp_opts.budget_factor, "Request budget multiplier");
    kp_cmd->add_option("--seed", kp_seed, "Global seed");
    kp_cmd->add_option("--domain", kp_domain, "Dataset domain");
    kp_backend.attach(kp_cmd);
    kp_cmd->callback([&] {
        BackendConfig cfg = kp_backend.to_config(kp_seed, stage::synth_kp);
        auto backend = make_backend(cfg);
        AttributePool pool = load_pool(kp_pool);
        Dataset seed_data = read_jsonl(kp_seed_data, kp_domain, true);
        kp_opts.temperature = cfg.temperature;
        kp_opts.max_in_flight = cfg.max_in_flight;
        Rng rng(stage_seed(kp_seed, stage::synth_kp));
        SynthResult result =
            synthesize_keypoint(pool, seed_data, kp_opts, *backend, cfg.retry, rng);
        Dataset out;
        out.name = "keypoint";
        out.domain_text = kp_domain;
        out.domain = Dataset::parse_domain(kp_domain);
        out.samples = std::move(result.samples);
        write_dataset(out, kp_out);
        std::printf("synth-kp: %zu samples (%zu requests, %zu parse failures) -> %s\n",
                    out.samples.size(), result.stats.requests_issued,
                    result.stats.parse_failures, kp_out.c_str());
    });

    // synth-inst
    auto* inst_cmd = app.add_subcommand("synth-inst", "Instance-driven synthesis");
    std::string inst_seed_data, inst_out, inst_domain = "other";
    std::uint64_t inst_seed = 0;
    InstanceConfig inst_cfg;
    std::vector<int> inst_m = {0, 2};
    BackendFlags inst_backend;
    inst_cmd->add_option("--seed-data", inst_seed_data, "Seed dataset (jsonl)")->required();
    inst_cmd->add_option("--out", inst_out, "Output jsonl")->required();
    inst_cmd->add_option("--k", inst_cfg.k, "Samples per response");
    inst_cmd->add_option("--max-combinations", inst_cfg.max_combinations, "Pair cap");
    inst_cmd->add_option("--m", inst_m, "Context-preservation window sizes")->delimiter(',');
    inst_cmd->add_option("--p-mask", inst_cfg.p_mask, "Aspect-preservation mask fraction");
    inst_cmd->add_option("--variants", inst_cfg.aspect_preserve_variants,
                         "Aspect-preservation variants per sample");
    inst_cmd->add_option("--seed", inst_seed, "Global seed");
    inst_cmd->add_option("--domain", inst_domain, "Dataset domain");
    inst_backend.attach(inst_cmd);
    inst_cmd->callback([&] {
        BackendConfig cfg = inst_backend.to_config(inst_seed, stage::synth_inst);
        auto backend = make_backend(cfg);
        Dataset seed_data = read_jsonl(inst_seed_data, inst_domain, true);
        inst_cfg.m_values = inst_m;
        inst_cfg.temperature = cfg.temperature;
        inst_cfg.max_in_flight = cfg.max_in_flight;
        inst_cfg.validate();
        Rng rng(stage_seed(inst_seed, stage::synth_inst));
        InstanceResult result = synthesize_instance(seed_data, inst_cfg, *backend, cfg.retry, rng);
        Dataset out;
        out.name = "instance";
        out.domain_text = inst_domain;
        out.domain = Dataset::parse_domain(inst_domain);
        out.samples = std::move(result.samples);
        write_dataset(out, inst_out);
        std::printf("synth-inst: %zu samples from %zu prompts -> %s\n", out.samples.size(),
                    result.stats.prompts_issued(), inst_out.c_str());
    });

    // refine
    auto* refine_cmd = app.add_subcommand("refine", "Normalize synthetic labels");
    std::string refine_in, refine_out, refine_report;
    NormalizeConfig norm_cfg;
    std::size_t max_ngram_flag = 0;
    bool keep_empty = false;
    refine_cmd->add_option("--in", refine_in, "Synthetic dataset (jsonl)")->required();
    refine_cmd->add_option("--out", refine_out, "Normalized output")->required();
    refine_cmd->add_option("--tau", norm_cfg.tau, "Fuzzy acceptance threshold");
    refine_cmd->add_option("--max-ngram", max_ngram_flag, "Candidate n-gram cap");
    refine_cmd->add_option("--report", refine_report, "Outcome report JSON");
    refine_cmd->add_flag("--case-sensitive", norm_cfg.case_sensitive, "Case-sensitive matching");
    refine_cmd->add_flag("--keep-empty", keep_empty, "Keep samples left with zero labels");
    refine_cmd->callback([&] {
        if (max_ngram_flag > 0) norm_cfg.max_ngram = max_ngram_flag;
        norm_cfg.drop_empty_samples = !keep_empty;
        norm_cfg.validate();
        Dataset input = read_jsonl(refine_in, "other", true);
        NormalizedDataset result = normalize_dataset(input, norm_cfg);
        write_dataset(result.dataset, refine_out);
        if (!refine_report.empty()) {
            nlohmann::json outcomes = nlohmann::json::array();
            for (const auto& o : result.outcomes) {
                nlohmann::json row{{"sample_id", o.sample_id},
                                   {"term", o.original_term},
                                   {"action", to_string(o.action)}};
                if (o.replacement) row["replacement"] = *o.replacement;
                if (o.score) row["score"] = *o.score;
                outcomes.push_back(std::move(row));
            }
            detail::write_json(
                nlohmann::json{{"summary",
                                {{"kept", result.summary.kept},
                                 {"substituted", result.summary.substituted},
                                 {"removed", result.summary.removed},
                                 {"zero_label_samples", result.summary.zero_label_samples},
                                 {"dropped_samples", result.summary.dropped_samples}}},
                               {"outcomes", outcomes}},
                refine_report);
        }
        std::printf("refine: kept %zu, substituted %zu, removed %zu labels -> %s\n",
                    result.summary.kept, result.summary.substituted, result.summary.removed,
                    refine_out.c_str());
    });

    // selftrain
    auto* st_cmd = app.add_subcommand("selftrain", "Noisy self-training");
    std::string st_syn, st_gold, st_dev, st_model_out, st_history;
    std::uint64_t st_seed = 0;
    SelfTrainConfig st_cfg;
    st_cmd->add_option("--synthetic", st_syn, "Normalized synthetic dataset")->required();
    st_cmd->add_option("--gold", st_gold, "Gold few-shot training set")->required();
    st_cmd->add_option("--dev", st_dev, "Dev set for early stopping")->required();
    st_cmd->add_option("--out", st_model_out, "Model output path")->required();
    st_cmd->add_option("--history", st_history, "Iteration history JSON");
    st_cmd->add_option("--p-noise", st_cfg.p_noise, "Per-token disturbance probability");
    st_cmd->add_option("--noise-fraction", st_cfg.noise_sample_fraction,
                       "Fraction of samples noised per epoch");
    st_cmd->add_option("--max-iterations", st_cfg.max_iterations, "Self-training iterations");
    st_cmd->add_option("--pretrain-epochs", st_cfg.pretrain_epochs, "Synthetic-data epochs");
    st_cmd->add_option("--finetune-epochs", st_cfg.finetune_epochs, "Gold-data epochs");
    st_cmd->add_option("--epsilon", st_cfg.improvement_epsilon, "Early-stop improvement bar");
    st_cmd->add_option("--seed", st_seed, "Global seed");
    st_cmd->callback([&] {
        st_cfg.validate();
        Dataset synthetic = read_jsonl(st_syn, "other", true);
        Dataset gold = read_jsonl(st_gold, "other", true);
        Dataset dev = read_jsonl(st_dev, "other", true);
        Rng rng(stage_seed(st_seed, stage::selftrain));
        SelfTrainResult result = self_train(synthetic, gold, dev, st_cfg, rng);
        result.model.save(st_model_out);
        if (!st_history.empty())
            detail::write_json(detail::history_json(result.history, result.best_iteration,
                                                    result.stopped_early),
                               st_history);
        std::printf("selftrain: best iteration %zu, dev pair F1 %.4f -> %s\n",
                    result.best_iteration,
                    result.history[result.best_iteration].dev_pair_f1, st_model_out.c_str());
    });

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "Tag a dataset with a trained model");
    std::string pr_model, pr_in, pr_out;
    predict_cmd->add_option("--model", pr_model, "Model file")->required();
    predict_cmd->add_option("--in", pr_in, "Input dataset (jsonl)")->required();
    predict_cmd->add_option("--out", pr_out, "Predictions output (jsonl)")->required();
    predict_cmd->callback([&] {
        TaggerModel model = TaggerModel::load(pr_model);
        Dataset input = read_jsonl(pr_in, "other", true);
        Dataset pred;
        pred.name = input.name + "-pred";
        for (const auto& sample : input.samples) {
            AbsaSample p;
            p.id = sample.id;
            p.text = sample.text;
            p.labels = predict(model, tokenize(sample.text));
            pred.samples.push_back(std::move(p));
        }
        write_dataset(pred, pr_out);
        std::printf("predict: %zu samples -> %s\n", pred.samples.size(), pr_out.c_str());
    });

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "Score predictions against gold");
    std::string ev_pred, ev_gold, ev_report;
    eval_cmd->add_option("--pred", ev_pred, "Predictions (jsonl)")->required();
    eval_cmd->add_option("--gold", ev_gold, "Gold labels (jsonl)")->required();
    eval_cmd->add_option("--report", ev_report, "Report JSON output");
    eval_cmd->callback([&] {
        Dataset pred = read_jsonl(ev_pred, "other", true);
        Dataset gold = read_jsonl(ev_gold, "other", true);
        EvalReport report = evaluate(pred, gold);
        if (!ev_report.empty()) detail::write_json(report.to_json(), ev_report);
        std::printf("pair F1 %.4f (P %.4f R %.4f) | aspect F1 %.4f | sentiment macro-F1 %.4f\n",
                    report.pair_f1, report.pair_precision, report.pair_recall, report.aspect_f1,
                    report.sentiment_macro_f1);
    });

    // pipeline
    auto* pipe_cmd = app.add_subcommand("pipeline", "Run the full synthesis pipeline");
    std::string pipe_config;
    bool no_keypoint = false, no_instance = false;
    pipe_cmd->add_option("--config", pipe_config, "Pipeline config file")->required();
    pipe_cmd->add_flag("--no-keypoint", no_keypoint, "Disable the key-point-driven stream");
    pipe_cmd->add_flag("--no-instance", no_instance, "Disable the instance-driven stream");
    pipe_cmd->callback([&] {
        PipelineConfig cfg = load_config(pipe_config);
        if (no_keypoint) cfg.keypoint.enabled = false;
        if (no_instance) cfg.instance.enabled = false;
        if (!cfg.keypoint.enabled && !cfg.instance.enabled)
            throw ConfigError("both synthesis streams are disabled");
        PipelineOutcome outcome = run_pipeline(cfg);
        std::printf("pipeline: dev pair F1 %.4f, artifacts in %s\n", outcome.dev_report.pair_f1,
                    outcome.workdir.string().c_str());
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const absakit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const absakit::BackendError& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 3;
    } catch (const absakit::Error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
