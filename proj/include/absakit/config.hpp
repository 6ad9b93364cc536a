#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "absakit/instance.hpp"
#include "absakit/llm.hpp"
#include "absakit/refine.hpp"
#include "absakit/tagger.hpp"

namespace absakit {

struct PipelineConfig {
    std::string domain;
    std::uint64_t seed = 0;

    struct Paths {
        std::filesystem::path gold_train;
        std::filesystem::path dev;   // optional explicit dev set
        std::filesystem::path pool;  // optional pre-built attribute pool
        std::filesystem::path workdir;
    } paths;

    struct Corpus {
        double shot_fraction = 0.05;
        double dev_fraction = 0.2;
        bool filter_conflict = true;
    } corpus;

    struct Keypoint {
        bool enabled = true;
        std::size_t n_target = 20000;
        std::size_t k_exemplars = 4;
        double budget_factor = 1.5;
        bool brainstorm = true;
    } keypoint;

    struct Instance {
        bool enabled = true;
        InstanceConfig config;
    } instance;

    NormalizeConfig normalize;
    SelfTrainConfig selftrain;
    BackendConfig backend;

    std::string raw_text;  // canonical config text, hashed into the manifest
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + value + "'");
}

inline double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a number, got '" + value + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        long long v = std::stoll(value, &used);
        if (used != value.size() || v < 0) throw std::invalid_argument(value);
        return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a non-negative integer, got '" + value +
                          "'");
    }
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        std::size_t comma = value.find(',', pos);
        std::string part = trim(value.substr(pos, comma == std::string::npos ? std::string::npos
                                                                             : comma - pos));
        if (!part.empty()) out.push_back(static_cast<int>(parse_uint(key, part)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("key '" + key + "' expects a comma list of integers");
    return out;
}

inline void check_range(const std::string& key, double v, double lo, double hi, bool lo_open) {
    bool ok = lo_open ? (v > lo && v <= hi) : (v >= lo && v <= hi);
    if (!ok)
        throw ConfigError("key '" + key + "' out of range: " + std::to_string(v) +
                          (lo_open ? " not in (" : " not in [") + std::to_string(lo) + ", " +
                          std::to_string(hi) + "]");
}

}  // namespace detail

// Line-oriented key=value configuration with dotted section keys and comma
// lists. Unknown keys and duplicate keys are errors; absent keys take the
// published defaults.
inline PipelineConfig validate_config(const std::string& text) {
    PipelineConfig cfg;
    cfg.raw_text = text;

    using Setter = std::function<void(const std::string&, const std::string&)>;
    std::map<std::string, Setter> schema;
    auto def = [&](const std::string& key, Setter setter) { schema[key] = std::move(setter); };
    using detail::check_range;
    using detail::parse_bool;
    using detail::parse_double;
    using detail::parse_int_list;
    using detail::parse_uint;

    def("domain", [&](const std::string&, const std::string& v) { cfg.domain = v; });
    def("seed", [&](const std::string& k, const std::string& v) { cfg.seed = parse_uint(k, v); });
    def("paths.gold_train",
        [&](const std::string&, const std::string& v) { cfg.paths.gold_train = v; });
    def("paths.dev", [&](const std::string&, const std::string& v) { cfg.paths.dev = v; });
    def("paths.pool", [&](const std::string&, const std::string& v) { cfg.paths.pool = v; });
    def("paths.workdir", [&](const std::string&, const std::string& v) { cfg.paths.workdir = v; });

    def("corpus.shot_fraction", [&](const std::string& k, const std::string& v) {
        cfg.corpus.shot_fraction = parse_double(k, v);
        check_range(k, cfg.corpus.shot_fraction, 0.0, 1.0, true);
    });
    def("corpus.dev_fraction", [&](const std::string& k, const std::string& v) {
        cfg.corpus.dev_fraction = parse_double(k, v);
        if (cfg.corpus.dev_fraction < 0.0 || cfg.corpus.dev_fraction >= 1.0)
            throw ConfigError("key '" + k + "' must be in [0, 1)");
    });
    def("corpus.filter_conflict", [&](const std::string& k, const std::string& v) {
        cfg.corpus.filter_conflict = parse_bool(k, v);
    });

    def("keypoint.enabled", [&](const std::string& k, const std::string& v) {
        cfg.keypoint.enabled = parse_bool(k, v);
    });
    def("keypoint.n_target", [&](const std::string& k, const std::string& v) {
        cfg.keypoint.n_target = parse_uint(k, v);
        if (cfg.keypoint.n_target < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("keypoint.k_exemplars", [&](const std::string& k, const std::string& v) {
        cfg.keypoint.k_exemplars = parse_uint(k, v);
    });
    def("keypoint.budget_factor", [&](const std::string& k, const std::string& v) {
        cfg.keypoint.budget_factor = parse_double(k, v);
        if (cfg.keypoint.budget_factor < 1.0) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("keypoint.brainstorm", [&](const std::string& k, const std::string& v) {
        cfg.keypoint.brainstorm = parse_bool(k, v);
    });

    def("instance.enabled", [&](const std::string& k, const std::string& v) {
        cfg.instance.enabled = parse_bool(k, v);
    });
    def("instance.k", [&](const std::string& k, const std::string& v) {
        cfg.instance.config.k = parse_uint(k, v);
    });
    def("instance.max_combinations", [&](const std::string& k, const std::string& v) {
        cfg.instance.config.max_combinations = parse_uint(k, v);
    });
    def("instance.m_values", [&](const std::string& k, const std::string& v) {
        cfg.instance.config.m_values = parse_int_list(k, v);
    });
    def("instance.p_mask", [&](const std::string& k, const std::string& v) {
        cfg.instance.config.p_mask = parse_double(k, v);
        check_range(k, cfg.instance.config.p_mask, 0.0, 1.0, true);
    });
    def("instance.aspect_preserve_variants", [&](const std::string& k, const std::string& v) {
        cfg.instance.config.aspect_preserve_variants = parse_uint(k, v);
    });

    def("normalize.tau", [&](const std::string& k, const std::string& v) {
        cfg.normalize.tau = parse_double(k, v);
        check_range(k, cfg.normalize.tau, 0.0, 1.0, false);
    });
    def("normalize.max_ngram", [&](const std::string& k, const std::string& v) {
        cfg.normalize.max_ngram = parse_uint(k, v);
        if (*cfg.normalize.max_ngram < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("normalize.case_sensitive", [&](const std::string& k, const std::string& v) {
        cfg.normalize.case_sensitive = parse_bool(k, v);
    });
    def("normalize.drop_empty", [&](const std::string& k, const std::string& v) {
        cfg.normalize.drop_empty_samples = parse_bool(k, v);
    });

    def("selftrain.p_noise", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.p_noise = parse_double(k, v);
        check_range(k, cfg.selftrain.p_noise, 0.0, 1.0, false);
    });
    def("selftrain.noise_sample_fraction", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.noise_sample_fraction = parse_double(k, v);
        check_range(k, cfg.selftrain.noise_sample_fraction, 0.0, 1.0, false);
    });
    def("selftrain.max_iterations", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.max_iterations = parse_uint(k, v);
    });
    def("selftrain.pretrain_epochs", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.pretrain_epochs = parse_uint(k, v);
        if (cfg.selftrain.pretrain_epochs < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("selftrain.finetune_epochs", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.finetune_epochs = parse_uint(k, v);
        if (cfg.selftrain.finetune_epochs < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("selftrain.improvement_epsilon", [&](const std::string& k, const std::string& v) {
        cfg.selftrain.improvement_epsilon = parse_double(k, v);
    });

    def("backend.kind", [&](const std::string&, const std::string& v) {
        cfg.backend.kind = BackendConfig::parse_kind(v);
    });
    def("backend.endpoint",
        [&](const std::string&, const std::string& v) { cfg.backend.endpoint = v; });
    def("backend.model", [&](const std::string&, const std::string& v) { cfg.backend.model = v; });
    def("backend.credential_env",
        [&](const std::string&, const std::string& v) { cfg.backend.credential_env = v; });
    def("backend.max_in_flight", [&](const std::string& k, const std::string& v) {
        cfg.backend.max_in_flight = static_cast<int>(parse_uint(k, v));
        if (cfg.backend.max_in_flight < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("backend.retry.max_attempts", [&](const std::string& k, const std::string& v) {
        cfg.backend.retry.max_attempts = static_cast<int>(parse_uint(k, v));
        if (cfg.backend.retry.max_attempts < 1) throw ConfigError("key '" + k + "' must be >= 1");
    });
    def("backend.retry.base_backoff_ms", [&](const std::string& k, const std::string& v) {
        cfg.backend.retry.base_backoff_ms = static_cast<int>(parse_uint(k, v));
    });
    def("backend.temperature", [&](const std::string& k, const std::string& v) {
        cfg.backend.temperature = parse_double(k, v);
        if (cfg.backend.temperature < 0.0) throw ConfigError("key '" + k + "' must be >= 0");
    });

    std::map<std::string, bool> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos
                                                                     : eol - pos);
        pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
        ++line_no;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        auto it = schema.find(key);
        if (it == schema.end())
            throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        if (seen[key])
            throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        seen[key] = true;
        it->second(key, value);
    }

    if (cfg.domain.empty()) throw ConfigError("missing required key 'domain'");
    if (cfg.paths.gold_train.empty())
        throw ConfigError("missing required key 'paths.gold_train'");
    if (cfg.paths.workdir.empty()) throw ConfigError("missing required key 'paths.workdir'");
    if (!std::filesystem::exists(cfg.paths.gold_train))
        throw ConfigError("paths.gold_train does not exist: " + cfg.paths.gold_train.string());
    if (!cfg.paths.dev.empty() && !std::filesystem::exists(cfg.paths.dev))
        throw ConfigError("paths.dev does not exist: " + cfg.paths.dev.string());
    if (!cfg.keypoint.enabled && !cfg.instance.enabled)
        throw ConfigError("at least one synthesis stream must be enabled");
    cfg.instance.config.validate();
    cfg.normalize.validate();
    cfg.selftrain.validate();
    cfg.backend.validate();
    cfg.instance.config.max_in_flight = cfg.backend.max_in_flight;
    cfg.instance.config.temperature = cfg.backend.temperature;
    return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return validate_config(text);
}

}  // namespace absakit
