#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "absakit/core.hpp"

namespace absakit {

using json = nlohmann::json;

// One sample per line:
//   {"id": str?, "text": str, "labels": [[term, polarity], ...],
//    "provenance": {"strategy": str, "source_ids": [str], "request_id": str?,
//                   "normalized": bool}?}
// Missing provenance defaults to gold. UTF-8, LF line endings.

struct ReadOptions {
    // Labels with a polarity outside {positive, negative, neutral} (e.g. the
    // SemEval "conflict" class) are dropped when true, rejected when false.
    bool filter_conflict = true;
    std::string dataset_name;
    std::string domain = "other";
};

inline json sample_to_json(const AbsaSample& sample) {
    json labels = json::array();
    for (const auto& l : sample.labels) labels.push_back({l.term, to_string(l.polarity)});
    json prov{{"strategy", to_string(sample.provenance.strategy)},
              {"source_ids", sample.provenance.source_ids},
              {"normalized", sample.provenance.normalized}};
    if (sample.provenance.request_id) prov["request_id"] = *sample.provenance.request_id;
    return json{{"id", sample.id}, {"text", sample.text}, {"labels", labels},
                {"provenance", prov}};
}

inline AbsaSample sample_from_json(const json& j, const ReadOptions& opts, std::size_t line_no) {
    auto fail = [&](const std::string& what) -> DataError {
        return DataError("line " + std::to_string(line_no) + ": " + what);
    };
    if (!j.is_object()) throw fail("expected a JSON object");
    if (!j.contains("text") || !j.at("text").is_string()) throw fail("missing string field 'text'");

    AbsaSample sample;
    sample.text = j.at("text").get<std::string>();
    if (sample.text.empty()) throw fail("'text' must be non-empty");
    if (j.contains("id")) {
        if (!j.at("id").is_string()) throw fail("'id' must be a string");
        sample.id = j.at("id").get<std::string>();
    }
    if (j.contains("labels")) {
        if (!j.at("labels").is_array()) throw fail("'labels' must be an array");
        for (const auto& entry : j.at("labels")) {
            if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
                !entry[1].is_string())
                throw fail("label entries must be [term, polarity] string pairs");
            std::string term = squeeze_whitespace(entry[0].get<std::string>());
            if (term.empty()) throw fail("label term must be non-empty");
            auto pol = parse_polarity(entry[1].get<std::string>());
            if (!pol) {
                if (opts.filter_conflict) continue;
                throw fail("unknown polarity '" + entry[1].get<std::string>() + "'");
            }
            sample.labels.emplace_back(term, *pol);
        }
    }
    if (j.contains("provenance")) {
        const auto& p = j.at("provenance");
        if (!p.is_object()) throw fail("'provenance' must be an object");
        if (p.contains("strategy")) {
            auto strat = parse_strategy(p.at("strategy").get<std::string>());
            if (!strat) throw fail("unknown provenance strategy");
            sample.provenance.strategy = *strat;
        }
        if (p.contains("source_ids"))
            sample.provenance.source_ids = p.at("source_ids").get<std::vector<std::string>>();
        if (p.contains("request_id") && !p.at("request_id").is_null())
            sample.provenance.request_id = p.at("request_id").get<std::string>();
        if (p.contains("normalized")) sample.provenance.normalized = p.at("normalized").get<bool>();
        try {
            sample.provenance.validate();
        } catch (const DataError& e) {
            throw fail(e.what());
        }
    }
    return sample;
}

inline Dataset read_dataset(const std::filesystem::path& path, ReadOptions opts = {}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dataset file: " + path.string());

    Dataset ds;
    ds.name = opts.dataset_name.empty() ? path.stem().string() : opts.dataset_name;
    ds.domain = Dataset::parse_domain(opts.domain);
    ds.domain_text = opts.domain;

    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError("line " + std::to_string(line_no) + ": malformed JSON (" +
                            std::string(e.what()) + ")");
        }
        AbsaSample sample = sample_from_json(j, opts, line_no);
        if (sample.id.empty()) sample.id = std::to_string(line_no);
        if (!seen_ids.insert(sample.id).second)
            throw DataError("line " + std::to_string(line_no) + ": duplicate sample id '" +
                            sample.id + "'");
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

inline void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write dataset file: " + path.string());
    for (const auto& sample : dataset.samples) out << sample_to_json(sample).dump() << '\n';
    if (!out) throw DataError("I/O failure while writing: " + path.string());
}

}  // namespace absakit
