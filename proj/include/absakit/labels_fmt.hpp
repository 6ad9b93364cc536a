#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "absakit/core.hpp"

namespace absakit {

// The generation templates exchange labels as a Python-style list literal:
//   [['battery life', 'positive'], ['screen', 'negative']]
// This is the wire format for brainstorm pools and sample labels alike.

struct ListNode {
    bool is_list = false;
    std::string str;
    std::vector<ListNode> items;
};

namespace detail {

inline void skip_ws(std::string_view s, std::size_t& i) {
    while (i < s.size() && ascii_space(s[i])) ++i;
}

inline bool parse_node(std::string_view s, std::size_t& i, ListNode& out, int depth);

inline bool parse_list(std::string_view s, std::size_t& i, ListNode& out, int depth) {
    if (depth > 8 || i >= s.size() || s[i] != '[') return false;
    ++i;
    out.is_list = true;
    out.items.clear();
    skip_ws(s, i);
    if (i < s.size() && s[i] == ']') {
        ++i;
        return true;
    }
    while (i < s.size()) {
        ListNode item;
        if (!parse_node(s, i, item, depth + 1)) return false;
        out.items.push_back(std::move(item));
        skip_ws(s, i);
        if (i < s.size() && s[i] == ',') {
            ++i;
            skip_ws(s, i);
            continue;
        }
        if (i < s.size() && s[i] == ']') {
            ++i;
            return true;
        }
        return false;
    }
    return false;
}

inline bool parse_quoted(std::string_view s, std::size_t& i, std::string& out) {
    char q = s[i];
    ++i;
    out.clear();
    while (i < s.size()) {
        char c = s[i];
        if (c == '\\' && i + 1 < s.size()) {
            out.push_back(s[i + 1]);
            i += 2;
            continue;
        }
        if (c == q) {
            ++i;
            return true;
        }
        out.push_back(c);
        ++i;
    }
    return false;
}

inline bool parse_node(std::string_view s, std::size_t& i, ListNode& out, int depth) {
    skip_ws(s, i);
    if (i >= s.size()) return false;
    char c = s[i];
    if (c == '[') return parse_list(s, i, out, depth);
    if (c == '\'' || c == '"') {
        out.is_list = false;
        return parse_quoted(s, i, out.str);
    }
    // Bare atom: tolerated up to the next delimiter.
    std::size_t start = i;
    while (i < s.size() && s[i] != ',' && s[i] != ']' && s[i] != '[') ++i;
    if (i == start || i >= s.size() || s[i] == '[') return false;
    out.is_list = false;
    out.str = trim(s.substr(start, i - start));
    return !out.str.empty();
}

}  // namespace detail

// First parseable bracketed list literal anywhere in the text.
inline std::optional<ListNode> extract_first_list(std::string_view text) {
    for (std::size_t pos = 0; pos < text.size(); ++pos) {
        if (text[pos] != '[') continue;
        std::size_t i = pos;
        ListNode node;
        if (detail::parse_list(text, i, node, 0)) return node;
    }
    return std::nullopt;
}

inline std::string excerpt(std::string_view text, std::size_t max_len = 60) {
    std::string out(text.substr(0, max_len));
    for (char& c : out)
        if (c == '\n') c = ' ';
    if (text.size() > max_len) out += "...";
    return out;
}

inline std::string quote_single(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\\' || c == '\'') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('\'');
    return out;
}

inline std::string serialize_labels(const std::vector<AspectLabel>& labels) {
    if (labels.empty()) return "[]";
    std::string out = "[";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += "[" + quote_single(labels[i].term) + ", " +
               quote_single(to_string(labels[i].polarity)) + "]";
    }
    out += "]";
    return out;
}

// Parses a label list such as [['lid rigidity', 'positive']]. Pairs with an
// unknown polarity or shape are dropped; absence of any list is an error.
inline std::vector<AspectLabel> parse_label_list(std::string_view text,
                                                 std::size_t* dropped = nullptr) {
    auto list = extract_first_list(text);
    if (!list) throw DataError("no bracketed label list found near: " + excerpt(text));
    std::vector<AspectLabel> labels;
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
        labels.emplace_back(term, *pol);
    }
    return labels;
}

struct SentenceLabelBlock {
    std::string sentence;
    std::vector<AspectLabel> labels;
};

// Parses one "Sentence... Label: [...]" completion block. A leading
// "Sentence:" echo is tolerated; the sentence must be non-empty.
inline SentenceLabelBlock parse_sentence_label_block(std::string_view text) {
    std::size_t label_pos = text.find("Label:");
    if (label_pos == std::string_view::npos)
        throw DataError("missing 'Label:' marker near: " + excerpt(text));
    std::string sentence = trim(text.substr(0, label_pos));
    if (starts_with(sentence, "Sentence:")) sentence = trim(sentence.substr(9));
    sentence = squeeze_whitespace(sentence);
    if (sentence.empty()) throw DataError("empty sentence before 'Label:'");
    SentenceLabelBlock block;
    block.sentence = std::move(sentence);
    block.labels = parse_label_list(text.substr(label_pos + 6));
    return block;
}

}  // namespace absakit
