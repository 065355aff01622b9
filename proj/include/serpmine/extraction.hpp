#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "serpmine/html.hpp"

namespace serpmine {

// Where an attribute's value lives in a detail page.
//   id:<element id>        text of that element
//   label:<text>           text of the element right after the element whose
//                          whole text is <text> (optionally followed by ':')
//   css:<selector>         text of the first element matching the selector
// A locator without a prefix is taken as a selector.
struct AttributeRule {
    std::string name;
    std::string locator;
    std::optional<std::string> capture;  // regex with exactly one capture group
    bool required = false;
};

struct ExtractionConfig {
    std::string table_name;
    std::vector<AttributeRule> attributes;
    std::vector<std::string> keywords;
    std::vector<std::string> key_attributes;

    std::vector<std::string> attribute_names() const;
    const AttributeRule* attribute(std::string_view name) const;
    void validate() const;  // throws config::ConfigError
};

// Sections: [table] name = ..., [keys] and [keywords] one entry per line,
// [attributes] <name>.locator / <name>.capture / <name>.required = ...
ExtractionConfig parse_extraction_config(std::string_view text, const std::string& origin = "<extraction config>");
ExtractionConfig load_extraction_config(const std::filesystem::path& path);

using ValueSet = std::set<std::string>;

// One row: attribute name -> set of values. Store-resident records carry an
// empty source_url.
struct Record {
    std::map<std::string, ValueSet> values;
    std::string source_url;

    const ValueSet& at(const std::string& attribute) const;
    friend bool operator==(const Record& a, const Record& b) { return a.values == b.values; }
};

// Bag-of-tokens term counts.
struct RecordVector {
    std::map<std::string, double> weights;
    bool empty() const noexcept { return weights.empty(); }
};

// True iff some keyword is a case-insensitive substring of the URL or the
// anchor text. An empty keyword list admits everything.
bool keyword_gate(std::string_view url, std::string_view anchor_text, const std::vector<std::string>& keywords);

// Applies every rule; nullopt when a required attribute is missing or the
// page cannot be parsed. Values are whitespace-normalized.
std::optional<Record> extract_record(std::string_view page, const std::string& url, const ExtractionConfig& config,
                                     std::vector<std::string>* warnings = nullptr);

// Region text for one locator, or nullopt when it finds nothing.
std::optional<std::string> locate(const html::Document& doc, std::string_view locator);

// Lowercased alphanumeric runs of the record's values.
std::vector<std::string> tokenize(std::string_view text);
RecordVector vectorize(const Record& record);

// Cosine of two term vectors; 1 when both are empty, 0 when exactly one is.
double sim_record(const RecordVector& a, const RecordVector& b);

// Alignment key built from the key attributes' value sets.
std::string record_key(const Record& record, const std::vector<std::string>& key_attributes);

} // namespace serpmine
