#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "serpmine/extraction.hpp"
#include "serpmine/record_store.hpp"

namespace serpmine {

class TruthError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EvalCounts {
    std::string attribute;
    std::uint64_t total_records = 0;      // TR
    std::uint64_t extracted_records = 0;  // ER
    std::uint64_t correct_records = 0;    // CR
};

// CR / ER; nullopt when ER == 0.
std::optional<double> precision(const EvalCounts& counts);
// ER / TR; nullopt when TR == 0. Not clamped: ER > TR yields a value above 1.
std::optional<double> recall(const EvalCounts& counts);
// CR / TR, the conventional definition, reported alongside.
std::optional<double> standard_recall(const EvalCounts& counts);

struct EvalRow {
    std::string system;
    EvalCounts counts;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> standard_recall;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<std::string> warnings;

    void add(const std::string& system, const EvalCounts& counts);
};

// Ground truth written by the site generator, one planted record per line:
//
//   #serpmine-truth 1
//   #attributes <a1>\t<a2>...
//   #keys <k1>\t...
//   <key>\t@page=<url>...\t<attr>=<value>...
//
// An attribute repeats once per value; backslash, tab and newline inside
// values are escaped as \\, \t and \n.
struct TruthRecord {
    std::string key;
    std::vector<std::string> pages;
    std::map<std::string, ValueSet> values;

    const ValueSet& at(const std::string& attribute) const;
};

struct TruthManifest {
    std::vector<std::string> attributes;
    std::vector<std::string> key_attributes;
    std::vector<TruthRecord> records;

    std::string serialize() const;
    static TruthManifest parse(std::string_view text);  // throws TruthError
};

// Per attribute: TR = truth records with a value, ER = store rows with a
// value, CR = store rows whose value set equals the truth set for that key.
EvalReport score_run(const CsvTable& store_export, const TruthManifest& truth, const std::string& system = "extracted");

// Columns: attribute,system,TR,ER,CR,precision,recall,recall_standard.
// Ratios use 4 decimals; undefined ratios print as NA.
std::string emit_table(const EvalReport& report);

} // namespace serpmine
