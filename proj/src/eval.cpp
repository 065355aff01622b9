#include "serpmine/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "serpmine/csv.hpp"

namespace serpmine {

namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::string format_ratio(const std::optional<double>& value) {
    if (!value) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *value);
    return buf;
}

std::string escape_value(std::string_view v) {
    std::string out;
    for (char c : v) {
        if (c == '\\') out += "\\\\";
        else if (c == '\t') out += "\\t";
        else if (c == '\n') out += "\\n";
        else out += c;
    }
    return out;
}

std::string unescape_value(std::string_view v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != '\\' || i + 1 == v.size()) {
            out += v[i];
            continue;
        }
        char c = v[++i];
        out += c == 't' ? '\t' : c == 'n' ? '\n' : c;
    }
    return out;
}

std::vector<std::string> split_tabs(std::string_view line) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        out.emplace_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return out;
}

const ValueSet kEmpty;

} // namespace

std::optional<double> precision(const EvalCounts& c) { return ratio(c.correct_records, c.extracted_records); }
std::optional<double> recall(const EvalCounts& c) { return ratio(c.extracted_records, c.total_records); }
std::optional<double> standard_recall(const EvalCounts& c) { return ratio(c.correct_records, c.total_records); }

void EvalReport::add(const std::string& system, const EvalCounts& counts) {
    EvalRow row{system, counts, precision(counts), recall(counts), standard_recall(counts)};
    if (counts.correct_records > counts.extracted_records)
        warnings.push_back(counts.attribute + "/" + system + ": CR exceeds ER");
    if (row.recall && *row.recall > 1.0)
        warnings.push_back(counts.attribute + "/" + system + ": ER exceeds TR, recall above 1");
    rows.push_back(std::move(row));
}

const ValueSet& TruthRecord::at(const std::string& attribute) const {
    auto it = values.find(attribute);
    return it == values.end() ? kEmpty : it->second;
}

std::string TruthManifest::serialize() const {
    std::string out = "#serpmine-truth 1\n#attributes";
    for (const auto& a : attributes) out += "\t" + escape_value(a);
    out += "\n#keys";
    for (const auto& k : key_attributes) out += "\t" + escape_value(k);
    out += "\n";
    for (const auto& r : records) {
        out += escape_value(r.key);
        for (const auto& p : r.pages) out += "\t@page=" + escape_value(p);
        for (const auto& a : attributes)
            for (const auto& v : r.at(a)) out += "\t" + escape_value(a) + "=" + escape_value(v);
        out += "\n";
    }
    return out;
}

TruthManifest TruthManifest::parse(std::string_view text) {
    TruthManifest m;
    std::set<std::string> keys;
    std::set<std::string> computed_keys;
    bool saw_header = false, saw_attrs = false, saw_keys = false;
    std::size_t pos = 0;
    int line_no = 0;
    auto fail = [&](const std::string& what) -> void {
        throw TruthError("truth manifest line " + std::to_string(line_no) + ": " + what);
    };
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "#serpmine-truth 1") fail("unsupported header");
            saw_header = true;
            continue;
        }
        auto cols = split_tabs(line);
        if (cols[0] == "#attributes" || cols[0] == "#keys") {
            auto& target = cols[0] == "#keys" ? m.key_attributes : m.attributes;
            for (std::size_t i = 1; i < cols.size(); ++i) target.push_back(unescape_value(cols[i]));
            (cols[0] == "#keys" ? saw_keys : saw_attrs) = true;
            continue;
        }
        if (line[0] == '#') continue;
        if (!saw_attrs || !saw_keys) fail("record before #attributes/#keys");
        TruthRecord r;
        r.key = unescape_value(cols[0]);
        if (r.key.empty()) fail("empty key");
        for (std::size_t i = 1; i < cols.size(); ++i) {
            auto eq = cols[i].find('=');
            if (eq == std::string::npos) fail("expected attr=value, got '" + cols[i] + "'");
            auto name = unescape_value(std::string_view(cols[i]).substr(0, eq));
            auto value = unescape_value(std::string_view(cols[i]).substr(eq + 1));
            if (name == "@page") {
                r.pages.push_back(value);
                continue;
            }
            if (std::find(m.attributes.begin(), m.attributes.end(), name) == m.attributes.end())
                fail("unknown attribute '" + name + "'");
            if (value.empty()) fail("empty value for '" + name + "'");
            r.values[name].insert(value);
        }
        for (const auto& k : m.key_attributes)
            if (r.at(k).empty()) fail("record '" + r.key + "' lacks key attribute '" + k + "'");
        if (!keys.insert(r.key).second) fail("duplicate key '" + r.key + "'");
        Record as_record;
        as_record.values = r.values;
        if (!computed_keys.insert(record_key(as_record, m.key_attributes)).second)
            fail("key collision for '" + r.key + "'");
        m.records.push_back(std::move(r));
    }
    if (!saw_header) throw TruthError("truth manifest: missing header");
    if (!saw_attrs || !saw_keys) throw TruthError("truth manifest: missing #attributes or #keys");
    for (const auto& k : m.key_attributes)
        if (std::find(m.attributes.begin(), m.attributes.end(), k) == m.attributes.end())
            throw TruthError("truth manifest: key '" + k + "' is not an attribute");
    return m;
}

EvalReport score_run(const CsvTable& store_export, const TruthManifest& truth, const std::string& system) {
    std::unordered_map<std::string, const TruthRecord*> by_key;
    for (const auto& r : truth.records) {
        Record as_record;
        as_record.values = r.values;
        by_key.emplace(record_key(as_record, truth.key_attributes), &r);
    }

    EvalReport report;
    for (const auto& attribute : truth.attributes) {
        EvalCounts c;
        c.attribute = attribute;
        for (const auto& r : truth.records)
            if (!r.at(attribute).empty()) ++c.total_records;
        for (const auto& row : store_export.records) {
            const auto& cell = row.at(attribute);
            if (cell.empty()) continue;
            ++c.extracted_records;
            auto it = by_key.find(record_key(row, truth.key_attributes));
            if (it != by_key.end() && it->second->at(attribute) == cell) ++c.correct_records;
        }
        report.add(system, c);
    }
    return report;
}

std::string emit_table(const EvalReport& report) {
    std::string out = csv::format_row({"attribute", "system", "TR", "ER", "CR", "precision", "recall", "recall_standard"});
    for (const auto& row : report.rows) {
        out += csv::format_row({row.counts.attribute, row.system, std::to_string(row.counts.total_records),
                                std::to_string(row.counts.extracted_records),
                                std::to_string(row.counts.correct_records), format_ratio(row.precision),
                                format_ratio(row.recall), format_ratio(row.standard_recall)});
    }
    return out;
}

} // namespace serpmine
