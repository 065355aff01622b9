#include "serpmine/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <unordered_set>

#include "serpmine/kv_config.hpp"

namespace serpmine {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

bool token_char(char c) {
    auto u = static_cast<unsigned char>(c);
    return std::isalnum(u) || u >= 0x80;
}

std::string label_text(std::string_view s) {
    std::string t = lower_ascii(html::normalize_whitespace(s));
    while (!t.empty() && (t.back() == ':' || t.back() == ' ')) t.pop_back();
    return t;
}

const ValueSet kEmpty;

} // namespace

std::vector<std::string> ExtractionConfig::attribute_names() const {
    std::vector<std::string> out;
    for (const auto& a : attributes) out.push_back(a.name);
    return out;
}

const AttributeRule* ExtractionConfig::attribute(std::string_view name) const {
    for (const auto& a : attributes)
        if (a.name == name) return &a;
    return nullptr;
}

void ExtractionConfig::validate() const {
    using config::ConfigError;
    if (!is_identifier(table_name)) throw ConfigError("table name must be an identifier, got '" + table_name + "'");
    if (attributes.empty()) throw ConfigError("no attributes defined");
    std::unordered_set<std::string> names;
    for (const auto& a : attributes) {
        if (a.name.empty()) throw ConfigError("attribute with empty name");
        if (!names.insert(a.name).second) throw ConfigError("duplicate attribute '" + a.name + "'");
        if (a.locator.empty()) throw ConfigError("attribute '" + a.name + "' has no locator");
        if (a.capture) {
            try {
                std::regex re(*a.capture);
                if (re.mark_count() != 1)
                    throw ConfigError("capture for '" + a.name + "' must have exactly one group");
            } catch (const std::regex_error&) {
                throw ConfigError("capture for '" + a.name + "' is not a valid regex");
            }
        }
    }
    if (key_attributes.empty()) throw ConfigError("at least one key attribute is required");
    for (const auto& k : key_attributes) {
        auto* rule = attribute(k);
        if (!rule) throw ConfigError("key attribute '" + k + "' is not a defined attribute");
        if (!rule->required) throw ConfigError("key attribute '" + k + "' must be required");
    }
}

ExtractionConfig parse_extraction_config(std::string_view text, const std::string& origin) {
    ExtractionConfig cfg;
    for (const auto& e : config::parse(text, origin)) {
        if (e.section == "table") {
            if (!e.has_value || e.key != "name") config::fail(e, origin, "expected 'name = <table>' in [table]");
            cfg.table_name = e.value;
        } else if (e.section == "keys" || e.section == "keywords") {
            if (e.has_value) config::fail(e, origin, "[" + e.section + "] takes one entry per line");
            (e.section == "keys" ? cfg.key_attributes : cfg.keywords).push_back(e.key);
        } else if (e.section == "attributes") {
            auto dot = e.key.rfind('.');
            if (!e.has_value || dot == std::string::npos || dot == 0)
                config::fail(e, origin, "expected '<attribute>.<field> = value' in [attributes]");
            auto name = e.key.substr(0, dot);
            auto field = e.key.substr(dot + 1);
            auto it = std::find_if(cfg.attributes.begin(), cfg.attributes.end(),
                                   [&](const AttributeRule& r) { return r.name == name; });
            if (it == cfg.attributes.end()) {
                cfg.attributes.push_back(AttributeRule{name, {}, std::nullopt, false});
                it = std::prev(cfg.attributes.end());
            }
            if (field == "locator") {
                it->locator = e.value;
            } else if (field == "capture") {
                if (!e.value.empty()) it->capture = e.value;
            } else if (field == "required") {
                it->required = config::to_bool(e, origin);
            } else {
                config::fail(e, origin, "unknown attribute field '" + field + "'");
            }
        } else {
            config::fail(e, origin, e.section.empty() ? "entry outside any section" : "unknown section [" + e.section + "]");
        }
    }
    try {
        cfg.validate();
    } catch (const config::ConfigError& err) {
        throw config::ConfigError(origin + ": " + err.what());
    }
    return cfg;
}

ExtractionConfig load_extraction_config(const std::filesystem::path& path) {
    return parse_extraction_config(config::read_file(path), path.string());
}

const ValueSet& Record::at(const std::string& attribute) const {
    auto it = values.find(attribute);
    return it == values.end() ? kEmpty : it->second;
}

bool keyword_gate(std::string_view url, std::string_view anchor_text, const std::vector<std::string>& keywords) {
    if (keywords.empty()) return true;
    auto u = lower_ascii(url);
    auto t = lower_ascii(anchor_text);
    return std::any_of(keywords.begin(), keywords.end(), [&](const std::string& k) {
        auto lk = lower_ascii(k);
        return u.find(lk) != std::string::npos || t.find(lk) != std::string::npos;
    });
}

std::optional<std::string> locate(const html::Document& doc, std::string_view locator) {
    if (locator.starts_with("id:")) {
        auto el = doc.element_by_id(locator.substr(3));
        if (!el) return std::nullopt;
        return doc.text_content(*el);
    }
    if (locator.starts_with("label:")) {
        auto wanted = label_text(locator.substr(6));
        const auto& nodes = doc.nodes();
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (nodes[i].kind != html::Node::Kind::Element) continue;
            if (label_text(doc.text_content(i)) != wanted) continue;
            if (auto sibling = doc.next_element_sibling(i)) return doc.text_content(*sibling);
        }
        return std::nullopt;
    }
    auto selector = locator.starts_with("css:") ? locator.substr(4) : locator;
    auto hits = doc.select(selector);
    if (hits.empty()) return std::nullopt;
    return doc.text_content(hits.front());
}

std::optional<Record> extract_record(std::string_view page, const std::string& url, const ExtractionConfig& config,
                                     std::vector<std::string>* warnings) {
    if (!html::is_parseable(page)) {
        if (warnings) warnings->push_back("unparseable page " + url);
        return std::nullopt;
    }
    auto doc = html::Document::parse(page);
    Record record;
    record.source_url = url;
    for (const auto& rule : config.attributes) {
        auto& cell = record.values[rule.name];
        std::optional<std::string> region;
        try {
            region = locate(doc, rule.locator);
        } catch (const html::SelectorError& err) {
            if (warnings) warnings->push_back(url + ": " + err.what());
        }
        if (region && rule.capture) {
            std::smatch m;
            std::regex re(*rule.capture);
            if (std::regex_search(*region, m, re) && m[1].matched) {
                region = m[1].str();
            } else {
                region.reset();
            }
        }
        if (region) {
            auto value = html::normalize_whitespace(*region);
            if (!value.empty()) cell.insert(std::move(value));
        }
        if (rule.required && cell.empty()) return std::nullopt;
    }
    return record;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && !token_char(text[i])) ++i;
        auto begin = i;
        while (i < text.size() && token_char(text[i])) ++i;
        if (i > begin) out.push_back(lower_ascii(text.substr(begin, i - begin)));
    }
    return out;
}

RecordVector vectorize(const Record& record) {
    RecordVector v;
    for (const auto& [name, values] : record.values)
        for (const auto& value : values)
            for (auto& token : tokenize(value)) v.weights[std::move(token)] += 1.0;
    return v;
}

double sim_record(const RecordVector& a, const RecordVector& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [t, w] : a.weights) {
        na += w * w;
        if (auto it = b.weights.find(t); it != b.weights.end()) dot += w * it->second;
    }
    for (const auto& [t, w] : b.weights) nb += w * w;
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    double sim = dot / std::sqrt(na * nb);
    return std::clamp(sim, 0.0, 1.0);
}

std::string record_key(const Record& record, const std::vector<std::string>& key_attributes) {
    std::string key;
    for (std::size_t i = 0; i < key_attributes.size(); ++i) {
        if (i) key += '\x1e';
        bool first = true;
        for (const auto& v : record.at(key_attributes[i])) {
            if (!first) key += '\x1f';
            key += v;
            first = false;
        }
    }
    return key;
}

} // namespace serpmine
