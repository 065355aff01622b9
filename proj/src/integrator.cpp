#include "serpmine/integrator.hpp"

#include <json.hpp>

#include <unordered_set>

#include "serpmine/html.hpp"
#include "serpmine/url.hpp"

namespace serpmine {

const char* to_string(IntegrationAction action) {
    switch (action) {
    case IntegrationAction::Inserted: return "insert";
    case IntegrationAction::Skipped: return "skip";
    case IntegrationAction::Merged: return "merge";
    case IntegrationAction::Absorbed: return "absorb";
    }
    return "?";
}

IntegrationAction integrate_record(const Record& incoming, RecordStore& store, const ExtractionConfig& config) {
    auto key = record_key(incoming, config.key_attributes);
    auto stored = store.find(key);
    if (!stored) {
        store.put(incoming);
        return IntegrationAction::Inserted;
    }
    if (sim_record(vectorize(incoming), vectorize(*stored)) == 1.0) return IntegrationAction::Skipped;

    Record merged = *stored;
    bool changed = false;
    for (const auto& name : config.attribute_names()) {
        const auto& fresh = incoming.at(name);
        auto& cell = merged.values[name];
        if (fresh == cell) continue;
        auto before = cell.size();
        cell.insert(fresh.begin(), fresh.end());
        changed = changed || cell.size() != before;
    }
    if (!changed) return IntegrationAction::Absorbed;
    store.put(merged);
    return IntegrationAction::Merged;
}

std::string IntegrationReport::to_json() const {
    nlohmann::ordered_json j;
    j["pages_visited"] = pages_visited;
    j["gated_out"] = gated_out;
    j["no_record"] = no_record;
    j["inserted"] = inserted;
    j["merged"] = merged;
    j["skipped"] = skipped;
    j["absorbed"] = absorbed;
    j["warnings"] = warnings;
    return j.dump(2) + "\n";
}

namespace {

class MirrorWalker {
public:
    MirrorWalker(const RepositoryManifest& repo, const ExtractionConfig& config, RecordStore& store)
        : repo_(repo), config_(config), store_(store) {}

    IntegrationReport run() {
        for (const auto& url : repo_.result_pages) {
            visited_.insert(url);
            auto links = links_of(url);
            if (links) walk(std::move(*links));
        }
        try {
            store_.commit();
        } catch (const std::exception& err) {
            throw IntegrationError(err.what(), report_.pages_visited);
        }
        return report_;
    }

private:
    std::optional<std::string> original(const std::string& url) {
        auto it = repo_.entries.find(url);
        if (it == repo_.entries.end()) return std::nullopt;
        try {
            return read_file_bytes(repo_.root / "originals" / it->second.path);
        } catch (const RepositoryError& err) {
            report_.warnings.push_back(err.what());
            return std::nullopt;
        }
    }

    std::optional<std::vector<html::Link>> links_of(const std::string& url) {
        auto it = repo_.entries.find(url);
        if (it == repo_.entries.end() || !is_html_path(it->second.path)) return std::nullopt;
        auto body = original(url);
        if (!body || !html::is_parseable(*body)) return std::nullopt;
        return html::anchor_links(html::Document::parse(*body), parse_url(url));
    }

    // Depth-first over link lists; a gated page's own links are explored
    // before the remaining links of the page that led to it.
    void walk(std::vector<html::Link> root) {
        struct Frame {
            std::vector<html::Link> links;
            std::size_t next = 0;
        };
        std::vector<Frame> stack;
        stack.push_back(Frame{std::move(root)});
        while (!stack.empty()) {
            auto& frame = stack.back();
            if (frame.next >= frame.links.size()) {
                stack.pop_back();
                continue;
            }
            const auto link = frame.links[frame.next++];
            if (!repo_.entries.contains(link.url) || visited_.contains(link.url)) continue;
            if (!keyword_gate(link.url, link.text, config_.keywords)) {
                ++report_.gated_out;
                continue;
            }
            visited_.insert(link.url);
            ++report_.pages_visited;
            integrate_page(link.url);
            if (auto children = links_of(link.url); children && !children->empty())
                stack.push_back(Frame{std::move(*children)});
        }
    }

    void integrate_page(const std::string& url) {
        auto body = original(url);
        if (!body) {
            ++report_.no_record;
            return;
        }
        auto record = extract_record(*body, url, config_, &report_.warnings);
        if (!record) {
            ++report_.no_record;
            return;
        }
        IntegrationAction action;
        try {
            action = integrate_record(*record, store_, config_);
        } catch (const StoreError& err) {
            throw IntegrationError(err.what(), report_.pages_visited);
        }
        switch (action) {
        case IntegrationAction::Inserted: ++report_.inserted; break;
        case IntegrationAction::Skipped: ++report_.skipped; break;
        case IntegrationAction::Merged: ++report_.merged; break;
        case IntegrationAction::Absorbed: ++report_.absorbed; break;
        }
    }

    const RepositoryManifest& repo_;
    const ExtractionConfig& config_;
    RecordStore& store_;
    std::unordered_set<std::string> visited_;
    IntegrationReport report_;
};

} // namespace

IntegrationReport run_wdics(const RepositoryManifest& repo, const ExtractionConfig& config, RecordStore& store) {
    if (!repo.finalized) throw IntegrationError("repository at '" + repo.root.string() + "' is not finalized", 0);
    MirrorWalker walker(repo, config, store);
    return walker.run();
}

} // namespace serpmine
