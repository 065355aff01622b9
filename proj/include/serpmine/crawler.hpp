#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <regex>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "serpmine/fetcher.hpp"
#include "serpmine/html.hpp"
#include "serpmine/repository.hpp"
#include "serpmine/url_similarity.hpp"

namespace serpmine {

class CrawlError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Identifies the pagination link on a result page: `text:<anchor text>`
// (case-insensitive, whitespace-normalized equality) or `url:<regex>`
// searched in the resolved link URL.
struct NextPageRule {
    enum class Kind { AnchorText, UrlPattern };
    Kind kind = Kind::AnchorText;
    std::string pattern = "Next";

    static NextPageRule parse(const std::string& text);
    bool matches(const html::Link& link) const;
};

struct CrawlConfig {
    std::string start_url;
    std::vector<std::pair<std::string, std::string>> form_params;
    NextPageRule next_page_rule;
    int depth_limit = 1;
    double threshold = 0.25;
    int max_parallel_fetches = 1;
    std::chrono::milliseconds politeness_delay{0};
    bool mirror_assets = false;

    // Start URL with form parameters submitted as a query string.
    std::string submission_url() const;
    void validate() const;  // throws config::ConfigError
};

CrawlConfig parse_crawl_config(std::string_view text, const std::string& origin = "<crawl config>");
CrawlConfig load_crawl_config(const std::filesystem::path& path);

struct FetchedPage {
    std::string url;
    std::string content_type;
    std::string body;
};

// W: result pages in pagination order, no duplicate URLs.
struct ResultPageSet {
    std::vector<FetchedPage> pages;
    std::vector<std::string> warnings;
};

// H(W): per result page, its resolved anchor targets in document order.
struct HyperlinkSet {
    struct PageLinks {
        std::string source_url;
        std::vector<std::string> links;
    };
    std::vector<PageLinks> per_page;
    std::vector<std::string> warnings;
};

struct CrawlFrame {
    std::vector<std::string> urls;
    int current_level = 0;
    std::string local_path;  // repository path of the page these links came from
};

struct CrawlStats {
    std::uint64_t fetched = 0;           // network (or fixture) retrievals
    std::uint64_t reused = 0;            // served from an existing repository
    std::uint64_t pages_stored = 0;      // pages admitted and saved this run
    std::uint64_t result_pages = 0;
    std::uint64_t assets_stored = 0;
    std::uint64_t skipped_threshold = 0;
    std::uint64_t skipped_visited = 0;
    std::uint64_t fetch_errors = 0;
    int max_depth_reached = 0;
};

struct CrawlReport {
    CrawlStats stats;
    std::string repository_root;
    std::int64_t elapsed_ms = 0;
    std::vector<std::string> warnings;

    // Stable JSON document; elapsed_ms is the only run-dependent field.
    std::string to_json() const;
};

ResultPageSet navigate(const CrawlConfig& config, Fetcher& fetcher);

HyperlinkSet hypcollection(const ResultPageSet& pages);

// One crawl over a repository. Holds the visited set and counters shared by
// all frames; with max_parallel_fetches == 1 frames are walked strictly
// depth-first in link order.
class Crawler {
public:
    Crawler(CrawlConfig config, Fetcher& fetcher, Repository& repo);

    CrawlReport run();

    // Admits, stores and recurses over one frame of links.
    void webextract(const CrawlFrame& frame);

    // Marks a URL visited; false when it was already claimed.
    bool claim(const std::string& url);

    CrawlStats stats() const;

private:
    struct Loaded {
        bool ok = false;
        FetchedPage page;
    };

    Loaded load(const std::string& url);
    std::vector<std::string> admit(const CrawlFrame& frame);
    void store_and_descend(const std::string& url, Loaded loaded, const CrawlFrame& frame);
    void mirror_assets(const FetchedPage& page, int depth);
    void warn(std::string message);

    CrawlConfig config_;
    UrlFields start_fields_;
    Fetcher& fetcher_;
    Repository& repo_;

    std::mutex visited_mutex_;
    std::unordered_set<std::string> visited_;

    std::atomic<std::uint64_t> fetched_{0}, reused_{0}, stored_{0}, assets_{0};
    std::atomic<std::uint64_t> skipped_threshold_{0}, skipped_visited_{0}, errors_{0};
    std::atomic<int> max_depth_{0};
    std::uint64_t result_pages_ = 0;

    std::mutex warn_mutex_;
    std::vector<std::string> warnings_;
};

// navigate -> hypcollection -> store W -> webextract per result page. Link
// rewriting is left to Repository::finalize().
CrawlReport run_wdes(const CrawlConfig& config, Fetcher& fetcher, Repository& repo);

} // namespace serpmine
