#include "serpmine/crawler.hpp"

#include <json.hpp>

#include <algorithm>
#include <thread>

#include "serpmine/kv_config.hpp"

namespace serpmine {

namespace {

std::string lower_ascii(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Serves URLs already present in the repository from its originals tree and
// delegates everything else, counting both.
class RepositoryFirstFetcher final : public Fetcher {
public:
    RepositoryFirstFetcher(Fetcher& inner, Repository& repo, std::atomic<std::uint64_t>& fetched,
                           std::atomic<std::uint64_t>& reused)
        : inner_(inner), repo_(repo), fetched_(fetched), reused_(reused) {}

    FetchResult fetch(const std::string& url) override {
        if (auto e = repo_.entry(url)) {
            try {
                auto body = repo_.read_original(url);
                ++reused_;
                return FetchResult{url, e->status, media_type_for_path(e->path), std::move(body)};
            } catch (const RepositoryError&) {
                // fall through to a real fetch when the stored copy is gone
            }
        }
        auto result = inner_.fetch(url);
        ++fetched_;
        return result;
    }

private:
    Fetcher& inner_;
    Repository& repo_;
    std::atomic<std::uint64_t>& fetched_;
    std::atomic<std::uint64_t>& reused_;
};

void update_max(std::atomic<int>& target, int value) {
    int current = target.load();
    while (value > current && !target.compare_exchange_weak(current, value)) {
    }
}

} // namespace

NextPageRule NextPageRule::parse(const std::string& text) {
    NextPageRule rule;
    if (text.starts_with("url:")) {
        rule.kind = Kind::UrlPattern;
        rule.pattern = text.substr(4);
        std::regex probe(rule.pattern);  // throws std::regex_error on bad patterns
    } else {
        rule.kind = Kind::AnchorText;
        rule.pattern = html::normalize_whitespace(text.starts_with("text:") ? text.substr(5) : text);
    }
    if (rule.pattern.empty()) throw config::ConfigError("next_page_rule is empty");
    return rule;
}

bool NextPageRule::matches(const html::Link& link) const {
    if (kind == Kind::UrlPattern) return std::regex_search(link.url, std::regex(pattern));
    return lower_ascii(html::normalize_whitespace(link.text)) == lower_ascii(html::normalize_whitespace(pattern));
}

std::string CrawlConfig::submission_url() const {
    Url url = parse_url(start_url);
    if (form_params.empty()) return url.str();
    std::string query = url.query.value_or("");
    for (const auto& [name, value] : form_params) {
        if (!query.empty()) query += '&';
        query += percent_encode(name) + "=" + percent_encode(value);
    }
    url.query = query;
    return url.str();
}

void CrawlConfig::validate() const {
    if (!try_parse_url(start_url)) throw config::ConfigError("start_url is not an absolute URL: '" + start_url + "'");
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw config::ConfigError("threshold must lie in [0, 1]");
    if (depth_limit < 0) throw config::ConfigError("depth_limit must be >= 0");
    if (max_parallel_fetches < 1) throw config::ConfigError("max_parallel_fetches must be >= 1");
    if (politeness_delay.count() < 0) throw config::ConfigError("politeness_delay_ms must be >= 0");
}

CrawlConfig parse_crawl_config(std::string_view text, const std::string& origin) {
    CrawlConfig cfg;
    bool have_start = false;
    std::unordered_set<std::string> seen;
    for (const auto& e : config::parse(text, origin)) {
        if (!e.section.empty()) config::fail(e, origin, "unexpected section [" + e.section + "]");
        if (!e.has_value) config::fail(e, origin, "expected key = value");
        if (!seen.insert(e.key).second) config::fail(e, origin, "duplicate key '" + e.key + "'");
        if (e.key == "start_url") {
            cfg.start_url = e.value;
            have_start = true;
        } else if (e.key.starts_with("form_param.")) {
            auto name = e.key.substr(11);
            if (name.empty()) config::fail(e, origin, "form_param needs a name");
            cfg.form_params.emplace_back(name, e.value);
        } else if (e.key == "next_page_rule") {
            try {
                cfg.next_page_rule = NextPageRule::parse(e.value);
            } catch (const std::regex_error&) {
                config::fail(e, origin, "invalid next_page_rule pattern");
            } catch (const config::ConfigError& err) {
                config::fail(e, origin, err.what());
            }
        } else if (e.key == "depth_limit") {
            cfg.depth_limit = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "threshold") {
            cfg.threshold = config::to_double(e, origin);
        } else if (e.key == "max_parallel_fetches") {
            cfg.max_parallel_fetches = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "politeness_delay_ms") {
            cfg.politeness_delay = std::chrono::milliseconds(config::to_int(e, origin));
        } else if (e.key == "mirror_assets") {
            cfg.mirror_assets = config::to_bool(e, origin);
        } else {
            config::fail(e, origin, "unknown key '" + e.key + "'");
        }
    }
    if (!have_start) throw config::ConfigError(origin + ": missing start_url");
    try {
        cfg.validate();
    } catch (const config::ConfigError& err) {
        throw config::ConfigError(origin + ": " + err.what());
    }
    return cfg;
}

CrawlConfig load_crawl_config(const std::filesystem::path& path) {
    return parse_crawl_config(config::read_file(path), path.string());
}

ResultPageSet navigate(const CrawlConfig& config, Fetcher& fetcher) {
    ResultPageSet out;
    std::unordered_set<std::string> seen;
    std::string url = config.submission_url();
    while (true) {
        FetchResult fetched;
        try {
            fetched = fetcher.fetch(url);
        } catch (const FetchError& err) {
            if (out.pages.empty()) throw CrawlError(std::string("start page unreachable: ") + err.what());
            out.warnings.push_back(std::string("pagination stopped: ") + err.what());
            break;
        }
        seen.insert(url);
        out.pages.push_back(FetchedPage{url, fetched.content_type, std::move(fetched.body)});

        const auto& body = out.pages.back().body;
        if (!html::is_parseable(body)) break;
        auto doc = html::Document::parse(body);
        std::optional<std::string> next;
        for (const auto& link : html::anchor_links(doc, parse_url(url))) {
            if (link.url != url && config.next_page_rule.matches(link)) {
                next = link.url;
                break;
            }
        }
        if (!next) break;
        if (seen.contains(*next)) {
            out.warnings.push_back("pagination cycle at " + *next + "; stopped after " +
                                   std::to_string(out.pages.size()) + " pages");
            break;
        }
        url = *next;
    }
    return out;
}

HyperlinkSet hypcollection(const ResultPageSet& pages) {
    HyperlinkSet out;
    for (const auto& page : pages.pages) {
        HyperlinkSet::PageLinks entry{page.url, {}};
        if (!html::is_parseable(page.body)) {
            out.warnings.push_back("unparseable result page " + page.url);
        } else {
            auto doc = html::Document::parse(page.body);
            for (auto& link : html::anchor_links(doc, parse_url(page.url))) entry.links.push_back(std::move(link.url));
        }
        out.per_page.push_back(std::move(entry));
    }
    return out;
}

Crawler::Crawler(CrawlConfig config, Fetcher& fetcher, Repository& repo)
    : config_(std::move(config)), start_fields_(parse_url_fields(config_.start_url)), fetcher_(fetcher), repo_(repo) {
    config_.validate();
}

bool Crawler::claim(const std::string& url) {
    std::lock_guard lock(visited_mutex_);
    return visited_.insert(url).second;
}

void Crawler::warn(std::string message) {
    std::lock_guard lock(warn_mutex_);
    warnings_.push_back(std::move(message));
}

Crawler::Loaded Crawler::load(const std::string& url) {
    RepositoryFirstFetcher source(fetcher_, repo_, fetched_, reused_);
    try {
        auto result = source.fetch(url);
        return Loaded{true, FetchedPage{url, result.content_type, std::move(result.body)}};
    } catch (const FetchError& err) {
        ++errors_;
        warn(err.what());
    } catch (const std::exception& err) {
        ++errors_;
        warn("fetch " + url + ": " + err.what());
    }
    return {};
}

std::vector<std::string> Crawler::admit(const CrawlFrame& frame) {
    std::vector<std::string> admitted;
    for (const auto& url : frame.urls) {
        auto parsed = try_parse_url(url);
        if (!parsed || sim_url(url_fields(*parsed), start_fields_) < config_.threshold) {
            ++skipped_threshold_;
            continue;
        }
        if (!claim(parsed->str())) {
            ++skipped_visited_;
            continue;
        }
        admitted.push_back(parsed->str());
    }
    return admitted;
}

void Crawler::mirror_assets(const FetchedPage& page, int depth) {
    if (!config_.mirror_assets || !html::is_parseable(page.body)) return;
    auto doc = html::Document::parse(page.body);
    auto base = doc.base_url(parse_url(page.url));
    for (const auto& ref : html::references(doc)) {
        if (!ref.is_asset) continue;
        auto target = resolve(base, ref.value);
        if (!target || !claim(target->str())) continue;
        auto loaded = load(target->str());
        if (!loaded.ok) continue;
        try {
            repo_.save_page(StoredPage{loaded.page.url, loaded.page.body, {}, loaded.page.content_type}, depth);
            ++assets_;
        } catch (const std::exception& err) {
            ++errors_;
            warn("store " + loaded.page.url + ": " + err.what());
        }
    }
}

void Crawler::store_and_descend(const std::string& url, Loaded loaded, const CrawlFrame& frame) {
    ManifestEntry saved;
    try {
        saved = repo_.save_page(StoredPage{url, loaded.page.body, {}, loaded.page.content_type}, frame.current_level);
    } catch (const std::exception& err) {
        ++errors_;
        warn("store " + url + ": " + err.what());
        return;
    }
    ++stored_;
    update_max(max_depth_, frame.current_level);
    if (!is_html_path(saved.path) || !html::is_parseable(loaded.page.body)) return;

    mirror_assets(loaded.page, frame.current_level);
    if (frame.current_level >= config_.depth_limit) return;

    auto doc = html::Document::parse(loaded.page.body);
    CrawlFrame next{{}, frame.current_level + 1, saved.path};
    for (auto& link : html::anchor_links(doc, parse_url(url))) next.urls.push_back(std::move(link.url));
    webextract(next);
}

void Crawler::webextract(const CrawlFrame& frame) {
    if (frame.current_level > config_.depth_limit) return;

    if (config_.max_parallel_fetches <= 1) {
        for (const auto& url : frame.urls) {
            auto parsed = try_parse_url(url);
            if (!parsed || sim_url(url_fields(*parsed), start_fields_) < config_.threshold) {
                ++skipped_threshold_;
                continue;
            }
            auto canonical = parsed->str();
            if (!claim(canonical)) {
                ++skipped_visited_;
                continue;
            }
            auto loaded = load(canonical);
            if (loaded.ok) store_and_descend(canonical, std::move(loaded), frame);
        }
        return;
    }

    // Claim the whole frame up front, fetch it with a bounded worker pool,
    // then descend in link order.
    auto admitted = admit(frame);
    std::vector<Loaded> results(admitted.size());
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> workers;
        auto n = std::min<std::size_t>(static_cast<std::size_t>(config_.max_parallel_fetches), admitted.size());
        for (std::size_t w = 0; w < n; ++w) {
            workers.emplace_back([&] {
                for (std::size_t i = next++; i < admitted.size(); i = next++) results[i] = load(admitted[i]);
            });
        }
    }
    for (std::size_t i = 0; i < admitted.size(); ++i) {
        if (results[i].ok) store_and_descend(admitted[i], std::move(results[i]), frame);
    }
}

CrawlStats Crawler::stats() const {
    CrawlStats s;
    s.fetched = fetched_;
    s.reused = reused_;
    s.pages_stored = stored_;
    s.result_pages = result_pages_;
    s.assets_stored = assets_;
    s.skipped_threshold = skipped_threshold_;
    s.skipped_visited = skipped_visited_;
    s.fetch_errors = errors_;
    s.max_depth_reached = max_depth_;
    return s;
}

CrawlReport Crawler::run() {
    auto started = std::chrono::steady_clock::now();
    repo_.begin_crawl();

    RepositoryFirstFetcher source(fetcher_, repo_, fetched_, reused_);
    auto w = navigate(config_, source);
    for (auto& msg : w.warnings) warn(msg);

    std::vector<std::string> result_urls;
    for (const auto& page : w.pages) {
        claim(page.url);
        result_urls.push_back(page.url);
    }
    repo_.set_result_pages(result_urls);

    auto h = hypcollection(w);
    for (auto& msg : h.warnings) warn(msg);

    for (std::size_t i = 0; i < w.pages.size(); ++i) {
        const auto& page = w.pages[i];
        ManifestEntry saved;
        try {
            saved = repo_.save_page(StoredPage{page.url, page.body, {}, page.content_type}, 0);
        } catch (const std::exception& err) {
            ++errors_;
            warn("store " + page.url + ": " + err.what());
            continue;
        }
        ++stored_;
        ++result_pages_;
        mirror_assets(page, 0);
        webextract(CrawlFrame{h.per_page[i].links, 0, saved.path});
    }

    CrawlReport report;
    report.stats = stats();
    report.repository_root = repo_.root().string();
    report.warnings = warnings_;
    report.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    return report;
}

std::string CrawlReport::to_json() const {
    nlohmann::ordered_json j;
    j["pages_stored"] = stats.pages_stored;
    j["result_pages"] = stats.result_pages;
    j["assets_stored"] = stats.assets_stored;
    j["fetched"] = stats.fetched;
    j["reused"] = stats.reused;
    j["skipped_threshold"] = stats.skipped_threshold;
    j["skipped_visited"] = stats.skipped_visited;
    j["fetch_errors"] = stats.fetch_errors;
    j["max_depth_reached"] = stats.max_depth_reached;
    j["repository_root"] = repository_root;
    j["warnings"] = warnings;
    j["elapsed_ms"] = elapsed_ms;
    return j.dump(2) + "\n";
}

CrawlReport run_wdes(const CrawlConfig& config, Fetcher& fetcher, Repository& repo) {
    Crawler crawler(config, fetcher, repo);
    return crawler.run();
}

} // namespace serpmine
