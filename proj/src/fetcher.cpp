#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "serpmine/fetcher.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "serpmine/repository.hpp"
#include "serpmine/url.hpp"

namespace serpmine {

bool FetchResult::is_html() const {
    return content_type.find("html") != std::string::npos;
}

std::string media_type_for_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (ext == ".html" || ext == ".htm") return "text/html";
    if (ext == ".css") return "text/css";
    if (ext == ".js") return "application/javascript";
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".gif") return "image/gif";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".ico") return "image/x-icon";
    if (ext == ".pdf") return "application/pdf";
    if (ext == ".txt") return "text/plain";
    if (ext == ".json") return "application/json";
    if (ext == ".xml") return "application/xml";
    return "application/octet-stream";
}

FixtureFetcher::FixtureFetcher(std::filesystem::path root) : root_(std::move(root)) {}

FetchResult FixtureFetcher::fetch(const std::string& url) {
    std::string canonical;
    try {
        canonical = canonicalize(url);
    } catch (const UrlError&) {
        throw FetchError(url, "malformed URL");
    }
    auto path = root_ / url_to_local_path(canonical);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FetchError(canonical, "not found in fixture", 404);
    std::ostringstream ss;
    ss << in.rdbuf();
    return FetchResult{canonical, 200, media_type_for_path(path), ss.str()};
}

HttpFetcher::HttpFetcher(HttpOptions options) : options_(std::move(options)) {}

void HttpFetcher::wait_turn() {
    if (options_.politeness_delay.count() <= 0) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(pace_mutex_);
        auto now = std::chrono::steady_clock::now();
        slot = std::max(now, next_slot_);
        next_slot_ = slot + options_.politeness_delay;
    }
    std::this_thread::sleep_until(slot);
}

FetchResult HttpFetcher::fetch(const std::string& url) {
    auto target = try_parse_url(url);
    if (!target || (target->scheme != "http" && target->scheme != "https"))
        throw FetchError(url, "unsupported URL");
    const std::string requested = target->str();

    for (int hop = 0; hop <= options_.max_redirects; ++hop) {
        wait_turn();
        httplib::Client client(target->scheme + "://" + target->authority());
        client.set_connection_timeout(options_.timeout);
        client.set_read_timeout(options_.timeout);
        client.set_write_timeout(options_.timeout);
        client.set_follow_location(false);
        std::string path = target->path + (target->query ? "?" + *target->query : "");
        auto res = client.Get(path, httplib::Headers{{"User-Agent", options_.user_agent}});
        if (!res) throw FetchError(requested, "request failed: " + httplib::to_string(res.error()));

        if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
            auto next = resolve(*target, res->get_header_value("Location"));
            if (!next) throw FetchError(requested, "bad redirect location", res->status);
            target = *next;
            continue;
        }
        if (res->status >= 400) throw FetchError(requested, "HTTP " + std::to_string(res->status), res->status);
        return FetchResult{requested, res->status, res->get_header_value("Content-Type"), std::move(res->body)};
    }
    throw FetchError(requested, "too many redirects");
}

} // namespace serpmine
