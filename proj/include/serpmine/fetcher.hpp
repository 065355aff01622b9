#pragma once

#include <chrono>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>

namespace serpmine {

class FetchError : public std::runtime_error {
public:
    FetchError(const std::string& url, const std::string& reason, int status = 0)
        : std::runtime_error("fetch " + url + ": " + reason), url_(url), status_(status) {}
    const std::string& url() const noexcept { return url_; }
    int status() const noexcept { return status_; }

private:
    std::string url_;
    int status_;
};

struct FetchResult {
    std::string url;           // canonical URL that was requested
    int status = 200;
    std::string content_type;
    std::string body;

    bool is_html() const;
};

// Retrieves a resource by canonical absolute URL. Implementations must be
// safe to call concurrently; failures throw FetchError.
class Fetcher {
public:
    virtual ~Fetcher() = default;
    virtual FetchResult fetch(const std::string& url) = 0;
};

// Serves files from a directory laid out with url_to_local_path, so a
// generated site or a repository's originals/ tree can stand in for the web.
class FixtureFetcher final : public Fetcher {
public:
    explicit FixtureFetcher(std::filesystem::path root);
    FetchResult fetch(const std::string& url) override;

private:
    std::filesystem::path root_;
};

struct HttpOptions {
    std::chrono::milliseconds politeness_delay{0};
    std::chrono::seconds timeout{30};
    int max_redirects = 5;
    std::string user_agent = "serpmine/1.0";
};

// Live HTTP(S) fetcher. Redirects are followed up to max_redirects hops and
// successive requests are spaced by politeness_delay across all threads.
class HttpFetcher final : public Fetcher {
public:
    explicit HttpFetcher(HttpOptions options = {});
    FetchResult fetch(const std::string& url) override;

private:
    void wait_turn();

    HttpOptions options_;
    std::mutex pace_mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

std::string media_type_for_path(const std::filesystem::path& path);

} // namespace serpmine
