#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

// On-disk mirror layout under a repository root:
//
//   <root>/manifest.idx             index, one tab-separated line per URL
//   <root>/<host>/<segments>/<file> link-rewritten copy for offline browsing
//   <root>/originals/<same path>    pristine bytes as fetched
//
// manifest.idx:
//   #serpmine-manifest 1
//   #state open|finalized
//   #result <url>                   result pages, in pagination order
//   <url>\t<path>\t<depth>\t<sha256>\t<length>\t<status>
namespace serpmine {

class RepositoryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ManifestEntry {
    std::string url;
    std::string path;     // relative to the root, '/'-separated
    int depth = 0;
    std::string hash;     // sha256 of the original bytes
    std::uint64_t length = 0;
    int status = 200;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct RepositoryManifest {
    std::filesystem::path root;
    std::vector<std::string> result_pages;
    bool finalized = false;
    std::map<std::string, ManifestEntry> entries;

    const std::string* start_url() const { return result_pages.empty() ? nullptr : &result_pages.front(); }
    std::map<std::string, std::string> path_map() const;
};

struct StoredPage {
    std::string url;
    std::string original_bytes;
    std::string rewritten_bytes;
    std::string media_type;
};

// Deterministic URL -> relative file path: <host>/<dirs>/<stem>[_<query>]-<hash8>.<ext>.
// hash8 is FNV-1a of the full canonical URL, which keeps the mapping injective;
// ext is kept for known asset types and forced to html otherwise.
std::string url_to_local_path(std::string_view canonical_url);

bool is_html_path(std::string_view relative_path);

// Relative reference from the file at `from_path` to `to_path`, both
// root-relative.
std::string relative_link(std::string_view from_path, std::string_view to_path);

// Rewrites reference attributes of `body` (stored at `page_path`, fetched from
// `base_url`): mirrored targets become relative file links, unmirrored
// relative targets become absolute URLs, everything else is left untouched.
std::string rewrite_links(std::string_view body, const std::string& base_url,
                          const std::map<std::string, std::string>& url_to_path, std::string_view page_path);

RepositoryManifest load_manifest(const std::filesystem::path& root);

// Mirror writer. save_page may run concurrently for distinct URLs; manifest
// updates are serialized internally.
class Repository {
public:
    // Opens `root`, loading an existing manifest when one is present.
    explicit Repository(std::filesystem::path root);

    const std::filesystem::path& root() const noexcept { return root_; }

    // Marks the manifest open for a crawl and forgets previous result pages.
    void begin_crawl();
    void set_result_pages(std::vector<std::string> urls);

    bool contains(const std::string& url) const;
    std::optional<ManifestEntry> entry(const std::string& url) const;
    std::string read_original(const std::string& url) const;

    // Writes the page and records it; an identical existing entry is left as is.
    ManifestEntry save_page(const StoredPage& page, int depth);

    // Link-rewrites every stored HTML page against the complete manifest and
    // compacts the index.
    void finalize();

    RepositoryManifest manifest() const;

private:
    void append_line(const std::string& line);
    void write_manifest_locked(bool finalized);

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    RepositoryManifest manifest_;
};

// Problems found when checking every entry's original file against its hash.
std::vector<std::string> verify_integrity(const RepositoryManifest& manifest);

struct OfflineWalk {
    std::set<std::string> reached;   // root-relative paths of pages reached
    std::vector<std::pair<std::string, std::string>> dangling;  // (page, reference)
};

// Follows relative references through the rewritten tree starting at
// `start_path` without any network access.
OfflineWalk walk_offline(const std::filesystem::path& root, const std::string& start_path);

std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

} // namespace serpmine
