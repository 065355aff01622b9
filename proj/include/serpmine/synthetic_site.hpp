#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "serpmine/eval.hpp"
#include "serpmine/extraction.hpp"

namespace serpmine {

class SiteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape of a generated result-page site. Counts are totals except
// records_per_page; noise pages are spread round-robin over the listing pages.
struct SiteSpec {
    std::uint64_t seed = 42;
    int result_pages = 15;
    int records_per_page = 10;
    std::vector<std::string> attributes{"QDID", "Name", "Model", "Company", "SpecVersion", "ProductType"};
    int noise_pages = 50;
    int duplicate_conflict_count = 0;  // detail pages re-listing a record with another SpecVersion
    int corruption_count = 0;          // records whose page shows a Name differing from the truth
    bool pagination_cycle = false;     // last page's Next link points back to page 1
    std::string host = "serp.example";
    std::string noise_host = "ads.noise.example";
    std::string query = "bluetooth";

    void validate() const;  // throws SiteError
    std::string start_url() const;
};

// Reads the key = value dialect used for crawl configs; keys mirror the field names.
SiteSpec parse_site_spec(std::string_view text, const std::string& origin = "<site spec>");

struct GeneratedSite {
    TruthManifest truth;
    std::string start_url;
    std::vector<std::string> listing_urls;   // pagination order, as the crawler submits them
    std::vector<std::string> detail_urls;
    std::vector<std::string> noise_urls;
    std::vector<std::string> conflict_keys;
    std::vector<std::string> corrupted_keys;
};

inline constexpr const char* kTruthFile = "truth.manifest";
inline constexpr const char* kCrawlConfigFile = "crawl.conf";
inline constexpr const char* kExtractConfigFile = "extract.conf";

// Writes the site under `out_root` in fixture layout plus truth.manifest,
// crawl.conf and extract.conf. `out_root` must be absent or empty.
GeneratedSite generate_site(const SiteSpec& spec, const std::filesystem::path& out_root);

// Extraction config matching the generator's detail page markup.
std::string default_extraction_config_text(const std::vector<std::string>& attributes);
ExtractionConfig default_extraction_config(const std::vector<std::string>& attributes);

std::string default_crawl_config_text(const SiteSpec& spec, int depth_limit = 2);

struct SiteCheck {
    bool ok = true;
    std::vector<std::string> problems;
};

// Every truth record's detail pages exist and yield exactly the planted values.
SiteCheck verify_site(const std::filesystem::path& out_root, const TruthManifest& truth,
                      const ExtractionConfig& config);

} // namespace serpmine
