#include "serpmine/synthetic_site.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "serpmine/html.hpp"
#include "serpmine/kv_config.hpp"
#include "serpmine/repository.hpp"
#include "serpmine/url_similarity.hpp"

namespace fs = std::filesystem;

namespace serpmine {

namespace {

constexpr std::array kNamePrefixes{"BlueCore", "AirLink", "SoundWave", "NanoPair", "EchoBeam", "TrueSync",
                                   "PulseTalk", "WaveRider"};
constexpr std::array kProductTypes{"Headset", "Car Kit", "Mouse", "Keyboard", "Phone", "Module", "Speaker"};
constexpr std::array kSpecVersions{"1.1", "1.2", "2.0", "2.1", "3.0", "4.0"};

const std::set<std::string>& known_attributes() {
    static const std::set<std::string> s{"QDID", "Name", "Model", "Company", "SpecVersion", "ProductType"};
    return s;
}

// mt19937_64 is fully specified, and reducing with % keeps the value stream
// identical across standard libraries (unlike the <random> distributions).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t below(std::uint64_t n) { return engine_() % n; }

private:
    std::mt19937_64 engine_;
};

struct Planted {
    std::string qdid, name, model, company, spec_version, product_type;
};

struct DetailPage {
    std::size_t record = 0;
    std::string url;
    std::string shown_name;
    std::string shown_spec_version;
};

bool has(const SiteSpec& spec, std::string_view attribute) {
    return std::find(spec.attributes.begin(), spec.attributes.end(), attribute) != spec.attributes.end();
}

std::string page_head(const std::string& title) {
    return "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>" + html::escape(title) +
           "</title>\n<link rel=\"stylesheet\" href=\"/static/site.css\">\n</head>\n<body>\n";
}

std::string listing_href(const SiteSpec& spec, int page) {
    std::string href = "listings.cfm?query=" + spec.query;
    if (page > 1) href += "&amp;page=" + std::to_string(page);
    return href;
}

std::vector<std::string> token_bag(const std::string& value) {
    auto tokens = tokenize(value);
    std::sort(tokens.begin(), tokens.end());
    return tokens;
}

void write_page(const fs::path& root, const std::string& url, const std::string& body) {
    write_file_bytes(root / url_to_local_path(url), body);
}

} // namespace

void SiteSpec::validate() const {
    if (result_pages < 1) throw SiteError("result_pages must be >= 1");
    if (records_per_page < 0 || noise_pages < 0 || duplicate_conflict_count < 0 || corruption_count < 0)
        throw SiteError("counts must be >= 0");
    if (!has(*this, "QDID")) throw SiteError("attributes must include QDID (the record key)");
    std::set<std::string> seen;
    for (const auto& a : attributes) {
        if (!known_attributes().contains(a)) throw SiteError("no value generator for attribute '" + a + "'");
        if (!seen.insert(a).second) throw SiteError("duplicate attribute '" + a + "'");
    }
    int total = result_pages * records_per_page;
    if (duplicate_conflict_count > 0 && !has(*this, "SpecVersion"))
        throw SiteError("duplicate_conflict_count needs the SpecVersion attribute");
    if (corruption_count > 0 && !has(*this, "Name")) throw SiteError("corruption_count needs the Name attribute");
    if (duplicate_conflict_count * 2 > total) throw SiteError("too many duplicates for the number of detail slots");
    if (corruption_count > total - 2 * duplicate_conflict_count)
        throw SiteError("corruption_count exceeds the records available for corruption");
    if (host.empty() || noise_host.empty() || host == noise_host) throw SiteError("host and noise_host must differ");
    if (query.empty() || query.find_first_of("&#?= \t") != std::string::npos) throw SiteError("bad query value");
}

std::string SiteSpec::start_url() const { return "https://" + host + "/tpg/listings.cfm"; }

SiteSpec parse_site_spec(std::string_view text, const std::string& origin) {
    SiteSpec spec;
    std::set<std::string> seen;
    for (const auto& e : config::parse(text, origin)) {
        if (!e.section.empty() || !e.has_value) config::fail(e, origin, "expected key = value");
        if (!seen.insert(e.key).second) config::fail(e, origin, "duplicate key '" + e.key + "'");
        if (e.key == "seed") {
            spec.seed = static_cast<std::uint64_t>(config::to_int(e, origin));
        } else if (e.key == "result_pages") {
            spec.result_pages = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "records_per_page") {
            spec.records_per_page = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "noise_pages") {
            spec.noise_pages = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "duplicate_conflict_count") {
            spec.duplicate_conflict_count = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "corruption_count") {
            spec.corruption_count = static_cast<int>(config::to_int(e, origin));
        } else if (e.key == "pagination_cycle") {
            spec.pagination_cycle = config::to_bool(e, origin);
        } else if (e.key == "host") {
            spec.host = e.value;
        } else if (e.key == "noise_host") {
            spec.noise_host = e.value;
        } else if (e.key == "query") {
            spec.query = e.value;
        } else if (e.key == "attributes") {
            spec.attributes.clear();
            std::stringstream ss(e.value);
            std::string item;
            while (std::getline(ss, item, ',')) {
                auto trimmed = html::normalize_whitespace(item);
                if (!trimmed.empty()) spec.attributes.push_back(trimmed);
            }
        } else {
            config::fail(e, origin, "unknown key '" + e.key + "'");
        }
    }
    try {
        spec.validate();
    } catch (const SiteError& err) {
        throw config::ConfigError(origin + ": " + err.what());
    }
    return spec;
}

std::string default_extraction_config_text(const std::vector<std::string>& attributes) {
    static const std::map<std::string, std::string> rules{
        {"QDID", "QDID.locator = label:QDID\nQDID.capture = QDID:\\s*(\\d+)\nQDID.required = true\n"},
        {"Name", "Name.locator = label:Name\nName.required = true\n"},
        {"Model", "Model.locator = id:model\nModel.required = true\n"},
        {"Company", "Company.locator = label:Company\nCompany.required = true\n"},
        {"SpecVersion", "SpecVersion.locator = label:Spec Version\nSpecVersion.required = false\n"},
        {"ProductType", "ProductType.locator = css:table.specs td.ptype\nProductType.required = true\n"},
    };
    std::string out = "[table]\nname = products\n\n[keys]\nQDID\n\n[keywords]\ndetail.cfm\n\n[attributes]\n";
    for (const auto& a : attributes) {
        auto it = rules.find(a);
        if (it == rules.end()) throw SiteError("no extraction rule for attribute '" + a + "'");
        out += it->second;
    }
    return out;
}

ExtractionConfig default_extraction_config(const std::vector<std::string>& attributes) {
    return parse_extraction_config(default_extraction_config_text(attributes), "<default extraction config>");
}

std::string default_crawl_config_text(const SiteSpec& spec, int depth_limit) {
    return "start_url = " + spec.start_url() + "\nform_param.query = " + spec.query +
           "\nnext_page_rule = text:Next\ndepth_limit = " + std::to_string(depth_limit) +
           "\nthreshold = 0.25\nmax_parallel_fetches = 1\npoliteness_delay_ms = 0\nmirror_assets = false\n";
}

GeneratedSite generate_site(const SiteSpec& spec, const fs::path& out_root) {
    spec.validate();
    if (fs::exists(out_root) && !(fs::is_directory(out_root) && fs::is_empty(out_root)))
        throw SiteError("output directory '" + out_root.string() + "' is not empty");
    fs::create_directories(out_root);

    Rng rng(spec.seed);
    const int total = spec.result_pages * spec.records_per_page;
    const int unique = total - spec.duplicate_conflict_count;

    std::vector<Planted> planted(static_cast<std::size_t>(unique));
    for (int i = 0; i < unique; ++i) {
        auto& p = planted[static_cast<std::size_t>(i)];
        p.qdid = std::to_string(100000 + 10 * i + static_cast<int>(rng.below(10)));
        auto type = kProductTypes[rng.below(kProductTypes.size())];
        p.name = std::string(kNamePrefixes[rng.below(kNamePrefixes.size())]) + " " + type + " " +
                 std::to_string(10 + rng.below(90));
        p.model = "Model-" + std::to_string(100 + rng.below(900)) + "-rev" + std::to_string(1 + rng.below(9));
        p.company = "Company-" + std::to_string(1 + rng.below(12));
        bool with_spec = rng.below(10) < 3;
        auto version = kSpecVersions[rng.below(kSpecVersions.size())];
        if (with_spec) p.spec_version = version;
        p.product_type = type;
    }

    // Conflicting duplicates re-list earlier records; corruption targets others.
    std::vector<std::size_t> order(planted.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    auto dup_count = static_cast<std::size_t>(spec.duplicate_conflict_count);
    auto bad_count = static_cast<std::size_t>(spec.corruption_count);
    std::vector<std::size_t> conflicts(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(dup_count));
    std::vector<std::size_t> corrupted(order.begin() + static_cast<std::ptrdiff_t>(dup_count),
                                       order.begin() + static_cast<std::ptrdiff_t>(dup_count + bad_count));
    std::sort(conflicts.begin(), conflicts.end());
    std::sort(corrupted.begin(), corrupted.end());

    std::vector<std::string> duplicate_versions;
    for (auto idx : conflicts) {
        auto& p = planted[idx];
        if (p.spec_version.empty()) p.spec_version = kSpecVersions[rng.below(kSpecVersions.size())];
        // A bag-of-tokens vector cannot tell "1.2" from "2.1"; such a pair
        // would be skipped as identical, so only token-distinct values conflict.
        std::vector<std::string> candidates;
        for (const char* v : kSpecVersions)
            if (token_bag(v) != token_bag(p.spec_version)) candidates.emplace_back(v);
        duplicate_versions.push_back(candidates[rng.below(candidates.size())]);
    }

    const std::string base = "https://" + spec.host + "/tpg/";
    std::vector<DetailPage> details;
    for (int i = 0; i < unique; ++i) {
        const auto& p = planted[static_cast<std::size_t>(i)];
        bool bad = std::binary_search(corrupted.begin(), corrupted.end(), static_cast<std::size_t>(i));
        details.push_back(DetailPage{static_cast<std::size_t>(i), base + "detail.cfm?qid=" + p.qdid,
                                     bad ? p.name + " X" : p.name, p.spec_version});
    }
    for (std::size_t d = 0; d < conflicts.size(); ++d) {
        const auto& p = planted[conflicts[d]];
        details.push_back(DetailPage{conflicts[d], base + "detail.cfm?qid=" + p.qdid + "&rev=2", p.name,
                                     duplicate_versions[d]});
    }

    GeneratedSite site;
    site.start_url = spec.start_url();
    for (int k = 1; k <= spec.result_pages; ++k)
        site.listing_urls.push_back(base + "listings.cfm?query=" + spec.query +
                                    (k > 1 ? "&page=" + std::to_string(k) : ""));
    for (const auto& d : details) site.detail_urls.push_back(d.url);
    for (int j = 1; j <= spec.noise_pages; ++j)
        site.noise_urls.push_back("http://" + spec.noise_host + "/promo/offer-" + std::to_string(j) + ".html");

    // Relevance must be decidable by the crawl threshold alone.
    const auto start_fields = parse_url_fields(site.start_url);
    for (const auto& u : site.listing_urls)
        if (sim_url(parse_url_fields(u), start_fields) < 0.25) throw SiteError("listing URL scores below 0.25: " + u);
    for (const auto& u : site.detail_urls)
        if (sim_url(parse_url_fields(u), start_fields) < 0.25) throw SiteError("detail URL scores below 0.25: " + u);
    for (const auto& u : site.noise_urls)
        if (sim_url(parse_url_fields(u), start_fields) >= 0.25) throw SiteError("noise URL scores >= 0.25: " + u);

    auto detail_page_of = [&](std::size_t slot) {
        return static_cast<int>(slot / static_cast<std::size_t>(spec.records_per_page)) + 1;
    };

    for (int k = 1; k <= spec.result_pages; ++k) {
        std::string body = page_head("Qualified products - page " + std::to_string(k) + " of " +
                                     std::to_string(spec.result_pages));
        body += "<h1>Qualified product listings</h1>\n<table class=\"results\">\n"
                "<tr><th>QDID</th><th>Product</th><th>Company</th></tr>\n";
        for (int r = 0; r < spec.records_per_page; ++r) {
            auto slot = static_cast<std::size_t>((k - 1) * spec.records_per_page + r);
            const auto& d = details[slot];
            const auto& p = planted[d.record];
            std::string href = "detail.cfm?qid=" + p.qdid + (d.url.ends_with("&rev=2") ? "&amp;rev=2" : "");
            body += "<tr><td>" + p.qdid + "</td><td><a href=\"" + href + "\">" + html::escape(d.shown_name) +
                    "</a></td><td>" + html::escape(p.company) + "</td></tr>\n";
        }
        body += "</table>\n";
        for (int j = 1; j <= spec.noise_pages; ++j) {
            if ((j - 1) % spec.result_pages != k - 1) continue;
            body += "<div class=\"sponsored\"><a href=\"" + site.noise_urls[static_cast<std::size_t>(j - 1)] +
                    "\">Sponsored offer " + std::to_string(j) + "</a></div>\n";
        }
        body += "<div class=\"pager\">";
        if (k > 1) body += "<a href=\"" + listing_href(spec, k - 1) + "\">Previous</a> ";
        if (k < spec.result_pages) body += "<a href=\"" + listing_href(spec, k + 1) + "\">Next</a>";
        else if (spec.pagination_cycle && spec.result_pages > 1) body += "<a href=\"" + listing_href(spec, 1) + "\">Next</a>";
        body += "</div>\n</body>\n</html>\n";
        write_page(out_root, site.listing_urls[static_cast<std::size_t>(k - 1)], body);
    }

    for (std::size_t slot = 0; slot < details.size(); ++slot) {
        const auto& d = details[slot];
        const auto& p = planted[d.record];
        std::string body = page_head("QDID " + p.qdid);
        body += "<div id=\"product\">\n<h2>" + html::escape(d.shown_name) + "</h2>\n<table class=\"specs\">\n";
        if (has(spec, "QDID")) body += "<tr><th>QDID</th><td>QDID: " + p.qdid + "</td></tr>\n";
        if (has(spec, "Name")) body += "<tr><th>Name</th><td>" + html::escape(d.shown_name) + "</td></tr>\n";
        if (has(spec, "Model")) body += "<tr><th>Model</th><td id=\"model\">" + html::escape(p.model) + "</td></tr>\n";
        if (has(spec, "Company")) body += "<tr><th>Company</th><td>" + html::escape(p.company) + "</td></tr>\n";
        if (has(spec, "SpecVersion") && !d.shown_spec_version.empty())
            body += "<tr><th>Spec Version</th><td>" + d.shown_spec_version + "</td></tr>\n";
        if (has(spec, "ProductType"))
            body += "<tr><th>Product Type</th><td class=\"ptype\">" + html::escape(p.product_type) + "</td></tr>\n";
        body += "</table>\n<p><a href=\"" + listing_href(spec, detail_page_of(slot)) +
                "\">Back to results</a></p>\n</div>\n</body>\n</html>\n";
        write_page(out_root, d.url, body);
    }

    for (std::size_t j = 0; j < site.noise_urls.size(); ++j) {
        std::string body = "<!DOCTYPE html>\n<html><head><title>Offer " + std::to_string(j + 1) +
                           "</title></head>\n<body><p>Limited time offer.</p></body></html>\n";
        write_page(out_root, site.noise_urls[j], body);
    }
    write_page(out_root, "https://" + spec.host + "/static/site.css",
               "body { font-family: sans-serif; }\ntable { border-collapse: collapse; }\n");

    site.truth.attributes = spec.attributes;
    site.truth.key_attributes = {"QDID"};
    for (std::size_t i = 0; i < planted.size(); ++i) {
        const auto& p = planted[i];
        TruthRecord r;
        r.key = p.qdid;
        auto put = [&](const char* name, const std::string& value) {
            if (has(spec, name) && !value.empty()) r.values[name].insert(value);
        };
        put("QDID", p.qdid);
        put("Name", p.name);
        put("Model", p.model);
        put("Company", p.company);
        put("SpecVersion", p.spec_version);
        put("ProductType", p.product_type);
        for (const auto& d : details)
            if (d.record == i) {
                r.pages.push_back(d.url);
                if (d.url.ends_with("&rev=2")) put("SpecVersion", d.shown_spec_version);
            }
        site.truth.records.push_back(std::move(r));
    }
    for (auto idx : conflicts) site.conflict_keys.push_back(planted[idx].qdid);
    for (auto idx : corrupted) site.corrupted_keys.push_back(planted[idx].qdid);

    write_file_bytes(out_root / kTruthFile, site.truth.serialize());
    write_file_bytes(out_root / kCrawlConfigFile, default_crawl_config_text(spec));
    write_file_bytes(out_root / kExtractConfigFile, default_extraction_config_text(spec.attributes));
    return site;
}

SiteCheck verify_site(const fs::path& out_root, const TruthManifest& truth, const ExtractionConfig& config) {
    SiteCheck check;
    auto problem = [&](std::string what) {
        check.ok = false;
        check.problems.push_back(std::move(what));
    };
    for (const auto& r : truth.records) {
        if (r.pages.empty()) problem("record " + r.key + " lists no detail page");
        std::map<std::string, ValueSet> seen;
        bool complete = true;
        for (const auto& url : r.pages) {
            std::string body;
            try {
                body = read_file_bytes(out_root / url_to_local_path(url));
            } catch (const RepositoryError&) {
                problem("missing detail page " + url);
                complete = false;
                continue;
            }
            auto record = extract_record(body, url, config);
            if (!record) {
                problem("no record extracted from " + url);
                complete = false;
                continue;
            }
            for (const auto& [name, values] : record->values) seen[name].insert(values.begin(), values.end());
        }
        if (!complete) continue;
        for (const auto& a : config.attribute_names()) {
            if (seen[a] != r.at(a)) problem("record " + r.key + ": attribute " + a + " differs from planted value");
        }
    }
    return check;
}

} // namespace serpmine
