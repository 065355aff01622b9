#include <doctest.h>

#include <map>
#include <set>

#include "serpmine/kv_config.hpp"
#include "serpmine/repository.hpp"
#include "serpmine/synthetic_site.hpp"
#include "serpmine/url_similarity.hpp"
#include "support.hpp"

using namespace serpmine;
using serpmine::testing::TempDir;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file_bytes(e.path());
    return out;
}

} // namespace

TEST_CASE("default site shape") {
    TempDir dir("site");
    auto site = generate_site(SiteSpec{}, dir.path());
    CHECK(site.listing_urls.size() == 15);
    CHECK(site.detail_urls.size() == 150);
    CHECK(site.noise_urls.size() == 50);
    CHECK(site.truth.records.size() == 150);
    CHECK(site.start_url == "https://serp.example/tpg/listings.cfm");
    CHECK(site.listing_urls[0] == "https://serp.example/tpg/listings.cfm?query=bluetooth");

    for (const auto& u : site.listing_urls) CHECK(fs::exists(dir.path() / url_to_local_path(u)));
    for (const auto& u : site.detail_urls) CHECK(fs::exists(dir.path() / url_to_local_path(u)));
    for (const auto& u : site.noise_urls) CHECK(fs::exists(dir.path() / url_to_local_path(u)));
    CHECK(fs::exists(dir / kTruthFile));
    CHECK(fs::exists(dir / kCrawlConfigFile));
    CHECK(fs::exists(dir / kExtractConfigFile));

    auto start = parse_url_fields(site.start_url);
    for (const auto& u : site.detail_urls) CHECK(sim_url(parse_url_fields(u), start) >= 0.25);
    for (const auto& u : site.noise_urls) CHECK(sim_url(parse_url_fields(u), start) < 0.25);

    std::set<std::string> keys;
    for (const auto& r : site.truth.records) keys.insert(r.key);
    CHECK(keys.size() == 150);

    auto on_disk = TruthManifest::parse(read_file_bytes(dir / kTruthFile));
    CHECK(on_disk.serialize() == site.truth.serialize());

    auto check = verify_site(dir.path(), site.truth, default_extraction_config(SiteSpec{}.attributes));
    CHECK(check.ok);
    CHECK(check.problems.empty());
}

TEST_CASE("multi-token generated values") {
    TempDir dir("site");
    auto site = generate_site(SiteSpec{}, dir.path());
    const auto& r = site.truth.records.front();
    CHECK(r.at("Company").begin()->starts_with("Company-"));
    CHECK(r.at("Model").begin()->starts_with("Model-"));
    CHECK(r.at("Model").begin()->find("-rev") != std::string::npos);
}

TEST_CASE("generation is deterministic in the seed") {
    TempDir a("site"), b("site"), c("site");
    generate_site(SiteSpec{}, a.path());
    generate_site(SiteSpec{}, b.path());
    SiteSpec other;
    other.seed = 43;
    generate_site(other, c.path());
    CHECK(tree(a.path()) == tree(b.path()));
    CHECK(tree(a.path()) != tree(c.path()));
}

TEST_CASE("conflicting duplicates are recorded in the truth") {
    TempDir dir("site");
    SiteSpec spec;
    spec.duplicate_conflict_count = 10;
    auto site = generate_site(spec, dir.path());
    CHECK(site.detail_urls.size() == 150);
    CHECK(site.truth.records.size() == 140);
    REQUIRE(site.conflict_keys.size() == 10);
    for (const auto& key : site.conflict_keys) {
        auto it = std::find_if(site.truth.records.begin(), site.truth.records.end(),
                               [&](const TruthRecord& r) { return r.key == key; });
        REQUIRE(it != site.truth.records.end());
        CHECK(it->at("SpecVersion").size() == 2);
        CHECK(it->pages.size() == 2);
    }
    CHECK(verify_site(dir.path(), site.truth, default_extraction_config(spec.attributes)).ok);
}

TEST_CASE("verify_site reports missing pages and edited values") {
    TempDir dir("site");
    auto site = generate_site(SiteSpec{}, dir.path());
    auto cfg = default_extraction_config(SiteSpec{}.attributes);

    auto victim = site.detail_urls[3];
    fs::remove(dir.path() / url_to_local_path(victim));
    auto missing = verify_site(dir.path(), site.truth, cfg);
    CHECK_FALSE(missing.ok);
    REQUIRE(missing.problems.size() == 1);
    CHECK(missing.problems[0].find(victim) != std::string::npos);

    TempDir dir2("site");
    auto site2 = generate_site(SiteSpec{}, dir2.path());
    auto page = dir2.path() / url_to_local_path(site2.detail_urls[7]);
    auto body = read_file_bytes(page);
    auto company = *site2.truth.records[7].at("Company").begin();
    auto at = body.find("<td>" + company + "</td>");
    REQUIRE(at != std::string::npos);
    body.replace(at + 4, company.size(), company + "0");
    write_file_bytes(page, body);
    auto edited = verify_site(dir2.path(), site2.truth, cfg);
    CHECK_FALSE(edited.ok);
    REQUIRE(edited.problems.size() == 1);
    CHECK(edited.problems[0].find("Company") != std::string::npos);
}

TEST_CASE("corruption changes the page but not the truth") {
    TempDir dir("site");
    SiteSpec spec;
    spec.corruption_count = 5;
    auto site = generate_site(spec, dir.path());
    CHECK(site.corrupted_keys.size() == 5);
    auto check = verify_site(dir.path(), site.truth, default_extraction_config(spec.attributes));
    CHECK_FALSE(check.ok);
    CHECK(check.problems.size() == 5);
}

TEST_CASE("generator refuses a non-empty output directory and bad specs") {
    TempDir dir("site");
    write_file_bytes(dir / "existing.txt", "x");
    CHECK_THROWS_AS(generate_site(SiteSpec{}, dir.path()), SiteError);

    SiteSpec zero;
    zero.result_pages = 0;
    CHECK_THROWS_AS(zero.validate(), SiteError);
    SiteSpec no_key;
    no_key.attributes = {"Name"};
    CHECK_THROWS_AS(no_key.validate(), SiteError);
    SiteSpec too_many;
    too_many.duplicate_conflict_count = 100;
    CHECK_THROWS_AS(too_many.validate(), SiteError);
}

TEST_CASE("site spec file parsing") {
    auto spec = parse_site_spec(
        "seed = 7\nresult_pages = 3\nrecords_per_page = 4\nnoise_pages = 2\nduplicate_conflict_count = 1\n"
        "corruption_count = 1\npagination_cycle = true\nattributes = QDID, Name, SpecVersion\n");
    CHECK(spec.seed == 7);
    CHECK(spec.result_pages == 3);
    CHECK(spec.records_per_page == 4);
    CHECK(spec.pagination_cycle);
    CHECK(spec.attributes == std::vector<std::string>{"QDID", "Name", "SpecVersion"});
    CHECK_THROWS_AS(parse_site_spec("colour = red\n"), config::ConfigError);
    CHECK_THROWS_AS(parse_site_spec("result_pages = 0\n"), config::ConfigError);

    TempDir dir("site");
    auto site = generate_site(spec, dir.path());
    CHECK(site.listing_urls.size() == 3);
    CHECK(site.truth.records.size() == 11);
    CHECK(verify_site(dir.path(), site.truth, default_extraction_config(spec.attributes)).ok == false);
}
