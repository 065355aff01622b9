#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "serpmine/crawler.hpp"
#include "serpmine/integrator.hpp"
#include "serpmine/kv_config.hpp"
#include "serpmine/record_store.hpp"
#include "serpmine/synthetic_site.hpp"
#include "support.hpp"

using namespace serpmine;
using serpmine::testing::TempDir;

namespace {

const char* kConfig = R"(# products table
[table]
name = products

[keys]
QDID

[keywords]
detail.cfm

[attributes]
QDID.locator = label:QDID
QDID.capture = QDID:\s*(\d+)
QDID.required = true
Name.locator = label:Name
Name.required = true
Model.locator = id:model
SpecVersion.locator = css:table.specs td.spec
)";

Record record(std::map<std::string, ValueSet> values) {
    Record r;
    r.values = std::move(values);
    return r;
}

ExtractionConfig small_config() { return parse_extraction_config(kConfig); }

RecordVector vec(std::map<std::string, double> w) { return RecordVector{std::move(w)}; }

struct Mirror {
    TempDir site_dir{"site"};
    TempDir repo_dir{"repo"};
    GeneratedSite site;
    RepositoryManifest manifest;

    explicit Mirror(const SiteSpec& spec) {
        site = generate_site(spec, site_dir.path());
        FixtureFetcher fetcher(site_dir.path());
        Repository repo(repo_dir.path());
        run_wdes(parse_crawl_config(default_crawl_config_text(spec)), fetcher, repo);
        repo.finalize();
        manifest = load_manifest(repo_dir.path());
    }
};

} // namespace

TEST_CASE("extraction config parsing and validation") {
    auto c = small_config();
    CHECK(c.table_name == "products");
    CHECK(c.attribute_names() == std::vector<std::string>{"QDID", "Name", "Model", "SpecVersion"});
    CHECK(c.key_attributes == std::vector<std::string>{"QDID"});
    CHECK(c.keywords == std::vector<std::string>{"detail.cfm"});
    REQUIRE(c.attribute("QDID"));
    CHECK(c.attribute("QDID")->capture == std::optional<std::string>{"QDID:\\s*(\\d+)"});
    CHECK_FALSE(c.attribute("Model")->required);

    std::string base = "[table]\nname = t\n[keys]\nA\n[attributes]\nA.locator = id:a\nA.required = true\n";
    CHECK_NOTHROW(parse_extraction_config(base));
    for (const std::string& bad : {
             std::string("[table]\nname = 1bad\n[keys]\nA\n[attributes]\nA.locator = id:a\nA.required = true\n"),
             std::string("[table]\nname = t\n[keys]\nB\n[attributes]\nA.locator = id:a\nA.required = true\n"),
             std::string("[table]\nname = t\n[attributes]\nA.locator = id:a\nA.required = true\n"),
             std::string("[table]\nname = t\n[keys]\nA\n[attributes]\nA.locator = id:a\n"),
             base + "B.required = true\n",
             base + "B.locator = id:b\nB.capture = (a)(b)\n",
             base + "B.locator = id:b\nB.capture = nogroup\n",
             base + "B.locator = id:b\nB.colour = red\n",
             base + "[mystery]\nx\n",
         }) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_extraction_config(bad), config::ConfigError);
    }
}

TEST_CASE("keyword gate") {
    CHECK(keyword_gate("https://s/tpg/detail.cfm?qid=123", "", {"detail.cfm"}));
    CHECK(keyword_gate("https://s/anything", "whatever", {}));
    CHECK_FALSE(keyword_gate("https://s/about.html", "Company info", {"qid"}));
    CHECK(keyword_gate("https://s/x", "Show DETAILS", {"details"}));
    CHECK(keyword_gate("https://s/DETAIL.CFM", "", {"detail.cfm"}));
}

TEST_CASE("extract_record locates, captures and normalizes") {
    auto c = small_config();
    std::string page =
        "<table class='specs'><tr><th>QDID:</th><td>QDID: 4711</td></tr>"
        "<tr><th> Name </th><td>  BlueCore\n   4 </td></tr>"
        "<tr><th>Spec</th><td class='spec'>2.1</td></tr></table><p id='model'>M-1</p>";
    auto r = extract_record(page, "https://s/detail.cfm?qid=4711", c);
    REQUIRE(r);
    CHECK(r->at("QDID") == ValueSet{"4711"});
    CHECK(r->at("Name") == ValueSet{"BlueCore 4"});
    CHECK(r->at("Model") == ValueSet{"M-1"});
    CHECK(r->at("SpecVersion") == ValueSet{"2.1"});
    CHECK(r->source_url == "https://s/detail.cfm?qid=4711");

    // Optional attributes may be absent; required ones may not.
    auto partial = extract_record("<table><tr><th>QDID</th><td>QDID: 1</td><th>Name</th><td>x</td></tr></table>",
                                  "u", c);
    REQUIRE(partial);
    CHECK(partial->at("Model").empty());
    CHECK_FALSE(extract_record("<table><tr><th>Name</th><td>x</td></tr></table>", "u", c));
    CHECK_FALSE(extract_record("<table><tr><th>QDID</th><td>no digits</td><th>Name</th><td>x</td></tr></table>", "u", c));

    std::vector<std::string> warnings;
    CHECK_FALSE(extract_record(std::string("\0", 1), "bin", c, &warnings));
    CHECK(warnings.size() == 1);
}

TEST_CASE("tokenize and vectorize") {
    CHECK(tokenize("BlueCore 4") == std::vector<std::string>{"bluecore", "4"});
    CHECK(tokenize("Model-123-rev4, x") == std::vector<std::string>{"model", "123", "rev4", "x"});
    CHECK(tokenize("  ").empty());

    auto v = vectorize(record({{"Name", {"BlueCore 4"}}}));
    CHECK(v.weights == std::map<std::string, double>{{"bluecore", 1}, {"4", 1}});
    CHECK(vectorize(Record{}).empty());
    CHECK(vectorize(record({{"A", {"x y"}}, {"B", {"z"}}})).weights ==
          vectorize(record({{"A", {"z"}}, {"B", {"y x"}}})).weights);
}

TEST_CASE("sim_record worked examples and conventions") {
    CHECK(sim_record(vec({{"x", 2}, {"y", 3}}), vec({{"x", 2}, {"y", 3}})) == 1.0);
    CHECK(sim_record(vec({{"x", 1}, {"y", 1}}), vec({{"y", 1}, {"z", 1}})) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sim_record(vec({{"x", 1}}), vec({{"y", 1}})) == 0.0);
    CHECK(sim_record(vec({}), vec({})) == 1.0);
    CHECK(sim_record(vec({{"x", 1}}), vec({})) == 0.0);
    CHECK(sim_record(vec({}), vec({{"x", 1}})) == 0.0);
}

TEST_CASE("sim_record agrees with the dense reference") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 500; ++i) {
        auto a = oracle::random_vector(rng);
        auto b = oracle::random_vector(rng);
        CHECK(sim_record(vec(a), vec(b)) == doctest::Approx(oracle::cosine(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("integrate_record inserts, skips and unions") {
    auto c = small_config();
    MemoryRecordStore store(StoreSchema::from(c));
    auto old = record({{"QDID", {"1"}}, {"Name", {"A"}}, {"SpecVersion", {"1.2"}}});
    CHECK(integrate_record(old, store, c) == IntegrationAction::Inserted);
    CHECK(store.records().size() == 1);
    CHECK(integrate_record(old, store, c) == IntegrationAction::Skipped);

    auto fresh = record({{"QDID", {"1"}}, {"Name", {"A"}}, {"SpecVersion", {"2.0"}}});
    CHECK(integrate_record(fresh, store, c) == IntegrationAction::Merged);
    auto stored = store.find(record_key(fresh, c.key_attributes));
    REQUIRE(stored);
    CHECK(stored->at("SpecVersion") == ValueSet{"1.2", "2.0"});
    CHECK(stored->at("Name") == ValueSet{"A"});

    // Every value already present: nothing to add.
    CHECK(integrate_record(fresh, store, c) == IntegrationAction::Absorbed);
    CHECK(store.find(record_key(fresh, c.key_attributes))->at("SpecVersion") == ValueSet{"1.2", "2.0"});

    CHECK(integrate_record(record({{"QDID", {"2"}}, {"Name", {"B"}}}), store, c) == IntegrationAction::Inserted);
    CHECK(store.records().size() == 2);
}

TEST_CASE("file store persists, locks and round-trips through CSV") {
    TempDir dir("store");
    auto c = small_config();
    auto schema = StoreSchema::from(c);
    auto path = dir / "s.json";
    {
        auto store = FileRecordStore::open(path, schema);
        store.put(record({{"QDID", {"2"}}, {"Name", {"b, \"quoted\""}}}));
        store.put(record({{"QDID", {"1"}}, {"Name", {"a"}}, {"SpecVersion", {"2.0", "1.2"}}}));
        CHECK_THROWS_AS(FileRecordStore::open(path, schema), StoreError);
        store.commit();
    }
    auto snapshot = FileRecordStore::read_snapshot(path);
    CHECK(snapshot.schema() == schema);
    auto rows = snapshot.records();
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].at("QDID") == ValueSet{"1"});
    CHECK_THROWS_AS(snapshot.put(rows[0]), StoreError);

    auto csv = export_csv(schema, rows);
    CHECK(csv.starts_with("QDID,Name,Model,SpecVersion\n"));
    CHECK(csv.find("1.2\x1f"
                   "2.0") != std::string::npos);
    auto table = import_csv(csv);
    CHECK(table.attributes == schema.attributes);
    REQUIRE(table.records.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(table.records[i] == rows[i]);
    CHECK(export_csv(schema, table.records) == csv);

    StoreSchema other = schema;
    other.table = "other";
    CHECK_THROWS_AS(FileRecordStore::open(path, other), StoreError);
    CHECK_THROWS_AS(import_csv(""), StoreError);
    CHECK_THROWS_AS(import_csv("A,B\n1\n"), StoreError);
}

TEST_CASE("run_wdics over a generated mirror: insert, rerun, conflicts") {
    SiteSpec spec;
    Mirror m(spec);
    auto cfg = default_extraction_config(spec.attributes);
    MemoryRecordStore store(StoreSchema::from(cfg));
    auto first = run_wdics(m.manifest, cfg, store);
    CHECK(first.inserted == 150);
    CHECK(first.merged == 0);
    CHECK(first.pages_visited == 150);
    CHECK(store.commits() == 1);

    auto second = run_wdics(m.manifest, cfg, store);
    CHECK(second.inserted == 0);
    CHECK(second.merged == 0);
    CHECK(second.skipped == 150);

    SiteSpec dup_spec;
    dup_spec.duplicate_conflict_count = 10;
    Mirror dup(dup_spec);
    MemoryRecordStore dup_store(StoreSchema::from(cfg));
    auto report = run_wdics(dup.manifest, cfg, dup_store);
    CHECK(report.inserted == 140);
    CHECK(report.merged == 10);
    CHECK(report.skipped == 0);
    REQUIRE(dup.site.conflict_keys.size() == 10);
    for (const auto& key : dup.site.conflict_keys) {
        auto stored = dup_store.find(key);
        REQUIRE(stored);
        auto truth = std::find_if(dup.site.truth.records.begin(), dup.site.truth.records.end(),
                                  [&](const TruthRecord& t) { return t.key == key; });
        REQUIRE(truth != dup.site.truth.records.end());
        CHECK(truth->at("SpecVersion").size() == 2);
        CHECK(stored->at("SpecVersion") == truth->at("SpecVersion"));
    }
}

TEST_CASE("run_wdics refuses an unfinalized repository") {
    TempDir dir("repo");
    Repository repo(dir.path());
    repo.begin_crawl();
    MemoryRecordStore store(StoreSchema::from(small_config()));
    CHECK_THROWS_AS(run_wdics(load_manifest(dir.path()), small_config(), store), IntegrationError);
    CHECK(store.commits() == 0);
}

TEST_CASE("store failures abort the run with a page count") {
    SiteSpec spec;
    spec.result_pages = 2;
    spec.records_per_page = 3;
    spec.noise_pages = 0;
    Mirror m(spec);
    auto cfg = default_extraction_config(spec.attributes);

    class FailingStore final : public RecordStore {
    public:
        explicit FailingStore(StoreSchema s) : schema_(std::move(s)) {}
        const StoreSchema& schema() const override { return schema_; }
        std::optional<Record> find(const std::string&) const override { return std::nullopt; }
        void put(const Record&) override {
            if (++puts_ == 3) throw StoreError("disk full");
        }
        std::vector<Record> records() const override { return {}; }
        void commit() override {}

    private:
        StoreSchema schema_;
        int puts_ = 0;
    };
    FailingStore store(StoreSchema::from(cfg));
    try {
        run_wdics(m.manifest, cfg, store);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& err) {
        CHECK(err.pages_processed() == 3);
        CHECK(std::string(err.what()).find("disk full") != std::string::npos);
    }
}
