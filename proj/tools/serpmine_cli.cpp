#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "serpmine/crawler.hpp"
#include "serpmine/csv.hpp"
#include "serpmine/eval.hpp"
#include "serpmine/extraction.hpp"
#include "serpmine/fetcher.hpp"
#include "serpmine/integrator.hpp"
#include "serpmine/kv_config.hpp"
#include "serpmine/record_store.hpp"
#include "serpmine/repository.hpp"
#include "serpmine/synthetic_site.hpp"

namespace fs = std::filesystem;
using namespace serpmine;

namespace {

enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kConfigError = 2,
    kCrawlError = 3,
    kRepositoryError = 4,
    kTruthError = 5,
};

struct Failure {
    int code;
    std::string message;
};

bool g_verbose = false;

void print_warnings(const std::vector<std::string>& warnings) {
    if (!g_verbose) {
        if (!warnings.empty()) std::cerr << warnings.size() << " warning(s); rerun with --verbose to list them\n";
        return;
    }
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    write_file_bytes(path, text);
}

struct GenSiteOptions {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> duplicates;
    std::optional<int> corrupt;
    bool cycle = false;
};

int cmd_gen_site(const GenSiteOptions& o) {
    SiteSpec spec;
    if (!o.config.empty()) spec = parse_site_spec(config::read_file(o.config), o.config);
    if (o.seed) spec.seed = *o.seed;
    if (o.duplicates) spec.duplicate_conflict_count = *o.duplicates;
    if (o.corrupt) spec.corruption_count = *o.corrupt;
    if (o.cycle) spec.pagination_cycle = true;
    try {
        spec.validate();
    } catch (const SiteError& err) {
        throw Failure{kConfigError, err.what()};
    }
    auto site = generate_site(spec, o.out);
    std::cout << "generated " << site.listing_urls.size() << " listing, " << site.detail_urls.size() << " detail and "
              << site.noise_urls.size() << " noise pages under " << o.out << "\n"
              << site.truth.records.size() << " records in " << (fs::path(o.out) / kTruthFile).string() << "\n";
    return kOk;
}

struct CrawlOptions {
    std::string config;
    std::string repo;
    std::string mode = "fixture";
    std::string fixture;
    std::string out;
};

int cmd_crawl(const CrawlOptions& o) {
    auto cfg = load_crawl_config(o.config);
    std::unique_ptr<Fetcher> fetcher;
    if (o.mode == "live") {
        HttpOptions http;
        http.politeness_delay = cfg.politeness_delay;
        fetcher = std::make_unique<HttpFetcher>(http);
    } else {
        // A generated site keeps crawl.conf at its root, so that is the default fixture.
        fs::path root = o.fixture.empty() ? fs::absolute(o.config).parent_path() : fs::path(o.fixture);
        if (!fs::is_directory(root)) throw Failure{kConfigError, "fixture root '" + root.string() + "' is not a directory"};
        fetcher = std::make_unique<FixtureFetcher>(root);
    }

    Repository repo(o.repo);
    CrawlReport report;
    try {
        report = run_wdes(cfg, *fetcher, repo);
    } catch (const CrawlError& err) {
        throw Failure{kCrawlError, err.what()};
    } catch (const FetchError& err) {
        throw Failure{kCrawlError, err.what()};
    }
    repo.finalize();

    auto out = o.out.empty() ? (fs::path(o.repo) / "crawl-report.json").string() : o.out;
    write_file_bytes(out, report.to_json());
    const auto& s = report.stats;
    std::cout << "stored " << s.pages_stored << " pages (" << s.result_pages << " result pages), " << s.assets_stored
              << " assets; fetched " << s.fetched << ", reused " << s.reused << "; skipped " << s.skipped_threshold
              << " below threshold, " << s.skipped_visited << " already visited; " << s.fetch_errors
              << " fetch errors\nreport: " << out << "\n";
    print_warnings(report.warnings);
    return kOk;
}

struct IntegrateOptions {
    std::string config;
    std::string repo;
    std::string store;
    std::string out;
};

int cmd_integrate(const IntegrateOptions& o) {
    auto cfg = load_extraction_config(o.config);
    RepositoryManifest manifest;
    try {
        manifest = load_manifest(o.repo);
    } catch (const RepositoryError& err) {
        throw Failure{kRepositoryError, err.what()};
    }
    if (!manifest.finalized)
        throw Failure{kRepositoryError, "repository '" + o.repo + "' is not finalized; rerun the crawl"};

    auto store = FileRecordStore::open(o.store, StoreSchema::from(cfg));
    auto report = run_wdics(manifest, cfg, store);
    if (!o.out.empty()) write_file_bytes(o.out, report.to_json());
    std::cout << "visited " << report.pages_visited << " pages (" << report.gated_out << " gated out, "
              << report.no_record << " without a record): inserted " << report.inserted << ", merged "
              << report.merged << ", skipped " << report.skipped << ", absorbed " << report.absorbed << "\n";
    print_warnings(report.warnings);
    return kOk;
}

std::string aligned_text(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        std::string l;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (c) l += "  ";
            l += cells[c];
            if (c + 1 < cells.size()) l.append(width[c] - cells[c].size(), ' ');
        }
        out += l + "\n";
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

struct QueryOptions {
    std::string store;
    std::vector<std::string> filters;
    std::string format = "text";
};

int cmd_query(const QueryOptions& o) {
    auto store = FileRecordStore::read_snapshot(o.store);
    const auto& schema = store.schema();
    std::vector<std::pair<std::string, std::string>> filters;
    for (const auto& f : o.filters) {
        auto eq = f.find('=');
        if (eq == std::string::npos || eq == 0) throw Failure{kConfigError, "filter '" + f + "' is not attribute=value"};
        auto name = f.substr(0, eq);
        if (std::find(schema.attributes.begin(), schema.attributes.end(), name) == schema.attributes.end())
            throw Failure{kConfigError, "unknown attribute '" + name + "' in table " + schema.table};
        filters.emplace_back(name, f.substr(eq + 1));
    }
    std::vector<Record> hits;
    for (auto& r : store.records()) {
        bool keep = std::all_of(filters.begin(), filters.end(),
                                [&](const auto& f) { return r.at(f.first).contains(f.second); });
        if (keep) hits.push_back(std::move(r));
    }
    if (o.format == "csv") {
        std::cout << export_csv(schema, hits);
        return kOk;
    }
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : hits) {
        std::vector<std::string> row;
        for (const auto& a : schema.attributes) {
            std::string cell;
            for (const auto& v : r.at(a)) cell += (cell.empty() ? "" : " | ") + v;
            row.push_back(cell);
        }
        rows.push_back(std::move(row));
    }
    std::cout << aligned_text(schema.attributes, rows) << "(" << hits.size() << " rows)\n";
    return kOk;
}

// Counts file: CSV with header attribute,system,TR,ER,CR.
EvalReport report_from_counts(const std::string& path) {
    auto rows = csv::parse(config::read_file(path));
    const std::vector<std::string> header{"attribute", "system", "TR", "ER", "CR"};
    if (rows.empty() || rows.front() != header)
        throw Failure{kConfigError, path + ": expected header attribute,system,TR,ER,CR"};
    EvalReport report;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() != header.size()) throw Failure{kConfigError, path + ": row " + std::to_string(i + 1) + " malformed"};
        EvalCounts c;
        c.attribute = r[0];
        try {
            c.total_records = std::stoull(r[2]);
            c.extracted_records = std::stoull(r[3]);
            c.correct_records = std::stoull(r[4]);
        } catch (const std::exception&) {
            throw Failure{kConfigError, path + ": row " + std::to_string(i + 1) + " has a non-numeric count"};
        }
        report.add(r[1], c);
    }
    return report;
}

struct EvalOptions {
    std::string store;
    std::string truth;
    std::string counts;
    std::string out;
    std::string format = "csv";
    std::string system = "extracted";
};

int cmd_eval(const EvalOptions& o) {
    EvalReport report;
    if (!o.counts.empty()) {
        report = report_from_counts(o.counts);
    } else {
        if (o.store.empty() || o.truth.empty()) throw Failure{kConfigError, "eval needs --store and --truth, or --counts"};
        TruthManifest truth;
        try {
            truth = TruthManifest::parse(read_file_bytes(o.truth));
        } catch (const RepositoryError& err) {
            throw Failure{kTruthError, err.what()};
        } catch (const TruthError& err) {
            throw Failure{kTruthError, o.truth + ": " + err.what()};
        }
        auto store = FileRecordStore::read_snapshot(o.store);
        auto exported = import_csv(export_csv(store.schema(), store.records()));
        report = score_run(exported, truth, o.system);
    }
    auto table = emit_table(report);
    if (o.format == "text") {
        auto rows = csv::parse(table);
        auto header = rows.front();
        rows.erase(rows.begin());
        table = aligned_text(header, rows);
    }
    write_output(o.out, table);
    print_warnings(report.warnings);
    return kOk;
}

struct ReportOptions {
    std::string store;
    std::string out;
};

int cmd_report(const ReportOptions& o) {
    auto store = FileRecordStore::read_snapshot(o.store);
    write_output(o.out, export_csv(store.schema(), store.records()));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Similarity-gated result-page crawler, record integrator and evaluator"};
    app.require_subcommand(1, 1);
    app.add_flag("-v,--verbose", g_verbose, "List warnings on stderr");

    GenSiteOptions gen;
    auto* gen_cmd = app.add_subcommand("gen-site", "Generate a synthetic result-page site with ground truth");
    gen_cmd->add_option("--config", gen.config, "Site spec file (key = value)")->check(CLI::ExistingFile);
    gen_cmd->add_option("--out", gen.out, "Output directory (absent or empty)")->required();
    gen_cmd->add_option("--seed", gen.seed, "Override the site seed");
    gen_cmd->add_option("--duplicates", gen.duplicates, "Conflicting duplicate detail pages");
    gen_cmd->add_option("--corrupt", gen.corrupt, "Records whose page shows a wrong Name");
    gen_cmd->add_flag("--cycle", gen.cycle, "Link the last result page back to the first");

    CrawlOptions crawl;
    auto* crawl_cmd = app.add_subcommand("crawl", "Crawl from a start page into a local mirror");
    crawl_cmd->add_option("--config", crawl.config, "Crawl config file")->required();
    crawl_cmd->add_option("--repo", crawl.repo, "Repository root")->required();
    crawl_cmd->add_option("--mode", crawl.mode, "fixture or live")->check(CLI::IsMember({"fixture", "live"}));
    crawl_cmd->add_option("--fixture", crawl.fixture, "Fixture root (default: the config file's directory)");
    crawl_cmd->add_option("--out", crawl.out, "Crawl report path (default: <repo>/crawl-report.json)");

    IntegrateOptions integ;
    auto* integ_cmd = app.add_subcommand("integrate", "Extract and integrate records from a finalized mirror");
    integ_cmd->add_option("--config", integ.config, "Extraction config file")->required();
    integ_cmd->add_option("--repo", integ.repo, "Repository root")->required();
    integ_cmd->add_option("--store", integ.store, "Record store file")->required();
    integ_cmd->add_option("--out", integ.out, "Write the integration report here");

    QueryOptions query;
    auto* query_cmd = app.add_subcommand("query", "Print store rows matching attribute=value filters");
    query_cmd->add_option("--store", query.store, "Record store file")->required();
    query_cmd->add_option("--format", query.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));
    query_cmd->add_option("filters", query.filters, "attribute=value (all must match)");

    EvalOptions eval;
    auto* eval_cmd = app.add_subcommand("eval", "Score a store against ground truth");
    eval_cmd->add_option("--store", eval.store, "Record store file");
    eval_cmd->add_option("--truth", eval.truth, "Ground-truth manifest");
    eval_cmd->add_option("--counts", eval.counts, "Score literal counts (CSV attribute,system,TR,ER,CR) instead");
    eval_cmd->add_option("--system", eval.system, "System label for scored rows");
    eval_cmd->add_option("--out", eval.out, "Output path (default: stdout)");
    eval_cmd->add_option("--format", eval.format, "csv or text")->check(CLI::IsMember({"csv", "text"}));

    ReportOptions rep;
    auto* report_cmd = app.add_subcommand("report", "Export the store as CSV");
    report_cmd->add_option("--store", rep.store, "Record store file")->required();
    report_cmd->add_option("--out", rep.out, "Output path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*gen_cmd) return cmd_gen_site(gen);
        if (*crawl_cmd) return cmd_crawl(crawl);
        if (*integ_cmd) return cmd_integrate(integ);
        if (*query_cmd) return cmd_query(query);
        if (*eval_cmd) return cmd_eval(eval);
        if (*report_cmd) return cmd_report(rep);
    } catch (const Failure& f) {
        std::cerr << "error: " << f.message << "\n";
        return f.code;
    } catch (const config::ConfigError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kConfigError;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
