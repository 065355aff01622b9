#include "serpmine/repository.hpp"

#include <algorithm>
#include <charconv>
#include <deque>
#include <fstream>
#include <sstream>

#include "serpmine/hash.hpp"
#include "serpmine/html.hpp"
#include "serpmine/url.hpp"

namespace fs = std::filesystem;

namespace serpmine {

namespace {

constexpr std::string_view kManifestName = "manifest.idx";
constexpr std::string_view kOriginals = "originals";
constexpr std::string_view kHeader = "#serpmine-manifest 1";

bool is_safe_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '_' || c == '-';
}

std::string sanitize(std::string_view s, std::size_t max_len) {
    std::string out;
    for (char c : s.substr(0, max_len)) out += is_safe_char(c) ? c : '_';
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

bool is_asset_extension(const std::string& ext) {
    static const std::set<std::string> exts{"css", "js", "png", "jpg", "jpeg", "gif", "svg", "ico",
                                            "webp", "pdf", "txt", "json", "xml", "woff", "woff2"};
    return exts.contains(ext);
}

std::string entry_line(const ManifestEntry& e) {
    return e.url + '\t' + e.path + '\t' + std::to_string(e.depth) + '\t' + e.hash + '\t' +
           std::to_string(e.length) + '\t' + std::to_string(e.status);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        auto tab = line.find('\t', pos);
        out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
        if (tab == std::string_view::npos) break;
        pos = tab + 1;
    }
    return out;
}

} // namespace

std::string read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RepositoryError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file_bytes(const fs::path& path, std::string_view bytes) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RepositoryError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RepositoryError("short write to '" + path.string() + "'");
}

std::string url_to_local_path(std::string_view canonical_url) {
    Url url = parse_url(canonical_url);
    const std::string full = url.str();

    std::vector<std::string_view> segments;
    std::string_view path = url.path;
    std::size_t pos = 1;
    while (pos <= path.size()) {
        auto next = path.find('/', pos);
        segments.push_back(path.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    std::string_view last = segments.empty() ? std::string_view{} : segments.back();
    if (!segments.empty()) segments.pop_back();

    std::string out = sanitize(url.authority(), 100);
    for (auto dir : segments) {
        if (dir.empty()) continue;
        out += '/';
        out += sanitize(dir, 100);
    }

    std::string stem(last.empty() ? std::string_view("index") : last);
    std::string ext = "html";
    if (auto dot = stem.rfind('.'); dot != std::string::npos && dot > 0) {
        std::string candidate = stem.substr(dot + 1);
        std::transform(candidate.begin(), candidate.end(), candidate.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (is_asset_extension(candidate)) {
            ext = candidate;
            stem.resize(dot);
        }
    }
    std::string name = sanitize(stem, 100);
    if (url.query) name += "_" + sanitize(*url.query, 80);
    name += "-" + hex8(fnv1a32(full)) + "." + ext;
    return out + "/" + name;
}

bool is_html_path(std::string_view relative_path) { return relative_path.ends_with(".html"); }

std::string relative_link(std::string_view from_path, std::string_view to_path) {
    fs::path from_dir = fs::path(std::string(from_path)).parent_path();
    return fs::path(std::string(to_path)).lexically_relative(from_dir).generic_string();
}

std::map<std::string, std::string> RepositoryManifest::path_map() const {
    std::map<std::string, std::string> out;
    for (const auto& [url, e] : entries) out.emplace(url, e.path);
    return out;
}

std::string rewrite_links(std::string_view body, const std::string& base_url,
                          const std::map<std::string, std::string>& url_to_path, std::string_view page_path) {
    auto page_url = try_parse_url(base_url);
    if (!page_url || !html::is_parseable(body)) return std::string(body);
    auto doc = html::Document::parse(body);
    Url base = doc.base_url(*page_url);

    struct Edit {
        std::size_t begin, end;
        std::string text;
    };
    std::vector<Edit> edits;

    for (const auto& n : doc.nodes()) {
        if (n.kind != html::Node::Kind::Element || n.tag != "base") continue;
        if (auto* href = n.attribute("href"); href && href->has_value)
            edits.push_back({href->value_begin, href->value_end, "./"});
        break;
    }

    for (const auto& ref : html::references(doc)) {
        auto target = resolve(base, ref.value);
        if (!target) continue;
        std::string fragment;
        if (auto hash = ref.value.find('#'); hash != std::string::npos) fragment = ref.value.substr(hash);

        std::string replacement;
        if (auto it = url_to_path.find(target->str()); it != url_to_path.end()) {
            replacement = relative_link(page_path, it->second) + fragment;
        } else if (!try_parse_url(ref.value)) {
            replacement = target->str() + fragment;
        } else {
            continue;  // already absolute and outside the mirror
        }
        edits.push_back({ref.value_begin, ref.value_end, html::escape(replacement)});
    }
    if (edits.empty()) return std::string(body);

    std::sort(edits.begin(), edits.end(), [](const Edit& a, const Edit& b) { return a.begin < b.begin; });
    std::string out;
    out.reserve(body.size() + edits.size() * 16);
    std::size_t cursor = 0;
    for (const auto& e : edits) {
        if (e.begin < cursor) continue;
        out.append(body.substr(cursor, e.begin - cursor));
        out.append(e.text);
        cursor = e.end;
    }
    out.append(body.substr(cursor));
    return out;
}

RepositoryManifest load_manifest(const fs::path& root) {
    RepositoryManifest m;
    m.root = root;
    auto path = root / kManifestName;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RepositoryError("no manifest at '" + path.string() + "'");
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != kHeader) throw RepositoryError(path.string() + ": not a repository manifest");
            saw_header = true;
            continue;
        }
        if (line.starts_with("#state ")) {
            m.finalized = line.substr(7) == "finalized";
        } else if (line.starts_with("#result ")) {
            m.result_pages.push_back(line.substr(8));
        } else if (line[0] == '#') {
            continue;
        } else {
            auto cols = split_tabs(line);
            ManifestEntry e;
            if (cols.size() != 6 || !parse_number(cols[2], e.depth) || !parse_number(cols[4], e.length) ||
                !parse_number(cols[5], e.status)) {
                throw RepositoryError(path.string() + ":" + std::to_string(line_no) + ": malformed entry");
            }
            e.url = std::string(cols[0]);
            e.path = std::string(cols[1]);
            e.hash = std::string(cols[3]);
            m.entries[e.url] = std::move(e);
        }
    }
    if (!saw_header) throw RepositoryError(path.string() + ": empty manifest");
    return m;
}

Repository::Repository(fs::path root) : root_(std::move(root)) {
    manifest_.root = root_;
    if (fs::exists(root_ / kManifestName)) manifest_ = load_manifest(root_);
}

void Repository::write_manifest_locked(bool finalized) {
    manifest_.finalized = finalized;
    std::string text(kHeader);
    text += "\n#state ";
    text += finalized ? "finalized" : "open";
    text += '\n';
    for (const auto& url : manifest_.result_pages) text += "#result " + url + "\n";
    for (const auto& [url, e] : manifest_.entries) text += entry_line(e) + "\n";
    auto tmp = root_ / (std::string(kManifestName) + ".tmp");
    write_file_bytes(tmp, text);
    fs::rename(tmp, root_ / kManifestName);
}

void Repository::append_line(const std::string& line) {
    std::ofstream out(root_ / kManifestName, std::ios::binary | std::ios::app);
    out << line << '\n';
    if (!out) throw RepositoryError("cannot append to manifest in '" + root_.string() + "'");
}

void Repository::begin_crawl() {
    std::lock_guard lock(mutex_);
    fs::create_directories(root_);
    manifest_.result_pages.clear();
    write_manifest_locked(false);
}

void Repository::set_result_pages(std::vector<std::string> urls) {
    std::lock_guard lock(mutex_);
    manifest_.result_pages = std::move(urls);
    for (const auto& url : manifest_.result_pages) append_line("#result " + url);
}

bool Repository::contains(const std::string& url) const {
    std::lock_guard lock(mutex_);
    return manifest_.entries.contains(url);
}

std::optional<ManifestEntry> Repository::entry(const std::string& url) const {
    std::lock_guard lock(mutex_);
    auto it = manifest_.entries.find(url);
    if (it == manifest_.entries.end()) return std::nullopt;
    return it->second;
}

std::string Repository::read_original(const std::string& url) const {
    auto e = entry(url);
    if (!e) throw RepositoryError("not in repository: " + url);
    return read_file_bytes(root_ / kOriginals / e->path);
}

ManifestEntry Repository::save_page(const StoredPage& page, int depth) {
    ManifestEntry e;
    e.url = page.url;
    e.path = url_to_local_path(page.url);
    e.depth = depth;
    e.hash = sha256_hex(page.original_bytes);
    e.length = page.original_bytes.size();
    e.status = 200;
    {
        std::lock_guard lock(mutex_);
        auto it = manifest_.entries.find(e.url);
        if (it != manifest_.entries.end() && it->second.hash == e.hash &&
            fs::exists(root_ / kOriginals / it->second.path)) {
            return it->second;
        }
    }
    write_file_bytes(root_ / kOriginals / e.path, page.original_bytes);
    write_file_bytes(root_ / e.path, page.rewritten_bytes.empty() ? page.original_bytes : page.rewritten_bytes);

    std::lock_guard lock(mutex_);
    manifest_.entries[e.url] = e;
    append_line(entry_line(e));
    return e;
}

void Repository::finalize() {
    std::lock_guard lock(mutex_);
    auto map = manifest_.path_map();
    for (const auto& [url, e] : manifest_.entries) {
        auto original = read_file_bytes(root_ / kOriginals / e.path);
        if (!is_html_path(e.path)) {
            write_file_bytes(root_ / e.path, original);
            continue;
        }
        write_file_bytes(root_ / e.path, rewrite_links(original, url, map, e.path));
    }
    write_manifest_locked(true);
}

RepositoryManifest Repository::manifest() const {
    std::lock_guard lock(mutex_);
    return manifest_;
}

std::vector<std::string> verify_integrity(const RepositoryManifest& manifest) {
    std::vector<std::string> problems;
    for (const auto& [url, e] : manifest.entries) {
        auto path = manifest.root / kOriginals / e.path;
        if (!fs::exists(path)) {
            problems.push_back("missing file for " + url);
            continue;
        }
        if (!fs::exists(manifest.root / e.path)) problems.push_back("missing mirror copy for " + url);
        auto bytes = read_file_bytes(path);
        if (bytes.size() != e.length || sha256_hex(bytes) != e.hash) problems.push_back("hash mismatch for " + url);
    }
    return problems;
}

OfflineWalk walk_offline(const fs::path& root, const std::string& start_path) {
    OfflineWalk walk;
    std::deque<std::string> queue{start_path};
    walk.reached.insert(start_path);
    while (!queue.empty()) {
        auto page = queue.front();
        queue.pop_front();
        std::string body;
        try {
            body = read_file_bytes(root / page);
        } catch (const RepositoryError&) {
            walk.dangling.emplace_back(page, page);
            continue;
        }
        auto doc = html::Document::parse(body);
        for (const auto& ref : html::references(doc)) {
            std::string_view value = ref.value;
            if (value.empty() || value[0] == '#' || value.starts_with("//") || try_parse_url(value)) continue;
            if (auto colon = value.find(':'); colon != std::string_view::npos && value.find('/') > colon) continue;
            auto cut = value.find_first_of("?#");
            fs::path target = (fs::path(page).parent_path() / std::string(value.substr(0, cut))).lexically_normal();
            auto rel = target.generic_string();
            if (rel.starts_with("..") || !fs::exists(root / target) || fs::is_directory(root / target)) {
                walk.dangling.emplace_back(page, std::string(value));
                continue;
            }
            if (is_html_path(rel) && walk.reached.insert(rel).second) queue.push_back(rel);
        }
    }
    return walk;
}

} // namespace serpmine
