#include "serpmine/kv_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace serpmine::config {

namespace {

std::string_view trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

void fail(const Entry& e, const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ":" + std::to_string(e.line) + ": " + what);
}

std::vector<Entry> parse(std::string_view text, const std::string& origin) {
    std::vector<Entry> out;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    if (text.starts_with("\xEF\xBB\xBF")) pos = 3;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        auto line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            continue;
        }
        Entry e;
        e.section = section;
        e.line = line_no;
        auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            e.key = std::string(line);
        } else {
            e.key = std::string(trim(line.substr(0, eq)));
            e.value = std::string(trim(line.substr(eq + 1)));
            e.has_value = true;
            if (e.key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool to_bool(const Entry& e, const std::string& origin) {
    std::string v = e.value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
    if (v == "false" || v == "no" || v == "off" || v == "0") return false;
    fail(e, origin, "expected boolean for '" + e.key + "', got '" + e.value + "'");
}

std::int64_t to_int(const Entry& e, const std::string& origin) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc{} || ptr != e.value.data() + e.value.size() || e.value.empty())
        fail(e, origin, "expected integer for '" + e.key + "', got '" + e.value + "'");
    return v;
}

double to_double(const Entry& e, const std::string& origin) {
    std::istringstream in(e.value);
    in.imbue(std::locale::classic());
    double v = 0;
    in >> v;
    if (!in || !in.eof() || e.value.empty())
        fail(e, origin, "expected number for '" + e.key + "', got '" + e.value + "'");
    return v;
}

} // namespace serpmine::config
