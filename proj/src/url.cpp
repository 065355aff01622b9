#include "serpmine/url.hpp"

#include <algorithm>
#include <cctype>

namespace serpmine {

namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool is_scheme_char(char c, bool first) {
    if (std::isalpha(static_cast<unsigned char>(c))) return true;
    if (first) return false;
    return std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

bool has_forbidden_char(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) {
        auto u = static_cast<unsigned char>(c);
        return u <= 0x20 || u == 0x7f;
    });
}

std::string default_port(std::string_view scheme) {
    if (scheme == "http" || scheme == "ws") return "80";
    if (scheme == "https" || scheme == "wss") return "443";
    if (scheme == "ftp") return "21";
    return {};
}

struct Reference {
    std::optional<std::string> scheme;
    std::optional<std::string> authority;
    std::string path;
    std::optional<std::string> query;
};

// Splits a URI reference into its components (RFC 3986 appendix B).
Reference split_reference(std::string_view ref) {
    Reference r;
    auto colon = ref.find(':');
    auto delim = ref.find_first_of("/?#");
    if (colon != std::string_view::npos && colon > 0 && (delim == std::string_view::npos || colon < delim)) {
        bool ok = true;
        for (std::size_t i = 0; i < colon; ++i) ok = ok && is_scheme_char(ref[i], i == 0);
        if (ok) {
            r.scheme = to_lower(ref.substr(0, colon));
            ref.remove_prefix(colon + 1);
        }
    }
    if (ref.starts_with("//")) {
        ref.remove_prefix(2);
        auto end = ref.find_first_of("/?#");
        r.authority = std::string(ref.substr(0, end));
        ref.remove_prefix(end == std::string_view::npos ? ref.size() : end);
    }
    auto hash = ref.find('#');
    if (hash != std::string_view::npos) ref = ref.substr(0, hash);
    auto q = ref.find('?');
    if (q != std::string_view::npos) {
        r.query = std::string(ref.substr(q + 1));
        ref = ref.substr(0, q);
    }
    r.path = std::string(ref);
    return r;
}

// Fills host/port of `url` from an authority component; false when invalid.
bool apply_authority(Url& url, std::string_view authority) {
    auto at = authority.rfind('@');
    if (at != std::string_view::npos) authority.remove_prefix(at + 1);
    std::string_view host = authority;
    std::string_view port;
    if (authority.starts_with('[')) {
        auto close = authority.find(']');
        if (close == std::string_view::npos) return false;
        host = authority.substr(0, close + 1);
        auto rest = authority.substr(close + 1);
        if (!rest.empty()) {
            if (rest[0] != ':') return false;
            port = rest.substr(1);
        }
    } else {
        auto colon = authority.rfind(':');
        if (colon != std::string_view::npos) {
            host = authority.substr(0, colon);
            port = authority.substr(colon + 1);
        }
    }
    if (host.empty()) return false;
    if (!std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return false;
    url.host = to_lower(host);
    url.port = std::string(port);
    if (url.port == default_port(url.scheme)) url.port.clear();
    return true;
}

void finish_path(Url& url) {
    url.path = remove_dot_segments(url.path);
    if (url.path.empty() || url.path[0] != '/') url.path.insert(url.path.begin(), '/');
    if (url.query && url.query->empty()) url.query.reset();
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
    auto slash = base.path.rfind('/');
    std::string merged = slash == std::string::npos ? "/" : base.path.substr(0, slash + 1);
    merged.append(ref_path);
    return merged;
}

} // namespace

std::string Url::authority() const {
    return port.empty() ? host : host + ":" + port;
}

std::string Url::str() const {
    std::string out = scheme + "://" + authority() + path;
    if (query) out += "?" + *query;
    return out;
}

std::string remove_dot_segments(std::string_view path) {
    std::string input(path);
    std::string output;
    while (!input.empty()) {
        if (input.starts_with("../")) {
            input.erase(0, 3);
        } else if (input.starts_with("./")) {
            input.erase(0, 2);
        } else if (input.starts_with("/./")) {
            input.erase(0, 2);
        } else if (input == "/.") {
            input = "/";
        } else if (input.starts_with("/../") || input == "/..") {
            input = input.size() == 3 ? std::string("/") : input.substr(3);
            auto slash = output.rfind('/');
            output.erase(slash == std::string::npos ? 0 : slash);
        } else if (input == "." || input == "..") {
            input.clear();
        } else {
            auto start = input[0] == '/' ? 1 : 0;
            auto next = input.find('/', start);
            auto len = next == std::string::npos ? input.size() : next;
            output.append(input, 0, len);
            input.erase(0, len);
        }
    }
    return output;
}

std::optional<Url> try_parse_url(std::string_view text) {
    if (text.empty() || has_forbidden_char(text)) return std::nullopt;
    Reference ref = split_reference(text);
    if (!ref.scheme || !ref.authority) return std::nullopt;
    Url url;
    url.scheme = *ref.scheme;
    if (!apply_authority(url, *ref.authority)) return std::nullopt;
    url.path = ref.path;
    url.query = ref.query;
    finish_path(url);
    return url;
}

Url parse_url(std::string_view text) {
    auto url = try_parse_url(text);
    if (!url) throw UrlError(std::string(text));
    return *url;
}

std::string canonicalize(std::string_view text) { return parse_url(text).str(); }

std::optional<Url> resolve(const Url& base, std::string_view reference) {
    // Browsers strip surrounding whitespace and embedded tabs/newlines; spaces
    // inside the reference are percent-encoded.
    std::string cleaned;
    auto first = reference.find_first_not_of(" \t\r\n\f");
    if (first == std::string_view::npos) return std::nullopt;
    auto last = reference.find_last_not_of(" \t\r\n\f");
    for (char c : reference.substr(first, last - first + 1)) {
        if (c == '\t' || c == '\r' || c == '\n') continue;
        if (c == ' ') cleaned += "%20";
        else cleaned += c;
    }
    if (cleaned.starts_with('#')) return std::nullopt;
    if (has_forbidden_char(cleaned)) return std::nullopt;

    Reference ref = split_reference(cleaned);
    Url target;
    if (ref.scheme) {
        if (!ref.authority) return std::nullopt;  // mailto:, javascript:, data:, ...
        return try_parse_url(cleaned);
    }
    target.scheme = base.scheme;
    if (ref.authority) {
        if (!apply_authority(target, *ref.authority)) return std::nullopt;
        target.path = ref.path;
        target.query = ref.query;
    } else {
        target.host = base.host;
        target.port = base.port;
        if (ref.path.empty()) {
            target.path = base.path;
            target.query = ref.query ? ref.query : base.query;
        } else {
            target.path = ref.path[0] == '/' ? ref.path : merge_paths(base, ref.path);
            target.query = ref.query;
        }
    }
    finish_path(target);
    return target;
}

std::string percent_encode(std::string_view text) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) || c == '-' || c == '_' || c == '.' || c == '~') {
            out += c;
        } else {
            out += '%';
            out += hex[u >> 4];
            out += hex[u & 0xf];
        }
    }
    return out;
}

} // namespace serpmine
