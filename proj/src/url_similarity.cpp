#include "serpmine/url_similarity.hpp"

#include <algorithm>

namespace serpmine {

UrlFields url_fields(const Url& url) {
    UrlFields out;
    out.original = url.str();
    out.fields.push_back(url.scheme);
    out.fields.push_back(url.authority());

    std::string_view path = url.path;
    std::size_t pos = 0;
    while (pos <= path.size()) {
        auto next = path.find('/', pos);
        auto segment = path.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
        if (!segment.empty()) out.fields.emplace_back(segment);
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }

    if (url.query) {
        std::string_view query = *url.query;
        pos = 0;
        while (pos <= query.size()) {
            auto next = query.find('&', pos);
            auto piece = query.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos);
            if (!piece.empty()) out.fields.emplace_back(piece);
            if (next == std::string_view::npos) break;
            pos = next + 1;
        }
    }
    return out;
}

UrlFields parse_url_fields(std::string_view url) { return url_fields(parse_url(url)); }

std::size_t matching_positions(const UrlFields& h, const UrlFields& s) noexcept {
    std::size_t n = std::min(h.count(), s.count());
    std::size_t matches = 0;
    for (std::size_t i = 0; i < n; ++i) matches += static_cast<std::size_t>(fsm(h.fields[i], s.fields[i]));
    return matches;
}

double sim_url(const UrlFields& h, const UrlFields& s) noexcept {
    std::size_t total = h.count() + s.count();
    if (total == 0) return 0.0;
    return static_cast<double>(2 * matching_positions(h, s)) / static_cast<double>(total);
}

} // namespace serpmine
