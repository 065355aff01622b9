#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "serpmine/url.hpp"

namespace serpmine {

// Ordered positional decomposition of a URL used for similarity gating:
// [scheme, host[:port], path segments..., query "key=value" pieces...].
// Scheme and host are lowercased at parse time; everything else keeps case.
struct UrlFields {
    std::string original;
    std::vector<std::string> fields;

    std::size_t count() const noexcept { return fields.size(); }
};

// Throws UrlError echoing the input when `url` is not absolute.
UrlFields parse_url_fields(std::string_view url);
UrlFields url_fields(const Url& url);

// Field match: 1 on exact byte equality, else 0.
inline int fsm(std::string_view a, std::string_view b) noexcept { return a == b ? 1 : 0; }

// Number of positions i < min(nf(h), nf(s)) where the fields agree.
std::size_t matching_positions(const UrlFields& h, const UrlFields& s) noexcept;

// Positional field-match similarity in [0, 1]:
//   matches / ((nf(h) + nf(s)) / 2), evaluated as 2*matches / (nf(h)+nf(s))
// in a single division so that sim_url(u, u) == 1.0 exactly.
double sim_url(const UrlFields& h, const UrlFields& s) noexcept;

} // namespace serpmine
