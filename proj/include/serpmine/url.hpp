#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace serpmine {

class UrlError : public std::runtime_error {
public:
    explicit UrlError(const std::string& input)
        : std::runtime_error("malformed URL: '" + input + "'"), input_(input) {}
    const std::string& input() const noexcept { return input_; }

private:
    std::string input_;
};

// Absolute URL in canonical form: lowercase scheme and host, default port
// dropped, dot segments removed, empty path replaced by "/", fragment removed.
struct Url {
    std::string scheme;
    std::string host;
    std::string port;   // empty when absent or default for the scheme
    std::string path;   // always starts with '/'
    std::optional<std::string> query;

    std::string str() const;
    std::string authority() const;

    friend bool operator==(const Url&, const Url&) = default;
};

// Throws UrlError when `text` is not an absolute URL with an authority.
Url parse_url(std::string_view text);

std::optional<Url> try_parse_url(std::string_view text);

// Canonical string form of an absolute URL; throws UrlError.
std::string canonicalize(std::string_view text);

// Resolves a (possibly relative) reference against an absolute base.
// Returns nullopt for references that cannot name a fetchable resource
// (javascript:, mailto:, data:, fragment-only, empty).
std::optional<Url> resolve(const Url& base, std::string_view reference);

std::string remove_dot_segments(std::string_view path);

// Encodes characters outside the URL-safe set as %XX (used for form values).
std::string percent_encode(std::string_view text);

} // namespace serpmine
