#include <doctest.h>

#include "serpmine/url.hpp"

using namespace serpmine;

TEST_CASE("parse_url splits and canonicalizes components") {
    auto u = parse_url("HTTPS://WWW.Example.COM:443/A/b?x=1#frag");
    CHECK(u.scheme == "https");
    CHECK(u.host == "www.example.com");
    CHECK(u.port.empty());
    CHECK(u.path == "/A/b");
    REQUIRE(u.query);
    CHECK(*u.query == "x=1");
    CHECK(u.str() == "https://www.example.com/A/b?x=1");

    CHECK(parse_url("http://a.example:8080").str() == "http://a.example:8080/");
    CHECK(parse_url("http://a.example/?").str() == "http://a.example/");
    CHECK(parse_url("http://a.example/x/../y/./z").path == "/y/z");
}

TEST_CASE("parse_url rejects malformed input and echoes it") {
    for (const char* bad : {"", "no-scheme", "/relative/path", "http://", "1http://x", "http://host:port/"}) {
        CAPTURE(bad);
        CHECK_THROWS_AS(parse_url(bad), UrlError);
        CHECK_FALSE(try_parse_url(bad));
    }
    try {
        parse_url("::nope");
        FAIL("expected UrlError");
    } catch (const UrlError& err) {
        CHECK(err.input() == "::nope");
        CHECK(std::string(err.what()).find("::nope") != std::string::npos);
    }
}

// Reference resolution examples from RFC 3986 section 5.4.
TEST_CASE("resolve follows the RFC 3986 reference examples") {
    auto base = parse_url("http://a/b/c/d;p?q");
    struct Case {
        const char* ref;
        const char* expected;
    };
    const Case cases[] = {
        {"g", "http://a/b/c/g"},         {"./g", "http://a/b/c/g"},      {"g/", "http://a/b/c/g/"},
        {"/g", "http://a/g"},            {"//g", "http://g/"},           {"?y", "http://a/b/c/d;p?y"},
        {"g?y", "http://a/b/c/g?y"},     {"g#s", "http://a/b/c/g"},      {"g?y#s", "http://a/b/c/g?y"},
        {";x", "http://a/b/c/;x"},       {"g;x", "http://a/b/c/g;x"},
        {".", "http://a/b/c/"},          {"./", "http://a/b/c/"},        {"..", "http://a/b/"},
        {"../", "http://a/b/"},          {"../g", "http://a/b/g"},       {"../..", "http://a/"},
        {"../../", "http://a/"},         {"../../g", "http://a/g"},      {"../../../g", "http://a/g"},
        {"../../../../g", "http://a/g"}, {"/./g", "http://a/g"},         {"/../g", "http://a/g"},
        {"g.", "http://a/b/c/g."},       {".g", "http://a/b/c/.g"},      {"g..", "http://a/b/c/g.."},
        {"..g", "http://a/b/c/..g"},     {"./../g", "http://a/b/g"},     {"./g/.", "http://a/b/c/g/"},
        {"g/./h", "http://a/b/c/g/h"},   {"g/../h", "http://a/b/c/h"},   {"g;x=1/./y", "http://a/b/c/g;x=1/y"},
        {"g;x=1/../y", "http://a/b/c/y"},
    };
    for (const auto& c : cases) {
        CAPTURE(c.ref);
        auto r = resolve(base, c.ref);
        REQUIRE(r);
        CHECK(r->str() == c.expected);
    }
}

TEST_CASE("resolve handles page-relative detail links and skips non-fetchable refs") {
    auto page = parse_url("https://s.example/tpg/list.cfm");
    CHECK(resolve(page, "detail.cfm?id=7")->str() == "https://s.example/tpg/detail.cfm?id=7");
    CHECK(resolve(page, "  detail.cfm?id=7 ")->str() == "https://s.example/tpg/detail.cfm?id=7");
    CHECK(resolve(page, "a b.html")->str() == "https://s.example/tpg/a%20b.html");
    // Empty and fragment-only references name the current document.
    CHECK_FALSE(resolve(page, ""));
    CHECK_FALSE(resolve(page, "#top"));
    CHECK_FALSE(resolve(page, "mailto:someone@example.com"));
    CHECK_FALSE(resolve(page, "javascript:void(0)"));
    CHECK(resolve(page, "HTTP://Other.Example/x")->str() == "http://other.example/x");
}

TEST_CASE("canonicalize is idempotent") {
    for (const char* u : {"https://A.example/x/../y?q=1#f", "http://b.example:80/", "http://c.example/%7Efoo"}) {
        auto once = canonicalize(u);
        CHECK(canonicalize(once) == once);
    }
}

TEST_CASE("remove_dot_segments and percent_encode") {
    CHECK(remove_dot_segments("/a/b/c/./../../g") == "/a/g");
    CHECK(remove_dot_segments("mid/content=5/../6") == "mid/6");
    CHECK(percent_encode("a b\"<>") == "a%20b%22%3C%3E");
    CHECK(percent_encode("a-b_c.d~e") == "a-b_c.d~e");
    CHECK(percent_encode("x=1&y/z") == "x%3D1%26y%2Fz");
}
