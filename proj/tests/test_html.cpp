#include <doctest.h>

#include "serpmine/html.hpp"
#include "serpmine/url.hpp"

using namespace serpmine;
using html::Document;

TEST_CASE("tolerant parsing builds a usable tree") {
    auto doc = Document::parse(
        "<html><body><p>one<p>two <b>bold</b><br>three<ul><li>a<li>b</ul>"
        "<script>if (a < b) { x = '</p>'; }</script><div id=main class='x y'>m&amp;m &lt;ok&gt; &#65;&#x42;</div>");
    auto ps = doc.select("p");
    REQUIRE(ps.size() == 2);
    CHECK(doc.text_content(ps[0]) == "one");
    CHECK(doc.text_content(ps[1]) == "two bold three");
    CHECK(doc.select("ul li").size() == 2);
    auto main = doc.element_by_id("main");
    REQUIRE(main);
    CHECK(doc.text_content(*main) == "m&m <ok> AB");
    CHECK(doc.node(*main).has_class("y"));
    CHECK(doc.select("div.x.y").size() == 1);
    CHECK(doc.select("#main").size() == 1);
    CHECK(doc.select("body > div").size() == 1);
    CHECK(doc.select("html > div").empty());
    CHECK(doc.select("[id=main]").size() == 1);
    CHECK_THROWS_AS(doc.select("div >"), html::SelectorError);
}

TEST_CASE("table cells and next_element_sibling") {
    auto doc = Document::parse("<table><tr><th>Name</th>\n  <td> Blue  Core\n 4 </td></tr><tr><th>X<td>1</table>");
    auto th = doc.select("th");
    REQUIRE(th.size() == 2);
    auto sibling = doc.next_element_sibling(th[0]);
    REQUIRE(sibling);
    CHECK(doc.node(*sibling).tag == "td");
    CHECK(doc.text_content(*sibling) == "Blue Core 4");
    CHECK(doc.text_content(*doc.next_element_sibling(th[1])) == "1");
}

TEST_CASE("anchor_links resolves, deduplicates and keeps document order") {
    auto page = parse_url("https://s.example/tpg/list.cfm");
    auto doc = Document::parse(
        "<a href='a.html'>A</a><a href=\"b.html\">B</a><a href='a.html#x'>again</a>"
        "<a href='#top'>top</a><a name=anchor>no href</a><a href='mailto:x@y'>m</a>"
        "<a href='detail.cfm?id=7&amp;p=1'>  Detail\n seven </a>");
    auto links = html::anchor_links(doc, page);
    REQUIRE(links.size() == 3);
    CHECK(links[0].url == "https://s.example/tpg/a.html");
    CHECK(links[0].text == "A");
    CHECK(links[1].url == "https://s.example/tpg/b.html");
    CHECK(links[2].url == "https://s.example/tpg/detail.cfm?id=7&p=1");
    CHECK(links[2].text == "Detail seven");

    CHECK(html::anchor_links(Document::parse("<p>no links</p>"), page).empty());
}

TEST_CASE("base element changes resolution") {
    auto page = parse_url("https://s.example/tpg/list.cfm");
    auto doc = Document::parse("<head><base href='https://cdn.example/root/'></head><a href='x.html'>x</a>");
    auto links = html::anchor_links(doc, page);
    REQUIRE(links.size() == 1);
    CHECK(links[0].url == "https://cdn.example/root/x.html");
}

TEST_CASE("references expose raw attribute offsets") {
    std::string body = "<a href=\"one.html\">1</a><img src='i.png'><link rel=stylesheet href=s.css>";
    auto doc = Document::parse(body);
    auto refs = html::references(doc);
    REQUIRE(refs.size() == 3);
    for (const auto& r : refs) CHECK(body.substr(r.value_begin, r.value_end - r.value_begin) == r.value);
    CHECK(refs[0].is_anchor);
    CHECK(refs[1].is_asset);
    CHECK(refs[2].is_asset);
}

TEST_CASE("whitespace normalization, escaping and parseability") {
    CHECK(html::normalize_whitespace("  a \t\n b\r\n") == "a b");
    CHECK(html::escape("<a href=\"x\">&</a>") == "&lt;a href=&quot;x&quot;&gt;&amp;&lt;/a&gt;");
    // A non-breaking space decodes to a plain space so labels match.
    CHECK(html::decode_entities("&nbsp;&copy;&bogus;") == " \xC2\xA9&bogus;");
    CHECK(html::is_parseable("<p>fine</p>"));
    CHECK_FALSE(html::is_parseable(std::string("bin\0ary", 7)));
}
