#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "serpmine/url.hpp"

// Tolerant HTML tokenizer and tree builder. It never rejects input: stray end
// tags are dropped, unclosed elements are closed at end of input, and the
// usual implied end tags (li, dt/dd, tr, td/th, p, option) are honoured.
// Attribute values keep their byte offsets into the source so that callers
// can rewrite references in place without touching the rest of the document.
namespace serpmine::html {

class SelectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Attribute {
    std::string name;        // lowercase
    std::string value;       // entity-decoded
    std::size_t value_begin = 0;  // raw source range of the value, quotes excluded
    std::size_t value_end = 0;
    bool has_value = false;
};

struct Node {
    enum class Kind { Document, Element, Text };

    Kind kind = Kind::Document;
    std::string tag;         // lowercase; elements only
    std::vector<Attribute> attributes;
    std::string text;        // decoded; text nodes only
    std::optional<std::size_t> parent;
    std::vector<std::size_t> children;

    const Attribute* attribute(std::string_view name) const;
    bool has_class(std::string_view cls) const;
};

class Document {
public:
    static Document parse(std::string_view markup);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const Node& node(std::size_t index) const { return nodes_.at(index); }
    static constexpr std::size_t root() noexcept { return 0; }

    // Descendant text with whitespace collapsed and trimmed. Block-level
    // boundaries and <br> count as whitespace.
    std::string text_content(std::size_t index) const;

    std::optional<std::size_t> element_by_id(std::string_view id) const;
    std::optional<std::size_t> next_element_sibling(std::size_t index) const;

    // Elements (document order) matching a selector made of compounds
    // `tag`, `*`, `.class`, `#id`, `[attr]`, `[attr=value]` joined by the
    // descendant (space) and child (`>`) combinators.
    std::vector<std::size_t> select(std::string_view selector) const;

    // <base href> when present and absolute-resolvable, else `page_url`.
    Url base_url(const Url& page_url) const;

private:
    std::vector<Node> nodes_;
};

struct Link {
    std::string url;    // canonical absolute URL
    std::string text;   // normalized anchor text
};

// Anchor targets (<a>/<area> href) resolved against the document base, in
// document order, first occurrence kept.
std::vector<Link> anchor_links(const Document& doc, const Url& page_url);

// A reference-bearing attribute: href on a/area/link, src on
// img/script/iframe/frame/embed/source/audio/video, plus input[type=image].
struct Reference {
    std::size_t element = 0;
    std::string tag;
    std::string attribute;
    std::string value;          // decoded attribute value
    std::size_t value_begin = 0;
    std::size_t value_end = 0;
    bool is_anchor = false;     // a/area href
    bool is_asset = false;      // embedded resource fetched by a browser
};

std::vector<Reference> references(const Document& doc);

std::string decode_entities(std::string_view text);

// Collapses runs of whitespace and control characters to a single space
// and trims both ends.
std::string normalize_whitespace(std::string_view text);

// Heuristic: binary payloads (NUL bytes) are not markup.
bool is_parseable(std::string_view body) noexcept;

// Escapes &, <, >, " for text and attribute contexts.
std::string escape(std::string_view text);

} // namespace serpmine::html
