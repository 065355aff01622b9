#include "serpmine/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <unordered_set>

namespace serpmine::html {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), lower);
    return out;
}

bool iequals_prefix(std::string_view haystack, std::size_t pos, std::string_view needle) {
    if (pos + needle.size() > haystack.size()) return false;
    for (std::size_t i = 0; i < needle.size(); ++i)
        if (lower(haystack[pos + i]) != needle[i]) return false;
    return true;
}

const std::unordered_set<std::string>& void_elements() {
    static const std::unordered_set<std::string> set{
        "area", "base", "br", "col", "embed", "hr", "img", "input",
        "link", "meta", "param", "source", "track", "wbr"};
    return set;
}

// Start tags that end an open paragraph.
const std::unordered_set<std::string>& closes_paragraph() {
    static const std::unordered_set<std::string> set{
        "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset", "figcaption",
        "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6", "header", "hr", "main",
        "menu", "nav", "ol", "p", "pre", "section", "table", "ul"};
    return set;
}

const std::unordered_set<std::string>& block_elements() {
    static const std::unordered_set<std::string> set{
        "address", "article", "aside", "blockquote", "body", "br", "caption", "dd", "div",
        "dl", "dt", "fieldset", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5",
        "h6", "head", "header", "hr", "html", "li", "main", "nav", "ol", "option", "p",
        "pre", "section", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul"};
    return set;
}

void append_utf8(std::string& out, unsigned long cp) {
    if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

class TreeBuilder {
public:
    explicit TreeBuilder(std::vector<Node>& nodes) : nodes_(nodes) {
        nodes_.push_back(Node{});
        stack_.push_back(0);
    }

    void text(std::string decoded) {
        if (decoded.empty()) return;
        auto parent = stack_.back();
        auto& siblings = nodes_[parent].children;
        if (!siblings.empty() && nodes_[siblings.back()].kind == Node::Kind::Text) {
            nodes_[siblings.back()].text += decoded;
            return;
        }
        Node n;
        n.kind = Node::Kind::Text;
        n.text = std::move(decoded);
        attach(std::move(n));
    }

    void start(std::string tag, std::vector<Attribute> attrs, bool self_closing) {
        apply_implied_end(tag);
        Node n;
        n.kind = Node::Kind::Element;
        n.tag = tag;
        n.attributes = std::move(attrs);
        auto index = attach(std::move(n));
        if (!self_closing && !void_elements().contains(tag)) stack_.push_back(index);
    }

    void end(const std::string& tag) {
        for (std::size_t i = stack_.size(); i-- > 1;) {
            if (nodes_[stack_[i]].tag == tag) {
                stack_.resize(i);
                return;
            }
        }
    }

private:
    std::size_t attach(Node n) {
        auto parent = stack_.back();
        n.parent = parent;
        nodes_.push_back(std::move(n));
        auto index = nodes_.size() - 1;
        nodes_[parent].children.push_back(index);
        return index;
    }

    // Pops the nearest open element named in `closes` unless a scope
    // boundary from `scope` is met first.
    void close_open(std::initializer_list<std::string_view> closes,
                    std::initializer_list<std::string_view> scope) {
        for (std::size_t i = stack_.size(); i-- > 1;) {
            const auto& tag = nodes_[stack_[i]].tag;
            if (std::find(closes.begin(), closes.end(), tag) != closes.end()) {
                stack_.resize(i);
                return;
            }
            if (std::find(scope.begin(), scope.end(), tag) != scope.end()) return;
        }
    }

    void apply_implied_end(const std::string& tag) {
        if (tag == "li") {
            close_open({"li"}, {"ul", "ol", "menu"});
        } else if (tag == "dt" || tag == "dd") {
            close_open({"dt", "dd"}, {"dl"});
        } else if (tag == "tr") {
            close_open({"tr"}, {"table", "tbody", "thead", "tfoot"});
        } else if (tag == "td" || tag == "th") {
            close_open({"td", "th"}, {"tr", "table"});
        } else if (tag == "tbody" || tag == "thead" || tag == "tfoot") {
            close_open({"tbody", "thead", "tfoot"}, {"table"});
        } else if (tag == "option") {
            close_open({"option"}, {"select", "datalist"});
        }
        if (closes_paragraph().contains(tag) && stack_.size() > 1 && nodes_[stack_.back()].tag == "p") {
            stack_.pop_back();
        }
    }

    std::vector<Node>& nodes_;
    std::vector<std::size_t> stack_;
};

class Tokenizer {
public:
    Tokenizer(std::string_view src, TreeBuilder& builder) : src_(src), builder_(builder) {}

    void run() {
        std::size_t text_start = 0;
        while (pos_ < src_.size()) {
            if (src_[pos_] != '<') {
                ++pos_;
                continue;
            }
            auto tag_start = pos_;
            bool consumed = false;
            if (src_.compare(pos_, 4, "<!--") == 0) {
                flush(text_start, tag_start);
                auto end = src_.find("-->", pos_ + 4);
                pos_ = end == std::string_view::npos ? src_.size() : end + 3;
                consumed = true;
            } else if (pos_ + 1 < src_.size() && (src_[pos_ + 1] == '!' || src_[pos_ + 1] == '?')) {
                flush(text_start, tag_start);
                auto end = src_.find('>', pos_);
                pos_ = end == std::string_view::npos ? src_.size() : end + 1;
                consumed = true;
            } else if (pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
                if (pos_ + 2 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 2]))) {
                    flush(text_start, tag_start);
                    end_tag();
                    consumed = true;
                }
            } else if (pos_ + 1 < src_.size() && std::isalpha(static_cast<unsigned char>(src_[pos_ + 1]))) {
                flush(text_start, tag_start);
                start_tag();
                consumed = true;
            }
            if (consumed) {
                text_start = pos_;
            } else {
                ++pos_;
            }
        }
        flush(text_start, src_.size());
    }

private:
    void flush(std::size_t begin, std::size_t end) {
        if (end > begin) builder_.text(decode_entities(src_.substr(begin, end - begin)));
    }

    std::string read_name() {
        auto begin = pos_;
        while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>' && src_[pos_] != '/')
            ++pos_;
        return to_lower(src_.substr(begin, pos_ - begin));
    }

    void skip_space() {
        while (pos_ < src_.size() && is_space(src_[pos_])) ++pos_;
    }

    void end_tag() {
        pos_ += 2;
        auto name = read_name();
        auto close = src_.find('>', pos_);
        pos_ = close == std::string_view::npos ? src_.size() : close + 1;
        builder_.end(name);
    }

    void start_tag() {
        ++pos_;
        auto name = read_name();
        std::vector<Attribute> attrs;
        bool self_closing = false;
        while (pos_ < src_.size()) {
            skip_space();
            if (pos_ >= src_.size()) break;
            char c = src_[pos_];
            if (c == '>') {
                ++pos_;
                break;
            }
            if (c == '/') {
                ++pos_;
                if (pos_ < src_.size() && src_[pos_] == '>') {
                    self_closing = true;
                    ++pos_;
                    break;
                }
                continue;
            }
            Attribute attr;
            auto begin = pos_;
            while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>' && src_[pos_] != '=' &&
                   !(src_[pos_] == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>'))
                ++pos_;
            if (pos_ == begin) {  // lone '=' or similar garbage
                ++pos_;
                continue;
            }
            attr.name = to_lower(src_.substr(begin, pos_ - begin));
            skip_space();
            if (pos_ < src_.size() && src_[pos_] == '=') {
                ++pos_;
                skip_space();
                attr.has_value = true;
                if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'')) {
                    char quote = src_[pos_++];
                    auto close = src_.find(quote, pos_);
                    if (close == std::string_view::npos) close = src_.size();
                    attr.value_begin = pos_;
                    attr.value_end = close;
                    pos_ = std::min(close + 1, src_.size());
                } else {
                    attr.value_begin = pos_;
                    while (pos_ < src_.size() && !is_space(src_[pos_]) && src_[pos_] != '>') ++pos_;
                    attr.value_end = pos_;
                }
                attr.value = decode_entities(src_.substr(attr.value_begin, attr.value_end - attr.value_begin));
            }
            bool duplicate = std::any_of(attrs.begin(), attrs.end(),
                                         [&](const Attribute& a) { return a.name == attr.name; });
            if (!duplicate) attrs.push_back(std::move(attr));
        }
        builder_.start(name, std::move(attrs), self_closing);

        if (!self_closing && (name == "script" || name == "style" || name == "textarea" || name == "title")) {
            raw_text(name);
        }
    }

    // Contents of raw-text elements run up to the matching end tag.
    void raw_text(const std::string& name) {
        std::size_t search = pos_;
        std::size_t close = src_.size();
        while (true) {
            auto lt = src_.find("</", search);
            if (lt == std::string_view::npos) break;
            if (iequals_prefix(src_, lt + 2, name)) {
                close = lt;
                break;
            }
            search = lt + 2;
        }
        if (name == "title" || name == "textarea") {
            flush(pos_, close);
        }
        pos_ = close;
        if (close < src_.size()) end_tag();
        else builder_.end(name);
    }

    std::string_view src_;
    TreeBuilder& builder_;
    std::size_t pos_ = 0;
};

struct Compound {
    std::string tag;  // empty or "*" matches any
    std::vector<std::string> classes;
    std::string id;
    std::vector<std::pair<std::string, std::optional<std::string>>> attrs;
    bool child_of_previous = false;  // combinator linking this compound to the one before it
};

std::vector<Compound> parse_selector(std::string_view sel) {
    std::vector<Compound> out;
    std::size_t i = 0;
    bool pending_child = false;
    auto ident = [&]() {
        auto begin = i;
        while (i < sel.size() && (std::isalnum(static_cast<unsigned char>(sel[i])) || sel[i] == '-' || sel[i] == '_' ||
                                  static_cast<unsigned char>(sel[i]) >= 0x80))
            ++i;
        if (i == begin) throw SelectorError("bad selector: '" + std::string(sel) + "'");
        return std::string(sel.substr(begin, i - begin));
    };
    while (i < sel.size()) {
        if (is_space(sel[i])) {
            ++i;
            continue;
        }
        if (sel[i] == '>') {
            if (out.empty() || pending_child) throw SelectorError("bad selector: '" + std::string(sel) + "'");
            pending_child = true;
            ++i;
            continue;
        }
        Compound c;
        c.child_of_previous = pending_child;
        pending_child = false;
        if (sel[i] == '*') {
            c.tag = "*";
            ++i;
        } else if (std::isalpha(static_cast<unsigned char>(sel[i]))) {
            c.tag = to_lower(ident());
        }
        while (i < sel.size() && !is_space(sel[i]) && sel[i] != '>') {
            if (sel[i] == '.') {
                ++i;
                c.classes.push_back(ident());
            } else if (sel[i] == '#') {
                ++i;
                c.id = ident();
            } else if (sel[i] == '[') {
                auto close = sel.find(']', i);
                if (close == std::string_view::npos) throw SelectorError("bad selector: '" + std::string(sel) + "'");
                auto body = sel.substr(i + 1, close - i - 1);
                auto eq = body.find('=');
                std::string name = to_lower(body.substr(0, eq));
                std::optional<std::string> value;
                if (eq != std::string_view::npos) {
                    auto v = body.substr(eq + 1);
                    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
                        v = v.substr(1, v.size() - 2);
                    value = std::string(v);
                }
                c.attrs.emplace_back(std::move(name), std::move(value));
                i = close + 1;
            } else {
                throw SelectorError("bad selector: '" + std::string(sel) + "'");
            }
        }
        if (c.tag.empty() && c.classes.empty() && c.id.empty() && c.attrs.empty())
            throw SelectorError("bad selector: '" + std::string(sel) + "'");
        out.push_back(std::move(c));
    }
    if (out.empty() || pending_child) throw SelectorError("bad selector: '" + std::string(sel) + "'");
    return out;
}

bool matches_compound(const Node& n, const Compound& c) {
    if (n.kind != Node::Kind::Element) return false;
    if (!c.tag.empty() && c.tag != "*" && c.tag != n.tag) return false;
    if (!c.id.empty()) {
        auto* id = n.attribute("id");
        if (!id || id->value != c.id) return false;
    }
    for (const auto& cls : c.classes)
        if (!n.has_class(cls)) return false;
    for (const auto& [name, value] : c.attrs) {
        auto* a = n.attribute(name);
        if (!a) return false;
        if (value && a->value != *value) return false;
    }
    return true;
}

} // namespace

const Attribute* Node::attribute(std::string_view name) const {
    for (const auto& a : attributes)
        if (a.name == name) return &a;
    return nullptr;
}

bool Node::has_class(std::string_view cls) const {
    auto* a = attribute("class");
    if (!a) return false;
    std::string_view v = a->value;
    std::size_t pos = 0;
    while (pos < v.size()) {
        while (pos < v.size() && is_space(v[pos])) ++pos;
        auto begin = pos;
        while (pos < v.size() && !is_space(v[pos])) ++pos;
        if (pos > begin && v.substr(begin, pos - begin) == cls) return true;
    }
    return false;
}

Document Document::parse(std::string_view markup) {
    Document doc;
    TreeBuilder builder(doc.nodes_);
    Tokenizer tokenizer(markup, builder);
    tokenizer.run();
    return doc;
}

std::string Document::text_content(std::size_t index) const {
    std::string raw;
    std::function<void(std::size_t)> walk = [&](std::size_t i) {
        const auto& n = nodes_[i];
        if (n.kind == Node::Kind::Text) {
            raw += n.text;
            return;
        }
        if (n.tag == "script" || n.tag == "style") return;
        bool block = block_elements().contains(n.tag);
        if (block) raw += ' ';
        for (auto child : n.children) walk(child);
        if (block) raw += ' ';
    };
    walk(index);
    return normalize_whitespace(raw);
}

std::optional<std::size_t> Document::element_by_id(std::string_view id) const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind != Node::Kind::Element) continue;
        auto* a = nodes_[i].attribute("id");
        if (a && a->value == id) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> Document::next_element_sibling(std::size_t index) const {
    const auto& n = nodes_.at(index);
    if (!n.parent) return std::nullopt;
    const auto& siblings = nodes_[*n.parent].children;
    auto it = std::find(siblings.begin(), siblings.end(), index);
    for (++it; it != siblings.end(); ++it)
        if (nodes_[*it].kind == Node::Kind::Element) return *it;
    return std::nullopt;
}

std::vector<std::size_t> Document::select(std::string_view selector) const {
    auto compounds = parse_selector(selector);
    std::function<bool(std::size_t, std::size_t)> match = [&](std::size_t node, std::size_t k) -> bool {
        if (!matches_compound(nodes_[node], compounds[k])) return false;
        if (k == 0) return true;
        auto parent = nodes_[node].parent;
        if (compounds[k].child_of_previous) return parent && match(*parent, k - 1);
        for (; parent; parent = nodes_[*parent].parent)
            if (match(*parent, k - 1)) return true;
        return false;
    };
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (match(i, compounds.size() - 1)) out.push_back(i);
    return out;
}

Url Document::base_url(const Url& page_url) const {
    for (const auto& n : nodes_) {
        if (n.kind != Node::Kind::Element || n.tag != "base") continue;
        if (auto* href = n.attribute("href"); href && href->has_value) {
            if (auto resolved = resolve(page_url, href->value)) return *resolved;
        }
        break;
    }
    return page_url;
}

std::vector<Reference> references(const Document& doc) {
    std::vector<Reference> out;
    const auto& nodes = doc.nodes();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.kind != Node::Kind::Element) continue;
        const char* attr_name = nullptr;
        bool anchor = false;
        bool asset = false;
        if (n.tag == "a" || n.tag == "area") {
            attr_name = "href";
            anchor = true;
        } else if (n.tag == "link") {
            attr_name = "href";
            auto* rel = n.attribute("rel");
            asset = rel && (rel->value.find("stylesheet") != std::string::npos || rel->value.find("icon") != std::string::npos);
        } else if (n.tag == "img" || n.tag == "script" || n.tag == "iframe" || n.tag == "frame" ||
                   n.tag == "embed" || n.tag == "source" || n.tag == "audio" || n.tag == "video") {
            attr_name = "src";
            asset = true;
        } else if (n.tag == "input") {
            auto* type = n.attribute("type");
            if (type && to_lower(type->value) == "image") {
                attr_name = "src";
                asset = true;
            }
        }
        if (!attr_name) continue;
        auto* a = n.attribute(attr_name);
        if (!a || !a->has_value) continue;
        out.push_back(Reference{i, n.tag, a->name, a->value, a->value_begin, a->value_end, anchor, asset});
    }
    return out;
}

std::vector<Link> anchor_links(const Document& doc, const Url& page_url) {
    auto base = doc.base_url(page_url);
    std::vector<Link> out;
    std::unordered_set<std::string> seen;
    for (const auto& ref : references(doc)) {
        if (!ref.is_anchor) continue;
        auto target = resolve(base, ref.value);
        if (!target) continue;
        auto url = target->str();
        if (!seen.insert(url).second) continue;
        out.push_back(Link{std::move(url), doc.text_content(ref.element)});
    }
    return out;
}

std::string decode_entities(std::string_view text) {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 12> named{{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "},
        {"copy", "\xC2\xA9"}, {"reg", "\xC2\xAE"}, {"ndash", "\xE2\x80\x93"}, {"mdash", "\xE2\x80\x94"},
        {"hellip", "\xE2\x80\xA6"}, {"trade", "\xE2\x84\xA2"},
    }};
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            out += text[i++];
            continue;
        }
        auto semi = text.find(';', i + 1);
        if (semi == std::string_view::npos || semi - i > 12) {
            out += text[i++];
            continue;
        }
        auto name = text.substr(i + 1, semi - i - 1);
        bool done = false;
        if (name.size() > 1 && name[0] == '#') {
            unsigned long cp = 0;
            bool hex = name[1] == 'x' || name[1] == 'X';
            auto digits = name.substr(hex ? 2 : 1);
            bool ok = !digits.empty();
            for (char c : digits) {
                if (hex ? !std::isxdigit(static_cast<unsigned char>(c)) : !std::isdigit(static_cast<unsigned char>(c))) {
                    ok = false;
                    break;
                }
                cp = cp * (hex ? 16 : 10) + static_cast<unsigned long>(std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (lower(c) - 'a' + 10));
                if (cp > 0x10FFFF) cp = 0x110000;
            }
            if (ok) {
                append_utf8(out, cp);
                done = true;
            }
        } else {
            for (const auto& [n, v] : named) {
                if (n == name) {
                    out += v;
                    done = true;
                    break;
                }
            }
        }
        if (done) {
            i = semi + 1;
        } else {
            out += text[i++];
        }
    }
    return out;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (u <= 0x20 || u == 0x7f) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

bool is_parseable(std::string_view body) noexcept {
    return body.find('\0') == std::string_view::npos;
}

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

} // namespace serpmine::html
