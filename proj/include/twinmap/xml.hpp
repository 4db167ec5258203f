#pragma once

// Minimal XML reader/writer covering the subset used by OSM extracts and
// OpenDRIVE documents: elements, attributes, character data, comments,
// CDATA and the standard five entities. No namespaces, no DTD validation.

#include <cctype>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twinmap/error.hpp"

namespace twinmap::xml {

struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes; // document order
    std::vector<Element> children;
    std::string text; // concatenated character data
    int line = 0;     // line of the opening '<'

    const std::string* attr(std::string_view key) const
    {
        for (const auto& [k, v] : attributes) {
            if (k == key) {
                return &v;
            }
        }
        return nullptr;
    }

    Element& add_child(std::string child_name)
    {
        children.push_back(Element{std::move(child_name), {}, {}, {}, 0});
        return children.back();
    }

    Element& set(std::string key, std::string value)
    {
        attributes.emplace_back(std::move(key), std::move(value));
        return *this;
    }
};

namespace detail {

struct Cursor {
    const char* p;
    const char* end;
    int line = 1;

    bool eof() const { return p >= end; }
    char peek() const { return *p; }

    char take()
    {
        const char c = *p++;
        if (c == '\n') {
            ++line;
        }
        return c;
    }

    bool starts_with(std::string_view s) const
    {
        return static_cast<std::size_t>(end - p) >= s.size() &&
               std::string_view(p, s.size()) == s;
    }

    void advance(std::size_t n)
    {
        for (std::size_t i = 0; i < n && !eof(); ++i) {
            take();
        }
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw Error(ErrorKind::parse, what + " at line " + std::to_string(line));
    }
};

inline bool is_name_char(char c)
{
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ||
           c == '.' || c == ':';
}

inline void skip_whitespace(Cursor& cur)
{
    while (!cur.eof() && std::isspace(static_cast<unsigned char>(cur.peek()))) {
        cur.take();
    }
}

inline void skip_until(Cursor& cur, std::string_view terminator)
{
    while (!cur.eof()) {
        if (cur.starts_with(terminator)) {
            cur.advance(terminator.size());
            return;
        }
        cur.take();
    }
    cur.fail("unterminated '" + std::string(terminator) + "'");
}

inline std::string parse_name(Cursor& cur)
{
    std::string name;
    while (!cur.eof() && is_name_char(cur.peek())) {
        name.push_back(cur.take());
    }
    if (name.empty()) {
        cur.fail("expected name");
    }
    return name;
}

inline void append_entity(Cursor& cur, std::string& out)
{
    cur.take(); // '&'
    std::string entity;
    while (!cur.eof() && cur.peek() != ';') {
        entity.push_back(cur.take());
        if (entity.size() > 10) {
            cur.fail("malformed entity reference");
        }
    }
    if (cur.eof()) {
        cur.fail("unterminated entity reference");
    }
    cur.take(); // ';'
    if (entity == "amp") {
        out.push_back('&');
    } else if (entity == "lt") {
        out.push_back('<');
    } else if (entity == "gt") {
        out.push_back('>');
    } else if (entity == "quot") {
        out.push_back('"');
    } else if (entity == "apos") {
        out.push_back('\'');
    } else if (!entity.empty() && entity[0] == '#') {
        const bool hex = entity.size() > 1 && (entity[1] == 'x' || entity[1] == 'X');
        long code = 0;
        try {
            code = std::stol(entity.substr(hex ? 2 : 1), nullptr, hex ? 16 : 10);
        } catch (const std::exception&) {
            cur.fail("malformed character reference '&" + entity + ";'");
        }
        if (code <= 0 || code > 0x10FFFF) {
            cur.fail("character reference out of range");
        }
        // UTF-8 encode.
        const unsigned long cp = static_cast<unsigned long>(code);
        if (cp < 0x80) {
            out.push_back(static_cast<char>(cp));
        } else if (cp < 0x800) {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else if (cp < 0x10000) {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        } else {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    } else {
        cur.fail("unknown entity '&" + entity + ";'");
    }
}

inline std::string parse_attribute_value(Cursor& cur)
{
    if (cur.eof() || (cur.peek() != '"' && cur.peek() != '\'')) {
        cur.fail("expected quoted attribute value");
    }
    const char quote = cur.take();
    std::string value;
    while (!cur.eof() && cur.peek() != quote) {
        if (cur.peek() == '&') {
            append_entity(cur, value);
        } else if (cur.peek() == '<') {
            cur.fail("'<' in attribute value");
        } else {
            value.push_back(cur.take());
        }
    }
    if (cur.eof()) {
        cur.fail("unterminated attribute value");
    }
    cur.take(); // closing quote
    return value;
}

inline bool skip_misc(Cursor& cur)
{
    if (cur.starts_with("<!--")) {
        cur.advance(4);
        skip_until(cur, "-->");
        return true;
    }
    if (cur.starts_with("<?")) {
        cur.advance(2);
        skip_until(cur, "?>");
        return true;
    }
    if (cur.starts_with("<!DOCTYPE")) {
        int depth = 0;
        while (!cur.eof()) {
            const char c = cur.take();
            if (c == '[') {
                ++depth;
            } else if (c == ']') {
                --depth;
            } else if (c == '>' && depth <= 0) {
                return true;
            }
        }
        cur.fail("unterminated DOCTYPE");
    }
    return false;
}

inline Element parse_element(Cursor& cur)
{
    if (cur.eof() || cur.peek() != '<') {
        cur.fail("expected '<'");
    }
    Element element;
    element.line = cur.line;
    cur.take(); // '<'
    element.name = parse_name(cur);

    // Attributes.
    for (;;) {
        skip_whitespace(cur);
        if (cur.eof()) {
            cur.fail("unterminated start tag <" + element.name + ">");
        }
        if (cur.starts_with("/>")) {
            cur.advance(2);
            return element;
        }
        if (cur.peek() == '>') {
            cur.take();
            break;
        }
        std::string key = parse_name(cur);
        skip_whitespace(cur);
        if (cur.eof() || cur.peek() != '=') {
            cur.fail("expected '=' after attribute '" + key + "'");
        }
        cur.take();
        skip_whitespace(cur);
        element.attributes.emplace_back(std::move(key), parse_attribute_value(cur));
    }

    // Content until the matching end tag.
    for (;;) {
        if (cur.eof()) {
            cur.fail("missing </" + element.name + ">");
        }
        if (cur.starts_with("</")) {
            cur.advance(2);
            const int close_line = cur.line;
            const std::string close_name = parse_name(cur);
            skip_whitespace(cur);
            if (cur.eof() || cur.peek() != '>') {
                cur.fail("malformed end tag </" + close_name + ">");
            }
            cur.take();
            if (close_name != element.name) {
                throw Error(ErrorKind::parse, "mismatched end tag </" + close_name +
                                                  "> for <" + element.name + "> at line " +
                                                  std::to_string(close_line));
            }
            return element;
        }
        if (cur.starts_with("<![CDATA[")) {
            cur.advance(9);
            while (!cur.eof() && !cur.starts_with("]]>")) {
                element.text.push_back(cur.take());
            }
            if (cur.eof()) {
                cur.fail("unterminated CDATA section");
            }
            cur.advance(3);
            continue;
        }
        if (skip_misc(cur)) {
            continue;
        }
        if (cur.peek() == '<') {
            element.children.push_back(parse_element(cur));
            continue;
        }
        if (cur.peek() == '&') {
            append_entity(cur, element.text);
            continue;
        }
        element.text.push_back(cur.take());
    }
}

inline void escape_into(std::string_view raw, bool quote_context, std::string& out)
{
    for (const char c : raw) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"':
            if (quote_context) {
                out += "&quot;";
            } else {
                out.push_back(c);
            }
            break;
        default: out.push_back(c);
        }
    }
}

inline void write_element(const Element& element, int depth, std::string& out)
{
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out.push_back('<');
    out += element.name;
    for (const auto& [key, value] : element.attributes) {
        out.push_back(' ');
        out += key;
        out += "=\"";
        escape_into(value, true, out);
        out.push_back('"');
    }
    if (element.children.empty() && element.text.empty()) {
        out += "/>\n";
        return;
    }
    out.push_back('>');
    if (element.children.empty()) {
        escape_into(element.text, false, out);
        out += "</";
        out += element.name;
        out += ">\n";
        return;
    }
    out.push_back('\n');
    for (const Element& child : element.children) {
        write_element(child, depth + 1, out);
    }
    out.append(static_cast<std::size_t>(depth) * 2, ' ');
    out += "</";
    out += element.name;
    out += ">\n";
}

} // namespace detail

// Parse a document and return its root element.
inline Element parse(std::string_view text)
{
    detail::Cursor cur{text.data(), text.data() + text.size(), 1};
    for (;;) {
        detail::skip_whitespace(cur);
        if (cur.eof()) {
            cur.fail("document has no root element");
        }
        if (detail::skip_misc(cur)) {
            continue;
        }
        break;
    }
    Element root = detail::parse_element(cur);
    for (;;) {
        detail::skip_whitespace(cur);
        if (cur.eof()) {
            return root;
        }
        if (!detail::skip_misc(cur)) {
            cur.fail("content after root element");
        }
    }
}

// Canonical serialization: XML declaration, 2-space indent, LF line endings.
inline std::string write_document(const Element& root)
{
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    detail::write_element(root, 0, out);
    return out;
}

} // namespace twinmap::xml
