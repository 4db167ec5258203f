#pragma once

// Line-oriented interchange format for (possibly fine-tuned) road graphs:
//
//   twinmap-graph 1
//   frame <origin_lat> <origin_lon> <earth_radius>        (optional)
//   edge <id> <first_node> <last_node> <n_vertices> <n_tags>
//   t <key>\t<value>                                      (n_tags lines)
//   v <x> <y>                                             (n_vertices lines)

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/osm.hpp"
#include "twinmap/text.hpp"

namespace twinmap {

namespace detail {

inline std::string escape_tag(std::string_view raw)
{
    std::string out;
    out.reserve(raw.size());
    for (const char c : raw) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '\t': out += "\\t"; break;
        case '\n': out += "\\n"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

inline std::string unescape_tag(std::string_view raw, int line_number)
{
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '\\') {
            out.push_back(raw[i]);
            continue;
        }
        if (i + 1 >= raw.size()) {
            throw Error(ErrorKind::format,
                        "dangling escape on line " + std::to_string(line_number));
        }
        switch (raw[++i]) {
        case '\\': out.push_back('\\'); break;
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        default:
            throw Error(ErrorKind::format,
                        "unknown escape on line " + std::to_string(line_number));
        }
    }
    return out;
}

} // namespace detail

inline std::string write_graph(const RoadGraph& graph,
                               const std::optional<LocalFrame>& frame = std::nullopt)
{
    std::string out = "twinmap-graph 1\n";
    if (frame) {
        out += "frame " + format_g17(frame->origin_lat) + " " + format_g17(frame->origin_lon) +
               " " + format_g17(frame->earth_radius) + "\n";
    }
    for (const RoadEdge& edge : graph.edges) {
        out += "edge " + edge.id + " " + std::to_string(edge.first_node) + " " +
               std::to_string(edge.last_node) + " " + std::to_string(edge.polyline.size()) +
               " " + std::to_string(edge.tags.size()) + "\n";
        for (const auto& [key, value] : edge.tags) {
            out += "t " + detail::escape_tag(key) + "\t" + detail::escape_tag(value) + "\n";
        }
        for (const Vec2 v : edge.polyline) {
            out += "v " + format_g17(v.x) + " " + format_g17(v.y) + "\n";
        }
    }
    return out;
}

struct GraphFile {
    RoadGraph graph;
    std::optional<LocalFrame> frame;
};

inline GraphFile read_graph(std::string_view text)
{
    const std::vector<std::string_view> lines = split(text, '\n');
    std::size_t i = 0;
    int line_number = 0;

    const auto next_line = [&]() -> std::optional<std::string_view> {
        while (i < lines.size()) {
            const std::string_view line = lines[i];
            ++i;
            ++line_number;
            if (!trim(line).empty()) {
                return line;
            }
        }
        return std::nullopt;
    };
    const auto fail = [&](const std::string& what) -> Error {
        return Error(ErrorKind::format, what + " on line " + std::to_string(line_number));
    };

    const auto header = next_line();
    if (!header || trim(*header) != "twinmap-graph 1") {
        throw fail("expected 'twinmap-graph 1' header");
    }

    GraphFile result;
    std::optional<std::string_view> line = next_line();
    if (line) {
        const auto tokens = split_whitespace(*line);
        if (!tokens.empty() && tokens[0] == "frame") {
            if (tokens.size() != 4) {
                throw fail("frame line needs 3 values");
            }
            const auto lat = parse_double(tokens[1]);
            const auto lon = parse_double(tokens[2]);
            const auto radius = parse_double(tokens[3]);
            if (!lat || !lon || !radius) {
                throw fail("non-numeric frame value");
            }
            result.frame = LocalFrame{*lat, *lon, *radius};
            line = next_line();
        }
    }

    while (line) {
        const auto tokens = split_whitespace(*line);
        if (tokens.empty() || tokens[0] != "edge") {
            throw fail("expected 'edge' record");
        }
        if (tokens.size() != 6) {
            throw fail("edge line needs 5 values");
        }
        RoadEdge edge;
        edge.id = std::string(tokens[1]);
        const auto first_node = parse_int(tokens[2]);
        const auto last_node = parse_int(tokens[3]);
        const auto n_vertices = parse_int(tokens[4]);
        const auto n_tags = parse_int(tokens[5]);
        if (!first_node || !last_node || !n_vertices || !n_tags || *n_vertices < 2 ||
            *n_tags < 0) {
            throw fail("malformed edge header");
        }
        edge.first_node = *first_node;
        edge.last_node = *last_node;

        for (long long k = 0; k < *n_tags; ++k) {
            line = next_line();
            if (!line || !line->starts_with("t ")) {
                throw fail("expected tag record");
            }
            const std::string_view rest = line->substr(2);
            const std::size_t tab = rest.find('\t');
            if (tab == std::string_view::npos) {
                throw fail("tag record missing tab separator");
            }
            edge.tags[detail::unescape_tag(rest.substr(0, tab), line_number)] =
                detail::unescape_tag(trim(rest.substr(tab + 1)), line_number);
        }
        const auto bridge_it = edge.tags.find("bridge");
        edge.is_bridge = bridge_it != edge.tags.end() && bridge_it->second == "yes";

        for (long long k = 0; k < *n_vertices; ++k) {
            line = next_line();
            if (!line || !line->starts_with("v ")) {
                throw fail("expected vertex record");
            }
            const auto coords = split_whitespace(line->substr(2));
            if (coords.size() != 2) {
                throw fail("vertex record needs 2 values");
            }
            const auto x = parse_double(coords[0]);
            const auto y = parse_double(coords[1]);
            if (!x || !y) {
                throw fail("non-numeric vertex coordinate");
            }
            edge.polyline.push_back({*x, *y});
        }
        result.graph.nodes[edge.first_node] = edge.polyline.front();
        result.graph.nodes[edge.last_node] = edge.polyline.back();
        result.graph.edges.push_back(std::move(edge));
        line = next_line();
    }
    return result;
}

} // namespace twinmap
