#pragma once

// OpenStreetMap ingestion: XML extract parsing, local metric projection and
// road-graph construction with splitting at shared nodes.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/text.hpp"
#include "twinmap/xml.hpp"

namespace twinmap {

inline constexpr double kEarthRadius = 6378137.0; // WGS84 equatorial, meters
inline constexpr double kDegToRad = M_PI / 180.0;

using TagMap = std::map<std::string, std::string>;

struct OsmNode {
    long long id = 0;
    double lat = 0.0;
    double lon = 0.0;
    TagMap tags;
};

struct OsmWay {
    long long id = 0;
    std::vector<long long> node_refs;
    TagMap tags;
};

struct OsmExtract {
    std::vector<OsmNode> nodes;
    std::vector<OsmWay> ways;
    std::unordered_map<long long, std::size_t> node_index; // id -> nodes[] slot

    const OsmNode& node(long long id) const
    {
        const auto it = node_index.find(id);
        if (it == node_index.end()) {
            throw Error(ErrorKind::dangling_reference, "unknown node " + std::to_string(id));
        }
        return nodes[it->second];
    }
};

// Equirectangular local tangent frame, adequate for city-scale extracts.
struct LocalFrame {
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double earth_radius = kEarthRadius;
};

inline Vec2 project(double lat, double lon, const LocalFrame& frame)
{
    const double x = frame.earth_radius * (lon - frame.origin_lon) * kDegToRad *
                     std::cos(frame.origin_lat * kDegToRad);
    const double y = frame.earth_radius * (lat - frame.origin_lat) * kDegToRad;
    return {x, y};
}

inline void unproject(Vec2 p, const LocalFrame& frame, double& lat, double& lon)
{
    lat = frame.origin_lat + p.y / (frame.earth_radius * kDegToRad);
    lon = frame.origin_lon + p.x / (frame.earth_radius * kDegToRad *
                                    std::cos(frame.origin_lat * kDegToRad));
}

struct RoadEdge {
    std::string id; // "<way_id>_<k>", k = 0-based split index
    std::vector<Vec2> polyline;
    TagMap tags;
    bool is_bridge = false;
    long long first_node = 0;
    long long last_node = 0;
};

struct RoadGraph {
    std::vector<RoadEdge> edges;
    std::map<long long, Vec2> nodes; // node id -> projected point
};

struct RoadGraphOptions {
    // Non-drivable highway classes excluded from the road graph.
    std::vector<std::string> deny_classes = {"footway", "cycleway", "path", "steps"};
};

namespace detail {

inline double parse_required_double(const xml::Element& e, std::string_view key)
{
    const std::string* raw = e.attr(key);
    if (!raw) {
        throw Error(ErrorKind::parse, "<" + e.name + "> missing attribute '" + std::string(key) +
                                          "' at line " + std::to_string(e.line));
    }
    const auto value = parse_double(*raw);
    if (!value) {
        throw Error(ErrorKind::parse, "<" + e.name + "> attribute '" + std::string(key) +
                                          "' is not numeric at line " + std::to_string(e.line));
    }
    return *value;
}

inline long long parse_required_int(const xml::Element& e, std::string_view key)
{
    const std::string* raw = e.attr(key);
    if (!raw) {
        throw Error(ErrorKind::parse, "<" + e.name + "> missing attribute '" + std::string(key) +
                                          "' at line " + std::to_string(e.line));
    }
    const auto value = parse_int(*raw);
    if (!value) {
        throw Error(ErrorKind::parse, "<" + e.name + "> attribute '" + std::string(key) +
                                          "' is not an integer at line " + std::to_string(e.line));
    }
    return *value;
}

inline TagMap collect_tags(const xml::Element& e)
{
    TagMap tags;
    for (const xml::Element& child : e.children) {
        if (child.name != "tag") {
            continue;
        }
        const std::string* k = child.attr("k");
        const std::string* v = child.attr("v");
        if (!k || !v) {
            throw Error(ErrorKind::parse,
                        "<tag> missing k/v at line " + std::to_string(child.line));
        }
        tags[*k] = *v;
    }
    return tags;
}

} // namespace detail

inline OsmExtract parse_osm(std::string_view xml_text)
{
    const xml::Element root = xml::parse(xml_text);
    if (root.name != "osm") {
        throw Error(ErrorKind::parse, "expected top-level <osm> element, got <" + root.name +
                                          "> at line " + std::to_string(root.line));
    }

    OsmExtract extract;
    for (const xml::Element& e : root.children) {
        if (e.name == "node") {
            OsmNode node;
            node.id = detail::parse_required_int(e, "id");
            node.lat = detail::parse_required_double(e, "lat");
            node.lon = detail::parse_required_double(e, "lon");
            if (node.lat < -90.0 || node.lat > 90.0 || node.lon < -180.0 || node.lon > 180.0) {
                throw Error(ErrorKind::parse, "node " + std::to_string(node.id) +
                                                  " outside WGS84 bounds at line " +
                                                  std::to_string(e.line));
            }
            node.tags = detail::collect_tags(e);
            extract.node_index[node.id] = extract.nodes.size();
            extract.nodes.push_back(std::move(node));
        } else if (e.name == "way") {
            OsmWay way;
            way.id = detail::parse_required_int(e, "id");
            for (const xml::Element& child : e.children) {
                if (child.name == "nd") {
                    way.node_refs.push_back(detail::parse_required_int(child, "ref"));
                }
            }
            way.tags = detail::collect_tags(e);
            extract.ways.push_back(std::move(way));
        }
        // Relations and anything else are ignored.
    }

    for (const OsmWay& way : extract.ways) {
        for (const long long ref : way.node_refs) {
            if (!extract.node_index.contains(ref)) {
                throw Error(ErrorKind::dangling_reference,
                            "way " + std::to_string(way.id) + " references missing node " +
                                std::to_string(ref));
            }
        }
    }
    return extract;
}

// A way is a road candidate iff it carries a highway tag.
inline bool is_road_candidate(const OsmWay& way)
{
    return way.tags.contains("highway");
}

inline bool is_denied(const OsmWay& way, const RoadGraphOptions& options)
{
    const auto it = way.tags.find("highway");
    if (it == way.tags.end()) {
        return true;
    }
    return std::find(options.deny_classes.begin(), options.deny_classes.end(), it->second) !=
           options.deny_classes.end();
}

// Default frame origin: centroid of all road-candidate nodes.
inline LocalFrame default_frame(const OsmExtract& extract)
{
    double lat_sum = 0.0;
    double lon_sum = 0.0;
    std::size_t count = 0;
    std::set<long long> seen;
    for (const OsmWay& way : extract.ways) {
        if (!is_road_candidate(way)) {
            continue;
        }
        for (const long long ref : way.node_refs) {
            if (!seen.insert(ref).second) {
                continue;
            }
            const OsmNode& node = extract.node(ref);
            lat_sum += node.lat;
            lon_sum += node.lon;
            ++count;
        }
    }
    if (count == 0) {
        for (const OsmNode& node : extract.nodes) {
            lat_sum += node.lat;
            lon_sum += node.lon;
            ++count;
        }
    }
    LocalFrame frame;
    if (count > 0) {
        frame.origin_lat = lat_sum / static_cast<double>(count);
        frame.origin_lon = lon_sum / static_cast<double>(count);
    }
    return frame;
}

inline RoadGraph build_road_graph(const OsmExtract& extract, const LocalFrame& frame,
                                  const RoadGraphOptions& options = {})
{
    // Collapse duplicate consecutive refs, then count node usage over the
    // filtered road ways to find split points.
    std::vector<const OsmWay*> road_ways;
    std::vector<std::vector<long long>> refs_per_way;
    for (const OsmWay& way : extract.ways) {
        if (!is_road_candidate(way) || is_denied(way, options)) {
            continue;
        }
        std::vector<long long> refs;
        for (const long long ref : way.node_refs) {
            if (refs.empty() || refs.back() != ref) {
                refs.push_back(ref);
            }
        }
        if (refs.size() < 2) {
            continue;
        }
        road_ways.push_back(&way);
        refs_per_way.push_back(std::move(refs));
    }

    std::unordered_map<long long, int> way_count;       // distinct ways touching a node
    std::unordered_map<long long, int> max_per_way_use; // max occurrences within one way
    for (const std::vector<long long>& refs : refs_per_way) {
        std::unordered_map<long long, int> local;
        for (const long long ref : refs) {
            ++local[ref];
        }
        for (const auto& [ref, uses] : local) {
            ++way_count[ref];
            max_per_way_use[ref] = std::max(max_per_way_use[ref], uses);
        }
    }
    const auto is_junction = [&](long long ref) {
        return way_count[ref] >= 2 || max_per_way_use[ref] >= 2;
    };

    RoadGraph graph;
    for (std::size_t w = 0; w < road_ways.size(); ++w) {
        const OsmWay& way = *road_ways[w];
        const std::vector<long long>& refs = refs_per_way[w];

        // Split at interior occurrences of junction nodes.
        std::vector<std::size_t> cut_points{0};
        for (std::size_t i = 1; i + 1 < refs.size(); ++i) {
            if (is_junction(refs[i])) {
                cut_points.push_back(i);
            }
        }
        cut_points.push_back(refs.size() - 1);

        for (std::size_t c = 0; c + 1 < cut_points.size(); ++c) {
            RoadEdge edge;
            edge.id = std::to_string(way.id) + "_" + std::to_string(c);
            edge.tags = way.tags;
            const auto bridge_it = way.tags.find("bridge");
            edge.is_bridge = bridge_it != way.tags.end() && bridge_it->second == "yes";
            edge.first_node = refs[cut_points[c]];
            edge.last_node = refs[cut_points[c + 1]];

            std::vector<std::pair<long long, Vec2>> segment_nodes;
            for (std::size_t i = cut_points[c]; i <= cut_points[c + 1]; ++i) {
                const OsmNode& node = extract.node(refs[i]);
                const Vec2 p = project(node.lat, node.lon, frame);
                segment_nodes.emplace_back(refs[i], p);
                if (!edge.polyline.empty() && distance(edge.polyline.back(), p) <= 1e-6) {
                    continue; // distinct ids, coincident coordinates
                }
                edge.polyline.push_back(p);
            }
            if (edge.polyline.size() < 2) {
                continue;
            }
            for (const auto& [id, p] : segment_nodes) {
                graph.nodes[id] = p;
            }
            graph.edges.push_back(std::move(edge));
        }
    }
    return graph;
}

} // namespace twinmap
