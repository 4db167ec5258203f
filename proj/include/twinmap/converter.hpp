#pragma once

// RoadGraph + terrain -> OpenDRIVE: plan-view fitting (Douglas-Peucker lines
// or greedy least-squares arcs), tag-driven lane modeling, natural-cubic
// elevation profiles with linear bridge decks, and deck clearance checks.

#include <algorithm>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/odr.hpp"
#include "twinmap/osm.hpp"
#include "twinmap/terrain.hpp"

namespace twinmap {

struct LaneSpec {
    // Innermost lane first on each side.
    std::vector<std::pair<odr::LaneType, double>> left_lanes;
    std::vector<std::pair<odr::LaneType, double>> right_lanes;
};

struct HighwayClassRule {
    int lanes_left = 1;
    int lanes_right = 1;
    double width = 3.5;
};

inline std::map<std::string, HighwayClassRule> default_class_rules()
{
    return {
        {"motorway", {2, 2, 3.7}},
        {"primary", {1, 1, 3.5}},
        {"secondary", {1, 1, 3.5}},
        {"residential", {1, 1, 3.25}},
        {"unclassified", {1, 1, 3.25}},
        {"service", {1, 1, 3.0}},
    };
}

inline constexpr double kSidewalkWidth = 1.8;

struct ConversionConfig {
    enum class FitMode { polyline, arcfit };

    FitMode fit_mode = FitMode::polyline;
    double arc_tolerance = 0.25;          // meters, max radial deviation per arc
    double simplify_epsilon = 0.10;       // meters, Douglas-Peucker threshold
    double elevation_sample_step = 5.0;   // meters
    double default_lane_width = 3.5;      // meters, for config-added classes
    double bridge_clearance_min = 4.5;    // meters
    std::map<std::string, HighwayClassRule> class_rules = default_class_rules();
};

// ---------------------------------------------------------------------------
// Plan-view fitting

namespace detail {

inline std::vector<Vec2> dedupe_polyline(std::span<const Vec2> polyline)
{
    std::vector<Vec2> out;
    out.reserve(polyline.size());
    for (const Vec2 p : polyline) {
        if (out.empty() || distance(out.back(), p) > 1e-9) {
            out.push_back(p);
        }
    }
    return out;
}

// Classic recursive simplification; the split vertex is the farthest from
// the chord, ties resolving to the smallest index.
inline void douglas_peucker(std::span<const Vec2> points, std::size_t first, std::size_t last,
                            double epsilon, std::vector<bool>& keep)
{
    if (last <= first + 1) {
        return;
    }
    double max_dist = 0.0;
    std::size_t split = first;
    for (std::size_t i = first + 1; i < last; ++i) {
        const double d = point_segment_distance(points[i], points[first], points[last]);
        if (d > max_dist) {
            max_dist = d;
            split = i;
        }
    }
    if (max_dist > epsilon) {
        keep[split] = true;
        douglas_peucker(points, first, split, epsilon, keep);
        douglas_peucker(points, split, last, epsilon, keep);
    }
}

struct CircleFit {
    Vec2 center;
    double radius = 0.0;
    bool valid = false;
};

// Algebraic least-squares circle constrained to pass through `anchor`:
// minimizing sum((|q-c|^2 - |anchor-c|^2)^2) is linear in the center.
inline CircleFit fit_circle_through(Vec2 anchor, std::span<const Vec2> points)
{
    double a11 = 0.0, a12 = 0.0, a22 = 0.0, b1 = 0.0, b2 = 0.0;
    for (const Vec2 q : points) {
        const Vec2 u = (q - anchor) * 2.0;
        const double r = squared_norm(q) - squared_norm(anchor);
        a11 += u.x * u.x;
        a12 += u.x * u.y;
        a22 += u.y * u.y;
        b1 += u.x * r;
        b2 += u.y * r;
    }
    const double det = a11 * a22 - a12 * a12;
    const double scale = a11 + a22;
    CircleFit fit;
    if (std::abs(det) < 1e-12 * std::max(scale * scale, 1e-300)) {
        return fit; // collinear or near-degenerate
    }
    fit.center = {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
    fit.radius = distance(anchor, fit.center);
    fit.valid = fit.radius > 1e-9 && std::isfinite(fit.radius);
    return fit;
}

inline double max_radial_deviation(const CircleFit& fit, std::span<const Vec2> points)
{
    double max_dev = 0.0;
    for (const Vec2 q : points) {
        max_dev = std::max(max_dev, std::abs(distance(q, fit.center) - fit.radius));
    }
    return max_dev;
}

inline double max_chord_deviation(Vec2 a, Vec2 b, std::span<const Vec2> points)
{
    double max_dev = 0.0;
    for (const Vec2 q : points) {
        max_dev = std::max(max_dev, point_segment_distance(q, a, b));
    }
    return max_dev;
}

// Signed sweep of the window around the circle center, accumulated
// increment-wise so multi-quadrant arcs and loops unwind correctly.
inline double arc_sweep(Vec2 center, Vec2 start, std::span<const Vec2> rest)
{
    double sweep = 0.0;
    double prev = std::atan2(start.y - center.y, start.x - center.x);
    for (const Vec2 q : rest) {
        const double angle = std::atan2(q.y - center.y, q.x - center.x);
        sweep += wrap_angle(angle - prev);
        prev = angle;
    }
    return sweep;
}

// Emit one window as a segment chained onto `pen`; returns the new pen.
inline Vec2 emit_window(Vec2 pen, std::span<const Vec2> window, bool as_arc,
                        const CircleFit& fit, double s_offset,
                        std::vector<odr::GeometrySegment>& out)
{
    if (as_arc) {
        const double sweep = arc_sweep(fit.center, pen, window.subspan(1));
        const double length = std::abs(sweep) * fit.radius;
        if (length > 1e-9 && std::abs(sweep) > 1e-12) {
            const Vec2 radial = (pen - fit.center) / distance(pen, fit.center);
            const Vec2 tangent = sweep > 0.0 ? perp(radial) : perp(radial) * -1.0;
            const double hdg = std::atan2(tangent.y, tangent.x);
            const double curvature = (sweep > 0.0 ? 1.0 : -1.0) / fit.radius;
            out.push_back(odr::make_arc(s_offset, pen.x, pen.y, hdg, length, curvature));
            const odr::Pose end = odr::eval_segment(out.back(), length);
            return {end.x, end.y};
        }
        // Degenerate sweep: fall through to a chord line.
    }
    const Vec2 target = window.back();
    const double length = distance(pen, target);
    if (length > 1e-9) {
        const double hdg = std::atan2(target.y - pen.y, target.x - pen.x);
        out.push_back(odr::make_line(s_offset, pen.x, pen.y, hdg, length));
    }
    return target;
}

inline std::vector<odr::GeometrySegment> fit_polyline_mode(std::span<const Vec2> points,
                                                           double epsilon)
{
    std::vector<bool> keep(points.size(), false);
    keep.front() = true;
    keep.back() = true;
    douglas_peucker(points, 0, points.size() - 1, epsilon, keep);

    std::vector<odr::GeometrySegment> segments;
    double s = 0.0;
    Vec2 pen = points.front();
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!keep[i]) {
            continue;
        }
        const double length = distance(pen, points[i]);
        if (length > 1e-9) {
            const double hdg = std::atan2(points[i].y - pen.y, points[i].x - pen.x);
            segments.push_back(odr::make_line(s, pen.x, pen.y, hdg, length));
            s += length;
            pen = points[i];
        }
    }
    return segments;
}

inline std::vector<odr::GeometrySegment> fit_arc_mode(std::span<const Vec2> points,
                                                      double tolerance)
{
    std::vector<odr::GeometrySegment> segments;
    double s = 0.0;
    Vec2 pen = points.front();
    std::size_t start = 0;

    while (start + 1 < points.size()) {
        // Grow the window while one circle through the pen stays within
        // tolerance of every window vertex; two-vertex windows are lines.
        std::size_t end = start + 1;
        bool best_is_arc = false;
        CircleFit best_fit;

        while (end + 1 < points.size()) {
            const std::size_t candidate = end + 1;
            const std::span<const Vec2> window =
                points.subspan(start, candidate - start + 1);
            const CircleFit fit = fit_circle_through(pen, window);
            bool ok = false;
            bool is_arc = false;
            if (fit.valid && max_radial_deviation(fit, window) <= tolerance) {
                ok = true;
                is_arc = true;
            } else if (max_chord_deviation(pen, window.back(), window) <= tolerance) {
                ok = true; // collinear run
            }
            if (!ok) {
                break;
            }
            end = candidate;
            best_is_arc = is_arc;
            best_fit = fit;
        }

        const std::span<const Vec2> window = points.subspan(start, end - start + 1);
        pen = emit_window(pen, window, best_is_arc, best_fit, s, segments);
        if (!segments.empty()) {
            s = segments.back().s + segments.back().length;
        }
        start = end;
    }
    return segments;
}

} // namespace detail

// Fit a plan view to a polyline. Polyline mode simplifies with
// Douglas-Peucker and emits one line per kept chord; arcfit mode greedily
// grows windows approximated by least-squares circles within arc_tolerance.
// Segments chain exactly (each starts at the previous endpoint), so the
// result is C0-continuous by construction.
inline std::vector<odr::GeometrySegment> fit_plan_view(std::span<const Vec2> polyline,
                                                       const ConversionConfig& config)
{
    const std::vector<Vec2> points = detail::dedupe_polyline(polyline);
    if (points.size() < 2) {
        throw Error(ErrorKind::degenerate_input,
                    "plan-view fit needs at least 2 distinct vertices");
    }
    if (config.fit_mode == ConversionConfig::FitMode::arcfit) {
        return detail::fit_arc_mode(points, config.arc_tolerance);
    }
    return detail::fit_polyline_mode(points, config.simplify_epsilon);
}

// ---------------------------------------------------------------------------
// Lane modeling

// Derive a lane layout from OSM tags: explicit `lanes` counts split per
// `oneway` override the per-class defaults; `sidewalk` appends walkways.
inline LaneSpec lanes_from_tags(const TagMap& tags, const ConversionConfig& config)
{
    const auto highway = tags.find("highway");
    if (highway == tags.end()) {
        throw Error(ErrorKind::precondition, "tags carry no highway class");
    }
    const auto rule_it = config.class_rules.find(highway->second);
    if (rule_it == config.class_rules.end()) {
        throw Error(ErrorKind::unmapped_class,
                    "no conversion rule for highway class '" + highway->second + "'");
    }
    const HighwayClassRule& rule = rule_it->second;

    int left = rule.lanes_left;
    int right = rule.lanes_right;

    const auto oneway_it = tags.find("oneway");
    const bool oneway = oneway_it != tags.end() &&
                        (oneway_it->second == "yes" || oneway_it->second == "true" ||
                         oneway_it->second == "1");

    const auto lanes_it = tags.find("lanes");
    if (lanes_it != tags.end()) {
        if (const auto total = parse_int(lanes_it->second); total && *total >= 1) {
            if (oneway) {
                left = 0;
                right = static_cast<int>(*total);
            } else {
                // Favor the forward (right) side on odd totals.
                right = static_cast<int>((*total + 1) / 2);
                left = static_cast<int>(*total) - right;
            }
        }
    } else if (oneway) {
        right = rule.lanes_left + rule.lanes_right;
        left = 0;
    }

    LaneSpec spec;
    for (int i = 0; i < left; ++i) {
        spec.left_lanes.emplace_back(odr::LaneType::driving, rule.width);
    }
    for (int i = 0; i < right; ++i) {
        spec.right_lanes.emplace_back(odr::LaneType::driving, rule.width);
    }
    if (spec.left_lanes.empty() && spec.right_lanes.empty()) {
        throw Error(ErrorKind::precondition, "lane rules for highway class '" + highway->second +
                                                 "' yield no driving lane");
    }

    const auto sidewalk_it = tags.find("sidewalk");
    if (sidewalk_it != tags.end()) {
        const std::string& v = sidewalk_it->second;
        if (v == "both" || v == "left") {
            spec.left_lanes.emplace_back(odr::LaneType::sidewalk, kSidewalkWidth);
        }
        if (v == "both" || v == "right") {
            spec.right_lanes.emplace_back(odr::LaneType::sidewalk, kSidewalkWidth);
        }
    }
    return spec;
}

// ---------------------------------------------------------------------------
// Elevation fitting

// Natural cubic spline through (s_k, z_k); one ElevPoly per interval.
// Tridiagonal solve, second derivatives clamped to zero at both ends.
inline std::vector<odr::ElevPoly> natural_cubic_spline(std::span<const double> s,
                                                       std::span<const double> z)
{
    const std::size_t n = s.size();
    if (n != z.size() || n < 2) {
        throw Error(ErrorKind::precondition, "spline needs at least 2 knots");
    }
    for (std::size_t i = 1; i < n; ++i) {
        if (s[i] <= s[i - 1]) {
            throw Error(ErrorKind::precondition, "spline knots must be strictly increasing");
        }
    }

    const std::size_t m = n - 1; // interval count
    std::vector<double> h(m);
    for (std::size_t i = 0; i < m; ++i) {
        h[i] = s[i + 1] - s[i];
    }

    std::vector<double> alpha(n, 0.0), l(n, 1.0), mu(n, 0.0), zz(n, 0.0), c(n, 0.0);
    for (std::size_t i = 1; i < m; ++i) {
        alpha[i] = 3.0 * (z[i + 1] - z[i]) / h[i] - 3.0 * (z[i] - z[i - 1]) / h[i - 1];
    }
    for (std::size_t i = 1; i < m; ++i) {
        l[i] = 2.0 * (s[i + 1] - s[i - 1]) - h[i - 1] * mu[i - 1];
        mu[i] = h[i] / l[i];
        zz[i] = (alpha[i] - h[i - 1] * zz[i - 1]) / l[i];
    }

    std::vector<odr::ElevPoly> polys(m);
    for (std::size_t j = m; j-- > 0;) {
        c[j] = zz[j] - mu[j] * c[j + 1];
        polys[j].s = s[j];
        polys[j].a = z[j];
        polys[j].b = (z[j + 1] - z[j]) / h[j] - h[j] * (c[j + 1] + 2.0 * c[j]) / 3.0;
        polys[j].c = c[j];
        polys[j].d = (c[j + 1] - c[j]) / (3.0 * h[j]);
    }
    return polys;
}

namespace detail {

inline std::vector<double> elevation_sample_abscissae(double length, double step)
{
    std::vector<double> s_values;
    for (double s = 0.0; s < length - 1e-9; s += step) {
        s_values.push_back(s);
    }
    s_values.push_back(length);
    return s_values;
}

inline double dem_height_or_throw(const Dem& dem, double x, double y, double s)
{
    try {
        return sample_height(dem, x, y);
    } catch (const Error& e) {
        throw Error(ErrorKind::missing_terrain, "no terrain at s = " + format_g17(s) + " (" +
                                                    format_g17(x) + ", " + format_g17(y) +
                                                    "): " + e.what());
    }
}

} // namespace detail

// Fit an elevation profile along a road whose plan view is already built.
// Non-bridge roads follow the terrain through a natural cubic spline over
// DEM samples; bridges get a single linear deck between the abutment
// heights and never sample the terrain under the span.
inline std::vector<odr::ElevPoly> fit_elevation(const odr::OdrRoad& road, const Dem& dem,
                                                bool is_bridge, const ConversionConfig& config)
{
    if (road.length <= 0.0 || road.plan_view.empty()) {
        throw Error(ErrorKind::precondition, "road has no plan view to sample along");
    }

    if (is_bridge) {
        const odr::Pose start = odr::eval_plan_view(road, 0.0);
        const odr::Pose end = odr::eval_plan_view(road, road.length);
        const double z0 = detail::dem_height_or_throw(dem, start.x, start.y, 0.0);
        const double z1 = detail::dem_height_or_throw(dem, end.x, end.y, road.length);
        return {odr::ElevPoly{0.0, z0, (z1 - z0) / road.length, 0.0, 0.0}};
    }

    const std::vector<double> s_values =
        detail::elevation_sample_abscissae(road.length, config.elevation_sample_step);
    std::vector<double> z_values;
    z_values.reserve(s_values.size());
    for (const double s : s_values) {
        const odr::Pose pose = odr::eval_plan_view(road, s);
        z_values.push_back(detail::dem_height_or_throw(dem, pose.x, pose.y, s));
    }
    if (s_values.size() < 2) {
        return {odr::ElevPoly{0.0, z_values.front(), 0.0, 0.0, 0.0}};
    }
    return natural_cubic_spline(s_values, z_values);
}

// ---------------------------------------------------------------------------
// Conversion

namespace detail {

inline odr::LaneSection lane_section_from_spec(const LaneSpec& spec)
{
    odr::LaneSection section;
    section.s = 0.0;
    for (std::size_t i = spec.left_lanes.size(); i-- > 0;) {
        odr::Lane lane;
        lane.id = static_cast<int>(i) + 1;
        lane.type = spec.left_lanes[i].first;
        lane.a = spec.left_lanes[i].second;
        section.lanes.push_back(lane);
    }
    section.lanes.push_back(odr::Lane{0, odr::LaneType::none, 0, 0, 0, 0});
    for (std::size_t i = 0; i < spec.right_lanes.size(); ++i) {
        odr::Lane lane;
        lane.id = -(static_cast<int>(i) + 1);
        lane.type = spec.right_lanes[i].first;
        lane.a = spec.right_lanes[i].second;
        section.lanes.push_back(lane);
    }
    return section;
}

} // namespace detail

// Convert a road graph over a DEM into an OpenDRIVE map: one road per edge,
// degree-2 node joins become predecessor/successor links, intersections of
// degree >= 3 leave roads unlinked.
inline odr::OdrMap convert(const RoadGraph& graph, const Dem& dem,
                           const ConversionConfig& config)
{
    if (graph.edges.empty()) {
        throw Error(ErrorKind::precondition, "road graph has no edges");
    }

    std::vector<const RoadEdge*> edges;
    edges.reserve(graph.edges.size());
    for (const RoadEdge& edge : graph.edges) {
        edges.push_back(&edge);
    }
    std::sort(edges.begin(), edges.end(),
              [](const RoadEdge* a, const RoadEdge* b) { return a->id < b->id; });

    odr::OdrMap map;
    map.roads.reserve(edges.size());
    for (const RoadEdge* edge : edges) {
        try {
            odr::OdrRoad road;
            road.id = edge->id;
            road.plan_view = fit_plan_view(edge->polyline, config);
            road.length = 0.0;
            for (const odr::GeometrySegment& seg : road.plan_view) {
                road.length += seg.length;
            }
            road.lane_sections.push_back(
                detail::lane_section_from_spec(lanes_from_tags(edge->tags, config)));
            road.elevation_profile = fit_elevation(road, dem, edge->is_bridge, config);
            map.roads.push_back(std::move(road));
        } catch (const Error& e) {
            throw Error(e.kind(), "edge " + edge->id + ": " + e.message());
        }
    }

    // Link roads meeting head-to-tail at degree-2 nodes.
    struct Endpoint {
        std::size_t road_index;
        bool at_end; // false: first vertex, true: last vertex
    };
    std::map<long long, std::vector<Endpoint>> endpoints;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        endpoints[edges[i]->first_node].push_back({i, false});
        endpoints[edges[i]->last_node].push_back({i, true});
    }
    for (const auto& [node_id, list] : endpoints) {
        if (list.size() != 2 || list[0].road_index == list[1].road_index) {
            continue;
        }
        for (int k = 0; k < 2; ++k) {
            const Endpoint& here = list[k];
            const Endpoint& other = list[1 - k];
            odr::RoadLink link;
            link.id = map.roads[other.road_index].id;
            link.contact = other.at_end ? odr::RoadLink::ContactPoint::end
                                        : odr::RoadLink::ContactPoint::start;
            if (here.at_end) {
                map.roads[here.road_index].successor = link;
            } else {
                map.roads[here.road_index].predecessor = link;
            }
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// Bridge clearance

namespace detail {

// Arc length along `polyline` up to the hit on segment `seg_index`.
inline double arc_length_to_hit(std::span<const Vec2> polyline, std::size_t seg_index, double t)
{
    double s = 0.0;
    for (std::size_t i = 0; i < seg_index; ++i) {
        s += distance(polyline[i], polyline[i + 1]);
    }
    return s + t * distance(polyline[seg_index], polyline[seg_index + 1]);
}

} // namespace detail

// Detect planimetric crossings between bridge and non-bridge edges and
// report deck-over-road pairs closer vertically than the configured minimum.
// Crossings at edge endpoints (shared junction nodes, abutments) are not
// overpasses and are skipped.
inline std::vector<odr::Issue> check_clearance(const odr::OdrMap& map, const RoadGraph& graph,
                                               const ConversionConfig& config)
{
    std::map<std::string, const odr::OdrRoad*> roads_by_id;
    for (const odr::OdrRoad& road : map.roads) {
        roads_by_id[road.id] = &road;
    }

    std::vector<odr::Issue> issues;
    for (const RoadEdge& bridge : graph.edges) {
        if (!bridge.is_bridge || !roads_by_id.contains(bridge.id)) {
            continue;
        }
        const odr::OdrRoad& deck_road = *roads_by_id.at(bridge.id);
        const double bridge_total = polyline_length(bridge.polyline);
        if (bridge_total <= 0.0) {
            continue;
        }

        for (const RoadEdge& other : graph.edges) {
            if (other.is_bridge || !roads_by_id.contains(other.id)) {
                continue;
            }
            const odr::OdrRoad& ground_road = *roads_by_id.at(other.id);
            const double other_total = polyline_length(other.polyline);
            if (other_total <= 0.0) {
                continue;
            }

            for (std::size_t i = 0; i + 1 < bridge.polyline.size(); ++i) {
                for (std::size_t j = 0; j + 1 < other.polyline.size(); ++j) {
                    const auto hit =
                        segment_intersection(bridge.polyline[i], bridge.polyline[i + 1],
                                             other.polyline[j], other.polyline[j + 1]);
                    if (!hit) {
                        continue;
                    }
                    if (distance(hit->point, bridge.polyline.front()) < 1e-6 ||
                        distance(hit->point, bridge.polyline.back()) < 1e-6 ||
                        distance(hit->point, other.polyline.front()) < 1e-6 ||
                        distance(hit->point, other.polyline.back()) < 1e-6) {
                        continue; // touching at an edge endpoint, not an overpass
                    }

                    const double s_deck =
                        std::clamp(detail::arc_length_to_hit(bridge.polyline, i, hit->t_a) *
                                       deck_road.length / bridge_total,
                                   0.0, deck_road.length);
                    const double s_ground =
                        std::clamp(detail::arc_length_to_hit(other.polyline, j, hit->t_b) *
                                       ground_road.length / other_total,
                                   0.0, ground_road.length);
                    const double z_deck = odr::eval_elevation(deck_road, s_deck);
                    const double z_ground = odr::eval_elevation(ground_road, s_ground);
                    const double separation = z_deck - z_ground;
                    if (separation < config.bridge_clearance_min) {
                        issues.push_back(
                            {odr::IssueSeverity::warning, bridge.id,
                             "clearance " + format_g17(separation) + " m over road " + other.id +
                                 " at (" + format_g17(hit->point.x) + ", " +
                                 format_g17(hit->point.y) + ") is below the " +
                                 format_g17(config.bridge_clearance_min) + " m minimum"});
                    }
                }
            }
        }
    }
    return issues;
}

} // namespace twinmap
