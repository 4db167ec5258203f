#pragma once

// Self-contained OpenDRIVE 1.4 document model for the implemented subset:
// planView (line / arc / paramPoly3), elevationProfile, lanes with width
// polynomials and road links. Analytic evaluators, canonical XML
// serialization and a structural validator.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/text.hpp"
#include "twinmap/xml.hpp"

namespace twinmap::odr {

// Below this magnitude an arc curvature is numerically a straight line.
inline constexpr double kMinArcCurvature = 1e-9;

enum class GeometryKind { line, arc, param_poly3 };

struct ParamPoly3Coeffs {
    double aU = 0, bU = 0, cU = 0, dU = 0;
    double aV = 0, bV = 0, cV = 0, dV = 0;
};

struct GeometrySegment {
    double s = 0;         // start offset along the road
    double x = 0, y = 0;  // start position
    double hdg = 0;       // start heading, radians
    double length = 0;
    GeometryKind kind = GeometryKind::line;
    double curvature = 0;    // arc only, 1/m, != 0
    ParamPoly3Coeffs poly{}; // paramPoly3 only, pRange = arcLength
};

inline GeometrySegment make_line(double s, double x, double y, double hdg, double length)
{
    return {s, x, y, hdg, length, GeometryKind::line, 0.0, {}};
}

// Arcs with |curvature| below kMinArcCurvature are normalized to lines.
inline GeometrySegment make_arc(double s, double x, double y, double hdg, double length,
                                double curvature)
{
    if (std::abs(curvature) < kMinArcCurvature) {
        return make_line(s, x, y, hdg, length);
    }
    return {s, x, y, hdg, length, GeometryKind::arc, curvature, {}};
}

inline GeometrySegment make_param_poly3(double s, double x, double y, double hdg, double length,
                                        const ParamPoly3Coeffs& poly)
{
    return {s, x, y, hdg, length, GeometryKind::param_poly3, 0.0, poly};
}

// z(s) = a + b*ds + c*ds^2 + d*ds^3, ds = s - s_start.
struct ElevPoly {
    double s = 0;
    double a = 0, b = 0, c = 0, d = 0;

    double eval(double ds) const { return a + ds * (b + ds * (c + ds * d)); }
    double eval_derivative(double ds) const { return b + ds * (2.0 * c + ds * 3.0 * d); }
};

enum class LaneType { driving, sidewalk, shoulder, none };

inline const char* lane_type_name(LaneType t)
{
    switch (t) {
    case LaneType::driving: return "driving";
    case LaneType::sidewalk: return "sidewalk";
    case LaneType::shoulder: return "shoulder";
    case LaneType::none: return "none";
    }
    return "none";
}

struct Lane {
    int id = 0;
    LaneType type = LaneType::none;
    // Width polynomial over ds within the section; the center lane has none.
    double a = 0, b = 0, c = 0, d = 0;

    double width(double ds) const { return a + ds * (b + ds * (c + ds * d)); }
};

struct LaneSection {
    double s = 0;
    std::vector<Lane> lanes; // canonical order: descending id (+n .. 0 .. -m)

    const Lane* find(int id) const
    {
        for (const Lane& lane : lanes) {
            if (lane.id == id) {
                return &lane;
            }
        }
        return nullptr;
    }
};

struct RoadLink {
    enum class ContactPoint { start, end };
    std::string id;
    ContactPoint contact = ContactPoint::start;
};

struct OdrRoad {
    std::string id;
    double length = 0;
    std::optional<RoadLink> predecessor;
    std::optional<RoadLink> successor;
    std::vector<GeometrySegment> plan_view;        // s strictly increasing from 0
    std::vector<ElevPoly> elevation_profile;       // s strictly increasing from 0
    std::vector<LaneSection> lane_sections;        // s strictly increasing from 0
};

struct OdrHeader {
    std::string name;
    int rev_major = 1;
    int rev_minor = 4;
    std::string geo_reference; // empty = absent
};

struct OdrMap {
    OdrHeader header;
    std::vector<OdrRoad> roads;
};

struct Pose {
    double x = 0, y = 0, hdg = 0;
};

// ---------------------------------------------------------------------------
// Evaluators

namespace detail {

template <typename T>
const T& governing_record(const std::vector<T>& records, double s)
{
    std::size_t i = 0;
    while (i + 1 < records.size() && records[i + 1].s <= s) {
        ++i;
    }
    return records[i];
}

inline double poly3_eval(double a, double b, double c, double d, double p)
{
    return a + p * (b + p * (c + p * d));
}

inline double poly3_derivative(double b, double c, double d, double p)
{
    return b + p * (2.0 * c + p * 3.0 * d);
}

} // namespace detail

// Pose of a single segment at local offset ds from its start.
inline Pose eval_segment(const GeometrySegment& seg, double ds)
{
    switch (seg.kind) {
    case GeometryKind::arc:
        if (std::abs(seg.curvature) >= kMinArcCurvature) {
            const double h1 = seg.hdg + seg.curvature * ds;
            return {seg.x + (std::sin(h1) - std::sin(seg.hdg)) / seg.curvature,
                    seg.y - (std::cos(h1) - std::cos(seg.hdg)) / seg.curvature, h1};
        }
        [[fallthrough]]; // numerically straight
    case GeometryKind::line:
        return {seg.x + ds * std::cos(seg.hdg), seg.y + ds * std::sin(seg.hdg), seg.hdg};
    case GeometryKind::param_poly3: {
        // pRange = arcLength: the cubics are evaluated at p = ds directly.
        const double u = detail::poly3_eval(seg.poly.aU, seg.poly.bU, seg.poly.cU, seg.poly.dU, ds);
        const double v = detail::poly3_eval(seg.poly.aV, seg.poly.bV, seg.poly.cV, seg.poly.dV, ds);
        const double du = detail::poly3_derivative(seg.poly.bU, seg.poly.cU, seg.poly.dU, ds);
        const double dv = detail::poly3_derivative(seg.poly.bV, seg.poly.cV, seg.poly.dV, ds);
        const Vec2 world = rotate({u, v}, seg.hdg);
        return {seg.x + world.x, seg.y + world.y, seg.hdg + std::atan2(dv, du)};
    }
    }
    return {seg.x, seg.y, seg.hdg};
}

inline Pose eval_plan_view(const OdrRoad& road, double s)
{
    if (road.plan_view.empty()) {
        throw Error(ErrorKind::domain, "road " + road.id + " has an empty plan view");
    }
    if (s < -1e-9 || s > road.length + 1e-9) {
        throw Error(ErrorKind::domain, "s = " + format_g17(s) + " outside [0, " +
                                           format_g17(road.length) + "] on road " + road.id);
    }
    const GeometrySegment& seg = detail::governing_record(road.plan_view, s);
    return eval_segment(seg, s - seg.s);
}

inline double eval_elevation(const OdrRoad& road, double s)
{
    if (road.elevation_profile.empty()) {
        throw Error(ErrorKind::missing_profile, "road " + road.id + " has no elevation profile");
    }
    if (s < -1e-9 || s > road.length + 1e-9) {
        throw Error(ErrorKind::domain, "s = " + format_g17(s) + " outside [0, " +
                                           format_g17(road.length) + "] on road " + road.id);
    }
    const ElevPoly& poly = detail::governing_record(road.elevation_profile, s);
    return poly.eval(s - poly.s);
}

// Signed lateral offset of the outer boundary of lane `lane_id` at ds within
// the section: cumulative widths between the center lane and the lane,
// positive left, negative right. Lane 0 yields 0.
inline double lane_boundary_t(const LaneSection& section, int lane_id, double ds)
{
    if (!section.find(lane_id)) {
        throw Error(ErrorKind::lookup, "unknown lane id " + std::to_string(lane_id));
    }
    if (lane_id == 0) {
        return 0.0;
    }
    const int sign = lane_id > 0 ? 1 : -1;
    double t = 0.0;
    for (int id = sign; id != lane_id + sign; id += sign) {
        const Lane* lane = section.find(id);
        if (!lane) {
            throw Error(ErrorKind::lookup, "lane id " + std::to_string(id) +
                                               " missing between center and " +
                                               std::to_string(lane_id));
        }
        t += lane->width(ds);
    }
    return sign > 0 ? t : -t;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {

inline void set_num(xml::Element& e, std::string key, double v)
{
    e.set(std::move(key), format_g17(v));
}

inline xml::Element link_record(const char* tag, const RoadLink& link)
{
    xml::Element e;
    e.name = tag;
    e.set("elementType", "road");
    e.set("elementId", link.id);
    e.set("contactPoint", link.contact == RoadLink::ContactPoint::start ? "start" : "end");
    return e;
}

inline void append_lane(xml::Element& parent, const Lane& lane)
{
    xml::Element& lane_el = parent.add_child("lane");
    lane_el.set("id", std::to_string(lane.id));
    lane_el.set("type", lane_type_name(lane.type));
    lane_el.set("level", "false");
    if (lane.id != 0) {
        xml::Element& width = lane_el.add_child("width");
        set_num(width, "sOffset", 0.0);
        set_num(width, "a", lane.a);
        set_num(width, "b", lane.b);
        set_num(width, "c", lane.c);
        set_num(width, "d", lane.d);
    }
}

} // namespace detail

inline std::string serialize(const OdrMap& map)
{
    xml::Element root;
    root.name = "OpenDRIVE";

    xml::Element& header = root.add_child("header");
    header.set("revMajor", std::to_string(map.header.rev_major));
    header.set("revMinor", std::to_string(map.header.rev_minor));
    header.set("name", map.header.name);
    if (!map.header.geo_reference.empty()) {
        header.add_child("geoReference").text = map.header.geo_reference;
    }

    std::vector<const OdrRoad*> roads;
    roads.reserve(map.roads.size());
    for (const OdrRoad& road : map.roads) {
        roads.push_back(&road);
    }
    std::sort(roads.begin(), roads.end(),
              [](const OdrRoad* a, const OdrRoad* b) { return a->id < b->id; });

    for (const OdrRoad* road : roads) {
        xml::Element& road_el = root.add_child("road");
        road_el.set("id", road->id);
        detail::set_num(road_el, "length", road->length);
        road_el.set("junction", "-1");

        if (road->predecessor || road->successor) {
            xml::Element& link = road_el.add_child("link");
            if (road->predecessor) {
                link.children.push_back(detail::link_record("predecessor", *road->predecessor));
            }
            if (road->successor) {
                link.children.push_back(detail::link_record("successor", *road->successor));
            }
        }

        xml::Element& plan_view = road_el.add_child("planView");
        for (const GeometrySegment& seg : road->plan_view) {
            xml::Element& g = plan_view.add_child("geometry");
            detail::set_num(g, "s", seg.s);
            detail::set_num(g, "x", seg.x);
            detail::set_num(g, "y", seg.y);
            detail::set_num(g, "hdg", seg.hdg);
            detail::set_num(g, "length", seg.length);
            switch (seg.kind) {
            case GeometryKind::line:
                g.add_child("line");
                break;
            case GeometryKind::arc:
                detail::set_num(g.add_child("arc"), "curvature", seg.curvature);
                break;
            case GeometryKind::param_poly3: {
                xml::Element& p = g.add_child("paramPoly3");
                detail::set_num(p, "aU", seg.poly.aU);
                detail::set_num(p, "bU", seg.poly.bU);
                detail::set_num(p, "cU", seg.poly.cU);
                detail::set_num(p, "dU", seg.poly.dU);
                detail::set_num(p, "aV", seg.poly.aV);
                detail::set_num(p, "bV", seg.poly.bV);
                detail::set_num(p, "cV", seg.poly.cV);
                detail::set_num(p, "dV", seg.poly.dV);
                p.set("pRange", "arcLength");
                break;
            }
            }
        }

        if (!road->elevation_profile.empty()) {
            xml::Element& profile = road_el.add_child("elevationProfile");
            for (const ElevPoly& poly : road->elevation_profile) {
                xml::Element& e = profile.add_child("elevation");
                detail::set_num(e, "s", poly.s);
                detail::set_num(e, "a", poly.a);
                detail::set_num(e, "b", poly.b);
                detail::set_num(e, "c", poly.c);
                detail::set_num(e, "d", poly.d);
            }
        }

        xml::Element& lanes = road_el.add_child("lanes");
        for (const LaneSection& section : road->lane_sections) {
            xml::Element& section_el = lanes.add_child("laneSection");
            detail::set_num(section_el, "s", section.s);

            std::vector<const Lane*> left, center, right;
            for (const Lane& lane : section.lanes) {
                (lane.id > 0 ? left : lane.id == 0 ? center : right).push_back(&lane);
            }
            const auto descending = [](const Lane* a, const Lane* b) { return a->id > b->id; };
            std::sort(left.begin(), left.end(), descending);
            std::sort(right.begin(), right.end(), descending);

            if (!left.empty()) {
                xml::Element& left_el = section_el.add_child("left");
                for (const Lane* lane : left) {
                    detail::append_lane(left_el, *lane);
                }
            }
            if (!center.empty()) {
                xml::Element& center_el = section_el.add_child("center");
                for (const Lane* lane : center) {
                    detail::append_lane(center_el, *lane);
                }
            }
            if (!right.empty()) {
                xml::Element& right_el = section_el.add_child("right");
                for (const Lane* lane : right) {
                    detail::append_lane(right_el, *lane);
                }
            }
        }
    }
    return xml::write_document(root);
}

namespace detail {

inline double require_num(const xml::Element& e, std::string_view key)
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

inline LaneType parse_lane_type(const std::string& name, int line)
{
    if (name == "driving") {
        return LaneType::driving;
    }
    if (name == "sidewalk") {
        return LaneType::sidewalk;
    }
    if (name == "shoulder") {
        return LaneType::shoulder;
    }
    if (name == "none") {
        return LaneType::none;
    }
    throw Error(ErrorKind::unsupported_record,
                "lane type '" + name + "' at line " + std::to_string(line));
}

inline std::optional<RoadLink> parse_link_record(const xml::Element& link, const char* tag)
{
    for (const xml::Element& child : link.children) {
        if (child.name != tag) {
            continue;
        }
        const std::string* element_id = child.attr("elementId");
        if (!element_id) {
            throw Error(ErrorKind::parse, "<" + child.name + "> missing elementId at line " +
                                              std::to_string(child.line));
        }
        RoadLink result;
        result.id = *element_id;
        const std::string* contact = child.attr("contactPoint");
        result.contact = (contact && *contact == "end") ? RoadLink::ContactPoint::end
                                                        : RoadLink::ContactPoint::start;
        return result;
    }
    return std::nullopt;
}

inline GeometrySegment parse_geometry(const xml::Element& g)
{
    const double s = require_num(g, "s");
    const double x = require_num(g, "x");
    const double y = require_num(g, "y");
    const double hdg = require_num(g, "hdg");
    const double length = require_num(g, "length");

    const xml::Element* shape = nullptr;
    for (const xml::Element& child : g.children) {
        shape = &child;
        break;
    }
    if (!shape) {
        throw Error(ErrorKind::parse,
                    "<geometry> without a shape record at line " + std::to_string(g.line));
    }
    if (shape->name == "line") {
        return make_line(s, x, y, hdg, length);
    }
    if (shape->name == "arc") {
        return make_arc(s, x, y, hdg, length, require_num(*shape, "curvature"));
    }
    if (shape->name == "paramPoly3") {
        const std::string* p_range = shape->attr("pRange");
        if (p_range && *p_range != "arcLength") {
            throw Error(ErrorKind::unsupported_record, "paramPoly3 pRange '" + *p_range +
                                                           "' at line " +
                                                           std::to_string(shape->line));
        }
        ParamPoly3Coeffs poly;
        poly.aU = require_num(*shape, "aU");
        poly.bU = require_num(*shape, "bU");
        poly.cU = require_num(*shape, "cU");
        poly.dU = require_num(*shape, "dU");
        poly.aV = require_num(*shape, "aV");
        poly.bV = require_num(*shape, "bV");
        poly.cV = require_num(*shape, "cV");
        poly.dV = require_num(*shape, "dV");
        return make_param_poly3(s, x, y, hdg, length, poly);
    }
    throw Error(ErrorKind::unsupported_record,
                "geometry record <" + shape->name + "> at line " + std::to_string(shape->line));
}

inline Lane parse_lane(const xml::Element& lane_el)
{
    const std::string* id_raw = lane_el.attr("id");
    const auto id = id_raw ? parse_int(*id_raw) : std::nullopt;
    if (!id) {
        throw Error(ErrorKind::parse,
                    "<lane> missing integer id at line " + std::to_string(lane_el.line));
    }
    const std::string* type = lane_el.attr("type");
    if (!type) {
        throw Error(ErrorKind::parse,
                    "<lane> missing type at line " + std::to_string(lane_el.line));
    }

    Lane lane;
    lane.id = static_cast<int>(*id);
    lane.type = parse_lane_type(*type, lane_el.line);

    const xml::Element* width = nullptr;
    for (const xml::Element& child : lane_el.children) {
        if (child.name != "width") {
            continue;
        }
        if (width) {
            throw Error(ErrorKind::unsupported_record,
                        "multiple <width> records on one lane at line " +
                            std::to_string(child.line));
        }
        width = &child;
    }
    if (width) {
        if (std::abs(require_num(*width, "sOffset")) > 1e-12) {
            throw Error(ErrorKind::unsupported_record, "lane <width> with nonzero sOffset at line " +
                                                           std::to_string(width->line));
        }
        lane.a = require_num(*width, "a");
        lane.b = require_num(*width, "b");
        lane.c = require_num(*width, "c");
        lane.d = require_num(*width, "d");
    }
    return lane;
}

} // namespace detail

inline OdrMap deserialize(std::string_view xml_text, std::vector<std::string>* warnings = nullptr)
{
    const auto warn = [&](std::string message) {
        if (warnings) {
            warnings->push_back(std::move(message));
        }
    };

    const xml::Element root = xml::parse(xml_text);
    if (root.name != "OpenDRIVE") {
        throw Error(ErrorKind::parse, "expected <OpenDRIVE> root element, got <" + root.name +
                                          "> at line " + std::to_string(root.line));
    }

    OdrMap map;
    for (const xml::Element& e : root.children) {
        if (e.name == "header") {
            if (const std::string* name = e.attr("name")) {
                map.header.name = *name;
            }
            if (const std::string* rev = e.attr("revMajor")) {
                map.header.rev_major = static_cast<int>(parse_int(*rev).value_or(1));
            }
            if (const std::string* rev = e.attr("revMinor")) {
                map.header.rev_minor = static_cast<int>(parse_int(*rev).value_or(4));
            }
            for (const xml::Element& child : e.children) {
                if (child.name == "geoReference") {
                    map.header.geo_reference = child.text;
                }
            }
            if (map.header.rev_major != 1 || map.header.rev_minor != 4) {
                warn("document declares OpenDRIVE " + std::to_string(map.header.rev_major) + "." +
                     std::to_string(map.header.rev_minor) + ", expected 1.4");
            }
        } else if (e.name == "road") {
            OdrRoad road;
            if (const std::string* id = e.attr("id")) {
                road.id = *id;
            } else {
                throw Error(ErrorKind::parse,
                            "<road> missing id at line " + std::to_string(e.line));
            }
            road.length = detail::require_num(e, "length");

            for (const xml::Element& child : e.children) {
                if (child.name == "link") {
                    road.predecessor = detail::parse_link_record(child, "predecessor");
                    road.successor = detail::parse_link_record(child, "successor");
                } else if (child.name == "planView") {
                    for (const xml::Element& g : child.children) {
                        if (g.name == "geometry") {
                            road.plan_view.push_back(detail::parse_geometry(g));
                        }
                    }
                } else if (child.name == "elevationProfile") {
                    for (const xml::Element& el : child.children) {
                        if (el.name != "elevation") {
                            continue;
                        }
                        road.elevation_profile.push_back(
                            {detail::require_num(el, "s"), detail::require_num(el, "a"),
                             detail::require_num(el, "b"), detail::require_num(el, "c"),
                             detail::require_num(el, "d")});
                    }
                } else if (child.name == "lanes") {
                    for (const xml::Element& section_el : child.children) {
                        if (section_el.name == "laneOffset") {
                            throw Error(ErrorKind::unsupported_record,
                                        "<laneOffset> at line " + std::to_string(section_el.line));
                        }
                        if (section_el.name != "laneSection") {
                            continue;
                        }
                        LaneSection section;
                        section.s = detail::require_num(section_el, "s");
                        for (const xml::Element& side : section_el.children) {
                            if (side.name != "left" && side.name != "center" &&
                                side.name != "right") {
                                continue;
                            }
                            for (const xml::Element& lane_el : side.children) {
                                if (lane_el.name == "lane") {
                                    section.lanes.push_back(detail::parse_lane(lane_el));
                                }
                            }
                        }
                        std::stable_sort(
                            section.lanes.begin(), section.lanes.end(),
                            [](const Lane& a, const Lane& b) { return a.id > b.id; });
                        road.lane_sections.push_back(std::move(section));
                    }
                } else if (child.name == "lateralProfile" || child.name == "signals" ||
                           child.name == "objects") {
                    throw Error(ErrorKind::unsupported_record,
                                "<" + child.name + "> at line " + std::to_string(child.line));
                }
            }
            map.roads.push_back(std::move(road));
        }
    }
    return map;
}

// ---------------------------------------------------------------------------
// Validation

enum class IssueSeverity { error, warning };

struct Issue {
    IssueSeverity severity = IssueSeverity::error;
    std::string road_id;
    std::string message;
};

inline std::vector<Issue> validate_road(const OdrRoad& road)
{
    std::vector<Issue> issues;
    const auto report = [&](IssueSeverity severity, std::string message) {
        issues.push_back({severity, road.id, std::move(message)});
    };

    // Segment length sum vs declared road length.
    double length_sum = 0.0;
    for (const GeometrySegment& seg : road.plan_view) {
        length_sum += seg.length;
    }
    if (!road.plan_view.empty() && std::abs(length_sum - road.length) > 1e-6) {
        report(IssueSeverity::error, "plan view length sum " + format_g17(length_sum) +
                                         " differs from road length " + format_g17(road.length));
    }

    // C0 / heading continuity between consecutive segments.
    for (std::size_t i = 0; i + 1 < road.plan_view.size(); ++i) {
        const GeometrySegment& seg = road.plan_view[i];
        const GeometrySegment& next = road.plan_view[i + 1];
        const Pose end = eval_segment(seg, seg.length);
        const double gap = std::hypot(end.x - next.x, end.y - next.y);
        if (gap > 1e-4) {
            report(IssueSeverity::error, "C0 gap of " + format_g17(gap) +
                                             " m between segments at s = " + format_g17(next.s));
        }
        const double heading_gap = std::abs(wrap_angle(end.hdg - next.hdg));
        if (heading_gap > 1e-3) {
            report(IssueSeverity::warning, "heading gap of " + format_g17(heading_gap) +
                                               " rad between segments at s = " +
                                               format_g17(next.s));
        }
    }

    // Lane id contiguity and width positivity.
    for (std::size_t si = 0; si < road.lane_sections.size(); ++si) {
        const LaneSection& section = road.lane_sections[si];
        std::set<int> ids;
        bool duplicate = false;
        int min_id = 0, max_id = 0;
        for (const Lane& lane : section.lanes) {
            if (!ids.insert(lane.id).second) {
                duplicate = true;
            }
            min_id = std::min(min_id, lane.id);
            max_id = std::max(max_id, lane.id);
        }
        bool contiguous = !duplicate && ids.contains(0);
        for (int id = min_id; contiguous && id <= max_id; ++id) {
            contiguous = ids.contains(id);
        }
        if (!contiguous) {
            report(IssueSeverity::error, "lane ids in section at s = " + format_g17(section.s) +
                                             " are not contiguous around lane 0");
        }

        const double section_end =
            si + 1 < road.lane_sections.size() ? road.lane_sections[si + 1].s : road.length;
        const double span = std::max(0.0, section_end - section.s);
        for (const Lane& lane : section.lanes) {
            if (lane.id == 0) {
                continue;
            }
            bool negative = false;
            double at = 0.0;
            for (double ds = 0.0; !negative; ds += 0.5) {
                if (ds > span) {
                    ds = span;
                }
                if (lane.width(ds) < -1e-9) {
                    negative = true;
                    at = ds;
                    break;
                }
                if (ds >= span) {
                    break;
                }
            }
            if (negative) {
                report(IssueSeverity::error, "lane " + std::to_string(lane.id) +
                                                 " has negative width at ds = " + format_g17(at) +
                                                 " in section at s = " + format_g17(section.s));
            }
        }
    }
    return issues;
}

inline std::vector<Issue> validate(const OdrMap& map)
{
    std::vector<Issue> issues;
    for (const OdrRoad& road : map.roads) {
        std::vector<Issue> road_issues = validate_road(road);
        issues.insert(issues.end(), std::make_move_iterator(road_issues.begin()),
                      std::make_move_iterator(road_issues.end()));
    }
    return issues;
}

inline bool has_errors(const std::vector<Issue>& issues)
{
    return std::any_of(issues.begin(), issues.end(),
                       [](const Issue& i) { return i.severity == IssueSeverity::error; });
}

} // namespace twinmap::odr
