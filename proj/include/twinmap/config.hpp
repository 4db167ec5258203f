#pragma once

// Flat key=value pipeline configuration shared by every CLI stage.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "twinmap/converter.hpp"
#include "twinmap/error.hpp"
#include "twinmap/meshgen.hpp"
#include "twinmap/osm.hpp"
#include "twinmap/registration.hpp"
#include "twinmap/text.hpp"

namespace twinmap {

struct PipelineConfig {
    std::string osm_path;
    std::string dem_path;
    std::string cloud_path;
    std::string xodr_path;
    std::string graph_path;
    std::string out_dir = "out";

    std::optional<double> origin_lat;
    std::optional<double> origin_lon;
    unsigned workers = 0; // 0 = auto

    IcpParams icp;
    ConversionConfig conversion;
    TessellationParams tessellation;
    RoadGraphOptions road_graph;

    double ground_cell_size = 1.0;   // rasterize_ground cell, meters
    double ground_percentile = 0.05; // low-percentile ground filter
};

namespace detail {

inline double config_double(const std::string& key, const std::string& value)
{
    const auto parsed = parse_double(value);
    if (!parsed) {
        throw Error(ErrorKind::parse, "config key '" + key + "' has non-numeric value '" +
                                          value + "'");
    }
    return *parsed;
}

inline long long config_int(const std::string& key, const std::string& value)
{
    const auto parsed = parse_int(value);
    if (!parsed) {
        throw Error(ErrorKind::parse, "config key '" + key + "' has non-integer value '" +
                                          value + "'");
    }
    return *parsed;
}

} // namespace detail

// Parse `key = value` lines; '#' starts a comment, blank lines are ignored.
inline std::map<std::string, std::string> parse_key_values(std::string_view text)
{
    std::map<std::string, std::string> values;
    int line_number = 0;
    for (const std::string_view raw_line : split(text, '\n')) {
        ++line_number;
        std::string_view line = raw_line;
        if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw Error(ErrorKind::parse, "config line " + std::to_string(line_number) +
                                              " is not 'key = value'");
        }
        const std::string key{trim(line.substr(0, eq))};
        const std::string value{trim(line.substr(eq + 1))};
        if (key.empty()) {
            throw Error(ErrorKind::parse,
                        "config line " + std::to_string(line_number) + " has an empty key");
        }
        values[key] = value;
    }
    return values;
}

inline ConversionConfig::FitMode parse_fit_mode(const std::string& value)
{
    if (value == "polyline") {
        return ConversionConfig::FitMode::polyline;
    }
    if (value == "arcfit") {
        return ConversionConfig::FitMode::arcfit;
    }
    throw Error(ErrorKind::parse, "fit mode must be 'polyline' or 'arcfit', got '" + value + "'");
}

// Apply parsed key=value pairs onto a PipelineConfig. Unknown keys fail
// loudly. Highway-class rules use class.<name>.lanes_left / lanes_right /
// width; unseen classes start from one lane per side at the default width.
inline void apply_key_values(PipelineConfig& config,
                             const std::map<std::string, std::string>& values)
{
    using detail::config_double;
    using detail::config_int;

    for (const auto& [key, value] : values) {
        if (key == "osm") {
            config.osm_path = value;
        } else if (key == "dem") {
            config.dem_path = value;
        } else if (key == "cloud") {
            config.cloud_path = value;
        } else if (key == "xodr") {
            config.xodr_path = value;
        } else if (key == "graph") {
            config.graph_path = value;
        } else if (key == "out") {
            config.out_dir = value;
        } else if (key == "origin_lat") {
            config.origin_lat = config_double(key, value);
        } else if (key == "origin_lon") {
            config.origin_lon = config_double(key, value);
        } else if (key == "workers") {
            const long long n = config_int(key, value);
            if (n < 1) {
                throw Error(ErrorKind::parse, "workers must be >= 1");
            }
            config.workers = static_cast<unsigned>(n);
        } else if (key == "icp.max_iterations") {
            config.icp.max_iterations = static_cast<int>(config_int(key, value));
        } else if (key == "icp.convergence_tol") {
            config.icp.convergence_tol = config_double(key, value);
        } else if (key == "icp.max_correspondence_dist") {
            config.icp.max_correspondence_dist = config_double(key, value);
        } else if (key == "icp.resample_step") {
            config.icp.resample_step = config_double(key, value);
        } else if (key == "convert.fit_mode") {
            config.conversion.fit_mode = parse_fit_mode(value);
        } else if (key == "convert.arc_tolerance") {
            config.conversion.arc_tolerance = config_double(key, value);
        } else if (key == "convert.simplify_epsilon") {
            config.conversion.simplify_epsilon = config_double(key, value);
        } else if (key == "convert.elevation_sample_step") {
            config.conversion.elevation_sample_step = config_double(key, value);
        } else if (key == "convert.default_lane_width") {
            config.conversion.default_lane_width = config_double(key, value);
        } else if (key == "convert.bridge_clearance_min") {
            config.conversion.bridge_clearance_min = config_double(key, value);
        } else if (key == "mesh.ds") {
            config.tessellation.ds = config_double(key, value);
        } else if (key == "mesh.terrain_skirt") {
            config.tessellation.terrain_skirt = config_double(key, value);
        } else if (key == "ground.cell_size") {
            config.ground_cell_size = config_double(key, value);
        } else if (key == "ground.percentile") {
            config.ground_percentile = config_double(key, value);
        } else if (key == "osm.deny_classes") {
            config.road_graph.deny_classes.clear();
            for (const std::string_view part : split(value, ',')) {
                const std::string_view cls = trim(part);
                if (!cls.empty()) {
                    config.road_graph.deny_classes.emplace_back(cls);
                }
            }
        } else if (key.starts_with("class.")) {
            const std::size_t name_end = key.rfind('.');
            if (name_end == 5 || name_end == std::string::npos) {
                throw Error(ErrorKind::parse, "malformed class rule key '" + key + "'");
            }
            const std::string name = key.substr(6, name_end - 6);
            const std::string field = key.substr(name_end + 1);
            auto [it, inserted] = config.conversion.class_rules.try_emplace(
                name, HighwayClassRule{1, 1, config.conversion.default_lane_width});
            if (field == "lanes_left") {
                it->second.lanes_left = static_cast<int>(config_int(key, value));
            } else if (field == "lanes_right") {
                it->second.lanes_right = static_cast<int>(config_int(key, value));
            } else if (field == "width") {
                it->second.width = config_double(key, value);
            } else {
                throw Error(ErrorKind::parse, "unknown class rule field '" + field + "'");
            }
        } else {
            throw Error(ErrorKind::parse, "unknown config key '" + key + "'");
        }
    }
}

} // namespace twinmap
