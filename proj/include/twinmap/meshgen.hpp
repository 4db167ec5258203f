#pragma once

// Tessellation of OpenDRIVE roads and terrain DEMs into semantically
// labeled triangle meshes, plus deterministic Wavefront OBJ/MTL export.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/odr.hpp"
#include "twinmap/parallel.hpp"
#include "twinmap/terrain.hpp"
#include "twinmap/text.hpp"

namespace twinmap {

enum class Material { road, sidewalk, shoulder, terrain };

inline const char* material_name(Material m)
{
    switch (m) {
    case Material::road: return "road";
    case Material::sidewalk: return "sidewalk";
    case Material::shoulder: return "shoulder";
    case Material::terrain: return "terrain";
    }
    return "road";
}

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles; // CCW viewed from +z
    std::vector<Material> material_of_triangle;
};

struct TessellationParams {
    double ds = 1.0;            // longitudinal slice step, meters
    double terrain_skirt = 50.0; // margin around the road bounding box
};

struct Rect {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

namespace detail {

// Slice abscissae: 0, ds, 2*ds, ... plus the road end if not already hit.
inline std::vector<double> slice_abscissae(double length, double ds)
{
    std::vector<double> s_values;
    for (double s = 0.0; s < length - 1e-9; s += ds) {
        s_values.push_back(s);
    }
    s_values.push_back(length);
    return s_values;
}

inline Material lane_material(odr::LaneType type)
{
    switch (type) {
    case odr::LaneType::driving: return Material::road;
    case odr::LaneType::sidewalk: return Material::sidewalk;
    case odr::LaneType::shoulder: return Material::shoulder;
    case odr::LaneType::none: return Material::shoulder;
    }
    return Material::road;
}

} // namespace detail

// Sweep the lane cross-section along the reference line: one vertex per lane
// boundary per slice, two triangles per boundary pair between consecutive
// slices, material taken from the lane between the boundaries.
inline Mesh tessellate_road(const odr::OdrRoad& road, const TessellationParams& params)
{
    if (params.ds <= 0.0) {
        throw Error(ErrorKind::precondition, "tessellation step must be positive");
    }
    const std::vector<odr::Issue> issues = odr::validate_road(road);
    if (odr::has_errors(issues)) {
        std::string detail;
        for (const odr::Issue& issue : issues) {
            if (issue.severity == odr::IssueSeverity::error) {
                if (!detail.empty()) {
                    detail += "; ";
                }
                detail += issue.message;
            }
        }
        throw Error(ErrorKind::validation, "road " + road.id + " fails validation: " + detail);
    }
    if (road.lane_sections.empty()) {
        throw Error(ErrorKind::validation, "road " + road.id + " has no lane section");
    }

    const std::vector<double> s_values = detail::slice_abscissae(road.length, params.ds);

    // Boundary ids from outermost left to outermost right, fixed across the
    // road; mid-road lane count changes cannot be stitched into one strip.
    const auto boundary_ids = [](const odr::LaneSection& section) {
        int max_id = 0, min_id = 0;
        for (const odr::Lane& lane : section.lanes) {
            max_id = std::max(max_id, lane.id);
            min_id = std::min(min_id, lane.id);
        }
        std::vector<int> ids;
        for (int id = max_id; id >= min_id; --id) {
            ids.push_back(id);
        }
        return ids;
    };
    const std::vector<int> boundaries = boundary_ids(road.lane_sections.front());
    for (const odr::LaneSection& section : road.lane_sections) {
        if (boundary_ids(section) != boundaries) {
            throw Error(ErrorKind::validation,
                        "road " + road.id + " changes lane layout mid-road");
        }
    }

    Mesh mesh;
    mesh.vertices.reserve(s_values.size() * boundaries.size());
    for (const double s : s_values) {
        const odr::Pose pose = odr::eval_plan_view(road, s);
        const double z = odr::eval_elevation(road, s);
        const odr::LaneSection& section =
            odr::detail::governing_record(road.lane_sections, s);
        const Vec2 left_normal{-std::sin(pose.hdg), std::cos(pose.hdg)};
        for (const int id : boundaries) {
            const double t = odr::lane_boundary_t(section, id, s - section.s);
            mesh.vertices.push_back(
                {pose.x + t * left_normal.x, pose.y + t * left_normal.y, z});
        }
    }

    const std::uint32_t columns = static_cast<std::uint32_t>(boundaries.size());
    for (std::uint32_t slice = 0; slice + 1 < s_values.size(); ++slice) {
        const odr::LaneSection& section =
            odr::detail::governing_record(road.lane_sections, s_values[slice]);
        for (std::uint32_t b = 0; b + 1 < columns; ++b) {
            const std::uint32_t a = slice * columns + b;       // (slice, left boundary)
            const std::uint32_t bb = a + 1;                    // (slice, right boundary)
            const std::uint32_t c = a + columns + 1;           // (next slice, right boundary)
            const std::uint32_t d = a + columns;               // (next slice, left boundary)
            // Lane between boundaries[b] and boundaries[b+1]; its id is
            // boundaries[b] on the left side, boundaries[b+1] on the right.
            const int lane_id = boundaries[b] > 0 ? boundaries[b] : boundaries[b + 1];
            const odr::Lane* lane = section.find(lane_id);
            const Material material =
                lane ? detail::lane_material(lane->type) : Material::road;
            mesh.triangles.push_back({a, bb, c});
            mesh.triangles.push_back({a, c, d});
            mesh.material_of_triangle.push_back(material);
            mesh.material_of_triangle.push_back(material);
        }
    }
    return mesh;
}

// Regular grid over the DEM cell centers clipped to `bounds`, two terrain
// triangles per cell.
inline Mesh tessellate_terrain(const Dem& dem, const Rect& bounds,
                               const TessellationParams& params)
{
    (void)params;
    if (dem.ncols < 1 || dem.nrows < 1) {
        throw Error(ErrorKind::precondition, "DEM is empty");
    }

    // Column/row ranges whose centers fall inside the bounds.
    const int col_first = std::max(
        0, static_cast<int>(std::ceil((bounds.min_x - dem.xll) / dem.cell_size - 0.5 - 1e-9)));
    const int col_last = std::min(
        dem.ncols - 1,
        static_cast<int>(std::floor((bounds.max_x - dem.xll) / dem.cell_size - 0.5 + 1e-9)));
    const int row_bottom = std::max(
        0, static_cast<int>(std::ceil((bounds.min_y - dem.yll) / dem.cell_size - 0.5 - 1e-9)));
    const int row_top = std::min(
        dem.nrows - 1,
        static_cast<int>(std::floor((bounds.max_y - dem.yll) / dem.cell_size - 0.5 + 1e-9)));

    if (col_first > col_last || row_bottom > row_top) {
        throw Error(ErrorKind::empty_mesh, "terrain bounds do not intersect DEM coverage");
    }

    // Convert bottom-up ranges to the DEM's top-down row indexing.
    const int r_first = dem.nrows - 1 - row_top;
    const int r_last = dem.nrows - 1 - row_bottom;
    const std::uint32_t nx = static_cast<std::uint32_t>(col_last - col_first + 1);
    const std::uint32_t ny = static_cast<std::uint32_t>(r_last - r_first + 1);

    Mesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nx) * ny);
    for (std::uint32_t rr = 0; rr < ny; ++rr) {
        const int row = r_first + static_cast<int>(rr);
        for (std::uint32_t cc = 0; cc < nx; ++cc) {
            const int col = col_first + static_cast<int>(cc);
            mesh.vertices.push_back(
                {dem.cell_center_x(col), dem.cell_center_y(row), dem.value_at(row, col)});
        }
    }
    for (std::uint32_t rr = 0; rr + 1 < ny; ++rr) {
        for (std::uint32_t cc = 0; cc + 1 < nx; ++cc) {
            const std::uint32_t a = rr * nx + cc;      // northwest
            const std::uint32_t b = a + 1;             // northeast
            const std::uint32_t c = a + nx + 1;        // southeast
            const std::uint32_t d = a + nx;            // southwest
            mesh.triangles.push_back({a, d, c});
            mesh.triangles.push_back({a, c, b});
            mesh.material_of_triangle.push_back(Material::terrain);
            mesh.material_of_triangle.push_back(Material::terrain);
        }
    }
    return mesh;
}

struct NamedMesh {
    std::string name;
    Mesh mesh;
};

struct GenerateResult {
    std::vector<NamedMesh> meshes;     // roads ascending by id, terrain last
    std::vector<std::string> failures; // per-road diagnostics
};

struct RoadTiming {
    std::string road_id;
    double seconds = 0.0;
};

// Tessellate every road (in parallel) plus one terrain mesh over the road
// bounding box expanded by the skirt. Output is independent of the worker
// count; per-road failures are collected while the rest proceeds.
inline GenerateResult generate_all(const odr::OdrMap& map, const Dem& dem,
                                   const TessellationParams& params, unsigned workers,
                                   std::vector<RoadTiming>* timings = nullptr)
{
    std::vector<const odr::OdrRoad*> roads;
    roads.reserve(map.roads.size());
    for (const odr::OdrRoad& road : map.roads) {
        roads.push_back(&road);
    }
    std::sort(roads.begin(), roads.end(),
              [](const odr::OdrRoad* a, const odr::OdrRoad* b) { return a->id < b->id; });

    std::vector<Mesh> road_meshes(roads.size());
    std::vector<std::string> road_errors(roads.size());
    if (timings) {
        timings->assign(roads.size(), {});
    }
    parallel_for(roads.size(), workers, [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        try {
            road_meshes[i] = tessellate_road(*roads[i], params);
        } catch (const Error& e) {
            road_errors[i] = std::string("road ") + roads[i]->id + ": " + e.message();
        }
        if (timings) {
            (*timings)[i] = {roads[i]->id,
                             std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                                           start)
                                 .count()};
        }
    });

    GenerateResult result;
    bool have_bounds = false;
    Rect bounds{};
    for (std::size_t i = 0; i < roads.size(); ++i) {
        if (!road_errors[i].empty()) {
            result.failures.push_back(road_errors[i]);
            continue;
        }
        for (const Vec3& v : road_meshes[i].vertices) {
            if (!have_bounds) {
                bounds = {v.x, v.y, v.x, v.y};
                have_bounds = true;
            } else {
                bounds.min_x = std::min(bounds.min_x, v.x);
                bounds.min_y = std::min(bounds.min_y, v.y);
                bounds.max_x = std::max(bounds.max_x, v.x);
                bounds.max_y = std::max(bounds.max_y, v.y);
            }
        }
        result.meshes.push_back({"road_" + roads[i]->id, std::move(road_meshes[i])});
    }

    if (!have_bounds) {
        bounds = {dem.min_center_x(), dem.min_center_y(), dem.max_center_x(),
                  dem.max_center_y()};
    } else {
        bounds.min_x -= params.terrain_skirt;
        bounds.min_y -= params.terrain_skirt;
        bounds.max_x += params.terrain_skirt;
        bounds.max_y += params.terrain_skirt;
    }
    try {
        result.meshes.push_back({"terrain", tessellate_terrain(dem, bounds, params)});
    } catch (const Error& e) {
        result.failures.push_back("terrain: " + e.message());
    }
    return result;
}

// ---------------------------------------------------------------------------
// OBJ / MTL export

namespace detail {

inline constexpr std::array<Material, 4> kAllMaterials{Material::road, Material::sidewalk,
                                                       Material::shoulder, Material::terrain};

inline constexpr const char* material_color(Material m)
{
    switch (m) {
    case Material::road: return "0.2 0.2 0.2";
    case Material::sidewalk: return "0.6 0.6 0.6";
    case Material::shoulder: return "0.4 0.4 0.35";
    case Material::terrain: return "0.3 0.5 0.25";
    }
    return "0.5 0.5 0.5";
}

} // namespace detail

inline std::string obj_text(const NamedMesh& named)
{
    std::string out = "o " + named.name + "\n";
    char buf[128];
    for (const Vec3& v : named.mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.6f %.6f %.6f\n", v.x, v.y, v.z);
        out += buf;
    }
    // Triangles regrouped by material, one usemtl per present material;
    // relative triangle order within a group is preserved.
    for (const Material material : detail::kAllMaterials) {
        bool started = false;
        for (std::size_t i = 0; i < named.mesh.triangles.size(); ++i) {
            if (named.mesh.material_of_triangle[i] != material) {
                continue;
            }
            if (!started) {
                out += std::string("usemtl ") + material_name(material) + "\n";
                started = true;
            }
            const auto& t = named.mesh.triangles[i];
            std::snprintf(buf, sizeof(buf), "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
            out += buf;
        }
    }
    return out;
}

inline std::string mtl_text()
{
    std::string out;
    for (const Material material : detail::kAllMaterials) {
        out += std::string("newmtl ") + material_name(material) + "\n";
        out += std::string("Kd ") + detail::material_color(material) + "\n";
    }
    return out;
}

// One .obj per mesh plus a shared twinmap.mtl with placeholder colors.
inline void export_obj(std::span<const NamedMesh> meshes,
                       const std::filesystem::path& directory)
{
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);

    const auto write_file = [](const std::filesystem::path& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) {
            throw Error(ErrorKind::io, "cannot write " + path.string());
        }
        out << content;
        if (!out) {
            throw Error(ErrorKind::io, "short write to " + path.string());
        }
    };

    for (const NamedMesh& named : meshes) {
        write_file(directory / (named.name + ".obj"), obj_text(named));
    }
    write_file(directory / "twinmap.mtl", mtl_text());
}

} // namespace twinmap
