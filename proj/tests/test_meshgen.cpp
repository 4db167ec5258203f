#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>

#include "support/fixtures.hpp"
#include "twinmap/meshgen.hpp"

using namespace twinmap;
using testsupport::TempDir;

namespace {

odr::OdrRoad lane_road(double length, int left, int right, double width = 3.5,
                       double elevation = 0.0)
{
    odr::OdrRoad road;
    road.id = "m";
    road.length = length;
    road.plan_view.push_back(odr::make_line(0, 0, 0, 0, length));
    road.elevation_profile.push_back({0, elevation, 0, 0, 0});
    odr::LaneSection section;
    for (int i = left; i >= 1; --i) {
        section.lanes.push_back({i, odr::LaneType::driving, width, 0, 0, 0});
    }
    section.lanes.push_back({0, odr::LaneType::none, 0, 0, 0, 0});
    for (int i = 1; i <= right; ++i) {
        section.lanes.push_back({-i, odr::LaneType::driving, width, 0, 0, 0});
    }
    road.lane_sections.push_back(std::move(section));
    return road;
}

// Undirected edge use counts; a manifold strip has only counts 1 and 2.
std::map<std::pair<std::uint32_t, std::uint32_t>, int> edge_counts(const Mesh& mesh)
{
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> counts;
    for (const auto& tri : mesh.triangles) {
        for (int k = 0; k < 3; ++k) {
            const std::uint32_t a = tri[k];
            const std::uint32_t b = tri[(k + 1) % 3];
            ++counts[{std::min(a, b), std::max(a, b)}];
        }
    }
    return counts;
}

double triangle_normal_z(const Mesh& mesh, std::size_t i)
{
    const Vec3 a = mesh.vertices[mesh.triangles[i][0]];
    const Vec3 b = mesh.vertices[mesh.triangles[i][1]];
    const Vec3 c = mesh.vertices[mesh.triangles[i][2]];
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

} // namespace

TEST_CASE("tessellate_road matches the counting formulas")
{
    // length 10, ds 1, boundaries {-3.5, 0, +3.5}: 11 slices, 33 vertices,
    // 40 triangles.
    TessellationParams params;
    const Mesh mesh = tessellate_road(lane_road(10.0, 1, 1), params);
    CHECK(mesh.vertices.size() == 33);
    CHECK(mesh.triangles.size() == 40);

    // length 10.5 adds a partial final slice.
    const Mesh partial = tessellate_road(lane_road(10.5, 1, 1), params);
    CHECK(partial.vertices.size() == 36);
    CHECK(partial.triangles.size() == 44);
}

TEST_CASE("tessellate_road counting formulas hold over random shapes")
{
    std::mt19937 engine(11);
    std::uniform_real_distribution<double> length(0.5, 60.0);
    std::uniform_real_distribution<double> step(0.3, 4.0);
    std::uniform_int_distribution<int> lanes(0, 3);
    for (int round = 0; round < 50; ++round) {
        const double road_len = length(engine);
        TessellationParams params;
        params.ds = step(engine);
        const int left = lanes(engine);
        const int right = lanes(engine);
        const Mesh mesh = tessellate_road(lane_road(road_len, left, right), params);

        std::size_t slices = 1; // the final slice
        for (double s = 0.0; s < road_len - 1e-9; s += params.ds) {
            ++slices;
        }
        const std::size_t boundaries = static_cast<std::size_t>(left + right + 1);
        REQUIRE(mesh.vertices.size() == slices * boundaries);
        REQUIRE(mesh.triangles.size() == (slices - 1) * (boundaries - 1) * 2);
    }
}

TEST_CASE("road meshes are manifold strips")
{
    const Mesh mesh = tessellate_road(lane_road(20.0, 2, 1), TessellationParams{});
    std::size_t interior = 0, boundary = 0;
    for (const auto& [edge, count] : edge_counts(mesh)) {
        REQUIRE((count == 1 || count == 2));
        (count == 2 ? interior : boundary) += 1;
    }
    CHECK(interior > 0);
    CHECK(boundary > 0);
}

TEST_CASE("arc road vertices stay on their circles")
{
    // Quarter circle, curvature 0.1: center (0, 10), radius 10.
    odr::OdrRoad road;
    road.id = "arc";
    road.length = M_PI / 0.2;
    road.plan_view.push_back(odr::make_arc(0, 0, 0, 0, road.length, 0.1));
    road.elevation_profile.push_back({0, 0, 0, 0, 0});
    odr::LaneSection section;
    section.lanes.push_back({1, odr::LaneType::driving, 3.0, 0, 0, 0});
    section.lanes.push_back({0, odr::LaneType::none, 0, 0, 0, 0});
    section.lanes.push_back({-1, odr::LaneType::driving, 3.0, 0, 0, 0});
    road.lane_sections.push_back(section);

    const Mesh mesh = tessellate_road(road, TessellationParams{});
    const Vec2 center{0.0, 10.0};
    const std::size_t columns = 3;
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const double expected = i % columns == 0 ? 7.0 : (i % columns == 1 ? 10.0 : 13.0);
        const double r = std::hypot(mesh.vertices[i].x - center.x, mesh.vertices[i].y - center.y);
        REQUIRE_THAT(r, Catch::Matchers::WithinAbs(expected, 1e-6));
    }
}

TEST_CASE("road mesh vertex heights follow the elevation profile")
{
    odr::OdrRoad road = lane_road(30.0, 1, 1);
    road.elevation_profile = {{0, 2.0, 0.05, -0.001, 0.00001}};
    TessellationParams params;
    params.ds = 1.7;
    const Mesh mesh = tessellate_road(road, params);

    std::vector<double> slice_s;
    for (double s = 0.0; s < road.length - 1e-9; s += params.ds) {
        slice_s.push_back(s);
    }
    slice_s.push_back(road.length);
    REQUIRE(mesh.vertices.size() == slice_s.size() * 3);
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const double expected = odr::eval_elevation(road, slice_s[i / 3]);
        REQUIRE_THAT(mesh.vertices[i].z, Catch::Matchers::WithinAbs(expected, 1e-9));
    }
}

TEST_CASE("road triangles face up")
{
    const Mesh mesh = tessellate_road(lane_road(15.0, 2, 2), TessellationParams{});
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        REQUIRE(triangle_normal_z(mesh, i) > 1e-10);
    }
}

TEST_CASE("road materials follow lane types")
{
    odr::OdrRoad road = lane_road(10.0, 0, 0);
    road.lane_sections.clear();
    odr::LaneSection section;
    section.lanes.push_back({2, odr::LaneType::sidewalk, 1.8, 0, 0, 0});
    section.lanes.push_back({1, odr::LaneType::driving, 3.5, 0, 0, 0});
    section.lanes.push_back({0, odr::LaneType::none, 0, 0, 0, 0});
    section.lanes.push_back({-1, odr::LaneType::shoulder, 1.0, 0, 0, 0});
    road.lane_sections.push_back(section);

    const Mesh mesh = tessellate_road(road, TessellationParams{});
    // Boundary pairs per slice gap: sidewalk, driving, shoulder.
    REQUIRE(mesh.material_of_triangle.size() == mesh.triangles.size());
    CHECK(mesh.material_of_triangle[0] == Material::sidewalk);
    CHECK(mesh.material_of_triangle[2] == Material::road);
    CHECK(mesh.material_of_triangle[4] == Material::shoulder);
}

TEST_CASE("tessellate_road refuses invalid roads with diagnostics")
{
    odr::OdrRoad road = lane_road(10.0, 1, 1);
    road.length = 15.0; // length mismatch
    try {
        tessellate_road(road, TessellationParams{});
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(std::string(e.what()).find("length") != std::string::npos);
    }
}

namespace {

Dem ramp_dem(int ncols = 10, int nrows = 8)
{
    Dem dem;
    dem.ncols = ncols;
    dem.nrows = nrows;
    dem.xll = 0;
    dem.yll = 0;
    dem.cell_size = 1.0;
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            dem.values.push_back(0.1 * c + 0.05 * r);
        }
    }
    return dem;
}

} // namespace

TEST_CASE("tessellate_terrain triangulates the clipped grid")
{
    const Dem dem = ramp_dem();
    const Rect bounds{0.0, 0.0, 3.4, 3.4}; // centers 0.5, 1.5, 2.5 in each axis
    const Mesh mesh = tessellate_terrain(dem, bounds, TessellationParams{});
    CHECK(mesh.vertices.size() == 9);
    CHECK(mesh.triangles.size() == 8);
    for (const Material m : mesh.material_of_triangle) {
        CHECK(m == Material::terrain);
    }
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        REQUIRE(triangle_normal_z(mesh, i) > 1e-10);
    }
}

TEST_CASE("tessellate_terrain on a flat dem keeps z constant")
{
    Dem dem = ramp_dem();
    for (double& v : dem.values) {
        v = 6.25;
    }
    const Mesh mesh =
        tessellate_terrain(dem, Rect{-100, -100, 100, 100}, TessellationParams{});
    CHECK(mesh.vertices.size() == 80);
    for (const Vec3& v : mesh.vertices) {
        CHECK(v.z == 6.25);
    }
}

TEST_CASE("tessellate_terrain handles a minimal 2x2 patch")
{
    Dem dem = ramp_dem(2, 2);
    dem.values = {0, 0, 0, 5.0};
    const Mesh mesh =
        tessellate_terrain(dem, Rect{-10, -10, 10, 10}, TessellationParams{});
    CHECK(mesh.vertices.size() == 4);
    CHECK(mesh.triangles.size() == 2);
    for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
        REQUIRE(std::abs(triangle_normal_z(mesh, i)) > 1e-10);
    }
}

TEST_CASE("tessellate_terrain rejects an empty intersection")
{
    try {
        tessellate_terrain(ramp_dem(), Rect{100, 100, 200, 200}, TessellationParams{});
        FAIL("expected empty-mesh error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::empty_mesh);
    }
}

namespace {

odr::OdrMap two_road_map()
{
    odr::OdrMap map;
    odr::OdrRoad a = lane_road(20.0, 1, 1);
    a.id = "A";
    odr::OdrRoad b = lane_road(12.0, 1, 1);
    b.id = "B";
    b.plan_view[0] = odr::make_line(0, 0, 30, 0, 12.0);
    map.roads.push_back(b); // intentionally unsorted
    map.roads.push_back(a);
    return map;
}

} // namespace

TEST_CASE("generate_all orders roads by id with terrain last")
{
    const GenerateResult result =
        generate_all(two_road_map(), ramp_dem(40, 40), TessellationParams{}, 2);
    REQUIRE(result.failures.empty());
    REQUIRE(result.meshes.size() == 3);
    CHECK(result.meshes[0].name == "road_A");
    CHECK(result.meshes[1].name == "road_B");
    CHECK(result.meshes[2].name == "terrain");
}

TEST_CASE("generate_all collects failures and keeps the rest")
{
    odr::OdrMap map = two_road_map();
    map.roads[0].length = 99.0; // breaks road B
    const GenerateResult result =
        generate_all(map, ramp_dem(40, 40), TessellationParams{}, 1);
    REQUIRE(result.failures.size() == 1);
    CHECK(result.failures[0].find("road B") != std::string::npos);
    REQUIRE(result.meshes.size() == 2);
    CHECK(result.meshes[0].name == "road_A");
    CHECK(result.meshes[1].name == "terrain");
}

TEST_CASE("generate_all output does not depend on the worker count")
{
    const odr::OdrMap map = two_road_map();
    const Dem dem = ramp_dem(40, 40);
    const GenerateResult one = generate_all(map, dem, TessellationParams{}, 1);
    const GenerateResult eight = generate_all(map, dem, TessellationParams{}, 8);
    REQUIRE(one.meshes.size() == eight.meshes.size());
    for (std::size_t i = 0; i < one.meshes.size(); ++i) {
        REQUIRE(obj_text(one.meshes[i]) == obj_text(eight.meshes[i]));
    }
}

TEST_CASE("obj export writes the exact minimal layout")
{
    NamedMesh named;
    named.name = "tri";
    named.mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
    named.mesh.triangles = {{0, 1, 2}};
    named.mesh.material_of_triangle = {Material::road};
    CHECK(obj_text(named) == "o tri\n"
                             "v 0.000000 0.000000 0.000000\n"
                             "v 1.000000 0.000000 0.000000\n"
                             "v 0.000000 1.000000 0.000000\n"
                             "usemtl road\n"
                             "f 1 2 3\n");
}

TEST_CASE("obj export regroups interleaved materials")
{
    NamedMesh named;
    named.name = "mixed";
    named.mesh.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    named.mesh.triangles = {{0, 1, 2}, {1, 3, 2}, {0, 2, 3}, {0, 3, 1}};
    named.mesh.material_of_triangle = {Material::road, Material::sidewalk, Material::road,
                                       Material::sidewalk};
    const std::string text = obj_text(named);
    CHECK(text.find("usemtl road\nf 1 2 3\nf 1 3 4\nusemtl sidewalk\nf 2 4 3\nf 1 4 2\n") !=
          std::string::npos);
    // Exactly one usemtl per material present.
    std::size_t count = 0;
    for (std::size_t pos = text.find("usemtl"); pos != std::string::npos;
         pos = text.find("usemtl", pos + 1)) {
        ++count;
    }
    CHECK(count == 2);
}

TEST_CASE("export_obj writes files and the shared mtl")
{
    TempDir dir;
    const GenerateResult result =
        generate_all(two_road_map(), ramp_dem(40, 40), TessellationParams{}, 1);
    export_obj(result.meshes, dir.path());

    CHECK(std::filesystem::exists(dir.path() / "road_A.obj"));
    CHECK(std::filesystem::exists(dir.path() / "road_B.obj"));
    CHECK(std::filesystem::exists(dir.path() / "terrain.obj"));
    const std::string mtl = testsupport::read_file(dir.path() / "twinmap.mtl");
    CHECK(mtl == "newmtl road\nKd 0.2 0.2 0.2\n"
                 "newmtl sidewalk\nKd 0.6 0.6 0.6\n"
                 "newmtl shoulder\nKd 0.4 0.4 0.35\n"
                 "newmtl terrain\nKd 0.3 0.5 0.25\n");

    // Re-export is byte-identical.
    const std::string first = testsupport::read_file(dir.path() / "road_A.obj");
    export_obj(result.meshes, dir.path());
    CHECK(testsupport::read_file(dir.path() / "road_A.obj") == first);

    // Parse-back: counts match the mesh.
    const testsupport::ObjCounts counts = testsupport::parse_obj(first);
    CHECK(counts.well_formed);
    CHECK(counts.vertices == result.meshes[0].mesh.vertices.size());
    CHECK(counts.faces == result.meshes[0].mesh.triangles.size());
}
