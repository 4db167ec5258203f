#pragma once

// Shared test support: temp dirs, CLI invocation, synthetic OSM/DEM/cloud
// fixtures and a tiny OBJ parse-back reader.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <utility>
#include <vector>

#include "twinmap/twinmap.hpp"

namespace testsupport {

namespace fs = std::filesystem;
using namespace twinmap;

class TempDir {
public:
    TempDir()
    {
        std::string tmpl = (fs::temp_directory_path() / "twinmap_test_XXXXXX").string();
        if (!mkdtemp(tmpl.data())) {
            throw std::runtime_error("mkdtemp failed");
        }
        path_ = tmpl;
    }

    ~TempDir()
    {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct CliResult {
    int exit_code = -1;
    std::string output;
};

// Runs the twinmap binary through /bin/sh; `env_prefix` may carry variable
// assignments such as "TWINMAP_THREADS=4 ".
inline CliResult run_cli(const std::string& args, const std::string& env_prefix = {})
{
    static int counter = 0;
    const fs::path capture =
        fs::temp_directory_path() /
        ("twinmap_cli_out_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
    const std::string command =
        env_prefix + std::string(TWINMAP_CLI_PATH) + " " + args + " > '" + capture.string() +
        "' 2>&1";
    const int raw = std::system(command.c_str());
    CliResult result;
    result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    result.output = read_file(capture);
    fs::remove(capture);
    return result;
}

// ---------------------------------------------------------------------------
// OSM fixture builder: nodes are deduplicated by millimeter-rounded local
// coordinates so ways crossing at the same point share a node id.

class OsmBuilder {
public:
    explicit OsmBuilder(const LocalFrame& frame) : frame_(frame) {}

    long long node_at(Vec2 p)
    {
        const std::pair<long long, long long> key{std::llround(p.x * 1000.0),
                                                  std::llround(p.y * 1000.0)};
        const auto it = nodes_.find(key);
        if (it != nodes_.end()) {
            return it->second;
        }
        const long long id = next_id_++;
        nodes_[key] = id;
        double lat = 0.0, lon = 0.0;
        unproject(p, frame_, lat, lon);
        node_xml_ += "  <node id=\"" + std::to_string(id) + "\" lat=\"" + format_g17(lat) +
                     "\" lon=\"" + format_g17(lon) + "\"/>\n";
        return id;
    }

    long long way(const std::vector<Vec2>& points,
                  const std::vector<std::pair<std::string, std::string>>& tags)
    {
        const long long id = next_id_++;
        way_xml_ += "  <way id=\"" + std::to_string(id) + "\">\n";
        for (const Vec2 p : points) {
            way_xml_ += "    <nd ref=\"" + std::to_string(node_at(p)) + "\"/>\n";
        }
        for (const auto& [k, v] : tags) {
            way_xml_ += "    <tag k=\"" + k + "\" v=\"" + v + "\"/>\n";
        }
        way_xml_ += "  </way>\n";
        ++way_count_;
        return id;
    }

    std::string xml() const
    {
        return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\">\n" +
               node_xml_ + way_xml_ + "</osm>\n";
    }

    int way_count() const { return way_count_; }

private:
    LocalFrame frame_;
    long long next_id_ = 1;
    int way_count_ = 0;
    std::map<std::pair<long long, long long>, long long> nodes_;
    std::string node_xml_;
    std::string way_xml_;
};

inline std::vector<Vec2> straight(Vec2 from, Vec2 to, double step)
{
    std::vector<Vec2> points;
    const double len = distance(from, to);
    const int n = std::max(1, static_cast<int>(std::llround(len / step)));
    for (int i = 0; i <= n; ++i) {
        const double f = static_cast<double>(i) / n;
        points.push_back(from + (to - from) * f);
    }
    return points;
}

// ---------------------------------------------------------------------------
// Desk-scale end-to-end fixture: ~20 OSM ways (grid + diagonal + one bridge
// over a valley road), a 100x100 DEM and a ~10k point corridor cloud carrying
// a known (2 m, 1 m, 1 deg) misalignment.

struct DeskFixture {
    std::string osm_xml;
    std::string dem_text;
    std::string cloud_text;
    Dem dem;
    LocalFrame frame{36.0, -86.7};
    RigidTransform2D misalignment; // global (theta, tx, ty) form
    int way_count = 0;
    std::size_t cloud_points = 0;
};

inline double desk_ground_height(double x, double y)
{
    const double base = 8.0 + 2.0 * std::sin(x / 150.0) * std::cos(y / 170.0);
    const double dx = x - 500.0;
    const double dy = y - 200.0;
    const double trench = 6.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * 25.0 * 25.0));
    return base - trench;
}

inline DeskFixture make_desk_fixture()
{
    DeskFixture fixture;

    // Misalignment: rotate 1 degree about the network centroid, then
    // translate by (2, 1).
    const double theta = 1.0 * kDegToRad;
    const Vec2 centroid{300.0, 200.0};
    const Vec2 rc = rotate(centroid, theta);
    fixture.misalignment = {theta, centroid.x - rc.x + 2.0, centroid.y - rc.y + 1.0};

    // DEM: 100x100 cells of 10 m centred on the network.
    Dem& dem = fixture.dem;
    dem.ncols = 100;
    dem.nrows = 100;
    dem.cell_size = 10.0;
    dem.xll = -200.0;
    dem.yll = -300.0;
    dem.values.resize(100 * 100);
    for (int r = 0; r < dem.nrows; ++r) {
        for (int c = 0; c < dem.ncols; ++c) {
            dem.value_at(r, c) = desk_ground_height(dem.cell_center_x(c), dem.cell_center_y(r));
        }
    }
    fixture.dem_text = write_dem(dem);

    OsmBuilder osm(fixture.frame);
    struct WaySpec {
        std::vector<Vec2> points;
        std::vector<std::pair<std::string, std::string>> tags;
        bool is_bridge = false;
    };
    std::vector<WaySpec> ways;

    const auto grid_line = [&](Vec2 from, Vec2 to, std::vector<std::pair<std::string, std::string>> tags) {
        ways.push_back({straight(from, to, 100.0), std::move(tags), false});
    };

    grid_line({0, 0}, {600, 0}, {{"highway", "primary"}, {"lanes", "2"}});
    // The crossed road: no node at x = 500 so the bridge truly flies over.
    ways.push_back({{{0, 200}, {100, 200}, {200, 200}, {300, 200}, {400, 200}, {600, 200}},
                    {{"highway", "residential"}},
                    false});
    grid_line({0, 400}, {600, 400}, {{"highway", "secondary"}, {"sidewalk", "both"}});
    grid_line({0, 0}, {0, 400}, {{"highway", "residential"}});
    grid_line({200, 0}, {200, 400}, {{"highway", "residential"}});
    grid_line({400, 0}, {400, 400}, {{"highway", "unclassified"}});
    grid_line({600, 0}, {600, 400}, {{"highway", "residential"}});
    // Bridge corridor at x = 500: approach, deck over the valley, approach.
    ways.push_back({{{500, 0}, {500, 100}, {500, 120}}, {{"highway", "service"}}, false});
    ways.push_back({{{500, 120}, {500, 280}},
                    {{"highway", "primary"}, {"bridge", "yes"}, {"layer", "1"}},
                    true});
    ways.push_back({{{500, 280}, {500, 300}, {500, 400}}, {{"highway", "service"}}, false});
    ways.push_back({{{0, 0}, {100, 100}, {200, 200}}, {{"highway", "unclassified"}}, false});
    grid_line({0, 100}, {200, 100}, {{"highway", "residential"}});
    ways.push_back({straight({400, 300}, {600, 300}, 100.0),
                    {{"highway", "service"}, {"oneway", "yes"}},
                    false});
    grid_line({300, 0}, {300, 200}, {{"highway", "residential"}, {"lanes", "3"}});
    grid_line({100, 200}, {100, 400}, {{"highway", "residential"}, {"sidewalk", "left"}});
    grid_line({400, 100}, {600, 100}, {{"highway", "residential"}});
    grid_line({300, 200}, {300, 400}, {{"highway", "unclassified"}});
    grid_line({600, 100}, {700, 100}, {{"highway", "service"}});
    ways.push_back({{{50, 50}, {150, 150}}, {{"highway", "footway"}}, false});
    ways.push_back({{{700, 500}, {750, 500}, {750, 550}, {700, 550}, {700, 500}},
                    {{"building", "yes"}},
                    false});

    for (const WaySpec& spec : ways) {
        osm.way(spec.points, spec.tags);
    }
    fixture.osm_xml = osm.xml();
    fixture.way_count = osm.way_count();

    // Corridor cloud: a dense centerline plus sparse lateral lines per road
    // way, moved by the misalignment; ground z follows the DEM at the moved
    // position, bridge decks keep their interpolated deck height.
    std::string cloud;
    std::size_t count = 0;
    const auto emit = [&](Vec2 p, double z) {
        const Vec2 moved = fixture.misalignment.apply(p);
        cloud += format_g17(moved.x) + " " + format_g17(moved.y) + " " + format_g17(z) + "\n";
        ++count;
    };
    for (const WaySpec& spec : ways) {
        if (!spec.tags.empty() && spec.tags.front().first == "building") {
            continue;
        }
        const std::vector<Vec2>& pts = spec.points;
        const double total = polyline_length(pts);
        const double z0 = desk_ground_height(pts.front().x, pts.front().y);
        const double z1 = desk_ground_height(pts.back().x, pts.back().y);
        for (const double lateral : {0.0, -3.0, -1.5, 1.5, 3.0}) {
            const double step = lateral == 0.0 ? 1.0 : 3.0;
            const std::vector<Vec2> line = resample_polyline(pts, step);
            double s = 0.0;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (i > 0) {
                    s += distance(line[i - 1], line[i]);
                }
                Vec2 p = line[i];
                if (lateral != 0.0) {
                    const std::size_t j = std::min(i, line.size() - 2);
                    const Vec2 dir = line[j + 1] - line[j];
                    const double len = norm(dir);
                    if (len < 1e-9) {
                        continue;
                    }
                    p = p + perp(dir / len) * lateral;
                }
                double z;
                if (spec.is_bridge) {
                    z = z0 + (z1 - z0) * (total > 0 ? s / total : 0.0);
                } else {
                    const Vec2 moved = fixture.misalignment.apply(p);
                    z = desk_ground_height(moved.x, moved.y);
                }
                emit(p, z);
            }
        }
    }
    fixture.cloud_text = cloud;
    fixture.cloud_points = count;
    return fixture;
}

// Writes the fixture inputs into `dir` and returns the common CLI argument
// fragment pointing at them.
inline std::string stage_desk_fixture(const DeskFixture& fixture, const fs::path& dir)
{
    write_file(dir / "map.osm", fixture.osm_xml);
    write_file(dir / "ground.asc", fixture.dem_text);
    write_file(dir / "cloud.xyz", fixture.cloud_text);
    return "--osm '" + (dir / "map.osm").string() + "' --dem '" + (dir / "ground.asc").string() +
           "' --cloud '" + (dir / "cloud.xyz").string() + "'";
}

// ---------------------------------------------------------------------------
// Minimal OBJ reader for parse-back checks.

struct ObjCounts {
    std::size_t vertices = 0;
    std::size_t faces = 0;
    bool well_formed = true;
};

inline ObjCounts parse_obj(const std::string& text)
{
    ObjCounts counts;
    for (const std::string_view line : split(text, '\n')) {
        if (line.starts_with("v ")) {
            ++counts.vertices;
            if (split_whitespace(line).size() != 4) {
                counts.well_formed = false;
            }
        } else if (line.starts_with("f ")) {
            ++counts.faces;
            const auto tokens = split_whitespace(line);
            if (tokens.size() != 4) {
                counts.well_formed = false;
                continue;
            }
            for (std::size_t i = 1; i < 4; ++i) {
                const auto idx = parse_int(tokens[i]);
                if (!idx || *idx < 1 || static_cast<std::size_t>(*idx) > counts.vertices) {
                    counts.well_formed = false;
                }
            }
        }
    }
    return counts;
}

// Simple deterministic RNG helpers.
inline std::mt19937& rng(unsigned seed)
{
    static thread_local std::mt19937 engine;
    engine.seed(seed);
    return engine;
}

// ---------------------------------------------------------------------------
// Nearest-point oracle: distance from a point to the fitted plan view via
// coarse sampling plus golden-section refinement per segment.

inline double distance_to_segment_curve(const odr::GeometrySegment& seg, Vec2 p)
{
    const auto dist_at = [&](double ds) {
        const odr::Pose pose = odr::eval_segment(seg, ds);
        return std::hypot(pose.x - p.x, pose.y - p.y);
    };

    const int coarse = 32;
    double best_ds = 0.0;
    double best = dist_at(0.0);
    for (int i = 1; i <= coarse; ++i) {
        const double ds = seg.length * i / coarse;
        const double d = dist_at(ds);
        if (d < best) {
            best = d;
            best_ds = ds;
        }
    }

    const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
    double lo = std::max(0.0, best_ds - seg.length / coarse);
    double hi = std::min(seg.length, best_ds + seg.length / coarse);
    double x1 = hi - golden * (hi - lo);
    double x2 = lo + golden * (hi - lo);
    double f1 = dist_at(x1);
    double f2 = dist_at(x2);
    for (int iter = 0; iter < 80; ++iter) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = dist_at(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = dist_at(x2);
        }
    }
    return std::min(best, std::min(f1, f2));
}

inline double distance_to_plan_view(const odr::OdrRoad& road, Vec2 p)
{
    double best = std::numeric_limits<double>::infinity();
    for (const odr::GeometrySegment& seg : road.plan_view) {
        best = std::min(best, distance_to_segment_curve(seg, p));
    }
    return best;
}

// Brute-force rigid-registration oracle: scan theta on a grid and refine by
// ternary search; the translation for a given theta aligns the centroids.
inline RigidTransform2D brute_force_rigid_oracle(const std::vector<Vec2>& src,
                                                 const std::vector<Vec2>& dst)
{
    Vec2 sc{0, 0}, dc{0, 0};
    for (std::size_t i = 0; i < src.size(); ++i) {
        sc = sc + src[i];
        dc = dc + dst[i];
    }
    sc = sc / static_cast<double>(src.size());
    dc = dc / static_cast<double>(dst.size());

    const auto cost = [&](double theta) {
        double sum = 0.0;
        for (std::size_t i = 0; i < src.size(); ++i) {
            const Vec2 moved = rotate(src[i] - sc, theta) + dc;
            sum += squared_norm(moved - dst[i]);
        }
        return sum;
    };

    double best = 0.0;
    double best_cost = cost(0.0);
    for (int i = 1; i < 3600; ++i) {
        const double theta = -M_PI + 2.0 * M_PI * i / 3600.0;
        const double c = cost(theta);
        if (c < best_cost) {
            best_cost = c;
            best = theta;
        }
    }
    double lo = best - 2.0 * M_PI / 3600.0;
    double hi = best + 2.0 * M_PI / 3600.0;
    for (int iter = 0; iter < 200; ++iter) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (cost(m1) < cost(m2)) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    const double theta = 0.5 * (lo + hi);
    const Vec2 rotated = rotate(sc, theta);
    return {theta, dc.x - rotated.x, dc.y - rotated.y};
}

// Random road-like polyline: a bounded-turn random walk.
inline std::vector<Vec2> random_road_polyline(std::mt19937& engine)
{
    std::uniform_real_distribution<double> start(-200.0, 200.0);
    std::uniform_real_distribution<double> heading(-M_PI, M_PI);
    std::uniform_real_distribution<double> turn(-0.25, 0.25);
    std::uniform_real_distribution<double> step(5.0, 30.0);
    std::uniform_int_distribution<int> count(2, 40);

    std::vector<Vec2> points;
    Vec2 p{start(engine), start(engine)};
    double h = heading(engine);
    points.push_back(p);
    const int n = count(engine);
    for (int i = 0; i < n; ++i) {
        h += turn(engine);
        const double len = step(engine);
        p = p + Vec2{std::cos(h), std::sin(h)} * len;
        points.push_back(p);
    }
    return points;
}

} // namespace testsupport
