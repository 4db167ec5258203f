#pragma once

// 2D rigid registration of OSM centerlines against LiDAR ground evidence:
// polyline resampling, closed-form Kabsch/Procrustes solve and classic ICP
// with grid-hashed nearest-neighbor search.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <unordered_map>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/osm.hpp"
#include "twinmap/parallel.hpp"
#include "twinmap/terrain.hpp"

namespace twinmap {

// Maps p to R(theta) * p + (tx, ty).
struct RigidTransform2D {
    double theta = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    Vec2 apply(Vec2 p) const
    {
        const double c = std::cos(theta);
        const double s = std::sin(theta);
        return {c * p.x - s * p.y + tx, s * p.x + c * p.y + ty};
    }

    RigidTransform2D inverse() const
    {
        const Vec2 t = rotate({-tx, -ty}, -theta);
        return {-theta, t.x, t.y};
    }
};

// first, then second: p -> second(first(p)).
inline RigidTransform2D compose(const RigidTransform2D& first, const RigidTransform2D& second)
{
    const Vec2 t = rotate({first.tx, first.ty}, second.theta);
    return {wrap_angle(first.theta + second.theta), t.x + second.tx, t.y + second.ty};
}

struct IcpParams {
    int max_iterations = 50;
    double convergence_tol = 1e-4;        // meters, on delta rms
    double max_correspondence_dist = 5.0; // meters
    double resample_step = 2.0;           // meters
};

struct IcpReport {
    RigidTransform2D transform;
    std::vector<double> rms_history; // post-solve rms per iteration
    std::vector<std::size_t> correspondence_history;
    int iterations = 0;
    bool converged = false;
};

// Points at arc length 0, step, 2*step, ... plus the final vertex.
inline std::vector<Vec2> resample_polyline(std::span<const Vec2> polyline, double step)
{
    if (polyline.size() < 2) {
        throw Error(ErrorKind::precondition, "polyline needs at least 2 vertices");
    }
    if (step <= 0.0) {
        throw Error(ErrorKind::precondition, "resample step must be positive");
    }

    const double total = polyline_length(polyline);
    std::vector<Vec2> out;
    out.reserve(static_cast<std::size_t>(total / step) + 2);

    double target = 0.0;
    double walked = 0.0;
    std::size_t seg = 0;
    while (target < total) {
        while (seg + 2 < polyline.size() &&
               walked + distance(polyline[seg], polyline[seg + 1]) < target) {
            walked += distance(polyline[seg], polyline[seg + 1]);
            ++seg;
        }
        const double seg_len = distance(polyline[seg], polyline[seg + 1]);
        const double along = seg_len > 0.0 ? (target - walked) / seg_len : 0.0;
        out.push_back(polyline[seg] + (polyline[seg + 1] - polyline[seg]) * along);
        target += step;
    }

    const Vec2 last = polyline.back();
    if (out.empty() || distance(out.back(), last) > 1e-9) {
        out.push_back(last);
    }
    return out;
}

// Closed-form least-squares rigid transform between corresponded point sets:
// theta = atan2(sum cross, sum dot) over centered pairs, translation aligns
// the centroids.
inline RigidTransform2D solve_rigid_2d(std::span<const Vec2> source, std::span<const Vec2> target)
{
    if (source.size() != target.size()) {
        throw Error(ErrorKind::precondition, "correspondence spans differ in size");
    }
    if (source.size() < 2) {
        throw Error(ErrorKind::degenerate_input, "need at least 2 correspondence pairs");
    }

    const double n = static_cast<double>(source.size());
    Vec2 src_centroid{0, 0}, dst_centroid{0, 0};
    for (std::size_t i = 0; i < source.size(); ++i) {
        src_centroid = src_centroid + source[i];
        dst_centroid = dst_centroid + target[i];
    }
    src_centroid = src_centroid / n;
    dst_centroid = dst_centroid / n;

    double sum_cross = 0.0;
    double sum_dot = 0.0;
    double src_spread = 0.0;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Vec2 a = source[i] - src_centroid;
        const Vec2 b = target[i] - dst_centroid;
        sum_cross += cross(a, b);
        sum_dot += dot(a, b);
        src_spread = std::max(src_spread, squared_norm(a));
    }
    if (src_spread < 1e-18) {
        throw Error(ErrorKind::degenerate_input, "source points are all coincident");
    }

    RigidTransform2D t;
    t.theta = (sum_cross == 0.0 && sum_dot == 0.0) ? 0.0 : std::atan2(sum_cross, sum_dot);
    const Vec2 rotated = rotate(src_centroid, t.theta);
    t.tx = dst_centroid.x - rotated.x;
    t.ty = dst_centroid.y - rotated.y;
    return t;
}

// Uniform grid hash over target points; cell size equals the query radius so
// a 3x3 neighborhood covers every candidate. Ties resolve to the lowest
// target index.
class PointGridIndex {
public:
    PointGridIndex(std::span<const Vec2> points, double cell_size)
        : points_(points.begin(), points.end()), cell_(cell_size)
    {
        cells_.reserve(points_.size());
        for (std::size_t i = 0; i < points_.size(); ++i) {
            cells_[key(points_[i])].push_back(static_cast<std::uint32_t>(i));
        }
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t nearest_within(Vec2 q, double radius) const
    {
        const std::int64_t cx = coord(q.x);
        const std::int64_t cy = coord(q.y);
        const double radius2 = radius * radius;
        double best_d2 = std::numeric_limits<double>::infinity();
        std::size_t best = npos;
        for (std::int64_t dy = -1; dy <= 1; ++dy) {
            for (std::int64_t dx = -1; dx <= 1; ++dx) {
                const auto it = cells_.find(pack(cx + dx, cy + dy));
                if (it == cells_.end()) {
                    continue;
                }
                for (const std::uint32_t idx : it->second) {
                    const double d2 = squared_norm(points_[idx] - q);
                    if (d2 > radius2) {
                        continue;
                    }
                    if (d2 < best_d2 || (d2 == best_d2 && idx < best)) {
                        best_d2 = d2;
                        best = idx;
                    }
                }
            }
        }
        return best;
    }

private:
    std::int64_t coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }

    static std::uint64_t pack(std::int64_t x, std::int64_t y)
    {
        return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
               static_cast<std::uint64_t>(static_cast<std::uint32_t>(y));
    }

    std::uint64_t key(Vec2 p) const { return pack(coord(p.x), coord(p.y)); }

    std::vector<Vec2> points_;
    double cell_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> cells_;
};

namespace detail {

inline double rms(std::span<const Vec2> a, std::span<const Vec2> b)
{
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += squared_norm(a[i] - b[i]);
    }
    return std::sqrt(sum / static_cast<double>(a.size()));
}

} // namespace detail

// Classic ICP: nearest-neighbor correspondences within
// max_correspondence_dist, closed-form rigid solve, compose; stops when the
// within-iteration rms improvement drops below convergence_tol.
inline IcpReport icp_align(std::span<const Vec2> source, const PointCloud& target,
                           const IcpParams& params, unsigned workers = 1)
{
    if (source.size() < 2) {
        throw Error(ErrorKind::precondition, "ICP needs at least 2 source points");
    }
    if (target.points.size() < 2) {
        throw Error(ErrorKind::precondition, "ICP needs at least 2 target points");
    }
    if (params.max_iterations < 1 || params.convergence_tol <= 0.0 ||
        params.max_correspondence_dist <= 0.0 || params.resample_step <= 0.0) {
        throw Error(ErrorKind::precondition, "ICP parameters must be strictly positive");
    }

    std::vector<Vec2> target_xy;
    target_xy.reserve(target.points.size());
    for (const Vec3& p : target.points) {
        target_xy.push_back({p.x, p.y});
    }
    const PointGridIndex index(target_xy, params.max_correspondence_dist);

    IcpReport report;
    std::vector<Vec2> transformed(source.size());
    std::vector<std::size_t> match(source.size());

    for (int iteration = 1; iteration <= params.max_iterations; ++iteration) {
        for (std::size_t i = 0; i < source.size(); ++i) {
            transformed[i] = report.transform.apply(source[i]);
        }

        // Data-parallel correspondence search; identical to sequential
        // because each slot is written independently.
        parallel_for(source.size(), workers, [&](std::size_t i) {
            match[i] = index.nearest_within(transformed[i], params.max_correspondence_dist);
        });

        std::vector<Vec2> pair_src;
        std::vector<Vec2> pair_dst;
        pair_src.reserve(source.size());
        pair_dst.reserve(source.size());
        for (std::size_t i = 0; i < source.size(); ++i) {
            if (match[i] != PointGridIndex::npos) {
                pair_src.push_back(transformed[i]);
                pair_dst.push_back(target_xy[match[i]]);
            }
        }
        if (pair_src.size() < 2) {
            throw Error(ErrorKind::no_overlap,
                        "iteration " + std::to_string(iteration) + " found " +
                            std::to_string(pair_src.size()) + " correspondences");
        }

        const double rms_before = detail::rms(pair_src, pair_dst);
        const RigidTransform2D delta = solve_rigid_2d(pair_src, pair_dst);
        report.transform = compose(report.transform, delta);

        for (Vec2& p : pair_src) {
            p = delta.apply(p);
        }
        const double rms_after = detail::rms(pair_src, pair_dst);

        report.rms_history.push_back(rms_after);
        report.correspondence_history.push_back(pair_src.size());
        report.iterations = iteration;
        if (std::abs(rms_before - rms_after) < params.convergence_tol) {
            report.converged = true;
            break;
        }
    }
    return report;
}

// Vertical half-width of the near-ground band around the DEM surface.
inline constexpr double kGroundBandHalfWidth = 0.3;

// Keep cloud points whose z lies within the near-ground band of the DEM at
// their own (x, y); points outside DEM coverage are dropped.
inline std::vector<Vec2> ground_band_xy(const PointCloud& cloud, const Dem& dem)
{
    std::vector<Vec2> out;
    out.reserve(cloud.points.size());
    for (const Vec3& p : cloud.points) {
        double h = 0.0;
        try {
            h = sample_height(dem, p.x, p.y);
        } catch (const Error&) {
            continue;
        }
        if (std::abs(p.z - h) <= kGroundBandHalfWidth) {
            out.push_back({p.x, p.y});
        }
    }
    return out;
}

// Fine-tune a road graph against ground evidence: one global rigid
// transform recovered by ICP from the resampled centerline union against the
// near-ground band of the cloud, applied to every vertex.
inline std::pair<RoadGraph, IcpReport> fine_tune_graph(const RoadGraph& graph,
                                                       const PointCloud& ground, const Dem& dem,
                                                       const IcpParams& params,
                                                       unsigned workers = 1)
{
    if (graph.edges.empty()) {
        throw Error(ErrorKind::precondition, "road graph has no edges");
    }
    if (ground.points.empty()) {
        throw Error(ErrorKind::precondition, "ground cloud is empty");
    }

    std::vector<Vec2> source;
    for (const RoadEdge& edge : graph.edges) {
        const std::vector<Vec2> samples = resample_polyline(edge.polyline, params.resample_step);
        source.insert(source.end(), samples.begin(), samples.end());
    }

    const std::vector<Vec2> band = ground_band_xy(ground, dem);
    if (band.size() < 2) {
        throw Error(ErrorKind::no_overlap,
                    "fewer than 2 ground points within the near-ground band");
    }
    PointCloud band_cloud;
    band_cloud.points.reserve(band.size());
    for (const Vec2 p : band) {
        band_cloud.points.push_back({p.x, p.y, 0.0});
    }

    const IcpReport report = icp_align(source, band_cloud, params, workers);

    RoadGraph adjusted = graph;
    for (RoadEdge& edge : adjusted.edges) {
        for (Vec2& v : edge.polyline) {
            v = report.transform.apply(v);
        }
    }
    for (auto& [id, p] : adjusted.nodes) {
        p = report.transform.apply(p);
    }
    return {std::move(adjusted), report};
}

} // namespace twinmap
