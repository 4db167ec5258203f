#pragma once

// Elevation handling: ESRI ASCII grid DEMs, raw XYZ point clouds, ground
// extraction by per-cell percentile and bilinear height queries.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "twinmap/error.hpp"
#include "twinmap/geometry.hpp"
#include "twinmap/text.hpp"

namespace twinmap {

struct PointCloud {
    std::vector<Vec3> points;
};

// Regular elevation grid, ESRI convention: row 0 is the northernmost row.
struct Dem {
    int ncols = 0;
    int nrows = 0;
    double xll = 0.0;       // lower-left corner, meters
    double yll = 0.0;
    double cell_size = 1.0; // meters
    double nodata = -9999.0;
    std::vector<double> values; // row-major

    double value_at(int row, int col) const
    {
        return values[static_cast<std::size_t>(row) * ncols + col];
    }

    double& value_at(int row, int col)
    {
        return values[static_cast<std::size_t>(row) * ncols + col];
    }

    bool is_nodata(double v) const { return v == nodata || std::isnan(v); }

    double cell_center_x(int col) const { return xll + (col + 0.5) * cell_size; }
    double cell_center_y(int row) const { return yll + (nrows - 1 - row + 0.5) * cell_size; }

    // Rectangle spanned by the outermost cell centers.
    double min_center_x() const { return cell_center_x(0); }
    double max_center_x() const { return cell_center_x(ncols - 1); }
    double min_center_y() const { return cell_center_y(nrows - 1); }
    double max_center_y() const { return cell_center_y(0); }
};

inline Dem load_dem(std::string_view text)
{
    const std::vector<std::string_view> tokens = split_whitespace(text);
    std::size_t pos = 0;

    Dem dem;
    bool saw_ncols = false, saw_nrows = false, saw_xll = false, saw_yll = false,
         saw_cell = false;
    const auto lower = [](std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    };

    while (pos + 1 < tokens.size()) {
        const std::string key = lower(tokens[pos]);
        if (!key.empty() && (std::isalpha(static_cast<unsigned char>(key[0])) || key[0] == '_')) {
            const auto value = parse_double(tokens[pos + 1]);
            if (!value) {
                throw Error(ErrorKind::format,
                            "non-numeric value for DEM header key '" + key + "'");
            }
            if (key == "ncols") {
                dem.ncols = static_cast<int>(*value);
                saw_ncols = true;
            } else if (key == "nrows") {
                dem.nrows = static_cast<int>(*value);
                saw_nrows = true;
            } else if (key == "xllcorner") {
                dem.xll = *value;
                saw_xll = true;
            } else if (key == "yllcorner") {
                dem.yll = *value;
                saw_yll = true;
            } else if (key == "cellsize") {
                dem.cell_size = *value;
                saw_cell = true;
            } else if (key == "nodata_value") {
                dem.nodata = *value;
            } else {
                throw Error(ErrorKind::format, "unknown DEM header key '" + key + "'");
            }
            pos += 2;
        } else {
            break;
        }
    }

    if (!saw_ncols || !saw_nrows || !saw_xll || !saw_yll || !saw_cell) {
        throw Error(ErrorKind::format, "incomplete DEM header (need ncols, nrows, "
                                       "xllcorner, yllcorner, cellsize)");
    }
    if (dem.ncols <= 0 || dem.nrows <= 0) {
        throw Error(ErrorKind::format, "DEM dimensions must be positive");
    }
    if (dem.cell_size <= 0.0) {
        throw Error(ErrorKind::format, "DEM cellsize must be positive");
    }

    const std::size_t expected =
        static_cast<std::size_t>(dem.ncols) * static_cast<std::size_t>(dem.nrows);
    dem.values.reserve(expected);
    for (; pos < tokens.size(); ++pos) {
        const auto value = parse_double(tokens[pos]);
        if (!value) {
            throw Error(ErrorKind::format,
                        "non-numeric DEM value '" + std::string(tokens[pos]) + "'");
        }
        dem.values.push_back(*value);
    }
    if (dem.values.size() != expected) {
        throw Error(ErrorKind::format, "DEM declares " + std::to_string(expected) +
                                           " values but provides " +
                                           std::to_string(dem.values.size()));
    }
    return dem;
}

inline std::string write_dem(const Dem& dem)
{
    std::string out;
    out += "ncols " + std::to_string(dem.ncols) + "\n";
    out += "nrows " + std::to_string(dem.nrows) + "\n";
    out += "xllcorner " + format_g17(dem.xll) + "\n";
    out += "yllcorner " + format_g17(dem.yll) + "\n";
    out += "cellsize " + format_g17(dem.cell_size) + "\n";
    out += "NODATA_value " + format_g17(dem.nodata) + "\n";
    for (int r = 0; r < dem.nrows; ++r) {
        for (int c = 0; c < dem.ncols; ++c) {
            if (c > 0) {
                out += " ";
            }
            out += format_g17(dem.value_at(r, c));
        }
        out += "\n";
    }
    return out;
}

inline PointCloud load_xyz(std::string_view text)
{
    PointCloud cloud;
    int line_number = 0;
    for (const std::string_view line : split(text, '\n')) {
        ++line_number;
        const std::string_view stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') {
            continue;
        }
        const std::vector<std::string_view> tokens = split_whitespace(stripped);
        if (tokens.size() != 3) {
            throw Error(ErrorKind::format, "expected 3 values on line " +
                                               std::to_string(line_number) + ", got " +
                                               std::to_string(tokens.size()));
        }
        Vec3 p;
        const auto x = parse_double(tokens[0]);
        const auto y = parse_double(tokens[1]);
        const auto z = parse_double(tokens[2]);
        if (!x || !y || !z) {
            throw Error(ErrorKind::format,
                        "non-numeric value on line " + std::to_string(line_number));
        }
        p.x = *x;
        p.y = *y;
        p.z = *z;
        cloud.points.push_back(p);
    }
    return cloud;
}

namespace detail {

// Fill nodata cells from the nearest nonempty cell, nearest measured between
// cell centers; ties prefer the smaller row, then the smaller column. Exact:
// per column the nearest occupied row is precomputed, then columns are
// scanned outward until no closer candidate is possible.
inline void fill_nodata_from_nearest(Dem& dem)
{
    const int nrows = dem.nrows;
    const int ncols = dem.ncols;

    // nearest_row[col][row]: nearest occupied row in that column, -1 if none.
    std::vector<int> nearest_row(static_cast<std::size_t>(ncols) * nrows, -1);
    std::vector<bool> column_occupied(ncols, false);
    for (int c = 0; c < ncols; ++c) {
        int* col_nearest = nearest_row.data() + static_cast<std::size_t>(c) * nrows;
        int last = -1;
        for (int r = 0; r < nrows; ++r) {
            if (!dem.is_nodata(dem.value_at(r, c))) {
                last = r;
                column_occupied[c] = true;
            }
            col_nearest[r] = last;
        }
        last = -1;
        for (int r = nrows - 1; r >= 0; --r) {
            if (!dem.is_nodata(dem.value_at(r, c))) {
                last = r;
            }
            if (last >= 0) {
                const int up = col_nearest[r];
                // Equidistant above/below resolves to the smaller row.
                if (up < 0 || (last - r) < (r - up)) {
                    col_nearest[r] = last;
                }
            }
        }
    }

    std::vector<double> filled = dem.values;
    for (int r = 0; r < nrows; ++r) {
        for (int c = 0; c < ncols; ++c) {
            if (!dem.is_nodata(dem.value_at(r, c))) {
                continue;
            }
            long long best_d2 = std::numeric_limits<long long>::max();
            int best_row = -1;
            int best_col = -1;
            const auto consider = const_cast<const std::vector<int>&>(nearest_row);
            const auto try_column = [&](int cc) {
                if (cc < 0 || cc >= ncols || !column_occupied[cc]) {
                    return;
                }
                const int rr = consider[static_cast<std::size_t>(cc) * nrows + r];
                const long long dc = cc - c;
                const long long dr = rr - r;
                const long long d2 = dc * dc + dr * dr;
                if (d2 < best_d2 || (d2 == best_d2 && (rr < best_row ||
                                                       (rr == best_row && cc < best_col)))) {
                    best_d2 = d2;
                    best_row = rr;
                    best_col = cc;
                }
            };
            try_column(c);
            for (int offset = 1; offset < ncols; ++offset) {
                const long long off2 = static_cast<long long>(offset) * offset;
                if (best_row >= 0 && off2 > best_d2) {
                    break;
                }
                try_column(c - offset);
                try_column(c + offset);
            }
            filled[static_cast<std::size_t>(r) * ncols + c] = dem.value_at(best_row, best_col);
        }
    }
    dem.values = std::move(filled);
}

} // namespace detail

// Rasterize a point cloud to a ground DEM: per-cell nearest-rank percentile
// of z (index ceil(p*n), 1-based), empty cells filled from the nearest
// occupied cell.
inline Dem rasterize_ground(const PointCloud& cloud, double cell_size, double percentile)
{
    if (cloud.points.empty()) {
        throw Error(ErrorKind::precondition, "cannot rasterize an empty point cloud");
    }
    if (cell_size <= 0.0) {
        throw Error(ErrorKind::precondition, "cell_size must be positive");
    }
    if (percentile < 0.0 || percentile > 1.0) {
        throw Error(ErrorKind::precondition, "percentile must lie in [0, 1]");
    }
    for (const Vec3& p : cloud.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
            throw Error(ErrorKind::precondition, "point cloud contains non-finite coordinates");
        }
    }

    double min_x = cloud.points.front().x, max_x = min_x;
    double min_y = cloud.points.front().y, max_y = min_y;
    for (const Vec3& p : cloud.points) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }

    Dem dem;
    dem.cell_size = cell_size;
    dem.xll = min_x;
    dem.yll = min_y;
    dem.ncols = std::max(1, static_cast<int>(std::ceil((max_x - min_x) / cell_size - 1e-12)));
    dem.nrows = std::max(1, static_cast<int>(std::ceil((max_y - min_y) / cell_size - 1e-12)));
    dem.values.assign(static_cast<std::size_t>(dem.ncols) * dem.nrows, dem.nodata);

    std::vector<std::vector<double>> cell_z(dem.values.size());
    for (const Vec3& p : cloud.points) {
        const int col = std::clamp(static_cast<int>(std::floor((p.x - dem.xll) / cell_size)), 0,
                                   dem.ncols - 1);
        const int row_from_bottom = std::clamp(
            static_cast<int>(std::floor((p.y - dem.yll) / cell_size)), 0, dem.nrows - 1);
        const int row = dem.nrows - 1 - row_from_bottom;
        cell_z[static_cast<std::size_t>(row) * dem.ncols + col].push_back(p.z);
    }

    for (std::size_t i = 0; i < cell_z.size(); ++i) {
        std::vector<double>& zs = cell_z[i];
        if (zs.empty()) {
            continue;
        }
        std::sort(zs.begin(), zs.end());
        const std::size_t n = zs.size();
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(percentile * static_cast<double>(n) - 1e-12));
        rank = std::clamp<std::size_t>(rank, 1, n);
        dem.values[i] = zs[rank - 1];
    }

    detail::fill_nodata_from_nearest(dem);
    return dem;
}

// Bilinear interpolation over the 4 surrounding cell centers; exact at
// centers. Throws out_of_bounds outside the cell-center rectangle and nodata
// when a contributing cell holds the sentinel.
inline double sample_height(const Dem& dem, double x, double y)
{
    if (dem.ncols < 1 || dem.nrows < 1 || dem.values.empty()) {
        throw Error(ErrorKind::precondition, "DEM is empty");
    }

    // Grid coordinates measured in cells from the first center; a fractional
    // part within 1e-9 of a grid line snaps onto it so cell centers
    // reproduce their stored value exactly.
    const auto grid_coord = [](double v, double first_center, double cell, int n,
                               bool flip) -> std::pair<int, double> {
        double g = (v - first_center) / cell;
        if (flip) {
            g = -g;
        }
        if (g < -1e-9 || g > static_cast<double>(n - 1) + 1e-9) {
            throw Error(ErrorKind::out_of_bounds, "query outside DEM cell-center rectangle");
        }
        g = std::clamp(g, 0.0, static_cast<double>(n - 1));
        int i = static_cast<int>(std::floor(g));
        double f = g - i;
        if (f < 1e-9) {
            f = 0.0;
        } else if (f > 1.0 - 1e-9) {
            ++i;
            f = 0.0;
        }
        if (i >= n - 1) {
            i = n - 1;
            f = 0.0;
        }
        return {i, f};
    };

    const auto [col, fx] = grid_coord(x, dem.cell_center_x(0), dem.cell_size, dem.ncols, false);
    const auto [row, fy] = grid_coord(y, dem.cell_center_y(0), dem.cell_size, dem.nrows, true);

    const int col1 = fx > 0.0 ? col + 1 : col;
    const int row1 = fy > 0.0 ? row + 1 : row;

    const double v00 = dem.value_at(row, col);
    const double v01 = dem.value_at(row, col1);
    const double v10 = dem.value_at(row1, col);
    const double v11 = dem.value_at(row1, col1);
    if (dem.is_nodata(v00) || dem.is_nodata(v01) || dem.is_nodata(v10) || dem.is_nodata(v11)) {
        throw Error(ErrorKind::nodata, "DEM sample touches a nodata cell");
    }

    const double top = v00 * (1.0 - fx) + v01 * fx;
    const double bottom = v10 * (1.0 - fx) + v11 * fx;
    return top * (1.0 - fy) + bottom * fy;
}

} // namespace twinmap
