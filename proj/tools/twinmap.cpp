// twinmap pipeline driver: finetune / convert / mesh / validate / run.
//
// Exit codes: 0 success, 1 input or usage error, 2 registration found no
// overlap, 3 validation errors.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "twinmap/twinmap.hpp"

namespace fs = std::filesystem;
using namespace twinmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoOverlap = 2;
constexpr int kExitValidation = 3;

struct Overrides {
    std::string config_path;
    std::string osm, dem, cloud, xodr, out;
    std::optional<double> origin_lat, origin_lon;
    std::optional<unsigned> workers;
    std::string fit_mode;
};

void add_common_options(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config_path, "flat key=value configuration file");
    cmd->add_option("--osm", o.osm, "OSM XML extract");
    cmd->add_option("--dem", o.dem, "ESRI ASCII grid DEM");
    cmd->add_option("--cloud", o.cloud, "XYZ point cloud");
    cmd->add_option("--xodr", o.xodr, "OpenDRIVE file (output of convert, input of mesh)");
    cmd->add_option("--out", o.out, "output directory");
    cmd->add_option("--workers", o.workers, "worker thread count");
    cmd->add_option("--origin-lat", o.origin_lat, "projection origin latitude override");
    cmd->add_option("--origin-lon", o.origin_lon, "projection origin longitude override");
    cmd->add_option("--fit-mode", o.fit_mode, "plan-view fit mode: polyline | arcfit");
}

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot read '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const fs::path& path, const std::string& content)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
    }
    out << content;
}

// Precedence: defaults < config file < TWINMAP_THREADS < flags.
PipelineConfig resolve_config(const Overrides& o)
{
    PipelineConfig config;
    if (!o.config_path.empty()) {
        apply_key_values(config, parse_key_values(slurp(o.config_path)));
    }
    if (const char* env = std::getenv("TWINMAP_THREADS")) {
        const auto n = parse_int(env);
        if (n && *n >= 1) {
            config.workers = static_cast<unsigned>(*n);
        }
    }
    if (!o.osm.empty()) config.osm_path = o.osm;
    if (!o.dem.empty()) config.dem_path = o.dem;
    if (!o.cloud.empty()) config.cloud_path = o.cloud;
    if (!o.xodr.empty()) config.xodr_path = o.xodr;
    if (!o.out.empty()) config.out_dir = o.out;
    if (o.origin_lat) config.origin_lat = o.origin_lat;
    if (o.origin_lon) config.origin_lon = o.origin_lon;
    if (o.workers) config.workers = *o.workers;
    if (!o.fit_mode.empty()) config.conversion.fit_mode = parse_fit_mode(o.fit_mode);
    return config;
}

unsigned resolve_workers(const PipelineConfig& config)
{
    return config.workers > 0 ? config.workers : default_worker_count();
}

struct LoadedGraph {
    RoadGraph graph;
    std::optional<LocalFrame> frame;
};

LoadedGraph graph_from_osm(const PipelineConfig& config)
{
    const OsmExtract extract = parse_osm(slurp(config.osm_path));
    LocalFrame frame = default_frame(extract);
    if (config.origin_lat && config.origin_lon) {
        frame.origin_lat = *config.origin_lat;
        frame.origin_lon = *config.origin_lon;
    }
    RoadGraph graph = build_road_graph(extract, frame, config.road_graph);
    if (graph.edges.empty()) {
        std::cout << "warning: no road-candidate ways; the road graph is empty\n";
    }
    return {std::move(graph), frame};
}

std::string geo_reference_string(const LocalFrame& frame)
{
    return "+proj=eqc +lat_ts=" + format_g17(frame.origin_lat) +
           " +lat_0=" + format_g17(frame.origin_lat) +
           " +lon_0=" + format_g17(frame.origin_lon) + " +R=" +
           format_g17(frame.earth_radius) + " +units=m +no_defs";
}

std::string finetune_report_text(const IcpReport& report)
{
    std::string out;
    out += "iterations " + std::to_string(report.iterations) + "\n";
    out += std::string("converged ") + (report.converged ? "yes" : "no") + "\n";
    out += "theta " + format_g17(report.transform.theta) + "\n";
    out += "tx " + format_g17(report.transform.tx) + "\n";
    out += "ty " + format_g17(report.transform.ty) + "\n";
    out += "# iter rms correspondences\n";
    for (std::size_t i = 0; i < report.rms_history.size(); ++i) {
        out += std::to_string(i + 1) + " " + format_g17(report.rms_history[i]) + " " +
               std::to_string(report.correspondence_history[i]) + "\n";
    }
    return out;
}

struct FinetuneOutcome {
    RoadGraph graph;
    std::optional<LocalFrame> frame;
    IcpReport report;
};

FinetuneOutcome run_finetune(const PipelineConfig& config)
{
    if (config.osm_path.empty()) {
        throw Error(ErrorKind::io, "finetune needs --osm");
    }
    if (config.cloud_path.empty() && config.dem_path.empty()) {
        throw Error(ErrorKind::io, "finetune needs --cloud or --dem ground evidence");
    }

    LoadedGraph loaded = graph_from_osm(config);

    PointCloud cloud;
    Dem dem;
    if (!config.cloud_path.empty()) {
        cloud = load_xyz(slurp(config.cloud_path));
        if (!config.dem_path.empty()) {
            dem = load_dem(slurp(config.dem_path));
        } else {
            dem = rasterize_ground(cloud, config.ground_cell_size, config.ground_percentile);
        }
    } else {
        // No cloud: non-nodata DEM cell centers stand in as ground evidence.
        dem = load_dem(slurp(config.dem_path));
        for (int r = 0; r < dem.nrows; ++r) {
            for (int c = 0; c < dem.ncols; ++c) {
                const double v = dem.value_at(r, c);
                if (!dem.is_nodata(v)) {
                    cloud.points.push_back({dem.cell_center_x(c), dem.cell_center_y(r), v});
                }
            }
        }
    }

    auto [adjusted, report] =
        fine_tune_graph(loaded.graph, cloud, dem, config.icp, resolve_workers(config));

    write_file(fs::path(config.out_dir) / "graph.txt", write_graph(adjusted, loaded.frame));
    write_file(fs::path(config.out_dir) / "finetune_report.txt", finetune_report_text(report));

    std::cout << "finetune: " << report.iterations << " iterations, "
              << (report.converged ? "converged" : "not converged") << "\n";
    std::cout << "  transform: theta=" << format_g17(report.transform.theta)
              << " tx=" << format_g17(report.transform.tx)
              << " ty=" << format_g17(report.transform.ty) << "\n";
    if (!report.rms_history.empty()) {
        std::cout << "  final rms: " << format_g17(report.rms_history.back()) << " m over "
                  << report.correspondence_history.back() << " correspondences\n";
    }
    if (!report.converged) {
        std::cout << "warning: ICP hit the iteration limit before converging\n";
    }
    return {std::move(adjusted), loaded.frame, report};
}

int cmd_finetune(const PipelineConfig& config)
{
    run_finetune(config);
    return kExitOk;
}

struct ConvertOutcome {
    odr::OdrMap map;
    RoadGraph graph;
    int exit_code = kExitOk;
};

ConvertOutcome run_convert(const PipelineConfig& config, const RoadGraph* prebuilt_graph,
                           const std::optional<LocalFrame>& prebuilt_frame)
{
    if (config.dem_path.empty()) {
        throw Error(ErrorKind::io, "convert needs --dem");
    }

    RoadGraph graph;
    std::optional<LocalFrame> frame;
    if (prebuilt_graph) {
        graph = *prebuilt_graph;
        frame = prebuilt_frame;
    } else if (!config.graph_path.empty()) {
        GraphFile file = read_graph(slurp(config.graph_path));
        graph = std::move(file.graph);
        frame = file.frame;
    } else if (!config.osm_path.empty()) {
        LoadedGraph loaded = graph_from_osm(config);
        graph = std::move(loaded.graph);
        frame = loaded.frame;
    } else {
        throw Error(ErrorKind::io, "convert needs --osm or a graph file");
    }

    const Dem dem = load_dem(slurp(config.dem_path));
    odr::OdrMap map = convert(graph, dem, config.conversion);
    if (frame) {
        map.header.geo_reference = geo_reference_string(*frame);
    }

    const std::vector<odr::Issue> issues = odr::validate(map);
    std::size_t errors = 0;
    for (const odr::Issue& issue : issues) {
        const bool is_error = issue.severity == odr::IssueSeverity::error;
        errors += is_error ? 1 : 0;
        std::cout << (is_error ? "error" : "warning") << " [road " << issue.road_id
                  << "]: " << issue.message << "\n";
    }
    for (const odr::Issue& issue : check_clearance(map, graph, config.conversion)) {
        std::cout << "warning [road " << issue.road_id << "]: " << issue.message << "\n";
    }

    const fs::path xodr_path = config.xodr_path.empty()
                                   ? fs::path(config.out_dir) / "map.xodr"
                                   : fs::path(config.xodr_path);
    write_file(xodr_path, odr::serialize(map));
    std::cout << "convert: " << map.roads.size() << " roads -> " << xodr_path.string() << " ("
              << errors << " errors, " << issues.size() - errors << " warnings)\n";

    return {std::move(map), std::move(graph), errors == 0 ? kExitOk : kExitValidation};
}

int cmd_convert(const PipelineConfig& config)
{
    return run_convert(config, nullptr, std::nullopt).exit_code;
}

int run_mesh(const PipelineConfig& config, const odr::OdrMap* prebuilt_map)
{
    if (config.dem_path.empty()) {
        throw Error(ErrorKind::io, "mesh needs --dem");
    }
    odr::OdrMap map;
    if (prebuilt_map) {
        map = *prebuilt_map;
    } else {
        if (config.xodr_path.empty()) {
            throw Error(ErrorKind::io, "mesh needs --xodr");
        }
        std::vector<std::string> warnings;
        map = odr::deserialize(slurp(config.xodr_path), &warnings);
        for (const std::string& w : warnings) {
            std::cout << "warning: " << w << "\n";
        }
    }
    const Dem dem = load_dem(slurp(config.dem_path));

    const auto start = std::chrono::steady_clock::now();
    std::vector<RoadTiming> timings;
    const GenerateResult result =
        generate_all(map, dem, config.tessellation, resolve_workers(config), &timings);
    export_obj(result.meshes, config.out_dir);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::string report;
    for (const NamedMesh& named : result.meshes) {
        report += named.name + " " + std::to_string(named.mesh.vertices.size()) + " " +
                  std::to_string(named.mesh.triangles.size()) + "\n";
    }
    write_file(fs::path(config.out_dir) / "mesh_report.txt", report);

    for (const RoadTiming& t : timings) {
        std::printf("  road %s: %.3f ms\n", t.road_id.c_str(), t.seconds * 1e3);
    }
    for (const std::string& failure : result.failures) {
        std::cout << "failure: " << failure << "\n";
    }
    std::printf("mesh: %zu meshes -> %s in %.3f s (%zu failures)\n", result.meshes.size(),
                config.out_dir.c_str(), wall, result.failures.size());
    return result.failures.empty() ? kExitOk : kExitInput;
}

int cmd_validate(const std::string& path)
{
    std::vector<std::string> warnings;
    const odr::OdrMap map = odr::deserialize(slurp(path), &warnings);
    for (const std::string& w : warnings) {
        std::cout << "warning: " << w << "\n";
    }
    const std::vector<odr::Issue> issues = odr::validate(map);
    std::size_t errors = 0;
    for (const odr::Issue& issue : issues) {
        const bool is_error = issue.severity == odr::IssueSeverity::error;
        errors += is_error ? 1 : 0;
        std::cout << (is_error ? "error" : "warning") << " [road " << issue.road_id
                  << "]: " << issue.message << "\n";
    }
    std::cout << "validate: " << map.roads.size() << " roads, " << errors << " errors, "
              << issues.size() - errors << " warnings\n";
    return errors == 0 ? kExitOk : kExitValidation;
}

int cmd_run(const PipelineConfig& config)
{
    const auto start = std::chrono::steady_clock::now();

    RoadGraph graph;
    std::optional<LocalFrame> frame;
    if (!config.cloud_path.empty()) {
        FinetuneOutcome outcome = run_finetune(config);
        graph = std::move(outcome.graph);
        frame = outcome.frame;
    } else {
        std::cout << "run: no cloud given, skipping fine-tuning\n";
        if (config.osm_path.empty()) {
            throw Error(ErrorKind::io, "run needs --osm");
        }
        LoadedGraph loaded = graph_from_osm(config);
        graph = std::move(loaded.graph);
        frame = loaded.frame;
    }

    PipelineConfig mesh_config = config;
    if (mesh_config.xodr_path.empty()) {
        mesh_config.xodr_path = (fs::path(config.out_dir) / "map.xodr").string();
    }

    ConvertOutcome converted = run_convert(mesh_config, &graph, frame);
    if (converted.exit_code != kExitOk) {
        return converted.exit_code;
    }
    const int mesh_code = run_mesh(mesh_config, &converted.map);

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("run: pipeline finished in %.3f s\n", wall);
    return mesh_code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"twinmap: align OSM road geometry to LiDAR evidence, emit OpenDRIVE 1.4 "
                 "and tessellate simulator-ready meshes"};
    app.require_subcommand(1);

    Overrides finetune_opts, convert_opts, mesh_opts, run_opts;
    CLI::App* finetune = app.add_subcommand("finetune", "align the OSM road graph to ground evidence");
    add_common_options(finetune, finetune_opts);
    CLI::App* convert_cmd = app.add_subcommand("convert", "convert the road graph to OpenDRIVE");
    add_common_options(convert_cmd, convert_opts);
    CLI::App* mesh = app.add_subcommand("mesh", "tessellate an OpenDRIVE map into OBJ meshes");
    add_common_options(mesh, mesh_opts);
    CLI::App* run = app.add_subcommand("run", "run finetune, convert and mesh in sequence");
    add_common_options(run, run_opts);

    std::string validate_path;
    Overrides validate_opts;
    CLI::App* validate_cmd = app.add_subcommand("validate", "validate an OpenDRIVE file");
    validate_cmd->add_option("path", validate_path, "OpenDRIVE file to check");
    add_common_options(validate_cmd, validate_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (finetune->parsed()) {
            return cmd_finetune(resolve_config(finetune_opts));
        }
        if (convert_cmd->parsed()) {
            return cmd_convert(resolve_config(convert_opts));
        }
        if (mesh->parsed()) {
            return run_mesh(resolve_config(mesh_opts), nullptr);
        }
        if (validate_cmd->parsed()) {
            const PipelineConfig config = resolve_config(validate_opts);
            const std::string path = !validate_path.empty() ? validate_path : config.xodr_path;
            if (path.empty()) {
                throw Error(ErrorKind::io, "validate needs a path or --xodr");
            }
            return cmd_validate(path);
        }
        if (run->parsed()) {
            return cmd_run(resolve_config(run_opts));
        }
    } catch (const Error& e) {
        std::cerr << "twinmap: " << e.what() << "\n";
        return e.kind() == ErrorKind::no_overlap ? kExitNoOverlap : kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "twinmap: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
