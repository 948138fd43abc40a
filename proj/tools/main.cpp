// clutchshape: batch scenarios and the live session server.

#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "clutchshape/service.hpp"
#include "server.hpp"

using namespace clutchshape;
using json = nlohmann::json;

namespace {

int fail(int code, const std::string& message) {
    std::cerr << error_json(code, message).dump() << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clutch-programmable inflatable membrane simulator"};
    app.require_subcommand(1);

    std::string design_file, config_file, out_dir = "out";
    std::uint64_t seed = 0;
    app.add_option("--design", design_file, "Membrane design JSON")->check(CLI::ExistingFile);
    app.add_option("--config", config_file, "Solver config JSON")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Seed for randomised trial spread");
    app.fallthrough();

    json params = json::object();
    ScenarioSpec spec;

    // shape
    auto* shape = app.add_subcommand("shape", "Inflate one clutch pattern to equilibrium");
    std::string pattern = "pyramid";
    std::vector<std::string> clutches;
    double pressure = -1.0;
    shape->add_option("--pattern", pattern, "pyramid | round | plateau");
    shape->add_option("--clutches", clutches, "Explicit Active clutch ids (overrides --pattern)");
    shape->add_option("--pressure", pressure, "Gauge pressure, Pa (default 3100)");

    // workspace
    auto* workspace = app.add_subcommand("workspace", "Mode 1 payload displacement per direction");
    std::vector<std::string> directions;
    workspace->add_option("--pressure", pressure, "Gauge pressure, Pa (default 1700)");
    workspace->add_option("--directions", directions, "Directions (default: all nine)");

    // launch
    auto* launch = app.add_subcommand("launch", "Mode 1 launch by inboard release, with force extraction");
    int trials = 1;
    double window = 5.0;
    launch->add_option("--directions", directions, "Directions (default: Up)");
    launch->add_option("--pressure", pressure, "Gauge pressure, Pa (default 2800 cardinal/Up, 1700 ordinal)");
    launch->add_option("--trials", trials, "Trials per direction")->check(CLI::Range(1, 50));
    launch->add_option("--window", window, "Moving-average window for force extraction")->check(CLI::Range(1, 51));

    // mode2
    auto* mode2 = app.add_subcommand("mode2", "Mode 2 plate tilt and release");
    double plate_mass = 0.82, damping = 0.2;
    bool no_release = false;
    mode2->add_option("--clutches", clutches, "Active clutches during inflation (default OutboardE)");
    mode2->add_option("--pressure", pressure, "Gauge pressure, Pa (default 3100)");
    mode2->add_option("--plate-mass", plate_mass, "Plate mass, kg");
    mode2->add_option("--damping-ratio", damping, "Roll damping ratio for the release");
    mode2->add_flag("--no-release", no_release, "Stop after the tilt");

    // compare
    auto* compare = app.add_subcommand("compare", "Register two point clouds and report RMSE");
    std::vector<std::string> clouds;
    int sor_k = 0, knn_k = 0;
    double sor_mult = 1.0;
    compare->add_option("clouds", clouds, "Source and target clouds (.ply/.csv, optionally .gz)")->expected(2);
    compare->add_option("--sor-k", sor_k, "Statistical outlier removal neighbours (0 = off)");
    compare->add_option("--sor-std", sor_mult, "Statistical outlier removal std multiplier");
    compare->add_option("--knn-k", knn_k, "k-NN noise filter neighbours (0 = off)");

    // serve
    auto* vicon = app.add_subcommand("convert-vicon", "Convert a Vicon CSV export to a trajectory CSV");
    std::string vicon_in, vicon_out;
    ViconColumnMapping vmap;
    vicon->add_option("input", vicon_in, "Vicon CSV export")->required()->check(CLI::ExistingFile);
    vicon->add_option("output", vicon_out, "Trajectory CSV to write")->required();
    vicon->add_option("--frame-col", vmap.frame, "Frame column");
    vicon->add_option("--x-col", vmap.x, "X column");
    vicon->add_option("--y-col", vmap.y, "Y column");
    vicon->add_option("--z-col", vmap.z, "Z column");
    vicon->add_option("--qw-col", vmap.qw, "Quaternion w column");
    vicon->add_option("--qx-col", vmap.qx, "Quaternion x column");
    vicon->add_option("--qy-col", vmap.qy, "Quaternion y column");
    vicon->add_option("--qz-col", vmap.qz, "Quaternion z column");
    vicon->add_option("--scale", vmap.position_scale, "Position units to metres (default 1e-3)");
    vicon->add_option("--rate", vmap.frame_rate, "Capture rate, Hz")->check(CLI::PositiveNumber);

    auto* serve = app.add_subcommand("serve", "Run the live session server");
    server::Options server_opts;
    serve->add_option("--host", server_opts.host, "Bind address");
    serve->add_option("--port", server_opts.port, "Port (0 picks a free one)");
    serve->add_option("--threads", server_opts.threads, "Network and solver threads")->check(CLI::Range(1, 64));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kExitInvalid, e.what());
    }

    try {
        if (!design_file.empty()) spec.design_file = design_file;
        if (!config_file.empty()) spec.config_file = config_file;
        spec.output_dir = out_dir;
        spec.seed = seed;

        if (vicon->parsed()) {
            std::ifstream in(vicon_in);
            const TrajectoryRecord r = convert_vicon_csv(in, vmap);
            std::ofstream out(vicon_out);
            if (!out) throw InvalidInput("cannot write " + vicon_out);
            write_trajectory_csv(out, r);
            std::cout << json{{"samples", r.samples.size()}, {"output", vicon_out}}.dump() << std::endl;
            return kExitOk;
        }

        if (serve->parsed()) {
            spec.validate();
            if (spec.design_file) server_opts.design = design_from_json(read_json_file(*spec.design_file));
            if (spec.config_file) server_opts.config = config_from_json(read_json_file(*spec.config_file));
            server::Server srv(server_opts);
            std::cout << json{{"listening", server_opts.host}, {"port", srv.port()}}.dump() << std::endl;
            srv.run();
            return kExitOk;
        }

        if (shape->parsed()) {
            spec.kind = ScenarioKind::Shape;
            params["pattern"] = clutches.empty() ? json(pattern) : json(clutches);
            if (pressure >= 0.0) params["pressure_pa"] = pressure;
        } else if (workspace->parsed()) {
            spec.kind = ScenarioKind::Workspace;
            if (pressure >= 0.0) params["pressure_pa"] = pressure;
            if (!directions.empty()) params["directions"] = directions;
        } else if (launch->parsed()) {
            spec.kind = ScenarioKind::Launch;
            if (pressure >= 0.0) params["pressure_pa"] = pressure;
            params["directions"] = directions.empty() ? std::vector<std::string>{"Up"} : directions;
            params["trials"] = trials;
            params["window"] = window;
        } else if (mode2->parsed()) {
            spec.kind = ScenarioKind::Mode2;
            if (!clutches.empty()) params["pattern"] = clutches;
            if (pressure >= 0.0) params["pressure_pa"] = pressure;
            params["plate_mass_kg"] = plate_mass;
            params["damping_ratio"] = damping;
            params["release"] = !no_release;
        } else if (compare->parsed()) {
            spec.kind = ScenarioKind::CompareClouds;
            for (const auto& c : clouds) spec.inputs.emplace_back(c);
            params["sor_k"] = sor_k;
            params["sor_std_mult"] = sor_mult;
            params["knn_k"] = knn_k;
        }
        spec.params = params;
        const ScenarioResult r = run_scenario(spec);
        std::cout << r.summary.dump(2) << std::endl;
        return kExitOk;
    } catch (const InvalidInput& e) {
        return fail(kExitInvalid, e.what());
    } catch (const std::exception& e) {
        return fail(kExitRuntime, e.what());
    }
}
