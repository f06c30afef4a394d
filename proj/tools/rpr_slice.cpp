// rpr-slice: kinematics queries and fixed-rho1 slice analysis of a 3-RPR manipulator.
//
// Exit status: 0 success, 2 usage, 3 invalid input or configuration, 4 numerical failure
// (including a census that disagrees with its expected values under `verify`).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rpr/atlas.hpp"
#include "rpr/error.hpp"
#include "rpr/plot.hpp"

namespace {

using namespace rpr;

enum Exit { kOk = 0, kUsage = 2, kValidation = 3, kNumerical = 4 };

struct Common {
    std::string config_path;
    bool degrees = false;
    bool json = false;
};

AnalysisConfig load(const Common& c) {
    if (c.config_path.empty()) {
        AnalysisConfig cfg;
        cfg.geometry = ManipulatorGeometry::reference();
        cfg.rho1 = 17.0;
        return cfg;
    }
    return load_config_file(c.config_path);
}

double to_unit(double rad, bool degrees) { return degrees ? rad * 180.0 / std::numbers::pi : rad; }
double from_unit(double v, bool degrees) { return degrees ? v * std::numbers::pi / 180.0 : v; }

std::string g12(double v) { return fmt::format("{:.12g}", v); }

int cmd_ik(const Common& c, const std::vector<double>& pose, std::optional<double> rho1) {
    const AnalysisConfig cfg = load(c);
    cfg.geometry.validate();
    const double r1 = rho1 ? *rho1 : cfg.rho1.value_or(17.0);
    if (!(r1 > 0.0)) throw Error(ErrorKind::Validation, "rho1 must be positive", "rho");
    const Manipulator m(cfg.geometry);
    const SlicePose p{from_unit(pose[0], c.degrees), from_unit(pose[1], c.degrees), r1};
    const JointCoords q = inverse_kinematics(m, p);
    const double det = singular_value(m, p);
    const AspectLabel aspect = aspect_of(m, p);
    if (c.json) {
        nlohmann::ordered_json j{{"rho1", q.rho1}, {"rho2", q.rho2}, {"rho3", q.rho3},
                                 {"singular_value", det}, {"aspect", to_string(aspect)}};
        std::cout << j.dump(2) << '\n';
        return kOk;
    }
    fmt::print("rho1: {}\nrho2: {}\nrho3: {}\nsingular_value: {}\naspect: {}\n", g12(q.rho1), g12(q.rho2),
               g12(q.rho3), g12(det), to_string(aspect));
    return kOk;
}

int cmd_fk(const Common& c, const std::vector<double>& rho) {
    const AnalysisConfig cfg = load(c);
    cfg.geometry.validate();
    const JointCoords q{rho[0], rho[1], rho[2]};
    if (!(q.rho1 > 0.0 && q.rho2 > 0.0 && q.rho3 > 0.0)) {
        throw Error(ErrorKind::Validation, "leg lengths must be positive", "rho");
    }
    const Manipulator m(cfg.geometry);
    const SolutionSet set = forward_kinematics(m, q);
    const char* unit = c.degrees ? "deg" : "rad";
    if (c.json) {
        nlohmann::ordered_json j{{"rho", {q.rho1, q.rho2, q.rho3}}, {"count", set.count()}, {"unit", unit}};
        auto& arr = j["solutions"] = nlohmann::json::array();
        for (const auto& s : set.solutions) {
            arr.push_back(nlohmann::ordered_json{{"theta1", to_unit(s.pose.theta1, c.degrees)},
                                                 {"alpha", to_unit(s.pose.alpha, c.degrees)},
                                                 {"theta2", to_unit(s.theta2, c.degrees)},
                                                 {"theta3", to_unit(s.theta3, c.degrees)},
                                                 {"singular_value", s.det_j},
                                                 {"aspect", to_string(s.aspect)}});
        }
        std::cout << j.dump(2) << '\n';
        return set.nonconverged > 0 ? kNumerical : kOk;
    }
    fmt::print("count: {}\n", set.count());
    if (set.count() > 0) fmt::print("#  aspect  theta1  alpha  theta2  theta3  singular_value  ({})\n", unit);
    for (std::size_t i = 0; i < set.solutions.size(); ++i) {
        const auto& s = set.solutions[i];
        fmt::print("{}  {}  {}  {}  {}  {}  {}\n", i + 1, to_string(s.aspect), g12(to_unit(s.pose.theta1, c.degrees)),
                   g12(to_unit(s.pose.alpha, c.degrees)), g12(to_unit(s.theta2, c.degrees)),
                   g12(to_unit(s.theta3, c.degrees)), g12(s.det_j));
    }
    for (const auto& d : set.diagnostics) fmt::print(stderr, "warning: {}: {}\n", to_string(d.kind), d.message);
    return set.nonconverged > 0 ? kNumerical : kOk;
}

AnalyzeOptions analyze_options(std::optional<double> rho1, std::optional<int> grid,
                               const std::vector<double>& window) {
    AnalyzeOptions o;
    o.rho1 = rho1;
    o.grid_n = grid;
    if (!window.empty()) o.window = JointWindow{window[0], window[1], window[2], window[3]};
    return o;
}

void print_census(const VerificationReport& r) {
    auto line = [](const char* name, int got, std::optional<int> want) {
        if (want) fmt::print("{:<26} {:>3}  (expected {})\n", name, got, *want);
        else fmt::print("{:<26} {:>3}\n", name, got);
    };
    const auto& e = r.expected;
    line("cusps", r.counts.cusps, e ? std::optional(e->cusps) : std::nullopt);
    line("nodes", r.counts.nodes, e ? std::optional(e->nodes) : std::nullopt);
    line("tangency points", r.counts.tangencies, e ? std::optional(e->tangencies) : std::nullopt);
    line("char. curve cusps", r.counts.char_cusps, e ? std::optional(e->char_cusps) : std::nullopt);
    line("singular x char crossings", r.counts.singular_char_crossings,
         e ? std::optional(e->singular_char_crossings) : std::nullopt);
    line("char x char crossings", r.counts.char_char_crossings,
         e ? std::optional(e->char_char_crossings) : std::nullopt);
}

int cmd_analyze(const Common& c, const AnalyzeOptions& o, const std::string& out) {
    const SliceAtlas a = analyze_slice(load(c), o);
    write_atlas(a, out);
    fmt::print("atlas: {}\n", out);
    fmt::print("singular curves: {}  segments: {}  characteristic curves: {}  basic regions: {}\n",
               a.workspace.size(), a.segments.segments.size(), a.chars.curves.size(),
               a.basic_regions.regions.size());
    print_census(a.report);
    for (const auto& d : a.diagnostics) fmt::print(stderr, "warning: {}: {}\n", to_string(d.kind), d.message);
    return kOk;
}

int cmd_verify(const Common& c, const AnalyzeOptions& o, const std::string& out) {
    const SliceAtlas a = analyze_slice(load(c), o);
    if (!out.empty()) write_atlas(a, out);
    print_census(a.report);
    const double deg = 180.0 / std::numbers::pi;
    for (const auto& set : a.report.cusps) {
        for (const auto& im : set.images) {
            fmt::print("C{} {:<17} angle {:9.4f} deg  check {:9.4f} deg  {}\n", set.cusp_id + 1,
                       to_string(im.kind), im.angle * deg, im.check_angle * deg, im.pass ? "ok" : "FAIL");
        }
    }
    for (const auto& set : a.report.nodes) {
        for (const auto& im : set.images) {
            fmt::print("N{} {:<17} angle {:9.4f} deg  check {:9.4f} deg  {}\n", set.node_id + 1,
                       to_string(im.kind), im.angle * deg, im.check_angle * deg, im.pass ? "ok" : "FAIL");
        }
    }
    for (const auto& m : a.report.mismatches) fmt::print("mismatch: {}\n", m);
    fmt::print("census: {}\n", a.report.pass ? "PASS" : "FAIL");
    return a.report.pass ? kOk : kNumerical;
}

int cmd_plot(const std::string& dir, const std::string& figure, const std::string& file) {
    const AtlasData d = read_atlas(dir);
    const std::string svg = render_figure(d, figure);
    const std::filesystem::path path = file.empty() ? std::filesystem::path(dir) / (figure + ".svg") : std::filesystem::path(file);
    std::ofstream os(path, std::ios::binary);
    if (!(os << svg)) throw Error(ErrorKind::Validation, fmt::format("cannot write {}", path.string()), "out");
    fmt::print("{}\n", path.string());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Singularity, cusp/node and characteristic-curve analysis of 3-RPR rho1 slices"};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--config", common.config_path, "Geometry configuration file (default: reference geometry)")
        ->check(CLI::ExistingFile);
    app.add_flag("--degrees", common.degrees, "Angles on the command line and in printed output are degrees");

    auto* ik = app.add_subcommand("ik", "Leg lengths of a slice pose");
    std::vector<double> pose;
    std::optional<double> ik_rho;
    ik->add_option("--pose", pose, "THETA1 ALPHA")->expected(2)->required();
    ik->add_option("--rho", ik_rho, "R1 (default: config rho1)");
    ik->add_flag("--json", common.json, "Print a JSON record");

    auto* fk = app.add_subcommand("fk", "All assembly modes for given leg lengths");
    std::vector<double> rho;
    fk->add_option("--rho", rho, "R1 R2 R3")->expected(3)->required();
    fk->add_flag("--json", common.json, "Print a JSON record");

    std::optional<double> slice_rho;
    std::optional<int> grid;
    std::vector<double> window;
    std::string out;
    std::string verify_out;
    auto slice_options = [&](CLI::App* sub) {
        sub->add_option("--rho", slice_rho, "R1 (default: config rho1)");
        sub->add_option("--grid", grid, "Workspace grid resolution per axis")->check(CLI::Range(16, 8192));
        sub->add_option("--window", window, "R2MIN R2MAX R3MIN R3MAX of the solution-count map")->expected(4);
    };
    auto* analyze = app.add_subcommand("analyze", "Run the slice pipeline and write an atlas directory");
    slice_options(analyze);
    analyze->add_option("--out", out, "Atlas directory")->default_val("atlas");

    auto* verify = app.add_subcommand("verify", "Run the slice pipeline and check the image census");
    slice_options(verify);
    verify->add_option("--out", verify_out, "Also write the atlas here");

    auto* plot = app.add_subcommand("plot", "Render an SVG figure from an atlas directory");
    std::string figure, file;
    plot->add_option("--out", out, "Atlas directory")->default_val("atlas");
    plot->add_option("--figure", figure, "Figure name")->required()->check(CLI::IsMember(figure_names()));
    plot->add_option("--file", file, "Output path (default: <out>/<figure>.svg)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*ik) return cmd_ik(common, pose, ik_rho);
        if (*fk) return cmd_fk(common, rho);
        if (*analyze) return cmd_analyze(common, analyze_options(slice_rho, grid, window), out);
        if (*verify) return cmd_verify(common, analyze_options(slice_rho, grid, window), verify_out);
        if (*plot) return cmd_plot(out, figure, file);
    } catch (const Error& e) {
        fmt::print(stderr, "error: {}{}\n", e.what(), e.field().empty() ? "" : fmt::format(" [{}]", e.field()));
        return e.kind() == ErrorKind::Numerical ? kNumerical : kValidation;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kNumerical;
    }
    return kUsage;
}
