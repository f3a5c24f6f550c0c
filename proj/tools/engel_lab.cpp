#include "engel/json_io.hpp"
#include "engel/surgery.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace engel;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Everything a run depends on; echoed into the report so identical configs
/// are recognizable and produce byte-identical output.
struct RunConfig {
    std::string subcommand;
    std::string input;
    std::string out = ".";
    std::vector<std::string> tol_overrides;
    long long seed = 0;
    int grid = 0;
    std::string check;
};

Tolerances parse_tolerances(const std::vector<std::string>& kvs) {
    Tolerances tol;
    for (const std::string& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0)
            throw SchemaError("tolerance override must look like KEY=VALUE: " + kv);
        std::string key = kv.substr(0, eq);
        double val = 0.0;
        std::size_t used = 0;
        try {
            val = std::stod(kv.substr(eq + 1), &used);
        } catch (const std::exception&) {
            throw SchemaError("tolerance override has a non-numeric value: " + kv);
        }
        if (used != kv.size() - eq - 1)
            throw SchemaError("tolerance override has a non-numeric value: " + kv);
        if (!(val > 0.0)) throw SchemaError("tolerances must be positive: " + kv);
        if (!tol.set(key, val)) throw SchemaError("unknown tolerance key: " + key);
    }
    return tol;
}

Json load_input(const std::string& path) {
    if (path.empty()) throw SchemaError("--input is required for this subcommand");
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open input file: " + path);
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("input is not valid JSON: ") + e.what());
    }
}

void write_file(const fs::path& p, const std::string& text) {
    if (!p.parent_path().empty()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write output file: " + p.string());
    out << text;
}

void write_report(const RunConfig& cfg, const Json& body) {
    write_file(fs::path(cfg.out) / "report.json", body.dump(2) + "\n");
}

Json config_json(const RunConfig& cfg, Json extra = Json::object()) {
    Json j{{"subcommand", cfg.subcommand},
           {"check", cfg.check},
           {"grid", cfg.grid},
           {"seed", cfg.seed}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

std::vector<Pt> points_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty())
        throw SchemaError(std::string(what) + ": non-empty array of points required");
    std::vector<Pt> pts;
    for (const Json& e : j) {
        if (!e.is_array() || e.size() != 4)
            throw SchemaError(std::string(what) + ": each point must be an array of 4 numbers");
        Pt p;
        for (int i = 0; i < 4; ++i) {
            if (!e[i].is_number())
                throw SchemaError(std::string(what) + ": each point must be an array of 4 numbers");
            p[i] = e[i].get<double>();
        }
        pts.push_back(p);
    }
    return pts;
}

/// Shared by develop/loose: {"fields"?, "flag" | "D", "Y"?}. Y defaults to
/// the flag's line field when a full flag is given.
struct DevelopmentInput {
    std::vector<VectorFieldDef> D;
    VectorFieldDef Y;
};

DevelopmentInput development_input(const Json& root) {
    Json named = root.contains("fields") ? root.at("fields") : Json::object();
    DevelopmentInput in;
    bool have_Y = false;
    if (root.contains("flag")) {
        DistributionFlag flag = flag_from_json(root.at("flag"), named);
        in.D = flag.D;
        in.Y = flag.W;
        have_Y = true;
    } else if (root.contains("D")) {
        const Json& D = root.at("D");
        if (!D.is_array() || D.size() != 2) throw SchemaError("\"D\" must list 2 fields");
        for (const Json& f : D)
            in.D.push_back(f.is_string() ? field_from_json(named.at(f.get<std::string>()))
                                         : field_from_json(f));
    } else {
        throw SchemaError("either \"flag\" or \"D\" is required");
    }
    if (root.contains("Y")) {
        const Json& y = root.at("Y");
        if (y.is_string()) {
            if (!named.contains(y.get<std::string>()))
                throw SchemaError("unknown field name \"" + y.get<std::string>() + "\"");
            in.Y = field_from_json(named.at(y.get<std::string>()));
        } else {
            in.Y = field_from_json(y);
        }
        have_Y = true;
    }
    if (!have_Y) throw SchemaError("\"Y\" is required when no full flag is given");
    return in;
}

// --------------------------------------------------------------------------
// curve

struct CurveArgs {
    std::vector<double> insert;  // t0, n, rho
    double distribute = -1.0;
    int convexify = -1;
    double margin = 0.1;
    int node = 0;
};

int run_curve(const RunConfig& cfg, const CurveArgs& args, const Tolerances& tol) {
    Json root = load_input(cfg.input);
    Json config = config_json(cfg);

    if (root.contains("curves")) {
        if (!args.insert.empty())
            throw SchemaError("--insert applies to a single curve, not a family");
        if (args.distribute >= 0.0 && args.convexify >= 0)
            throw SchemaError("--distribute and --convexify are mutually exclusive");
        CurveFamily F = family_from_json(root, tol);
        if (args.node < 0 || args.node >= F.nodes())
            throw SchemaError("--node out of range for this family");

        CurveFamily out = F;
        std::string trace;
        if (args.distribute >= 0.0) {
            WiggleSchedule sched = distribute_wiggles(F, args.margin, args.distribute, tol);
            std::vector<SphereCurve> cs;
            for (int k = 0; k < F.nodes(); ++k) cs.push_back(sched.at(k, args.distribute));
            out = CurveFamily(F.shape(), std::move(cs));
            trace = homotopy_trace_csv(
                [&](double u) { return sched.at(args.node, u * args.distribute); }, 0.0, 1.0, 16,
                tol);
            config["distribute"] = args.distribute;
            config["margin"] = args.margin;
        } else if (args.convexify >= 0) {
            ConvexifyHomotopy hom = convexify_family(F, args.convexify, tol);
            out = hom.final_family();
            trace = homotopy_trace_csv([&](double u) { return hom.at(args.node, u); }, 0.0, 1.0,
                                       16, tol);
            config["convexify"] = args.convexify;
        }

        bool all_convex = true;
        int min_wiggles = 1 << 30;
        for (int k = 0; k < out.nodes(); ++k) {
            all_convex = all_convex && is_convex(out.curve(k), tol);
            min_wiggles =
                std::min(min_wiggles, static_cast<int>(detect_wiggles(out.curve(k), tol).size()));
        }
        if (!trace.empty()) {
            write_file(fs::path(cfg.out) / "homotopy_trace.csv", trace);
            write_file(fs::path(cfg.out) / "family_out.json", family_to_json(out).dump(2) + "\n");
        }
        Json rep{{"pass", all_convex},
                 {"nodes", out.nodes()},
                 {"all_convex", all_convex},
                 {"min_wiggle_count", min_wiggles},
                 {"config", config},
                 {"tolerances", tolerances_to_json(tol)}};
        write_report(cfg, rep);
        return all_convex ? 0 : 1;
    }

    SphereCurve c = curve_from_json(root, tol);
    if (!args.insert.empty()) {
        if (args.insert.size() != 3) throw SchemaError("--insert expects T0 N RHO");
        c = insert_wiggles(c, args.insert[0], static_cast<int>(args.insert[1]), args.insert[2],
                           tol);
        write_file(fs::path(cfg.out) / "curve_out.json", curve_to_json(c).dump(2) + "\n");
        config["insert"] = args.insert;
    }
    bool immersed = is_immersed(c, tol);
    bool convex = immersed && is_convex(c, tol);
    bool weakly = immersed && is_weakly_convex(c, tol);
    std::vector<Wiggle> wiggles = immersed ? detect_wiggles(c, tol) : std::vector<Wiggle>{};
    Json wjson = Json::array();
    for (const Wiggle& w : wiggles)
        wjson.push_back(Json{{"a", w.a}, {"b", w.b}, {"rho", w.rho}});
    bool pass = cfg.check == "immersed" ? immersed : convex;
    Json rep{{"pass", pass},
             {"immersed", immersed},
             {"convex", convex},
             {"weakly_convex", weakly},
             {"total_curvature", immersed ? total_curvature(c, tol) : 0.0},
             {"wiggle_count", static_cast<int>(wiggles.size())},
             {"wiggles", wjson},
             {"config", config},
             {"tolerances", tolerances_to_json(tol)}};
    write_report(cfg, rep);
    if (immersed) {
        write_file(fs::path(cfg.out) / "curvature_profile.csv", curvature_profile_csv(c, tol));
        write_file(fs::path(cfg.out) / "wiggle_table.csv", wiggle_table_csv(c, tol));
    }
    return pass ? 0 : 1;
}

// --------------------------------------------------------------------------
// shell

int run_shell(const RunConfig& cfg, int N, int nt, const Tolerances& tol) {
    Json root = load_input(cfg.input);
    Shell sh = shell_from_json(root, tol);
    std::vector<int> counts = sh.has_curves() ? sh.spatial_counts()
                                              : std::vector<int>{cfg.grid, cfg.grid, cfg.grid};
    Json config = config_json(cfg, Json{{"N", N}, {"nt", nt}});

    auto heatmap = [&](const Shell& s) {
        if (!s.has_curves()) return;
        std::string csv = "p1,p2,p3,count\n";
        for (int k = 0; k < s.curves().nodes(); ++k) {
            Vec3 p = s.grid_point(k);
            int count = s.in_ball(k)
                            ? static_cast<int>(detect_wiggles(s.curves().curve(k), tol).size())
                            : -1;
            csv += std::to_string(p[0]) + "," + std::to_string(p[1]) + "," +
                   std::to_string(p[2]) + "," + std::to_string(count) + "\n";
        }
        write_file(fs::path(cfg.out) / "wiggle_heatmap.csv", csv);
    };

    if (cfg.check == "engel") {
        ShellReport rep = check_engel_shell(sh, counts, nt, tol);
        Json j = shell_report_to_json(rep);
        j["config"] = config;
        write_report(cfg, j);
        return rep.pass && rep.cross_check_pass ? 0 : 1;
    }
    if (cfg.check == "convex") {
        bool ok = is_convex_shell(sh, counts, nt, tol);
        write_report(cfg, Json{{"pass", ok},
                               {"config", config},
                               {"tolerances", tolerances_to_json(tol)}});
        return ok ? 0 : 1;
    }
    if (cfg.check == "nconvex") {
        NConvexReport rep = is_N_convex(sh, N, counts, 97, tol);
        Json j = nconvex_report_to_json(rep);
        j["config"] = config;
        write_report(cfg, j);
        if (sh.has_curves()) write_file(fs::path(cfg.out) / "wiggle_heatmap.csv",
                                        wiggle_heatmap_csv(sh, rep));
        return rep.pass ? 0 : 1;
    }
    if (cfg.check == "solidify") {
        ShellHomotopy hom = solidify(sh, counts, 97, tol);
        Shell fin = hom.final_shell();
        write_file(fs::path(cfg.out) / "shell_out.json", shell_to_json(fin).dump(2) + "\n");
        heatmap(fin);
        ShellReport rep = check_engel_shell(fin, counts, nt, tol);
        Json j = shell_report_to_json(rep);
        j["config"] = config;
        j["schedule_end"] = hom.schedule_end();
        write_report(cfg, j);
        return rep.pass && rep.cross_check_pass ? 0 : 1;
    }
    throw SchemaError("shell: unknown --check \"" + cfg.check + "\"");
}

// --------------------------------------------------------------------------
// develop / loose

int run_develop(const RunConfig& cfg, const Tolerances& tol) {
    Json root = load_input(cfg.input);
    DevelopmentInput in = development_input(root);
    std::vector<Pt> points = points_from_json(
        root.contains("samples") ? root.at("samples") : Json::array(), "develop samples");
    if (!root.contains("T") || !root.at("T").is_number())
        throw SchemaError("develop: numeric \"T\" is required");
    double T = root.at("T").get<double>();

    DevelopmentReport rep = check_development_engel(in.D, in.Y, points, T, tol);
    for (std::size_t i = 0; i < points.size(); ++i) {
        DevelopmentCurve dev = develop(in.D, in.Y, points[i], T, tol);
        char name[40];
        std::snprintf(name, sizeof name, "development_trace_%03zu.csv", i);
        write_file(fs::path(cfg.out) / name, development_trace_csv(dev, tol));
    }
    Json j = development_report_to_json(rep);
    j["config"] = config_json(cfg, Json{{"T", T}});
    write_report(cfg, j);
    return rep.all_immersed && rep.cross_check_pass ? 0 : 1;
}

int run_loose(const RunConfig& cfg, const Tolerances& tol) {
    Json root = load_input(cfg.input);
    DevelopmentInput in = development_input(root);
    std::vector<Pt> points = points_from_json(
        root.contains("samples") ? root.at("samples") : Json::array(), "loose samples");
    if (!root.contains("N") || !root.at("N").is_number_integer())
        throw SchemaError("loose: integer \"N\" is required");
    if (!root.contains("T_max") || !root.at("T_max").is_number())
        throw SchemaError("loose: numeric \"T_max\" is required");
    int N = root.at("N").get<int>();
    double T_max = root.at("T_max").get<double>();

    LoosenessCertificate cert = certify_looseness(in.D, in.Y, N, points, T_max, tol);
    Json j = certificate_to_json(cert);
    j["config"] = config_json(cfg, Json{{"N", N}, {"T_max", T_max}});
    write_report(cfg, j);
    return cert.success ? 0 : 1;
}

// --------------------------------------------------------------------------
// prolong

struct ProlongArgs {
    std::string mode = "cartan";
    double r = 0.5;
    std::string base = "t3";
    int mtorus_n = 2;
    double s = 0.01;
    int N = 0;
};

const Json& expect_or(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(std::string("prolongation spec: missing required key \"") + key + "\"");
    return j.at(key);
}

int run_prolong(const RunConfig& cfg, const ProlongArgs& args, const Tolerances& tol) {
    ProlongationMode mode =
        args.mode == "lorentz" ? ProlongationMode::lorentz : ProlongationMode::cartan;
    ProlongationSpec spec;
    if (!cfg.input.empty()) {
        Json root = load_input(cfg.input);
        spec.base = chart_from_json(expect_or(root, "base"));
        spec.e1 = field_from_json(expect_or(root, "e1"));
        spec.e2 = field_from_json(expect_or(root, "e2"));
        spec.nu = field_from_json(expect_or(root, "nu"));
        std::string m = root.contains("mode") ? root.at("mode").get<std::string>() : "cartan";
        if (m != "cartan" && m != "lorentz")
            throw SchemaError("prolongation spec: mode must be cartan or lorentz");
        spec.mode = m == "lorentz" ? ProlongationMode::lorentz : ProlongationMode::cartan;
        spec.r = root.contains("r") ? root.at("r").get<double>() : 0.0;
    } else if (args.base == "t3") {
        spec = t3_spec(mode, args.r);
    } else if (args.base == "mtorus") {
        spec = mtorus_spec(args.mtorus_n, mode, args.r);
    } else if (args.base == "foliation") {
        spec = foliation_spec();
        spec.mode = mode;
        spec.r = args.r;
    } else {
        throw SchemaError("prolong: unknown --base \"" + args.base + "\"");
    }

    ProlongedStructure ps = build_prolongation(spec, tol);
    Json config = config_json(cfg, Json{{"mode", args.mode},
                                        {"r", spec.r},
                                        {"base", cfg.input.empty() ? args.base : "file"},
                                        {"s", args.s},
                                        {"N", args.N}});
    int g = cfg.grid;

    if (cfg.check == "engel") {
        SampleGrid grid(ps.total, {g, g, g, g});
        CheckReport rep = engel_check(ps.frame, grid, tol);
        Json j = report_to_json(rep);
        j["config"] = config;
        write_report(cfg, j);
        return rep.pass ? 0 : 1;
    }
    if (cfg.check == "kernel") {
        SampleGrid grid(ps.total, {g, g, g, g});
        SampledField kf = kernel_field(bracket_frame(ps), grid, tol);
        double max_angle = 0.0, min_angle = std::numbers::pi;
        for (const Vec& v : kf.values) {
            double ang = std::acos(std::min(1.0, std::abs(v[3])));
            max_angle = std::max(max_angle, ang);
            min_angle = std::min(min_angle, ang);
        }
        write_report(cfg, Json{{"pass", true},
                               {"samples", static_cast<int>(kf.values.size())},
                               {"max_angle_to_fiber", max_angle},
                               {"min_angle_to_fiber", min_angle},
                               {"config", config},
                               {"tolerances", tolerances_to_json(tol)}});
        return 0;
    }
    if (cfg.check == "develop") {
        // Fiber development from a small base lattice on the section.
        std::vector<Pt> points;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) {
                    Pt p;
                    p << ps.total.axis(0).lo + ps.total.axis(0).length() * (0.25 + 0.5 * i),
                        ps.total.axis(1).lo + ps.total.axis(1).length() * (0.25 + 0.5 * j),
                        ps.total.axis(2).lo + ps.total.axis(2).length() * (0.25 + 0.5 * k), 0.0;
                    points.push_back(p);
                }
        bool all_ok = true;
        Json per = Json::array();
        for (std::size_t i = 0; i < points.size(); ++i) {
            DevelopmentCurve dev = develop(ps.frame, ps.frame[0], points[i], kTwoPi, tol);
            bool immersed = is_immersed(dev.curve, tol);
            bool weakly = immersed && is_weakly_convex(dev.curve, tol);
            double kmin = 0.0, kmax = 0.0;
            if (immersed) {
                std::vector<double> ks = geodesic_curvature(dev.curve, tol);
                kmin = *std::min_element(ks.begin(), ks.end());
                kmax = *std::max_element(ks.begin(), ks.end());
            }
            all_ok = all_ok && immersed && weakly;
            per.push_back(Json{{"point", Json::array({points[i][0], points[i][1], points[i][2],
                                                      points[i][3]})},
                               {"immersed", immersed},
                               {"weakly_convex", weakly},
                               {"kg_min", kmin},
                               {"kg_max", kmax}});
            char name[40];
            std::snprintf(name, sizeof name, "fiber_development_%03zu.csv", i);
            write_file(fs::path(cfg.out) / name, development_trace_csv(dev, tol));
        }
        write_report(cfg, Json{{"pass", all_ok},
                               {"points", per},
                               {"config", config},
                               {"tolerances", tolerances_to_json(tol)}});
        return all_ok ? 0 : 1;
    }
    if (cfg.check == "returnmap") {
        int N = args.N > 0 ? args.N : n0_lower_bound(0);
        ReturnMapReport rep = return_map(ps, args.s, N, {5, 5, 5}, tol);
        Json j = return_map_to_json(rep);
        j["config"] = config;
        write_report(cfg, j);
        return rep.fixed_point_free ? 0 : 1;
    }
    if (cfg.check == "loose") {
        int N = args.N > 0 ? args.N : 3;
        LoosenessCertificate cert = certify_prolongation_looseness(ps, args.s, N, 0.0,
                                                                   {2, 2, 2, 2}, tol);
        Json j = certificate_to_json(cert);
        j["config"] = config;
        write_report(cfg, j);
        return cert.success ? 0 : 1;
    }
    throw SchemaError("prolong: unknown --check \"" + cfg.check + "\"");
}

// --------------------------------------------------------------------------
// n0

int run_n0(const RunConfig& cfg, int dimK, int overlap, bool has_overlap,
           const Tolerances& tol) {
    int n0 = has_overlap ? n0_lower_bound(dimK, overlap) : n0_lower_bound(dimK);
    Json j{{"pass", true},
           {"n0", n0},
           {"dim_K", dimK},
           {"config", config_json(cfg)},
           {"tolerances", tolerances_to_json(tol)}};
    if (has_overlap) j["D_overlap"] = overlap;
    write_report(cfg, j);
    std::cout << n0 << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"engel-lab: construct, deform and certify Engel structures on chart domains"};
    app.require_subcommand(1);

    RunConfig cfg;
    CurveArgs curve_args;
    ProlongArgs prolong_args;
    int shell_N = 1;
    int shell_nt = 33;
    int n0_dimK = 0;
    int n0_overlap = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "input JSON file");
        sub->add_option("--out", cfg.out, "output directory (default .)");
        sub->add_option("--tol", cfg.tol_overrides, "tolerance override KEY=VALUE (repeatable)");
        sub->add_option("--seed", cfg.seed, "deterministic seed");
        sub->add_option("--grid", cfg.grid, "grid density per axis")->check(CLI::Range(1, 64));
    };

    CLI::App* c_curve = app.add_subcommand("curve", "curve checks, surgeries and homotopies");
    add_common(c_curve);
    c_curve->add_option("--check", cfg.check, "verdict for the exit code: immersed|convex")
        ->check(CLI::IsMember({"immersed", "convex"}));
    c_curve->add_option("--insert", curve_args.insert, "insert loops: T0 N RHO")->expected(3);
    c_curve->add_option("--distribute", curve_args.distribute,
                        "run the sliding-wiggle schedule to time S (family input)");
    c_curve->add_option("--convexify", curve_args.convexify,
                        "convexify the family with the given loop density");
    c_curve->add_option("--margin", curve_args.margin, "parameter margin a for --distribute");
    c_curve->add_option("--node", curve_args.node, "family node for the homotopy trace");

    CLI::App* c_shell = app.add_subcommand("shell", "flowbox shell checks and solidification");
    add_common(c_shell);
    c_shell->add_option("--check", cfg.check, "engel|convex|nconvex|solidify")
        ->check(CLI::IsMember({"engel", "convex", "nconvex", "solidify"}));
    c_shell->add_option("--N", shell_N, "required early wiggle count for nconvex");
    c_shell->add_option("--nt", shell_nt, "samples along t")->check(CLI::Range(5, 513));

    CLI::App* c_develop = app.add_subcommand("develop", "development curves along a line field");
    add_common(c_develop);

    CLI::App* c_loose = app.add_subcommand("loose", "looseness certification");
    add_common(c_loose);

    CLI::App* c_prolong = app.add_subcommand("prolong", "prolongations over framed contact bases");
    add_common(c_prolong);
    c_prolong->add_option("--check", cfg.check, "engel|kernel|develop|returnmap|loose")
        ->check(CLI::IsMember({"engel", "kernel", "develop", "returnmap", "loose"}));
    c_prolong->add_option("--mode", prolong_args.mode, "cartan|lorentz")
        ->check(CLI::IsMember({"cartan", "lorentz"}));
    c_prolong->add_option("--r", prolong_args.r, "lorentz cone ratio");
    c_prolong->add_option("--base", prolong_args.base, "t3|mtorus|foliation")
        ->check(CLI::IsMember({"t3", "mtorus", "foliation"}));
    c_prolong->add_option("--mtorus-n", prolong_args.mtorus_n, "mapping torus rotation speed")
        ->check(CLI::Range(1, 16));
    c_prolong->add_option("--s", prolong_args.s, "fiber field tilt");
    c_prolong->add_option("--N", prolong_args.N, "iterates / required wiggles");

    CLI::App* c_n0 = app.add_subcommand("n0", "wiggle budget for the bootstrapping bound");
    add_common(c_n0);
    c_n0->add_option("--dimK", n0_dimK, "parameter space dimension")
        ->required()
        ->check(CLI::NonNegativeNumber);
    CLI::Option* overlap_opt =
        c_n0->add_option("--overlap", n0_overlap, "overlap multiplicity")
            ->check(CLI::NonNegativeNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    Tolerances tol;
    try {
        tol = parse_tolerances(cfg.tol_overrides);
        if (app.got_subcommand(c_curve)) {
            cfg.subcommand = "curve";
            if (cfg.check.empty()) cfg.check = "convex";
            return run_curve(cfg, curve_args, tol);
        }
        if (app.got_subcommand(c_shell)) {
            cfg.subcommand = "shell";
            if (cfg.check.empty()) cfg.check = "engel";
            if (c_shell->count("--grid") == 0) cfg.grid = 5;
            if (cfg.grid < 2) throw SchemaError("shell: --grid must be at least 2");
            return run_shell(cfg, shell_N, shell_nt, tol);
        }
        if (app.got_subcommand(c_develop)) {
            cfg.subcommand = "develop";
            return run_develop(cfg, tol);
        }
        if (app.got_subcommand(c_loose)) {
            cfg.subcommand = "loose";
            return run_loose(cfg, tol);
        }
        if (app.got_subcommand(c_prolong)) {
            cfg.subcommand = "prolong";
            if (cfg.check.empty()) cfg.check = "engel";
            if (c_prolong->count("--grid") == 0) cfg.grid = 8;
            if (cfg.grid != 1 && cfg.grid < 8)
                throw SchemaError("prolong: --grid must be 1 or at least 8");
            return run_prolong(cfg, prolong_args, tol);
        }
        if (app.got_subcommand(c_n0)) {
            cfg.subcommand = "n0";
            return run_n0(cfg, n0_dimK, n0_overlap, overlap_opt->count() > 0, tol);
        }
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        try {
            write_report(cfg, Json{{"pass", false},
                                   {"error", e.what()},
                                   {"config", config_json(cfg)},
                                   {"tolerances", tolerances_to_json(tol)}});
        } catch (const std::exception&) {
            // Report directory unusable; the exit code still carries the verdict.
        }
        return 1;
    }
}
