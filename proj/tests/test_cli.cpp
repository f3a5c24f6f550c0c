#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "engel/json_io.hpp"

#include "helpers.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace engel;
namespace fs = std::filesystem;
using testutil::circle_curve;

namespace {

// Each case works in its own directory so reports never collide.
fs::path case_dir(const std::string& name) {
    fs::path dir = fs::current_path() / ("cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    std::string cmd = std::string("\"") + ENGEL_LAB_PATH + "\" " + args;
    int rc = std::system(cmd.c_str());
    if (rc == -1) return -1;
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json read_report(const fs::path& dir) { return Json::parse(read_text(dir / "report.json")); }

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ChartDomain box4() {
    return ChartDomain({Axis{var_index("x"), -1, 1, false}, Axis{var_index("y"), -1, 1, false},
                        Axis{var_index("z"), -1, 1, false}, Axis{var_index("t"), 0, 1, false}});
}

Json flowbox_develop_input(double rho0, double windings) {
    ChartDomain ch = box4();
    double w = 2 * M_PI * windings;
    VectorFieldDef T(ch, {Expr::parse("0"), Expr::parse("0"), Expr::parse("0"), Expr::parse("1")});
    VectorFieldDef X(ch, {Expr::parse(num(std::sin(rho0)) + "*cos(" + num(w) + "*t)"),
                          Expr::parse(num(std::sin(rho0)) + "*sin(" + num(w) + "*t)"),
                          Expr::parse(num(std::cos(rho0))), Expr::parse("0")});
    return Json{{"D", Json::array({field_to_json(T), field_to_json(X)})},
                {"Y", field_to_json(T)},
                {"samples", Json::array({Json::array({0.0, 0.0, 0.0, 0.0})})},
                {"T", 1.0}};
}

}  // namespace

TEST_CASE("n0 reports the wiggle budget") {
    fs::path dir = case_dir("n0");
    int rc = run_cli("n0 --dimK 0 --out \"" + dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("n0") == 9);
    CHECK(rep.at("dim_K") == 0);
    CHECK(!rep.contains("D_overlap"));

    fs::path dir2 = case_dir("n0_overlap");
    rc = run_cli("n0 --dimK 1 --overlap 2 --out \"" + dir2.string() + "\"");
    CHECK(rc == 0);
    Json rep2 = read_report(dir2);
    CHECK(rep2.at("n0") == 15);
    CHECK(rep2.at("D_overlap") == 2);
}

TEST_CASE("curve subcommand certifies a convex circle") {
    fs::path dir = case_dir("curve_convex");
    SphereCurve c = circle_curve(Vec3(0, 0, 1), 0.8, 256, 0.0, 2 * M_PI);
    write_text(dir / "curve.json", curve_to_json(c).dump());
    int rc = run_cli("curve --check convex --input \"" + (dir / "curve.json").string() +
                     "\" --out \"" + dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("convex").get<bool>());
    CHECK(rep.at("wiggle_count") == 0);
    CHECK(rep.at("config").at("subcommand") == "curve");
    CHECK(fs::exists(dir / "curvature_profile.csv"));
    CHECK(fs::exists(dir / "wiggle_table.csv"));
}

TEST_CASE("curve subcommand rejects a geodesic under --check convex") {
    fs::path dir = case_dir("curve_equator");
    SphereCurve c = circle_curve(Vec3(0, 0, 1), M_PI / 2, 256, 0.0, 2 * M_PI);
    write_text(dir / "curve.json", curve_to_json(c).dump());
    int rc = run_cli("curve --check convex --input \"" + (dir / "curve.json").string() +
                     "\" --out \"" + dir.string() + "\"");
    CHECK(rc == 1);
    Json rep = read_report(dir);
    CHECK(!rep.at("pass").get<bool>());
    CHECK(rep.at("immersed").get<bool>());
    CHECK(!rep.at("convex").get<bool>());
    CHECK(rep.at("weakly_convex").get<bool>());
}

TEST_CASE("curve --insert performs the surgery and keeps the curve convex") {
    fs::path dir = case_dir("curve_insert");
    SphereCurve c = circle_curve(Vec3(0, 0, 1), 0.8, 256, 0.0, 2 * M_PI);
    write_text(dir / "curve.json", curve_to_json(c).dump());
    int rc = run_cli("curve --check convex --insert 3.14159265 1 0.1 --input \"" +
                     (dir / "curve.json").string() + "\" --out \"" + dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("wiggle_count") == 1);
    REQUIRE(fs::exists(dir / "curve_out.json"));
    SphereCurve out = curve_from_json(Json::parse(read_text(dir / "curve_out.json")));
    CHECK(out.size() > c.size());

    // An impossible loop radius is a library failure: exit 1 with a report.
    fs::path dir2 = case_dir("curve_insert_bad");
    write_text(dir2 / "curve.json", curve_to_json(c).dump());
    rc = run_cli("curve --insert 3.14159265 1 2.5 --input \"" + (dir2 / "curve.json").string() +
                 "\" --out \"" + dir2.string() + "\"");
    CHECK(rc == 1);
    Json rep2 = read_report(dir2);
    CHECK(!rep2.at("pass").get<bool>());
    CHECK(rep2.contains("error"));
}

TEST_CASE("malformed input JSON exits 2 without a report") {
    fs::path dir = case_dir("bad_json");
    write_text(dir / "curve.json", "{ not json");
    int rc = run_cli("curve --input \"" + (dir / "curve.json").string() + "\" --out \"" +
                     dir.string() + "\"");
    CHECK(rc == 2);
    CHECK(!fs::exists(dir / "report.json"));
}

TEST_CASE("tolerance overrides are validated and echoed") {
    fs::path dir = case_dir("tol_bad");
    SphereCurve c = circle_curve(Vec3(0, 0, 1), 0.8, 64, 0.0, 2 * M_PI);
    write_text(dir / "curve.json", curve_to_json(c).dump());
    std::string base = "curve --input \"" + (dir / "curve.json").string() + "\" --out \"" +
                       dir.string() + "\"";
    CHECK(run_cli(base + " --tol zork=1") == 2);
    CHECK(run_cli(base + " --tol k_min=0") == 2);
    CHECK(run_cli(base + " --tol k_min") == 2);

    fs::path dir2 = case_dir("tol_good");
    write_text(dir2 / "curve.json", curve_to_json(c).dump());
    int rc = run_cli("curve --input \"" + (dir2 / "curve.json").string() + "\" --out \"" +
                     dir2.string() + "\" --tol k_min=0.5");
    CHECK(rc == 0);
    Json rep = read_report(dir2);
    CHECK(rep.at("tolerances").at("k_min").get<double>() == doctest::Approx(0.5));
}

TEST_CASE("family inputs accept family-only flags") {
    SphereCurve a = circle_curve(Vec3(0, 0, 1), 0.8, 64, 0.0, 1.0);
    SphereCurve b = circle_curve(Vec3(0, 0, 1), 0.5, 64, 0.0, 1.0);
    CurveFamily F({2}, {a, b});

    fs::path dir = case_dir("family_plain");
    write_text(dir / "family.json", family_to_json(F).dump());
    int rc = run_cli("curve --input \"" + (dir / "family.json").string() + "\" --out \"" +
                     dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("nodes") == 2);
    CHECK(rep.at("all_convex").get<bool>());

    // --insert only applies to single curves.
    fs::path dir2 = case_dir("family_insert");
    write_text(dir2 / "family.json", family_to_json(F).dump());
    rc = run_cli("curve --insert 0.5 1 0.05 --input \"" + (dir2 / "family.json").string() +
                 "\" --out \"" + dir2.string() + "\"");
    CHECK(rc == 2);

    // The two homotopy drivers are mutually exclusive.
    fs::path dir3 = case_dir("family_both");
    write_text(dir3 / "family.json", family_to_json(F).dump());
    rc = run_cli("curve --distribute 2 --convexify 1 --input \"" +
                 (dir3 / "family.json").string() + "\" --out \"" + dir3.string() + "\"");
    CHECK(rc == 2);
}

TEST_CASE("prolong subcommand separates contact and integrable bases") {
    fs::path dir = case_dir("prolong_t3");
    int rc = run_cli("prolong --base t3 --check engel --grid 8 --out \"" + dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("min_margin").get<double>() > 1e-3);
    CHECK(rep.at("config").at("base") == "t3");

    fs::path dir2 = case_dir("prolong_foliation");
    rc = run_cli("prolong --base foliation --check engel --grid 8 --out \"" + dir2.string() +
                 "\"");
    CHECK(rc == 1);
    Json rep2 = read_report(dir2);
    CHECK(!rep2.at("pass").get<bool>());

    // Grid values between 2 and 7 are rejected for prolongations.
    CHECK(run_cli("prolong --base t3 --check engel --grid 4 --out \"" + dir.string() + "\"") ==
          2);
}

TEST_CASE("develop subcommand writes per-point traces") {
    fs::path dir = case_dir("develop");
    write_text(dir / "input.json", flowbox_develop_input(0.7, 1.5).dump());
    int rc = run_cli("develop --input \"" + (dir / "input.json").string() + "\" --out \"" +
                     dir.string() + "\"");
    CHECK(rc == 0);
    Json rep = read_report(dir);
    CHECK(rep.at("pass").get<bool>());
    CHECK(rep.at("all_immersed").get<bool>());
    CHECK(rep.at("cross_check_pass").get<bool>());
    REQUIRE(fs::exists(dir / "development_trace_000.csv"));
    std::string trace = read_text(dir / "development_trace_000.csv");
    CHECK(trace.rfind("t,g1,g2,g3,k_g\n", 0) == 0);

    // Missing the horizon is a schema failure.
    fs::path dir2 = case_dir("develop_no_T");
    Json in = flowbox_develop_input(0.7, 1.5);
    in.erase("T");
    write_text(dir2 / "input.json", in.dump());
    CHECK(run_cli("develop --input \"" + (dir2 / "input.json").string() + "\" --out \"" +
                  dir2.string() + "\"") == 2);
}

TEST_CASE("identical configurations produce byte-identical reports") {
    fs::path a = case_dir("det_a");
    fs::path b = case_dir("det_b");
    CHECK(run_cli("prolong --base t3 --check engel --grid 8 --out \"" + a.string() + "\"") == 0);
    CHECK(run_cli("prolong --base t3 --check engel --grid 8 --out \"" + b.string() + "\"") == 0);
    CHECK(read_text(a / "report.json") == read_text(b / "report.json"));
    CHECK(!read_text(a / "report.json").empty());
}
