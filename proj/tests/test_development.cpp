#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "engel/development.hpp"
#include "engel/prolong.hpp"

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

using namespace engel;

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

ChartDomain flowbox_chart() {
    return ChartDomain({Axis{var_index("x"), -1, 1, false}, Axis{var_index("y"), -1, 1, false},
                        Axis{var_index("z"), -1, 1, false}, Axis{var_index("t"), 0, 1, false}});
}

VectorFieldDef field(const ChartDomain& ch, std::initializer_list<std::string> comps) {
    std::vector<Expr> es;
    for (const std::string& c : comps) es.push_back(Expr::parse(c));
    return VectorFieldDef(ch, std::move(es));
}

// Flowbox plane frame < d/dt, X(t) > where X traces the circle of spherical
// radius rho0 around the z axis, `windings` turns per unit time.
std::vector<VectorFieldDef> circle_flowbox(double rho0, double windings,
                                           const ChartDomain& ch) {
    double w = 2 * M_PI * windings;
    VectorFieldDef X = field(ch, {num(std::sin(rho0)) + "*cos(" + num(w) + "*t)",
                                  num(std::sin(rho0)) + "*sin(" + num(w) + "*t)",
                                  num(std::cos(rho0)), "0"});
    return {field(ch, {"0", "0", "0", "1"}), X};
}

}  // namespace

TEST_CASE("flow segments match closed-form flows with transports") {
    ChartDomain ch({Axis{var_index("x"), -2, 2, false}, Axis{var_index("y"), -2, 2, false},
                    Axis{var_index("z"), -2, 2, false}, Axis{var_index("t"), 0, 1, false}});
    // Rotation about the z axis: flow is the rotation by T, and so is the
    // transport of the variational equation.
    VectorFieldDef Y = field(ch, {"0 - y", "x", "0", "0"});
    Pt p(1, 0, 0, 0);
    double T = 0.5;
    FlowSegment seg = flow_segment(Y, p, T);
    REQUIRE(!seg.points.empty());
    CHECK(seg.times.back() == doctest::Approx(T));
    Pt q = seg.points.back();
    CHECK(q[0] == doctest::Approx(std::cos(T)).epsilon(1e-8));
    CHECK(q[1] == doctest::Approx(std::sin(T)).epsilon(1e-8));
    CHECK(std::abs(q[2]) < 1e-10);
    Mat4 A = seg.transports.back();
    CHECK(A(0, 0) == doctest::Approx(std::cos(T)).epsilon(1e-7));
    CHECK(A(0, 1) == doctest::Approx(-std::sin(T)).epsilon(1e-7));
    CHECK(A(1, 0) == doctest::Approx(std::sin(T)).epsilon(1e-7));
    CHECK(A(2, 2) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(seg.delta_emb > 1e-3);  // short arc, clearly embedded

    // Transports compose along concatenated segments.
    FlowSegment full = flow_segment(Y, p, 2 * T);
    FlowSegment tail = flow_segment(Y, seg.points.back(), T);
    Mat4 composed = tail.transports.back() * seg.transports.back();
    CHECK((full.transports.back() - composed).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("flows that exit the chart raise FlowEscape") {
    ChartDomain ch = flowbox_chart();
    VectorFieldDef Y = field(ch, {"1", "0", "0", "0"});
    CHECK_THROWS_AS(flow_segment(Y, Pt(0.9, 0, 0, 0), 1.0), FlowEscape);
    CHECK_NOTHROW(flow_segment(Y, Pt(-0.9, 0, 0, 0), 1.0));
}

TEST_CASE("a closed orbit is flagged by a collapsing embeddedness margin") {
    ChartDomain ch({Axis{var_index("x"), -2, 2, false}, Axis{var_index("y"), -2, 2, false},
                    Axis{var_index("z"), -2, 2, false}, Axis{var_index("t"), 0, 1, false}});
    VectorFieldDef Y = field(ch, {"0 - y", "x", "0", "0"});
    FlowSegment loop = flow_segment(Y, Pt(1, 0, 0, 0), 2 * M_PI + 0.2);
    CHECK(loop.delta_emb < 1e-3);
}

TEST_CASE("the flowbox development reproduces the slice curve's curvature") {
    ChartDomain ch = flowbox_chart();
    double rho0 = 0.7;
    auto D = circle_flowbox(rho0, 1.5, ch);
    DevelopmentCurve dev = develop(D, D[0], Pt(0, 0, 0, 0), 1.0);
    CHECK(dev.curve.size() >= 65);
    CHECK(is_immersed(dev.curve));
    std::vector<double> ks = geodesic_curvature(dev.curve);
    // End samples use one-sided difference stencils, hence the looser bound.
    for (double k : ks) CHECK(k == doctest::Approx(1.0 / std::tan(rho0)).epsilon(1e-3));
    for (std::size_t i = 2; i + 2 < ks.size(); ++i)
        CHECK(ks[i] == doctest::Approx(1.0 / std::tan(rho0)).epsilon(1e-4));
    // 1.5 windings at frame rate 1 per angle unit.
    CHECK(total_curvature(dev.curve) == doctest::Approx(3 * M_PI).epsilon(1e-4));
    CHECK(is_convex(dev.curve));
}

TEST_CASE("development is invariant under rescaling of the line field") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.6, 1.0, ch);
    DevelopmentCurve ref = develop(D, D[0], Pt(0, 0, 0, 0), 0.9);
    double kref = geodesic_curvature(ref.curve)[0];
    for (double lam : {0.5, 2.0, 3.0}) {
        VectorFieldDef Yl = field(ch, {"0", "0", "0", num(lam)});
        DevelopmentCurve dev = develop(D, Yl, Pt(0, 0, 0, 0), 0.9 / lam);
        std::vector<double> ks = geodesic_curvature(dev.curve);
        CHECK(ks.front() == doctest::Approx(kref).epsilon(1e-5));
        CHECK(ks.back() == doctest::Approx(kref).epsilon(1e-5));
        CHECK(total_curvature(dev.curve) ==
              doctest::Approx(total_curvature(ref.curve)).epsilon(1e-4));
    }
}

TEST_CASE("development curvature is invariant under spatial rotations") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.7, 1.5, ch);
    // Rotate the slice field about z by a fixed angle.
    double a = 0.83;
    std::string c = num(std::cos(a)), s = num(std::sin(a));
    const std::vector<Expr>& xc = D[1].components();
    VectorFieldDef XR(ch, {Expr::parse(c + "*(" + xc[0].str() + ") - " + s + "*(" + xc[1].str() + ")"),
                           Expr::parse(s + "*(" + xc[0].str() + ") + " + c + "*(" + xc[1].str() + ")"),
                           xc[2], xc[3]});
    std::vector<VectorFieldDef> DR = {D[0], XR};
    DevelopmentCurve dev = develop(D, D[0], Pt(0, 0, 0, 0), 1.0);
    DevelopmentCurve devR = develop(DR, DR[0], Pt(0, 0, 0, 0), 1.0);
    REQUIRE(dev.curve.size() == devR.curve.size());
    std::vector<double> k1 = geodesic_curvature(dev.curve);
    std::vector<double> k2 = geodesic_curvature(devR.curve);
    for (std::size_t i = 0; i < k1.size(); ++i)
        CHECK(k1[i] == doctest::Approx(k2[i]).epsilon(1e-6));
}

TEST_CASE("prolonged cone structures develop to circles of curvature r") {
    for (double r : {0.1, 0.5, 1.0}) {
        ProlongedStructure ps = build_prolongation(t3_spec(ProlongationMode::lorentz, r));
        for (const Pt& p : {Pt(0.3, 1.0, 2.0, 0.0), Pt(4.0, 0.7, 5.5, 1.2)}) {
            DevelopmentCurve dev = develop(ps.frame, ps.frame[0], p, 2 * M_PI);
            std::vector<double> ks = geodesic_curvature(dev.curve);
            for (double k : ks) CHECK(k == doctest::Approx(r).epsilon(5e-4));
        }
    }
    // The cartan cone develops to great circles: weakly convex, never convex.
    ProlongedStructure ps = build_prolongation(t3_spec(ProlongationMode::cartan));
    DevelopmentCurve dev = develop(ps.frame, ps.frame[0], Pt(0.3, 1.0, 2.0, 0.0), 2 * M_PI);
    CHECK(is_weakly_convex(dev.curve));
    CHECK(!is_convex(dev.curve));
    for (double k : geodesic_curvature(dev.curve)) CHECK(std::abs(k) < 5e-4);
}

TEST_CASE("a slice field that dies along the flow is a tangency") {
    ChartDomain ch = flowbox_chart();
    std::vector<VectorFieldDef> D = {field(ch, {"0", "0", "0", "1"}),
                                     field(ch, {"t - 0.5", "0", "0", "0"})};
    CHECK_THROWS_AS(develop(D, D[0], Pt(0, 0, 0, 0), 1.0), TangencyToY);
}

TEST_CASE("check_development_engel cross-checks immersion against rank") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.7, 1.5, ch);
    std::vector<Pt> pts = {Pt(0, 0, 0, 0), Pt(0.4, -0.3, 0.2, 0.0), Pt(-0.5, 0.5, -0.5, 0.0)};
    DevelopmentReport rep = check_development_engel(D, D[0], pts, 1.0);
    CHECK(rep.all_immersed);
    CHECK(rep.all_convex);
    CHECK(rep.cross_check_pass);
    CHECK(rep.disagreements == 0);
    REQUIRE(rep.points.size() == 3);
    for (const auto& pc : rep.points) {
        CHECK(pc.immersed);
        CHECK(pc.convex);
        CHECK(pc.flow_samples >= 65);
    }
}

TEST_CASE("certify_looseness collects windings as wiggles") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.7, 3.0, ch);  // three windings over the full box
    LoosenessCertificate cert =
        certify_looseness(D, D[0], 1, {Pt(0, 0, 0, 0.05)}, 0.9);
    CHECK(cert.success);
    REQUIRE(cert.witnesses.size() == 1);
    CHECK(cert.witnesses[0].wiggle_count >= 1);
    CHECK(cert.witnesses[0].delta_emb > 1e-3);
    CHECK(cert.required == 1);

    // Demanding more wiggles than the horizon can hold fails with the
    // time-horizon diagnosis.
    LoosenessCertificate more =
        certify_looseness(D, D[0], 50, {Pt(0, 0, 0, 0.05)}, 0.9);
    CHECK(!more.success);
    CHECK(more.best_count >= 1);
    CHECK(!more.diagnosis.empty());
    CHECK(!more.closed_orbit_suspected);
}

TEST_CASE("certify_looseness diagnoses a flow that leaves the chart") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.7, 3.0, ch);
    // Even the smallest ladder rung exits through t = 1.
    LoosenessCertificate cert =
        certify_looseness(D, D[0], 2, {Pt(0, 0, 0, 0.95)}, 8.0);
    CHECK(!cert.success);
    CHECK(cert.best_count == 0);
    CHECK(cert.diagnosis.find("leaves the chart") != std::string::npos);
    CHECK(!cert.closed_orbit_suspected);
}

TEST_CASE("certify_looseness requires convex developments") {
    ChartDomain ch = flowbox_chart();
    // The equator circle develops with zero curvature: weakly convex only.
    auto D = circle_flowbox(M_PI / 2, 1.5, ch);
    CHECK_THROWS_AS(certify_looseness(D, D[0], 1, {Pt(0, 0, 0, 0)}, 0.9), NotConvex);
}

TEST_CASE("certify_looseness validates its arguments") {
    ChartDomain ch = flowbox_chart();
    auto D = circle_flowbox(0.7, 1.5, ch);
    CHECK_THROWS_AS(certify_looseness(D, D[0], 0, {Pt(0, 0, 0, 0)}, 1.0), DomainError);
    CHECK_THROWS_AS(certify_looseness(D, D[0], 1, {Pt(0, 0, 0, 0)}, 0.0), DomainError);
}

TEST_CASE("the wiggle budget follows the dimension bound") {
    CHECK(n0_lower_bound(0) == 9);
    CHECK(n0_lower_bound(1) == 11);
    CHECK(n0_lower_bound(7) == 23);
    CHECK(n0_lower_bound(1, 2) == 15);
    CHECK(n0_lower_bound(0, 0) == 9);
    CHECK_THROWS_AS(n0_lower_bound(-1), DomainError);
    CHECK_THROWS_AS(n0_lower_bound(1, -2), DomainError);
}
