#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "engel/geom.hpp"
#include "engel/surgery.hpp"

#include "helpers.hpp"

#include <cmath>
#include <vector>

using namespace engel;
using testutil::circle_curve;
using testutil::frame_curve;
using testutil::max_probe_diff;
using testutil::max_sample_diff;

namespace {

SphereCurve host_circle(int nsamples = 256, double rho = 0.8) {
    return circle_curve(Vec3(0, 0, 1), rho, nsamples);
}

// Convex host that never recurs: slowly modulated curvature precesses the
// trajectory, so loop detection sees only what surgery inserted.
SphereCurve spiral_host() {
    auto k = [](double t) { return 1.0 + 0.3 * std::sin(0.5 * t + 1.0); };
    return frame_curve(k, 1.0, 0.0, 12.0, 1200, Vec3(0, 0, 1), Vec3(1, 0, 0));
}

SphereCurve rotate_curve(const SphereCurve& c, const Mat3& R) {
    std::vector<Vec3> gs, d1s, d2s;
    for (int i = 0; i < c.size(); ++i) {
        gs.push_back(R * c.point(i));
        d1s.push_back(R * c.derivative(i));
        d2s.push_back(R * c.second_derivative(i));
    }
    SphereCurve out(c.params(), std::move(gs), c.orientation());
    out.set_jets(std::move(d1s), std::move(d2s));
    return out;
}

}  // namespace

TEST_CASE("insert_wiggles adds the requested loops and keeps convexity") {
    SphereCurve c = host_circle();
    for (int n : {1, 2, 3}) {
        for (double rho : {0.05, 0.1}) {
            CAPTURE(n);
            CAPTURE(rho);
            SphereCurve out = insert_wiggles(c, M_PI, n, rho);
            CHECK(out.t_begin() == doctest::Approx(c.t_begin()));
            CHECK(out.t_end() == doctest::Approx(c.t_end()));
            CHECK(is_immersed(out));
            CHECK(is_convex(out));
            std::vector<Wiggle> ws = detect_wiggles(out);
            CHECK(static_cast<int>(ws.size()) == n);
            for (const Wiggle& w : ws) {
                CHECK(w.rho == doctest::Approx(rho).epsilon(0.15));
                CHECK(std::abs((w.a + w.b) / 2 - M_PI) < 0.6);
            }
            // Turning number grows by exactly one winding per loop.
            CHECK(total_curvature(out) ==
                  doctest::Approx(2 * M_PI * (n + 1)).epsilon(0.01));
        }
    }
}

TEST_CASE("insert_wiggles is supported in a window around the cut") {
    SphereCurve c = host_circle();
    for (double rho : {0.05, 0.1}) {
        SphereCurve out = insert_wiggles(c, M_PI, 2, rho);
        CHECK(max_probe_diff(out, c, 0.0, M_PI - 0.5) < 1e-9);
        CHECK(max_probe_diff(out, c, M_PI + 0.5, 2 * M_PI) < 1e-9);
        // And it really does something inside.
        CHECK(max_probe_diff(out, c, M_PI - 0.3, M_PI + 0.3) > rho / 2);
    }
}

TEST_CASE("insert_wiggles commutes with rotations") {
    SphereCurve c = host_circle();
    Mat3 R = rotation_about(Vec3(1, 2, -1).normalized(), 0.83);
    SphereCurve rotated_host = rotate_curve(c, R);
    SphereCurve out_then_rotate = rotate_curve(insert_wiggles(c, M_PI, 1, 0.07), R);
    SphereCurve rotate_then_out = insert_wiggles(rotated_host, M_PI, 1, 0.07);
    CHECK(max_sample_diff(out_then_rotate, rotate_then_out) < 1e-9);
}

TEST_CASE("insert_wiggles n = 0 returns the curve unchanged") {
    SphereCurve c = host_circle();
    CHECK(max_sample_diff(insert_wiggles(c, M_PI, 0, 0.1), c) == doctest::Approx(0.0));
}

TEST_CASE("oversized or ill-placed loops do not fit") {
    SphereCurve c = host_circle();
    CHECK_THROWS_AS(insert_wiggles(c, M_PI, 1, 2.0), LoopDoesNotFit);
    CHECK_THROWS_AS(insert_wiggles(c, M_PI, 1, -0.1), LoopDoesNotFit);
    // Window cannot reach around a cut too close to the boundary.
    CHECK_THROWS_AS(insert_wiggles(c, 0.05, 1, 0.3), LoopDoesNotFit);
}

TEST_CASE("cutting at a stationary point is rejected") {
    // phi(t) = t - sin(t) has zero speed at t = 0.
    double rho = 0.8;
    std::vector<double> ts;
    std::vector<Vec3> gs, d1s, d2s;
    int n = 257;
    for (int i = 0; i < n; ++i) {
        double t = -2.0 + 4.0 * i / (n - 1);
        double phi = t - std::sin(t);
        double dphi = 1.0 - std::cos(t);
        double ddphi = std::sin(t);
        Vec3 u(std::cos(phi), std::sin(phi), 0);
        Vec3 du(-std::sin(phi), std::cos(phi), 0);
        ts.push_back(t);
        gs.push_back(std::sin(rho) * u + std::cos(rho) * Vec3(0, 0, 1));
        d1s.push_back(std::sin(rho) * dphi * du);
        d2s.push_back(std::sin(rho) * (ddphi * du - dphi * dphi * u));
    }
    SphereCurve c(ts, gs, 1);
    c.set_jets(d1s, d2s);
    CHECK_THROWS_AS(insert_wiggles(c, 0.0, 1, 0.1), NotImmersedAtCutPoint);
}

TEST_CASE("coil_segment connects the endpoints carrying its loops") {
    Vec3 p0(1, 0, 0), p1(0, 1, 0);
    for (int m : {1, 3}) {
        SphereCurve c = coil_segment(p0, p1, m, 0.1);
        CHECK((c.point(0) - p0).norm() < 1e-6);
        CHECK((c.point(c.size() - 1) - p1).norm() < 1e-6);
        CHECK(is_convex(c));
        CHECK(static_cast<int>(detect_wiggles(c).size()) == m);
        double worst = 0.0;
        for (int i = 0; i < c.size(); ++i)
            worst = std::max(worst, testutil::arc_distance(c.point(i), p0, p1));
        CHECK(worst <= 2 * 0.1 + 0.01);
    }
}

TEST_CASE("coil_segment rejects impossible inputs") {
    Vec3 p0(1, 0, 0), p1(0, 1, 0);
    CHECK_THROWS_AS(coil_segment(p0, p1, 100, 0.1), Overcrowded);
    CHECK_THROWS_AS(coil_segment(p0, p0, 1, 0.1), DomainError);
}

TEST_CASE("little_homotopy turns one loop into three through convex curves") {
    SphereCurve host = spiral_host();
    REQUIRE(detect_wiggles(host).empty());
    SphereCurve c = insert_wiggles(host, 6.0, 1, 0.06);
    std::vector<Wiggle> ws = detect_wiggles(c);
    REQUIRE(ws.size() == 1);

    std::vector<SphereCurve> path = little_homotopy(c, ws[0], 16);
    REQUIRE(path.size() == 17);
    CHECK(max_sample_diff(path.front(), c) == doctest::Approx(0.0));
    for (const SphereCurve& step : path) {
        CHECK(is_convex(step));
    }
    CHECK(detect_wiggles(path.back()).size() == 3);

    // Supported near the loop: the flanks and everything beyond are pinned.
    CHECK(max_probe_diff(path.back(), c, 0.0, 2.5) < 1e-9);
    CHECK(max_probe_diff(path.back(), c, 9.5, 12.0) < 1e-9);
}

TEST_CASE("little_homotopy validates its hypotheses") {
    SphereCurve host = spiral_host();
    SphereCurve c = insert_wiggles(host, 6.0, 1, 0.06);
    Wiggle w = detect_wiggles(c)[0];
    CHECK_THROWS_AS(little_homotopy(c, w, 4), DomainError);
    Wiggle off = w;
    off.rho *= 2.0;
    CHECK_THROWS_AS(little_homotopy(c, off, 16), NonStandardWiggle);
    Wiggle mangled = w;
    mangled.ia = 0;
    mangled.ib = 3;
    CHECK_THROWS_AS(little_homotopy(c, mangled, 16), NonStandardWiggle);
    SphereCurve concave = c.reversed_orientation();
    CHECK_THROWS_AS(little_homotopy(concave, w, 16), NotConvex);
}

TEST_CASE("distribute_wiggles slides margin loops across the interior") {
    // Family over [0, 1]: one winding with a margin loop at a = 0.1.
    double a = 0.1;
    SphereCurve base = circle_curve(Vec3(0, 0, 1), 0.8, 512, 0.0, 1.0);
    SphereCurve seeded = insert_wiggles(base, a, 1, 0.04);
    REQUIRE(detect_wiggles(seeded).size() == 1);
    std::vector<SphereCurve> nodes(5, seeded);
    nodes[0] = base;  // frozen plain node
    CurveFamily F({5}, nodes);
    F.set_frozen({1, 0, 0, 0, 0});

    WiggleSchedule sched = distribute_wiggles(F, a, 6.0);
    CHECK(sched.margin() == doctest::Approx(a));
    CHECK(sched.s_max() == doctest::Approx(6.0));
    CHECK(sched.ramp(0) == doctest::Approx(0.0));
    CHECK(sched.ramp(4) == doctest::Approx(1.0));
    CHECK(sched.near_frozen(1));
    CHECK(!sched.near_frozen(4));
    CHECK(sched.spacing_constant() > 0.0);

    // s = 0 reproduces the family; frozen nodes never move.
    for (int k = 0; k < 5; ++k)
        CHECK(max_sample_diff(sched.at(k, 0.0), F.curve(k)) == doctest::Approx(0.0));
    CHECK(max_sample_diff(sched.at(0, 5.0), base) == doctest::Approx(0.0));

    // Integer times: 2n + 1 loops at a full-speed node, slid radius 1/n.
    for (int n : {2, 4}) {
        SphereCurve cn = sched.at(4, static_cast<double>(n));
        CHECK(is_immersed(cn));
        std::vector<Wiggle> ws = detect_wiggles(cn);
        CHECK(static_cast<int>(ws.size()) == 2 * n + 1);
        int slid = 0;
        for (const Wiggle& w : ws) {
            double mid = (w.a + w.b) / 2;
            CHECK(mid > 0.03);
            CHECK(mid < 1.0 - 0.9 * a);
            if (std::abs(w.rho - 1.0 / n) < 0.1 / n) ++slid;
        }
        CHECK(slid >= 2 * n);
        // The parameter margins stay pinned.
        CHECK(max_probe_diff(cn, seeded, 1.0 - a, 1.0) < 1e-9);
    }

    // Convexification time is reached inside the horizon.
    double sc = sched.s_conv();
    CHECK(sc <= 6.0);
    for (int k = 1; k < 5; ++k) CHECK(is_convex(sched.at(k, 6.0)));
}

TEST_CASE("distribute_wiggles rejects malformed families") {
    double a = 0.1;
    SphereCurve base = circle_curve(Vec3(0, 0, 1), 0.8, 512, 0.0, 1.0);
    SphereCurve seeded = insert_wiggles(base, a, 1, 0.04);

    // Active node without a margin loop.
    CurveFamily bare({2}, {base, base});
    CHECK_THROWS_AS(distribute_wiggles(bare, a, 6.0), HypothesisViolated);

    // Frozen node that is not convex.
    CurveFamily flipped({2}, {base.reversed_orientation(), seeded});
    flipped.set_frozen({1, 0});
    CHECK_THROWS_AS(distribute_wiggles(flipped, a, 6.0), HypothesisViolated);

    // Horizon and margin domain errors.
    CurveFamily ok({1}, {seeded});
    CHECK_THROWS_AS(distribute_wiggles(ok, a, 100.0), DomainError);
    CHECK_THROWS_AS(distribute_wiggles(ok, 0.4, 6.0), DomainError);
    CHECK_THROWS_AS(distribute_wiggles(CurveFamily(), a, 6.0), DomainError);
}

TEST_CASE("convexify_family makes a dipped family convex") {
    // Convex margins, a concave dip in the middle.
    auto k = [](double t) {
        double u = (t - 0.5) / 0.15;
        return 1.0 - 1.4 * std::exp(-u * u);
    };
    SphereCurve dip = frame_curve(k, 3.0, 0.0, 1.0, 600, Vec3(0, 0, 1), Vec3(1, 0, 0));
    REQUIRE(!is_convex(dip));
    REQUIRE(is_immersed(dip));
    SphereCurve flat = circle_curve(Vec3(0, 0, 1), 0.8, 512, 0.0, 1.0);
    CurveFamily F({2}, {flat, dip});

    ConvexifyHomotopy H = convexify_family(F, 3);
    CHECK(max_sample_diff(H.at(1, 0.0), dip) == doctest::Approx(0.0));
    CurveFamily out = H.final_family();
    for (int k2 = 0; k2 < out.nodes(); ++k2) {
        CAPTURE(k2);
        CHECK(is_convex(out.curve(k2)));
    }
    // Intermediate stages stay immersed.
    for (double u : {0.1, 0.5, 0.9}) CHECK(is_immersed(H.at(1, u)));
    CHECK(H.s_final() >= 0.0);
    CHECK_THROWS_AS(convexify_family(F, -1), DomainError);
}
