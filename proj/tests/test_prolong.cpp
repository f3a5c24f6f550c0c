#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "engel/prolong.hpp"

#include <cmath>
#include <string>
#include <vector>

using namespace engel;

namespace {

ProlongedStructure cartan_t3() { return build_prolongation(t3_spec(ProlongationMode::cartan)); }

ProlongedStructure lorentz_t3(double r) {
    return build_prolongation(t3_spec(ProlongationMode::lorentz, r));
}

Vec v_closed_form(const Pt& p, double r) {
    double z = p[2], th = p[3];
    return Vec(std::cos(th) * std::sin(z) + r * std::cos(z),
               std::cos(th) * std::cos(z) - r * std::sin(z), std::sin(th), 0.0);
}

const std::vector<Pt> kProbes = {Pt(0.3, 1.0, 2.0, 0.0), Pt(4.0, 0.7, 5.5, 1.2),
                                 Pt(1.1, 2.2, 3.3, 4.4), Pt(6.0, 0.1, 0.9, 2.7)};

}  // namespace

TEST_CASE("the prolonged frame lives on base x S^1 with the cone section") {
    ProlongedStructure ps = cartan_t3();
    CHECK(ps.total.dim() == 4);
    const Axis& fiber = ps.total.axis(3);
    CHECK(fiber.var == var_index("theta"));
    CHECK(fiber.lo == doctest::Approx(0.0));
    CHECK(fiber.hi == doctest::Approx(2 * M_PI));
    CHECK(fiber.periodic);
    REQUIRE(ps.frame.size() == 2);
    for (const Pt& p : kProbes) {
        CHECK((ps.frame[0].value(p) - Vec(0, 0, 0, 1)).norm() == doctest::Approx(0.0));
        CHECK((ps.frame[1].value(p) - v_closed_form(p, 0.0)).norm() < 1e-12);
        // nu is lifted with a dead fiber component.
        Vec nu = ps.nu_lift.value(p);
        CHECK(nu[3] == 0.0);
        CHECK(nu.head<3>().norm() == doctest::Approx(1.0));
    }

    ProlongedStructure pl = lorentz_t3(0.5);
    for (const Pt& p : kProbes) {
        CHECK((pl.frame[1].value(p) - v_closed_form(p, 0.5)).norm() < 1e-12);
        // The cone section is equivariant: opposite fiber angles average to
        // the nu offset.
        Pt q = p;
        q[3] += M_PI;
        Vec sum = pl.frame[1].value(p) + pl.frame[1].value(q);
        CHECK((sum - 2 * 0.5 * pl.nu_lift.value(p)).norm() < 1e-12);
        // lorentz minus cartan is exactly r nu.
        Vec diff = pl.frame[1].value(p) - ps.frame[1].value(p);
        CHECK((diff - 0.5 * pl.nu_lift.value(p)).norm() < 1e-12);
    }
}

TEST_CASE("contact prolongations verify as Engel structures") {
    for (const ProlongedStructure& ps :
         {cartan_t3(), lorentz_t3(0.5), build_prolongation(mtorus_spec(2, ProlongationMode::cartan))}) {
        SampleGrid grid(ps.total, {8, 8, 8, 8});
        CheckReport rep = engel_check(ps.frame, grid);
        CHECK(rep.pass);
        CHECK(rep.min_margin > 1e-3);
        CHECK(rep.failures.empty());
    }
}

TEST_CASE("the integrable base never prolongs to an Engel structure") {
    ProlongedStructure ps = build_prolongation(foliation_spec());
    SampleGrid grid(ps.total, {8, 8, 8, 8});
    CheckReport rep = engel_check(ps.frame, grid);
    CHECK(!rep.pass);
    CHECK(rep.min_margin < 1e-9);
    CHECK(!rep.failures.empty());
    // The first rank step still holds; only the final bracket dies.
    for (const Pt& p : SampleGrid(ps.total, {1, 1, 4, 8}).points()) {
        auto [m3, m4] = engel_margins(ps.frame, p);
        CHECK(m3 > 0.5);
        CHECK(m4 < 1e-9);
    }
}

TEST_CASE("bracket_frame extends the frame by the fiber derivative") {
    ProlongedStructure ps = lorentz_t3(0.5);
    std::vector<VectorFieldDef> E = bracket_frame(ps);
    REQUIRE(E.size() == 3);
    for (const Pt& p : kProbes) {
        double z = p[2], th = p[3];
        Vec dv(-std::sin(th) * std::sin(z), -std::sin(th) * std::cos(z), std::cos(th), 0.0);
        CHECK((E[2].value(p) - dv).norm() < 1e-12);
        // dv matches the actual bracket of the two legs.
        CHECK((lie_bracket(E[0], E[1], p) - dv).norm() < 1e-10);
    }
}

TEST_CASE("the kernel of the cartan prolongation is the fiber direction") {
    ProlongedStructure ps = cartan_t3();
    SampleGrid grid(ps.total, {4, 4, 4, 8});
    SampledField W = kernel_field(bracket_frame(ps), grid);
    REQUIRE(W.values.size() == grid.size());
    for (const Vec& w : W.values) {
        CHECK(w.norm() == doctest::Approx(1.0));
        CHECK(std::acos(std::min(1.0, std::abs(w[3]))) < 1e-6);
    }

    // The lorentz kernel tilts away from the fiber somewhere.
    ProlongedStructure pl = lorentz_t3(0.5);
    SampledField Wl = kernel_field(bracket_frame(pl), grid);
    double worst = 0.0;
    for (const Vec& w : Wl.values)
        worst = std::max(worst, std::acos(std::min(1.0, std::abs(w[3]))));
    CHECK(worst > 1e-2);
}

TEST_CASE("prolongation specs are validated") {
    CHECK_THROWS_AS(mtorus_spec(0, ProlongationMode::cartan), DomainError);
    CHECK_THROWS_AS(build_prolongation(t3_spec(ProlongationMode::lorentz, 0.0)), DomainError);
    CHECK_THROWS_AS(build_prolongation(t3_spec(ProlongationMode::lorentz, -1.0)), DomainError);

    // Dependent base frame.
    ProlongationSpec bad = t3_spec(ProlongationMode::cartan);
    bad.e2 = bad.e1;
    CHECK_THROWS_AS(build_prolongation(bad), DegenerateFrame);

    // Base chart of the wrong dimension.
    ProlongationSpec flat = t3_spec(ProlongationMode::cartan);
    flat.base = ChartDomain({Axis{var_index("x"), 0, 2 * M_PI, true},
                             Axis{var_index("y"), 0, 2 * M_PI, true}});
    CHECK_THROWS_AS(build_prolongation(flat), DomainError);

    // Base binding the fiber variable.
    ProlongationSpec clash = t3_spec(ProlongationMode::cartan);
    clash.base = ChartDomain({Axis{var_index("x"), 0, 2 * M_PI, true},
                              Axis{var_index("y"), 0, 2 * M_PI, true},
                              Axis{var_index("theta"), 0, 2 * M_PI, true}});
    CHECK_THROWS_AS(build_prolongation(clash), DomainError);
}

TEST_CASE("the pushoff family walks the cone ratio schedule") {
    std::vector<ProlongedStructure> fam =
        convex_pushoff_family(t3_spec(ProlongationMode::cartan), {0.5, 0.1});
    REQUIRE(fam.size() == 2);
    CHECK(fam[0].spec.mode == ProlongationMode::lorentz);
    CHECK(fam[0].spec.r == doctest::Approx(0.5));
    CHECK(fam[1].spec.r == doctest::Approx(0.1));
    for (const Pt& p : kProbes)
        CHECK((fam[0].frame[1].value(p) - v_closed_form(p, 0.5)).norm() < 1e-12);

    CHECK_THROWS_AS(convex_pushoff_family(t3_spec(ProlongationMode::cartan), {0.5, 0.0}),
                    DomainError);
    CHECK_THROWS_AS(convex_pushoff_family(t3_spec(ProlongationMode::cartan), {}), DomainError);
}

TEST_CASE("pushed_fiber_field tilts the fiber direction by s nu") {
    ProlongedStructure ps = cartan_t3();
    VectorFieldDef Y = pushed_fiber_field(ps, 0.3);
    for (const Pt& p : kProbes) {
        Vec expect(0.3 * std::cos(p[2]), -0.3 * std::sin(p[2]), 0.0, 1.0);
        CHECK((Y.value(p) - expect).norm() < 1e-12);
    }
    VectorFieldDef Y0 = pushed_fiber_field(ps, 0.0);
    for (const Pt& p : kProbes)
        CHECK((Y0.value(p) - Vec(0, 0, 0, 1)).norm() == doctest::Approx(0.0));
}

TEST_CASE("the straight fiber flow returns every point exactly") {
    ProlongedStructure ps = cartan_t3();
    ReturnMapReport rep = return_map(ps, 0.0, 3);
    CHECK(rep.s == 0.0);
    CHECK(rep.iterates == 3);
    REQUIRE(rep.min_displacement.size() == 3);
    for (double d : rep.min_displacement) CHECK(d < 1e-8);
    CHECK(!rep.fixed_point_free);
}

TEST_CASE("a small tilt displaces every return by 2 pi j s") {
    ProlongedStructure ps = cartan_t3();
    double s = 0.01;
    ReturnMapReport rep = return_map(ps, s, 9);
    REQUIRE(rep.min_displacement.size() == 9);
    for (int j = 1; j <= 9; ++j) {
        CHECK(rep.min_displacement[j - 1] == doctest::Approx(2 * M_PI * j * s).epsilon(1e-7));
        CHECK(rep.min_displacement[j - 1] > 0.9 * 2 * M_PI * j * s);
    }
    CHECK(rep.fixed_point_free);
}

TEST_CASE("a resonant tilt on the integrable base closes up at iterate 4") {
    ProlongedStructure ps = build_prolongation(foliation_spec());
    ReturnMapReport rep = return_map(ps, 0.25, 4);
    REQUIRE(rep.min_displacement.size() == 4);
    CHECK(rep.min_displacement[0] == doctest::Approx(M_PI / 2).epsilon(1e-9));
    CHECK(rep.min_displacement[1] == doctest::Approx(M_PI).epsilon(1e-9));
    CHECK(rep.min_displacement[2] == doctest::Approx(M_PI / 2).epsilon(1e-9));
    CHECK(rep.min_displacement[3] < 1e-8);
    CHECK(!rep.fixed_point_free);
}

TEST_CASE("return_map validates its inputs and transversality") {
    ProlongedStructure ps = cartan_t3();
    CHECK_THROWS_AS(return_map(ps, 0.0, 0), DomainError);
    CHECK_THROWS_AS(return_map(ps, 0.0, 1, {5, 5}), DomainError);
    // With an angle tolerance wider than the whole fiber component the
    // section stops being usable.
    Tolerances wide;
    wide.set("theta_min", 1.5);
    CHECK_THROWS_AS(return_map(ps, 0.0, 1, {3, 3, 3}, wide), SectionNotTransverse);
}

TEST_CASE("certify_prolongation_looseness rejects the untilted fiber flow") {
    ProlongedStructure ps = lorentz_t3(0.5);
    LoosenessCertificate cert = certify_prolongation_looseness(ps, 0.0, 2);
    CHECK(!cert.success);
    CHECK(cert.closed_orbit_suspected);
    CHECK(cert.diagnosis.find("fixed point at iterate 1") != std::string::npos);
    CHECK(cert.best_margin < 1e-8);
    CHECK(cert.required == 2);
    CHECK(cert.witnesses.empty());
}

TEST_CASE("certify_prolongation_looseness certifies the tilted pushoff") {
    ProlongedStructure ps = lorentz_t3(0.5);
    LoosenessCertificate cert = certify_prolongation_looseness(ps, 0.01, 1);
    CHECK(cert.success);
    CHECK(cert.required == 1);
    REQUIRE(cert.witnesses.size() == 16);  // 2^4 grid base points
    for (const LoosenessWitness& w : cert.witnesses) {
        CHECK(w.wiggle_count >= 1);
        CHECK(w.delta_emb > 1e-3);
        CHECK(w.T_used <= 16 * M_PI + 1e-9);
    }
}
