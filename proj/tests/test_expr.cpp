#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "engel/chart.hpp"
#include "engel/errors.hpp"
#include "engel/expr.hpp"

#include <array>
#include <cmath>

using namespace engel;

namespace {

std::array<double, kNumVars> vars(double x, double y, double z, double t, double theta = 0.0,
                                  double s = 0.0) {
    return {x, y, z, t, theta, s};
}

ChartDomain box4(double lo = -2.0, double hi = 2.0) {
    return ChartDomain({Axis{var_index("x"), lo, hi, false}, Axis{var_index("y"), lo, hi, false},
                        Axis{var_index("z"), lo, hi, false}, Axis{var_index("t"), lo, hi, false}});
}

}  // namespace

TEST_CASE("variable table") {
    CHECK(var_index("x") == 0);
    CHECK(var_index("theta") == 4);
    CHECK(var_index("s") == 5);
    CHECK(var_index("q") == -1);
    CHECK(var_index("Theta") == -1);
}

TEST_CASE("parse and evaluate against closed forms") {
    Expr e = Expr::parse("x^2 + sin(y)*cos(z) - exp(t)/2");
    auto v = vars(1.3, 0.4, -0.7, 0.25);
    double want = 1.3 * 1.3 + std::sin(0.4) * std::cos(-0.7) - std::exp(0.25) / 2.0;
    CHECK(e.eval<double>(v) == doctest::Approx(want).epsilon(1e-15));

    Expr f = Expr::parse("-(x + y)^3 / (2 - z)");
    double wantf = -std::pow(1.3 + 0.4, 3) / (2.0 - (-0.7));
    CHECK(f.eval<double>(v) == doctest::Approx(wantf).epsilon(1e-14));

    Expr g = Expr::parse("2*theta - s*s");
    CHECK(g.eval<double>(vars(0, 0, 0, 0, 1.5, 3.0)) == doctest::Approx(3.0 - 9.0));
}

TEST_CASE("integer powers") {
    CHECK(Expr::parse("x^3").eval<double>(vars(2, 0, 0, 0)) == doctest::Approx(8.0));
    CHECK(Expr::parse("x^0").eval<double>(vars(5, 0, 0, 0)) == doctest::Approx(1.0));
    CHECK(Expr::parse("(x+1)^2").eval<double>(vars(2, 0, 0, 0)) == doctest::Approx(9.0));
}

TEST_CASE("printer round trip rebuilds the same tree") {
    for (const char* text : {"x^2 + sin(y)*cos(z) - exp(t)/2", "-(x + y)^3 / (2 - z)",
                             "x*y*z*t - (x/y)/(z/t)", "sin(cos(exp(x))) + theta^5", "1 - -x"}) {
        Expr e = Expr::parse(text);
        Expr f = Expr::parse(e.str());
        CHECK(e.same_structure(f));
        CHECK(f.str() == e.str());
    }
}

TEST_CASE("same_structure distinguishes different trees") {
    CHECK(!Expr::parse("x + y").same_structure(Expr::parse("y + x")));
    CHECK(Expr::parse("x + y").same_structure(Expr::parse("(x) + (y)")));
}

TEST_CASE("used_vars marks exactly the occurring variables") {
    auto used = Expr::parse("x*t + sin(theta)").used_vars();
    CHECK(used[var_index("x")]);
    CHECK(used[var_index("t")]);
    CHECK(used[var_index("theta")]);
    CHECK(!used[var_index("y")]);
    CHECK(!used[var_index("z")]);
    CHECK(!used[var_index("s")]);
}

TEST_CASE("syntax errors carry position and expectation") {
    try {
        Expr::parse("x + * y");
        FAIL("expected SyntaxError");
    } catch (const SyntaxError& e) {
        CHECK(e.line == 1);
        CHECK(e.column > 1);
        CHECK(!e.expected.empty());
    }
    CHECK_THROWS_AS(Expr::parse("(x + y"), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("x ^ y"), SyntaxError);  // exponent must be an integer
    CHECK_THROWS_AS(Expr::parse(""), SyntaxError);
}

TEST_CASE("unknown identifiers are rejected") {
    CHECK_THROWS_AS(Expr::parse("foo(x)"), UnknownIdentifier);
    CHECK_THROWS_AS(Expr::parse("x + bar"), UnknownIdentifier);
}

TEST_CASE("builder API matches parsed trees") {
    Expr built = Expr::var("x") * Expr::var("x") + Expr::sin(Expr::var("y"));
    Expr parsed = Expr::parse("x*x + sin(y)");
    CHECK(built.same_structure(parsed));
    CHECK(built.eval<double>(vars(2, 0.3, 0, 0)) ==
          doctest::Approx(4.0 + std::sin(0.3)).epsilon(1e-15));
}

TEST_CASE("jet evaluation reproduces analytic gradient and hessian") {
    ChartDomain ch = box4();
    Expr e = Expr::parse("x^2*y + sin(z)*t");
    Pt p(0.7, -0.3, 0.9, 1.1);
    ScalarJet j = eval_with_jet(e, ch, p);
    double x = p[0], y = p[1], z = p[2], t = p[3];
    CHECK(j.value == doctest::Approx(x * x * y + std::sin(z) * t).epsilon(1e-15));
    CHECK(j.gradient[0] == doctest::Approx(2 * x * y).epsilon(1e-14));
    CHECK(j.gradient[1] == doctest::Approx(x * x).epsilon(1e-14));
    CHECK(j.gradient[2] == doctest::Approx(std::cos(z) * t).epsilon(1e-14));
    CHECK(j.gradient[3] == doctest::Approx(std::sin(z)).epsilon(1e-14));
    CHECK(j.hessian(0, 0) == doctest::Approx(2 * y).epsilon(1e-14));
    CHECK(j.hessian(0, 1) == doctest::Approx(2 * x).epsilon(1e-14));
    CHECK(j.hessian(1, 0) == doctest::Approx(2 * x).epsilon(1e-14));
    CHECK(j.hessian(2, 2) == doctest::Approx(-std::sin(z) * t).epsilon(1e-14));
    CHECK(j.hessian(2, 3) == doctest::Approx(std::cos(z)).epsilon(1e-14));
    CHECK(j.hessian(1, 1) == doctest::Approx(0.0));
    // Hessian symmetry across all entries.
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            CHECK(j.hessian(a, b) == doctest::Approx(j.hessian(b, a)).epsilon(1e-14));
}

TEST_CASE("jet of a quotient matches analytic derivatives") {
    ChartDomain ch = box4();
    Expr e = Expr::parse("x / (1 + y^2)");
    Pt p(0.5, 0.8, 0, 0);
    ScalarJet j = eval_with_jet(e, ch, p);
    double x = p[0], y = p[1], d = 1 + y * y;
    CHECK(j.value == doctest::Approx(x / d).epsilon(1e-15));
    CHECK(j.gradient[0] == doctest::Approx(1.0 / d).epsilon(1e-14));
    CHECK(j.gradient[1] == doctest::Approx(-2 * x * y / (d * d)).epsilon(1e-14));
    CHECK(j.hessian(1, 1) ==
          doctest::Approx(x * (8 * y * y / (d * d * d) - 2.0 / (d * d))).epsilon(1e-13));
}

TEST_CASE("periodic coordinates are reduced before evaluation") {
    ChartDomain ch({Axis{var_index("x"), -1, 1, false},
                    Axis{var_index("theta"), 0, 2 * M_PI, true}});
    Expr e = Expr::parse("sin(theta) + x");
    Pt p(0.25, 2 * M_PI + 0.3, 0, 0);
    ScalarJet j = eval_with_jet(e, ch, p);
    CHECK(j.value == doctest::Approx(std::sin(0.3) + 0.25).epsilon(1e-12));
    Pt q(0.25, -0.7, 0, 0);  // wraps to 2 pi - 0.7
    CHECK(eval_with_jet(e, ch, q).value ==
          doctest::Approx(std::sin(2 * M_PI - 0.7) + 0.25).epsilon(1e-12));
}

TEST_CASE("evaluation outside a non-periodic axis is a domain error") {
    ChartDomain ch = box4(-1.0, 1.0);
    Expr e = Expr::parse("x + y");
    CHECK_THROWS_AS(eval_with_jet(e, ch, Pt(1.5, 0, 0, 0)), DomainError);
    CHECK_NOTHROW(eval_with_jet(e, ch, Pt(1.0, -1.0, 0.5, 0)));
}

TEST_CASE("non-finite evaluation is a numerical error") {
    ChartDomain ch = box4();
    Expr e = Expr::parse("1 / (x - 1)");
    CHECK_THROWS_AS(eval_with_jet(e, ch, Pt(1.0, 0, 0, 0)), NumericalError);
    CHECK_NOTHROW(eval_with_jet(e, ch, Pt(0.0, 0, 0, 0)));
}

TEST_CASE("chart membership and reduction") {
    ChartDomain ch({Axis{var_index("x"), -1, 1, false},
                    Axis{var_index("theta"), 0, 2 * M_PI, true}});
    CHECK(ch.contains(Pt(0.5, 100.0, 0, 0)));   // periodic axis never excludes
    CHECK(!ch.contains(Pt(1.5, 0.0, 0, 0)));
    Pt r = ch.reduce(Pt(0.5, 2 * M_PI + 0.3, 0, 0));
    CHECK(r[1] == doctest::Approx(0.3).epsilon(1e-12));
    // Periodic distance wraps: 0.1 and 2 pi - 0.1 are 0.2 apart.
    CHECK(ch.distance(Pt(0, 0.1, 0, 0), Pt(0, 2 * M_PI - 0.1, 0, 0)) ==
          doctest::Approx(0.2).epsilon(1e-10));
}

TEST_CASE("sample grids omit the duplicate periodic endpoint") {
    ChartDomain ch({Axis{var_index("x"), -1, 1, false},
                    Axis{var_index("theta"), 0, 2 * M_PI, true}});
    SampleGrid g(ch, {9, 8});
    CHECK(g.size() == 72);
    double worst = 0.0;
    for (const Pt& p : g.points()) worst = std::max(worst, p[1]);
    CHECK(worst < 2 * M_PI - 0.1);  // endpoint excluded
    CHECK_THROWS_AS(SampleGrid(ch, {3, 8}), DomainError);  // counts must be 1 or >= 8
    CHECK_NOTHROW(SampleGrid(ch, {1, 8}));
}
