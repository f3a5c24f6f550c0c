#include "engel/prolong.hpp"

#include "engel/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace engel {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int theta_var() { return var_index("theta"); }

/// Rectangular probe points; count 1 places a periodic axis at its origin
/// and a bounded axis at its midpoint.
std::vector<Pt> grid_points(const ChartDomain& ch, const std::vector<int>& counts) {
    if (static_cast<int>(counts.size()) != ch.dim())
        throw DomainError("grid: one count per chart axis required");
    for (int c : counts)
        if (c < 1) throw DomainError("grid: counts must be positive");
    std::vector<Pt> pts;
    std::vector<int> idx(counts.size(), 0);
    for (;;) {
        Pt p = Pt::Zero();
        for (std::size_t a = 0; a < counts.size(); ++a) {
            const Axis& ax = ch.axis(static_cast<int>(a));
            int n = counts[a];
            if (n == 1)
                p[a] = ax.periodic ? ax.lo : 0.5 * (ax.lo + ax.hi);
            else if (ax.periodic)
                p[a] = ax.lo + ax.length() * idx[a] / n;
            else
                p[a] = ax.lo + ax.length() * idx[a] / (n - 1);
        }
        pts.push_back(p);
        std::size_t a = counts.size();
        while (a > 0) {
            --a;
            if (++idx[a] < counts[a]) break;
            idx[a] = 0;
            if (a == 0) return pts;
        }
    }
}

/// Position-only one-step 4th order flow with endpoint verification by step
/// halving. `n_hint` carries the accepted resolution between calls.
Pt flow_once(const VectorFieldDef& Y, const Pt& p, double T, const Tolerances& tol, int& n_hint) {
    auto integrate = [&](int n) {
        Pt x = p;
        double h = T / n;
        for (int i = 0; i < n; ++i) {
            Vec k1 = Y.value(x);
            Vec k2 = Y.value(x + 0.5 * h * k1);
            Vec k3 = Y.value(x + 0.5 * h * k2);
            Vec k4 = Y.value(x + h * k3);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if (!Y.chart().contains(x, 1e-9))
                throw FlowEscape("return map: flow left the chart");
        }
        return x;
    };
    double budget = tol.ode_tol * std::max(1.0, T);
    int n = std::max(16, n_hint);
    Pt coarse = integrate(n);
    for (;;) {
        Pt fine = integrate(2 * n);
        if ((fine - coarse).norm() <= budget) {
            n_hint = n;
            return fine;
        }
        if (n >= 65536) throw NumericalError("return map: step halving did not converge");
        n *= 2;
        coarse = fine;
    }
}

} // namespace

ProlongedStructure build_prolongation(const ProlongationSpec& spec, const Tolerances& tol) {
    if (spec.base.dim() != 3) throw DomainError("prolongation: base chart must be 3-dimensional");
    for (const Axis& ax : spec.base.axes())
        if (ax.var == theta_var())
            throw DomainError("prolongation: base chart may not bind the fiber variable theta");
    if (spec.mode == ProlongationMode::lorentz && !(spec.r > 0.0))
        throw DomainError("prolongation: lorentz mode requires r > 0");

    // Pointwise independence of the base frame on a probe lattice.
    for (const Pt& p : grid_points(spec.base, {7, 7, 7})) {
        Eigen::Matrix3d M;
        M.col(0) = spec.e1.value(p).head<3>().normalized();
        M.col(1) = spec.e2.value(p).head<3>().normalized();
        M.col(2) = spec.nu.value(p).head<3>().normalized();
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(M);
        if (svd.singularValues()(2) < tol.sigma_min)
            throw DegenerateFrame("prolongation: (e1, e2, nu) dependent at a probe point");
    }

    std::vector<Axis> axes = spec.base.axes();
    axes.push_back(Axis{theta_var(), 0.0, kTwoPi, true});
    ChartDomain total(axes);

    Expr th = Expr::var("theta");
    Expr zero = Expr::number(0.0);
    std::vector<Expr> fiber = {zero, zero, zero, Expr::number(1.0)};
    std::vector<Expr> v;
    std::vector<Expr> nu4;
    for (int i = 0; i < 3; ++i) {
        Expr c = Expr::cos(th) * spec.e1.components()[i] + Expr::sin(th) * spec.e2.components()[i];
        if (spec.mode == ProlongationMode::lorentz)
            c = c + Expr::number(spec.r) * spec.nu.components()[i];
        v.push_back(c);
        nu4.push_back(spec.nu.components()[i]);
    }
    v.push_back(zero);
    nu4.push_back(zero);

    ProlongedStructure ps;
    ps.spec = spec;
    ps.total = total;
    ps.frame = {VectorFieldDef(total, fiber), VectorFieldDef(total, v)};
    ps.nu_lift = VectorFieldDef(total, nu4);
    ps.orientation = spec.orientation;
    return ps;
}

namespace {

ProlongationSpec frame_spec(const std::string& e1x, const std::string& e1y,
                            ProlongationMode mode, double r, const std::string& nux,
                            const std::string& nuy) {
    std::vector<Axis> axes = {Axis{var_index("x"), 0.0, kTwoPi, true},
                              Axis{var_index("y"), 0.0, kTwoPi, true},
                              Axis{var_index("z"), 0.0, kTwoPi, true}};
    ChartDomain base(axes);
    ProlongationSpec spec;
    spec.base = base;
    spec.e1 = VectorFieldDef(base, {Expr::parse(e1x), Expr::parse(e1y), Expr::number(0.0)});
    spec.e2 = VectorFieldDef(base, {Expr::number(0.0), Expr::number(0.0), Expr::number(1.0)});
    spec.nu = VectorFieldDef(base, {Expr::parse(nux), Expr::parse(nuy), Expr::number(0.0)});
    spec.mode = mode;
    spec.r = r;
    return spec;
}

} // namespace

ProlongationSpec t3_spec(ProlongationMode mode, double r) {
    return frame_spec("sin(z)", "cos(z)", mode, r, "cos(z)", "-sin(z)");
}

ProlongationSpec mtorus_spec(int n, ProlongationMode mode, double r) {
    if (n < 1) throw DomainError("mtorus base: rotation speed must be at least 1");
    std::string nz = std::to_string(n) + "*z";
    return frame_spec("sin(" + nz + ")", "cos(" + nz + ")", mode, r, "cos(" + nz + ")",
                      "-sin(" + nz + ")");
}

ProlongationSpec foliation_spec() {
    std::vector<Axis> axes = {Axis{var_index("x"), 0.0, kTwoPi, true},
                              Axis{var_index("y"), 0.0, kTwoPi, true},
                              Axis{var_index("z"), 0.0, kTwoPi, true}};
    ChartDomain base(axes);
    ProlongationSpec spec;
    spec.base = base;
    Expr one = Expr::number(1.0);
    Expr zero = Expr::number(0.0);
    spec.e1 = VectorFieldDef(base, {one, zero, zero});
    spec.e2 = VectorFieldDef(base, {zero, one, zero});
    spec.nu = VectorFieldDef(base, {zero, zero, one});
    spec.mode = ProlongationMode::cartan;
    return spec;
}

std::vector<VectorFieldDef> bracket_frame(const ProlongedStructure& ps) {
    Expr th = Expr::var("theta");
    const ProlongationSpec& spec = ps.spec;
    std::vector<Expr> dv;
    for (int i = 0; i < 3; ++i)
        dv.push_back(Expr::cos(th) * spec.e2.components()[i] -
                     Expr::sin(th) * spec.e1.components()[i]);
    dv.push_back(Expr::number(0.0));
    return {ps.frame[0], ps.frame[1], VectorFieldDef(ps.total, dv)};
}

std::vector<ProlongedStructure> convex_pushoff_family(const ProlongationSpec& spec,
                                                      const std::vector<double>& r_schedule,
                                                      const Tolerances& tol) {
    if (r_schedule.empty()) throw DomainError("pushoff family: empty schedule");
    std::vector<ProlongedStructure> out;
    out.reserve(r_schedule.size());
    for (double r : r_schedule) {
        if (!(r > 0.0))
            throw DomainError(
                "pushoff family: cone ratios must stay positive (use cartan mode for the limit)");
        ProlongationSpec s = spec;
        s.mode = ProlongationMode::lorentz;
        s.r = r;
        out.push_back(build_prolongation(s, tol));
    }
    return out;
}

VectorFieldDef pushed_fiber_field(const ProlongedStructure& ps, double s) {
    std::vector<Expr> comps;
    for (int i = 0; i < 3; ++i)
        comps.push_back(Expr::number(s) * ps.nu_lift.components()[i]);
    comps.push_back(Expr::number(1.0));
    return VectorFieldDef(ps.total, comps);
}

ReturnMapReport return_map(const ProlongedStructure& ps, double s, int N,
                           const std::vector<int>& base_counts, const Tolerances& tol) {
    if (N < 1) throw DomainError("return map: iterate count must be positive");
    if (base_counts.size() != 3) throw DomainError("return map: three region counts required");

    VectorFieldDef Ys = pushed_fiber_field(ps, s);
    std::vector<int> counts = base_counts;
    counts.push_back(1);  // section theta = 0
    std::vector<Pt> region = grid_points(ps.total, counts);
    for (const Pt& q : region)
        if (std::abs(Ys.value(q)[3]) < tol.theta_min)
            throw SectionNotTransverse("return map: fiber component of Y_s too small");

    ReturnMapReport rep;
    rep.s = s;
    rep.iterates = N;
    rep.tolerances = tol;
    rep.min_displacement.assign(N, 1e300);
    rep.argmin_points.assign(N, Pt::Zero());
    int n_hint = 64;
    for (const Pt& q : region) {
        Pt p = q;
        for (int j = 1; j <= N; ++j) {
            p = flow_once(Ys, p, kTwoPi, tol, n_hint);
            double d = ps.total.distance(q, p);
            if (d < rep.min_displacement[j - 1]) {
                rep.min_displacement[j - 1] = d;
                rep.argmin_points[j - 1] = q;
            }
        }
    }
    rep.fixed_point_free = std::all_of(rep.min_displacement.begin(), rep.min_displacement.end(),
                                       [&](double d) { return d > tol.delta_min; });
    return rep;
}

LoosenessCertificate certify_prolongation_looseness(const ProlongedStructure& ps, double s, int N,
                                                    double T_max,
                                                    const std::vector<int>& total_counts,
                                                    const Tolerances& tol) {
    if (N < 1) throw DomainError("certify_prolongation_looseness: N must be positive");
    if (T_max <= 0.0) T_max = 8.0 * kTwoPi * N;

    ReturnMapReport rm = return_map(ps, s, N, {3, 3, 3}, tol);
    if (!rm.fixed_point_free) {
        int j = 0;
        while (rm.min_displacement[j] > tol.delta_min) ++j;
        LoosenessCertificate cert;
        cert.tolerances = tol;
        cert.required = N;
        cert.success = false;
        cert.closed_orbit_suspected = true;
        cert.worst_point = rm.argmin_points[j];
        cert.best_count = 0;
        cert.best_margin = rm.min_displacement[j];
        cert.diagnosis = "return map has a fixed point at iterate " + std::to_string(j + 1) +
                         " (closed orbit of the pushed fiber field); flow segments cannot stay "
                         "embedded past one period";
        return cert;
    }

    Tolerances eff = tol;
    eff.set("theta_min", std::max(tol.theta_min, 2.0 * std::abs(s)));
    std::vector<Pt> points = grid_points(ps.total, total_counts);
    return certify_looseness(ps.frame, pushed_fiber_field(ps, s), N, points, T_max, eff);
}

} // namespace engel
