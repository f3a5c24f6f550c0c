#include "engel/shell.hpp"

#include "engel/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace engel {

namespace {

ChartDomain box_chart4() {
    return ChartDomain({Axis{var_index("x"), -1.0, 1.0, false},
                        Axis{var_index("y"), -1.0, 1.0, false},
                        Axis{var_index("z"), -1.0, 1.0, false},
                        Axis{var_index("t"), 0.0, 1.0, false}});
}

ChartDomain box_chart3() {
    return ChartDomain({Axis{var_index("x"), -1.0, 1.0, false},
                        Axis{var_index("y"), -1.0, 1.0, false},
                        Axis{var_index("z"), -1.0, 1.0, false}});
}

// Uniform spatial grid over the box, row-major with the last axis fastest
// (same flat order as CurveFamily grids).
struct GridInfo {
    std::vector<int> counts;
    std::vector<Vec3> pts;
    Vec3 h = Vec3::Zero();  // spacing per axis

    int stride(int axis) const {
        int s = 1;
        for (int d = 2; d > axis; --d) s *= counts[d];
        return s;
    }
    void unflatten(int k, int idx[3]) const {
        idx[2] = k % counts[2];
        k /= counts[2];
        idx[1] = k % counts[1];
        idx[0] = k / counts[1];
    }
};

GridInfo make_grid(const std::vector<int>& counts) {
    if (counts.size() != 3) throw DomainError("shell grid: three per-axis counts required");
    for (int c : counts)
        if (c < 2) throw DomainError("shell grid: at least 2 samples per axis");
    GridInfo g;
    g.counts = counts;
    for (int d = 0; d < 3; ++d) g.h[d] = 2.0 / (counts[d] - 1);
    g.pts.reserve(static_cast<std::size_t>(counts[0]) * counts[1] * counts[2]);
    for (int i = 0; i < counts[0]; ++i)
        for (int j = 0; j < counts[1]; ++j)
            for (int k = 0; k < counts[2]; ++k)
                g.pts.emplace_back(-1.0 + g.h[0] * i, -1.0 + g.h[1] * j, -1.0 + g.h[2] * k);
    return g;
}

bool ball_point(const Vec3& p) { return p.norm() <= 1.0 + 1e-12; }

struct CurveEval {
    Vec3 g = Vec3::Zero();
    Vec3 d1 = Vec3::Zero();
    Vec3 d2 = Vec3::Zero();
};

// Jets at an off-sample parameter by linear interpolation of the sample
// jets; sample spacing makes the interpolation error negligible against the
// rank thresholds.
CurveEval eval_on_curve(const SphereCurve& c, double t) {
    int i = c.index_at(t);
    if (i >= c.size() - 1) i = c.size() - 2;
    double lam = (t - c.t(i)) / (c.t(i + 1) - c.t(i));
    lam = std::clamp(lam, 0.0, 1.0);
    CurveEval e;
    e.g = ((1.0 - lam) * c.point(i) + lam * c.point(i + 1)).normalized();
    e.d1 = (1.0 - lam) * c.derivative(i) + lam * c.derivative(i + 1);
    e.d2 = (1.0 - lam) * c.second_derivative(i) + lam * c.second_derivative(i + 1);
    return e;
}

// Uniform evaluation access to a shell over a fixed check grid: exact jets
// for expression-backed shells, interpolated curve jets plus grid finite
// differences for sampled ones.
class ShellView {
public:
    ShellView(const Shell& sh, const std::vector<int>& counts, int nt, const Tolerances& tol)
        : sh_(sh), grid_(make_grid(counts)), tol_(tol) {
        if (sh.has_curves()) {
            if (counts != sh.spatial_counts())
                throw DomainError("shell check: grid must match the stored curve family");
            fam_ = &sh.curves();
            nt_ = nt;
        } else if (sh.has_field()) {
            nt_ = nt;
        } else {
            throw DomainError("shell check: shell carries no representation");
        }
        if (nt_ < 5) throw DomainError("shell check: at least 5 time samples required");
    }

    const GridInfo& grid() const { return grid_; }
    int nodes() const { return static_cast<int>(grid_.pts.size()); }
    int nt() const { return nt_; }
    double tj(int j) const { return static_cast<double>(j) / (nt_ - 1); }
    bool field_backed() const { return fam_ == nullptr; }

    CurveEval jet(int k, double t) const {
        if (fam_) return eval_on_curve(fam_->curve(k), t);
        Pt p;
        p << grid_.pts[k], t;
        Vec v0, v1, v2;
        sh_.field().axis_jets(p, 3, v0, v1, v2);
        CurveEval e;
        e.g = v0.head<3>();
        e.d1 = v1.head<3>();
        e.d2 = v2.head<3>();
        return e;
    }

    // Spatial Jacobians of X and X' at (node k, t): exact from the field's
    // jets, or central/one-sided differences across grid neighbors.
    void spatial_jacobians(int k, double t, Mat3& du, Mat3& dv) const {
        if (!fam_) {
            Pt p;
            p << grid_.pts[k], t;
            LegJet j = eval_leg(sh_.field(), p, true);
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) {
                    du(r, c) = j.jac(r, c);
                    dv(r, c) = j.hess[r](c, 3);
                }
            return;
        }
        int idx[3];
        grid_.unflatten(k, idx);
        for (int ax = 0; ax < 3; ++ax) {
            int s = grid_.stride(ax);
            int lo = idx[ax] > 0 ? k - s : k;
            int hi = idx[ax] < grid_.counts[ax] - 1 ? k + s : k;
            CurveEval a = eval_on_curve(fam_->curve(lo), t);
            CurveEval b = eval_on_curve(fam_->curve(hi), t);
            double denom = grid_.h[ax] * (hi - lo) / s;
            du.col(ax) = (b.g - a.g) / denom;
            dv.col(ax) = (b.d1 - a.d1) / denom;
        }
    }

    // Raw slice-contact determinant det(X, X', [X, X']) at (node k, t).
    double contact_det(int k, double t) const {
        CurveEval e = jet(k, t);
        Mat3 du, dv;
        spatial_jacobians(k, t, du, dv);
        Vec3 br = dv * e.g - du * e.d1;
        Mat3 m;
        m.col(0) = e.g;
        m.col(1) = e.d1;
        m.col(2) = br;
        return m.determinant();
    }

    // Condition B over the slice neighborhood of node k: expression shells
    // probe a fixed stencil of radius nbhd_radius, sampled shells use the
    // grid nodes that fall inside that radius (at least the node itself).
    double contact_margin(int k, double t) const {
        if (!fam_) {
            double m = std::abs(contact_det_at(grid_.pts[k], t));
            for (int ax = 0; ax < 3; ++ax)
                for (int dir = -1; dir <= 1; dir += 2) {
                    Vec3 q = grid_.pts[k];
                    q[ax] = std::clamp(q[ax] + dir * tol_.nbhd_radius, -1.0, 1.0);
                    m = std::min(m, std::abs(contact_det_at(q, t)));
                }
            return m;
        }
        double m = std::abs(contact_det(k, t));
        int idx[3];
        grid_.unflatten(k, idx);
        for (int ax = 0; ax < 3; ++ax)
            for (int dir = -1; dir <= 1; dir += 2) {
                if (grid_.h[ax] > tol_.nbhd_radius) continue;
                int ni = idx[ax] + dir;
                if (ni < 0 || ni >= grid_.counts[ax]) continue;
                m = std::min(m, std::abs(contact_det(k + dir * grid_.stride(ax), t)));
            }
        return m;
    }

    // Bracket-ladder rank margins of the assembled frame <d/dt, X> at
    // (node k, t), reduced to the slice: rank 3 needs {X, X'} independent,
    // rank 4 additionally needs {X, X', X'', [X, X']} to span.
    std::pair<double, double> bracket_margins(int k, double t) const {
        CurveEval e = jet(k, t);
        Mat3 du, dv;
        spatial_jacobians(k, t, du, dv);
        Vec3 br = dv * e.g - du * e.d1;
        auto ncol = [](const Vec3& v) {
            double n = v.norm();
            return n > 1e-300 ? Vec3(v / n) : v;
        };
        Eigen::Matrix<double, 3, 2> pair2;
        pair2.col(0) = ncol(e.g);
        pair2.col(1) = ncol(e.d1);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd2(pair2);
        double m3 = svd2.singularValues()(1);
        Eigen::Matrix<double, 3, 4> full;
        full.col(0) = ncol(e.g);
        full.col(1) = ncol(e.d1);
        full.col(2) = ncol(e.d2);
        full.col(3) = ncol(br);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd4(full);
        double m4 = svd4.singularValues()(2);
        return {m3, m4};
    }

private:
    double contact_det_at(const Vec3& q, double t) const {
        Pt p;
        p << q, t;
        LegJet j = eval_leg(sh_.field(), p, true);
        Vec3 u = j.value.head<3>();
        Vec3 v = j.jac.col(3).head<3>();
        Mat3 du, dv;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                du(r, c) = j.jac(r, c);
                dv(r, c) = j.hess[r](c, 3);
            }
        Vec3 br = dv * u - du * v;
        Mat3 m;
        m.col(0) = u;
        m.col(1) = v;
        m.col(2) = br;
        return m.determinant();
    }

    const Shell& sh_;
    GridInfo grid_;
    const CurveFamily* fam_ = nullptr;
    int nt_ = 33;
    Tolerances tol_;
};

} // namespace

Shell::Shell(VectorFieldDef X, OrientationData orientation, double epsilon, const Tolerances& tol)
    : chart_(box_chart4()), spatial_chart_(box_chart3()), orientation_(orientation),
      epsilon_(epsilon), tol_(tol) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw DomainError("shell: epsilon must lie in (0,1)");
    const ChartDomain& ch = X.chart();
    if (ch.dim() != 4) throw DomainError("shell: field must live on the 4-dimensional box");
    const char* names[4] = {"x", "y", "z", "t"};
    for (int i = 0; i < 4; ++i) {
        const Axis& a = ch.axis(i);
        double lo = i < 3 ? -1.0 : 0.0;
        if (a.var != var_index(names[i]) || a.periodic || std::abs(a.lo - lo) > 1e-12 ||
            std::abs(a.hi - 1.0) > 1e-12)
            throw DomainError("shell: field chart must be the standard box [-1,1]^3 x [0,1]");
    }
    // Unit length and zero t-component, probed on a coarse lattice.
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            for (int k = 0; k < 5; ++k)
                for (int m = 0; m < 5; ++m) {
                    Pt p(-1.0 + 0.5 * i, -1.0 + 0.5 * j, -1.0 + 0.5 * k, 0.25 * m);
                    Vec v = X.value(p);
                    if (std::abs(v[3]) > tol.unit_norm)
                        throw DomainError("shell: field must have zero t-component");
                    if (std::abs(v.head<3>().norm() - 1.0) > tol.unit_norm)
                        throw DomainError("shell: field must be unit length");
                }
    field_ = std::move(X);
}

Shell::Shell(CurveFamily curves, std::vector<int> spatial_counts, OrientationData orientation,
             double epsilon, const Tolerances& tol)
    : chart_(box_chart4()), spatial_chart_(box_chart3()), orientation_(orientation),
      epsilon_(epsilon), tol_(tol) {
    if (!(epsilon > 0.0) || epsilon >= 1.0)
        throw DomainError("shell: epsilon must lie in (0,1)");
    GridInfo g = make_grid(spatial_counts);
    if (curves.shape() != spatial_counts)
        throw DomainError("shell: family shape must match the spatial counts");
    if (static_cast<int>(g.pts.size()) != curves.nodes())
        throw DomainError("shell: family node count must match the grid");
    for (int k = 0; k < curves.nodes(); ++k) {
        const SphereCurve& c = curves.curve(k);
        if (std::abs(c.t_begin()) > 1e-9 || std::abs(c.t_end() - 1.0) > 1e-9)
            throw DomainError("shell: curves must be parametrized over [0,1]");
        if (c.orientation() != orientation.sign1)
            throw DomainError("shell: curve orientation must match sign1");
    }
    spatial_counts_ = std::move(spatial_counts);
    curves_ = std::move(curves);
}

const VectorFieldDef& Shell::field() const {
    if (!field_) throw DomainError("shell: no expression representation");
    return *field_;
}

const CurveFamily& Shell::curves() const {
    if (!curves_) throw DomainError("shell: no curve representation");
    return *curves_;
}

Vec3 Shell::grid_point(int k) const {
    GridInfo g = make_grid(spatial_counts_);
    if (k < 0 || k >= static_cast<int>(g.pts.size()))
        throw DomainError("shell: grid index out of range");
    return g.pts[k];
}

bool Shell::in_ball(int k) const { return ball_point(grid_point(k)); }

bool Shell::representations_agree(double delta, int nt) const {
    if (!field_ || !curves_) throw DomainError("shell: both representations required");
    GridInfo g = make_grid(spatial_counts_);
    for (int k = 0; k < curves_->nodes(); ++k) {
        const SphereCurve& c = curves_->curve(k);
        for (int j = 0; j < nt; ++j) {
            double t = static_cast<double>(j) / (nt - 1);
            Pt p;
            p << g.pts[k], t;
            Vec3 u = field_->value(p).head<3>();
            if ((u - c.at(t)).norm() > delta) return false;
        }
    }
    return true;
}

CurveFamily extract_curves(const Shell& sh, const std::vector<int>& spatial_counts, int nt,
                           const Tolerances& tol) {
    if (sh.has_curves()) {
        if (spatial_counts != sh.spatial_counts())
            throw DomainError("extract_curves: grid must match the stored curve family");
        return sh.curves();
    }
    if (nt < 5) throw DomainError("extract_curves: at least 5 time samples required");
    GridInfo g = make_grid(spatial_counts);
    std::vector<SphereCurve> curves;
    curves.reserve(g.pts.size());
    for (const Vec3& q : g.pts) {
        std::vector<double> ts(nt);
        std::vector<Vec3> gs(nt), d1(nt), d2(nt);
        for (int j = 0; j < nt; ++j) {
            double t = static_cast<double>(j) / (nt - 1);
            Pt p;
            p << q, t;
            Vec v0, v1, v2;
            sh.field().axis_jets(p, 3, v0, v1, v2);
            ts[j] = t;
            gs[j] = v0.head<3>();
            d1[j] = v1.head<3>();
            d2[j] = v2.head<3>();
        }
        SphereCurve c(std::move(ts), std::move(gs), sh.orientation().sign1, tol);
        c.set_jets(std::move(d1), std::move(d2));
        curves.push_back(std::move(c));
    }
    return CurveFamily(spatial_counts, std::move(curves));
}

ShellReport check_engel_shell(const Shell& sh, const std::vector<int>& spatial_counts, int nt,
                              const Tolerances& tol) {
    ShellView view(sh, spatial_counts, nt, tol);
    ShellReport rep;
    rep.tolerances = tol;
    rep.pass = true;
    rep.cross_check_pass = true;
    rep.min_abs_kg = std::numeric_limits<double>::infinity();
    int sigma = sh.orientation().sign1;
    for (int k = 0; k < view.nodes(); ++k) {
        if (!ball_point(view.grid().pts[k])) continue;
        for (int j = 0; j < view.nt(); ++j) {
            double t = view.tj(j);
            ShellPointVerdict v;
            v.p << view.grid().pts[k], t;
            CurveEval e = view.jet(k, t);
            double speed = e.d1.norm();
            v.immersed = speed >= tol.v_min;
            if (v.immersed) {
                v.kg = sigma * e.g.dot(e.d1.cross(e.d2)) / (speed * speed * speed);
                v.a_pass = std::abs(v.kg) >= tol.k_min;
            }
            v.contact_margin = view.contact_margin(k, t);
            v.b_pass = v.contact_margin >= tol.contact_min;
            v.engel_pass = v.immersed && (v.a_pass || v.b_pass);
            rep.min_abs_kg = std::min(rep.min_abs_kg, std::abs(v.kg));
            ++rep.checked;
            if (!v.engel_pass) {
                rep.pass = false;
                ++rep.failed;
            }
            bool bracket_pass;
            if (view.field_backed()) {
                static thread_local std::optional<VectorFieldDef> dt_leg;
                if (!dt_leg)
                    dt_leg = VectorFieldDef(sh.chart(), {Expr::number(0), Expr::number(0),
                                                         Expr::number(0), Expr::number(1)});
                auto [m3, m4] = engel_margins({*dt_leg, sh.field()}, v.p, tol);
                bracket_pass = m3 >= tol.sigma_min && m4 >= tol.sigma_min;
            } else {
                auto [m3, m4] = view.bracket_margins(k, t);
                bracket_pass = m3 >= tol.sigma_min && m4 >= tol.sigma_min;
            }
            if (bracket_pass != v.engel_pass) {
                rep.cross_check_pass = false;
                ++rep.cross_disagreements;
            }
            rep.points.push_back(v);
        }
    }
    return rep;
}

namespace {

// Shared convexity scaffolding: immersion everywhere, convexity on the
// boundary collar; optionally wiggle counts and excision convexity.
struct ConvexityScan {
    bool convex_shell = true;
    std::vector<std::vector<Wiggle>> wiggles;  // filled when requested
    std::vector<std::string> failures;
};

ConvexityScan scan_shell(const Shell& sh, const CurveFamily& F, const GridInfo& g,
                         bool with_wiggles, const Tolerances& tol) {
    ConvexityScan out;
    double ec = sh.epsilon() * tol.collar;
    out.wiggles.resize(F.nodes());
    for (int k = 0; k < F.nodes(); ++k) {
        if (!ball_point(g.pts[k])) continue;
        const SphereCurve& c = F.curve(k);
        if (!is_immersed(c, tol)) {
            out.convex_shell = false;
            out.failures.push_back("node " + std::to_string(k) + ": not immersed");
            continue;
        }
        bool spatial_collar = g.pts[k].norm() >= 1.0 - ec;
        std::vector<double> kg = geodesic_curvature(c, tol);
        for (int i = 0; i < c.size(); ++i) {
            double t = c.t(i);
            bool in_collar = spatial_collar || t <= ec || t >= 1.0 - ec;
            if (in_collar && kg[i] < tol.k_min) {
                out.convex_shell = false;
                out.failures.push_back("node " + std::to_string(k) +
                                       ": collar convexity fails at t = " + std::to_string(t));
                break;
            }
        }
        if (with_wiggles) out.wiggles[k] = detect_wiggles(c, tol);
    }
    return out;
}

} // namespace

bool is_convex_shell(const Shell& sh, const std::vector<int>& spatial_counts, int nt,
                     const Tolerances& tol) {
    CurveFamily F = extract_curves(sh, spatial_counts, nt, tol);
    GridInfo g = make_grid(spatial_counts);
    return scan_shell(sh, F, g, false, tol).convex_shell;
}

NConvexReport is_N_convex(const Shell& sh, int N, const std::vector<int>& spatial_counts, int nt,
                          const Tolerances& tol) {
    if (N < 0) throw DomainError("is_N_convex: N must be nonnegative");
    CurveFamily F = extract_curves(sh, spatial_counts, nt, tol);
    GridInfo g = make_grid(spatial_counts);
    ConvexityScan scan = scan_shell(sh, F, g, true, tol);
    NConvexReport rep;
    rep.tolerances = tol;
    rep.required = N;
    rep.pass = scan.convex_shell;
    rep.failures = std::move(scan.failures);
    rep.counts.assign(F.nodes(), -1);
    rep.witnesses.resize(F.nodes());
    rep.min_count = std::numeric_limits<int>::max();
    for (int k = 0; k < F.nodes(); ++k) {
        if (!ball_point(g.pts[k])) continue;
        const SphereCurve& c = F.curve(k);
        int count = 0;
        for (const Wiggle& w : scan.wiggles[k]) {
            double mid = 0.5 * (w.a + w.b);
            if (mid > 0.0 && mid < sh.epsilon()) {
                ++count;
                rep.witnesses[k].push_back(mid);
            }
        }
        rep.counts[k] = count;
        rep.min_count = std::min(rep.min_count, count);
        if (count < N) {
            rep.pass = false;
            if (rep.failures.size() < 32)
                rep.failures.push_back("node " + std::to_string(k) + ": only " +
                                       std::to_string(count) + " early wiggles");
        }
        // The early background must be convex once the wiggle intervals are
        // excised: on [0, epsilon] the curve is a convex arc with loops
        // inserted. Later times are only constrained through the collar.
        std::vector<double> kg = geodesic_curvature(c, tol);
        for (int i = 0; i < c.size(); ++i) {
            if (c.t(i) > sh.epsilon()) break;
            bool excised = false;
            for (const Wiggle& w : scan.wiggles[k])
                if (i >= w.ia && i <= w.ib) {
                    excised = true;
                    break;
                }
            if (!excised && kg[i] < tol.k_min) {
                rep.pass = false;
                if (rep.failures.size() < 32)
                    rep.failures.push_back("node " + std::to_string(k) +
                                           ": not convex off the wiggles at t = " +
                                           std::to_string(c.t(i)));
                break;
            }
        }
    }
    if (rep.min_count == std::numeric_limits<int>::max()) rep.min_count = 0;
    // Witness continuity across grid edges, as a Lipschitz ratio.
    rep.lipschitz_ok = true;
    for (int k = 0; k < F.nodes(); ++k) {
        if (rep.counts[k] < 0) continue;
        int idx[3];
        g.unflatten(k, idx);
        for (int ax = 0; ax < 3; ++ax) {
            if (idx[ax] + 1 >= g.counts[ax]) continue;
            int nb = k + g.stride(ax);
            if (rep.counts[nb] < 0) continue;
            int m = std::min({static_cast<int>(rep.witnesses[k].size()),
                              static_cast<int>(rep.witnesses[nb].size()), N});
            for (int i = 0; i < m; ++i) {
                double ratio = std::abs(rep.witnesses[k][i] - rep.witnesses[nb][i]) / g.h[ax];
                rep.max_lipschitz = std::max(rep.max_lipschitz, ratio);
                if (ratio > tol.grid_lipschitz) {
                    rep.lipschitz_ok = false;
                    rep.pass = false;
                    if (rep.failures.size() < 32)
                        rep.failures.push_back("witness " + std::to_string(i) +
                                               " jumps across nodes " + std::to_string(k) +
                                               " and " + std::to_string(nb));
                }
            }
        }
    }
    return rep;
}

Shell ShellHomotopy::at(double s) const {
    s = std::clamp(s, 0.0, 1.0);
    const CurveFamily& F0 = sched_.family();
    std::vector<SphereCurve> curves;
    curves.reserve(F0.nodes());
    for (int k = 0; k < F0.nodes(); ++k) curves.push_back(sched_.at(k, s * s_hi_));
    CurveFamily F(F0.shape(), std::move(curves));
    return Shell(std::move(F), counts_, sh0_.orientation(), sh0_.epsilon(), tol_);
}

ShellHomotopy solidify(const Shell& sh, const std::vector<int>& spatial_counts, int nt,
                       const Tolerances& tol) {
    NConvexReport pre = is_N_convex(sh, 1, spatial_counts, nt, tol);
    if (!pre.pass) {
        std::string why = pre.failures.empty() ? "shell is not 1-convex" : pre.failures.front();
        throw HypothesisViolated("solidify: " + why);
    }
    CurveFamily F = extract_curves(sh, spatial_counts, nt, tol);
    GridInfo g = make_grid(spatial_counts);
    double ec = sh.epsilon() * tol.collar;
    std::vector<char> frozen(F.nodes(), 0);
    for (int k = 0; k < F.nodes(); ++k)
        if (g.pts[k].norm() >= 1.0 - ec) frozen[k] = 1;
    F.set_frozen(std::move(frozen));

    double hmin = std::min({g.h[0], g.h[1], g.h[2]});
    int ramp_steps = static_cast<int>(std::floor(ec / hmin)) + 1;

    ShellHomotopy H;
    H.sh0_ = sh;
    H.counts_ = spatial_counts;
    H.nt_ = nt;
    H.tol_ = tol;
    H.sched_ = distribute_wiggles(F, sh.epsilon(), 6.0, tol, ramp_steps);
    H.s_hi_ = std::max(1.0, H.sched_.s_conv());
    return H;
}

} // namespace engel
