#include "engel/surgery.hpp"

#include "control.hpp"
#include "engel/errors.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <optional>

namespace engel {

namespace {

using control::Assembly;
using control::Mat3;
using control::MonotoneMap;

constexpr double kRhoBig = 1.0;        // loop radius while extra winding is pumped in
constexpr double kRungStep = 1.0 / 16; // continuation rung spacing on the schedule axis

double cot(double r) { return std::cos(r) / std::sin(r); }

double lerp(double a, double b, double u) { return (1.0 - u) * a + u * b; }

double interp_knots(const std::vector<double>& x, const std::vector<double>& y, double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), q);
    std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    double u = (q - x[i]) / (x[i + 1] - x[i]);
    return lerp(y[i], y[i + 1], u);
}

// One block of new loop material riding the host arc.
struct LoopSpec {
    double pos = 0.0;   // material coordinate of the attachment
    double len = 0.0;   // frame length of the block
    double k = 0.0;     // block curvature (k_g scale)
    double tau = 0.0;   // parameter assigned to the block center
};

// Baseline data of the deformation window of a host curve: the source loop is
// excised and the remaining material described by frame length and curvature.
struct WindowData {
    std::vector<double> lx;  // material frame-length knots, lx[0] = 0
    std::vector<double> kb;  // signed curvature at the knots
    double L = 0.0;          // total material length
    double l_src = 0.0;      // material position of the excised loop
    Mat3 F0 = Mat3::Identity();
    Mat3 F1 = Mat3::Identity();
    double t_lo = 0.0, t_hi = 1.0;   // host parameters at the seams
    double slope0 = 1.0, slope1 = 1.0;  // dt/dl at the seams
    int sigma = 1;
};

WindowData build_window(const SphereCurve& c, int i_lo, int i_hi, int ia, int ib,
                        const Tolerances& tol) {
    WindowData wd;
    wd.sigma = c.orientation();
    std::vector<int> idx;
    for (int i = i_lo; i <= ia; ++i) idx.push_back(i);
    for (int i = ib; i <= i_hi; ++i) idx.push_back(i);
    std::vector<double> kg(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j) kg[j] = geodesic_curvature(c, idx[j], tol);
    wd.lx.assign(idx.size(), 0.0);
    wd.kb = kg;
    for (std::size_t j = 1; j < idx.size(); ++j) {
        double ang = angle_between(c.point(idx[j - 1]), c.point(idx[j]));
        double kmid = 0.5 * (kg[j - 1] + kg[j]);
        wd.lx[j] = wd.lx[j - 1] + ang * std::sqrt(1.0 + kmid * kmid);
    }
    // Knots must increase strictly; nudge the junction across the excision.
    for (std::size_t j = 1; j < wd.lx.size(); ++j)
        if (wd.lx[j] <= wd.lx[j - 1]) wd.lx[j] = wd.lx[j - 1] + 1e-9;
    wd.L = wd.lx.back();
    wd.l_src = wd.lx[ia - i_lo];
    wd.F0 = control::sample_frame(c.point(i_lo), c.derivative(i_lo));
    wd.F1 = control::sample_frame(c.point(i_hi), c.derivative(i_hi));
    wd.t_lo = c.t(i_lo);
    wd.t_hi = c.t(i_hi);
    auto rate = [&](int i, double k) {
        return c.derivative(i).norm() * std::sqrt(1.0 + k * k);
    };
    wd.slope0 = 1.0 / rate(i_lo, kg.front());
    wd.slope1 = 1.0 / rate(i_hi, kg.back());
    return wd;
}

Assembly assemble(const WindowData& wd, std::vector<LoopSpec> loops, double blend,
                  const Tolerances& tol) {
    std::stable_sort(loops.begin(), loops.end(),
                     [](const LoopSpec& a, const LoopSpec& b) { return a.pos < b.pos; });
    Assembly A;
    A.F0 = wd.F0;
    A.F1 = wd.F1;
    A.sigma = wd.sigma;
    A.blend = blend;
    A.kfloor = 3.0 * tol.k_min;
    auto ambient = [&](double m0, double m1) {
        if (m1 - m0 < 1e-12) return;
        control::Sec s;
        s.len = m1 - m0;
        s.mat0 = m0;
        s.lx.push_back(0.0);
        s.kb.push_back(interp_knots(wd.lx, wd.kb, m0));
        for (std::size_t j = 0; j < wd.lx.size(); ++j)
            if (wd.lx[j] > m0 + 1e-12 && wd.lx[j] < m1 - 1e-12) {
                s.lx.push_back(wd.lx[j] - m0);
                s.kb.push_back(wd.kb[j]);
            }
        s.lx.push_back(s.len);
        s.kb.push_back(interp_knots(wd.lx, wd.kb, m1));
        A.secs.push_back(std::move(s));
    };
    double prev = 0.0;
    for (const LoopSpec& lp : loops) {
        ambient(prev, lp.pos);
        control::Sec s;
        s.is_loop = true;
        s.len = lp.len;
        s.kconst = lp.k;
        A.secs.push_back(std::move(s));
        prev = lp.pos;
    }
    ambient(prev, wd.L);
    for (double fc : {0.12, 0.34, 0.62, 0.86})
        A.bumps.push_back({fc * wd.L, 0.18 * wd.L});
    control::finalize_assembly(A);
    return A;
}

// Assigns parameters to the integrated window and splices it into the host.
SphereCurve synthesize(const SphereCurve& host, int i_lo, int i_hi, const WindowData& wd,
                       const Assembly& A, const Eigen::VectorXd& xi,
                       const std::vector<LoopSpec>& loops_sorted_input,
                       const std::optional<Mat3>& rotate_back, const Tolerances& tol) {
    std::vector<LoopSpec> loops = loops_sorted_input;
    std::stable_sort(loops.begin(), loops.end(),
                     [](const LoopSpec& a, const LoopSpec& b) { return a.pos < b.pos; });

    control::Integrated I = control::integrate(A, xi);

    // Assembly frame-length interval of every loop block, in pos order.
    std::vector<std::pair<double, double>> span(loops.size());
    {
        double prev = 0.0, off = 0.0;
        for (std::size_t j = 0; j < loops.size(); ++j) {
            off += std::max(0.0, loops[j].pos - prev);
            span[j] = {off, off + loops[j].len};
            off += loops[j].len;
            prev = loops[j].pos;
        }
    }
    double Lasm = A.total_len();

    // Strictly ordered parameter targets and halfwidths for the loop centers.
    double spanw = wd.t_hi - wd.t_lo;
    std::vector<double> tau(loops.size());
    for (std::size_t j = 0; j < loops.size(); ++j) tau[j] = loops[j].tau;
    double mingap = 2e-3 * spanw;
    for (std::size_t j = 0; j < tau.size(); ++j) {
        double lo = (j == 0 ? wd.t_lo : tau[j - 1]) + mingap;
        tau[j] = std::clamp(std::max(tau[j], lo), wd.t_lo + mingap, wd.t_hi - mingap);
    }
    for (std::size_t j = tau.size(); j-- > 0;) {
        double hi = (j + 1 < tau.size() ? tau[j + 1] : wd.t_hi) - mingap;
        tau[j] = std::min(tau[j], hi);
    }
    std::vector<double> halfw(loops.size());
    for (std::size_t j = 0; j < loops.size(); ++j) {
        double gl = tau[j] - (j == 0 ? wd.t_lo : tau[j - 1]);
        double gr = (j + 1 < loops.size() ? tau[j + 1] : wd.t_hi) - tau[j];
        halfw[j] = std::clamp(0.25 * std::min(gl, gr), 1e-5 * spanw, 0.1 * spanw);
    }

    std::vector<double> kx{0.0}, ky{wd.t_lo};
    for (std::size_t j = 0; j < loops.size(); ++j) {
        double xs[2] = {span[j].first, span[j].second};
        double ys[2] = {tau[j] - halfw[j], tau[j] + halfw[j]};
        for (int e = 0; e < 2; ++e) {
            if (xs[e] <= kx.back() + 1e-9 || ys[e] <= ky.back() + 1e-9) continue;
            if (xs[e] >= Lasm - 1e-9) continue;
            kx.push_back(xs[e]);
            ky.push_back(ys[e]);
        }
    }
    kx.push_back(Lasm);
    ky.push_back(wd.t_hi);
    MonotoneMap map(kx, ky, wd.slope0, wd.slope1);

    std::vector<double> ts;
    std::vector<Vec3> gs;
    for (int i = 0; i <= i_lo; ++i) {
        ts.push_back(host.t(i));
        gs.push_back(host.point(i));
    }
    for (std::size_t j = 1; j + 1 < I.samples.size(); ++j) {
        double t = map(I.samples[j].l);
        if (t <= ts.back() + 1e-12 || t >= wd.t_hi - 1e-12) continue;
        Vec3 g = I.samples[j].g;
        if (rotate_back) g = (*rotate_back) * g;
        ts.push_back(t);
        gs.push_back(g.normalized());
    }
    for (int i = i_hi; i < host.size(); ++i) {
        ts.push_back(host.t(i));
        gs.push_back(host.point(i));
    }
    return SphereCurve(std::move(ts), std::move(gs), host.orientation(), tol);
}

// ---------------------------------------------------------------------------
// The one-loop-to-three move as a curvature-profile path. Phases on u in
// [0,1]: grow the loop radius, pump in two extra windings at fixed curvature,
// shrink back to the child radius as a triple winding, then separate the
// three windings along the host material.

struct LittleShape {
    double rho0, rho_child, dmax;
    double t_src;            // parameter anchor of the source
    double tau_rate;         // parameter per unit material past the source
};

std::vector<LoopSpec> little_loops(const WindowData& wd, const LittleShape& sh, double u) {
    std::vector<LoopSpec> out;
    double k0 = cot(sh.rho0), kb = cot(kRhoBig), kc = cot(sh.rho_child);
    auto tau_at = [&](double pos) { return sh.t_src + (pos - wd.l_src) * sh.tau_rate; };
    double v = 4.0 * std::clamp(u, 0.0, 1.0);
    if (v <= 1.0) {
        out.push_back({wd.l_src, 2.0 * M_PI, lerp(k0, kb, v), sh.t_src});
    } else if (v <= 2.0) {
        out.push_back({wd.l_src, 2.0 * M_PI + 4.0 * M_PI * (v - 1.0), kb, sh.t_src});
    } else if (v <= 3.0) {
        out.push_back({wd.l_src, 6.0 * M_PI, lerp(kb, kc, v - 2.0), sh.t_src});
    } else {
        double d = (v - 3.0) * sh.dmax;
        out.push_back({wd.l_src, 2.0 * M_PI, kc, sh.t_src});
        out.push_back({wd.l_src + d, 2.0 * M_PI, kc, tau_at(wd.l_src + d)});
        out.push_back({wd.l_src + 2.0 * d, 2.0 * M_PI, kc, tau_at(wd.l_src + 2.0 * d)});
    }
    return out;
}

// Adaptive continuation of the closure weights along a block-schedule path.
template <typename LoopsAt>
bool walk_path(const WindowData& wd, const LoopsAt& loops_at, double blend_lo, double blend_hi,
               Eigen::VectorXd& xi, double from, double to, int init_subs,
               const Tolerances& tol) {
    if (to <= from + 1e-15) return true;
    double step = (to - from) / std::max(1, init_subs);
    double cur = from;
    while (cur < to - 1e-13) {
        double nxt = std::min(cur + step, to);
        double bl = lerp(blend_lo, blend_hi, (nxt - from) / (to - from));
        Assembly A = assemble(wd, loops_at(nxt), bl, tol);
        auto sol = control::newton_close(A, xi);
        if (sol) {
            xi = *sol;
            cur = nxt;
            step = std::min(step * 1.6, to - cur + 1e-16);
        } else {
            step *= 0.5;
            if (step < 1e-6) return false;
        }
    }
    return true;
}

} // namespace

std::vector<SphereCurve> little_homotopy(const SphereCurve& c, const Wiggle& w, int steps,
                                         const Tolerances& tol) {
    if (steps < 8) throw DomainError("little_homotopy: at least 8 steps required");
    if (!is_convex(c, tol)) throw NotConvex("little_homotopy: input curve must be convex");
    if (w.ia <= 0 || w.ib <= w.ia || w.ib >= c.size() - 1 || !(w.rho > 0.0))
        throw NonStandardWiggle("little_homotopy: malformed loop interval");

    // The loop must match a round circle of its declared radius.
    double kexp = cot(w.rho);
    for (int i = w.ia; i <= w.ib; ++i) {
        double ang = angle_between(c.point(i), w.center);
        if (std::abs(ang - w.rho) > std::max(0.12 * w.rho, 3e-3))
            throw NonStandardWiggle("little_homotopy: loop is not round");
    }
    {
        int imid = (w.ia + w.ib) / 2;
        double k = geodesic_curvature(c, imid, tol);
        if (std::abs(k - kexp) > 0.2 * (1.0 + kexp))
            throw NonStandardWiggle("little_homotopy: loop curvature off its radius");
    }

    // Normalize: rotate the loop center to the north pole and work there.
    Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(w.center, Vec3(0, 0, 1));
    Mat3 R = q.toRotationMatrix();
    std::vector<Vec3> gm(c.points().size());
    for (std::size_t i = 0; i < gm.size(); ++i) gm[i] = (R * c.point(i)).normalized();
    SphereCurve cm(c.params(), std::move(gm), c.orientation(), tol);

    // Window: walk outward until each flank carries enough frame length.
    auto flank = [&](int from, int dir, double need) {
        int i = from;
        double acc = 0.0;
        while (i + dir >= 0 && i + dir < cm.size() && acc < need) {
            double k = geodesic_curvature(cm, i, tol);
            acc += angle_between(cm.point(i), cm.point(i + dir)) * std::sqrt(1.0 + k * k);
            i += dir;
        }
        return std::pair<int, double>(i, acc);
    };
    auto [i_lo, accL] = flank(w.ia, -1, 3.0);
    auto [i_hi, accR] = flank(w.ib, +1, 3.0);
    if (accL < 0.8 || accR < 0.8)
        throw NonStandardWiggle("little_homotopy: not enough room around the loop");
    i_lo = std::min(i_lo, w.ia - 2);
    i_hi = std::max(i_hi, w.ib + 2);
    if (i_lo < 0 || i_hi > cm.size() - 1)
        throw NonStandardWiggle("little_homotopy: not enough samples around the loop");

    WindowData wd = build_window(cm, i_lo, i_hi, w.ia, w.ib, tol);
    LittleShape sh;
    sh.rho0 = w.rho;
    sh.rho_child = w.rho;
    sh.dmax = std::min(1.2 * w.rho, 0.3 * (wd.L - wd.l_src));
    sh.t_src = 0.5 * (w.a + w.b);
    sh.tau_rate = (wd.t_hi - sh.t_src) / std::max(1e-9, wd.L - wd.l_src);

    int count0 = static_cast<int>(detect_wiggles(c, tol).size());
    Mat3 Rt = R.transpose();

    std::vector<SphereCurve> out;
    out.push_back(c);
    Eigen::VectorXd xi = Eigen::VectorXd::Zero(4);
    auto loops_at = [&](double u) { return little_loops(wd, sh, u); };
    for (int j = 1; j <= steps; ++j) {
        double u0 = static_cast<double>(j - 1) / steps;
        double u1 = static_cast<double>(j) / steps;
        int subs = std::max(1, static_cast<int>(std::ceil((u1 - u0) * 64)));
        if (!walk_path(wd, loops_at, 0.0, 0.0, xi, u0, u1, subs, tol))
            throw ConvexityLost("little_homotopy: closure failed at step " + std::to_string(j));
        Assembly A = assemble(wd, little_loops(wd, sh, u1), 0.0, tol);
        SphereCurve h = synthesize(c, i_lo, i_hi, wd, A, xi, little_loops(wd, sh, u1), Rt, tol);
        if (!is_convex(h, tol))
            throw ConvexityLost("little_homotopy: convexity lost at step " + std::to_string(j));
        out.push_back(std::move(h));
    }
    int count1 = static_cast<int>(detect_wiggles(out.back(), tol).size());
    if (count1 != count0 + 2)
        throw ConvexityLost("little_homotopy: expected two extra loops, found " +
                            std::to_string(count1 - count0));
    return out;
}

// ---------------------------------------------------------------------------
// Distribution schedule.

class ScheduleState {
public:
    CurveFamily F;
    double a = 0.1;
    double smax = 1.0;
    double t0 = 0.0, t1 = 1.0;
    Tolerances tol;
    bool relaxed = false;

    struct Node {
        bool active = false;
        int i_lo = 0, i_hi = 0;
        double t_src = 0.0, rho_src = 0.05;
        WindowData wd;
        mutable std::vector<std::optional<Eigen::VectorXd>> rungs;
    };
    std::vector<Node> nodes;
    std::vector<double> rampv;
    mutable double sconv_cache = -1.0;

    double blend_at(double se) const { return std::clamp(se - 2.0, 0.0, 1.0); }

    std::vector<LoopSpec> loops_at(const Node& nd, double se) const {
        const WindowData& wd = nd.wd;
        double Lp = wd.L - wd.l_src;
        int n = static_cast<int>(std::floor(se + 1e-12));
        double phi = se - n;
        double tau_end = t1 - a;
        double tau_rate = (tau_end - nd.t_src) / std::max(1e-9, Lp);
        auto xpos = [&](int j, int m) { return wd.l_src + (static_cast<double>(j) / (2 * m)) * Lp; };
        auto xtau = [&](int j, int m) {
            return (t0 + a) + (static_cast<double>(j) / (2 * m)) * (t1 - t0 - 2 * a);
        };
        double rho_birth = std::min(nd.rho_src, 1.0 / (n + 1.0));
        double dmax = std::min(1.2 * rho_birth, 0.45 * Lp / (2 * n + 2));

        std::vector<LoopSpec> out;
        if (phi <= 0.5) {
            LittleShape sh{nd.rho_src, rho_birth, dmax, nd.t_src, tau_rate};
            out = little_loops(wd, sh, 2.0 * phi);
            for (int j = 1; j <= 2 * n; ++j)
                out.push_back({xpos(j, n), 2.0 * M_PI, cot(1.0 / n), xtau(j, n)});
        } else {
            double u = 2.0 * phi - 1.0;
            // The source grows back from the birth radius while its children
            // slide away, restoring its radius by the end of the cycle.
            out.push_back({wd.l_src, 2.0 * M_PI, cot(lerp(rho_birth, nd.rho_src, u)), nd.t_src});
            double rnew = 1.0 / (n + 1.0);
            for (int ch = 1; ch <= 2; ++ch) {
                double p0 = wd.l_src + ch * dmax;
                double p1 = xpos(ch, n + 1);
                double tau0 = nd.t_src + (p0 - wd.l_src) * tau_rate;
                out.push_back({lerp(p0, p1, u), 2.0 * M_PI,
                               cot(lerp(rho_birth, rnew, u)), lerp(tau0, xtau(ch, n + 1), u)});
            }
            for (int j = 1; j <= 2 * n; ++j)
                out.push_back({lerp(xpos(j, n), xpos(j + 2, n + 1), u), 2.0 * M_PI,
                               cot(lerp(1.0 / n, rnew, u)), lerp(xtau(j, n), xtau(j + 2, n + 1), u)});
        }
        return out;
    }

    // Continuation ladder on fixed rungs; deterministic in the query value.
    Eigen::VectorXd xi_at(const Node& nd, double se) const {
        int rtarget = static_cast<int>(std::floor(se / kRungStep + 1e-12));
        if (nd.rungs.empty()) nd.rungs.resize(static_cast<std::size_t>(smax / kRungStep) + 2);
        auto loops_fn = [&](double s) { return loops_at(nd, s); };
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(4);
        int have = -1;
        for (int r = rtarget; r >= 0; --r)
            if (r < static_cast<int>(nd.rungs.size()) && nd.rungs[r]) {
                have = r;
                xi = *nd.rungs[r];
                break;
            }
        for (int r = have + 1; r <= rtarget; ++r) {
            double s0 = (r - 1 < 0) ? 0.0 : (r - 1) * kRungStep;
            double s1 = r * kRungStep;
            if (s1 > se) break;
            int frac16 = (r - 1) % 16;
            int subs = (frac16 == 2 || frac16 == 3) ? 32 : 2;  // winding pump needs care
            if (!walk_path(nd.wd, loops_fn, blend_at(s0), blend_at(s1), xi, s0, s1, subs, tol))
                throw ConvexityLost("distribute: closure failed near schedule time " +
                                    std::to_string(s1));
            if (r < static_cast<int>(nd.rungs.size())) nd.rungs[r] = xi;
        }
        double sfrom = rtarget * kRungStep;
        if (se > sfrom + 1e-13) {
            int frac16 = rtarget % 16;
            int subs = (frac16 == 2 || frac16 == 3) ? 8 : 2;
            if (!walk_path(nd.wd, loops_fn, blend_at(sfrom), blend_at(se), xi, sfrom, se, subs, tol))
                throw ConvexityLost("distribute: closure failed near schedule time " +
                                    std::to_string(se));
        }
        return xi;
    }

    SphereCurve eval(int k, double s) const {
        if (k < 0 || k >= F.nodes()) throw DomainError("distribute: node index out of range");
        if (s < -1e-12 || s > smax + 1e-12)
            throw DomainError("distribute: schedule time outside [0, s_max]");
        const Node& nd = nodes[k];
        double se = rampv[k] * std::clamp(s, 0.0, smax);
        if (!nd.active || se <= 1e-12) return F.curve(k);
        Eigen::VectorXd xi = xi_at(nd, se);
        std::vector<LoopSpec> loops = loops_at(nd, se);
        Assembly A = assemble(nd.wd, loops, blend_at(se), tol);
        return synthesize(F.curve(k), nd.i_lo, nd.i_hi, nd.wd, A, xi, loops, std::nullopt, tol);
    }
};

WiggleSchedule::WiggleSchedule(std::shared_ptr<ScheduleState> state)
    : state_(std::move(state)) {}

const CurveFamily& WiggleSchedule::family() const { return state_->F; }
double WiggleSchedule::margin() const { return state_->a; }
double WiggleSchedule::s_max() const { return state_->smax; }
SphereCurve WiggleSchedule::at(int k, double s) const { return state_->eval(k, s); }
double WiggleSchedule::ramp(int k) const { return state_->rampv[k]; }
bool WiggleSchedule::near_frozen(int k) const { return state_->rampv[k] < 1.0; }

double WiggleSchedule::spacing_constant() const {
    double C = 0.0;
    for (int k = 0; k < state_->F.nodes(); ++k) {
        const auto& nd = state_->nodes[k];
        if (!nd.active) continue;
        // Spatial arc length of the material past the source attachment.
        const auto& wd = nd.wd;
        double arc = 0.0;
        for (std::size_t j = 1; j < wd.lx.size(); ++j) {
            if (wd.lx[j] <= wd.l_src) continue;
            double kmid = 0.5 * (wd.kb[j - 1] + wd.kb[j]);
            arc += (wd.lx[j] - std::max(wd.lx[j - 1], wd.l_src)) / std::sqrt(1.0 + kmid * kmid);
        }
        C = std::max(C, 0.5 * arc);
    }
    return C;
}

double WiggleSchedule::s_conv() const {
    if (state_->sconv_cache >= 0.0) return state_->sconv_cache;
    auto all_convex = [&](double s) {
        for (int k = 0; k < state_->F.nodes(); ++k) {
            if (state_->rampv[k] < 1.0 || !state_->nodes[k].active) continue;
            if (!is_convex(state_->eval(k, s), state_->tol)) return false;
        }
        return true;
    };
    double step = 0.25;
    double found = -1.0;
    int ngrid = static_cast<int>(std::floor(state_->smax / step + 1e-9));
    std::vector<char> ok(ngrid + 1, 0);
    for (int i = ngrid; i >= 0; --i) {
        ok[i] = all_convex(i * step) ? 1 : 0;
        if (!ok[i]) break;
    }
    for (int i = 0; i <= ngrid; ++i)
        if (ok[i]) {
            found = i * step;
            break;
        }
    if (found < 0.0) {
        state_->sconv_cache = state_->smax;
        return state_->sconv_cache;
    }
    double lo = std::max(0.0, found - step), hi = found;
    if (found > 0.0)
        for (int it = 0; it < 6; ++it) {
            double mid = 0.5 * (lo + hi);
            if (all_convex(mid))
                hi = mid;
            else
                lo = mid;
        }
    state_->sconv_cache = hi;
    return hi;
}

namespace {

std::vector<double> frozen_ramp(const CurveFamily& F, int ramp_steps) {
    int n = F.nodes();
    std::vector<int> dist(n, -1);
    std::vector<int> queue;
    for (int k = 0; k < n; ++k)
        if (F.frozen(k)) {
            dist[k] = 0;
            queue.push_back(k);
        }
    const auto& shape = F.shape();
    int dims = static_cast<int>(shape.size());
    auto unflatten = [&](int flat, std::vector<int>& ix) {
        for (int d = dims - 1; d >= 0; --d) {
            ix[d] = flat % shape[d];
            flat /= shape[d];
        }
    };
    auto flatten = [&](const std::vector<int>& ix) {
        int f = 0;
        for (int d = 0; d < dims; ++d) f = f * shape[d] + ix[d];
        return f;
    };
    std::vector<int> ix(dims);
    for (std::size_t h = 0; h < queue.size(); ++h) {
        int cur = queue[h];
        unflatten(cur, ix);
        for (int d = 0; d < dims; ++d)
            for (int dd = -1; dd <= 1; dd += 2) {
                ix[d] += dd;
                if (ix[d] >= 0 && ix[d] < shape[d]) {
                    int nb = flatten(ix);
                    if (dist[nb] < 0) {
                        dist[nb] = dist[cur] + 1;
                        queue.push_back(nb);
                    }
                }
                ix[d] -= dd;
            }
    }
    std::vector<double> ramp(n, 1.0);
    double scale = std::max(1, ramp_steps);
    for (int k = 0; k < n; ++k)
        if (dist[k] >= 0) ramp[k] = std::min(1.0, dist[k] / scale);
    return ramp;
}

WiggleSchedule make_schedule(const CurveFamily& F, double a, double s_max, const Tolerances& tol,
                             bool relaxed, const std::vector<char>& skip, int ramp_steps = 3) {
    if (F.nodes() == 0) throw DomainError("distribute: empty family");
    if (!(s_max > 0.0) || s_max > 48.0)
        throw DomainError("distribute: schedule horizon must lie in (0, 48]");
    auto st = std::make_shared<ScheduleState>();
    st->F = F;
    st->a = a;
    st->smax = s_max;
    st->tol = tol;
    st->relaxed = relaxed;
    st->t0 = F.curve(0).t_begin();
    st->t1 = F.curve(0).t_end();
    if (!(a > 0.0) || a > 0.35 * (st->t1 - st->t0))
        throw DomainError("distribute: margin must lie in (0, 0.35 interval)");
    st->rampv = frozen_ramp(F, ramp_steps);
    st->nodes.resize(F.nodes());
    for (int k = 0; k < F.nodes(); ++k) {
        const SphereCurve& c = F.curve(k);
        if (std::abs(c.t_begin() - st->t0) > 1e-12 || std::abs(c.t_end() - st->t1) > 1e-12)
            throw DomainError("distribute: family curves must share one interval");
        if (F.frozen(k)) {
            if (!relaxed && !is_convex(c, tol))
                throw HypothesisViolated("distribute: frozen node " + std::to_string(k) +
                                         " is not convex");
            continue;
        }
        if (!skip.empty() && skip[k]) continue;
        auto& nd = st->nodes[k];

        std::vector<Wiggle> ws = detect_wiggles(c, tol);
        const Wiggle* src = nullptr;
        double best = 1e300;
        for (const Wiggle& w : ws) {
            double mid = 0.5 * (w.a + w.b);
            double off = std::abs(mid - (st->t0 + a));
            if (mid > st->t0 + 0.25 * a && mid < st->t0 + 1.9 * a && off < best) {
                best = off;
                src = &w;
            }
        }
        if (!src)
            throw HypothesisViolated("distribute: node " + std::to_string(k) +
                                     " has no loop at the margin");
        const Wiggle w = *src;
        if (w.a <= st->t0 + 0.5 * a + 1e-9)
            throw HypothesisViolated("distribute: margin loop of node " + std::to_string(k) +
                                     " crosses the frozen zone");
        if (!relaxed) {
            for (int i = 0; i < c.size(); ++i) {
                double t = c.t(i);
                bool margin_pt = (t <= st->t0 + a || t >= st->t1 - a);
                bool in_loop = (i >= w.ia && i <= w.ib);
                if (margin_pt && !in_loop && geodesic_curvature(c, i, tol) < tol.k_min)
                    throw HypothesisViolated("distribute: node " + std::to_string(k) +
                                             " is not convex on the margins");
            }
        }
        int i_lo = 0;
        while (i_lo + 1 < c.size() && c.t(i_lo + 1) <= st->t0 + 0.5 * a) ++i_lo;
        int i_hi = c.size() - 1;
        while (i_hi - 1 > 0 && c.t(i_hi - 1) >= st->t1 - a) --i_hi;
        if (i_lo > w.ia - 2 || i_hi < w.ib + 2)
            throw HypothesisViolated("distribute: node " + std::to_string(k) +
                                     " margin loop leaves no room for the window");
        nd.i_lo = i_lo;
        nd.i_hi = i_hi;
        nd.t_src = 0.5 * (w.a + w.b);
        nd.rho_src = w.rho;
        nd.wd = build_window(c, i_lo, i_hi, w.ia, w.ib, tol);
        nd.active = true;
    }
    return WiggleSchedule(std::move(st));
}

} // namespace

WiggleSchedule distribute_wiggles(const CurveFamily& F, double a, double s_max,
                                  const Tolerances& tol, int ramp_steps) {
    return make_schedule(F, a, s_max, tol, false, {}, ramp_steps);
}

// ---------------------------------------------------------------------------
// Family convexification: seed a margin loop where necessary, then run the
// schedule past its convexification time.

SphereCurve ConvexifyHomotopy::at(int k, double u) const {
    if (k < 0 || k >= input_.nodes()) throw DomainError("convexify: node index out of range");
    u = std::clamp(u, 0.0, 1.0);
    if (input_.frozen(k) || had_loop_[k] == 2) return input_.curve(k);
    double u1 = 0.2;
    if (had_loop_[k] == 0 && u < u1) {
        double rho = rho0_ * std::max(u / u1, 0.05);
        return insert_wiggles(input_.curve(k), input_.curve(k).t_begin() + margin_, 1, rho, tol_);
    }
    double s = (had_loop_[k] == 0) ? (u - u1) / (1.0 - u1) * s_final_ : u * s_final_;
    return schedule_.at(k, std::max(0.0, s));
}

CurveFamily ConvexifyHomotopy::final_family() const {
    std::vector<SphereCurve> curves;
    curves.reserve(input_.nodes());
    for (int k = 0; k < input_.nodes(); ++k) curves.push_back(at(k, 1.0));
    CurveFamily out(input_.shape(), std::move(curves));
    std::vector<char> mask(input_.nodes(), 0);
    bool any = false;
    for (int k = 0; k < input_.nodes(); ++k)
        if (input_.frozen(k)) {
            mask[k] = 1;
            any = true;
        }
    if (any) out.set_frozen(std::move(mask));
    return out;
}

double ConvexifyHomotopy::margin() const { return margin_; }
double ConvexifyHomotopy::s_final() const { return s_final_; }

ConvexifyHomotopy convexify_family(const CurveFamily& F, int density, const Tolerances& tol) {
    if (density < 0) throw DomainError("convexify: negative loop density");
    if (F.nodes() == 0) throw DomainError("convexify: empty family");
    ConvexifyHomotopy H;
    H.input_ = F;
    H.tol_ = tol;
    double t0 = F.curve(0).t_begin(), t1 = F.curve(0).t_end();
    // Wide margin and small seed loop keep the seeded wiggle clear of the
    // frozen zone that the schedule never touches.
    H.margin_ = 0.15 * (t1 - t0);
    H.rho0_ = 0.05;

    std::vector<SphereCurve> seeded;
    seeded.reserve(F.nodes());
    H.had_loop_.assign(F.nodes(), 0);
    std::vector<char> skip(F.nodes(), 0);
    for (int k = 0; k < F.nodes(); ++k) {
        const SphereCurve& c = F.curve(k);
        if (F.frozen(k)) {
            seeded.push_back(c);
            H.had_loop_[k] = 2;
            continue;
        }
        if (!is_immersed(c, tol)) throw NotImmersed("convexify: node " + std::to_string(k));
        std::vector<Wiggle> ws = detect_wiggles(c, tol);
        bool has = false;
        for (const Wiggle& w : ws) {
            double mid = 0.5 * (w.a + w.b);
            if (mid > t0 + 0.25 * H.margin_ && mid < t0 + 1.9 * H.margin_ &&
                w.a > t0 + 0.5 * H.margin_ + 1e-9)
                has = true;
        }
        if (has) {
            seeded.push_back(c);
            H.had_loop_[k] = 1;
        } else if (density == 0 && is_convex(c, tol)) {
            seeded.push_back(c);
            H.had_loop_[k] = 2;
            skip[k] = 1;
        } else {
            seeded.push_back(insert_wiggles(c, t0 + H.margin_, 1, H.rho0_, tol));
            H.had_loop_[k] = 0;
        }
    }
    CurveFamily Fs(F.shape(), std::move(seeded));
    {
        std::vector<char> mask(F.nodes(), 0);
        bool any = false;
        for (int k = 0; k < F.nodes(); ++k)
            if (F.frozen(k)) {
                mask[k] = 1;
                any = true;
            }
        if (any) Fs.set_frozen(std::move(mask));
    }
    H.seeded_ = Fs;

    bool all_passthrough = true;
    for (int k = 0; k < F.nodes(); ++k)
        if (H.had_loop_[k] != 2) all_passthrough = false;
    if (all_passthrough) {
        H.s_final_ = 0.0;
        H.schedule_ = WiggleSchedule();
        // Identity homotopy: at() short-circuits on mode 2 for every node.
        return H;
    }

    double s_req = std::max(0.0, std::ceil(0.5 * (density - 1)));
    double s_cap = std::max(4.0, s_req + 1.0);
    H.schedule_ = make_schedule(Fs, H.margin_, s_cap, tol, true, skip);
    double sc = H.schedule_.s_conv();
    H.s_final_ = std::min(s_cap, std::max({s_req, sc, 1.0}));
    return H;
}

} // namespace engel
