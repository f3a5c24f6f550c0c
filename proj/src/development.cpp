#include "engel/development.hpp"

#include "engel/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace engel {

namespace {

struct FlowState {
    Pt x = Pt::Zero();
    Mat4 A = Mat4::Identity();
};

FlowState flow_deriv(const VectorFieldDef& Y, const FlowState& s) {
    FlowState d;
    Mat4 J;
    Y.value_and_jacobian(s.x, d.x, J);
    d.A = J * s.A;
    return d;
}

// Classical one-step 4th order integration of (x, A).
FlowState rk4_step(const VectorFieldDef& Y, const FlowState& s, double h) {
    FlowState k1 = flow_deriv(Y, s);
    FlowState m;
    m.x = s.x + 0.5 * h * k1.x;
    m.A = s.A + 0.5 * h * k1.A;
    FlowState k2 = flow_deriv(Y, m);
    m.x = s.x + 0.5 * h * k2.x;
    m.A = s.A + 0.5 * h * k2.A;
    FlowState k3 = flow_deriv(Y, m);
    m.x = s.x + h * k3.x;
    m.A = s.A + h * k3.A;
    FlowState k4 = flow_deriv(Y, m);
    FlowState out;
    out.x = s.x + (h / 6.0) * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
    out.A = s.A + (h / 6.0) * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A);
    return out;
}

std::vector<FlowState> integrate_flow(const VectorFieldDef& Y, const Pt& p, double T, int n) {
    std::vector<FlowState> out;
    out.reserve(n + 1);
    FlowState s;
    s.x = p;
    out.push_back(s);
    double h = T / n;
    for (int i = 0; i < n; ++i) {
        s = rk4_step(Y, s, h);
        if (!Y.chart().contains(s.x, 1e-9))
            throw FlowEscape("flow: left the chart at time " + std::to_string((i + 1) * h));
        out.push_back(s);
    }
    return out;
}

} // namespace

FlowSegment flow_segment(const VectorFieldDef& Y, const Pt& p, double T, const Tolerances& tol) {
    if (!(T > 0.0)) throw DomainError("flow: horizon must be positive");
    if (!Y.chart().contains(p, 1e-9)) throw DomainError("flow: base point outside the chart");

    int n = 64;
    std::vector<FlowState> coarse = integrate_flow(Y, p, T, n);
    std::vector<FlowState> fine;
    int halvings = 0;
    double budget = tol.ode_tol * std::max(1.0, T);
    for (;; ++halvings) {
        fine = integrate_flow(Y, p, T, 2 * n);
        double err = (fine.back().x - coarse.back().x).norm() +
                     (fine.back().A - coarse.back().A).norm() /
                         std::max(1.0, fine.back().A.norm());
        if (err <= budget) break;
        if (n >= 65536)
            throw NumericalError("flow: step halving did not reach the error budget");
        n *= 2;
        coarse = std::move(fine);
    }
    n *= 2;  // the accepted grid

    FlowSegment seg;
    seg.base = p;
    seg.Y = Y;
    seg.halvings = halvings;
    int stride = std::max(1, n / 2048);
    for (int i = 0; i <= n; i += stride) {
        seg.times.push_back(T * i / n);
        seg.points.push_back(fine[i].x);
        seg.transports.push_back(fine[i].A);
    }
    if (seg.times.back() < T - 1e-15) {
        seg.times.push_back(T);
        seg.points.push_back(fine[n].x);
        seg.transports.push_back(fine[n].A);
    }

    // Embeddedness margin: closest approach between samples separated by a
    // nontrivial stretch of arc.
    const ChartDomain& ch = Y.chart();
    std::size_t m = seg.points.size();
    std::vector<double> arc(m, 0.0);
    for (std::size_t i = 1; i < m; ++i)
        arc[i] = arc[i - 1] + ch.distance(seg.points[i - 1], seg.points[i]);
    double sep = std::max(10.0 * tol.delta_min, 5.0 * arc.back() / std::max<std::size_t>(1, m));
    double dmin = 1e9;
    for (std::size_t i = 0; i < m; ++i) {
        std::size_t j = i + 1;
        while (j < m && arc[j] - arc[i] < sep) ++j;
        for (; j < m; ++j) dmin = std::min(dmin, ch.distance(seg.points[i], seg.points[j]));
    }
    seg.delta_emb = dmin;
    return seg;
}

DevelopmentCurve develop(const std::vector<VectorFieldDef>& D, const VectorFieldDef& Y,
                         const Pt& p, double T, const Tolerances& tol) {
    if (D.size() != 2) throw DomainError("develop: frame must have 2 legs");
    if (D[0].chart().dim() != 4 || Y.chart().dim() != 4)
        throw DomainError("develop: 4-dimensional chart required");

    FlowSegment seg = flow_segment(Y, p, T, tol);

    // Orthonormal complement basis of Y(p), oriented so that
    // det[y0, b1, b2, b3] = +1.
    Vec y0 = Y.value(p);
    double yn = y0.norm();
    if (yn < tol.v_min) throw DomainError("develop: representative field vanishes at the base");
    y0 /= yn;
    Mat4 M = Mat4::Identity();
    int drop = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(y0[i]) > std::abs(y0[drop])) drop = i;
    int c = 0;
    M.col(c++) = y0;
    for (int i = 0; i < 4; ++i)
        if (i != drop) M.col(c++) = Vec::Unit(i);
    Eigen::HouseholderQR<Mat4> qr(M);
    Mat4 Q = qr.householderQ();
    if (Q.col(0).dot(y0) < 0.0) Q = -Q;
    Eigen::Matrix<double, 4, 3> B = Q.rightCols<3>();
    // Orientation convention: (b1, b2, b3, y0) is positively oriented. With
    // it a flowbox plane field <dt, X> develops along dt to X itself,
    // curvature sign included.
    Mat4 check;
    check << B, y0;
    if (check.determinant() < 0.0) B.col(2) = -B.col(2);

    auto quotient_dir = [&](const Pt& q, const Mat4& A) {
        // D/Y representative at q: the leg least aligned with Y there.
        Vec yq = Y.value(q);
        double yqn = yq.norm();
        if (yqn < tol.v_min) throw TangencyToY("develop: representative field vanishes on the flow");
        yq /= yqn;
        Vec best = Vec::Zero();
        double bestres = -1.0;
        for (const auto& leg : D) {
            Vec d = leg.value(q);
            Vec res = d - yq.dot(d) * yq;
            if (res.norm() > bestres) {
                bestres = res.norm();
                best = d;
            }
        }
        Vec back = A.partialPivLu().solve(best);
        Vec3 g = B.transpose() * back;
        double n = g.norm();
        if (n < tol.v_min * 1e-3)
            throw TangencyToY("develop: plane field degenerates onto the flow direction");
        return Vec3(g / n);
    };

    // Y must lie in span(D) along the flow.
    for (const Pt& q : seg.points) {
        Eigen::Matrix<double, 4, 2> legs;
        legs.col(0) = D[0].value(q).normalized();
        legs.col(1) = D[1].value(q).normalized();
        Vec yq = Y.value(q).normalized();
        Vec res = yq - legs * (legs.colPivHouseholderQr().solve(yq));
        if (res.norm() > std::sin(tol.theta_min))
            throw DomainError("develop: Y is not contained in the plane field");
    }

    std::vector<double> ts;
    std::vector<Vec3> gs;
    ts.reserve(seg.points.size());
    gs.reserve(seg.points.size());
    Vec3 prev = Vec3::Zero();
    for (std::size_t i = 0; i < seg.points.size(); ++i) {
        Vec3 g = quotient_dir(seg.points[i], seg.transports[i]);
        if (i > 0 && g.dot(prev) < 0.0) g = -g;  // continuous projective lift
        ts.push_back(seg.times[i]);
        gs.push_back(g);
        prev = g;
    }
    DevelopmentCurve out;
    out.base = p;
    out.curve = SphereCurve(std::move(ts), std::move(gs), 1, tol);
    out.segment = std::move(seg);
    return out;
}

DevelopmentReport check_development_engel(const std::vector<VectorFieldDef>& D,
                                          const VectorFieldDef& Y, const std::vector<Pt>& points,
                                          double T, const Tolerances& tol) {
    DevelopmentReport rep;
    rep.tolerances = tol;
    rep.all_immersed = true;
    rep.all_convex = true;
    rep.cross_check_pass = true;
    for (const Pt& p : points) {
        DevelopmentCurve dev = develop(D, Y, p, T, tol);
        DevelopmentPointCheck pc;
        pc.p = p;
        pc.flow_samples = dev.curve.size();
        pc.immersed = is_immersed(dev.curve, tol);
        pc.convex = pc.immersed && is_convex(dev.curve, tol);
        // Immersion at each sample must match the first bracket-rank margin
        // of the frame at the flow point it came from.
        for (int i = 0; i < dev.curve.size(); ++i) {
            bool imm = dev.curve.derivative(i).norm() >= tol.v_min;
            auto [m3, m4] = engel_margins(D, dev.segment.points[i], tol);
            (void)m4;
            bool rank = m3 >= tol.sigma_min;
            if (imm != rank) ++pc.disagreements;
        }
        rep.disagreements += pc.disagreements;
        rep.all_immersed = rep.all_immersed && pc.immersed;
        rep.all_convex = rep.all_convex && pc.convex;
        rep.points.push_back(pc);
    }
    rep.cross_check_pass = rep.disagreements == 0;
    return rep;
}

LoosenessCertificate certify_looseness(const std::vector<VectorFieldDef>& D,
                                       const VectorFieldDef& Y, int N,
                                       const std::vector<Pt>& points, double T_max,
                                       const Tolerances& tol) {
    if (N < 1) throw DomainError("certify_looseness: N must be positive");
    if (!(T_max > 0.0)) throw DomainError("certify_looseness: T_max must be positive");
    LoosenessCertificate cert;
    cert.tolerances = tol;
    cert.required = N;
    cert.success = true;
    cert.best_margin = 0.0;
    cert.best_count = 0;
    for (const Pt& p : points) {
        bool found = false;
        bool escaped = false;
        int best_count = 0;
        double best_margin = 0.0;
        for (double T = T_max / 8.0; T <= T_max * 1.0000001; T *= 2.0) {
            DevelopmentCurve dev;
            try {
                dev = develop(D, Y, p, T, tol);
            } catch (const FlowEscape&) {
                // Longer horizons only travel farther; this rung ends the ladder.
                escaped = true;
                break;
            }
            if (!is_convex(dev.curve, tol))
                throw NotConvex("certify_looseness: development curve not convex at a sample point");
            int count = static_cast<int>(detect_wiggles(dev.curve, tol).size());
            double margin = dev.segment.delta_emb;
            if (count >= N && margin > tol.delta_min) {
                LoosenessWitness w;
                w.p = p;
                w.T_used = T;
                w.wiggle_count = count;
                w.delta_emb = margin;
                w.segment = std::move(dev.segment);
                cert.witnesses.push_back(std::move(w));
                found = true;
                break;
            }
            if (count > best_count || (count == best_count && margin > best_margin)) {
                best_count = count;
                best_margin = margin;
            }
        }
        if (!found) {
            cert.success = false;
            if (best_count >= cert.best_count) {
                cert.best_count = best_count;
                cert.best_margin = best_margin;
                cert.worst_point = p;
            }
            if (escaped && best_count == 0) {
                cert.diagnosis = "flow leaves the chart before collecting enough wiggles";
            } else if (best_margin <= tol.delta_min && best_count < N) {
                cert.closed_orbit_suspected = true;
                cert.diagnosis =
                    "flow segments lose embeddedness before collecting enough wiggles "
                    "(closed orbit along the line field suspected)";
            } else {
                cert.diagnosis = "not enough wiggles within the time horizon";
            }
        }
    }
    return cert;
}

int n0_lower_bound(int dim_K, std::optional<int> D_overlap) {
    if (dim_K < 0) throw DomainError("n0_lower_bound: dim_K must be nonnegative");
    int base = 2 * (dim_K + 4) + 1;
    if (!D_overlap) return base;
    if (*D_overlap < 0) throw DomainError("n0_lower_bound: overlap must be nonnegative");
    return base + 2 * (*D_overlap);
}

} // namespace engel
