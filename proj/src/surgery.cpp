#include "engel/surgery.hpp"

#include "control.hpp"
#include "engel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace engel {

namespace {

constexpr int kLoopSamples = 48;  // samples per full loop winding

struct LoopJet {
    Vec3 g, d1, d2;  // derivatives with respect to the loop angle phi
};

// Point of the tangent loop at angle phi: a circle of spherical radius rho
// through P, tangent to direction dhat, bulging toward sigma * (P x dhat).
// Its frame length equals phi exactly.
LoopJet loop_point(const Vec3& P, const Vec3& dhat, int sigma, double rho, double phi) {
    Vec3 m = sigma * P.cross(dhat);
    Vec3 w = std::cos(rho) * P + std::sin(rho) * m;
    Vec3 e1 = std::sin(rho) * P - std::cos(rho) * m;
    double c = std::cos(phi), s = std::sin(phi);
    LoopJet out;
    out.g = std::cos(rho) * w + std::sin(rho) * (c * e1 + s * dhat);
    out.d1 = std::sin(rho) * (-s * e1 + c * dhat);
    out.d2 = std::sin(rho) * (-c * e1 - s * dhat);
    return out;
}

} // namespace

SphereCurve insert_wiggles(const SphereCurve& c, double t0, int n, double rho,
                           const Tolerances& tol) {
    if (n < 0) throw DomainError("insert_wiggles: negative loop count");
    if (n == 0) return c;
    if (!(rho > 0.0) || rho > M_PI / 2 - 0.02)
        throw LoopDoesNotFit("insert_wiggles: loop radius must lie in (0, pi/2)");

    int i0 = c.index_at(t0);
    if (i0 + 1 < c.size() && std::abs(c.t(i0 + 1) - t0) < std::abs(c.t(i0) - t0)) ++i0;
    Vec3 d0 = c.derivative(i0);
    if (d0.norm() < tol.v_min)
        throw NotImmersedAtCutPoint("insert_wiggles: curve speed below v_min at the cut");
    Vec3 P = c.point(i0);
    Vec3 dhat = (d0 - d0.dot(P) * P).normalized();

    // Parameter window around the cut: a few sample steps or the spatial loop
    // scale over the local speed, whichever is larger.
    double dt_loc = (c.t(std::min(i0 + 1, c.size() - 1)) - c.t(std::max(i0 - 1, 0))) * 0.5;
    double h = std::max(3.0 * dt_loc, 2.0 * rho / d0.norm());
    if (c.t(i0) - h < c.t_begin() - 1e-12 || c.t(i0) + h > c.t_end() + 1e-12)
        throw LoopDoesNotFit("insert_wiggles: window around the cut leaves the interval");

    int iA = c.index_at(c.t(i0) - h);
    int iB = i0;
    while (iB < c.size() - 1 && c.t(iB) < c.t(i0) + h) ++iB;
    iA = std::min(iA, i0 - 2);
    iB = std::max(iB, i0 + 2);
    if (iA < 0 || iB > c.size() - 1)
        throw LoopDoesNotFit("insert_wiggles: window needs two samples on each side of the cut");

    // Frame lengths and exact frame speeds across the window.
    std::vector<double> ell(iB - iA + 1, 0.0), qp(iB - iA + 1, 0.0);
    std::vector<double> kg(iB - iA + 1, 0.0);
    for (int i = iA; i <= iB; ++i) {
        kg[i - iA] = geodesic_curvature(c, i, tol);
        qp[i - iA] = c.derivative(i).norm() * std::sqrt(1.0 + kg[i - iA] * kg[i - iA]);
    }
    for (int i = iA + 1; i <= iB; ++i) {
        double ang = angle_between(c.point(i - 1), c.point(i));
        double kmid = 0.5 * (kg[i - 1 - iA] + kg[i - iA]);
        ell[i - iA] = ell[i - 1 - iA] + ang * std::sqrt(1.0 + kmid * kmid);
    }
    double ell_left = ell[i0 - iA];
    double ell_right = ell[iB - iA] - ell_left;
    double ell_loops = 2.0 * M_PI * n;
    double L = ell_left + ell_loops + ell_right;

    // Monotone frame-length -> parameter map: host pieces share 70% of the
    // window, the loops 30%, with the host's own rate pinned at the seams.
    double tA = c.t(iA), tB = c.t(iB);
    double span = tB - tA;
    double chiL = 0.7 * ell_left / (ell_left + ell_right);
    double chiR = 0.7 * ell_right / (ell_left + ell_right);
    control::MonotoneMap map({0.0, ell_left, ell_left + ell_loops, L},
                             {tA, tA + chiL * span, tB - chiR * span, tB},
                             1.0 / qp.front(), 1.0 / qp.back());

    std::vector<double> ts;
    std::vector<Vec3> gs, d1s, d2s;
    auto host_before = [&](int count) {  // samples strictly before the window
        for (int i = 0; i < count; ++i) {
            ts.push_back(c.t(i));
            gs.push_back(c.point(i));
            d1s.push_back(c.derivative(i));
            d2s.push_back(c.second_derivative(i));
        }
    };
    host_before(iA);

    // Window host samples with reparametrized jets. The tangential part of the
    // second derivative has no effect on curvature, so a finite-difference
    // rate-of-rate is enough.
    std::vector<double> w(iB - iA + 1);
    for (int i = iA; i <= iB; ++i) w[i - iA] = map.deriv(ell[i - iA]) * qp[i - iA];
    auto wprime = [&](int j) {
        int lo = std::max(0, j - 1), hi = std::min(iB - iA, j + 1);
        return (w[hi] - w[lo]) / (c.t(iA + hi) - c.t(iA + lo));
    };
    auto push_host = [&](int i) {
        int j = i - iA;
        ts.push_back(map(ell[j]));
        gs.push_back(c.point(i));
        Vec3 d1 = c.derivative(i), d2 = c.second_derivative(i);
        d1s.push_back(d1 / w[j]);
        d2s.push_back(d2 / (w[j] * w[j]) - d1 * wprime(j) / (w[j] * w[j] * w[j]));
    };
    for (int i = iA; i <= i0; ++i) push_host(i);

    double dphi = 2.0 * M_PI / kLoopSamples;
    for (int j = 1; j <= kLoopSamples * n; ++j) {
        double phi = j * dphi;
        double l = ell_left + phi;
        LoopJet lj = loop_point(P, dhat, c.orientation(), rho, phi);
        double mp = map.deriv(l), mpp = map.deriv2(l);
        ts.push_back(map(l));
        gs.push_back(lj.g);
        d1s.push_back(lj.d1 / mp);
        d2s.push_back(lj.d2 / (mp * mp) - lj.d1 * mpp / (mp * mp * mp));
    }

    for (int i = i0 + 1; i <= iB; ++i) push_host(i);
    for (int i = iB + 1; i < c.size(); ++i) {
        ts.push_back(c.t(i));
        gs.push_back(c.point(i));
        d1s.push_back(c.derivative(i));
        d2s.push_back(c.second_derivative(i));
    }

    SphereCurve out(std::move(ts), std::move(gs), c.orientation(), tol);
    out.set_jets(std::move(d1s), std::move(d2s));
    return out;
}

SphereCurve coil_segment(const Vec3& p0, const Vec3& p1, int m, double rho,
                         const Tolerances& tol) {
    if (m < 0) throw DomainError("coil_segment: negative loop count");
    Vec3 a = p0.normalized(), b = p1.normalized();
    double d = angle_between(a, b);
    if (d < 1e-6 || d > M_PI - 1e-3)
        throw DomainError("coil_segment: endpoints must be distinct and non-antipodal");
    if (!(rho > 0.0) || rho > M_PI / 2 - 0.02)
        throw Overcrowded("coil_segment: loop radius must lie in (0, pi/2)");
    if (m > 0 && 2.2 * rho * m > d)
        throw Overcrowded("coil_segment: loops do not fit along the segment");

    // Carrier arc: a circle of small positive curvature through both points,
    // bulging away from its spherical center q so the loops fall on the
    // center side, inside the sagitta toward the geodesic chord.
    double k0 = std::max(2.0 * tol.k_min, std::min(rho, 0.7 / std::tan(0.5 * d)));
    k0 = std::min(k0, 0.5);
    double phi_c = std::atan2(1.0, k0);  // polar radius with cot(phi_c) = k0
    Vec3 n0 = a.cross(b).normalized();
    Vec3 mid = (a + b).normalized();
    double ca = std::cos(phi_c) / std::cos(0.5 * d);
    if (!(std::abs(ca) < 1.0)) throw DomainError("coil_segment: carrier arc does not reach");
    double alpha = std::acos(ca);
    Vec3 q = (std::cos(alpha) * mid + std::sin(alpha) * n0).normalized();
    Vec3 u = (a - a.dot(q) * q).normalized();
    Vec3 wv = q.cross(u);
    double psi1 = std::atan2(b.dot(wv), b.dot(u));
    if (psi1 <= 0.0) {  // flip the carrier center so the arc runs forward
        q = (std::cos(alpha) * mid - std::sin(alpha) * n0).normalized();
        u = (a - a.dot(q) * q).normalized();
        wv = q.cross(u);
        psi1 = std::atan2(b.dot(wv), b.dot(u));
        if (psi1 <= 0.0) throw DomainError("coil_segment: carrier arc orientation failed");
    }

    double sphi = std::sin(phi_c), cphi = std::cos(phi_c);
    auto base = [&](double psi) {
        LoopJet out;
        double cp = std::cos(psi), sp = std::sin(psi);
        out.g = cphi * q + sphi * (cp * u + sp * wv);
        out.d1 = sphi * (-sp * u + cp * wv);  // |d1| = sin(phi_c), frame length = psi
        out.d2 = sphi * (-cp * u - sp * wv);
        return out;
    };

    // Loop stations along the carrier and the total frame length.
    std::vector<double> stations(m);
    for (int i = 0; i < m; ++i) stations[i] = (i + 0.5) / m * psi1;
    double L = psi1 + 2.0 * M_PI * m;

    std::vector<double> ts;
    std::vector<Vec3> gs, d1s, d2s;
    double dpsi = std::min(0.02, psi1 / 40.0);
    int steps = std::max(5, static_cast<int>(std::ceil(psi1 / dpsi)));
    dpsi = psi1 / steps;
    double dphi = 2.0 * M_PI / kLoopSamples;

    int next_loop = 0;
    double loop_ell = 0.0;  // frame length consumed by loops so far
    for (int i = 0; i <= steps; ++i) {
        double psi = i * dpsi;
        while (next_loop < m && stations[next_loop] <= psi + 1e-12) {
            double ps = stations[next_loop];
            LoopJet bp = base(ps);
            Vec3 P = bp.g;
            Vec3 dhat = bp.d1.normalized();
            if (i == 0 || ps > (i - 1) * dpsi + 1e-12) {
                ts.push_back((ps + loop_ell) / L);
                gs.push_back(bp.g);
                d1s.push_back(bp.d1 * L);
                d2s.push_back(bp.d2 * L * L);
            }
            for (int j = 1; j <= kLoopSamples; ++j) {
                double phi = j * dphi;
                LoopJet lj = loop_point(P, dhat, 1, rho, phi);
                ts.push_back((ps + loop_ell + phi) / L);
                gs.push_back(lj.g);
                d1s.push_back(lj.d1 * L);
                d2s.push_back(lj.d2 * L * L);
            }
            loop_ell += 2.0 * M_PI;
            ++next_loop;
        }
        LoopJet bp = base(psi);
        ts.push_back((psi + loop_ell) / L);
        gs.push_back(bp.g);
        d1s.push_back(bp.d1 * L);
        d2s.push_back(bp.d2 * L * L);
    }

    // Deduplicate parameters that collide (a station exactly on a grid node).
    std::vector<double> tf;
    std::vector<Vec3> gf, d1f, d2f;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (!tf.empty() && ts[i] <= tf.back() + 1e-12) continue;
        tf.push_back(ts[i]);
        gf.push_back(gs[i]);
        d1f.push_back(d1s[i]);
        d2f.push_back(d2s[i]);
    }

    SphereCurve out(std::move(tf), std::move(gf), 1, tol);
    out.set_jets(std::move(d1f), std::move(d2f));
    return out;
}

} // namespace engel
