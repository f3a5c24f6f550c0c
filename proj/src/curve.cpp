#include "engel/curve.hpp"

#include "engel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace engel {

namespace {

Vec3 slerp(const Vec3& a, const Vec3& b, double u) {
    double ang = angle_between(a, b);
    if (ang < 1e-12) return ((1.0 - u) * a + u * b).normalized();
    double s = std::sin(ang);
    return (std::sin((1.0 - u) * ang) / s) * a + (std::sin(u * ang) / s) * b;
}

} // namespace

SphereCurve::SphereCurve(std::vector<double> t, std::vector<Vec3> g, int orientation,
                         const Tolerances& tol)
    : t_(std::move(t)), g_(std::move(g)), orientation_(orientation) {
    if (t_.size() != g_.size()) throw DomainError("curve: parameter/sample count mismatch");
    if (t_.size() < 5) throw ResolutionTooCoarse("curve: at least 5 samples required");
    if (orientation_ != 1 && orientation_ != -1) throw DomainError("curve: orientation must be +1 or -1");
    for (std::size_t i = 0; i < t_.size(); ++i) {
        if (i > 0 && !(t_[i] > t_[i - 1])) throw DomainError("curve: parameters must increase strictly");
        if (std::abs(g_[i].norm() - 1.0) > tol.unit_norm)
            throw DomainError("curve: samples must lie on the unit sphere");
        if (i > 0 && angle_between(g_[i - 1], g_[i]) > tol.max_spacing)
            throw ResolutionTooCoarse("curve: sample spacing exceeds pi/8");
    }
}

void SphereCurve::set_jets(std::vector<Vec3> d1, std::vector<Vec3> d2) {
    if (d1.size() != t_.size() || d2.size() != t_.size())
        throw DomainError("curve: jet arrays must match the sample count");
    d1_ = std::move(d1);
    d2_ = std::move(d2);
}

SphereCurve SphereCurve::reversed_orientation() const {
    SphereCurve c = *this;
    c.orientation_ = -orientation_;
    return c;
}

Vec3 SphereCurve::derivative(int i) const {
    if (has_jets()) return d1_[i];
    int n = size();
    int lo = std::clamp(i - 2, 0, n - 5);
    std::vector<double> xs(t_.begin() + lo, t_.begin() + lo + 5);
    std::vector<double> w = fd_weights(xs, t_[i], 1);
    Vec3 d = Vec3::Zero();
    for (int k = 0; k < 5; ++k) d += w[k] * g_[lo + k];
    return d;
}

Vec3 SphereCurve::second_derivative(int i) const {
    if (has_jets()) return d2_[i];
    int n = size();
    int lo = std::clamp(i - 2, 0, n - 5);
    std::vector<double> xs(t_.begin() + lo, t_.begin() + lo + 5);
    std::vector<double> w = fd_weights(xs, t_[i], 2);
    Vec3 d = Vec3::Zero();
    for (int k = 0; k < 5; ++k) d += w[k] * g_[lo + k];
    return d;
}

int SphereCurve::index_at(double t) const {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    int i = static_cast<int>(it - t_.begin()) - 1;
    return std::clamp(i, 0, size() - 1);
}

Vec3 SphereCurve::at(double t) const {
    if (t <= t_.front()) return g_.front();
    if (t >= t_.back()) return g_.back();
    int i = index_at(t);
    if (i >= size() - 1) return g_.back();
    double u = (t - t_[i]) / (t_[i + 1] - t_[i]);
    return slerp(g_[i], g_[i + 1], u);
}

Vec3 SphereCurve::tangent_at(double t) const {
    int i = index_at(t);
    i = std::clamp(i, 0, size() - 1);
    Vec3 d = derivative(i);
    if (i + 1 < size() && t > t_[i]) {
        double u = (t - t_[i]) / (t_[i + 1] - t_[i]);
        d = (1.0 - u) * d + u * derivative(i + 1);
    }
    double n = d.norm();
    if (n == 0.0) throw NotImmersed("curve: zero velocity");
    return d / n;
}

double geodesic_curvature(const SphereCurve& c, int i, const Tolerances& tol) {
    Vec3 g = c.point(i);
    Vec3 d1 = c.derivative(i);
    Vec3 d2 = c.second_derivative(i);
    double speed = d1.norm();
    if (speed < tol.v_min)
        throw NotImmersed("geodesic_curvature: |g'| below v_min at t = " + std::to_string(c.t(i)));
    return c.orientation() * g.dot(d1.cross(d2)) / (speed * speed * speed);
}

std::vector<double> geodesic_curvature(const SphereCurve& c, const Tolerances& tol) {
    std::vector<double> k(c.size());
    for (int i = 0; i < c.size(); ++i) k[i] = geodesic_curvature(c, i, tol);
    return k;
}

bool is_immersed(const SphereCurve& c, const Tolerances& tol) {
    for (int i = 0; i < c.size(); ++i)
        if (c.derivative(i).norm() < tol.v_min) return false;
    return true;
}

bool is_convex(const SphereCurve& c, const Tolerances& tol) {
    std::vector<double> k = geodesic_curvature(c, tol);
    for (double v : k)
        if (v < tol.k_min) return false;
    return true;
}

bool is_weakly_convex(const SphereCurve& c, const Tolerances& tol) {
    std::vector<double> k = geodesic_curvature(c, tol);
    for (double v : k)
        if (v < -tol.k_min) return false;
    return true;
}

double total_curvature(const SphereCurve& c, const Tolerances& tol) {
    std::vector<double> k = geodesic_curvature(c, tol);
    double acc = 0.0;
    double prev = 0.0;
    for (int i = 0; i < c.size(); ++i) {
        double dens = c.derivative(i).norm() * std::sqrt(1.0 + k[i] * k[i]);
        if (i > 0) acc += 0.5 * (dens + prev) * (c.t(i) - c.t(i - 1));
        prev = dens;
    }
    return acc;
}

namespace {

/// Cumulative frame length: integral of |g'| sqrt(1+k^2). One full convex
/// winding advances it by exactly 2 pi, which makes it the right clock for
/// telling single loops from multiple windings.
std::vector<double> frame_length(const SphereCurve& c, const std::vector<double>& k) {
    std::vector<double> lam(c.size(), 0.0);
    double prev = 0.0;
    for (int i = 0; i < c.size(); ++i) {
        double dens = c.derivative(i).norm() * std::sqrt(1.0 + k[i] * k[i]);
        if (i > 0) lam[i] = lam[i - 1] + 0.5 * (dens + prev) * (c.t(i) - c.t(i - 1));
        prev = dens;
    }
    return lam;
}

struct Candidate {
    int ia, ib;
    double a, b;
};

} // namespace

std::vector<Wiggle> detect_wiggles(const SphereCurve& c, const Tolerances& tol) {
    const int n = c.size();
    std::vector<double> k = geodesic_curvature(c, tol); // throws NotImmersed if not immersed
    std::vector<double> lam = frame_length(c, k);

    std::vector<Vec3> T(n);
    for (int i = 0; i < n; ++i) T[i] = c.derivative(i).normalized();

    // First-return candidates: earliest j whose position and direction both
    // recur, about one frame-winding after i.
    std::vector<Candidate> cands;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double wind = lam[j] - lam[i];
            if (wind < M_PI) continue;
            if (wind > 2.0 * M_PI + 0.6) break; // no single winding closes beyond this
            if ((c.point(j) - c.point(i)).norm() >= tol.eps_pos) continue;
            if (angle_between(T[i], T[j]) >= tol.eps_ang) continue;
            if (std::abs(wind - 2.0 * M_PI) > 0.6) continue;
            cands.push_back({i, j, c.t(i), c.t(j)});
            break;
        }
    }

    // Validate: interior convexity, margin agreement, sampling density.
    std::vector<Candidate> valid;
    for (const Candidate& cd : cands) {
        bool convex = true;
        for (int i = cd.ia; i <= cd.ib && convex; ++i)
            if (k[i] < tol.k_min) convex = false;
        if (!convex) continue;

        // Loop radius estimate for margin sizing and density checks.
        Vec3 mean = Vec3::Zero();
        for (int i = cd.ia; i < cd.ib; ++i)
            mean += 0.5 * (c.point(i) + c.point(i + 1)) * (c.t(i + 1) - c.t(i));
        if (mean.norm() < 1e-9) continue; // near-great-circle loop, ill-defined cap
        Vec3 center = mean.normalized();
        double rho = 0.0;
        double arc = 0.0;
        double max_step = 0.0;
        for (int i = cd.ia; i <= cd.ib; ++i) {
            rho += angle_between(center, c.point(i));
            if (i > cd.ia) {
                double step = angle_between(c.point(i - 1), c.point(i));
                arc += step;
                max_step = std::max(max_step, step);
            }
        }
        rho /= (cd.ib - cd.ia + 1);
        if (max_step > 0.25 * rho)
            throw ResolutionTooCoarse("detect_wiggles: sample spacing above rho/4 inside a candidate wiggle");

        // Margin agreement: the strands just outside [a, b] must retrace each
        // other. The allowance accounts for the curvature mismatch of C^1
        // junctions over the margin arc.
        double loop_len = cd.b - cd.a;
        double m = 0.08 * loop_len;
        if (cd.a - m < c.t_begin() || cd.b + m > c.t_end()) continue;
        double kmax = 0.0;
        for (int i = cd.ia; i <= cd.ib; ++i) kmax = std::max(kmax, std::abs(k[i]));
        double speed = arc / loop_len; // mean angular speed on the loop
        double marc = m * speed;
        double allow = tol.eps_pos + 0.75 * marc * marc * (kmax + 1.0) + marc * tol.eps_ang;
        bool ok = true;
        for (double s : {-m, m}) {
            if ((c.at(cd.a + s) - c.at(cd.b + s)).norm() > allow) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;

        // Embeddedness of the closed loop: samples that are far apart along
        // the loop (cyclically) must be far apart on the sphere.
        bool embedded = true;
        std::vector<double> s(cd.ib - cd.ia + 1, 0.0);
        for (int i = cd.ia + 1; i <= cd.ib; ++i)
            s[i - cd.ia] = s[i - cd.ia - 1] + angle_between(c.point(i - 1), c.point(i));
        double L = s.back();
        for (int i = cd.ia; i <= cd.ib && embedded; ++i) {
            for (int j = i + 1; j <= cd.ib; ++j) {
                double along = s[j - cd.ia] - s[i - cd.ia];
                double cyc = std::min(along, L - along);
                if (cyc < 4.0 * max_step) continue;
                double need = std::min(0.3 * cyc, 0.5 * rho);
                if ((c.point(i) - c.point(j)).norm() < need) {
                    embedded = false;
                    break;
                }
            }
        }
        if (!embedded) continue;

        valid.push_back(cd);
    }

    // Greedy maximal disjoint selection by earliest end.
    std::sort(valid.begin(), valid.end(), [](const Candidate& x, const Candidate& y) {
        return x.b < y.b;
    });
    std::vector<Wiggle> out;
    double last_end = -1e300;
    for (const Candidate& cd : valid) {
        double overlap_slack = 0.02 * (cd.b - cd.a);
        if (cd.a < last_end - overlap_slack) continue;
        Wiggle w;
        w.a = cd.a;
        w.b = cd.b;
        w.ia = cd.ia;
        w.ib = cd.ib;
        Vec3 mean = Vec3::Zero();
        for (int i = cd.ia; i < cd.ib; ++i)
            mean += 0.5 * (c.point(i) + c.point(i + 1)) * (c.t(i + 1) - c.t(i));
        w.center = mean.normalized();
        double rho = 0.0;
        for (int i = cd.ia; i <= cd.ib; ++i) rho += angle_between(w.center, c.point(i));
        w.rho = rho / (cd.ib - cd.ia + 1);
        out.push_back(w);
        last_end = cd.b;
    }
    return out;
}

CurveFamily::CurveFamily(std::vector<int> shape, std::vector<SphereCurve> curves)
    : shape_(std::move(shape)), curves_(std::move(curves)) {
    if (shape_.empty() || shape_.size() > 3) throw DomainError("curve family: grid dimension must be 1 to 3");
    std::size_t total = 1;
    for (int s : shape_) {
        if (s < 1) throw DomainError("curve family: bad grid shape");
        total *= s;
    }
    if (total != curves_.size()) throw DomainError("curve family: grid shape does not match curve count");
}

void CurveFamily::set_frozen(std::vector<char> mask) {
    if (mask.size() != curves_.size()) throw DomainError("curve family: frozen mask size mismatch");
    frozen_ = std::move(mask);
}

double CurveFamily::max_neighbor_step() const {
    // Neighbors along each grid axis; curves are compared samplewise.
    double worst = 0.0;
    std::vector<std::size_t> strides(shape_.size(), 1);
    for (int i = static_cast<int>(shape_.size()) - 2; i >= 0; --i)
        strides[i] = strides[i + 1] * shape_[i + 1];
    for (std::size_t flat = 0; flat < curves_.size(); ++flat) {
        for (std::size_t ax = 0; ax < shape_.size(); ++ax) {
            std::size_t idx = (flat / strides[ax]) % shape_[ax];
            if (idx + 1 >= static_cast<std::size_t>(shape_[ax])) continue;
            const SphereCurve& a = curves_[flat];
            const SphereCurve& b = curves_[flat + strides[ax]];
            int m = std::min(a.size(), b.size());
            for (int i = 0; i < m; ++i)
                worst = std::max(worst, angle_between(a.point(i), b.point(i)));
        }
    }
    return worst;
}

} // namespace engel
