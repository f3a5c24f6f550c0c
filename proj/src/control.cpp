#include "control.hpp"

#include "engel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace engel::control {

namespace {

Mat3 hat(const Vec3& w) {
    Mat3 m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

double lerp_knots(const std::vector<double>& x, const std::vector<double>& y, double q) {
    if (q <= x.front()) return y.front();
    if (q >= x.back()) return y.back();
    auto it = std::upper_bound(x.begin(), x.end(), q);
    std::size_t i = static_cast<std::size_t>(it - x.begin()) - 1;
    double u = (q - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - u) * y[i] + u * y[i + 1];
}

} // namespace

Mat3 frame_step(double kf, double h) {
    double s = std::sqrt(1.0 + kf * kf);
    Vec3 u(kf / s, 0.0, 1.0 / s);
    Mat3 ux = hat(u);
    return Mat3::Identity() + std::sin(h) * ux + (1.0 - std::cos(h)) * (ux * ux);
}

Vec3 so3_log(const Mat3& R) {
    double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
    double theta = std::acos(c);
    Vec3 v(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
    if (theta < 1e-7) return 0.5 * v;  // log(R) ~ (R - R^T)/2 near identity
    if (theta > M_PI - 1e-4) {
        // Axis from the dominant column of R + I.
        Mat3 B = R + Mat3::Identity();
        int j;
        B.colwise().norm().maxCoeff(&j);
        Vec3 axis = B.col(j).normalized();
        if (v.dot(axis) < 0.0) axis = -axis;
        return theta * axis;
    }
    return (theta / (2.0 * std::sin(theta))) * v;
}

MonotoneMap::MonotoneMap(std::vector<double> x, std::vector<double> y,
                         std::optional<double> slope0, std::optional<double> slope1)
    : x_(std::move(x)), y_(std::move(y)) {
    std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw DomainError("monotone map: need matching knots");
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x_[i + 1] - x_[i];
        if (!(h[i] > 0.0)) throw DomainError("monotone map: knots must increase");
        d[i] = (y_[i + 1] - y_[i]) / h[i];
        if (!(d[i] > 0.0)) throw DomainError("monotone map: values must increase");
    }
    m_.assign(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double w1 = 2.0 * h[i] + h[i - 1];
        double w2 = h[i] + 2.0 * h[i - 1];
        m_[i] = 3.0 * (h[i - 1] + h[i]) / (w1 / d[i - 1] + w2 / d[i]);
    }
    m_[0] = slope0 ? *slope0 : d[0];
    m_[n - 1] = slope1 ? *slope1 : d[n - 2];
    for (std::size_t i = 0; i < n; ++i) m_[i] = std::max(m_[i], 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        m_[i] = std::min(m_[i], 3.0 * d[i]);
        m_[i + 1] = std::min(m_[i + 1], 3.0 * d[i]);
    }
}

double MonotoneMap::operator()(double x) const {
    std::size_t n = x_.size();
    if (x <= x_.front()) return y_.front() + m_.front() * (x - x_.front());
    if (x >= x_.back()) return y_.back() + m_.back() * (x - x_.back());
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, n - 2);
    double h = x_[i + 1] - x_[i];
    double u = (x - x_[i]) / h;
    double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * y_[i] + (u3 - 2 * u2 + u) * h * m_[i] +
           (-2 * u3 + 3 * u2) * y_[i + 1] + (u3 - u2) * h * m_[i + 1];
}

double MonotoneMap::deriv(double x) const {
    std::size_t n = x_.size();
    if (x <= x_.front()) return m_.front();
    if (x >= x_.back()) return m_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, n - 2);
    double h = x_[i + 1] - x_[i];
    double u = (x - x_[i]) / h;
    double u2 = u * u;
    return ((6 * u2 - 6 * u) * y_[i] + (3 * u2 - 4 * u + 1) * h * m_[i] +
            (-6 * u2 + 6 * u) * y_[i + 1] + (3 * u2 - 2 * u) * h * m_[i + 1]) /
           h;
}

double MonotoneMap::deriv2(double x) const {
    std::size_t n = x_.size();
    if (x <= x_.front() || x >= x_.back()) return 0.0;
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
    i = std::min(i, n - 2);
    double h = x_[i + 1] - x_[i];
    double u = (x - x_[i]) / h;
    return ((12 * u - 6) * y_[i] + (6 * u - 4) * h * m_[i] + (6 - 12 * u) * y_[i + 1] +
            (6 * u - 2) * h * m_[i + 1]) /
           (h * h);
}

double Bump::eval(double l) const {
    double u = (l - lc) / w;
    if (std::abs(u) >= 1.0) return 0.0;
    double c = std::cos(0.5 * M_PI * u);
    return c * c;
}

double Assembly::total_len() const {
    double L = 0.0;
    for (const Sec& s : secs) L += s.len;
    return L;
}

void finalize_assembly(Assembly& a) {
    for (Sec& s : a.secs) {
        if (s.is_loop || s.kb.empty()) continue;
        double kmin = *std::min_element(s.kb.begin(), s.kb.end());
        s.kbias = std::max(0.0, std::min(0.5 * a.kfloor, 0.5 * kmin));
    }
}

double effective_curvature(const Assembly& a, const Eigen::VectorXd& xi, double l) {
    double off = 0.0;
    for (const Sec& s : a.secs) {
        if (l <= off + s.len || &s == &a.secs.back()) {
            if (s.is_loop) return s.kconst;
            double lloc = std::clamp(l - off, 0.0, s.len);
            double kb = lerp_knots(s.lx, s.kb, lloc);
            if (!s.blend_exempt && a.blend > 0.0)
                kb = (1.0 - a.blend) * kb + a.blend * std::max(kb, a.kfloor);
            double u = 0.0;
            double lmat = s.mat0 + lloc;
            for (int j = 0; j < xi.size() && j < static_cast<int>(a.bumps.size()); ++j)
                u += xi[j] * a.bumps[j].eval(lmat);
            return s.kbias + (kb - s.kbias) * std::exp(u);
        }
        off += s.len;
    }
    return a.kfloor;
}

namespace {

Integrated integrate_impl(const Assembly& a, const Eigen::VectorXd& xi, bool collect) {
    Integrated out;
    Mat3 F = a.F0;
    double loff = 0.0;
    double since_sample = 0.0;
    auto push_sample = [&](double l, const Mat3& Fr, double k) {
        if (!collect) return;
        out.samples.push_back({l, Fr.col(0), Fr.col(1), k});
    };
    push_sample(0.0, F, effective_curvature(a, xi, 1e-12));
    for (const Sec& s : a.secs) {
        if (s.len <= 0.0) continue;
        if (s.is_loop) {
            double kf = a.sigma * s.kconst;
            int m = std::max(1, static_cast<int>(std::lround(s.len / a.sample_dl)));
            double dl = s.len / m;
            Mat3 Fs = F;
            Mat3 R = frame_step(kf, dl);
            for (int i = 1; i < m; ++i) {
                F = F * R;
                push_sample(loff + i * dl, F, s.kconst);
            }
            F = Fs * frame_step(kf, s.len);  // exact block step; 2*pi closes to identity
            push_sample(loff + s.len, F, s.kconst);
            since_sample = 0.0;
        } else {
            int m = std::max(1, static_cast<int>(std::ceil(s.len / a.hstep)));
            double dl = s.len / m;
            for (int i = 0; i < m; ++i) {
                double lmid = loff + (i + 0.5) * dl;
                double k = effective_curvature(a, xi, lmid);
                F = F * frame_step(a.sigma * k, dl);
                since_sample += dl;
                bool last = (i + 1 == m);
                if (last || since_sample >= a.sample_dl - 1e-12) {
                    double l = loff + (i + 1) * dl;
                    push_sample(l, F, effective_curvature(a, xi, std::min(l, loff + s.len - 1e-12)));
                    since_sample = 0.0;
                }
            }
        }
        loff += s.len;
    }
    out.Fend = F;
    return out;
}

} // namespace

Integrated integrate(const Assembly& a, const Eigen::VectorXd& xi) {
    return integrate_impl(a, xi, true);
}

Vec3 closure_residual(const Assembly& a, const Eigen::VectorXd& xi) {
    Integrated r = integrate_impl(a, xi, false);
    return so3_log(a.F1.transpose() * r.Fend);
}

std::optional<Eigen::VectorXd> newton_close(const Assembly& a, Eigen::VectorXd xi,
                                            double resid_tol, int max_iter) {
    int nb = static_cast<int>(a.bumps.size());
    if (xi.size() != nb) xi = Eigen::VectorXd::Zero(nb);
    Vec3 r = closure_residual(a, xi);
    for (int it = 0; it < max_iter; ++it) {
        if (r.norm() < resid_tol) return xi;
        Eigen::MatrixXd J(3, nb);
        double delta = 1e-5;
        for (int j = 0; j < nb; ++j) {
            Eigen::VectorXd xj = xi;
            xj[j] += delta;
            J.col(j) = (closure_residual(a, xj) - r) / delta;
        }
        Eigen::VectorXd step = J.completeOrthogonalDecomposition().solve(-r);
        double cap = 2.0;
        if (step.norm() > cap) step *= cap / step.norm();
        double alpha = 1.0;
        bool ok = false;
        for (int bt = 0; bt < 6; ++bt) {
            Vec3 rn = closure_residual(a, xi + alpha * step);
            if (rn.norm() < r.norm()) {
                xi += alpha * step;
                r = rn;
                ok = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!ok) return std::nullopt;
    }
    return r.norm() < resid_tol ? std::optional<Eigen::VectorXd>(xi) : std::nullopt;
}

Mat3 sample_frame(const Vec3& g, const Vec3& deriv) {
    Vec3 t = deriv - deriv.dot(g) * g;
    double n = t.norm();
    if (n < 1e-14) throw NotImmersed("frame: zero tangent");
    t /= n;
    Mat3 F;
    F.col(0) = g;
    F.col(1) = t;
    F.col(2) = g.cross(t);
    return F;
}

} // namespace engel::control
