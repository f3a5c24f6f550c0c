#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace engel {

/// Truncated second-order jet in up to four variables: value, gradient and
/// (optionally) Hessian propagate exactly through arithmetic, so derivatives
/// carry no truncation error beyond roundoff. `with_h == false` skips all
/// Hessian work; brackets only need gradients.
struct Jet {
    double v = 0.0;
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
    int n = 0;
    bool with_h = false;

    Jet() = default;
    Jet(double value, int dim, bool hess) : v(value), n(dim), with_h(hess) {}

    static Jet constant(double value, int dim, bool hess) { return Jet(value, dim, hess); }

    static Jet variable(double value, int index, int dim, bool hess) {
        Jet j(value, dim, hess);
        j.g[index] = 1.0;
        return j;
    }
};

inline Jet operator+(const Jet& a, const Jet& b) {
    Jet r(a.v + b.v, a.n, a.with_h);
    r.g = a.g + b.g;
    if (r.with_h) r.h = a.h + b.h;
    return r;
}

inline Jet operator-(const Jet& a, const Jet& b) {
    Jet r(a.v - b.v, a.n, a.with_h);
    r.g = a.g - b.g;
    if (r.with_h) r.h = a.h - b.h;
    return r;
}

inline Jet operator-(const Jet& a) {
    Jet r(-a.v, a.n, a.with_h);
    r.g = -a.g;
    if (r.with_h) r.h = -a.h;
    return r;
}

inline Jet operator*(const Jet& a, const Jet& b) {
    Jet r(a.v * b.v, a.n, a.with_h);
    r.g = a.v * b.g + b.v * a.g;
    if (r.with_h) r.h = a.v * b.h + b.v * a.h + a.g * b.g.transpose() + b.g * a.g.transpose();
    return r;
}

/// Chain rule for a scalar function with derivatives u1 = u'(a.v), u2 = u''(a.v).
inline Jet apply_unary(const Jet& a, double u0, double u1, double u2) {
    Jet r(u0, a.n, a.with_h);
    r.g = u1 * a.g;
    if (r.with_h) r.h = u1 * a.h + u2 * (a.g * a.g.transpose());
    return r;
}

inline Jet operator/(const Jet& a, const Jet& b) {
    double iv = 1.0 / b.v;
    return a * apply_unary(b, iv, -iv * iv, 2.0 * iv * iv * iv);
}

inline Jet sin(const Jet& a) { return apply_unary(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v)); }
inline Jet cos(const Jet& a) { return apply_unary(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v)); }
inline Jet exp(const Jet& a) {
    double e = std::exp(a.v);
    return apply_unary(a, e, e, e);
}

inline Jet pow_int(const Jet& a, long long m) {
    if (m == 0) return Jet::constant(1.0, a.n, a.with_h);
    double u0 = std::pow(a.v, static_cast<double>(m));
    double u1 = static_cast<double>(m) * std::pow(a.v, static_cast<double>(m - 1));
    double u2 = static_cast<double>(m) * static_cast<double>(m - 1) * std::pow(a.v, static_cast<double>(m - 2));
    return apply_unary(a, u0, u1, u2);
}

inline bool is_finite(const Jet& a) {
    if (!std::isfinite(a.v)) return false;
    for (int i = 0; i < a.n; ++i)
        if (!std::isfinite(a.g[i])) return false;
    if (a.with_h)
        for (int i = 0; i < a.n; ++i)
            for (int j = 0; j < a.n; ++j)
                if (!std::isfinite(a.h(i, j))) return false;
    return true;
}

} // namespace engel
