#include "engel/geom.hpp"

#include "engel/errors.hpp"

#include <algorithm>
#include <cmath>

namespace engel {

double angle_between(const Vec3& a, const Vec3& b) {
    // atan2 form is stable for both tiny and near-pi angles.
    return std::atan2(a.cross(b).norm(), a.dot(b));
}

double line_angle(const Vec3& a, const Vec3& b) {
    double ang = angle_between(a, b);
    return std::min(ang, M_PI - ang);
}

Mat3 rotation_between(const Vec3& from, const Vec3& to) {
    Vec3 f = from.normalized();
    Vec3 t = to.normalized();
    Vec3 axis = f.cross(t);
    double s = axis.norm();
    double c = f.dot(t);
    if (s < 1e-14) {
        if (c > 0.0) return Mat3::Identity();
        // Antipodal: rotate by pi around any axis orthogonal to f.
        Vec3 ortho = std::abs(f.x()) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
        ortho = (ortho - ortho.dot(f) * f).normalized();
        return rotation_about(ortho, M_PI);
    }
    return rotation_about(axis / s, std::atan2(s, c));
}

Mat3 rotation_about(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& R) {
    Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

Vec3 circle_point(const Vec3& center, double rho, const Vec3& e1, const Vec3& e2, double phi) {
    return std::cos(rho) * center + std::sin(rho) * (std::cos(phi) * e1 + std::sin(phi) * e2);
}

std::vector<double> fd_weights(const std::vector<double>& x, double x0, int m) {
    // B. Fornberg, "Generation of finite difference formulas on arbitrarily
    // spaced grids", Math. Comp. 51 (1988). Weights for derivative order m.
    const int n = static_cast<int>(x.size());
    if (n < m + 1) throw NumericalError("fd_weights: not enough points for derivative order");
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

unsigned long long Rng::next_() {
    // splitmix64; stable across platforms, unlike std::uniform_real_distribution.
    state_ += 0x9E3779B97F4A7C15ULL;
    unsigned long long z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

double Rng::uniform(double lo, double hi) {
    double u = static_cast<double>(next_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

int Rng::uniform_int(int lo, int hi) {
    return lo + static_cast<int>(next_() % static_cast<unsigned long long>(hi - lo + 1));
}

Vec3 Rng::unit_vec3() {
    // Rejection sampling keeps the distribution rotation invariant.
    for (;;) {
        Vec3 v(uniform(-1, 1), uniform(-1, 1), uniform(-1, 1));
        double n = v.norm();
        if (n > 1e-3 && n <= 1.0) return v / n;
    }
}

} // namespace engel
