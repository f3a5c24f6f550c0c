#pragma once

#include <Eigen/Dense>

#include <vector>

namespace engel {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Angle between two unit vectors, numerically safe near 0 and pi.
double angle_between(const Vec3& a, const Vec3& b);

/// Angle between two lines (directions up to sign).
double line_angle(const Vec3& a, const Vec3& b);

/// Rotation taking unit vector `from` to unit vector `to` (minimal arc).
Mat3 rotation_between(const Vec3& from, const Vec3& to);

/// Rotation by `angle` around the unit axis.
Mat3 rotation_about(const Vec3& axis, double angle);

/// Rotation log: returns the axis-angle vector of R (|result| = angle).
Vec3 rotation_log(const Mat3& R);

/// Point of the circle of spherical radius `rho` around unit `center`,
/// at phase `phi` in the (e1, e2) frame: cos(rho) c + sin(rho)(cos(phi) e1 + sin(phi) e2).
Vec3 circle_point(const Vec3& center, double rho, const Vec3& e1, const Vec3& e2, double phi);

/// Finite-difference weights (Fornberg): for sample locations `x` and the
/// evaluation point `x0`, returns weights for the derivative of order `m`.
/// Exact for polynomials of degree x.size()-1, so 5 points give 4th order.
std::vector<double> fd_weights(const std::vector<double>& x, double x0, int m);

/// Deterministic uniform double in [lo, hi) from a splitmix-style counter.
/// Used where tests and the CLI need seedable, platform-stable randomness.
class Rng {
public:
    explicit Rng(unsigned long long seed) : state_(seed) {}
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi); // inclusive bounds
    Vec3 unit_vec3();

private:
    unsigned long long next_();
    unsigned long long state_;
};

} // namespace engel
