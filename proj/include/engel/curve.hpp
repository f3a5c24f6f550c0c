#pragma once

#include "engel/errors.hpp"
#include "engel/geom.hpp"
#include "engel/tolerances.hpp"

#include <optional>
#include <vector>

namespace engel {

/// Recurrence interval of a curve: the loop between a and b closes up in
/// position and direction and bounds an embedded convex loop.
struct Wiggle {
    double a = 0.0;
    double b = 0.0;
    double rho = 0.0;  ///< spherical radius of the loop (cap angle estimate)
    Vec3 center = Vec3::Zero();
    int ia = 0;  ///< sample index at a
    int ib = 0;  ///< sample index at b
};

/// Sampled curve on the unit sphere over a parameter interval. Samples may
/// carry exact first/second derivatives ("jet-backed"); otherwise
/// derivatives come from 4th-order finite differences on the sample grid.
class SphereCurve {
public:
    SphereCurve() = default;
    SphereCurve(std::vector<double> t, std::vector<Vec3> g, int orientation,
                const Tolerances& tol = Tolerances());

    void set_jets(std::vector<Vec3> d1, std::vector<Vec3> d2);
    bool has_jets() const { return !d1_.empty(); }

    int size() const { return static_cast<int>(t_.size()); }
    double t(int i) const { return t_[i]; }
    double t_begin() const { return t_.front(); }
    double t_end() const { return t_.back(); }
    const Vec3& point(int i) const { return g_[i]; }
    const std::vector<double>& params() const { return t_; }
    const std::vector<Vec3>& points() const { return g_; }
    int orientation() const { return orientation_; }
    SphereCurve reversed_orientation() const;

    /// First/second parameter derivatives at sample i (jet or finite difference).
    Vec3 derivative(int i) const;
    Vec3 second_derivative(int i) const;

    /// Geodesic slerp evaluation between samples; t clamped to the interval.
    Vec3 at(double t) const;
    /// Interpolated unit tangent near t.
    Vec3 tangent_at(double t) const;

    /// Nearest sample index with t(i) <= t.
    int index_at(double t) const;

private:
    std::vector<double> t_;
    std::vector<Vec3> g_;
    std::vector<Vec3> d1_;
    std::vector<Vec3> d2_;
    int orientation_ = 1;
};

/// k_g at every sample: sigma * det(g, g', g'') / |g'|^3.
/// Throws NotImmersed if |g'| < v_min somewhere.
double geodesic_curvature(const SphereCurve& c, int i, const Tolerances& tol = Tolerances());
std::vector<double> geodesic_curvature(const SphereCurve& c, const Tolerances& tol = Tolerances());

bool is_immersed(const SphereCurve& c, const Tolerances& tol = Tolerances());

/// k_g >= k_min everywhere.
bool is_convex(const SphereCurve& c, const Tolerances& tol = Tolerances());

/// k_g >= -k_min everywhere.
bool is_weakly_convex(const SphereCurve& c, const Tolerances& tol = Tolerances());

/// Integral of |g'| sqrt(1 + k_g^2) dt; a closed convex loop contributes 2 pi
/// per winding.
double total_curvature(const SphereCurve& c, const Tolerances& tol = Tolerances());

/// Maximal disjoint recurrence intervals, sorted by start. Each interval
/// closes in position within eps_pos and direction within eps_ang, carries a
/// margin on both sides, and bounds a single embedded convex winding.
std::vector<Wiggle> detect_wiggles(const SphereCurve& c, const Tolerances& tol = Tolerances());

/// Family of curves over a rectangular grid in the parameter space K
/// (dimension 1 to 3), with an optional frozen node mask.
class CurveFamily {
public:
    CurveFamily() = default;
    CurveFamily(std::vector<int> shape, std::vector<SphereCurve> curves);

    const std::vector<int>& shape() const { return shape_; }
    int nodes() const { return static_cast<int>(curves_.size()); }
    const SphereCurve& curve(int flat) const { return curves_[flat]; }
    SphereCurve& curve(int flat) { return curves_[flat]; }

    void set_frozen(std::vector<char> mask);
    bool frozen(int flat) const { return !frozen_.empty() && frozen_[flat] != 0; }

    /// Largest samplewise angular distance between grid neighbors
    /// (continuity proxy for the family).
    double max_neighbor_step() const;

private:
    std::vector<int> shape_;
    std::vector<SphereCurve> curves_;
    std::vector<char> frozen_;
};

} // namespace engel
