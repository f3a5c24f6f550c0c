#pragma once

#include "engel/curve.hpp"
#include "engel/tolerances.hpp"

#include <memory>
#include <vector>

namespace engel {

/// Splices n convex loops of spherical radius rho into c at parameter t0,
/// tangent to the curve on its convex side. The output agrees with the input
/// samplewise outside a parameter window of width O(rho) around t0 and lives
/// on the same interval. A convex input stays convex.
/// Throws LoopDoesNotFit, NotImmersedAtCutPoint.
SphereCurve insert_wiggles(const SphereCurve& c, double t0, int n, double rho,
                           const Tolerances& tol = Tolerances());

/// Convex connector from p0 to p1 carrying m loops of radius ~rho, staying
/// within C0 distance 2*rho of the geodesic arc. Throws Overcrowded when the
/// loops cannot fit along the segment, DomainError on degenerate endpoints.
SphereCurve coil_segment(const Vec3& p0, const Vec3& p1, int m, double rho,
                         const Tolerances& tol = Tolerances());

/// Discrete path of convex curves turning one loop of w into three, supported
/// in a parameter window around the loop; element 0 is c itself, the last
/// element carries exactly two more wiggles. steps >= 8.
/// Throws NonStandardWiggle if w does not match a round loop of its declared
/// radius, ConvexityLost if the deformation cannot be closed up.
std::vector<SphereCurve> little_homotopy(const SphereCurve& c, const Wiggle& w, int steps,
                                         const Tolerances& tol = Tolerances());

class ScheduleState;

/// Homotopy handle produced by distribute_wiggles: a lazily evaluated map
/// (node k, time s) -> curve. At s = 0 it reproduces the input family; at
/// integer s = n each active node carries 2n+1 evenly spaced loops on the
/// interior, the slid ones of radius exactly 1/n; frozen nodes and the
/// parameter margins [0, a/2] and [1-a, 1] never change.
class WiggleSchedule {
public:
    WiggleSchedule() = default;
    /// Internal: adopts a fully built schedule state (opaque outside).
    explicit WiggleSchedule(std::shared_ptr<ScheduleState> state);

    const CurveFamily& family() const;
    double margin() const;
    double s_max() const;

    /// Curve of node k (flat index) at time s in [0, s_max].
    SphereCurve at(int k, double s) const;

    /// Ramp in [0,1] slowing the schedule near frozen nodes; 0 exactly on the
    /// frozen set, 1 outside its grid neighborhood.
    double ramp(int k) const;
    bool near_frozen(int k) const;

    /// Largest spatial spacing between consecutive loops at integer time n is
    /// bounded by spacing_constant()/n.
    double spacing_constant() const;

    /// Earliest schedule time after which every node with ramp 1 is convex
    /// (coarse scan + bisection, memoized).
    double s_conv() const;

private:
    std::shared_ptr<ScheduleState> state_;
};

/// Slides copies of the margin loop of each family curve across the interior:
/// requires every curve convex on [0,a] and [1-a,1] with one wiggle at a
/// (HypothesisViolated otherwise) and frozen nodes convex. ramp_steps is the
/// grid distance from the frozen set at which the schedule runs at full
/// speed; nodes closer than that form Op(A).
WiggleSchedule distribute_wiggles(const CurveFamily& F, double a, double s_max,
                                  const Tolerances& tol = Tolerances(), int ramp_steps = 3);

/// Two-stage homotopy making an immersed family convex on the interior
/// parameter region with at least `density` loops per active curve: grow a
/// margin loop where none exists, then run the distribution schedule past its
/// convexification time.
class ConvexifyHomotopy {
public:
    /// Curve of node k at homotopy time u in [0,1].
    SphereCurve at(int k, double u) const;
    /// Family at u = 1.
    CurveFamily final_family() const;
    double margin() const;
    /// Schedule time reached at u = 1.
    double s_final() const;

private:
    friend ConvexifyHomotopy convexify_family(const CurveFamily&, int, const Tolerances&);
    CurveFamily input_;
    CurveFamily seeded_;       // input with a margin loop grown at a
    std::vector<char> had_loop_;
    WiggleSchedule schedule_;
    double margin_ = 0.1;
    double s_final_ = 0.0;
    double rho0_ = 0.1;
    Tolerances tol_;
};

ConvexifyHomotopy convexify_family(const CurveFamily& F, int density,
                                   const Tolerances& tol = Tolerances());

} // namespace engel
