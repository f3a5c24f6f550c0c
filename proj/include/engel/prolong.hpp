#pragma once

#include "engel/development.hpp"
#include "engel/fields.hpp"

#include <vector>

namespace engel {

enum class ProlongationMode { cartan, lorentz };

/// Input data for a framed prolongation: a 3-dimensional base chart carrying
/// a plane field spanned by (e1, e2), a field nu transverse to it, and the
/// cone mode. In lorentz mode r > 0 scales the nu-component of the cone of
/// directions; the cartan cone stays inside the plane field.
struct ProlongationSpec {
    ChartDomain base;
    VectorFieldDef e1;
    VectorFieldDef e2;
    VectorFieldDef nu;
    ProlongationMode mode = ProlongationMode::cartan;
    double r = 0.0;
    OrientationData orientation;
};

/// The prolonged plane frame on base x S^1(theta):
///   D = < d/dtheta, v >,   v(theta) = cos(theta) e1 + sin(theta) e2  (+ r nu).
struct ProlongedStructure {
    ProlongationSpec spec;
    ChartDomain total;                  ///< base x S^1, fiber coordinate theta
    std::vector<VectorFieldDef> frame;  ///< { d/dtheta, v(theta) }
    VectorFieldDef nu_lift;             ///< nu with zero fiber component
    OrientationData orientation;
};

/// Builds the prolonged frame over base x S^1. The base fields are lifted
/// with a zero fiber component; the fiber coordinate is theta in [0, 2pi),
/// periodic. Throws DegenerateFrame when (e1, e2, nu) are not pointwise
/// independent on a probe grid, DomainError on a malformed spec (dimension,
/// variable collision with theta, r <= 0 in lorentz mode).
ProlongedStructure build_prolongation(const ProlongationSpec& spec,
                                      const Tolerances& tol = Tolerances());

/// Standard contact base: the periodic cube [0, 2pi)^3 with
/// e1 = sin(z) dx + cos(z) dy, e2 = dz, nu = cos(z) dx - sin(z) dy.
ProlongationSpec t3_spec(ProlongationMode mode, double r = 0.0);

/// Mapping-torus style base with rotation speed n: z is replaced by n z in
/// the frame above. Contact for n >= 1; DomainError for n < 1.
ProlongationSpec mtorus_spec(int n, ProlongationMode mode, double r = 0.0);

/// Integrable plane field <dx, dy> with nu = dz over the same cube. Its
/// prolongation is never Engel; used as the negative control.
ProlongationSpec foliation_spec();

/// The rank-3 envelope frame { d/dtheta, v, dv/dtheta }. The fiber
/// derivative of v represents the bracket of the two legs.
std::vector<VectorFieldDef> bracket_frame(const ProlongedStructure& ps);

/// One lorentz structure per scheduled cone ratio. Rejects any entry <= 0
/// (the r = 0 limit must be requested as cartan mode explicitly).
std::vector<ProlongedStructure> convex_pushoff_family(const ProlongationSpec& spec,
                                                      const std::vector<double>& r_schedule,
                                                      const Tolerances& tol = Tolerances());

/// The tilted fiber field Y_s = d/dtheta + s nu_lift.
VectorFieldDef pushed_fiber_field(const ProlongedStructure& ps, double s);

struct ReturnMapReport {
    double s = 0.0;
    int iterates = 0;
    /// Entry j-1: smallest chart displacement over the region after j
    /// returns to the section theta = 0.
    std::vector<double> min_displacement;
    std::vector<Pt> argmin_points;
    bool fixed_point_free = false;
    Tolerances tolerances;
};

/// Flows a grid over the base region once around the fiber per iterate with
/// Y_s and measures the per-iterate displacement on the section theta = 0.
/// Fixed-point-free verdict iff every minimum exceeds delta_min. Throws
/// SectionNotTransverse when Y_s has too small a fiber component, FlowEscape
/// when a non-periodic base face is hit.
ReturnMapReport return_map(const ProlongedStructure& ps, double s, int N,
                           const std::vector<int>& base_counts = {5, 5, 5},
                           const Tolerances& tol = Tolerances());

/// Looseness certificate for the prolonged structure with Y = Y_s over a
/// grid of the total space. The return map is checked first; when it has a
/// fixed point within N iterates (s = 0 in particular) a failed certificate
/// with the closed-orbit diagnosis is returned without searching further.
/// T_max <= 0 selects 16 pi N, matching the constant wiggle-per-period rate
/// of the fiber flow. The angle tolerance between Y_s and the plane field is
/// widened to 2|s| when the tilt exceeds the default.
LoosenessCertificate certify_prolongation_looseness(
    const ProlongedStructure& ps, double s, int N, double T_max = 0.0,
    const std::vector<int>& total_counts = {2, 2, 2, 2}, const Tolerances& tol = Tolerances());

} // namespace engel
