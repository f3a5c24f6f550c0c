#pragma once

#include "engel/chart.hpp"
#include "engel/report.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace engel {

/// Value and first derivative of a vector field leg at a point, with the
/// second derivative kept when the leg will be differentiated again (i.e.
/// when a bracket of this leg appears inside another bracket).
struct LegJet {
    Vec value = Vec::Zero();
    Mat4 jac = Mat4::Zero();               // jac(i,j) = d value_i / d x_j
    std::array<Mat4, 4> hess{};            // hess[i](j,k) = d^2 value_i / d x_j d x_k
    bool has_hess = false;
};

LegJet eval_leg(const VectorFieldDef& f, const Pt& p, bool with_hessian);

/// Bracket of two legs. Values need first derivatives of the operands; the
/// result's Jacobian additionally needs their second derivatives and is only
/// filled when both operands carry one.
LegJet bracket_leg(const LegJet& a, const LegJet& b);

/// A vector field known only through its samples on a grid.
struct SampledField {
    SampleGrid grid;
    std::vector<Vec> values;
};

/// Orientation signs attached to a flag: sign1 co-orients the line inside
/// the plane field, sign2 co-orients the plane field inside its bracket hull.
struct OrientationData {
    int sign1 = 1;
    int sign2 = 1;
};

/// Full flag data on a chart: line field W inside plane field D inside
/// rank-3 field E, with orientation signs.
struct DistributionFlag {
    VectorFieldDef W;
    std::vector<VectorFieldDef> D; // 2 legs
    std::vector<VectorFieldDef> E; // 3 legs
    OrientationData orientation;
};

/// det(u, v, [u,v]) at every grid point of a 3-dimensional chart; passes
/// when |det| >= contact_min throughout. The determinant is taken on the raw
/// (unnormalized) legs so the margin scales with the frame.
CheckReport contact_check(const VectorFieldDef& u, const VectorFieldDef& v, const SampleGrid& grid,
                          const Tolerances& tol = {});

/// Rank check for a 3-field frame E on a 4-dimensional chart: E itself must
/// have rank 3 and E + [E,E] rank 4, margins measured as smallest singular
/// values after column normalization.
CheckReport even_contact_check(const std::vector<VectorFieldDef>& E, const SampleGrid& grid,
                               const Tolerances& tol = {});

/// Pointwise rank margins of the bracket ladder of a 2-frame D at p:
/// first = rank-3 margin of D + [D,D], second = rank-4 margin after one more
/// bracket, both smallest singular values after column normalization.
/// Throws DegenerateFrame when D itself drops below rank 2.
std::pair<double, double> engel_margins(const std::vector<VectorFieldDef>& D, const Pt& p,
                                        const Tolerances& tol = {});

/// Rank check for a 2-field frame D on a 4-dimensional chart: with
/// E = D + [D,D], requires rank E = 3 and rank E + [E,E] = 4 at every grid
/// point, margins as smallest singular values after column normalization.
CheckReport engel_check(const std::vector<VectorFieldDef>& D, const SampleGrid& grid,
                        const Tolerances& tol = {});

/// Kernel line field of the rank-3 frame E: the direction w in span(E) with
/// [w, E] contained in span(E). Returns unit samples with signs aligned
/// greedily along grid axes. Throws KernelRankError when the defining
/// 3x3 antisymmetric form is too close to zero or rank 3 is lost.
SampledField kernel_field(const std::vector<VectorFieldDef>& E, const SampleGrid& grid,
                          const Tolerances& tol = {});

/// Verifies the nesting W in span(D), D in span(E) (NestingViolation on
/// failure) and, when Y is given, that Y lies in span(D) and stays at angle
/// >= theta_min from W (TangencyDetected on failure).
CheckReport check_flag(const DistributionFlag& flag, const SampleGrid& grid,
                       const std::optional<VectorFieldDef>& Y = std::nullopt,
                       const Tolerances& tol = {});

} // namespace engel
