#pragma once

#include "engel/curve.hpp"
#include "engel/fields.hpp"

#include <optional>
#include <string>
#include <vector>

namespace engel {

/// Integral segment of a vector field with its linearized transport: points
/// of the flow from `base`, the solution A(t) of the variational equation
/// along it (A(0) = identity), and the embeddedness margin of the path.
struct FlowSegment {
    Pt base = Pt::Zero();
    VectorFieldDef Y;
    std::vector<double> times;
    std::vector<Pt> points;
    std::vector<Mat4> transports;
    /// Minimum chart distance between samples separated by a nontrivial
    /// stretch of arc; large when the segment is short enough to be
    /// trivially embedded.
    double delta_emb = 0.0;
    /// Step-halving rounds needed to reach the ODE tolerance.
    int halvings = 0;
};

/// Flows p along Y for time T with the variational equation, verifying the
/// local error by step halving (ode_tol per unit time). Throws FlowEscape
/// when a non-periodic chart boundary is hit, NumericalError when halving
/// fails to converge.
FlowSegment flow_segment(const VectorFieldDef& Y, const Pt& p, double T,
                         const Tolerances& tol = Tolerances());

/// The curve of plane directions D/Y along the flow of Y, transported back
/// to the start and lifted to the unit sphere of a fixed orthonormal
/// complement basis at the base point.
struct DevelopmentCurve {
    Pt base = Pt::Zero();
    SphereCurve curve;
    FlowSegment segment;
};

/// Development of the plane frame D along its sub-line-field Y from p over
/// [0, T]. Requires Y inside span(D) pointwise (angle theta_min). Throws
/// TangencyToY when D/Y degenerates, FlowEscape as in flow_segment.
DevelopmentCurve develop(const std::vector<VectorFieldDef>& D, const VectorFieldDef& Y,
                         const Pt& p, double T, const Tolerances& tol = Tolerances());

struct DevelopmentPointCheck {
    Pt p = Pt::Zero();
    bool immersed = false;
    bool convex = false;
    int flow_samples = 0;
    int disagreements = 0;  // immersion vs bracket rank, per sample
};

struct DevelopmentReport {
    bool all_immersed = false;
    bool all_convex = false;
    bool cross_check_pass = false;
    int disagreements = 0;
    std::vector<DevelopmentPointCheck> points;
    Tolerances tolerances;
};

/// Immersion/convexity of the development curves from each base point, with
/// a samplewise cross-check: immersion must match the first bracket-rank
/// margin of the frame at the corresponding flow point.
DevelopmentReport check_development_engel(const std::vector<VectorFieldDef>& D,
                                          const VectorFieldDef& Y, const std::vector<Pt>& points,
                                          double T, const Tolerances& tol = Tolerances());

struct LoosenessWitness {
    Pt p = Pt::Zero();
    double T_used = 0.0;
    int wiggle_count = 0;
    double delta_emb = 0.0;
    FlowSegment segment;
};

struct LoosenessCertificate {
    bool success = false;
    int required = 0;
    std::vector<LoosenessWitness> witnesses;
    // Failure diagnosis (meaningful when success is false):
    std::string diagnosis;
    Pt worst_point = Pt::Zero();
    int best_count = 0;
    double best_margin = 0.0;
    bool closed_orbit_suspected = false;
    Tolerances tolerances;
};

/// Searches flow segments of growing length (up to T_max) whose development
/// carries at least N wiggles while the segment stays embedded
/// (delta_emb > delta_min). Throws NotConvex when a development curve is
/// not convex; returns the best failing triple otherwise.
LoosenessCertificate certify_looseness(const std::vector<VectorFieldDef>& D,
                                       const VectorFieldDef& Y, int N,
                                       const std::vector<Pt>& points, double T_max,
                                       const Tolerances& tol = Tolerances());

/// Wiggle budget for the bootstrapping argument: 2(dim_K + 4) + 1, plus
/// 2 * D_overlap when an overlap multiplicity is given.
int n0_lower_bound(int dim_K, std::optional<int> D_overlap = std::nullopt);

} // namespace engel
