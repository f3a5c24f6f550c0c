#pragma once

#include "engel/curve.hpp"
#include "engel/fields.hpp"
#include "engel/surgery.hpp"

#include <optional>
#include <string>
#include <vector>

namespace engel {

/// Flowbox model on the box [-1,1]^3 x [0,1]: the plane field spanned by
/// d/dt and a unit spatial field X(p, t), where p ranges over the ball
/// |p| <= 1 inscribed in the box. X is carried either as an expression
/// field (with vanishing t-component) or as a sampled family of sphere
/// curves t -> X_p(t) over a spatial grid, or both.
class Shell {
public:
    Shell() = default;

    /// Expression-backed shell. X must have 4 components on the (x,y,z,t)
    /// box chart with X_t identically 0 and |X| = 1 within unit_norm
    /// (checked on a coarse probe grid).
    Shell(VectorFieldDef X, OrientationData orientation, double epsilon,
          const Tolerances& tol = Tolerances());

    /// Curve-backed shell over the spatial grid with the given per-axis
    /// counts (shape of the family).
    Shell(CurveFamily curves, std::vector<int> spatial_counts, OrientationData orientation,
          double epsilon, const Tolerances& tol = Tolerances());

    bool has_field() const { return field_.has_value(); }
    bool has_curves() const { return curves_.has_value(); }
    const VectorFieldDef& field() const;
    const CurveFamily& curves() const;
    const std::vector<int>& spatial_counts() const { return spatial_counts_; }
    const OrientationData& orientation() const { return orientation_; }
    double epsilon() const { return epsilon_; }

    /// 4-dimensional box chart (x,y,z in [-1,1], t in [0,1]).
    const ChartDomain& chart() const { return chart_; }
    /// 3-dimensional spatial chart (x,y,z in [-1,1]).
    const ChartDomain& spatial_chart() const { return spatial_chart_; }

    /// Spatial grid point of family node k (curve-backed shells).
    Vec3 grid_point(int k) const;
    /// True when the grid point lies in the ball |p| <= 1.
    bool in_ball(int k) const;

    /// Checks that the field and curve representations agree samplewise
    /// within delta; throws DomainError when only one is present.
    bool representations_agree(double delta, int nt = 33) const;

private:
    ChartDomain chart_;
    ChartDomain spatial_chart_;
    std::optional<VectorFieldDef> field_;
    std::optional<CurveFamily> curves_;
    std::vector<int> spatial_counts_;
    OrientationData orientation_;
    double epsilon_ = 0.2;
    Tolerances tol_;
};

/// Samples t -> X_p(t) over the spatial grid with the given per-axis counts
/// and nt samples along t. For curve-backed shells the stored family is
/// returned and the counts must match.
CurveFamily extract_curves(const Shell& sh, const std::vector<int>& spatial_counts, int nt = 97,
                           const Tolerances& tol = Tolerances());

/// Verdict of the two-condition Engel test at one (p, t) sample.
struct ShellPointVerdict {
    Pt p = Pt::Zero();        // (x, y, z, t)
    bool immersed = false;
    bool a_pass = false;      // |k_g| >= k_min
    bool b_pass = false;      // slice plane field contact near p
    bool engel_pass = false;  // immersed and (A or B)
    double kg = 0.0;
    double contact_margin = 0.0;  // only meaningful when B was evaluated
};

struct ShellReport {
    bool pass = false;
    int checked = 0;
    int failed = 0;
    double min_abs_kg = 0.0;
    std::vector<ShellPointVerdict> points;
    /// Curve verdict vs bracket-rank verdict at matched tolerances.
    bool cross_check_pass = false;
    int cross_disagreements = 0;
    Tolerances tolerances;
};

/// Pointwise Engel certification over a (p, t) grid restricted to the ball:
/// at each sample, immersion plus either curvature bounded away from zero or
/// contact on the slice neighborhood (radius nbhd_radius). The same verdict
/// is recomputed from bracket-rank margins of the assembled frame and the
/// two must agree.
ShellReport check_engel_shell(const Shell& sh, const std::vector<int>& spatial_counts,
                              int nt = 33, const Tolerances& tol = Tolerances());

/// All curves immersed and convex on the boundary collar of width
/// epsilon * tol.collar (both t-ends and the spatial boundary layer).
bool is_convex_shell(const Shell& sh, const std::vector<int>& spatial_counts, int nt = 33,
                     const Tolerances& tol = Tolerances());

struct NConvexReport {
    bool pass = false;
    int required = 0;
    int min_count = 0;
    std::vector<int> counts;                    // per family node, -1 outside the ball
    std::vector<std::vector<double>> witnesses; // wiggle midpoints in (0, eps)
    bool lipschitz_ok = false;
    double max_lipschitz = 0.0;                 // max |dt_i| / |dp| over grid edges
    std::vector<std::string> failures;
    Tolerances tolerances;
};

/// Convex shell carrying at least N early wiggles per curve: each curve in
/// the ball has >= N detected wiggles with midpoints in (0, epsilon), is
/// convex outside the wiggle intervals, and the witness times vary across
/// the grid with Lipschitz constant <= grid_lipschitz.
NConvexReport is_N_convex(const Shell& sh, int N, const std::vector<int>& spatial_counts,
                          int nt = 97, const Tolerances& tol = Tolerances());

/// Homotopy of shells produced by solidify: boundary nodes frozen, interior
/// curves fed through the wiggle-distribution schedule until convex.
class ShellHomotopy {
public:
    const Shell& initial() const { return sh0_; }
    Shell at(double s) const;    // s in [0, 1]
    Shell final_shell() const { return at(1.0); }
    /// Schedule time reached at s = 1.
    double schedule_end() const { return s_hi_; }
    const WiggleSchedule& schedule() const { return sched_; }

private:
    friend ShellHomotopy solidify(const Shell&, const std::vector<int>&, int,
                                  const Tolerances&);
    Shell sh0_;
    WiggleSchedule sched_;
    double s_hi_ = 1.0;
    std::vector<int> counts_;
    int nt_ = 97;
    Tolerances tol_;
};

/// Turns an N-convex shell (N >= 1) into a solid (N-1)-convex one through
/// shells, fixing the boundary germ: the extracted family is distributed
/// with the spatial boundary grid frozen. Throws HypothesisViolated when
/// the shell is not 1-convex.
ShellHomotopy solidify(const Shell& sh, const std::vector<int>& spatial_counts, int nt = 97,
                       const Tolerances& tol = Tolerances());

} // namespace engel
