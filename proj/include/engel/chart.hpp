#pragma once

#include "engel/expr.hpp"
#include "engel/geom.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace engel {

using Pt = Eigen::Vector4d;
using Vec = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct Axis {
    int var = -1;         ///< canonical variable id (index into kVarNames)
    double lo = 0.0;
    double hi = 1.0;
    bool periodic = false;

    std::string name() const { return kVarNames[var]; }
    double length() const { return hi - lo; }
};

/// Box chart domain of dimension at most 4; periodic axes are reduced
/// modulo their period, so membership along them is unconditional.
class ChartDomain {
public:
    ChartDomain() = default;
    explicit ChartDomain(std::vector<Axis> axes);

    int dim() const { return static_cast<int>(axes_.size()); }
    const std::vector<Axis>& axes() const { return axes_; }
    const Axis& axis(int i) const { return axes_[i]; }

    /// Index of the axis bound to the given variable id, or -1.
    int axis_of_var(int var) const;

    /// Total membership test: true iff every non-periodic coordinate lies in
    /// [lo - slack, hi + slack]. Defined for every input point.
    bool contains(const Pt& p, double slack = 1e-12) const;

    /// Canonical representative: periodic coordinates wrapped into [lo, hi).
    Pt reduce(const Pt& p) const;

    /// Euclidean distance with periodic wrap along periodic axes.
    double distance(const Pt& p, const Pt& q) const;

private:
    std::vector<Axis> axes_;
};

/// Rectangular sample grid over a chart. Periodic axes omit the duplicate
/// endpoint; non-periodic axes include both endpoints.
class SampleGrid {
public:
    SampleGrid() = default;
    SampleGrid(const ChartDomain& chart, std::vector<int> counts);

    const std::vector<Pt>& points() const { return points_; }
    const std::vector<int>& counts() const { return counts_; }
    std::size_t size() const { return points_.size(); }

    /// Flat index from per-axis indices.
    std::size_t flat_index(const std::vector<int>& idx) const;

private:
    std::vector<int> counts_;
    std::vector<Pt> points_;
    std::vector<std::size_t> strides_;
};

/// Scalar jet of an expression over a chart: value, gradient and Hessian
/// with respect to the chart coordinates, exact up to roundoff.
struct ScalarJet {
    double value = 0.0;
    Vec gradient = Vec::Zero();
    Mat4 hessian = Mat4::Zero();
};

/// Evaluates an expression at a chart point with exact dual arithmetic.
/// Throws DomainError outside the chart and NumericalError on non-finite
/// results. Periodic coordinates are reduced first.
ScalarJet eval_with_jet(const Expr& e, const ChartDomain& chart, const Pt& p);

/// Vector field on a chart, one expression component per axis.
class VectorFieldDef {
public:
    VectorFieldDef() = default;
    VectorFieldDef(ChartDomain chart, std::vector<Expr> components);

    const ChartDomain& chart() const { return chart_; }
    const std::vector<Expr>& components() const { return components_; }

    Vec value(const Pt& p) const;

    /// Value and Jacobian (column j = derivative along axis j) from
    /// first-order jets.
    void value_and_jacobian(const Pt& p, Vec& value, Mat4& jac) const;

    /// Derivatives of the field along one axis only, up to second order.
    /// Used for curves of the form t -> X(p, t).
    void axis_jets(const Pt& p, int axis, Vec& value, Vec& d1, Vec& d2) const;

private:
    ChartDomain chart_;
    std::vector<Expr> components_;
};

/// Lie bracket [X, Y] = DY X - DX Y evaluated pointwise from exact jets.
Vec lie_bracket(const VectorFieldDef& X, const VectorFieldDef& Y, const Pt& p);

} // namespace engel
