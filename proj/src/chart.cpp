#include "engel/chart.hpp"

#include "engel/errors.hpp"

#include <cmath>

namespace engel {

ChartDomain::ChartDomain(std::vector<Axis> axes) : axes_(std::move(axes)) {
    if (axes_.empty() || axes_.size() > 4)
        throw DomainError("chart must have between 1 and 4 axes");
    for (std::size_t i = 0; i < axes_.size(); ++i) {
        const Axis& a = axes_[i];
        if (a.var < 0 || a.var >= kNumVars) throw DomainError("chart axis has no variable name");
        if (!(a.hi > a.lo)) throw DomainError("chart axis '" + a.name() + "' has non-positive length");
        for (std::size_t j = 0; j < i; ++j)
            if (axes_[j].var == a.var)
                throw DomainError("duplicate chart axis '" + a.name() + "'");
    }
}

int ChartDomain::axis_of_var(int var) const {
    for (int i = 0; i < dim(); ++i)
        if (axes_[i].var == var) return i;
    return -1;
}

bool ChartDomain::contains(const Pt& p, double slack) const {
    for (int i = 0; i < dim(); ++i) {
        if (axes_[i].periodic) continue;
        if (!(p[i] >= axes_[i].lo - slack && p[i] <= axes_[i].hi + slack)) return false;
    }
    return true;
}

Pt ChartDomain::reduce(const Pt& p) const {
    Pt q = p;
    for (int i = 0; i < dim(); ++i) {
        if (!axes_[i].periodic) continue;
        double len = axes_[i].length();
        q[i] = axes_[i].lo + std::fmod(std::fmod(p[i] - axes_[i].lo, len) + len, len);
    }
    return q;
}

double ChartDomain::distance(const Pt& p, const Pt& q) const {
    double acc = 0.0;
    for (int i = 0; i < dim(); ++i) {
        double d = p[i] - q[i];
        if (axes_[i].periodic) {
            double len = axes_[i].length();
            d = std::remainder(d, len);
        }
        acc += d * d;
    }
    return std::sqrt(acc);
}

SampleGrid::SampleGrid(const ChartDomain& chart, std::vector<int> counts) : counts_(std::move(counts)) {
    if (static_cast<int>(counts_.size()) != chart.dim())
        throw DomainError("sample grid: one count per chart axis required");
    for (int c : counts_)
        if (c != 1 && c < 8)
            throw DomainError("sample grid: counts must be 1 (degenerate) or at least 8");

    strides_.assign(counts_.size(), 1);
    for (int i = static_cast<int>(counts_.size()) - 2; i >= 0; --i)
        strides_[i] = strides_[i + 1] * counts_[i + 1];

    std::size_t total = 1;
    for (int c : counts_) total *= c;
    points_.reserve(total);
    std::vector<int> idx(counts_.size(), 0);
    for (std::size_t flat = 0; flat < total; ++flat) {
        Pt p = Pt::Zero();
        for (int i = 0; i < chart.dim(); ++i) {
            const Axis& a = chart.axis(i);
            if (counts_[i] == 1) {
                p[i] = 0.5 * (a.lo + a.hi);
            } else if (a.periodic) {
                p[i] = a.lo + a.length() * idx[i] / counts_[i];
            } else {
                p[i] = a.lo + a.length() * idx[i] / (counts_[i] - 1);
            }
        }
        points_.push_back(p);
        for (int i = static_cast<int>(counts_.size()) - 1; i >= 0; --i) {
            if (++idx[i] < counts_[i]) break;
            idx[i] = 0;
        }
    }
}

std::size_t SampleGrid::flat_index(const std::vector<int>& idx) const {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) flat += idx[i] * strides_[i];
    return flat;
}

namespace {

/// Variable array for jet evaluation: chart axes become jet variables,
/// all other names stay constant (their use is rejected at bind time).
std::array<Jet, kNumVars> bind_point(const ChartDomain& chart, const Pt& reduced, bool with_h) {
    std::array<Jet, kNumVars> vars;
    for (int v = 0; v < kNumVars; ++v) vars[v] = Jet::constant(0.0, chart.dim(), with_h);
    for (int i = 0; i < chart.dim(); ++i)
        vars[chart.axis(i).var] = Jet::variable(reduced[i], i, chart.dim(), with_h);
    return vars;
}

void check_vars(const Expr& e, const ChartDomain& chart, const char* what) {
    auto used = e.used_vars();
    for (int v = 0; v < kNumVars; ++v)
        if (used[v] && chart.axis_of_var(v) < 0)
            throw UnknownIdentifier(std::string(what) + ": variable '" + kVarNames[v] +
                                    "' is not a coordinate of the chart");
}

} // namespace

ScalarJet eval_with_jet(const Expr& e, const ChartDomain& chart, const Pt& p) {
    check_vars(e, chart, "eval_with_jet");
    if (!chart.contains(p)) throw DomainError("eval_with_jet: point outside chart domain");
    Pt q = chart.reduce(p);
    Jet r = e.eval(bind_point(chart, q, true));
    if (!is_finite(r)) throw NumericalError("eval_with_jet: non-finite result");
    ScalarJet out;
    out.value = r.v;
    out.gradient = r.g;
    out.hessian = r.h;
    return out;
}

VectorFieldDef::VectorFieldDef(ChartDomain chart, std::vector<Expr> components)
    : chart_(std::move(chart)), components_(std::move(components)) {
    if (static_cast<int>(components_.size()) != chart_.dim())
        throw DomainError("vector field: one component per chart axis required");
    for (const Expr& c : components_) check_vars(c, chart_, "vector field");
}

Vec VectorFieldDef::value(const Pt& p) const {
    if (!chart_.contains(p)) throw DomainError("vector field: point outside chart domain");
    Pt q = chart_.reduce(p);
    std::array<double, kNumVars> vars{};
    for (int i = 0; i < chart_.dim(); ++i) vars[chart_.axis(i).var] = q[i];
    Vec out = Vec::Zero();
    for (int i = 0; i < chart_.dim(); ++i) {
        out[i] = components_[i].eval(vars);
        if (!std::isfinite(out[i])) throw NumericalError("vector field: non-finite component");
    }
    return out;
}

void VectorFieldDef::value_and_jacobian(const Pt& p, Vec& value, Mat4& jac) const {
    if (!chart_.contains(p)) throw DomainError("vector field: point outside chart domain");
    Pt q = chart_.reduce(p);
    auto vars = bind_point(chart_, q, false);
    value = Vec::Zero();
    jac = Mat4::Zero();
    for (int i = 0; i < chart_.dim(); ++i) {
        Jet r = components_[i].eval(vars);
        if (!is_finite(r)) throw NumericalError("vector field: non-finite jet");
        value[i] = r.v;
        jac.row(i) = r.g.transpose();
    }
}

void VectorFieldDef::axis_jets(const Pt& p, int axis, Vec& value, Vec& d1, Vec& d2) const {
    if (!chart_.contains(p)) throw DomainError("vector field: point outside chart domain");
    Pt q = chart_.reduce(p);
    // One-dimensional jet in the chosen axis: cheap second derivatives.
    std::array<Jet, kNumVars> vars;
    for (int v = 0; v < kNumVars; ++v) vars[v] = Jet::constant(0.0, 1, true);
    for (int i = 0; i < chart_.dim(); ++i) {
        int var = chart_.axis(i).var;
        vars[var] = (i == axis) ? Jet::variable(q[i], 0, 1, true) : Jet::constant(q[i], 1, true);
    }
    value = Vec::Zero();
    d1 = Vec::Zero();
    d2 = Vec::Zero();
    for (int i = 0; i < chart_.dim(); ++i) {
        Jet r = components_[i].eval(vars);
        if (!is_finite(r)) throw NumericalError("vector field: non-finite jet");
        value[i] = r.v;
        d1[i] = r.g[0];
        d2[i] = r.h(0, 0);
    }
}

Vec lie_bracket(const VectorFieldDef& X, const VectorFieldDef& Y, const Pt& p) {
    Vec xv, yv;
    Mat4 xj, yj;
    X.value_and_jacobian(p, xv, xj);
    Y.value_and_jacobian(p, yv, yj);
    return yj * xv - xj * yv;
}

} // namespace engel
