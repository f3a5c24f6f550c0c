#include "engel/fields.hpp"

#include "engel/errors.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>

namespace engel {

namespace {

/// Column scaling that is exact normalization for healthy columns but damps
/// (rather than inflates) columns at roundoff scale, so a bracket that
/// vanishes up to noise cannot masquerade as an independent direction.
Vec normalize_or_damp(const Vec& c, double floor) {
    double n = c.norm();
    return c / std::max(n, floor);
}

/// k-th singular value (1-based) of a 4 x n matrix.
double singular_value(const Eigen::Matrix<double, 4, Eigen::Dynamic>& m, int k) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(k - 1);
}

void require_dim(const VectorFieldDef& f, int dim, const char* what) {
    if (f.chart().dim() != dim)
        throw DomainError(std::string(what) + ": chart must be " + std::to_string(dim) +
                          "-dimensional");
}

/// Walks flat grid indices while maintaining the per-axis index vector and,
/// for each point, the flat index of an already-visited axis neighbor
/// (or npos for the first point).
struct GridWalk {
    explicit GridWalk(const SampleGrid& grid)
        : counts(grid.counts()), idx(grid.counts().size(), 0), grid_(&grid) {}

    std::size_t prev_neighbor() const {
        for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
            if (idx[a] > 0) {
                std::vector<int> j = idx;
                --j[a];
                return grid_->flat_index(j);
            }
        }
        return static_cast<std::size_t>(-1);
    }

    void advance() {
        for (int a = static_cast<int>(idx.size()) - 1; a >= 0; --a) {
            if (++idx[a] < counts[a]) return;
            idx[a] = 0;
        }
    }

    std::vector<int> counts;
    std::vector<int> idx;
    const SampleGrid* grid_;
};

} // namespace

LegJet eval_leg(const VectorFieldDef& f, const Pt& p, bool with_hessian) {
    LegJet out;
    if (!with_hessian) {
        f.value_and_jacobian(p, out.value, out.jac);
        return out;
    }
    for (int i = 0; i < f.chart().dim(); ++i) {
        ScalarJet sj = eval_with_jet(f.components()[i], f.chart(), p);
        out.value[i] = sj.value;
        out.jac.row(i) = sj.gradient.transpose();
        out.hess[i] = sj.hessian;
    }
    out.has_hess = true;
    return out;
}

LegJet bracket_leg(const LegJet& a, const LegJet& b) {
    LegJet out;
    out.value = b.jac * a.value - a.jac * b.value;
    if (a.has_hess && b.has_hess) {
        // d/dx_k [a,b]_i = sum_j (d2 b_i a_j - d2 a_i b_j) + (Jb Ja - Ja Jb)_ik
        out.jac = b.jac * a.jac - a.jac * b.jac;
        for (int i = 0; i < 4; ++i)
            out.jac.row(i) += (b.hess[i] * a.value - a.hess[i] * b.value).transpose();
        // Third derivatives are never needed, so the result carries no Hessian.
    }
    return out;
}

CheckReport contact_check(const VectorFieldDef& u, const VectorFieldDef& v, const SampleGrid& grid,
                          const Tolerances& tol) {
    require_dim(u, 3, "contact_check");
    require_dim(v, 3, "contact_check");
    CheckReport rep;
    rep.tolerances = tol;
    rep.pass = true;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const Pt& p : grid.points()) {
        Vec uv = u.value(p);
        Vec vv = v.value(p);
        Vec bv = lie_bracket(u, v, p);
        Eigen::Matrix3d m;
        m.col(0) = uv.head<3>();
        m.col(1) = vv.head<3>();
        m.col(2) = bv.head<3>();
        double margin = std::abs(m.determinant());
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_point = p;
        }
        if (margin < tol.contact_min) {
            rep.pass = false;
            rep.note_failure(p, "contact determinant below threshold");
        }
    }
    return rep;
}

CheckReport even_contact_check(const std::vector<VectorFieldDef>& E, const SampleGrid& grid,
                               const Tolerances& tol) {
    if (E.size() != 3) throw DomainError("even_contact_check: frame must have 3 legs");
    for (const auto& e : E) require_dim(e, 4, "even_contact_check");
    CheckReport rep;
    rep.tolerances = tol;
    rep.pass = true;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const Pt& p : grid.points()) {
        LegJet e1 = eval_leg(E[0], p, false);
        LegJet e2 = eval_leg(E[1], p, false);
        LegJet e3 = eval_leg(E[2], p, false);
        double ref = std::max({1.0, e1.value.norm(), e2.value.norm(), e3.value.norm()});
        double floor = 1e-10 * ref;

        Eigen::Matrix<double, 4, Eigen::Dynamic> frame(4, 3);
        frame.col(0) = normalize_or_damp(e1.value, floor);
        frame.col(1) = normalize_or_damp(e2.value, floor);
        frame.col(2) = normalize_or_damp(e3.value, floor);
        if (singular_value(frame, 3) < tol.sigma_min)
            throw DegenerateFrame("even_contact_check: frame drops below rank 3");

        Eigen::Matrix<double, 4, Eigen::Dynamic> full(4, 6);
        full.leftCols(3) = frame;
        full.col(3) = normalize_or_damp(bracket_leg(e1, e2).value, floor);
        full.col(4) = normalize_or_damp(bracket_leg(e1, e3).value, floor);
        full.col(5) = normalize_or_damp(bracket_leg(e2, e3).value, floor);
        double margin = singular_value(full, 4);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_point = p;
        }
        if (margin < tol.sigma_min) {
            rep.pass = false;
            rep.note_failure(p, "frame plus brackets below rank 4");
        }
    }
    return rep;
}

std::pair<double, double> engel_margins(const std::vector<VectorFieldDef>& D, const Pt& p,
                                         const Tolerances& tol) {
    if (D.size() != 2) throw DomainError("engel_margins: frame must have 2 legs");
    for (const auto& d : D) require_dim(d, 4, "engel_margins");
    LegJet d1 = eval_leg(D[0], p, true);
    LegJet d2 = eval_leg(D[1], p, true);
    LegJet b12 = bracket_leg(d1, d2);
    double ref = std::max({1.0, d1.value.norm(), d2.value.norm(), b12.value.norm()});
    double floor = 1e-10 * ref;

    Eigen::Matrix<double, 4, Eigen::Dynamic> pair(4, 2);
    pair.col(0) = normalize_or_damp(d1.value, floor);
    pair.col(1) = normalize_or_damp(d2.value, floor);
    if (singular_value(pair, 2) < tol.sigma_min)
        throw DegenerateFrame("engel_margins: frame drops below rank 2");

    Eigen::Matrix<double, 4, Eigen::Dynamic> hull(4, 3);
    hull.leftCols(2) = pair;
    hull.col(2) = normalize_or_damp(b12.value, floor);
    double m3 = singular_value(hull, 3);

    Eigen::Matrix<double, 4, Eigen::Dynamic> full(4, 5);
    full.leftCols(3) = hull;
    full.col(3) = normalize_or_damp(bracket_leg(d1, b12).value, floor);
    full.col(4) = normalize_or_damp(bracket_leg(d2, b12).value, floor);
    double m4 = singular_value(full, 4);
    return {m3, m4};
}

CheckReport engel_check(const std::vector<VectorFieldDef>& D, const SampleGrid& grid,
                        const Tolerances& tol) {
    if (D.size() != 2) throw DomainError("engel_check: frame must have 2 legs");
    for (const auto& d : D) require_dim(d, 4, "engel_check");
    CheckReport rep;
    rep.tolerances = tol;
    rep.pass = true;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (const Pt& p : grid.points()) {
        auto [m3, m4] = engel_margins(D, p, tol);
        double margin = std::min(m3, m4);
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_point = p;
        }
        if (m3 < tol.sigma_min) {
            rep.pass = false;
            rep.note_failure(p, "first bracket step below rank 3");
        } else if (m4 < tol.sigma_min) {
            rep.pass = false;
            rep.note_failure(p, "second bracket step below rank 4");
        }
    }
    return rep;
}

SampledField kernel_field(const std::vector<VectorFieldDef>& E, const SampleGrid& grid,
                          const Tolerances& tol) {
    if (E.size() != 3) throw DomainError("kernel_field: frame must have 3 legs");
    for (const auto& e : E) require_dim(e, 4, "kernel_field");

    SampledField out;
    out.grid = grid;
    out.values.reserve(grid.size());

    GridWalk walk(grid);
    for (std::size_t flat = 0; flat < grid.size(); ++flat, walk.advance()) {
        const Pt& p = grid.points()[flat];
        LegJet legs[3] = {eval_leg(E[0], p, false), eval_leg(E[1], p, false),
                          eval_leg(E[2], p, false)};

        Eigen::Matrix<double, 4, 3> frame;
        for (int i = 0; i < 3; ++i) frame.col(i) = legs[i].value;
        Eigen::JacobiSVD<Eigen::Matrix<double, 4, 3>> svd(frame, Eigen::ComputeFullU);
        double ref = std::max(1.0, svd.singularValues()(0));
        if (svd.singularValues()(2) < tol.sigma_min * ref)
            throw KernelRankError("kernel_field: frame drops below rank 3");
        Vec q = svd.matrixU().col(3); // unit complement of span(E)

        // Antisymmetric form m_ij = <q, [e_i, e_j]>; its null direction gives
        // the kernel coefficients in the frame.
        Vec b12 = bracket_leg(legs[0], legs[1]).value;
        Vec b13 = bracket_leg(legs[0], legs[2]).value;
        Vec b23 = bracket_leg(legs[1], legs[2]).value;
        double m12 = q.dot(b12), m13 = q.dot(b13), m23 = q.dot(b23);
        Eigen::Vector3d coeff(m23, -m13, m12);
        double bscale = std::max({1.0, b12.norm(), b13.norm(), b23.norm()});
        if (coeff.norm() < tol.sigma_min * bscale)
            throw KernelRankError("kernel_field: bracket form too close to zero");

        Vec w = coeff[0] * legs[0].value + coeff[1] * legs[1].value + coeff[2] * legs[2].value;
        double wn = w.norm();
        if (wn < tol.sigma_min)
            throw KernelRankError("kernel_field: kernel direction degenerates");
        w /= wn;

        std::size_t prev = walk.prev_neighbor();
        if (prev != static_cast<std::size_t>(-1)) {
            if (w.dot(out.values[prev]) < 0.0) w = -w;
        } else {
            // Canonical sign for the seed point: largest component positive.
            int imax = 0;
            for (int i = 1; i < 4; ++i)
                if (std::abs(w[i]) > std::abs(w[imax])) imax = i;
            if (w[imax] < 0.0) w = -w;
        }
        out.values.push_back(w);
    }
    return out;
}

CheckReport check_flag(const DistributionFlag& flag, const SampleGrid& grid,
                       const std::optional<VectorFieldDef>& Y, const Tolerances& tol) {
    if (flag.D.size() != 2) throw DomainError("check_flag: D must have 2 legs");
    if (flag.E.size() != 3) throw DomainError("check_flag: E must have 3 legs");
    if (std::abs(flag.orientation.sign1) != 1 || std::abs(flag.orientation.sign2) != 1)
        throw DomainError("check_flag: orientation signs must be +1 or -1");

    CheckReport rep;
    rep.tolerances = tol;
    rep.pass = true;
    rep.min_margin = std::numeric_limits<double>::infinity();

    auto subspace_residual = [](const Eigen::Matrix<double, 4, Eigen::Dynamic>& span, Vec v) {
        double n = v.norm();
        if (n == 0.0) return 0.0;
        v /= n;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(span);
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(4, span.cols());
        Vec proj = q * (q.transpose() * v);
        return (v - proj).norm();
    };

    for (const Pt& p : grid.points()) {
        Vec w = flag.W.value(p);
        Eigen::Matrix<double, 4, Eigen::Dynamic> dm(4, 2);
        dm.col(0) = flag.D[0].value(p);
        dm.col(1) = flag.D[1].value(p);
        Eigen::Matrix<double, 4, Eigen::Dynamic> em(4, 3);
        em.col(0) = flag.E[0].value(p);
        em.col(1) = flag.E[1].value(p);
        em.col(2) = flag.E[2].value(p);

        if (singular_value(dm.colwise().normalized(), 2) < tol.sigma_min ||
            singular_value(em.colwise().normalized(), 3) < tol.sigma_min)
            throw DegenerateFrame("check_flag: degenerate frame");

        double rw = subspace_residual(dm, w);
        double rd = std::max(subspace_residual(em, dm.col(0)), subspace_residual(em, dm.col(1)));
        if (rw > tol.sigma_min)
            throw NestingViolation("check_flag: W leaves span(D)");
        if (rd > tol.sigma_min)
            throw NestingViolation("check_flag: D leaves span(E)");
        double margin = tol.sigma_min - std::max(rw, rd);

        if (Y) {
            Vec y = Y->value(p);
            double ry = subspace_residual(dm, y);
            if (ry > tol.sigma_min)
                throw NestingViolation("check_flag: Y leaves span(D)");
            Vec yu = y.normalized(), wu = w.normalized();
            double c = std::abs(yu.dot(wu)); // lines, not rays
            double ang = std::atan2((yu - yu.dot(wu) * wu).norm(), c);
            if (ang < tol.theta_min)
                throw TangencyDetected("check_flag: Y tangent to kernel direction");
            margin = std::min(margin, ang - tol.theta_min);
        }

        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.worst_point = p;
        }
    }
    return rep;
}

} // namespace engel
