#include "engel/json_io.hpp"

#include <cmath>
#include <cstdio>

namespace engel {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const Json& expect(const Json& j, const char* key, const char* what) {
    if (!j.is_object() || !j.contains(key))
        throw SchemaError(std::string(what) + ": missing required key \"" + key + "\"");
    return j.at(key);
}

double expect_number(const Json& j, const char* what) {
    if (!j.is_number()) throw SchemaError(std::string(what) + ": number expected");
    return j.get<double>();
}

Json pt_json(const Pt& p) { return Json::array({p[0], p[1], p[2], p[3]}); }

OrientationData orientation_from(const Json& j) {
    OrientationData o;
    o.sign1 = static_cast<int>(expect_number(expect(j, "sign1", "orientation"), "orientation"));
    o.sign2 = static_cast<int>(expect_number(expect(j, "sign2", "orientation"), "orientation"));
    if ((o.sign1 != 1 && o.sign1 != -1) || (o.sign2 != 1 && o.sign2 != -1))
        throw SchemaError("orientation: signs must be +1 or -1");
    return o;
}

Json orientation_json(const OrientationData& o) {
    return Json{{"sign1", o.sign1}, {"sign2", o.sign2}};
}

} // namespace

Json tolerances_to_json(const Tolerances& tol) {
    Json j = Json::object();
    for (const auto& [k, v] : tol.as_map()) j[k] = v;
    return j;
}

Tolerances tolerances_from_json(const Json& j, Tolerances base) {
    if (!j.is_object()) throw SchemaError("tolerances: object expected");
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw SchemaError("tolerances: value of \"" + k + "\" must be a number");
        if (!base.set(k, v.get<double>()))
            throw SchemaError("tolerances: unknown key \"" + k + "\"");
    }
    return base;
}

Json chart_to_json(const ChartDomain& chart) {
    Json axes = Json::array();
    for (const Axis& ax : chart.axes())
        axes.push_back(Json{{"var", ax.name()}, {"lo", ax.lo}, {"hi", ax.hi},
                            {"periodic", ax.periodic}});
    return Json{{"axes", axes}};
}

ChartDomain chart_from_json(const Json& j) {
    const Json& axes = expect(j, "axes", "chart");
    if (!axes.is_array() || axes.empty() || axes.size() > 4)
        throw SchemaError("chart: 1 to 4 axes required");
    std::vector<Axis> out;
    for (const Json& a : axes) {
        Axis ax;
        const Json& var = expect(a, "var", "chart axis");
        if (!var.is_string()) throw SchemaError("chart axis: \"var\" must be a string");
        ax.var = var_index(var.get<std::string>());
        if (ax.var < 0) throw SchemaError("chart axis: unknown variable \"" +
                                          var.get<std::string>() + "\"");
        ax.lo = expect_number(expect(a, "lo", "chart axis"), "chart axis");
        ax.hi = expect_number(expect(a, "hi", "chart axis"), "chart axis");
        if (!(ax.lo < ax.hi)) throw SchemaError("chart axis: lo < hi required");
        if (a.contains("periodic")) {
            if (!a.at("periodic").is_boolean())
                throw SchemaError("chart axis: \"periodic\" must be a boolean");
            ax.periodic = a.at("periodic").get<bool>();
        }
        out.push_back(ax);
    }
    try {
        return ChartDomain(out);
    } catch (const Error& e) {
        throw SchemaError(std::string("chart: ") + e.what());
    }
}

Json field_to_json(const VectorFieldDef& f) {
    Json comps = Json::array();
    for (const Expr& c : f.components()) comps.push_back(c.str());
    return Json{{"chart", chart_to_json(f.chart())}, {"components", comps}};
}

VectorFieldDef field_from_json(const Json& j) {
    ChartDomain chart = chart_from_json(expect(j, "chart", "field"));
    const Json& comps = expect(j, "components", "field");
    if (!comps.is_array()) throw SchemaError("field: \"components\" must be an array");
    std::vector<Expr> exprs;
    for (const Json& c : comps) {
        if (!c.is_string()) throw SchemaError("field: components must be expression strings");
        try {
            exprs.push_back(Expr::parse(c.get<std::string>()));
        } catch (const Error& e) {
            throw SchemaError(std::string("field: bad component expression: ") + e.what());
        }
    }
    try {
        return VectorFieldDef(std::move(chart), std::move(exprs));
    } catch (const Error& e) {
        throw SchemaError(std::string("field: ") + e.what());
    }
}

Json curve_to_json(const SphereCurve& c) {
    Json samples = Json::array();
    for (const Vec3& g : c.points()) samples.push_back(Json::array({g[0], g[1], g[2]}));
    Json j{{"interval", Json::array({c.t_begin(), c.t_end()})},
           {"samples", samples},
           {"orientation", c.orientation()}};
    // The canonical format implies a uniform grid; keep explicit parameters
    // only when the curve is not uniformly sampled.
    const std::vector<double>& ts = c.params();
    double span = c.t_end() - c.t_begin();
    bool uniform = true;
    for (int i = 0; i < c.size(); ++i) {
        double want = c.t_begin() + span * i / (c.size() - 1);
        if (std::abs(ts[i] - want) > 1e-12 * std::max(1.0, std::abs(span))) {
            uniform = false;
            break;
        }
    }
    if (!uniform) j["params"] = ts;
    return j;
}

SphereCurve curve_from_json(const Json& j, const Tolerances& tol) {
    const Json& interval = expect(j, "interval", "curve");
    if (!interval.is_array() || interval.size() != 2)
        throw SchemaError("curve: \"interval\" must be [t0, t1]");
    double t0 = expect_number(interval[0], "curve interval");
    double t1 = expect_number(interval[1], "curve interval");
    if (!(t0 < t1)) throw SchemaError("curve: interval must be increasing");
    const Json& samples = expect(j, "samples", "curve");
    if (!samples.is_array() || samples.size() < 2)
        throw SchemaError("curve: at least 2 samples required");
    std::vector<Vec3> gs;
    for (const Json& s : samples) {
        if (!s.is_array() || s.size() != 3)
            throw SchemaError("curve: samples must be arrays of 3 numbers");
        Vec3 g(expect_number(s[0], "curve sample"), expect_number(s[1], "curve sample"),
               expect_number(s[2], "curve sample"));
        double n = g.norm();
        if (n < 1e-12) throw SchemaError("curve: zero sample cannot be normalized");
        gs.push_back(g / n);
    }
    int orientation = static_cast<int>(
        expect_number(expect(j, "orientation", "curve"), "curve orientation"));
    if (orientation != 1 && orientation != -1)
        throw SchemaError("curve: orientation must be +1 or -1");
    std::vector<double> ts;
    if (j.contains("params")) {
        const Json& ps = j.at("params");
        if (!ps.is_array() || ps.size() != gs.size())
            throw SchemaError("curve: \"params\" must match the sample count");
        for (const Json& p : ps) ts.push_back(expect_number(p, "curve params"));
    } else {
        int n = static_cast<int>(gs.size());
        for (int i = 0; i < n; ++i) ts.push_back(t0 + (t1 - t0) * i / (n - 1));
    }
    try {
        return SphereCurve(std::move(ts), std::move(gs), orientation, tol);
    } catch (const Error& e) {
        throw SchemaError(std::string("curve: ") + e.what());
    }
}

Json family_to_json(const CurveFamily& F) {
    Json curves = Json::array();
    for (int k = 0; k < F.nodes(); ++k) curves.push_back(curve_to_json(F.curve(k)));
    Json j{{"shape", F.shape()}, {"curves", curves}};
    bool any_frozen = false;
    for (int k = 0; k < F.nodes(); ++k) any_frozen = any_frozen || F.frozen(k);
    if (any_frozen) {
        Json mask = Json::array();
        for (int k = 0; k < F.nodes(); ++k) mask.push_back(F.frozen(k) ? 1 : 0);
        j["frozen"] = mask;
    }
    return j;
}

CurveFamily family_from_json(const Json& j, const Tolerances& tol) {
    const Json& shape = expect(j, "shape", "curve family");
    if (!shape.is_array() || shape.empty() || shape.size() > 3)
        throw SchemaError("curve family: \"shape\" must list 1 to 3 counts");
    std::vector<int> dims;
    for (const Json& d : shape) dims.push_back(static_cast<int>(expect_number(d, "family shape")));
    const Json& curves = expect(j, "curves", "curve family");
    if (!curves.is_array()) throw SchemaError("curve family: \"curves\" must be an array");
    std::vector<SphereCurve> cs;
    for (const Json& c : curves) cs.push_back(curve_from_json(c, tol));
    CurveFamily F;
    try {
        F = CurveFamily(std::move(dims), std::move(cs));
    } catch (const Error& e) {
        throw SchemaError(std::string("curve family: ") + e.what());
    }
    if (j.contains("frozen")) {
        const Json& mask = j.at("frozen");
        if (!mask.is_array() || static_cast<int>(mask.size()) != F.nodes())
            throw SchemaError("curve family: \"frozen\" must list one flag per node");
        std::vector<char> m;
        for (const Json& b : mask) m.push_back(expect_number(b, "frozen mask") != 0.0 ? 1 : 0);
        F.set_frozen(std::move(m));
    }
    return F;
}

namespace {

VectorFieldDef resolve_field(const Json& entry, const Json& named, const char* what) {
    if (entry.is_string()) {
        std::string name = entry.get<std::string>();
        if (!named.is_object() || !named.contains(name))
            throw SchemaError(std::string(what) + ": unknown field name \"" + name + "\"");
        return field_from_json(named.at(name));
    }
    return field_from_json(entry);
}

} // namespace

Json flag_to_json(const DistributionFlag& flag) {
    Json D = Json::array();
    for (const VectorFieldDef& f : flag.D) D.push_back(field_to_json(f));
    Json E = Json::array();
    for (const VectorFieldDef& f : flag.E) E.push_back(field_to_json(f));
    return Json{{"W", field_to_json(flag.W)},
                {"D", D},
                {"E", E},
                {"orientation", orientation_json(flag.orientation)}};
}

DistributionFlag flag_from_json(const Json& j, const Json& named) {
    DistributionFlag flag;
    flag.W = resolve_field(expect(j, "W", "flag"), named, "flag W");
    const Json& D = expect(j, "D", "flag");
    if (!D.is_array() || D.size() != 2) throw SchemaError("flag: \"D\" must list 2 fields");
    for (const Json& f : D) flag.D.push_back(resolve_field(f, named, "flag D"));
    const Json& E = expect(j, "E", "flag");
    if (!E.is_array() || E.size() != 3) throw SchemaError("flag: \"E\" must list 3 fields");
    for (const Json& f : E) flag.E.push_back(resolve_field(f, named, "flag E"));
    if (j.contains("orientation")) flag.orientation = orientation_from(j.at("orientation"));
    return flag;
}

Json shell_to_json(const Shell& sh) {
    Json j{{"epsilon", sh.epsilon()}, {"orientation", orientation_json(sh.orientation())}};
    if (sh.has_field()) j["field"] = field_to_json(sh.field());
    if (sh.has_curves()) j["curves"] = family_to_json(sh.curves());
    return j;
}

Shell shell_from_json(const Json& j, const Tolerances& tol) {
    double epsilon = expect_number(expect(j, "epsilon", "shell"), "shell epsilon");
    OrientationData orientation = orientation_from(expect(j, "orientation", "shell"));
    try {
        if (j.contains("field"))
            return Shell(field_from_json(j.at("field")), orientation, epsilon, tol);
        if (j.contains("curves")) {
            CurveFamily F = family_from_json(j.at("curves"), tol);
            std::vector<int> counts = F.shape();
            return Shell(std::move(F), std::move(counts), orientation, epsilon, tol);
        }
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(std::string("shell: ") + e.what());
    }
    throw SchemaError("shell: either \"field\" or \"curves\" is required");
}

Json report_to_json(const CheckReport& rep) {
    return Json{{"pass", rep.pass},
                {"min_margin", rep.min_margin},
                {"worst_point", pt_json(rep.worst_point)},
                {"failures", rep.failures},
                {"tolerances", tolerances_to_json(rep.tolerances)}};
}

Json shell_report_to_json(const ShellReport& rep) {
    Json failures = Json::array();
    for (const ShellPointVerdict& v : rep.points) {
        if (v.engel_pass) continue;
        if (failures.size() >= 32) break;
        failures.push_back(Json{{"point", pt_json(v.p)},
                                {"immersed", v.immersed},
                                {"kg", v.kg},
                                {"contact_margin", v.contact_margin}});
    }
    return Json{{"pass", rep.pass},
                {"checked", rep.checked},
                {"failed", rep.failed},
                {"min_abs_kg", rep.min_abs_kg},
                {"cross_check_pass", rep.cross_check_pass},
                {"cross_disagreements", rep.cross_disagreements},
                {"failures", failures},
                {"tolerances", tolerances_to_json(rep.tolerances)}};
}

Json nconvex_report_to_json(const NConvexReport& rep) {
    return Json{{"pass", rep.pass},
                {"required", rep.required},
                {"min_count", rep.min_count},
                {"counts", rep.counts},
                {"witnesses", rep.witnesses},
                {"lipschitz_ok", rep.lipschitz_ok},
                {"max_lipschitz", rep.max_lipschitz},
                {"failures", rep.failures},
                {"tolerances", tolerances_to_json(rep.tolerances)}};
}

Json development_report_to_json(const DevelopmentReport& rep) {
    Json points = Json::array();
    for (const DevelopmentPointCheck& pc : rep.points)
        points.push_back(Json{{"point", pt_json(pc.p)},
                              {"immersed", pc.immersed},
                              {"convex", pc.convex},
                              {"flow_samples", pc.flow_samples},
                              {"disagreements", pc.disagreements}});
    return Json{{"pass", rep.all_immersed && rep.cross_check_pass},
                {"all_immersed", rep.all_immersed},
                {"all_convex", rep.all_convex},
                {"cross_check_pass", rep.cross_check_pass},
                {"disagreements", rep.disagreements},
                {"points", points},
                {"tolerances", tolerances_to_json(rep.tolerances)}};
}

Json certificate_to_json(const LoosenessCertificate& cert) {
    Json witnesses = Json::array();
    for (const LoosenessWitness& w : cert.witnesses)
        witnesses.push_back(Json{{"point", pt_json(w.p)},
                                 {"T_used", w.T_used},
                                 {"wiggle_count", w.wiggle_count},
                                 {"delta_emb", w.delta_emb},
                                 {"flow_samples", static_cast<int>(w.segment.points.size())}});
    return Json{{"pass", cert.success},
                {"required", cert.required},
                {"witnesses", witnesses},
                {"diagnosis", cert.diagnosis},
                {"worst_point", pt_json(cert.worst_point)},
                {"best_count", cert.best_count},
                {"best_margin", cert.best_margin},
                {"closed_orbit_suspected", cert.closed_orbit_suspected},
                {"tolerances", tolerances_to_json(cert.tolerances)}};
}

Json return_map_to_json(const ReturnMapReport& rep) {
    Json argmins = Json::array();
    for (const Pt& p : rep.argmin_points) argmins.push_back(pt_json(p));
    return Json{{"pass", rep.fixed_point_free},
                {"s", rep.s},
                {"iterates", rep.iterates},
                {"min_displacement", rep.min_displacement},
                {"argmin_points", argmins},
                {"fixed_point_free", rep.fixed_point_free},
                {"tolerances", tolerances_to_json(rep.tolerances)}};
}

std::string curvature_profile_csv(const SphereCurve& c, const Tolerances& tol) {
    std::vector<double> ks = geodesic_curvature(c, tol);
    std::string out = "t,k_g\n";
    for (int i = 0; i < c.size(); ++i) out += fmt(c.t(i)) + "," + fmt(ks[i]) + "\n";
    return out;
}

std::string wiggle_table_csv(const SphereCurve& c, const Tolerances& tol) {
    std::string out = "a,b,rho\n";
    for (const Wiggle& w : detect_wiggles(c, tol))
        out += fmt(w.a) + "," + fmt(w.b) + "," + fmt(w.rho) + "\n";
    return out;
}

std::string homotopy_trace_csv(const std::function<SphereCurve(double)>& at, double s_lo,
                               double s_hi, int steps, const Tolerances& tol) {
    if (steps < 1) throw DomainError("homotopy trace: at least 1 step required");
    std::string out = "s,wiggle_count,min_curvature\n";
    for (int i = 0; i <= steps; ++i) {
        double s = s_lo + (s_hi - s_lo) * i / steps;
        SphereCurve c = at(s);
        std::vector<double> ks = geodesic_curvature(c, tol);
        double kmin = ks.front();
        for (double k : ks) kmin = std::min(kmin, k);
        out += fmt(s) + "," + std::to_string(detect_wiggles(c, tol).size()) + "," + fmt(kmin) +
               "\n";
    }
    return out;
}

std::string development_trace_csv(const DevelopmentCurve& dev, const Tolerances& tol) {
    const SphereCurve& c = dev.curve;
    std::vector<double> ks = geodesic_curvature(c, tol);
    std::string out = "t,g1,g2,g3,k_g\n";
    for (int i = 0; i < c.size(); ++i) {
        const Vec3& g = c.point(i);
        out += fmt(c.t(i)) + "," + fmt(g[0]) + "," + fmt(g[1]) + "," + fmt(g[2]) + "," +
               fmt(ks[i]) + "\n";
    }
    return out;
}

std::string wiggle_heatmap_csv(const Shell& sh, const NConvexReport& rep) {
    if (!sh.has_curves())
        throw DomainError("wiggle heatmap: curve-backed shell required (extract curves first)");
    if (static_cast<int>(rep.counts.size()) != sh.curves().nodes())
        throw DomainError("wiggle heatmap: report does not match the shell grid");
    std::string out = "p1,p2,p3,count\n";
    for (int k = 0; k < sh.curves().nodes(); ++k) {
        Vec3 p = sh.grid_point(k);
        out += fmt(p[0]) + "," + fmt(p[1]) + "," + fmt(p[2]) + "," +
               std::to_string(rep.counts[k]) + "\n";
    }
    return out;
}

} // namespace engel
