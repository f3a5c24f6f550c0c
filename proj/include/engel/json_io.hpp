#pragma once

#include "engel/curve.hpp"
#include "engel/development.hpp"
#include "engel/fields.hpp"
#include "engel/prolong.hpp"
#include "engel/report.hpp"
#include "engel/shell.hpp"

#include <json.hpp>

#include <functional>
#include <string>

namespace engel {

/// Ordered JSON keeps key insertion order, so identical inputs serialize to
/// byte-identical reports.
using Json = nlohmann::ordered_json;

/// Thrown when an input document does not match the expected shape. The CLI
/// maps it to exit code 2.
class SchemaError : public Error {
public:
    using Error::Error;
};

Json tolerances_to_json(const Tolerances& tol);
/// Applies overrides from a {key: value} object on top of `base`.
Tolerances tolerances_from_json(const Json& j, Tolerances base = Tolerances());

Json chart_to_json(const ChartDomain& chart);
ChartDomain chart_from_json(const Json& j);

Json field_to_json(const VectorFieldDef& f);
VectorFieldDef field_from_json(const Json& j);

Json curve_to_json(const SphereCurve& c);
SphereCurve curve_from_json(const Json& j, const Tolerances& tol = Tolerances());

Json family_to_json(const CurveFamily& F);
CurveFamily family_from_json(const Json& j, const Tolerances& tol = Tolerances());

/// Flag entries may be inline field objects or names into an optional
/// sibling {"fields": {name: field}} dictionary passed as `named`.
Json flag_to_json(const DistributionFlag& flag);
DistributionFlag flag_from_json(const Json& j, const Json& named = Json::object());

Json shell_to_json(const Shell& sh);
Shell shell_from_json(const Json& j, const Tolerances& tol = Tolerances());

Json report_to_json(const CheckReport& rep);
Json shell_report_to_json(const ShellReport& rep);
Json nconvex_report_to_json(const NConvexReport& rep);
Json development_report_to_json(const DevelopmentReport& rep);
Json certificate_to_json(const LoosenessCertificate& cert);
Json return_map_to_json(const ReturnMapReport& rep);

/// Columns t, k_g.
std::string curvature_profile_csv(const SphereCurve& c, const Tolerances& tol = Tolerances());
/// Columns a, b, rho of the detected wiggles.
std::string wiggle_table_csv(const SphereCurve& c, const Tolerances& tol = Tolerances());
/// Columns s, wiggle_count, min_curvature sampled along a homotopy.
std::string homotopy_trace_csv(const std::function<SphereCurve(double)>& at, double s_lo,
                               double s_hi, int steps, const Tolerances& tol = Tolerances());
/// Columns t, g1, g2, g3, k_g of a development curve.
std::string development_trace_csv(const DevelopmentCurve& dev,
                                  const Tolerances& tol = Tolerances());
/// Columns p1, p2, p3, count: per-node wiggle counts of a curve-backed shell.
std::string wiggle_heatmap_csv(const Shell& sh, const NConvexReport& rep);

} // namespace engel
