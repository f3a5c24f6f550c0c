#pragma once

#include "engel/chart.hpp"
#include "engel/tolerances.hpp"

#include <string>
#include <vector>

namespace engel {

/// Outcome of a grid check: verdict, the decisive margin, where it was
/// attained, and a bounded list of failing points.
struct CheckReport {
    bool pass = false;
    double min_margin = 0.0;
    Pt worst_point = Pt::Zero();
    std::vector<std::string> failures;
    Tolerances tolerances;

    void note_failure(const Pt& p, const std::string& what) {
        if (failures.size() < 32)
            failures.push_back(what + " at (" + std::to_string(p[0]) + ", " + std::to_string(p[1]) +
                               ", " + std::to_string(p[2]) + ", " + std::to_string(p[3]) + ")");
    }
};

} // namespace engel
