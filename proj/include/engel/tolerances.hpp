#pragma once

#include <map>
#include <string>

namespace engel {

/// Every numeric threshold used by the checks, with the shipped defaults.
/// Reports embed the full effective set so runs are reproducible.
struct Tolerances {
    double k_min = 1e-3;       ///< convexity threshold on geodesic curvature
    double v_min = 1e-4;       ///< immersion threshold on |g'|
    double eps_pos = 1e-3;     ///< wiggle position recurrence
    double eps_ang = 1e-2;     ///< wiggle direction recurrence (radians)
    double delta_min = 1e-3;   ///< embeddedness margin for flow segments
    double sigma_min = 1e-6;   ///< rank margin on singular values (normalized frames)
    double contact_min = 1e-6; ///< |det| threshold for contact_check (raw determinant)
    double theta_min = 1e-2;   ///< transversality angle for flags (radians)
    double nbhd_radius = 0.1;  ///< slice neighborhood radius for condition B
    double collar = 0.5;       ///< boundary collar width as a fraction of shell epsilon
    double grid_lipschitz = 10.0; ///< witness continuity bound per unit of k-grid
    double max_spacing = 0.39269908169872414; ///< pi/8, curve sample spacing bound
    double unit_norm = 1e-9;   ///< |g| == 1 slack on sphere samples
    double ode_tol = 1e-8;     ///< flow local error per unit time (step halving)

    /// Apply a KEY=VAL override; returns false for an unknown key.
    bool set(const std::string& key, double value);

    /// Full effective set, for report serialization.
    std::map<std::string, double> as_map() const;
};

} // namespace engel
