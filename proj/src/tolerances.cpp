#include "engel/tolerances.hpp"

namespace engel {

namespace {

struct Entry {
    const char* key;
    double Tolerances::* member;
};

constexpr Entry kEntries[] = {
    {"k_min", &Tolerances::k_min},
    {"v_min", &Tolerances::v_min},
    {"eps_pos", &Tolerances::eps_pos},
    {"eps_ang", &Tolerances::eps_ang},
    {"delta_min", &Tolerances::delta_min},
    {"sigma_min", &Tolerances::sigma_min},
    {"contact_min", &Tolerances::contact_min},
    {"theta_min", &Tolerances::theta_min},
    {"nbhd_radius", &Tolerances::nbhd_radius},
    {"collar", &Tolerances::collar},
    {"grid_lipschitz", &Tolerances::grid_lipschitz},
    {"max_spacing", &Tolerances::max_spacing},
    {"unit_norm", &Tolerances::unit_norm},
    {"ode_tol", &Tolerances::ode_tol},
};

} // namespace

bool Tolerances::set(const std::string& key, double value) {
    for (const Entry& e : kEntries) {
        if (key == e.key) {
            this->*(e.member) = value;
            return true;
        }
    }
    return false;
}

std::map<std::string, double> Tolerances::as_map() const {
    std::map<std::string, double> m;
    for (const Entry& e : kEntries) m[e.key] = this->*(e.member);
    return m;
}

} // namespace engel
