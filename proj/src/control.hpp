#pragma once

// Internal frame-space control engine for curve surgeries.
//
// A spherical curve is reconstructed from its moving frame F = [g, T, N]
// (det +1) driven by dF/dl = F * A(kf) in frame-length parametrization,
// where kf is the frame-signed geodesic curvature and l the frame length
// (arc length times sqrt(1 + kf^2)). The generator has unit rotation rate,
// so a block of constant curvature and frame length 2*pi closes exactly:
// loops are transparent to endpoint-frame bookkeeping. Deformations are
// expressed as multiplicative bumps on the curvature profile and closed up
// against a target end frame with a damped least-squares Newton iteration.

#include "engel/geom.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace engel::control {

using Mat3 = Eigen::Matrix3d;

// Rotation by angle h about the (unit) generator axis for curvature kf,
// acting on the right of the frame.
Mat3 frame_step(double kf, double h);

// Axis-angle logarithm, robust near 0 and pi.
Vec3 so3_log(const Mat3& R);

// Monotone C1 map through strictly increasing knots (Fritsch-Carlson
// slopes, optionally pinned at the ends). Used to assign parameters to
// frame-length positions without speed jumps at seams.
class MonotoneMap {
public:
    MonotoneMap() = default;
    MonotoneMap(std::vector<double> x, std::vector<double> y,
                std::optional<double> slope0 = std::nullopt,
                std::optional<double> slope1 = std::nullopt);
    double operator()(double x) const;
    double deriv(double x) const;
    double deriv2(double x) const;

private:
    std::vector<double> x_, y_, m_;
};

// Raised-cosine curvature bump on the frame-length axis.
struct Bump {
    double lc = 0.0;
    double w = 1.0;
    double eval(double l) const;
};

// One block of the curvature profile. A loop block has exact constant
// curvature (integrated in closed form); an ambient block carries a sampled
// baseline profile, participates in the convexification blend, and hosts
// the Newton bumps.
struct Sec {
    bool is_loop = false;
    double len = 0.0;
    double kconst = 0.0;               // loop curvature (signed k_g scale)
    std::vector<double> lx;            // ambient: local knots in [0, len]
    std::vector<double> kb;            // ambient: baseline curvature at knots
    bool blend_exempt = false;
    double kbias = 0.0;                // positivity anchor for the bump action
    double mat0 = 0.0;                 // material coordinate of the block start;
                                       // bumps ride the material so their action
                                       // follows the host arc as blocks move
};

struct Assembly {
    std::vector<Sec> secs;
    Mat3 F0 = Mat3::Identity();
    Mat3 F1 = Mat3::Identity();
    int sigma = 1;                      // orientation sign of the host curve
    std::vector<Bump> bumps;            // act on ambient sections only
    double blend = 0.0;                 // 0..1 toward max(kb, kfloor)
    double kfloor = 3e-3;
    double hstep = 0.01;                // integration step (frame length)
    double sample_dl = 0.02;            // output sample spacing (frame length)

    double total_len() const;
};

// Fills the per-section positivity anchors: on sections whose baseline stays
// above the floor, bumps cannot push the curvature below half the floor.
void finalize_assembly(Assembly& a);

struct FrameSample {
    double l = 0.0;
    Vec3 g = Vec3::Zero();
    Vec3 tangent = Vec3::Zero();
    double k = 0.0;                     // signed k_g at the sample
};

struct Integrated {
    std::vector<FrameSample> samples;   // includes both endpoints
    Mat3 Fend = Mat3::Identity();
};

// Effective signed curvature at global frame length l for bump weights xi.
double effective_curvature(const Assembly& a, const Eigen::VectorXd& xi, double l);

Integrated integrate(const Assembly& a, const Eigen::VectorXd& xi);

// Endpoint-frame defect log(F1^T Fend) as a 3-vector.
Vec3 closure_residual(const Assembly& a, const Eigen::VectorXd& xi);

// Damped least-squares Newton on the bump weights; returns the closed-up
// weights or nullopt if the iteration stalls.
std::optional<Eigen::VectorXd> newton_close(const Assembly& a, Eigen::VectorXd xi,
                                            double resid_tol = 1e-11, int max_iter = 40);

// Frame [g, T, N] at sample i of a discretely sampled curve.
Mat3 sample_frame(const Vec3& g, const Vec3& deriv);

} // namespace engel::control
