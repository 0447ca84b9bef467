#pragma once

// Soft unilateral contact between the beak tip and a horizontal plate.
//
// The constraint is a virtual spring-damper whose strength d(r) is a
// sigmoid of the penetration depth r. The plate damping b is the hidden
// class label the readout has to recover.

#include <cstddef>
#include <vector>

namespace peck {

struct PlateSpec {
    int label = 0;
    double stiffness = 2000.0;   // k [N/m]
    double damping = 10.0;       // b [N s/m]
    double surface_height = 0.0; // [m], world frame

    void validate() const;
};

struct ContactParams {
    double d_min = 0.1;
    double d_max = 0.95;
    double width = 0.01; // penetration at which d saturates [m]
    double power = 2.0;
    double midpoint = 0.5;
    double viscous_friction = 1.0; // tangential mu_v [N s/m]

    void validate() const;
};

/// Penetration and normal velocity of the tip relative to a plate.
struct ContactKinematics {
    double depth = 0.0;             // r >= 0
    double normal_velocity = 0.0;   // v, positive = separating
    double tangential_velocity = 0.0;
};

struct ContactResult {
    double depth = 0.0;
    double normal_velocity = 0.0;
    double tangential = 0.0; // [N]
    double vertical = 0.0;   // [N], never negative
};

/// Sigmoid impedance d(r) in [d_min, d_max], non-decreasing in r.
double impedance(const ContactParams& params, double r);

/// Penalty realisation of a1 + d (b v + k r) = (1 - d) a0 at force level:
/// f_n = max(0, d(r) (k r - b v)), tangential = -mu_v * vt while touching.
ContactResult contact_force(const PlateSpec& plate, const ContactParams& params,
                            double r, double v, double vt = 0.0);

/// Depth and velocities of a tip at (x, y) moving with (vx, vy).
ContactKinematics detect(double tip_y, double tip_vx, double tip_vy, const PlateSpec& plate);

/// Plates sharing one stiffness with log-spaced damping over [b_lo, b_hi].
std::vector<PlateSpec> log_spaced_plates(std::size_t count, double b_lo, double b_hi,
                                         double stiffness, double surface_height);

} // namespace peck
