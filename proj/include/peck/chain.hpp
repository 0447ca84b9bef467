#pragma once

// Planar serial chain with passive viscoelastic joints, a unilateral tendon,
// optional gravity-compensating ligaments and soft joint limits.
//
// Joint indexing runs from the head: joint 0 carries the most distal link
// (the one ending at the beak tip), joint n-1 sits on the fixed base at the
// origin. Angles are relative, counter-clockwise positive; with every angle
// zero the chain lies along +x. Gravity acts along -y.

#include "peck/contact.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

namespace peck {

enum class Region { cranial, middle, caudal };

struct JointParams {
    double stiffness = 1.0;   // S [N m/rad]
    double damping = 0.1;     // D [N m s/rad]
    double rest_angle = 0.0;  // [rad]
    double limit_lo = -0.6;   // [rad]
    double limit_hi = 0.6;    // [rad]

    void validate(std::size_t index) const;
};

/// Single tendon from the base motor to `attachment_joint`. Joints with
/// index >= attachment_joint are routed; head-side joints are passive.
struct TendonConfig {
    bool enabled = true;
    std::size_t attachment_joint = 4;
    std::vector<double> moment_arms; // per joint [m]; only routed entries are used
    double series_stiffness = 1e4;   // k_t [N/m]
    double pulley_radius = 0.01;     // R [m]
    double slack_length = 0.0;       // l0 in l(q) = l0 + sum r_j q_j [m]

    bool routed(std::size_t joint) const { return enabled && joint >= attachment_joint; }
};

enum class LigamentPreload { none, static_balance };

struct LigamentConfig {
    bool enabled = false;
    double base_stiffness = 0.0;  // stiffness of the head joint [N m/rad]
    double geometric_ratio = 1.0; // growth per joint toward the base
    LigamentPreload preload = LigamentPreload::none;
};

/// Penalty law applied to angular violation of a joint range.
struct JointLimitLaw {
    double stiffness = 50.0; // [N m/rad]
    double damping = 0.5;    // [N m s/rad]
    ContactParams impedance{0.1, 0.95, 0.05, 2.0, 0.5, 0.0};
};

struct ChainConfig {
    std::size_t n_joints = 17;
    std::vector<double> link_length; // link j is distal to joint j [m]
    std::vector<double> link_mass;   // [kg]
    double gravity = 9.81;           // [m/s^2]
    double base_angle = 0.0;         // orientation of the base frame [rad]
    std::vector<JointParams> joints;
    TendonConfig tendon;
    LigamentConfig ligament;
    JointLimitLaw limits;
    std::vector<Region> regions;

    void validate() const;
    /// Joint angles of the nominal posture.
    Eigen::VectorXd rest_posture() const;
    void set_uniform_viscoelasticity(double stiffness, double damping);
};

struct ChainState {
    Eigen::VectorXd q;
    Eigen::VectorXd qdot;
    double t = 0.0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

struct Kinematics {
    std::vector<Vec2> joints; // position of joint j, head-indexed
    std::vector<double> link_angle; // absolute angle of link j
    Vec2 tip;
};

/// Contact surroundings of a simulation; no plate means nothing to hit.
struct Environment {
    std::optional<PlateSpec> plate;
    ContactParams contact;
};

using InputFn = std::function<double(double)>;

struct TendonResult {
    double tension = 0.0;
    double stretch = 0.0;
    Eigen::VectorXd torque;
};

struct StepResult {
    ChainState state;
    ContactResult contact; // evaluated at the start-of-step state
    double tension = 0.0;
};

/// Default desk-scale chain: `n` links of 0.04 m / 0.03 kg, region split
/// scaled from the 17-joint layout, tendon on the first middle joint and a
/// gentle S-curve rest posture.
ChainConfig make_chain(std::size_t n_joints = 17, double stiffness = 1.0, double damping = 0.1);

/// Heavy 5-link bench chain: 0.3 m / 10 kg links, a stiff tendon
/// (k_t = 1e6 N/m) and gravity balanced at rest by the ligament preload.
/// With this inertia the damping range 0.02..1.5 N m s/rad spans both
/// under- and over-damped joints.
ChainConfig make_desk_chain(double stiffness = 17.5, double damping = 1.5);

/// Recomputes the tendon slack length so that l(rest) = 0.
void zero_tendon_at_rest(ChainConfig& config);

/// Region labels for `n` joints scaled from beak-C5 / C6-C13 / C14-C18.
std::vector<Region> default_regions(std::size_t n_joints);

Kinematics forward_kinematics(const ChainConfig& config, const Eigen::VectorXd& q);

/// -S (q - rest) - D qdot
double passive_joint_torque(const JointParams& params, double q, double qdot);

/// Zero inside [limit_lo, limit_hi]; restoring penalty outside.
double joint_limit_torque(const JointParams& params, const JointLimitLaw& law,
                          double q, double qdot);

TendonResult tendon_force(const ChainConfig& config, const ChainState& state, double u);

/// Per-joint ligament stiffness base * ratio^j.
Eigen::VectorXd ligament_stiffness(const ChainConfig& config);
Eigen::VectorXd ligament_torque(const ChainConfig& config, const Eigen::VectorXd& q);

/// Joint-space inertia by composite-rigid-body assembly.
Eigen::MatrixXd mass_matrix(const ChainConfig& config, const Eigen::VectorXd& q);

/// Inverse dynamics (recursive Newton-Euler). `with_gravity` toggles the
/// gravity contribution; returns the joint torques needed for `qddot`.
Eigen::VectorXd inverse_dynamics(const ChainConfig& config, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot, const Eigen::VectorXd& qddot,
                                 bool with_gravity = true);

/// Torque holding the chain static against gravity at `q`.
Eigen::VectorXd gravity_holding_torque(const ChainConfig& config, const Eigen::VectorXd& q);

/// d(tip)/dq, rows x and y.
Eigen::Matrix<double, 2, Eigen::Dynamic> tip_jacobian(const ChainConfig& config,
                                                      const Kinematics& kin);

/// Kinetic + gravitational + joint-spring + ligament + tendon-spring energy
/// for a constant endpoint position `u`. Joint-limit penalties are excluded.
double mechanical_energy(const ChainConfig& config, const ChainState& state, double u);

/// One semi-implicit Euler step. Velocity-proportional forces and the
/// linear spring terms are taken implicitly in the velocity update; q is
/// then advanced with the new velocity.
StepResult step(const ChainConfig& config, const ChainState& state, const InputFn& u_fn,
                const Environment& env, double dt);

/// Contact force for the tip of `state` without stepping.
ContactResult sense_contact(const ChainConfig& config, const ChainState& state,
                            const Environment& env);

} // namespace peck
