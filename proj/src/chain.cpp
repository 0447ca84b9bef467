#include "peck/chain.hpp"

#include "peck/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace peck {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

void require_size(const Eigen::VectorXd& v, std::size_t n, const char* what)
{
    if (static_cast<std::size_t>(v.size()) != n) {
        std::ostringstream os;
        os << what << " has " << v.size() << " entries, chain has " << n << " joints";
        throw std::invalid_argument(os.str());
    }
}

} // namespace

void JointParams::validate(std::size_t index) const
{
    const auto where = "joint " + std::to_string(index) + ": ";
    if (!(stiffness >= 0.0))
        throw ConfigError(where + "stiffness must be >= 0");
    if (!(damping >= 0.0))
        throw ConfigError(where + "damping must be >= 0");
    if (!(limit_lo < limit_hi))
        throw ConfigError(where + "limit_lo must be < limit_hi");
    if (!(rest_angle >= limit_lo && rest_angle <= limit_hi))
        throw ConfigError(where + "rest angle outside the joint range");
}

void ChainConfig::validate() const
{
    if (n_joints < 1)
        throw ConfigError("chain needs at least one joint");
    if (link_length.size() != n_joints || link_mass.size() != n_joints
        || joints.size() != n_joints || regions.size() != n_joints)
        throw ConfigError("per-joint arrays must have n_joints entries");
    for (std::size_t j = 0; j < n_joints; ++j) {
        if (!(link_length[j] > 0.0) || !(link_mass[j] > 0.0))
            throw ConfigError("link " + std::to_string(j) + ": length and mass must be > 0");
        joints[j].validate(j);
    }
    // Regions run head to base: cranial, then middle, then caudal.
    for (std::size_t j = 1; j < n_joints; ++j)
        if (static_cast<int>(regions[j]) < static_cast<int>(regions[j - 1]))
            throw ConfigError("region labels must be contiguous from head to base");
    if (tendon.enabled) {
        if (tendon.attachment_joint >= n_joints)
            throw ConfigError("tendon attachment joint outside the chain");
        if (tendon.moment_arms.size() != n_joints)
            throw ConfigError("tendon moment_arms must have n_joints entries");
        for (std::size_t j = tendon.attachment_joint; j < n_joints; ++j)
            if (!(tendon.moment_arms[j] > 0.0))
                throw ConfigError("tendon moment arm must be > 0 on routed joint "
                                  + std::to_string(j));
        if (!(tendon.series_stiffness > 0.0))
            throw ConfigError("tendon series stiffness must be > 0");
        if (!(tendon.pulley_radius > 0.0))
            throw ConfigError("tendon pulley radius must be > 0");
    }
    if (!(ligament.base_stiffness >= 0.0))
        throw ConfigError("ligament base stiffness must be >= 0");
    if (!(ligament.geometric_ratio >= 1.0))
        throw ConfigError("ligament geometric ratio must be >= 1");
    if (!(limits.stiffness >= 0.0 && limits.damping >= 0.0))
        throw ConfigError("joint limit gains must be >= 0");
    limits.impedance.validate();
}

Eigen::VectorXd ChainConfig::rest_posture() const
{
    Eigen::VectorXd q(static_cast<Eigen::Index>(n_joints));
    for (std::size_t j = 0; j < n_joints; ++j)
        q[static_cast<Eigen::Index>(j)] = joints[j].rest_angle;
    return q;
}

void ChainConfig::set_uniform_viscoelasticity(double stiffness, double damping)
{
    for (auto& jp : joints) {
        jp.stiffness = stiffness;
        jp.damping = damping;
    }
}

std::vector<Region> default_regions(std::size_t n)
{
    // 17-joint layout: C2..C5 cranial (4), C6..C13 middle (8), C14..C18 caudal (5).
    const auto scaled = [n](double k) {
        return static_cast<std::size_t>(std::lround(k * static_cast<double>(n) / 17.0));
    };
    std::size_t cranial = std::max<std::size_t>(1, scaled(4.0));
    std::size_t middle_end = std::max(cranial, scaled(12.0));
    if (n >= 3) {
        cranial = std::min(cranial, n - 2);
        middle_end = std::clamp(middle_end, cranial + 1, n - 1);
    }
    std::vector<Region> regions(n, Region::caudal);
    for (std::size_t j = 0; j < n; ++j) {
        if (j < cranial)
            regions[j] = Region::cranial;
        else if (j < middle_end)
            regions[j] = Region::middle;
    }
    return regions;
}

ChainConfig make_chain(std::size_t n, double stiffness, double damping)
{
    if (n < 1)
        throw ConfigError("chain needs at least one joint");
    ChainConfig c;
    c.n_joints = n;
    c.link_length.assign(n, 0.04);
    c.link_mass.assign(n, 0.03);
    c.joints.resize(n);
    c.regions = default_regions(n);

    // S-curve: the base joint lifts the neck, head-side joints flex it down,
    // more strongly toward the head.
    const double base_lift = 0.6;
    const double total_flex = 1.2;
    const double weight_sum = static_cast<double>((n - 1) * n) / 2.0;
    for (std::size_t j = 0; j < n; ++j) {
        auto& jp = c.joints[j];
        jp.stiffness = stiffness;
        jp.damping = damping;
        if (n == 1)
            jp.rest_angle = 0.0;
        else if (j + 1 == n)
            jp.rest_angle = base_lift;
        else
            jp.rest_angle = -total_flex * static_cast<double>(n - 1 - j) / weight_sum;
        jp.limit_lo = jp.rest_angle - 0.6;
        jp.limit_hi = jp.rest_angle + 0.6;
    }

    std::size_t attach = 0;
    while (attach < n && c.regions[attach] == Region::cranial)
        ++attach;
    c.tendon.attachment_joint = std::min(attach, n - 1);
    c.tendon.moment_arms.assign(n, 0.01);
    zero_tendon_at_rest(c);
    return c;
}

ChainConfig make_desk_chain(double stiffness, double damping)
{
    ChainConfig c = make_chain(5, stiffness, damping);
    c.link_length.assign(5, 0.3);
    c.link_mass.assign(5, 10.0);
    c.tendon.series_stiffness = 1e6;
    c.ligament.enabled = true;
    c.ligament.preload = LigamentPreload::static_balance;
    return c;
}

void zero_tendon_at_rest(ChainConfig& config)
{
    double rest_length = 0.0;
    for (std::size_t j = config.tendon.attachment_joint; j < config.n_joints; ++j)
        rest_length += config.tendon.moment_arms.at(j) * config.joints.at(j).rest_angle;
    config.tendon.slack_length = -rest_length;
}

Kinematics forward_kinematics(const ChainConfig& config, const Eigen::VectorXd& q)
{
    const std::size_t n = config.n_joints;
    require_size(q, n, "q");
    Kinematics kin;
    kin.joints.resize(n);
    kin.link_angle.resize(n);
    Vec2 p{0.0, 0.0};
    double phi = config.base_angle;
    for (std::size_t k = n; k-- > 0;) {
        phi += q[static_cast<Eigen::Index>(k)];
        kin.joints[k] = p;
        kin.link_angle[k] = phi;
        p.x += config.link_length[k] * std::cos(phi);
        p.y += config.link_length[k] * std::sin(phi);
    }
    kin.tip = p;
    return kin;
}

double passive_joint_torque(const JointParams& params, double q, double qdot)
{
    return -params.stiffness * (q - params.rest_angle) - params.damping * qdot;
}

double joint_limit_torque(const JointParams& params, const JointLimitLaw& law, double q,
                          double qdot)
{
    if (q > params.limit_hi) {
        const double r = q - params.limit_hi;
        const double d = impedance(law.impedance, r);
        // Separating velocity is -qdot above the upper limit.
        return -std::max(0.0, d * (law.stiffness * r + law.damping * qdot));
    }
    if (q < params.limit_lo) {
        const double r = params.limit_lo - q;
        const double d = impedance(law.impedance, r);
        return std::max(0.0, d * (law.stiffness * r - law.damping * qdot));
    }
    return 0.0;
}

TendonResult tendon_force(const ChainConfig& config, const ChainState& state, double u)
{
    const std::size_t n = config.n_joints;
    require_size(state.q, n, "q");
    TendonResult out;
    out.torque = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (!config.tendon.enabled)
        return out;
    const auto& tendon = config.tendon;
    double length = tendon.slack_length;
    for (std::size_t j = tendon.attachment_joint; j < n; ++j)
        length += tendon.moment_arms[j] * state.q[static_cast<Eigen::Index>(j)];
    out.stretch = length - u;
    out.tension = tendon.series_stiffness * std::max(0.0, out.stretch);
    for (std::size_t j = tendon.attachment_joint; j < n; ++j)
        out.torque[static_cast<Eigen::Index>(j)] = -out.tension * tendon.moment_arms[j];
    return out;
}

Eigen::VectorXd ligament_stiffness(const ChainConfig& config)
{
    const auto n = static_cast<Eigen::Index>(config.n_joints);
    Eigen::VectorXd k = Eigen::VectorXd::Zero(n);
    if (!config.ligament.enabled)
        return k;
    double scale = config.ligament.base_stiffness;
    for (Eigen::Index j = 0; j < n; ++j) {
        k[j] = scale;
        scale *= config.ligament.geometric_ratio;
    }
    return k;
}

Eigen::VectorXd ligament_torque(const ChainConfig& config, const Eigen::VectorXd& q)
{
    require_size(q, config.n_joints, "q");
    if (!config.ligament.enabled)
        return Eigen::VectorXd::Zero(q.size());
    const Eigen::VectorXd rest = config.rest_posture();
    Eigen::VectorXd tau = -ligament_stiffness(config).cwiseProduct(q - rest);
    if (config.ligament.preload == LigamentPreload::static_balance)
        tau += gravity_holding_torque(config, rest);
    return tau;
}

Eigen::MatrixXd mass_matrix(const ChainConfig& config, const Eigen::VectorXd& q)
{
    const std::size_t n = config.n_joints;
    const Kinematics kin = forward_kinematics(config, q);
    std::vector<Vec2> com(n);
    std::vector<double> inertia(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double half = 0.5 * config.link_length[j];
        com[j] = {kin.joints[j].x + half * std::cos(kin.link_angle[j]),
                  kin.joints[j].y + half * std::sin(kin.link_angle[j])};
        inertia[j] = config.link_mass[j] * config.link_length[j] * config.link_length[j] / 12.0;
    }

    Eigen::MatrixXd M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // Composite of links 0..a (everything distal to joint a), moments taken
    // about joint a. Column block for a fills M(a, l) and M(l, a) for l >= a.
    for (std::size_t a = 0; a < n; ++a) {
        const Vec2 pa = kin.joints[a];
        double mass = 0.0, second = 0.0, rot = 0.0;
        Vec2 first{0.0, 0.0};
        for (std::size_t j = 0; j <= a; ++j) {
            const Vec2 r{com[j].x - pa.x, com[j].y - pa.y};
            mass += config.link_mass[j];
            first.x += config.link_mass[j] * r.x;
            first.y += config.link_mass[j] * r.y;
            second += config.link_mass[j] * (r.x * r.x + r.y * r.y);
            rot += inertia[j];
        }
        for (std::size_t l = a; l < n; ++l) {
            // sum_j m (c - p_a)(c - p_a + p_a - p_l), with d = p_a - p_l
            const Vec2 d{pa.x - kin.joints[l].x, pa.y - kin.joints[l].y};
            const double value = second + first.x * d.x + first.y * d.y + rot;
            M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(l)) = value;
            M(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(a)) = value;
        }
    }
    return M;
}

Eigen::VectorXd inverse_dynamics(const ChainConfig& config, const Eigen::VectorXd& q,
                                 const Eigen::VectorXd& qdot, const Eigen::VectorXd& qddot,
                                 bool with_gravity)
{
    const std::size_t n = config.n_joints;
    require_size(q, n, "q");
    require_size(qdot, n, "qdot");
    require_size(qddot, n, "qddot");

    std::vector<Vec2> joint_pos(n), com_acc(n), com_rel(n), next_rel(n);
    std::vector<double> alpha(n);

    // Outward pass from the base; gravity enters as an upward base acceleration.
    Vec2 p{0.0, 0.0};
    Vec2 acc{0.0, with_gravity ? config.gravity : 0.0};
    double phi = config.base_angle, omega = 0.0, alph = 0.0;
    for (std::size_t k = n; k-- > 0;) {
        const auto i = static_cast<Eigen::Index>(k);
        phi += q[i];
        omega += qdot[i];
        alph += qddot[i];
        const double c = std::cos(phi), s = std::sin(phi);
        const double len = config.link_length[k];
        const double lc = 0.5 * len;
        joint_pos[k] = p;
        alpha[k] = alph;
        com_rel[k] = {lc * c, lc * s};
        next_rel[k] = {len * c, len * s};
        const double w2 = omega * omega;
        com_acc[k] = {acc.x - alph * lc * s - w2 * lc * c, acc.y + alph * lc * c - w2 * lc * s};
        acc = {acc.x - alph * len * s - w2 * len * c, acc.y + alph * len * c - w2 * len * s};
        p = {p.x + next_rel[k].x, p.y + next_rel[k].y};
    }

    // Inward pass from the head.
    Eigen::VectorXd tau(static_cast<Eigen::Index>(n));
    Vec2 child_force{0.0, 0.0};
    double child_torque = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double m = config.link_mass[k];
        const double inertia = m * config.link_length[k] * config.link_length[k] / 12.0;
        const Vec2 ma{m * com_acc[k].x, m * com_acc[k].y};
        const double torque = inertia * alpha[k] + cross(com_rel[k], ma) + child_torque
                              + cross(next_rel[k], child_force);
        child_force = {ma.x + child_force.x, ma.y + child_force.y};
        child_torque = torque;
        tau[static_cast<Eigen::Index>(k)] = torque;
    }
    return tau;
}

Eigen::VectorXd gravity_holding_torque(const ChainConfig& config, const Eigen::VectorXd& q)
{
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(q.size());
    return inverse_dynamics(config, q, zero, zero, true);
}

Eigen::Matrix<double, 2, Eigen::Dynamic> tip_jacobian(const ChainConfig& config,
                                                      const Kinematics& kin)
{
    const auto n = static_cast<Eigen::Index>(config.n_joints);
    Eigen::Matrix<double, 2, Eigen::Dynamic> J(2, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Vec2& pk = kin.joints[static_cast<std::size_t>(k)];
        J(0, k) = -(kin.tip.y - pk.y);
        J(1, k) = kin.tip.x - pk.x;
    }
    return J;
}

double mechanical_energy(const ChainConfig& config, const ChainState& state, double u)
{
    const std::size_t n = config.n_joints;
    const Eigen::MatrixXd M = mass_matrix(config, state.q);
    double energy = 0.5 * state.qdot.dot(M * state.qdot);

    const Kinematics kin = forward_kinematics(config, state.q);
    for (std::size_t j = 0; j < n; ++j) {
        const double com_y = kin.joints[j].y + 0.5 * config.link_length[j] * std::sin(kin.link_angle[j]);
        energy += config.link_mass[j] * config.gravity * com_y;
        const double dq = state.q[static_cast<Eigen::Index>(j)] - config.joints[j].rest_angle;
        energy += 0.5 * config.joints[j].stiffness * dq * dq;
    }
    if (config.ligament.enabled) {
        const Eigen::VectorXd rest = config.rest_posture();
        const Eigen::VectorXd dq = state.q - rest;
        energy += 0.5 * dq.dot(ligament_stiffness(config).cwiseProduct(dq));
        if (config.ligament.preload == LigamentPreload::static_balance)
            energy -= gravity_holding_torque(config, rest).dot(dq);
    }
    const TendonResult tr = tendon_force(config, state, u);
    if (tr.stretch > 0.0)
        energy += 0.5 * config.tendon.series_stiffness * tr.stretch * tr.stretch;
    return energy;
}

ContactResult sense_contact(const ChainConfig& config, const ChainState& state,
                            const Environment& env)
{
    if (!env.plate)
        return {};
    const Kinematics kin = forward_kinematics(config, state.q);
    const auto J = tip_jacobian(config, kin);
    const Eigen::Vector2d v = J * state.qdot;
    const ContactKinematics ck = detect(kin.tip.y, v.x(), v.y(), *env.plate);
    return contact_force(*env.plate, env.contact, ck.depth, ck.normal_velocity,
                         ck.tangential_velocity);
}

StepResult step(const ChainConfig& config, const ChainState& state, const InputFn& u_fn,
                const Environment& env, double dt)
{
    if (!(dt > 0.0))
        throw std::invalid_argument("step: dt must be > 0");
    const std::size_t n = config.n_joints;
    require_size(state.q, n, "q");
    require_size(state.qdot, n, "qdot");
    const auto N = static_cast<Eigen::Index>(n);

    const Kinematics kin = forward_kinematics(config, state.q);
    Eigen::VectorXd tau = Eigen::VectorXd::Zero(N);
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);

    for (std::size_t j = 0; j < n; ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        const JointParams& jp = config.joints[j];
        const double qj = state.q[i], wj = state.qdot[i];
        tau[i] += passive_joint_torque(jp, qj, wj);
        K(i, i) += jp.stiffness;
        B(i, i) += jp.damping;
        const double lim = joint_limit_torque(jp, config.limits, qj, wj);
        if (lim != 0.0) {
            tau[i] += lim;
            const double r = qj > jp.limit_hi ? qj - jp.limit_hi : jp.limit_lo - qj;
            const double d = impedance(config.limits.impedance, r);
            K(i, i) += d * config.limits.stiffness;
            B(i, i) += d * config.limits.damping;
        }
    }

    const double u = u_fn ? u_fn(state.t) : std::numeric_limits<double>::infinity();
    StepResult out;
    if (config.tendon.enabled && std::isfinite(u)) {
        const TendonResult tr = tendon_force(config, state, u);
        tau += tr.torque;
        out.tension = tr.tension;
        if (tr.tension > 0.0) {
            Eigen::VectorXd arm = Eigen::VectorXd::Zero(N);
            for (std::size_t j = config.tendon.attachment_joint; j < n; ++j)
                arm[static_cast<Eigen::Index>(j)] = config.tendon.moment_arms[j];
            K.noalias() += config.tendon.series_stiffness * arm * arm.transpose();
        }
    }

    if (config.ligament.enabled) {
        tau += ligament_torque(config, state.q);
        K.diagonal() += ligament_stiffness(config);
    }

    if (env.plate) {
        const auto J = tip_jacobian(config, kin);
        const Eigen::Vector2d v = J * state.qdot;
        const ContactKinematics ck = detect(kin.tip.y, v.x(), v.y(), *env.plate);
        out.contact = contact_force(*env.plate, env.contact, ck.depth, ck.normal_velocity,
                                    ck.tangential_velocity);
        if (ck.depth > 0.0) {
            tau += J.transpose() * Eigen::Vector2d(out.contact.tangential, out.contact.vertical);
            const Eigen::RowVectorXd jx = J.row(0), jy = J.row(1);
            B.noalias() += env.contact.viscous_friction * jx.transpose() * jx;
            if (out.contact.vertical > 0.0) {
                const double d = impedance(env.contact, ck.depth);
                K.noalias() += d * env.plate->stiffness * jy.transpose() * jy;
                B.noalias() += d * env.plate->damping * jy.transpose() * jy;
            }
        }
    }

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(N);
    const Eigen::VectorXd bias = inverse_dynamics(config, state.q, state.qdot, zero, true);
    Eigen::MatrixXd A = mass_matrix(config, state.q);
    A.noalias() += dt * B + (dt * dt) * K;
    const Eigen::VectorXd rhs = tau - bias - dt * (K * state.qdot);
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    const Eigen::VectorXd qddot = llt.info() == Eigen::Success ? Eigen::VectorXd(llt.solve(rhs))
                                                               : Eigen::VectorXd(A.ldlt().solve(rhs));

    out.state.qdot = state.qdot + dt * qddot;
    out.state.q = state.q + dt * out.state.qdot;
    out.state.t = state.t + dt;

    for (Eigen::Index i = 0; i < N; ++i) {
        if (!std::isfinite(out.state.q[i]) || !std::isfinite(out.state.qdot[i])) {
            std::ostringstream os;
            os << "non-finite chain state at t=" << state.t << " s, joint " << i;
            throw SimulationError(os.str(), state.t, static_cast<std::size_t>(i));
        }
    }
    return out;
}

} // namespace peck
