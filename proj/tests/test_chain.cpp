#include "peck/chain.hpp"
#include "peck/error.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace peck;

namespace {

ChainConfig bare_chain(std::size_t n)
{
    ChainConfig c = make_chain(n, 0.0, 0.0);
    c.gravity = 0.0;
    c.tendon.enabled = false;
    for (auto& j : c.joints) {
        j.rest_angle = 0.0;
        j.limit_lo = -3.0;
        j.limit_hi = 3.0;
    }
    return c;
}

Eigen::VectorXd random_q(std::mt19937_64& rng, std::size_t n, double span = 1.0)
{
    std::uniform_real_distribution<double> u(-span, span);
    Eigen::VectorXd q(static_cast<Eigen::Index>(n));
    for (auto& v : q)
        v = u(rng);
    return q;
}

// Sequential 2x2 rotation composition from the base outward.
Vec2 naive_tip(const ChainConfig& c, const Eigen::VectorXd& q)
{
    Eigen::Matrix2d R = Eigen::Rotation2Dd(c.base_angle).toRotationMatrix();
    Eigen::Vector2d p = Eigen::Vector2d::Zero();
    for (std::size_t k = c.n_joints; k-- > 0;) {
        R = R * Eigen::Rotation2Dd(q[static_cast<Eigen::Index>(k)]).toRotationMatrix();
        p += R * Eigen::Vector2d(c.link_length[k], 0.0);
    }
    return {p.x(), p.y()};
}

// M = sum m Jc^T Jc + I Jw^T Jw from centre-of-mass Jacobians.
Eigen::MatrixXd jacobian_mass_matrix(const ChainConfig& c, const Eigen::VectorXd& q)
{
    const auto n = static_cast<Eigen::Index>(c.n_joints);
    const Kinematics kin = forward_kinematics(c, q);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        const auto L = static_cast<std::size_t>(l);
        const double h = 0.5 * c.link_length[L];
        const double cx = kin.joints[L].x + h * std::cos(kin.link_angle[L]);
        const double cy = kin.joints[L].y + h * std::sin(kin.link_angle[L]);
        Eigen::MatrixXd Jv = Eigen::MatrixXd::Zero(2, n);
        Eigen::RowVectorXd Jw = Eigen::RowVectorXd::Zero(n);
        for (Eigen::Index k = l; k < n; ++k) { // joints on the base side of link l move it
            const auto K = static_cast<std::size_t>(k);
            Jv(0, k) = -(cy - kin.joints[K].y);
            Jv(1, k) = cx - kin.joints[K].x;
            Jw[k] = 1.0;
        }
        const double m = c.link_mass[L];
        const double inertia = m * c.link_length[L] * c.link_length[L] / 12.0;
        M += m * Jv.transpose() * Jv + inertia * Jw.transpose() * Jw;
    }
    return M;
}

} // namespace

TEST_CASE("straight chain reaches the summed link length")
{
    const ChainConfig c = bare_chain(5);
    const Kinematics k = forward_kinematics(c, Eigen::VectorXd::Zero(5));
    CHECK(k.tip.x == doctest::Approx(0.2));
    CHECK(std::abs(k.tip.y) < 1e-15);
    CHECK(k.joints[4].x == 0.0);
}

TEST_CASE("quarter turn of a single link points up")
{
    const ChainConfig c = bare_chain(1);
    Eigen::VectorXd q(1);
    q << std::numbers::pi / 2;
    const Kinematics k = forward_kinematics(c, q);
    CHECK(std::abs(k.tip.x) < 1e-15);
    CHECK(k.tip.y == doctest::Approx(c.link_length[0]));
}

TEST_CASE("forward kinematics agrees with sequential rotations")
{
    std::mt19937_64 rng(7);
    for (std::size_t n = 1; n <= 8; ++n) {
        ChainConfig c = bare_chain(n);
        c.base_angle = 0.3;
        for (std::size_t j = 0; j < n; ++j)
            c.link_length[j] = 0.02 + 0.01 * static_cast<double>(j);
        for (int trial = 0; trial < 5; ++trial) {
            const auto q = random_q(rng, n, 2.0);
            const Vec2 a = forward_kinematics(c, q).tip, b = naive_tip(c, q);
            CHECK(std::abs(a.x - b.x) < 1e-12);
            CHECK(std::abs(a.y - b.y) < 1e-12);
        }
    }
}

TEST_CASE("forward kinematics rejects a wrong-sized q")
{
    CHECK_THROWS(forward_kinematics(bare_chain(3), Eigen::VectorXd::Zero(4)));
}

TEST_CASE("passive joint torque")
{
    JointParams p;
    p.stiffness = 1.0;
    p.damping = 0.0;
    p.rest_angle = 0.0;
    CHECK(passive_joint_torque(p, 0.0, 0.0) == 0.0);
    CHECK(passive_joint_torque(p, 0.1, 0.0) == doctest::Approx(-0.1));
    p.stiffness = 0.0;
    p.damping = 0.5;
    CHECK(passive_joint_torque(p, 0.3, 2.0) == doctest::Approx(-1.0));
}

TEST_CASE("joint limits restore and grow with violation")
{
    JointParams p;
    p.limit_lo = -0.5;
    p.limit_hi = 0.5;
    const JointLimitLaw law;
    CHECK(joint_limit_torque(p, law, 0.2, 3.0) == 0.0);
    CHECK(joint_limit_torque(p, law, 0.5 + 1e-3, 0.0) < 0.0);
    CHECK(joint_limit_torque(p, law, -0.5 - 1e-3, 0.0) > 0.0);
    const double a = std::abs(joint_limit_torque(p, law, 0.5 + 0.002, 0.0));
    const double b = std::abs(joint_limit_torque(p, law, 0.5 + 0.004, 0.0));
    CHECK(b > a);
}

TEST_CASE("tendon is unilateral and acts only on routed joints")
{
    ChainConfig c = make_chain(8);
    c.tendon.series_stiffness = 1000.0;
    ChainState s{c.rest_posture(), Eigen::VectorXd::Zero(8), 0.0};

    const TendonResult slack = tendon_force(c, s, 0.05); // l(rest) = 0 < u
    CHECK(slack.tension == 0.0);
    CHECK(slack.torque.cwiseAbs().maxCoeff() == 0.0);

    const TendonResult taut = tendon_force(c, s, -0.01);
    CHECK(taut.stretch == doctest::Approx(0.01));
    CHECK(taut.tension == doctest::Approx(10.0));
    for (std::size_t j = 0; j < 8; ++j) {
        const double tau = taut.torque[static_cast<Eigen::Index>(j)];
        if (j < c.tendon.attachment_joint)
            CHECK(tau == 0.0);
        else
            CHECK(tau == doctest::Approx(-10.0 * c.tendon.moment_arms[j]));
    }
}

TEST_CASE("17-joint layout attaches the tendon at the first middle joint")
{
    const ChainConfig c = make_chain(17);
    CHECK(c.tendon.attachment_joint == 4);
    CHECK(c.regions[3] == Region::cranial);
    CHECK(c.regions[4] == Region::middle);
    CHECK(c.regions[11] == Region::middle);
    CHECK(c.regions[12] == Region::caudal);
    CHECK(c.regions[16] == Region::caudal);
}

TEST_CASE("ligament stiffness grows geometrically and balances gravity at rest")
{
    ChainConfig c = make_chain(6);
    c.ligament.enabled = true;
    c.ligament.base_stiffness = 0.2;
    c.ligament.geometric_ratio = 1.0;
    const auto k1 = ligament_stiffness(c);
    CHECK(k1.maxCoeff() == doctest::Approx(k1.minCoeff()));

    c.ligament.geometric_ratio = 2.0;
    c.ligament.preload = LigamentPreload::static_balance;
    const auto k2 = ligament_stiffness(c);
    CHECK(k2[5] == doctest::Approx(0.2 * 32.0));

    // Net generalized force at rest: gravity (bias of inverse dynamics) against ligaments.
    const Eigen::VectorXd rest = c.rest_posture();
    const Eigen::VectorXd gravity_bias =
        inverse_dynamics(c, rest, Eigen::VectorXd::Zero(6), Eigen::VectorXd::Zero(6), true);
    CHECK((ligament_torque(c, rest) - gravity_bias).cwiseAbs().maxCoeff() < 1e-9);

    c.ligament.enabled = false;
    CHECK(ligament_torque(c, rest).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mass matrix matches the Jacobian construction and is SPD")
{
    std::mt19937_64 rng(11);
    ChainConfig c = make_chain(6);
    for (std::size_t j = 0; j < 6; ++j) {
        c.link_mass[j] = 0.02 + 0.005 * static_cast<double>(j);
        c.link_length[j] = 0.03 + 0.004 * static_cast<double>(j);
    }
    for (int trial = 0; trial < 5; ++trial) {
        const auto q = random_q(rng, 6, 1.5);
        const Eigen::MatrixXd M = mass_matrix(c, q);
        const Eigen::MatrixXd O = jacobian_mass_matrix(c, q);
        CHECK((M - O).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((M - M.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(Eigen::LLT<Eigen::MatrixXd>(M).info() == Eigen::Success);
    }
}

TEST_CASE("inverse dynamics columns reproduce the mass matrix")
{
    std::mt19937_64 rng(3);
    const ChainConfig c = make_chain(5);
    const auto q = random_q(rng, 5);
    const Eigen::MatrixXd M = mass_matrix(c, q);
    for (Eigen::Index k = 0; k < 5; ++k) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(5, k);
        const Eigen::VectorXd col = inverse_dynamics(c, q, Eigen::VectorXd::Zero(5), e, false);
        CHECK((col - M.col(k)).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("tip Jacobian matches finite differences")
{
    std::mt19937_64 rng(5);
    const ChainConfig c = make_chain(7);
    const auto q = random_q(rng, 7);
    const auto J = tip_jacobian(c, forward_kinematics(c, q));
    const double h = 1e-6;
    for (Eigen::Index k = 0; k < 7; ++k) {
        Eigen::VectorXd qp = q, qm = q;
        qp[k] += h;
        qm[k] -= h;
        const Vec2 a = forward_kinematics(c, qp).tip, b = forward_kinematics(c, qm).tip;
        CHECK(J(0, k) == doctest::Approx((a.x - b.x) / (2 * h)).epsilon(1e-7));
        CHECK(J(1, k) == doctest::Approx((a.y - b.y) / (2 * h)).epsilon(1e-7));
    }
}

TEST_CASE("force-free chain keeps its state")
{
    const ChainConfig c = bare_chain(5);
    std::mt19937_64 rng(1);
    ChainState s{random_q(rng, 5, 0.5), Eigen::VectorXd::Zero(5), 0.0};
    const ChainState s0 = s;
    for (int k = 0; k < 1000; ++k)
        s = step(c, s, {}, Environment{}, 1e-4).state;
    CHECK((s.q - s0.q).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.qdot.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("damped chain loses energy at every step")
{
    ChainConfig c = make_chain(5, 0.5, 0.05);
    c.tendon.enabled = false;
    ChainState s{c.rest_posture(), Eigen::VectorXd::Zero(5), 0.0};
    s.q[0] += 0.3;
    s.q[2] -= 0.2;
    double e = mechanical_energy(c, s, 0.0);
    bool ok = true;
    for (int k = 0; k < 5000; ++k) {
        s = step(c, s, {}, Environment{}, 1e-4).state;
        const double next = mechanical_energy(c, s, 0.0);
        ok = ok && next <= e + 1e-6 * std::abs(e);
        e = next;
    }
    CHECK(ok);
}

TEST_CASE("identical runs are bit identical")
{
    const ChainConfig c = make_chain(6);
    PlateSpec plate;
    plate.surface_height = forward_kinematics(c, c.rest_posture()).tip.y - 0.01;
    const Environment env{plate, ContactParams{}};
    const InputFn u = [](double t) { return 0.01 * std::cos(2 * std::numbers::pi * t); };
    ChainState a{c.rest_posture(), Eigen::VectorXd::Zero(6), 0.0}, b = a;
    for (int k = 0; k < 2000; ++k) {
        a = step(c, a, u, env, 1.0 / 2800).state;
        b = step(c, b, u, env, 1.0 / 2800).state;
    }
    CHECK(a.q == b.q);
    CHECK(a.qdot == b.qdot);
}

TEST_CASE("driven chain stays near its joint range")
{
    ChainConfig c = make_chain(6, 0.2, 0.02);
    c.tendon.series_stiffness = 1e5;
    const InputFn u = [](double t) { return 0.03 * std::cos(2 * std::numbers::pi * 2.0 * t); };
    ChainState s{c.rest_posture(), Eigen::VectorXd::Zero(6), 0.0};
    bool inside = true;
    for (int k = 0; k < 4 * 2800; ++k) {
        s.t = k / 2800.0;
        s = step(c, s, u, Environment{}, 1.0 / 2800).state;
        for (std::size_t j = 0; j < 6; ++j) {
            const double q = s.q[static_cast<Eigen::Index>(j)];
            inside = inside && q >= c.joints[j].limit_lo - 0.2 && q <= c.joints[j].limit_hi + 0.2;
        }
    }
    CHECK(inside);
}

TEST_CASE("non-finite state is reported with time and joint")
{
    const ChainConfig c = make_chain(3);
    ChainState s{c.rest_posture(), Eigen::VectorXd::Zero(3), 0.25};
    s.qdot[1] = std::numeric_limits<double>::quiet_NaN();
    try {
        (void)step(c, s, {}, Environment{}, 1e-4);
        FAIL("expected SimulationError");
    } catch (const SimulationError& e) {
        CHECK(e.time() == doctest::Approx(0.25));
        CHECK(e.joint() < 3);
    }
}

TEST_CASE("chain validation")
{
    ChainConfig c = make_chain(4);
    c.link_mass[2] = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_chain(4);
    c.joints[1].stiffness = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = make_chain(4);
    c.ligament.geometric_ratio = 0.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(make_chain(0), ConfigError);
}

TEST_CASE("single link small oscillation period")
{
    const double S = 0.05;
    ChainConfig c = make_chain(1, S, 0.0);
    c.tendon.enabled = false;
    c.ligament.enabled = false;
    c.joints[0].rest_angle = -std::numbers::pi / 2; // hanging straight down
    c.joints[0].limit_lo = -3.0;
    c.joints[0].limit_hi = 0.0;
    const double m = c.link_mass[0], l = c.link_length[0];
    const double expected = 2 * std::numbers::pi * std::sqrt((m * l * l / 3) / (S + m * c.gravity * l / 2));

    ChainState s{Eigen::VectorXd::Constant(1, c.joints[0].rest_angle + 0.01), Eigen::VectorXd::Zero(1), 0.0};
    const double dt = 1e-4;
    std::vector<double> upward;
    double prev = s.q[0] - c.joints[0].rest_angle;
    for (int k = 1; upward.size() < 6 && k < 2000000; ++k) {
        s = step(c, s, {}, Environment{}, dt).state;
        const double x = s.q[0] - c.joints[0].rest_angle;
        if (prev < 0.0 && x >= 0.0)
            upward.push_back((k - 1 + prev / (prev - x)) * dt);
        prev = x;
    }
    REQUIRE(upward.size() == 6);
    const double measured = (upward.back() - upward.front()) / 5.0;
    CHECK(std::abs(measured / expected - 1.0) < 0.01);
}
