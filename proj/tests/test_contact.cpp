#include "peck/contact.hpp"
#include "peck/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace peck;

TEST_CASE("impedance endpoints and midpoint")
{
    const ContactParams p;
    CHECK(impedance(p, 0.0) == doctest::Approx(p.d_min));
    CHECK(impedance(p, p.width) == doctest::Approx(p.d_max));
    CHECK(impedance(p, 3.0 * p.width) == doctest::Approx(p.d_max));
    CHECK(impedance(p, 0.5 * p.width) == doctest::Approx(0.5 * (p.d_min + p.d_max)).epsilon(1e-12));
}

TEST_CASE("impedance is monotone and bounded")
{
    const ContactParams p;
    double prev = impedance(p, 0.0);
    for (int k = 1; k <= 400; ++k) {
        const double r = 1.5 * p.width * k / 400.0;
        const double d = impedance(p, r);
        CHECK(d >= prev - 1e-15);
        CHECK(d >= p.d_min);
        CHECK(d <= p.d_max);
        prev = d;
    }
}

TEST_CASE("impedance matches the piecewise power law away from the midpoint")
{
    ContactParams p;
    p.power = 3.0;
    p.midpoint = 0.3;
    const auto y = [&](double x) {
        return x <= p.midpoint ? std::pow(x, p.power) / std::pow(p.midpoint, p.power - 1)
                               : 1 - std::pow(1 - x, p.power) / std::pow(1 - p.midpoint, p.power - 1);
    };
    for (double x : {0.1, 0.3, 0.45, 0.9}) {
        const double expect = p.d_min + (p.d_max - p.d_min) * y(x);
        CHECK(impedance(p, x * p.width) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("no penetration means no force")
{
    const PlateSpec plate;
    const ContactParams p;
    for (double v : {-1.0, 0.0, 2.0}) {
        const auto f = contact_force(plate, p, 0.0, v, 0.3);
        CHECK(f.vertical == 0.0);
        CHECK(f.tangential == 0.0);
    }
}

TEST_CASE("static penetration force ignores damping")
{
    PlateSpec a, b;
    a.damping = 1.0;
    b.damping = 100.0;
    const ContactParams p;
    const double r = 0.004;
    const double expect = impedance(p, r) * a.stiffness * r;
    CHECK(contact_force(a, p, r, 0.0).vertical == doctest::Approx(expect));
    CHECK(contact_force(b, p, r, 0.0).vertical == doctest::Approx(expect));
}

TEST_CASE("approaching tip feels more force on a more damped plate")
{
    const ContactParams p;
    PlateSpec lo, hi;
    lo.damping = 1.0;
    hi.damping = 10.0;
    const auto f1 = contact_force(lo, p, 0.003, -0.5);
    const auto f2 = contact_force(hi, p, 0.003, -0.5);
    CHECK(f2.vertical > f1.vertical);
}

TEST_CASE("separating fast enough clamps the normal force at zero")
{
    const ContactParams p;
    PlateSpec plate;
    plate.damping = 100.0;
    const auto f = contact_force(plate, p, 0.001, 5.0);
    CHECK(f.vertical == 0.0);
}

TEST_CASE("tangential force is viscous while touching")
{
    ContactParams p;
    p.viscous_friction = 2.0;
    const PlateSpec plate;
    CHECK(contact_force(plate, p, 0.002, 0.0, 0.25).tangential == doctest::Approx(-0.5));
}

TEST_CASE("detect gives depth below the surface and the vertical velocity")
{
    PlateSpec plate;
    plate.surface_height = 0.1;
    CHECK(detect(0.2, 0.0, 0.0, plate).depth == 0.0);
    CHECK(detect(0.098, 0.0, 0.0, plate).depth == doctest::Approx(0.002));
    const auto k = detect(0.09, 0.4, -0.7, plate);
    CHECK(k.normal_velocity == doctest::Approx(-0.7));
    CHECK(k.tangential_velocity == doctest::Approx(0.4));
}

TEST_CASE("log spaced plate set")
{
    const auto plates = log_spaced_plates(9, 1.0, 100.0, 2000.0, 0.0);
    REQUIRE(plates.size() == 9);
    CHECK(plates.front().damping == doctest::Approx(1.0));
    CHECK(plates.back().damping == doctest::Approx(100.0));
    CHECK(plates[4].damping == doctest::Approx(10.0));
    for (std::size_t k = 0; k < plates.size(); ++k)
        CHECK(plates[k].label == static_cast<int>(k));
}

TEST_CASE("invalid contact parameters are rejected")
{
    ContactParams p;
    p.d_min = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.d_max = 1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.width = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    PlateSpec plate;
    plate.stiffness = 0.0;
    CHECK_THROWS_AS(plate.validate(), ConfigError);
}
