#include "peck/contact.hpp"

#include "peck/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace peck {

void PlateSpec::validate() const
{
    if (!(stiffness > 0.0))
        throw ConfigError("plate " + std::to_string(label) + ": stiffness must be > 0");
    if (!(damping >= 0.0))
        throw ConfigError("plate " + std::to_string(label) + ": damping must be >= 0");
    if (!std::isfinite(surface_height))
        throw ConfigError("plate " + std::to_string(label) + ": surface height not finite");
}

void ContactParams::validate() const
{
    if (!(d_min > 0.0 && d_min <= d_max && d_max < 1.0))
        throw ConfigError("contact impedance needs 0 < d_min <= d_max < 1");
    if (!(width > 0.0))
        throw ConfigError("contact impedance width must be > 0");
    if (!(power >= 1.0))
        throw ConfigError("contact impedance power must be >= 1");
    if (!(midpoint > 0.0 && midpoint < 1.0))
        throw ConfigError("contact impedance midpoint must lie in (0, 1)");
    if (!(viscous_friction >= 0.0))
        throw ConfigError("viscous friction must be >= 0");
}

double impedance(const ContactParams& params, double r)
{
    const double x = std::clamp(r / params.width, 0.0, 1.0);
    const double p = params.power;
    const double m = params.midpoint;
    double y;
    if (x <= m)
        y = std::pow(x, p) / std::pow(m, p - 1.0);
    else
        y = 1.0 - std::pow(1.0 - x, p) / std::pow(1.0 - m, p - 1.0);
    return params.d_min + (params.d_max - params.d_min) * y;
}

ContactResult contact_force(const PlateSpec& plate, const ContactParams& params,
                            double r, double v, double vt)
{
    ContactResult out;
    out.depth = std::max(r, 0.0);
    out.normal_velocity = v;
    if (out.depth <= 0.0)
        return out;
    const double d = impedance(params, out.depth);
    out.vertical = std::max(0.0, d * (plate.stiffness * out.depth - plate.damping * v));
    out.tangential = -params.viscous_friction * vt;
    return out;
}

ContactKinematics detect(double tip_y, double tip_vx, double tip_vy, const PlateSpec& plate)
{
    ContactKinematics k;
    k.depth = std::max(0.0, plate.surface_height - tip_y);
    k.normal_velocity = tip_vy;
    k.tangential_velocity = tip_vx;
    return k;
}

std::vector<PlateSpec> log_spaced_plates(std::size_t count, double b_lo, double b_hi,
                                         double stiffness, double surface_height)
{
    if (count < 2 || !(b_lo > 0.0) || !(b_hi > b_lo))
        throw ConfigError("plate set needs count >= 2 and 0 < b_lo < b_hi");
    std::vector<PlateSpec> plates(count);
    for (std::size_t c = 0; c < count; ++c) {
        const double frac = static_cast<double>(c) / static_cast<double>(count - 1);
        plates[c].label = static_cast<int>(c);
        plates[c].stiffness = stiffness;
        plates[c].damping = c + 1 == count ? b_hi : b_lo * std::pow(b_hi / b_lo, frac);
        plates[c].surface_height = surface_height;
    }
    return plates;
}

} // namespace peck
