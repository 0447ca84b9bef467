#pragma once

#include <stdexcept>
#include <string>

namespace peck {

/// Invalid or inconsistent configuration. Maps to CLI exit code 1.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The integrator produced a non-finite state. Maps to CLI exit code 2.
class SimulationError : public std::runtime_error {
public:
    SimulationError(const std::string& what, double time, std::size_t joint)
        : std::runtime_error(what), time_{time}, joint_{joint} {}

    double time() const noexcept { return time_; }
    std::size_t joint() const noexcept { return joint_; }

private:
    double time_;
    std::size_t joint_;
};

/// File-system failure. Maps to CLI exit code 3.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace peck
