#pragma once

// JSON run configuration shared by the command-line tool.

#include "peck/sweep.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace peck {

struct RunConfig {
    Experiment experiment;
    SweepGrid grid = SweepGrid::defaults();
    MorphologyVariant variant;
    RealtimeSpec realtime;
    std::vector<Metric> metrics{Metric::lp, Metric::hm, Metric::esp};
    double failure_budget = 0.05; // tolerated fraction of failed cells
    std::string hash;             // FNV-1a of the canonical JSON

    /// Largest failure count still within budget for `cells` cells.
    std::size_t allowed_failures(std::size_t cells) const;
};

/// Parses a configuration document. Unknown keys are rejected. Plates may
/// be placed absolutely (`surface_height`) or by `gap` below the rest tip.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Configuration with every default, as parse_config("{}").
RunConfig default_config();

std::string fnv1a_hex(std::string_view bytes);

} // namespace peck
