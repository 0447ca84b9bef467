#pragma once

// Parameter sweeps over body viscoelasticity and input, morphology studies,
// heatmap export and the real-time inference loop.

#include "peck/metrics.hpp"
#include "peck/protocol.hpp"
#include "peck/readout.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace peck {

inline constexpr const char* tool_version = "0.3.0";

/// Everything needed to run one protocol instance.
struct Experiment {
    ChainConfig chain = make_chain();
    std::vector<PlateSpec> plates;
    ContactParams contact;
    InputSignal signal;
    EpisodeSpec episode;
    TrainSpec train;

    void validate() const;
};

enum class Spacing { geometric, linear };

std::vector<double> gen_grid(double lo, double hi, std::size_t n,
                             Spacing spacing = Spacing::geometric);

/// A in {30, 60, 90, 120} deg x T in {0.5, 1, 2} s, period-major.
std::vector<InputSignal> default_input_configs(double pulley_radius = 0.01);

struct SweepGrid {
    std::vector<double> stiffness;
    std::vector<double> damping;
    std::vector<InputSignal> inputs;

    /// 15 x 15 geometric grid over [0.1, 17.5] x [0.02, 1.5] and the 12 inputs.
    static SweepGrid defaults();
    void validate() const;
    std::size_t cells() const { return stiffness.size() * damping.size() * inputs.size(); }
};

/// Per-cell seed; injective over (i, j, k) for indices below 2^20.
std::uint64_t derive_seed(std::uint64_t run_seed, std::size_t i, std::size_t j, std::size_t k);

enum class Metric { lp, hm, esp, product };

Metric parse_metric(const std::string& name);
std::string metric_name(Metric m);

struct CellResult {
    double lp = std::numeric_limits<double>::quiet_NaN();
    double hm = std::numeric_limits<double>::quiet_NaN();
    double esp = std::numeric_limits<double>::quiet_NaN();
    std::uint64_t seed = 0;
    bool failed = false;
    std::string error;

    double value(Metric m) const;
};

/// Builds the dataset with `seed` and computes the requested metrics.
/// Simulation failures are caught and reported through `failed`.
CellResult evaluate_cell(const Experiment& experiment, std::uint64_t seed,
                         const std::vector<Metric>& metrics);

struct Heatmap {
    Metric metric = Metric::lp;
    std::string row_name = "S";
    std::string col_name = "D";
    std::vector<double> rows;
    std::vector<double> cols;
    Eigen::MatrixXd values;
    std::vector<std::uint64_t> seeds; // row-major, one per cell
    std::uint64_t run_seed = 0;
    std::string config_hash;
    std::string grid_json;
    std::string label; // e.g. input condition

    void validate() const;
};

struct SweepOptions {
    std::size_t jobs = 0;                 // 0 = hardware concurrency
    std::vector<std::size_t> order;       // execution order override (tests)
};

struct SweepResult {
    std::vector<CellResult> cells; // index (k * |S| + i) * |D| + j
    std::vector<Heatmap> maps;     // per input, per requested metric
    std::size_t failures = 0;
};

/// Evaluates fn(index) for index in [0, count) on a worker pool. Results are
/// placed by index, so the execution order never leaks into the output.
std::vector<CellResult> run_cells(std::size_t count,
                                  const std::function<CellResult(std::size_t)>& fn,
                                  const SweepOptions& options);

SweepResult run_sweep(const Experiment& base, const SweepGrid& grid, std::uint64_t run_seed,
                      const std::vector<Metric>& metrics, const SweepOptions& options = {},
                      const std::string& config_hash = {});

enum class MorphologyMode { uniform, cranial_caudal, three_region };

MorphologyMode parse_morphology_mode(const std::string& name);
std::string morphology_mode_name(MorphologyMode mode);

/// Heterogeneous viscoelasticity around a fixed (S, D).
///   uniform:        axes scale S and D of every joint.
///   cranial_caudal: axes scale S and D of the cranial region; the rest
///                   stays at the fixed values.
///   three_region:   `fixed_region` keeps (S, D); the two other regions, in
///                   head-to-base order, are scaled by the row and column
///                   ratios (both S and D).
struct MorphologyVariant {
    MorphologyMode mode = MorphologyMode::cranial_caudal;
    std::vector<Region> regions;        // empty = template labels
    Region fixed_region = Region::caudal;
    double fixed_stiffness = 0.633;
    double fixed_damping = 0.0935;
    std::vector<double> row_ratios{0.25, 0.5, 1.0, 2.0, 4.0};
    std::vector<double> col_ratios{0.25, 0.5, 1.0, 2.0, 4.0};
    bool ligament = false;              // replace the template ligament with `ligament_config`
    LigamentConfig ligament_config{true, 0.05, 1.5, LigamentPreload::none};

    void validate(std::size_t n_joints) const;
    /// Chain for ratio pair (row, col).
    ChainConfig apply(const ChainConfig& base, double row_ratio, double col_ratio) const;
};

/// Named fixed conditions; F1 is the "slightly flexible" point.
struct FixedCondition {
    std::string name;
    double stiffness;
    double damping;
};
std::vector<FixedCondition> fixed_presets();

struct MorphologyResult {
    std::vector<CellResult> cells; // row-major
    Heatmap lp;
    Heatmap hm;
    Heatmap product;
    std::size_t failures = 0;
};

MorphologyResult run_morphology_sweep(const Experiment& base, const MorphologyVariant& variant,
                                      std::uint64_t run_seed, const SweepOptions& options = {},
                                      const std::string& config_hash = {});

/// Element-wise a * b over matching axes.
Heatmap product_map(const Heatmap& a, const Heatmap& b);

/// CSV with a corner cell `row\col`, the column axis values as header and
/// one row per row-axis value; NaN cells are written as NA. A sidecar
/// `<path>.json` holds the metadata.
void export_heatmap(const Heatmap& map, const std::string& path);
Heatmap read_heatmap_csv(const std::string& path);

/// Plate switching demonstration.
struct RealtimeSpec {
    std::vector<int> schedule{0, 1, 2};  // plate classes in order
    std::size_t periods_per_plate = 3;
    std::vector<std::size_t> window_strides{10, 20, 50, 140, 700}; // dt' values

    void validate(std::size_t classes) const;
};

struct RealtimeStep {
    double t = 0.0;          // end of the window
    std::size_t period = 0;  // index in the replayed series
    std::size_t window = 0;  // i, 1-based
    int actual = -1;         // -1 during washout and plate rotation
    int predicted = 0;
};

struct RealtimeResult {
    std::size_t window_stride = 0;
    std::vector<RealtimeStep> steps;
    double match_rate = 0.0;
    std::size_t counted = 0;
};

/// Windowed readouts for every window index, trained on `ds` with the
/// calibration `cal`.
struct WindowedReadout {
    std::size_t window_stride = 0;
    std::size_t stride = 0;
    Calibration calibration;
    unsigned quant_bits = 12;
    std::vector<SoftmaxModel> models; // index i - 1

    int infer(const Eigen::MatrixXd& period_frames, std::size_t i) const;
};

WindowedReadout train_windowed(const Dataset& ds, const EpisodeSpec& spec, const TrainSpec& train,
                               std::size_t window_stride);

/// Replays the schedule: washout with the first plate, then for every entry
/// one rotation period without a plate followed by `periods_per_plate`
/// periods on that plate. Washout and rotation windows are not scored.
RealtimeResult realtime_infer(const Experiment& experiment, const WindowedReadout& readout,
                              const RealtimeSpec& rt);

/// Trains on a fresh dataset and evaluates every window stride.
std::vector<RealtimeResult> realtime_table(const Experiment& experiment, const RealtimeSpec& rt);

void write_realtime_csv(const std::string& path, const RealtimeResult& result);
void write_realtime_table_csv(const std::string& path, const std::vector<RealtimeResult>& table);

} // namespace peck
