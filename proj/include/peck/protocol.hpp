#pragma once

// Experiment orchestration: endpoint input, initial states, episodes with
// washout, 12-bit style quantisation and time-multiplexed feature matrices.

#include "peck/chain.hpp"
#include "peck/contact.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace peck {

/// u(t) = A R cos(2 pi t / T) + Dr, A in degrees converted to radians.
struct InputSignal {
    double amplitude_deg = 90.0; // A
    double period = 1.0;         // T [s]
    double pulley_radius = 0.01; // R [m]
    double drift = 0.0;          // Dr [m]

    void validate() const;
    /// Input speed A/T [deg/s].
    double speed() const { return amplitude_deg / period; }
};

double input_u(const InputSignal& signal, double t);

struct EpisodeSpec {
    std::size_t classes = 3;     // C
    std::size_t n_init = 10;     // N
    std::size_t periods = 10;    // P
    std::size_t washout = 3;     // P_washout
    std::size_t n_train = 7;
    std::size_t n_eval = 3;
    double sample_rate = 700.0;  // f_s [Hz]
    std::size_t stride = 10;     // dt, in samples
    std::size_t window_stride = 10; // dt', in samples
    unsigned quant_bits = 12;
    std::uint64_t seed = 0;
    std::size_t substeps = 4;    // integrator steps per sample
    double init_perturbation = 0.05; // [rad]
    std::size_t random_splits = 20;  // used when n_init > 10

    /// Checks the invariants that depend on the period of `signal`.
    void validate(const InputSignal& signal) const;
    /// T f_s, which must be an integer.
    std::size_t samples_per_period(double period) const;
    /// L = T f_s / dt
    std::size_t intervals(double period) const { return samples_per_period(period) / stride; }
};

/// Per-channel sensor layout: n joint angles, then tangential and vertical
/// beak force.
inline std::size_t channel_count(std::size_t n_joints) { return n_joints + 2; }

struct RawSeries {
    Eigen::MatrixXd frames; // rows = samples, cols = channels
    std::vector<double> time;
    std::size_t washout_frames = 0;
    std::size_t frames_per_period = 0;
};

std::vector<ChainState> gen_initial_states(const EpisodeSpec& spec, const ChainConfig& config);

/// Simulates `spec.periods` periods sampling at f_s; the first
/// `spec.washout` periods are flagged as washout.
RawSeries run_episode(const ChainConfig& config, const Environment& env, const ChainState& init,
                      const InputSignal& signal, const EpisodeSpec& spec);

/// As run_episode, with one environment per period (plate switching).
RawSeries run_schedule(const ChainConfig& config, std::span<const Environment> periods,
                       const ChainState& init, const InputSignal& signal, const EpisodeSpec& spec);

struct Calibration {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
};

/// Affine map of [lo, hi] onto {0, ..., 2^bits - 1} per channel, clamped,
/// returned at level centres. Constant channels collapse to level 0.
Eigen::MatrixXd quantize(const Eigen::MatrixXd& series, unsigned bits, const Calibration& cal);

/// One period of one episode.
struct Window {
    int label = 0;
    std::size_t init = 0;
    std::size_t period = 0; // index among retained periods
    Eigen::MatrixXd frames; // samples_per_period x channels
};

struct Dataset {
    std::size_t n_joints = 0;
    std::size_t classes = 0;
    std::size_t n_init = 0;
    std::size_t samples_per_period = 0;
    double sample_rate = 0.0;
    std::vector<Window> windows; // ordered by (class, init, period)
    std::vector<RawSeries> episodes; // full series per (class, init), same order

    std::size_t channels() const { return channel_count(n_joints); }
};

/// Simulates every (plate, initial state) pair and cuts the post-washout
/// part into per-period windows.
Dataset build_dataset(const ChainConfig& config, const std::vector<PlateSpec>& plates,
                      const ContactParams& contact, const InputSignal& signal,
                      const EpisodeSpec& spec);

/// Window indices whose initial state is in `inits`.
std::vector<std::size_t> windows_for_inits(const Dataset& ds, std::span<const std::size_t> inits);

/// Per-channel min/max over the listed windows.
Calibration calibrate(const Dataset& ds, std::span<const std::size_t> windows);

/// Copy of `ds` with every window quantised against `cal`.
Dataset quantize_dataset(const Dataset& ds, unsigned bits, const Calibration& cal);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> eval;
};

/// Every N_eval-subset of initial states as evaluation set when N <= 10,
/// otherwise `spec.random_splits` seeded random splits.
std::vector<Split> make_splits(const EpisodeSpec& spec);

struct FeatureSet {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

/// Snapshots at samples dt, 2dt, ..., i dt of each window, channel-major.
/// Empty `windows` / `channels` select everything.
FeatureSet assemble_features(const Dataset& ds, std::size_t i, std::size_t stride,
                             std::span<const std::size_t> windows = {},
                             std::span<const std::size_t> channels = {});

/// Snapshots in the half-open sample range ((i-1) dt', i dt'] at stride dt.
FeatureSet assemble_window_features(const Dataset& ds, std::size_t i, std::size_t window_stride,
                                    std::size_t stride,
                                    std::span<const std::size_t> windows = {},
                                    std::span<const std::size_t> channels = {});

/// 0-based sample indices used by the two assemblers.
std::vector<std::size_t> snapshot_samples(std::size_t i, std::size_t stride);
std::vector<std::size_t> window_samples(std::size_t i, std::size_t window_stride,
                                        std::size_t stride);

/// Time-series dump: t,q0..q{n-1},f_tan,f_vert,washout,label,init,period
void write_series_header(std::ostream& os, std::size_t n_joints);
void write_series_rows(std::ostream& os, const RawSeries& series, int label, std::size_t init);
void write_dataset_csv(const std::string& path, const Dataset& ds);

/// Rebuilds a dataset (windows and episodes) from a combined dump.
Dataset read_dataset_csv(const std::string& path, double sample_rate, double period);

} // namespace peck
