#pragma once

// Evaluation quantities: accuracy curve, max accuracy, haptic memory, ESP
// index, silhouette coefficient (scalar and per-timestep) and the per-joint
// accuracy distribution.

#include "peck/protocol.hpp"
#include "peck/readout.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace peck {

struct AccuracyCurve {
    std::vector<double> mean;   // p(i), i = 0..L; p(0) is the chance rate
    std::vector<double> stddev; // across evaluation splits
    std::size_t intervals = 0;  // L
    double chance = 0.0;        // 1/C
    std::size_t splits = 0;
};

struct CurveOptions {
    std::vector<std::size_t> channels; // empty = every channel
    std::size_t last_interval = 0;     // 0 = L; larger indices are left at NaN
};

/// p(i) for i in [1, L]: quantise with the training calibration of each
/// split, fit a readout on accumulated training snapshots, score it on the
/// evaluation initial states; mean / std over splits.
AccuracyCurve accuracy_curve(const Dataset& ds, const EpisodeSpec& spec, const TrainSpec& train,
                             const CurveOptions& options = {});

double max_accuracy(const AccuracyCurve& curve);

struct HapticMemoryScore {
    double value = 0.0;
    std::size_t window = 0;  // last interval index used, floor(L/4)
    bool truncated = false;  // L was not divisible by 4
};

/// Mean of p(i) over i in [0, floor(L/4)].
HapticMemoryScore haptic_memory(const AccuracyCurve& curve);
HapticMemoryScore haptic_memory(const Dataset& ds, const EpisodeSpec& spec,
                                const TrainSpec& train);

struct EspReport {
    Eigen::MatrixXd sigma;     // time x channel deviation
    Eigen::VectorXd sigma_bar; // channel average per time
    double index = 0.0;        // time average of sigma_bar after washout
    double threshold = 0.01;
    bool holds = true;
};

/// Deviation of N trajectories (same input, different initial states) from
/// their mean, per channel, component-averaged, then time-averaged over
/// samples at and after `washout_samples`.
EspReport esp_index(std::span<const Eigen::MatrixXd> trajectories, std::size_t washout_samples,
                    double threshold = 0.01);

/// ESP index of the joint-angle channels of the retained windows, averaged
/// over plate classes.
EspReport esp_index(const Dataset& ds, double threshold = 0.01);

/// Per-sample silhouette values. Noise of scale `noise_sigma` is added to the
/// coordinates before distances are taken (0 disables it).
std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                       double noise_sigma = 0.0, std::uint64_t seed = 0);
double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                  double noise_sigma = 0.0, std::uint64_t seed = 0);

struct SilhouetteSeries {
    std::vector<double> s; // per sample index within the period
    double s_max = 0.0;
    std::size_t argmax = 0;
    double argmax_time = 0.0; // [s] from the start of the period
};

SilhouetteSeries silhouette_timeseries(const Dataset& ds, std::span<const std::size_t> channels,
                                       double noise_sigma = 1e-9, std::uint64_t seed = 0);

struct BodyAccuracy {
    std::vector<double> per_joint; // max accuracy using a single joint channel
    double all_channels = 0.0;
};

BodyAccuracy body_accuracy_distribution(const Dataset& ds, const EpisodeSpec& spec,
                                        const TrainSpec& train);

void write_curve_csv(const std::string& path, const AccuracyCurve& curve);
void write_esp_csv(const std::string& path, const EspReport& esp, double sample_rate);
void write_silhouette_csv(const std::string& path, const SilhouetteSeries& series,
                          double sample_rate);
void write_body_csv(const std::string& path, const BodyAccuracy& body);

} // namespace peck
