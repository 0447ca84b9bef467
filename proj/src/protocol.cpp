#include "peck/protocol.hpp"

#include "peck/error.hpp"
#include "peck/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace peck {

void InputSignal::validate() const
{
    if (!(period > 0.0))
        throw ConfigError("input period T must be > 0");
    if (!(pulley_radius > 0.0))
        throw ConfigError("pulley radius R must be > 0");
    if (!(amplitude_deg >= 0.0))
        throw ConfigError("input amplitude A must be >= 0");
    if (!std::isfinite(drift))
        throw ConfigError("drift Dr must be finite");
}

double input_u(const InputSignal& signal, double t)
{
    const double amplitude = signal.amplitude_deg * std::numbers::pi / 180.0;
    return amplitude * signal.pulley_radius * std::cos(2.0 * std::numbers::pi * t / signal.period)
           + signal.drift;
}

std::size_t EpisodeSpec::samples_per_period(double period) const
{
    const double samples = period * sample_rate;
    const double rounded = std::round(samples);
    if (rounded < 1.0 || std::abs(samples - rounded) > 1e-6)
        throw ConfigError("T * f_s must be a positive integer");
    return static_cast<std::size_t>(rounded);
}

void EpisodeSpec::validate(const InputSignal& signal) const
{
    signal.validate();
    if (classes < 2)
        throw ConfigError("need at least two classes");
    if (n_init < 1)
        throw ConfigError("need at least one initial state");
    if (!(periods > washout))
        throw ConfigError("periods P must exceed the washout P_washout");
    if (n_train + n_eval > n_init || n_train < 1 || n_eval < 1)
        throw ConfigError("need N_train >= 1, N_eval >= 1 and N_train + N_eval <= N");
    if (!(sample_rate > 0.0))
        throw ConfigError("sample rate must be > 0");
    if (stride < 1 || window_stride < 1)
        throw ConfigError("strides must be >= 1");
    const std::size_t spp = samples_per_period(signal.period);
    if (spp % stride != 0)
        throw ConfigError("T * f_s must be divisible by the stride dt");
    if (quant_bits < 1 || quant_bits > 16)
        throw ConfigError("quant_bits must lie in [1, 16]");
    if (substeps < 1)
        throw ConfigError("substeps must be >= 1");
    if (!(init_perturbation >= 0.0))
        throw ConfigError("initial perturbation must be >= 0");
}

std::vector<ChainState> gen_initial_states(const EpisodeSpec& spec, const ChainConfig& config)
{
    if (spec.n_init < 1)
        throw ConfigError("need at least one initial state");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const Eigen::VectorXd rest = config.rest_posture();
    const std::size_t head_side =
        config.tendon.enabled ? config.tendon.attachment_joint : config.n_joints;

    std::vector<ChainState> states;
    states.reserve(spec.n_init);
    for (std::size_t i = 0; i < spec.n_init; ++i) {
        ChainState s;
        s.q = rest;
        s.qdot = Eigen::VectorXd::Zero(rest.size());
        for (std::size_t j = 0; j < head_side; ++j)
            s.q[static_cast<Eigen::Index>(j)] += spec.init_perturbation * jitter(rng);
        states.push_back(std::move(s));
    }
    return states;
}

RawSeries run_episode(const ChainConfig& config, const Environment& env, const ChainState& init,
                      const InputSignal& signal, const EpisodeSpec& spec)
{
    const std::vector<Environment> periods(spec.periods, env);
    return run_schedule(config, periods, init, signal, spec);
}

RawSeries run_schedule(const ChainConfig& config, std::span<const Environment> periods,
                       const ChainState& init, const InputSignal& signal, const EpisodeSpec& spec)
{
    const std::size_t spp = spec.samples_per_period(signal.period);
    const std::size_t total = spp * periods.size();
    const std::size_t channels = channel_count(config.n_joints);
    const auto n = static_cast<Eigen::Index>(config.n_joints);
    const double dt = 1.0 / (spec.sample_rate * static_cast<double>(spec.substeps));
    const InputFn u = [&signal](double t) { return input_u(signal, t); };

    RawSeries out;
    out.frames.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(channels));
    out.time.resize(total);
    out.washout_frames = spp * std::min(spec.washout, periods.size());
    out.frames_per_period = spp;

    ChainState state = init;
    for (std::size_t k = 0; k < total; ++k) {
        const Environment& env = periods[k / spp];
        state.t = static_cast<double>(k) / spec.sample_rate;
        const auto row = static_cast<Eigen::Index>(k);
        const ContactResult cr = sense_contact(config, state, env);
        out.time[k] = state.t;
        out.frames.row(row).head(n) = state.q.transpose();
        out.frames(row, n) = cr.tangential;
        out.frames(row, n + 1) = cr.vertical;
        for (std::size_t s = 0; s < spec.substeps; ++s) {
            state.t = static_cast<double>(k * spec.substeps + s) * dt;
            state = step(config, state, u, env, dt).state;
        }
    }
    return out;
}

Eigen::MatrixXd quantize(const Eigen::MatrixXd& series, unsigned bits, const Calibration& cal)
{
    if (cal.lo.size() != series.cols() || cal.hi.size() != series.cols())
        throw std::invalid_argument("quantize: calibration does not match channel count");
    const double levels = std::ldexp(1.0, static_cast<int>(bits));
    Eigen::MatrixXd out(series.rows(), series.cols());
    for (Eigen::Index c = 0; c < series.cols(); ++c) {
        const double lo = cal.lo[c], hi = cal.hi[c];
        if (!(hi > lo)) {
            out.col(c).setConstant(lo);
            continue;
        }
        const double width = (hi - lo) / levels;
        for (Eigen::Index r = 0; r < series.rows(); ++r) {
            const double level = std::clamp(std::floor((series(r, c) - lo) / width), 0.0, levels - 1.0);
            out(r, c) = lo + (level + 0.5) * width;
        }
    }
    return out;
}

Dataset build_dataset(const ChainConfig& config, const std::vector<PlateSpec>& plates,
                      const ContactParams& contact, const InputSignal& signal,
                      const EpisodeSpec& spec)
{
    config.validate();
    contact.validate();
    spec.validate(signal);
    if (plates.size() != spec.classes)
        throw ConfigError("plate count does not match the class count C");
    for (const auto& p : plates)
        p.validate();

    Dataset ds;
    ds.n_joints = config.n_joints;
    ds.classes = spec.classes;
    ds.n_init = spec.n_init;
    ds.samples_per_period = spec.samples_per_period(signal.period);
    ds.sample_rate = spec.sample_rate;

    const auto inits = gen_initial_states(spec, config);
    const auto spp = static_cast<Eigen::Index>(ds.samples_per_period);
    for (std::size_t c = 0; c < plates.size(); ++c) {
        Environment env{plates[c], contact};
        for (std::size_t n = 0; n < inits.size(); ++n) {
            RawSeries series = run_episode(config, env, inits[n], signal, spec);
            for (std::size_t p = spec.washout; p < spec.periods; ++p) {
                Window w;
                w.label = static_cast<int>(c);
                w.init = n;
                w.period = p - spec.washout;
                w.frames = series.frames.middleRows(static_cast<Eigen::Index>(p) * spp, spp);
                ds.windows.push_back(std::move(w));
            }
            ds.episodes.push_back(std::move(series));
        }
    }
    return ds;
}

std::vector<std::size_t> windows_for_inits(const Dataset& ds, std::span<const std::size_t> inits)
{
    std::vector<std::size_t> out;
    for (std::size_t w = 0; w < ds.windows.size(); ++w)
        if (std::find(inits.begin(), inits.end(), ds.windows[w].init) != inits.end())
            out.push_back(w);
    return out;
}

Calibration calibrate(const Dataset& ds, std::span<const std::size_t> windows)
{
    const auto ch = static_cast<Eigen::Index>(ds.channels());
    Calibration cal;
    cal.lo = Eigen::VectorXd::Constant(ch, std::numeric_limits<double>::infinity());
    cal.hi = Eigen::VectorXd::Constant(ch, -std::numeric_limits<double>::infinity());
    for (std::size_t w : windows) {
        const auto& f = ds.windows.at(w).frames;
        cal.lo = cal.lo.cwiseMin(f.colwise().minCoeff().transpose());
        cal.hi = cal.hi.cwiseMax(f.colwise().maxCoeff().transpose());
    }
    if (windows.empty()) {
        cal.lo.setZero();
        cal.hi.setZero();
    }
    return cal;
}

Dataset quantize_dataset(const Dataset& ds, unsigned bits, const Calibration& cal)
{
    Dataset out = ds;
    out.episodes.clear();
    for (auto& w : out.windows)
        w.frames = quantize(w.frames, bits, cal);
    return out;
}

std::vector<Split> make_splits(const EpisodeSpec& spec)
{
    const std::size_t n = spec.n_init;
    std::vector<Split> splits;
    if (n <= 10) {
        // Enumerate evaluation subsets in lexicographic order.
        std::vector<std::size_t> idx(spec.n_eval);
        std::iota(idx.begin(), idx.end(), 0);
        while (true) {
            Split s;
            s.eval = idx;
            for (std::size_t i = 0; i < n && s.train.size() < spec.n_train; ++i)
                if (std::find(idx.begin(), idx.end(), i) == idx.end())
                    s.train.push_back(i);
            splits.push_back(std::move(s));
            std::size_t k = spec.n_eval;
            while (k > 0 && idx[k - 1] == n - spec.n_eval + k - 1)
                --k;
            if (k == 0)
                break;
            ++idx[k - 1];
            for (std::size_t j = k; j < spec.n_eval; ++j)
                idx[j] = idx[j - 1] + 1;
        }
        return splits;
    }
    std::mt19937_64 rng(spec.seed ^ 0x5eed5917e5ULL);
    std::vector<std::size_t> order(n);
    for (std::size_t r = 0; r < spec.random_splits; ++r) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Split s;
        s.eval.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.n_eval));
        s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(spec.n_eval),
                       order.begin() + static_cast<std::ptrdiff_t>(spec.n_eval + spec.n_train));
        std::sort(s.eval.begin(), s.eval.end());
        std::sort(s.train.begin(), s.train.end());
        splits.push_back(std::move(s));
    }
    return splits;
}

std::vector<std::size_t> snapshot_samples(std::size_t i, std::size_t stride)
{
    std::vector<std::size_t> out(i);
    for (std::size_t k = 0; k < i; ++k)
        out[k] = (k + 1) * stride - 1;
    return out;
}

std::vector<std::size_t> window_samples(std::size_t i, std::size_t window_stride,
                                        std::size_t stride)
{
    if (i < 1 || window_stride % stride != 0)
        throw std::invalid_argument("window features need i >= 1 and dt' divisible by dt");
    const std::size_t per = window_stride / stride;
    std::vector<std::size_t> out(per);
    for (std::size_t k = 0; k < per; ++k)
        out[k] = (i - 1) * window_stride + (k + 1) * stride - 1;
    return out;
}

namespace {

FeatureSet gather(const Dataset& ds, const std::vector<std::size_t>& samples,
                  std::span<const std::size_t> windows, std::span<const std::size_t> channels)
{
    std::vector<std::size_t> all_windows, all_channels;
    if (windows.empty()) {
        all_windows.resize(ds.windows.size());
        std::iota(all_windows.begin(), all_windows.end(), 0);
        windows = all_windows;
    }
    if (channels.empty()) {
        all_channels.resize(ds.channels());
        std::iota(all_channels.begin(), all_channels.end(), 0);
        channels = all_channels;
    }
    const std::size_t per = samples.size();
    FeatureSet fs;
    fs.x.resize(static_cast<Eigen::Index>(windows.size()),
                static_cast<Eigen::Index>(per * channels.size()));
    fs.y.reserve(windows.size());
    for (std::size_t r = 0; r < windows.size(); ++r) {
        const Window& w = ds.windows.at(windows[r]);
        for (std::size_t c = 0; c < channels.size(); ++c)
            for (std::size_t k = 0; k < per; ++k)
                fs.x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c * per + k)) =
                    w.frames(static_cast<Eigen::Index>(samples[k]),
                             static_cast<Eigen::Index>(channels[c]));
        fs.y.push_back(w.label);
    }
    return fs;
}

} // namespace

FeatureSet assemble_features(const Dataset& ds, std::size_t i, std::size_t stride,
                             std::span<const std::size_t> windows,
                             std::span<const std::size_t> channels)
{
    if (stride < 1 || ds.samples_per_period % stride != 0)
        throw std::invalid_argument("assemble_features: stride must divide T f_s");
    const std::size_t L = ds.samples_per_period / stride;
    if (i < 1 || i > L)
        throw std::out_of_range("assemble_features: interval index " + std::to_string(i)
                                + " outside [1, " + std::to_string(L) + "]");
    return gather(ds, snapshot_samples(i, stride), windows, channels);
}

FeatureSet assemble_window_features(const Dataset& ds, std::size_t i, std::size_t window_stride,
                                    std::size_t stride, std::span<const std::size_t> windows,
                                    std::span<const std::size_t> channels)
{
    if (i < 1 || i * window_stride > ds.samples_per_period)
        throw std::out_of_range("assemble_window_features: window " + std::to_string(i)
                                + " exceeds the period");
    return gather(ds, window_samples(i, window_stride, stride), windows, channels);
}

void write_series_header(std::ostream& os, std::size_t n_joints)
{
    os << 't';
    for (std::size_t j = 0; j < n_joints; ++j)
        os << ",q" << j;
    os << ",f_tan,f_vert,washout,label,init,period\n";
}

void write_series_rows(std::ostream& os, const RawSeries& series, int label, std::size_t init)
{
    std::string line;
    for (Eigen::Index r = 0; r < series.frames.rows(); ++r) {
        const auto k = static_cast<std::size_t>(r);
        line.clear();
        append_number(line, series.time[k]);
        for (Eigen::Index c = 0; c < series.frames.cols(); ++c) {
            line += ',';
            append_number(line, series.frames(r, c));
        }
        line += k < series.washout_frames ? ",1," : ",0,";
        line += std::to_string(label);
        line += ',';
        line += std::to_string(init);
        line += ',';
        line += std::to_string(k / series.frames_per_period);
        line += '\n';
        os << line;
    }
}

void write_dataset_csv(const std::string& path, const Dataset& ds)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path + " for writing");
    write_series_header(os, ds.n_joints);
    std::size_t e = 0;
    for (std::size_t c = 0; c < ds.classes; ++c)
        for (std::size_t n = 0; n < ds.n_init; ++n)
            write_series_rows(os, ds.episodes.at(e++), static_cast<int>(c), n);
    if (!os)
        throw IoError("write failed for " + path);
}

Dataset read_dataset_csv(const std::string& path, double sample_rate, double period)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path);
    std::string header;
    std::getline(is, header);
    const auto columns = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
    if (columns < 8 || header.rfind("t,q0", 0) != 0)
        throw IoError(path + ": not a time-series dump");
    const std::size_t n_joints = columns - 7;
    const std::size_t channels = channel_count(n_joints);

    struct Rows {
        std::vector<double> time;
        std::vector<double> values;
        std::size_t washout = 0;
    };
    std::map<std::pair<int, std::size_t>, Rows> episodes;
    std::string line;
    std::vector<double> fields(columns);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::size_t pos = 0;
        for (std::size_t f = 0; f < columns; ++f) {
            const std::size_t end = std::min(line.find(',', pos), line.size());
            const auto res = std::from_chars(line.data() + pos, line.data() + end, fields[f]);
            if (res.ec != std::errc())
                throw IoError(path + ":" + std::to_string(line_no) + ": malformed field");
            pos = end + 1;
        }
        const int label = static_cast<int>(fields[channels + 2]);
        const auto init = static_cast<std::size_t>(fields[channels + 3]);
        Rows& rows = episodes[{label, init}];
        rows.time.push_back(fields[0]);
        rows.values.insert(rows.values.end(), fields.begin() + 1,
                           fields.begin() + 1 + static_cast<std::ptrdiff_t>(channels));
        if (fields[channels + 1] != 0.0)
            ++rows.washout;
    }
    if (episodes.empty())
        throw IoError(path + ": no samples");

    Dataset ds;
    ds.n_joints = n_joints;
    ds.sample_rate = sample_rate;
    ds.samples_per_period = static_cast<std::size_t>(std::lround(sample_rate * period));
    std::size_t max_label = 0, max_init = 0;
    for (const auto& [key, rows] : episodes) {
        max_label = std::max(max_label, static_cast<std::size_t>(key.first));
        max_init = std::max(max_init, key.second);
    }
    ds.classes = max_label + 1;
    ds.n_init = max_init + 1;
    const auto spp = static_cast<Eigen::Index>(ds.samples_per_period);
    for (auto& [key, rows] : episodes) {
        RawSeries s;
        const auto count = static_cast<Eigen::Index>(rows.time.size());
        s.frames = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
            rows.values.data(), count, static_cast<Eigen::Index>(channels));
        s.time = std::move(rows.time);
        s.washout_frames = rows.washout;
        s.frames_per_period = ds.samples_per_period;
        if (count % spp != 0 || s.washout_frames % ds.samples_per_period != 0)
            throw IoError(path + ": episode length is not a whole number of periods");
        const auto first = static_cast<Eigen::Index>(s.washout_frames) / spp;
        for (Eigen::Index p = first; p < count / spp; ++p) {
            Window w;
            w.label = key.first;
            w.init = key.second;
            w.period = static_cast<std::size_t>(p - first);
            w.frames = s.frames.middleRows(p * spp, spp);
            ds.windows.push_back(std::move(w));
        }
        ds.episodes.push_back(std::move(s));
    }
    return ds;
}

} // namespace peck
