#include "peck/metrics.hpp"

#include "peck/error.hpp"
#include "peck/format.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace peck {

namespace {

std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path + " for writing");
    return os;
}

} // namespace

AccuracyCurve accuracy_curve(const Dataset& ds, const EpisodeSpec& spec, const TrainSpec& train_spec,
                             const CurveOptions& options)
{
    if (ds.classes < 2)
        throw std::invalid_argument("accuracy_curve: need at least two classes");
    if (ds.samples_per_period % spec.stride != 0)
        throw std::invalid_argument("accuracy_curve: stride must divide T f_s");
    const std::size_t L = ds.samples_per_period / spec.stride;
    const std::size_t last = options.last_interval ? std::min(options.last_interval, L) : L;
    const auto splits = make_splits(spec);
    if (splits.empty())
        throw std::invalid_argument("accuracy_curve: degenerate split");

    AccuracyCurve curve;
    curve.intervals = L;
    curve.chance = 1.0 / static_cast<double>(ds.classes);
    curve.splits = splits.size();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    curve.mean.assign(L + 1, nan);
    curve.stddev.assign(L + 1, nan);
    curve.mean[0] = curve.chance;
    curve.stddev[0] = 0.0;

    std::vector<std::vector<double>> per_split(last + 1);
    for (const Split& split : splits) {
        const auto train_w = windows_for_inits(ds, split.train);
        const auto eval_w = windows_for_inits(ds, split.eval);
        if (train_w.empty() || eval_w.empty())
            throw std::invalid_argument("accuracy_curve: degenerate split");
        const Dataset q = quantize_dataset(ds, spec.quant_bits, calibrate(ds, train_w));
        for (std::size_t i = 1; i <= last; ++i) {
            const FeatureSet tr = assemble_features(q, i, spec.stride, train_w, options.channels);
            const FeatureSet ev = assemble_features(q, i, spec.stride, eval_w, options.channels);
            const SoftmaxModel model = train(tr.x, tr.y, train_spec, ds.classes);
            per_split[i].push_back(accuracy(predict(model, ev.x), ev.y));
        }
    }
    for (std::size_t i = 1; i <= last; ++i) {
        const auto& v = per_split[i];
        const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        double var = 0.0;
        for (double a : v)
            var += (a - m) * (a - m);
        curve.mean[i] = m;
        curve.stddev[i] = std::sqrt(var / static_cast<double>(v.size()));
    }
    return curve;
}

double max_accuracy(const AccuracyCurve& curve)
{
    if (curve.mean.empty())
        throw std::invalid_argument("max_accuracy: empty curve");
    double best = -std::numeric_limits<double>::infinity();
    for (double p : curve.mean)
        if (!std::isnan(p))
            best = std::max(best, p);
    return best;
}

HapticMemoryScore haptic_memory(const AccuracyCurve& curve)
{
    HapticMemoryScore hm;
    hm.window = curve.intervals / 4;
    hm.truncated = curve.intervals % 4 != 0;
    double sum = 0.0;
    for (std::size_t i = 0; i <= hm.window; ++i) {
        if (std::isnan(curve.mean.at(i)))
            throw std::invalid_argument("haptic_memory: curve does not cover the first quarter");
        sum += curve.mean[i];
    }
    hm.value = sum / static_cast<double>(hm.window + 1);
    return hm;
}

HapticMemoryScore haptic_memory(const Dataset& ds, const EpisodeSpec& spec, const TrainSpec& train)
{
    CurveOptions opts;
    opts.last_interval = std::max<std::size_t>(1, ds.samples_per_period / spec.stride / 4);
    return haptic_memory(accuracy_curve(ds, spec, train, opts));
}

EspReport esp_index(std::span<const Eigen::MatrixXd> trajectories, std::size_t washout_samples,
                    double threshold)
{
    if (trajectories.size() < 2)
        throw std::invalid_argument("esp_index: need at least two trajectories");
    const Eigen::Index T = trajectories[0].rows(), C = trajectories[0].cols();
    for (const auto& tr : trajectories)
        if (tr.rows() != T || tr.cols() != C)
            throw std::invalid_argument("esp_index: trajectory length or channel mismatch");
    if (static_cast<Eigen::Index>(washout_samples) >= T)
        throw std::invalid_argument("esp_index: washout covers the whole series");

    // Offsets from the first trajectory, so coincident runs cancel exactly.
    const double n = static_cast<double>(trajectories.size());
    const Eigen::MatrixXd& ref = trajectories[0];
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(T, C);
    for (const auto& tr : trajectories)
        mean += tr - ref;
    mean /= n;
    EspReport rep;
    rep.threshold = threshold;
    rep.sigma = Eigen::MatrixXd::Zero(T, C);
    for (const auto& tr : trajectories)
        rep.sigma += (tr - ref - mean).cwiseAbs();
    rep.sigma /= n;
    rep.sigma_bar = rep.sigma.rowwise().mean();
    rep.index = rep.sigma_bar.tail(T - static_cast<Eigen::Index>(washout_samples)).mean();
    rep.holds = rep.index < threshold;
    return rep;
}

EspReport esp_index(const Dataset& ds, double threshold)
{
    // Concatenate retained windows per (class, init) into post-washout series.
    std::map<std::pair<int, std::size_t>, std::vector<const Window*>> grouped;
    for (const auto& w : ds.windows)
        grouped[{w.label, w.init}].push_back(&w);
    const auto n = static_cast<Eigen::Index>(ds.n_joints);

    EspReport total;
    total.threshold = threshold;
    std::size_t classes = 0;
    for (int c = 0; c < static_cast<int>(ds.classes); ++c) {
        std::vector<Eigen::MatrixXd> series;
        for (auto& [key, windows] : grouped) {
            if (key.first != c)
                continue;
            std::sort(windows.begin(), windows.end(),
                      [](const Window* a, const Window* b) { return a->period < b->period; });
            const auto spp = windows.front()->frames.rows();
            Eigen::MatrixXd m(spp * static_cast<Eigen::Index>(windows.size()), n);
            for (std::size_t p = 0; p < windows.size(); ++p)
                m.middleRows(static_cast<Eigen::Index>(p) * spp, spp) = windows[p]->frames.leftCols(n);
            series.push_back(std::move(m));
        }
        if (series.size() < 2)
            continue;
        EspReport r = esp_index(series, 0, threshold);
        if (classes == 0) {
            total.sigma = r.sigma;
            total.sigma_bar = r.sigma_bar;
        } else {
            total.sigma += r.sigma;
            total.sigma_bar += r.sigma_bar;
        }
        total.index += r.index;
        ++classes;
    }
    if (classes == 0)
        throw std::invalid_argument("esp_index: need two initial states per class");
    const double k = static_cast<double>(classes);
    total.sigma /= k;
    total.sigma_bar /= k;
    total.index /= k;
    total.holds = total.index < threshold;
    return total;
}

std::vector<double> silhouette_samples(const Eigen::MatrixXd& points, const std::vector<int>& labels,
                                       double noise_sigma, std::uint64_t seed)
{
    const auto n = static_cast<std::size_t>(points.rows());
    if (labels.size() != n)
        throw std::invalid_argument("silhouette: label count does not match point count");
    std::map<int, std::size_t> cluster_size;
    for (int l : labels)
        ++cluster_size[l];
    if (cluster_size.size() < 2)
        throw std::invalid_argument("silhouette: need at least two clusters");

    Eigen::MatrixXd x = points;
    if (noise_sigma > 0.0) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> noise(0.0, noise_sigma);
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            for (Eigen::Index c = 0; c < x.cols(); ++c)
                x(r, c) += noise(rng);
    }

    std::map<int, std::size_t> slot;
    for (const auto& [label, size] : cluster_size)
        slot.emplace(label, slot.size());
    const std::size_t k = slot.size();

    std::vector<double> out(n, 0.0);
    std::vector<double> dist_sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i)
                continue;
            const double d = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).norm();
            dist_sum[slot[labels[j]]] += d;
        }
        const std::size_t own = cluster_size[labels[i]];
        if (own < 2)
            continue; // singleton convention: s = 0
        const double a = dist_sum[slot[labels[i]]] / static_cast<double>(own - 1);
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, size] : cluster_size)
            if (label != labels[i])
                b = std::min(b, dist_sum[slot[label]] / static_cast<double>(size));
        const double denom = std::max(a, b);
        out[i] = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return out;
}

double silhouette(const Eigen::MatrixXd& points, const std::vector<int>& labels, double noise_sigma,
                  std::uint64_t seed)
{
    const auto s = silhouette_samples(points, labels, noise_sigma, seed);
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

SilhouetteSeries silhouette_timeseries(const Dataset& ds, std::span<const std::size_t> channels,
                                       double noise_sigma, std::uint64_t seed)
{
    if (ds.windows.empty())
        throw std::invalid_argument("silhouette_timeseries: empty dataset");
    std::vector<std::size_t> all;
    if (channels.empty()) {
        all.resize(ds.channels());
        std::iota(all.begin(), all.end(), 0);
        channels = all;
    }
    std::vector<int> labels;
    for (const auto& w : ds.windows) {
        labels.push_back(w.label);
        if (static_cast<std::size_t>(w.frames.rows()) != ds.samples_per_period)
            throw std::invalid_argument("silhouette_timeseries: windows are not aligned");
    }

    SilhouetteSeries out;
    out.s.resize(ds.samples_per_period);
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(ds.windows.size()),
                        static_cast<Eigen::Index>(channels.size()));
    out.s_max = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < ds.samples_per_period; ++t) {
        for (std::size_t w = 0; w < ds.windows.size(); ++w)
            for (std::size_t c = 0; c < channels.size(); ++c)
                pts(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(c)) =
                    ds.windows[w].frames(static_cast<Eigen::Index>(t),
                                         static_cast<Eigen::Index>(channels[c]));
        out.s[t] = silhouette(pts, labels, noise_sigma, seed + t);
        if (out.s[t] > out.s_max) {
            out.s_max = out.s[t];
            out.argmax = t;
        }
    }
    out.argmax_time = static_cast<double>(out.argmax) / ds.sample_rate;
    return out;
}

BodyAccuracy body_accuracy_distribution(const Dataset& ds, const EpisodeSpec& spec,
                                        const TrainSpec& train)
{
    BodyAccuracy out;
    for (std::size_t j = 0; j < ds.n_joints; ++j) {
        CurveOptions opts;
        opts.channels = {j};
        out.per_joint.push_back(max_accuracy(accuracy_curve(ds, spec, train, opts)));
    }
    out.all_channels = max_accuracy(accuracy_curve(ds, spec, train));
    return out;
}

void write_curve_csv(const std::string& path, const AccuracyCurve& curve)
{
    auto os = open_out(path);
    os << "i,mean,std\n";
    for (std::size_t i = 0; i < curve.mean.size(); ++i)
        os << i << ',' << format_number(curve.mean[i]) << ',' << format_number(curve.stddev[i]) << '\n';
}

void write_esp_csv(const std::string& path, const EspReport& esp, double sample_rate)
{
    auto os = open_out(path);
    os << "t,sigma_bar\n";
    for (Eigen::Index t = 0; t < esp.sigma_bar.size(); ++t)
        os << format_number(static_cast<double>(t) / sample_rate) << ','
           << format_number(esp.sigma_bar[t]) << '\n';
}

void write_silhouette_csv(const std::string& path, const SilhouetteSeries& series,
                          double sample_rate)
{
    auto os = open_out(path);
    os << "t,s\n";
    for (std::size_t t = 0; t < series.s.size(); ++t)
        os << format_number(static_cast<double>(t) / sample_rate) << ',' << format_number(series.s[t])
           << '\n';
}

void write_body_csv(const std::string& path, const BodyAccuracy& body)
{
    auto os = open_out(path);
    os << "joint,max_accuracy\n";
    for (std::size_t j = 0; j < body.per_joint.size(); ++j)
        os << j << ',' << format_number(body.per_joint[j]) << '\n';
    os << "all," << format_number(body.all_channels) << '\n';
}

} // namespace peck
