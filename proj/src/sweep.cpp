#include "peck/sweep.hpp"

#include "peck/error.hpp"
#include "peck/format.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <mutex>
#include <thread>

namespace peck {

namespace {

constexpr double nan_value = std::numeric_limits<double>::quiet_NaN();

std::ofstream open_out(const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path + " for writing");
    return os;
}

bool wants(const std::vector<Metric>& metrics, Metric m)
{
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
}

nlohmann::json input_json(const InputSignal& s)
{
    return {{"amplitude_deg", s.amplitude_deg}, {"period", s.period}};
}

std::string input_label(const InputSignal& s)
{
    return "A" + format_number(s.amplitude_deg) + "_T" + format_number(s.period);
}

Heatmap blank_map(Metric metric, std::vector<double> rows, std::vector<double> cols,
                  std::uint64_t run_seed, const std::string& hash, const std::string& grid)
{
    Heatmap h;
    h.metric = metric;
    h.rows = std::move(rows);
    h.cols = std::move(cols);
    h.values = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(h.rows.size()),
                                         static_cast<Eigen::Index>(h.cols.size()), nan_value);
    h.seeds.assign(h.rows.size() * h.cols.size(), 0);
    h.run_seed = run_seed;
    h.config_hash = hash;
    h.grid_json = grid;
    return h;
}

std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ','))
        out.push_back(field);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

double parse_cell(const std::string& s, const std::string& path)
{
    if (s == "NA")
        return nan_value;
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ": malformed number '" + s + "'");
    }
}

} // namespace

void Experiment::validate() const
{
    chain.validate();
    contact.validate();
    signal.validate();
    episode.validate(signal);
    train.validate();
    if (plates.size() != episode.classes)
        throw ConfigError("plate count does not match the class count C");
    for (const auto& p : plates)
        p.validate();
}

std::vector<double> gen_grid(double lo, double hi, std::size_t n, Spacing spacing)
{
    if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
        throw ConfigError("grid needs 0 < lo < hi");
    if (n < 2)
        throw ConfigError("grid needs at least two points");
    std::vector<double> v(n);
    const double last = static_cast<double>(n - 1);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = static_cast<double>(k) / last;
        v[k] = spacing == Spacing::geometric ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
    }
    v.front() = lo;
    v.back() = hi;
    return v;
}

std::vector<InputSignal> default_input_configs(double pulley_radius)
{
    std::vector<InputSignal> out;
    for (double period : {0.5, 1.0, 2.0})
        for (double amplitude : {30.0, 60.0, 90.0, 120.0}) {
            InputSignal s;
            s.amplitude_deg = amplitude;
            s.period = period;
            s.pulley_radius = pulley_radius;
            out.push_back(s);
        }
    return out;
}

SweepGrid SweepGrid::defaults()
{
    return {gen_grid(0.1, 17.5, 15), gen_grid(0.02, 1.5, 15), default_input_configs()};
}

void SweepGrid::validate() const
{
    const auto check = [](const std::vector<double>& v, const char* name) {
        if (v.empty())
            throw ConfigError(std::string(name) + " grid is empty");
        for (std::size_t k = 0; k < v.size(); ++k) {
            if (!(v[k] > 0.0) || !std::isfinite(v[k]))
                throw ConfigError(std::string(name) + " grid values must be positive");
            if (k > 0 && !(v[k] > v[k - 1]))
                throw ConfigError(std::string(name) + " grid must be strictly increasing");
        }
    };
    check(stiffness, "stiffness");
    check(damping, "damping");
    if (inputs.empty())
        throw ConfigError("sweep needs at least one input configuration");
    for (const auto& s : inputs)
        s.validate();
    if (stiffness.size() >= (1u << 20) || damping.size() >= (1u << 20) || inputs.size() >= (1u << 20))
        throw ConfigError("grid axis too long");
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::size_t i, std::size_t j, std::size_t k)
{
    const std::uint64_t idx = (static_cast<std::uint64_t>(k) << 40) | (static_cast<std::uint64_t>(j) << 20)
                              | static_cast<std::uint64_t>(i);
    // splitmix64 finaliser: a bijection, so distinct indices give distinct seeds.
    std::uint64_t z = run_seed + (idx + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

Metric parse_metric(const std::string& name)
{
    if (name == "lp")
        return Metric::lp;
    if (name == "hm")
        return Metric::hm;
    if (name == "esp")
        return Metric::esp;
    if (name == "product")
        return Metric::product;
    throw ConfigError("unknown metric '" + name + "' (expected lp, hm, esp or product)");
}

std::string metric_name(Metric m)
{
    switch (m) {
    case Metric::lp: return "lp";
    case Metric::hm: return "hm";
    case Metric::esp: return "esp";
    case Metric::product: return "product";
    }
    return "?";
}

double CellResult::value(Metric m) const
{
    switch (m) {
    case Metric::lp: return lp;
    case Metric::hm: return hm;
    case Metric::esp: return esp;
    case Metric::product: return lp * hm;
    }
    return nan_value;
}

CellResult evaluate_cell(const Experiment& experiment, std::uint64_t seed,
                         const std::vector<Metric>& metrics)
{
    Experiment e = experiment;
    e.episode.seed = seed;
    e.train.seed = seed;
    e.validate();

    const bool lp = wants(metrics, Metric::lp) || wants(metrics, Metric::product);
    const bool hm = wants(metrics, Metric::hm) || wants(metrics, Metric::product);
    CellResult r;
    r.seed = seed;
    try {
        const Dataset ds = build_dataset(e.chain, e.plates, e.contact, e.signal, e.episode);
        if (lp || hm) {
            CurveOptions opts;
            if (!lp)
                opts.last_interval = std::max<std::size_t>(1, e.episode.intervals(e.signal.period) / 4);
            const AccuracyCurve curve = accuracy_curve(ds, e.episode, e.train, opts);
            if (lp)
                r.lp = max_accuracy(curve);
            if (hm)
                r.hm = haptic_memory(curve).value;
        }
        if (wants(metrics, Metric::esp))
            r.esp = esp_index(ds).index;
    } catch (const SimulationError& err) {
        r = CellResult{};
        r.seed = seed;
        r.failed = true;
        r.error = err.what();
    }
    return r;
}

void Heatmap::validate() const
{
    if (rows.empty() || cols.empty())
        throw std::invalid_argument("heatmap axes must be non-empty");
    if (values.rows() != static_cast<Eigen::Index>(rows.size())
        || values.cols() != static_cast<Eigen::Index>(cols.size()))
        throw std::invalid_argument("heatmap values do not match its axes");
    if (seeds.size() != rows.size() * cols.size())
        throw std::invalid_argument("heatmap needs one seed per cell");
}

std::vector<CellResult> run_cells(std::size_t count,
                                  const std::function<CellResult(std::size_t)>& fn,
                                  const SweepOptions& options)
{
    std::vector<std::size_t> order = options.order;
    if (order.empty()) {
        order.resize(count);
        for (std::size_t k = 0; k < count; ++k)
            order[k] = k;
    } else {
        std::vector<std::size_t> sorted = order;
        std::sort(sorted.begin(), sorted.end());
        bool permutation = sorted.size() == count;
        for (std::size_t k = 0; permutation && k < count; ++k)
            permutation = sorted[k] == k;
        if (!permutation)
            throw std::invalid_argument("run_cells: order must be a permutation of the cells");
    }

    std::vector<CellResult> results(count);
    std::size_t jobs = options.jobs ? options.jobs : std::max(1u, std::thread::hardware_concurrency());
    jobs = std::min(jobs, std::max<std::size_t>(count, 1));

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= count)
                return;
            try {
                results[order[k]] = fn(order[k]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error)
                    first_error = std::current_exception();
                next = count;
            }
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t)
            pool.emplace_back(worker);
        for (auto& th : pool)
            th.join();
    }
    if (first_error)
        std::rethrow_exception(first_error);
    return results;
}

SweepResult run_sweep(const Experiment& base, const SweepGrid& grid, std::uint64_t run_seed,
                      const std::vector<Metric>& metrics, const SweepOptions& options,
                      const std::string& config_hash)
{
    grid.validate();
    if (metrics.empty())
        throw ConfigError("no metric requested");
    base.validate();
    const std::size_t ns = grid.stiffness.size(), nd = grid.damping.size();

    SweepResult out;
    out.cells = run_cells(
        grid.cells(),
        [&](std::size_t idx) {
            const std::size_t j = idx % nd, i = (idx / nd) % ns, k = idx / (nd * ns);
            Experiment e = base;
            e.chain.set_uniform_viscoelasticity(grid.stiffness[i], grid.damping[j]);
            const double radius = e.signal.pulley_radius;
            e.signal = grid.inputs[k];
            e.signal.pulley_radius = radius;
            return evaluate_cell(e, derive_seed(run_seed, i, j, k), metrics);
        },
        options);

    nlohmann::json gj;
    gj["stiffness"] = grid.stiffness;
    gj["damping"] = grid.damping;
    gj["inputs"] = nlohmann::json::array();
    for (const auto& s : grid.inputs)
        gj["inputs"].push_back(input_json(s));
    const std::string grid_text = gj.dump();

    for (const auto& c : out.cells)
        out.failures += c.failed;
    for (std::size_t k = 0; k < grid.inputs.size(); ++k)
        for (Metric m : metrics) {
            Heatmap h = blank_map(m, grid.stiffness, grid.damping, run_seed, config_hash, grid_text);
            h.label = input_label(grid.inputs[k]);
            for (std::size_t i = 0; i < ns; ++i)
                for (std::size_t j = 0; j < nd; ++j) {
                    const CellResult& c = out.cells[(k * ns + i) * nd + j];
                    h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c.value(m);
                    h.seeds[i * nd + j] = c.seed;
                }
            out.maps.push_back(std::move(h));
        }
    return out;
}

MorphologyMode parse_morphology_mode(const std::string& name)
{
    if (name == "uniform")
        return MorphologyMode::uniform;
    if (name == "cranial-caudal" || name == "cranial_caudal")
        return MorphologyMode::cranial_caudal;
    if (name == "three-region" || name == "three_region")
        return MorphologyMode::three_region;
    throw ConfigError("unknown morphology mode '" + name + "'");
}

std::string morphology_mode_name(MorphologyMode mode)
{
    switch (mode) {
    case MorphologyMode::uniform: return "uniform";
    case MorphologyMode::cranial_caudal: return "cranial-caudal";
    case MorphologyMode::three_region: return "three-region";
    }
    return "?";
}

void MorphologyVariant::validate(std::size_t n_joints) const
{
    if (!regions.empty()) {
        if (regions.size() != n_joints)
            throw ConfigError("region labels must cover every joint");
        for (std::size_t j = 1; j < regions.size(); ++j)
            if (static_cast<int>(regions[j]) < static_cast<int>(regions[j - 1]))
                throw ConfigError("regions must run cranial, middle, caudal from the head");
    }
    if (!(fixed_stiffness > 0.0) || !(fixed_damping > 0.0))
        throw ConfigError("fixed (S, D) must be positive");
    for (const auto* axis : {&row_ratios, &col_ratios}) {
        if (axis->empty())
            throw ConfigError("ratio grid is empty");
        for (double r : *axis)
            if (!(r > 0.0) || !std::isfinite(r))
                throw ConfigError("ratios must be positive");
    }
}

ChainConfig MorphologyVariant::apply(const ChainConfig& base, double row_ratio, double col_ratio) const
{
    ChainConfig c = base;
    if (!regions.empty())
        c.regions = regions;
    std::vector<Region> varied;
    for (Region r : {Region::cranial, Region::middle, Region::caudal})
        if (r != fixed_region)
            varied.push_back(r);
    for (std::size_t j = 0; j < c.n_joints; ++j) {
        double s = fixed_stiffness, d = fixed_damping;
        const Region r = c.regions.at(j);
        switch (mode) {
        case MorphologyMode::uniform:
            s *= row_ratio;
            d *= col_ratio;
            break;
        case MorphologyMode::cranial_caudal:
            if (r == Region::cranial) {
                s *= row_ratio;
                d *= col_ratio;
            }
            break;
        case MorphologyMode::three_region:
            if (r == varied[0]) {
                s *= row_ratio;
                d *= row_ratio;
            } else if (r == varied[1]) {
                s *= col_ratio;
                d *= col_ratio;
            }
            break;
        }
        c.joints[j].stiffness = s;
        c.joints[j].damping = d;
    }
    if (ligament)
        c.ligament = ligament_config;
    return c;
}

std::vector<FixedCondition> fixed_presets()
{
    const auto s = gen_grid(0.1, 17.5, 15);
    const auto d = gen_grid(0.02, 1.5, 15);
    return {{"F0", s[4], d[4]}, {"F1", s[5], d[5]}, {"F", s[6], d[6]}, {"F2", s[7], d[7]}};
}

Heatmap product_map(const Heatmap& a, const Heatmap& b)
{
    a.validate();
    b.validate();
    if (a.rows != b.rows || a.cols != b.cols)
        throw std::invalid_argument("product_map: axes differ");
    Heatmap p = a;
    p.metric = Metric::product;
    p.values = a.values.cwiseProduct(b.values);
    return p;
}

MorphologyResult run_morphology_sweep(const Experiment& base, const MorphologyVariant& variant,
                                      std::uint64_t run_seed, const SweepOptions& options,
                                      const std::string& config_hash)
{
    base.validate();
    variant.validate(base.chain.n_joints);
    const std::size_t nr = variant.row_ratios.size(), nc = variant.col_ratios.size();
    const std::vector<Metric> metrics{Metric::lp, Metric::hm};

    MorphologyResult out;
    out.cells = run_cells(
        nr * nc,
        [&](std::size_t idx) {
            const std::size_t i = idx / nc, j = idx % nc;
            Experiment e = base;
            e.chain = variant.apply(base.chain, variant.row_ratios[i], variant.col_ratios[j]);
            return evaluate_cell(e, derive_seed(run_seed, i, j, 0), metrics);
        },
        options);

    nlohmann::json gj;
    gj["mode"] = morphology_mode_name(variant.mode);
    gj["fixed_stiffness"] = variant.fixed_stiffness;
    gj["fixed_damping"] = variant.fixed_damping;
    gj["row_ratios"] = variant.row_ratios;
    gj["col_ratios"] = variant.col_ratios;
    gj["ligament"] = variant.ligament;
    gj["input"] = input_json(base.signal);
    const std::string grid_text = gj.dump();

    const bool three = variant.mode == MorphologyMode::three_region;
    for (Heatmap* h : {&out.lp, &out.hm}) {
        *h = blank_map(h == &out.lp ? Metric::lp : Metric::hm, variant.row_ratios, variant.col_ratios,
                       run_seed, config_hash, grid_text);
        h->row_name = three ? "ratio_a" : "S_ratio";
        h->col_name = three ? "ratio_b" : "D_ratio";
        h->label = morphology_mode_name(variant.mode);
        for (std::size_t i = 0; i < nr; ++i)
            for (std::size_t j = 0; j < nc; ++j) {
                const CellResult& c = out.cells[i * nc + j];
                h->values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    c.value(h->metric);
                h->seeds[i * nc + j] = c.seed;
            }
    }
    out.product = product_map(out.lp, out.hm);
    for (const auto& c : out.cells)
        out.failures += c.failed;
    return out;
}

void export_heatmap(const Heatmap& map, const std::string& path)
{
    map.validate();
    {
        auto os = open_out(path);
        std::string line = map.row_name + "\\" + map.col_name;
        for (double c : map.cols) {
            line += ',';
            append_number(line, c);
        }
        os << line << '\n';
        for (std::size_t i = 0; i < map.rows.size(); ++i) {
            line.clear();
            append_number(line, map.rows[i]);
            for (std::size_t j = 0; j < map.cols.size(); ++j) {
                line += ',';
                append_number(line, map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            }
            os << line << '\n';
        }
        if (!os)
            throw IoError("write failed for " + path);
    }

    nlohmann::ordered_json meta;
    meta["metric"] = metric_name(map.metric);
    meta["label"] = map.label;
    meta["row_axis"] = map.row_name;
    meta["col_axis"] = map.col_name;
    meta["seed"] = map.run_seed;
    meta["config_hash"] = map.config_hash;
    meta["grid"] = map.grid_json.empty() ? nlohmann::json::object() : nlohmann::json::parse(map.grid_json);
    meta["cell_seeds"] = map.seeds;
    meta["tool_version"] = tool_version;
    auto os = open_out(path + ".json");
    os << meta.dump(2) << '\n';
    if (!os)
        throw IoError("write failed for " + path + ".json");
}

Heatmap read_heatmap_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(is, line))
        throw IoError(path + ": empty file");
    const auto header = split_csv(line);
    if (header.size() < 2)
        throw IoError(path + ": header needs at least one column value");
    Heatmap h;
    const auto slash = header[0].find('\\');
    if (slash != std::string::npos) {
        h.row_name = header[0].substr(0, slash);
        h.col_name = header[0].substr(slash + 1);
    }
    for (std::size_t c = 1; c < header.size(); ++c)
        h.cols.push_back(parse_cell(header[c], path));
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        const auto f = split_csv(line);
        if (f.size() != header.size())
            throw IoError(path + ": ragged row");
        h.rows.push_back(parse_cell(f[0], path));
        std::vector<double> v;
        for (std::size_t c = 1; c < f.size(); ++c)
            v.push_back(parse_cell(f[c], path));
        rows.push_back(std::move(v));
    }
    h.values.resize(static_cast<Eigen::Index>(h.rows.size()), static_cast<Eigen::Index>(h.cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < h.cols.size(); ++j)
            h.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    h.seeds.assign(h.rows.size() * h.cols.size(), 0);

    std::ifstream ms(path + ".json");
    if (ms) {
        try {
            const auto meta = nlohmann::json::parse(ms);
            h.metric = parse_metric(meta.at("metric").get<std::string>());
            h.label = meta.value("label", "");
            h.run_seed = meta.at("seed").get<std::uint64_t>();
            h.config_hash = meta.value("config_hash", "");
            h.grid_json = meta.at("grid").dump();
            const auto seeds = meta.at("cell_seeds").get<std::vector<std::uint64_t>>();
            if (seeds.size() == h.seeds.size())
                h.seeds = seeds;
        } catch (const nlohmann::json::exception& e) {
            throw IoError(path + ".json: " + e.what());
        }
    }
    return h;
}

void RealtimeSpec::validate(std::size_t classes) const
{
    if (schedule.empty())
        throw ConfigError("plate schedule is empty");
    for (int c : schedule)
        if (c < 0 || static_cast<std::size_t>(c) >= classes)
            throw ConfigError("plate schedule names an unknown class");
    if (periods_per_plate < 1)
        throw ConfigError("periods per plate must be >= 1");
    if (window_strides.empty())
        throw ConfigError("no window strides given");
}

int WindowedReadout::infer(const Eigen::MatrixXd& period_frames, std::size_t i) const
{
    if (i < 1 || i > models.size())
        throw std::out_of_range("realtime: no readout trained for window " + std::to_string(i));
    const auto samples = window_samples(i, window_stride, stride);
    const auto channels = period_frames.cols();
    const auto per = static_cast<Eigen::Index>(samples.size());
    Eigen::VectorXd x(channels * per);
    for (Eigen::Index c = 0; c < channels; ++c)
        for (Eigen::Index k = 0; k < per; ++k)
            x[c * per + k] = period_frames(static_cast<Eigen::Index>(samples[static_cast<std::size_t>(k)]), c);
    return predict(models[i - 1], x);
}

WindowedReadout train_windowed(const Dataset& ds, const EpisodeSpec& spec, const TrainSpec& train_spec,
                               std::size_t window_stride)
{
    if (window_stride == 0 || window_stride % spec.stride != 0
        || ds.samples_per_period % window_stride != 0)
        throw ConfigError("window stride must be a multiple of dt dividing T f_s");
    WindowedReadout r;
    r.window_stride = window_stride;
    r.stride = spec.stride;
    r.quant_bits = spec.quant_bits;
    std::vector<std::size_t> all(ds.windows.size());
    for (std::size_t w = 0; w < all.size(); ++w)
        all[w] = w;
    r.calibration = calibrate(ds, all);
    const Dataset q = quantize_dataset(ds, spec.quant_bits, r.calibration);
    for (std::size_t i = 1; i * window_stride <= ds.samples_per_period; ++i) {
        const FeatureSet f = assemble_window_features(q, i, window_stride, spec.stride);
        r.models.push_back(train(f.x, f.y, train_spec, ds.classes));
    }
    return r;
}

RealtimeResult realtime_infer(const Experiment& experiment, const WindowedReadout& readout,
                              const RealtimeSpec& rt)
{
    experiment.validate();
    rt.validate(experiment.plates.size());
    const EpisodeSpec& spec = experiment.episode;
    const std::size_t spp = spec.samples_per_period(experiment.signal.period);
    if (readout.models.size() * readout.window_stride != spp)
        throw std::invalid_argument("realtime: readout does not cover the period");

    std::vector<Environment> periods;
    std::vector<int> actual;
    const Environment lowered{std::nullopt, experiment.contact};
    for (std::size_t p = 0; p < spec.washout; ++p) {
        periods.push_back({experiment.plates[static_cast<std::size_t>(rt.schedule.front())], experiment.contact});
        actual.push_back(-1);
    }
    for (int c : rt.schedule) {
        periods.push_back(lowered);
        actual.push_back(-1);
        for (std::size_t p = 0; p < rt.periods_per_plate; ++p) {
            periods.push_back({experiment.plates[static_cast<std::size_t>(c)], experiment.contact});
            actual.push_back(c);
        }
    }

    ChainState init{experiment.chain.rest_posture(),
                    Eigen::VectorXd::Zero(static_cast<Eigen::Index>(experiment.chain.n_joints)), 0.0};
    const RawSeries series = run_schedule(experiment.chain, periods, init, experiment.signal, spec);
    const Eigen::MatrixXd q = quantize(series.frames, readout.quant_bits, readout.calibration);

    RealtimeResult out;
    out.window_stride = readout.window_stride;
    std::size_t hits = 0;
    const auto rows = static_cast<Eigen::Index>(spp);
    for (std::size_t p = 0; p < periods.size(); ++p) {
        const Eigen::MatrixXd frames = q.middleRows(static_cast<Eigen::Index>(p) * rows, rows);
        for (std::size_t i = 1; i <= readout.models.size(); ++i) {
            RealtimeStep s;
            s.period = p;
            s.window = i;
            s.t = series.time[p * spp + i * readout.window_stride - 1];
            s.actual = actual[p];
            s.predicted = readout.infer(frames, i);
            if (s.actual >= 0) {
                ++out.counted;
                hits += s.predicted == s.actual;
            }
            out.steps.push_back(s);
        }
    }
    out.match_rate = out.counted ? static_cast<double>(hits) / static_cast<double>(out.counted) : 0.0;
    return out;
}

std::vector<RealtimeResult> realtime_table(const Experiment& experiment, const RealtimeSpec& rt)
{
    experiment.validate();
    rt.validate(experiment.plates.size());
    const Dataset ds = build_dataset(experiment.chain, experiment.plates, experiment.contact,
                                     experiment.signal, experiment.episode);
    std::vector<RealtimeResult> out;
    for (std::size_t w : rt.window_strides)
        out.push_back(realtime_infer(experiment, train_windowed(ds, experiment.episode, experiment.train, w), rt));
    return out;
}

void write_realtime_csv(const std::string& path, const RealtimeResult& result)
{
    auto os = open_out(path);
    os << "t,period,window,actual,predicted\n";
    std::string line;
    for (const auto& s : result.steps) {
        line.clear();
        append_number(line, s.t);
        line += ',' + std::to_string(s.period) + ',' + std::to_string(s.window) + ','
                + (s.actual < 0 ? std::string("NA") : std::to_string(s.actual)) + ','
                + std::to_string(s.predicted);
        os << line << '\n';
    }
    if (!os)
        throw IoError("write failed for " + path);
}

void write_realtime_table_csv(const std::string& path, const std::vector<RealtimeResult>& table)
{
    auto os = open_out(path);
    os << "window_stride,match_rate,counted\n";
    for (const auto& r : table)
        os << r.window_stride << ',' << format_number(r.match_rate) << ',' << r.counted << '\n';
    if (!os)
        throw IoError("write failed for " + path);
}

} // namespace peck
