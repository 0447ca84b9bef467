#include "peck/cli.hpp"

#include "peck/config.hpp"
#include "peck/error.hpp"
#include "peck/format.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace peck {

namespace {

namespace fs = std::filesystem;

struct Common {
    std::string config;
    std::uint64_t seed = 0;
    std::string out = ".";
    std::size_t jobs = 0;
    std::string metric;
    std::string input; // metrics: time-series dump
};

RunConfig load(const Common& c)
{
    RunConfig rc = c.config.empty() ? default_config() : load_config(c.config);
    rc.experiment.episode.seed = c.seed;
    rc.experiment.train.seed = c.seed;
    return rc;
}

fs::path out_dir(const Common& c)
{
    std::error_code ec;
    fs::create_directories(c.out, ec);
    if (ec)
        throw IoError("cannot create output directory " + c.out + ": " + ec.message());
    return fs::path(c.out);
}

std::vector<Metric> chosen_metrics(const Common& c, const RunConfig& rc)
{
    if (c.metric.empty())
        return rc.metrics;
    return {parse_metric(c.metric)};
}

int budget_exit(std::size_t failures, std::size_t cells, const RunConfig& rc)
{
    std::cout << "cells " << cells << ", failed " << failures << '\n';
    if (failures > rc.allowed_failures(cells)) {
        std::cerr << "simulation failures exceed the budget (" << rc.allowed_failures(cells)
                  << " allowed)\n";
        return 2;
    }
    return 0;
}

void write_failures(const fs::path& path, const std::vector<CellResult>& cells)
{
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open " + path.string() + " for writing");
    os << "cell,seed,failed,error\n";
    for (std::size_t k = 0; k < cells.size(); ++k)
        os << k << ',' << cells[k].seed << ',' << (cells[k].failed ? 1 : 0) << ",\""
           << cells[k].error << "\"\n";
}

int cmd_simulate(const Common& c)
{
    const RunConfig rc = load(c);
    const Experiment& e = rc.experiment;
    const fs::path dir = out_dir(c);
    try {
        const Dataset ds = build_dataset(e.chain, e.plates, e.contact, e.signal, e.episode);
        write_dataset_csv((dir / "series.csv").string(), ds);
        std::cout << "wrote " << ds.episodes.size() << " episodes to " << (dir / "series.csv").string()
                  << '\n';
    } catch (const SimulationError& err) {
        std::cerr << "simulation failed: " << err.what() << '\n';
        return budget_exit(1, 1, rc);
    }
    return 0;
}

int cmd_sweep(const Common& c)
{
    const RunConfig rc = load(c);
    const auto metrics = chosen_metrics(c, rc);
    const fs::path dir = out_dir(c);
    SweepOptions opts;
    opts.jobs = c.jobs;
    const SweepResult res = run_sweep(rc.experiment, rc.grid, c.seed, metrics, opts, rc.hash);
    for (const Heatmap& h : res.maps)
        export_heatmap(h, (dir / ("heatmap_" + h.label + "_" + metric_name(h.metric) + ".csv")).string());
    write_failures(dir / "sweep_cells.csv", res.cells);
    return budget_exit(res.failures, res.cells.size(), rc);
}

int cmd_morphology(const Common& c)
{
    const RunConfig rc = load(c);
    const fs::path dir = out_dir(c);
    SweepOptions opts;
    opts.jobs = c.jobs;
    const MorphologyResult res = run_morphology_sweep(rc.experiment, rc.variant, c.seed, opts, rc.hash);
    std::vector<const Heatmap*> maps{&res.lp, &res.hm, &res.product};
    if (!c.metric.empty()) {
        const Metric m = parse_metric(c.metric);
        if (m == Metric::esp)
            throw ConfigError("morphology sweeps report lp, hm and product only");
        maps = {m == Metric::lp ? &res.lp : m == Metric::hm ? &res.hm : &res.product};
    }
    for (const Heatmap* h : maps)
        export_heatmap(*h, (dir / ("morphology_" + metric_name(h->metric) + ".csv")).string());
    write_failures(dir / "morphology_cells.csv", res.cells);
    return budget_exit(res.failures, res.cells.size(), rc);
}

int cmd_metrics(const Common& c)
{
    if (c.input.empty())
        throw ConfigError("metrics needs --input <series.csv>");
    const RunConfig rc = load(c);
    const Experiment& e = rc.experiment;
    const Dataset ds = read_dataset_csv(c.input, e.episode.sample_rate, e.signal.period);
    if (ds.classes != e.episode.classes || ds.n_init != e.episode.n_init)
        throw ConfigError("dump does not match the configured class and initial-state counts");
    const fs::path dir = out_dir(c);
    const auto metrics = chosen_metrics(c, rc);
    const auto has = [&](Metric m) { return std::find(metrics.begin(), metrics.end(), m) != metrics.end(); };

    nlohmann::ordered_json summary;
    summary["seed"] = c.seed;
    summary["config_hash"] = rc.hash;
    if (has(Metric::lp) || has(Metric::hm) || has(Metric::product)) {
        const AccuracyCurve curve = accuracy_curve(ds, e.episode, e.train);
        write_curve_csv((dir / "accuracy_curve.csv").string(), curve);
        const double lp = max_accuracy(curve), hm = haptic_memory(curve).value;
        summary["max_accuracy"] = lp;
        summary["haptic_memory"] = hm;
        summary["product"] = lp * hm;
    }
    if (has(Metric::esp)) {
        const EspReport esp = esp_index(ds);
        write_esp_csv((dir / "esp.csv").string(), esp, ds.sample_rate);
        summary["esp_index"] = esp.index;
        summary["esp_holds"] = esp.holds;
    }
    const SilhouetteSeries sil = silhouette_timeseries(ds, {}, 1e-9, c.seed);
    write_silhouette_csv((dir / "silhouette.csv").string(), sil, ds.sample_rate);
    summary["silhouette_max"] = sil.s_max;
    summary["silhouette_argmax_time"] = sil.argmax_time;

    std::ofstream os(dir / "metrics.json");
    if (!os)
        throw IoError("cannot write " + (dir / "metrics.json").string());
    os << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return 0;
}

int cmd_realtime(const Common& c)
{
    const RunConfig rc = load(c);
    const fs::path dir = out_dir(c);
    std::vector<RealtimeResult> table;
    try {
        table = realtime_table(rc.experiment, rc.realtime);
    } catch (const SimulationError& err) {
        std::cerr << "simulation failed: " << err.what() << '\n';
        return budget_exit(1, 1, rc);
    }
    for (const auto& r : table) {
        write_realtime_csv((dir / ("realtime_" + std::to_string(r.window_stride) + ".csv")).string(), r);
        std::cout << "dt' = " << r.window_stride << ": match rate " << format_number(r.match_rate) << '\n';
    }
    write_realtime_table_csv((dir / "realtime_table.csv").string(), table);
    return 0;
}

int cmd_grids(const Common& c)
{
    const RunConfig rc = load(c);
    std::string text = "axis,index,value\n";
    const auto emit = [&text](const char* axis, const std::vector<double>& v) {
        for (std::size_t k = 0; k < v.size(); ++k) {
            text += std::string(axis) + ',' + std::to_string(k) + ',';
            append_number(text, v[k]);
            text += '\n';
        }
    };
    emit("stiffness", rc.grid.stiffness);
    emit("damping", rc.grid.damping);
    std::vector<double> amp, per;
    for (const auto& s : rc.grid.inputs) {
        amp.push_back(s.amplitude_deg);
        per.push_back(s.period);
    }
    emit("input_amplitude_deg", amp);
    emit("input_period", per);
    std::cout << text;
    const fs::path dir = out_dir(c);
    std::ofstream os(dir / "grids.csv");
    if (!(os << text))
        throw IoError("cannot write " + (dir / "grids.csv").string());
    return 0;
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"peck: tendon-driven neck reservoir workbench"};
    app.require_subcommand(1);
    Common common;

    const auto add_common = [&common](CLI::App* sub) {
        sub->add_option("--config", common.config, "JSON configuration file");
        sub->add_option("--seed", common.seed, "run seed")->required();
        sub->add_option("--out", common.out, "output directory");
        sub->add_option("--jobs", common.jobs, "worker threads (0 = all cores)");
        sub->add_option("--metric", common.metric, "lp, hm, esp or product")
            ->check(CLI::IsMember({"lp", "hm", "esp", "product"}));
    };
    struct Entry {
        const char* name;
        const char* help;
        int (*fn)(const Common&);
    };
    const Entry entries[] = {
        {"simulate", "simulate every episode and dump the time series", cmd_simulate},
        {"sweep", "viscoelasticity x input sweep to heatmaps", cmd_sweep},
        {"morphology", "heterogeneous viscoelasticity sweep", cmd_morphology},
        {"metrics", "recompute metrics from a time-series dump", cmd_metrics},
        {"realtime", "windowed real-time inference demo", cmd_realtime},
        {"grids", "print grid values", cmd_grids},
    };
    std::vector<std::pair<CLI::App*, int (*)(const Common&)>> subs;
    for (const auto& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        add_common(sub);
        if (std::string(e.name) == "metrics")
            sub->add_option("--input", common.input, "time-series CSV from simulate")->required();
        subs.emplace_back(sub, e.fn);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        for (const auto& [sub, fn] : subs)
            if (sub->parsed())
                return fn(common);
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 3;
    } catch (const SimulationError& e) {
        std::cerr << "simulation failed: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace peck
