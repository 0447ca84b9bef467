#include "peck/config.hpp"

#include "peck/error.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace peck {

namespace {

using json = nlohmann::json;

void allow_keys(const json& obj, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!obj.is_object())
        throw ConfigError(where + " must be an object");
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : obj.items())
        if (!known.count(key))
            throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key))
        return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

// A scalar broadcast to `n` entries or an array of exactly `n` entries.
void read_per_joint(const json& obj, const char* key, std::vector<double>& out, std::size_t n,
                    const std::string& where)
{
    if (!obj.contains(key))
        return;
    const json& v = obj.at(key);
    if (v.is_number()) {
        out.assign(n, v.get<double>());
    } else if (v.is_array()) {
        if (v.size() != n)
            throw ConfigError(where + "." + key + " needs " + std::to_string(n) + " entries");
        try {
            out = v.get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError(where + "." + key + " must hold numbers");
        }
    } else {
        throw ConfigError(where + "." + key + " must be a number or an array");
    }
}

Region parse_region(const std::string& s)
{
    if (s == "cranial")
        return Region::cranial;
    if (s == "middle")
        return Region::middle;
    if (s == "caudal")
        return Region::caudal;
    throw ConfigError("unknown region '" + s + "'");
}

struct ChainDefaults {
    double plate_gap = 0.02;
    double init_perturbation = 0.05;
};

ChainDefaults parse_chain(const json& j, ChainConfig& c)
{
    const std::string w = "chain";
    allow_keys(j, {"preset", "n_joints", "stiffness", "damping", "link_length", "link_mass", "gravity",
                   "base_angle", "rest_angle", "limit_range", "tendon", "ligament", "limits", "regions"},
               w);
    std::string preset = "default";
    read(j, "preset", preset, w);
    double stiffness = 1.0, damping = 0.1;
    ChainDefaults defaults;
    if (preset == "default") {
        std::size_t n = 17;
        read(j, "n_joints", n, w);
        read(j, "stiffness", stiffness, w);
        read(j, "damping", damping, w);
        c = make_chain(n, stiffness, damping);
    } else if (preset == "desk") {
        if (j.contains("n_joints"))
            throw ConfigError("the desk preset has a fixed joint count");
        stiffness = 17.5;
        damping = 1.5;
        read(j, "stiffness", stiffness, w);
        read(j, "damping", damping, w);
        c = make_desk_chain(stiffness, damping);
        defaults = {0.1, 0.3};
    } else {
        throw ConfigError("unknown chain preset '" + preset + "'");
    }
    const std::size_t n = c.n_joints;
    read_per_joint(j, "link_length", c.link_length, n, w);
    read_per_joint(j, "link_mass", c.link_mass, n, w);
    read(j, "gravity", c.gravity, w);
    read(j, "base_angle", c.base_angle, w);

    std::vector<double> rest(n), range(n, 0.6);
    for (std::size_t k = 0; k < n; ++k)
        rest[k] = c.joints[k].rest_angle;
    read_per_joint(j, "rest_angle", rest, n, w);
    read_per_joint(j, "limit_range", range, n, w);
    for (std::size_t k = 0; k < n; ++k) {
        c.joints[k].rest_angle = rest[k];
        c.joints[k].limit_lo = rest[k] - range[k];
        c.joints[k].limit_hi = rest[k] + range[k];
    }

    if (j.contains("regions")) {
        std::vector<std::string> names;
        read(j, "regions", names, w);
        if (names.size() != n)
            throw ConfigError("chain.regions needs one label per joint");
        c.regions.clear();
        for (const auto& s : names)
            c.regions.push_back(parse_region(s));
    }
    if (j.contains("tendon")) {
        const json& t = j.at("tendon");
        const std::string tw = "chain.tendon";
        allow_keys(t, {"enabled", "attachment_joint", "moment_arm", "series_stiffness"}, tw);
        read(t, "enabled", c.tendon.enabled, tw);
        read(t, "attachment_joint", c.tendon.attachment_joint, tw);
        read_per_joint(t, "moment_arm", c.tendon.moment_arms, n, tw);
        read(t, "series_stiffness", c.tendon.series_stiffness, tw);
    }
    if (c.tendon.attachment_joint >= n)
        throw ConfigError("tendon attachment joint out of range");
    zero_tendon_at_rest(c);
    if (j.contains("ligament")) {
        const json& l = j.at("ligament");
        const std::string lw = "chain.ligament";
        allow_keys(l, {"enabled", "base_stiffness", "geometric_ratio", "preload"}, lw);
        read(l, "enabled", c.ligament.enabled, lw);
        read(l, "base_stiffness", c.ligament.base_stiffness, lw);
        read(l, "geometric_ratio", c.ligament.geometric_ratio, lw);
        if (l.contains("preload")) {
            std::string p;
            read(l, "preload", p, lw);
            if (p == "none")
                c.ligament.preload = LigamentPreload::none;
            else if (p == "static_balance")
                c.ligament.preload = LigamentPreload::static_balance;
            else
                throw ConfigError("unknown ligament preload '" + p + "'");
        }
    }
    if (j.contains("limits")) {
        const json& l = j.at("limits");
        allow_keys(l, {"stiffness", "damping"}, "chain.limits");
        read(l, "stiffness", c.limits.stiffness, "chain.limits");
        read(l, "damping", c.limits.damping, "chain.limits");
    }
    c.validate();
    return defaults;
}

void parse_contact(const json& j, ContactParams& p)
{
    const std::string w = "contact";
    allow_keys(j, {"d_min", "d_max", "width", "power", "midpoint", "viscous_friction"}, w);
    read(j, "d_min", p.d_min, w);
    read(j, "d_max", p.d_max, w);
    read(j, "width", p.width, w);
    read(j, "power", p.power, w);
    read(j, "midpoint", p.midpoint, w);
    read(j, "viscous_friction", p.viscous_friction, w);
    p.validate();
}

std::vector<PlateSpec> parse_plates(const json& j, double rest_tip_y, double default_gap)
{
    const std::string w = "plates";
    allow_keys(j, {"stiffness", "damping", "gap", "surface_height"}, w);
    double stiffness = 2000.0;
    std::vector<double> damping{1.0, 10.0, 100.0};
    read(j, "stiffness", stiffness, w);
    read(j, "damping", damping, w);
    if (j.contains("gap") && j.contains("surface_height"))
        throw ConfigError("plates: give either gap or surface_height");
    double height = rest_tip_y - default_gap;
    if (j.contains("gap")) {
        double gap = 0.0;
        read(j, "gap", gap, w);
        height = rest_tip_y - gap;
    }
    read(j, "surface_height", height, w);

    std::vector<PlateSpec> out;
    for (std::size_t k = 0; k < damping.size(); ++k) {
        PlateSpec p;
        p.label = static_cast<int>(k);
        p.stiffness = stiffness;
        p.damping = damping[k];
        p.surface_height = height;
        p.validate();
        out.push_back(p);
    }
    return out;
}

std::vector<double> parse_axis(const json& j, const char* key, std::vector<double> fallback)
{
    if (!j.contains(key))
        return fallback;
    const json& a = j.at(key);
    const std::string w = std::string("grid.") + key;
    if (a.is_array()) {
        try {
            return a.get<std::vector<double>>();
        } catch (const json::exception&) {
            throw ConfigError(w + " must hold numbers");
        }
    }
    allow_keys(a, {"lo", "hi", "n", "spacing"}, w);
    double lo = 0.0, hi = 0.0;
    std::size_t n = 0;
    std::string spacing = "geometric";
    if (!a.contains("lo") || !a.contains("hi") || !a.contains("n"))
        throw ConfigError(w + " needs lo, hi and n");
    read(a, "lo", lo, w);
    read(a, "hi", hi, w);
    read(a, "n", n, w);
    read(a, "spacing", spacing, w);
    if (spacing != "geometric" && spacing != "linear")
        throw ConfigError(w + ".spacing must be geometric or linear");
    return gen_grid(lo, hi, n, spacing == "geometric" ? Spacing::geometric : Spacing::linear);
}

void parse_signal(const json& j, InputSignal& s, const std::string& w)
{
    allow_keys(j, {"amplitude_deg", "period", "pulley_radius", "drift"}, w);
    read(j, "amplitude_deg", s.amplitude_deg, w);
    read(j, "period", s.period, w);
    read(j, "pulley_radius", s.pulley_radius, w);
    read(j, "drift", s.drift, w);
    s.validate();
}

void parse_variant(const json& j, MorphologyVariant& v)
{
    const std::string w = "variant";
    allow_keys(j, {"mode", "regions", "fixed_region", "fixed", "row_ratios", "col_ratios", "ligament",
                   "ligament_config"},
               w);
    if (j.contains("mode")) {
        std::string m;
        read(j, "mode", m, w);
        v.mode = parse_morphology_mode(m);
    }
    if (j.contains("regions")) {
        std::vector<std::string> names;
        read(j, "regions", names, w);
        v.regions.clear();
        for (const auto& s : names)
            v.regions.push_back(parse_region(s));
    }
    if (j.contains("fixed_region")) {
        std::string r;
        read(j, "fixed_region", r, w);
        v.fixed_region = parse_region(r);
    }
    if (j.contains("fixed")) {
        const json& f = j.at("fixed");
        if (f.is_string()) {
            bool found = false;
            for (const auto& p : fixed_presets())
                if (p.name == f.get<std::string>()) {
                    v.fixed_stiffness = p.stiffness;
                    v.fixed_damping = p.damping;
                    found = true;
                }
            if (!found)
                throw ConfigError("unknown fixed condition '" + f.get<std::string>() + "'");
        } else {
            allow_keys(f, {"stiffness", "damping"}, "variant.fixed");
            read(f, "stiffness", v.fixed_stiffness, "variant.fixed");
            read(f, "damping", v.fixed_damping, "variant.fixed");
        }
    }
    read(j, "row_ratios", v.row_ratios, w);
    read(j, "col_ratios", v.col_ratios, w);
    read(j, "ligament", v.ligament, w);
    if (j.contains("ligament_config")) {
        const json& l = j.at("ligament_config");
        const std::string lw = "variant.ligament_config";
        allow_keys(l, {"base_stiffness", "geometric_ratio", "static_balance"}, lw);
        read(l, "base_stiffness", v.ligament_config.base_stiffness, lw);
        read(l, "geometric_ratio", v.ligament_config.geometric_ratio, lw);
        bool balance = false;
        read(l, "static_balance", balance, lw);
        v.ligament_config.preload = balance ? LigamentPreload::static_balance : LigamentPreload::none;
        v.ligament_config.enabled = true;
    }
}

} // namespace

std::size_t RunConfig::allowed_failures(std::size_t cells) const
{
    return static_cast<std::size_t>(std::floor(failure_budget * static_cast<double>(cells) + 1e-9));
}

std::string fnv1a_hex(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RunConfig parse_config(std::string_view text)
{
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
    allow_keys(root, {"chain", "contact", "plates", "signal", "episode", "train", "grid", "variant",
                      "realtime", "metrics", "failure_budget"},
               "configuration");

    RunConfig rc;
    Experiment& e = rc.experiment;
    ChainDefaults defaults;
    if (root.contains("chain"))
        defaults = parse_chain(root.at("chain"), e.chain);
    if (root.contains("contact"))
        parse_contact(root.at("contact"), e.contact);
    const double tip_y = forward_kinematics(e.chain, e.chain.rest_posture()).tip.y;
    e.plates = parse_plates(root.value("plates", json::object()), tip_y, defaults.plate_gap);
    if (root.contains("signal"))
        parse_signal(root.at("signal"), e.signal, "signal");

    e.episode.classes = e.plates.size();
    e.episode.init_perturbation = defaults.init_perturbation;
    if (root.contains("episode")) {
        const json& j = root.at("episode");
        const std::string w = "episode";
        allow_keys(j, {"n_init", "periods", "washout", "n_train", "n_eval", "sample_rate", "stride",
                       "window_stride", "quant_bits", "substeps", "init_perturbation", "random_splits"},
                   w);
        auto& s = e.episode;
        read(j, "n_init", s.n_init, w);
        read(j, "periods", s.periods, w);
        read(j, "washout", s.washout, w);
        read(j, "n_train", s.n_train, w);
        read(j, "n_eval", s.n_eval, w);
        read(j, "sample_rate", s.sample_rate, w);
        read(j, "stride", s.stride, w);
        read(j, "window_stride", s.window_stride, w);
        read(j, "quant_bits", s.quant_bits, w);
        read(j, "substeps", s.substeps, w);
        read(j, "init_perturbation", s.init_perturbation, w);
        read(j, "random_splits", s.random_splits, w);
    }
    if (root.contains("train")) {
        const json& j = root.at("train");
        allow_keys(j, {"learning_rate", "epochs", "l2"}, "train");
        read(j, "learning_rate", e.train.learning_rate, "train");
        read(j, "epochs", e.train.epochs, "train");
        read(j, "l2", e.train.l2_penalty, "train");
    }
    if (root.contains("grid")) {
        const json& j = root.at("grid");
        allow_keys(j, {"stiffness", "damping", "inputs"}, "grid");
        rc.grid.stiffness = parse_axis(j, "stiffness", rc.grid.stiffness);
        rc.grid.damping = parse_axis(j, "damping", rc.grid.damping);
        if (j.contains("inputs")) {
            const json& in = j.at("inputs");
            if (in.is_string()) {
                if (in.get<std::string>() != "default")
                    throw ConfigError("grid.inputs must be \"default\" or a list");
                rc.grid.inputs = default_input_configs(e.signal.pulley_radius);
            } else if (in.is_array()) {
                rc.grid.inputs.clear();
                for (const auto& item : in) {
                    InputSignal s = e.signal;
                    parse_signal(item, s, "grid.inputs[]");
                    rc.grid.inputs.push_back(s);
                }
            } else {
                throw ConfigError("grid.inputs must be \"default\" or a list");
            }
        } else {
            for (auto& s : rc.grid.inputs)
                s.pulley_radius = e.signal.pulley_radius;
        }
        rc.grid.validate();
    }
    if (root.contains("variant"))
        parse_variant(root.at("variant"), rc.variant);
    rc.variant.validate(e.chain.n_joints);
    if (root.contains("realtime")) {
        const json& j = root.at("realtime");
        allow_keys(j, {"schedule", "periods_per_plate", "window_strides"}, "realtime");
        read(j, "schedule", rc.realtime.schedule, "realtime");
        read(j, "periods_per_plate", rc.realtime.periods_per_plate, "realtime");
        read(j, "window_strides", rc.realtime.window_strides, "realtime");
    }
    rc.realtime.validate(e.plates.size());
    if (root.contains("metrics")) {
        std::vector<std::string> names;
        read(root, "metrics", names, "configuration");
        rc.metrics.clear();
        for (const auto& n : names)
            rc.metrics.push_back(parse_metric(n));
        if (rc.metrics.empty())
            throw ConfigError("metrics list is empty");
    }
    read(root, "failure_budget", rc.failure_budget, "configuration");
    if (!(rc.failure_budget >= 0.0 && rc.failure_budget <= 1.0))
        throw ConfigError("failure_budget must lie in [0, 1]");

    e.validate();
    rc.hash = fnv1a_hex(root.dump());
    return rc;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

RunConfig default_config()
{
    return parse_config("{}");
}

} // namespace peck
