#include "uwb/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "uwb/errors.hpp"

namespace uwb::config {

namespace {

using nlohmann::json;

std::string join(const std::string& prefix, const std::string& key) {
    return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& where, std::set<std::string> allowed) {
    if (!obj.is_object()) throw ValidationError(where, where + ": expected an object");
    for (const auto& [key, _] : obj.items()) {
        if (!allowed.count(key)) {
            throw ValidationError(join(where, key), "unknown key '" + join(where, key) + "'");
        }
    }
}

double get_number(const json& obj, const std::string& where, const char* key, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) {
        throw ValidationError(join(where, key), join(where, key) + ": expected a number");
    }
    return it->get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key, int fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number_integer()) {
        throw ValidationError(join(where, key), join(where, key) + ": expected an integer");
    }
    return it->get<int>();
}

bool get_bool(const json& obj, const std::string& where, const char* key, bool fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_boolean()) {
        throw ValidationError(join(where, key), join(where, key) + ": expected true or false");
    }
    return it->get<bool>();
}

const json& require(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ValidationError(join(where, key), join(where, key) + ": required key missing");
    }
    return *it;
}

std::string indexed(const std::string& where, std::size_t i) {
    return where + "[" + std::to_string(i) + "]";
}

sim::ArenaConfig parse_arena(const json& j) {
    const std::string where = "arena";
    reject_unknown(j, where,
                   {"width_m", "height_m", "anchors", "obstacles", "default_obstacle", "tag_height_m"});
    sim::ArenaConfig a;
    a.width_m = get_number(j, where, "width_m", a.width_m);
    a.height_m = get_number(j, where, "height_m", a.height_m);
    a.tag_height_m = get_number(j, where, "tag_height_m", a.tag_height_m);
    a.anchors = sim::perimeter_anchors(a.width_m, a.height_m);

    if (auto it = j.find("anchors"); it != j.end()) {
        if (!it->is_array()) throw ValidationError("arena.anchors", "arena.anchors: expected an array");
        a.anchors.clear();
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string w = indexed("arena.anchors", i);
            reject_unknown(e, w, {"id", "x_m", "y_m"});
            loc::Anchor anchor;
            anchor.id = get_int(e, w, "id", static_cast<int>(i));
            require(e, w, "x_m");
            require(e, w, "y_m");
            anchor.position = {get_number(e, w, "x_m", 0.0), get_number(e, w, "y_m", 0.0)};
            a.anchors.push_back(anchor);
        }
    }
    if (get_bool(j, where, "default_obstacle", false)) {
        a.obstacles.push_back(sim::default_obstacle(a));
    }
    if (auto it = j.find("obstacles"); it != j.end()) {
        if (!it->is_array()) {
            throw ValidationError("arena.obstacles", "arena.obstacles: expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string w = indexed("arena.obstacles", i);
            reject_unknown(e, w, {"x_min_m", "y_min_m", "x_max_m", "y_max_m"});
            for (const char* k : {"x_min_m", "y_min_m", "x_max_m", "y_max_m"}) require(e, w, k);
            a.obstacles.push_back({get_number(e, w, "x_min_m", 0.0), get_number(e, w, "y_min_m", 0.0),
                                   get_number(e, w, "x_max_m", 0.0), get_number(e, w, "y_max_m", 0.0)});
        }
    }
    return a;
}

sim::NoiseModel parse_noise(const json& j) {
    const std::string where = "noise";
    reject_unknown(j, where,
                   {"mode", "los_mean_m", "los_sigma_m", "nlos_mean_m", "nlos_sigma_m",
                    "compensate_truncation"});
    sim::NoiseModel n;
    if (auto it = j.find("mode"); it != j.end()) {
        const auto mode = it->is_string() ? sim::parse_noise_mode(it->get<std::string>()) : std::nullopt;
        if (!mode) {
            throw ValidationError("noise.mode",
                                  "noise.mode: expected \"range_noise\" or \"position_noise\"");
        }
        n.mode = *mode;
    }
    n.los_mean_m = get_number(j, where, "los_mean_m", n.los_mean_m);
    n.los_sigma_m = get_number(j, where, "los_sigma_m", n.los_sigma_m);
    n.nlos_mean_m = get_number(j, where, "nlos_mean_m", n.nlos_mean_m);
    n.nlos_sigma_m = get_number(j, where, "nlos_sigma_m", n.nlos_sigma_m);
    n.compensate_truncation = get_bool(j, where, "compensate_truncation", n.compensate_truncation);
    return n;
}

sim::Trajectory parse_trajectory(const json& j, const sim::ArenaConfig& arena, std::uint64_t seed) {
    const std::string where = "trajectory";
    reject_unknown(j, where, {"max_speed_mps", "waypoints", "random_walk", "stationary"});
    const int kinds = static_cast<int>(j.contains("waypoints")) +
                      static_cast<int>(j.contains("random_walk")) +
                      static_cast<int>(j.contains("stationary"));
    if (kinds != 1) {
        throw ValidationError(where,
                              "trajectory: give exactly one of waypoints, random_walk, stationary");
    }

    sim::Trajectory t;
    const double max_speed = get_number(j, where, "max_speed_mps", t.max_speed_mps);
    if (auto it = j.find("waypoints"); it != j.end()) {
        if (!it->is_array()) {
            throw ValidationError("trajectory.waypoints", "trajectory.waypoints: expected an array");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string w = indexed("trajectory.waypoints", i);
            reject_unknown(e, w, {"t_s", "x_m", "y_m"});
            for (const char* k : {"t_s", "x_m", "y_m"}) require(e, w, k);
            t.waypoints.push_back({get_number(e, w, "t_s", 0.0),
                                   {get_number(e, w, "x_m", 0.0), get_number(e, w, "y_m", 0.0)}});
        }
    } else if (auto rw = j.find("random_walk"); rw != j.end()) {
        const std::string w = "trajectory.random_walk";
        reject_unknown(*rw, w, {"duration_s", "speed_mps", "margin_m", "region"});
        const double duration = get_number(*rw, w, "duration_s", 60.0);
        const double speed = get_number(*rw, w, "speed_mps", 0.05);
        const double margin = get_number(*rw, w, "margin_m", 0.05);
        std::optional<Rect> region;
        if (auto r = rw->find("region"); r != rw->end()) {
            const std::string rk = w + ".region";
            reject_unknown(*r, rk, {"x_min_m", "y_min_m", "x_max_m", "y_max_m"});
            for (const char* k : {"x_min_m", "y_min_m", "x_max_m", "y_max_m"}) require(*r, rk, k);
            region = Rect{get_number(*r, rk, "x_min_m", 0.0), get_number(*r, rk, "y_min_m", 0.0),
                          get_number(*r, rk, "x_max_m", 0.0), get_number(*r, rk, "y_max_m", 0.0)};
        }
        // Path randomness is decoupled from the measurement stream.
        t = sim::random_walk(arena, duration, speed, margin, seed ^ 0x9E3779B97F4A7C15ULL, region);
    } else {
        const auto& st = j["stationary"];
        const std::string w = "trajectory.stationary";
        reject_unknown(st, w, {"x_m", "y_m", "duration_s"});
        const Vec2 c = arena.centroid();
        t = sim::stationary({get_number(st, w, "x_m", c.x), get_number(st, w, "y_m", c.y)},
                            get_number(st, w, "duration_s", 10.0));
    }
    t.max_speed_mps = max_speed;
    return t;
}

rf::ChannelParams parse_channel(const json& j) {
    const std::string where = "channel";
    reject_unknown(j, where,
                   {"carrier_frequency_hz", "bandwidth_hz", "tx_power_w", "tx_gain_linear",
                    "rx_gain_linear", "path_loss_coeff_L", "freq_loss_factor_F"});
    rf::ChannelParams c;
    c.carrier_frequency_hz = get_number(j, where, "carrier_frequency_hz", c.carrier_frequency_hz);
    c.bandwidth_hz = get_number(j, where, "bandwidth_hz", c.bandwidth_hz);
    c.tx_power_w = get_number(j, where, "tx_power_w", c.tx_power_w);
    c.tx_gain_linear = get_number(j, where, "tx_gain_linear", c.tx_gain_linear);
    c.rx_gain_linear = get_number(j, where, "rx_gain_linear", c.rx_gain_linear);
    c.path_loss_coeff_L = get_number(j, where, "path_loss_coeff_L", c.path_loss_coeff_L);
    c.freq_loss_factor_F = get_number(j, where, "freq_loss_factor_F", c.freq_loss_factor_F);
    return c;
}

ranging::ClockModel parse_clock(const json& j) {
    const std::string where = "clock";
    reject_unknown(j, where, {"drift_ppm", "sync_offset_s", "sigma_tof_s", "reply_delay_s"});
    ranging::ClockModel c;
    c.drift_ppm = get_number(j, where, "drift_ppm", c.drift_ppm);
    c.sync_offset_s = get_number(j, where, "sync_offset_s", c.sync_offset_s);
    c.sigma_tof_s = get_number(j, where, "sigma_tof_s", c.sigma_tof_s);
    c.reply_delay_s = get_number(j, where, "reply_delay_s", c.reply_delay_s);
    return c;
}

// Re-raise a module-level DomainError under the config key it came from.
template <typename F>
void checked(const std::string& key, F&& f) {
    try {
        f();
    } catch (const ValidationError&) {
        throw;
    } catch (const DomainError& e) {
        throw ValidationError(key, key + ": " + e.what());
    } catch (const tdma::CapacityExceeded& e) {
        throw ValidationError(key, key + ": " + e.what());
    }
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
    reject_unknown(doc, "", {"arena", "noise", "trajectory", "superframe", "channel", "clock", "seed"});
    RunConfig cfg;
    if (auto it = doc.find("seed"); it != doc.end()) {
        if (!it->is_number_unsigned() && !(it->is_number_integer() && it->get<std::int64_t>() >= 0)) {
            throw ValidationError("seed", "seed: expected a non-negative integer");
        }
        cfg.seed = it->get<std::uint64_t>();
    }
    const json empty = json::object();
    auto section = [&](const char* key) -> const json& {
        auto it = doc.find(key);
        return it == doc.end() ? empty : *it;
    };

    cfg.arena = parse_arena(section("arena"));
    cfg.noise = parse_noise(section("noise"));
    if (!doc.contains("trajectory")) {
        throw ValidationError("trajectory", "trajectory: required section missing");
    }
    cfg.trajectory = parse_trajectory(section("trajectory"), cfg.arena, cfg.seed);

    const auto& sf = section("superframe");
    reject_unknown(sf, "superframe",
                   {"superframe_s", "slots_per_superframe", "n_tags", "update_rate_hz", "fix_window_s"});
    cfg.superframe.superframe_s = get_number(sf, "superframe", "superframe_s", cfg.superframe.superframe_s);
    cfg.superframe.slots_per_superframe =
        get_int(sf, "superframe", "slots_per_superframe", cfg.superframe.slots_per_superframe);
    cfg.n_tags = get_int(sf, "superframe", "n_tags", cfg.n_tags);
    cfg.update_rate_hz = get_number(sf, "superframe", "update_rate_hz", cfg.update_rate_hz);
    if (sf.contains("fix_window_s")) {
        cfg.fix_window_s = get_number(sf, "superframe", "fix_window_s", 0.0);
        if (!(*cfg.fix_window_s > 0.0)) {
            throw ValidationError("superframe.fix_window_s", "superframe.fix_window_s must be positive");
        }
    }

    cfg.channel = parse_channel(section("channel"));
    cfg.clock = parse_clock(section("clock"));

    cfg.arena.validate();
    cfg.trajectory.validate(cfg.arena);
    cfg.noise.validate();
    checked("channel", [&] { cfg.channel.validate(); });
    checked("clock", [&] { cfg.clock.validate(); });
    checked("superframe", [&] { cfg.superframe.validate(); });
    return cfg;
}

json read_config_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config", "config " + path.string() + " is not valid JSON: " + e.what());
    }
}

RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_config_json(path));
}

sim::SimulationInputs to_simulation_inputs(const RunConfig& cfg) {
    sim::SimulationInputs in;
    in.arena = cfg.arena;
    in.trajectory = cfg.trajectory;
    in.noise = cfg.noise;
    in.channel = cfg.channel;
    in.clock = cfg.clock;
    in.seed = cfg.seed;
    in.fix_window_s = cfg.fix_window_s;
    checked("superframe", [&] {
        in.schedule = tdma::build_schedule(cfg.n_tags, cfg.update_rate_hz, cfg.superframe,
                                           static_cast<int>(cfg.arena.anchors.size()));
    });
    return in;
}

}  // namespace uwb::config
