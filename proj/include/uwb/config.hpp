#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "uwb/ranging.hpp"
#include "uwb/rf_model.hpp"
#include "uwb/sim.hpp"
#include "uwb/tdma.hpp"

namespace uwb::config {

/// One simulation run as described by a JSON document with the sections
/// `arena`, `noise`, `trajectory`, `superframe`, `channel`, `clock`, `seed`.
/// Omitted sections and keys take their defaults; unknown keys are errors.
struct RunConfig {
    sim::ArenaConfig arena = sim::default_arena();
    sim::NoiseModel noise;
    sim::Trajectory trajectory;
    tdma::SuperframeConfig superframe;
    int n_tags = 1;
    double update_rate_hz = 10.0;
    std::optional<double> fix_window_s;
    rf::ChannelParams channel;
    ranging::ClockModel clock;
    std::uint64_t seed = 1;
};

/// Throws ValidationError whose key() is the dotted path of the bad field.
RunConfig parse_run_config(const nlohmann::json& doc);

/// Throws IoError when the file cannot be read, ValidationError when it is
/// not JSON.
nlohmann::json read_config_json(const std::filesystem::path& path);

RunConfig load_run_config(const std::filesystem::path& path);

/// Builds the schedule and validates everything a run depends on.
sim::SimulationInputs to_simulation_inputs(const RunConfig& cfg);

}  // namespace uwb::config
