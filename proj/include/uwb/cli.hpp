#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>

#include "uwb/config.hpp"
#include "uwb/evaluation.hpp"

namespace uwb::cli {

inline constexpr const char* kVersion = "0.3.1";

/// Process exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kValidationError = 1, kIoError = 2 };

struct SeedRange {
    std::uint64_t first = 0;
    std::uint64_t last = 0;
};

/// Parses "a..b" (inclusive) or a single integer.
std::optional<SeedRange> parse_seed_range(const std::string& s);

struct SimulateOptions {
    std::string config_path;
    std::string out_dir = ".";
    /// When set, runs once per seed into out_dir/seed_<n>/.
    std::optional<SeedRange> seeds;
    unsigned jobs = 0;
};

struct EvaluateOptions {
    std::string fixes_path;
    std::string truth_path;
    std::string out_dir = ".";
    double max_gap_s = 1.0;
    eval::PercentNorm pct_norm = eval::PercentNorm::PathScale;
};

struct LocalizeOptions {
    std::string config_path;
    std::string measurements_path;
    std::string out_path = "fixes.csv";
    bool paper_literal = false;
};

struct LinkBudgetOptions {
    double distance_m = 1.0;
    double frequency_hz = 6.5e9;
    int obstacles = 0;
    double bandwidth_hz = 500e6;
    std::optional<double> snr_linear;
    double tx_power_w = rf::ChannelParams{}.tx_power_w;
    double tx_gain_linear = rf::ChannelParams{}.tx_gain_linear;
    double rx_gain_linear = rf::ChannelParams{}.rx_gain_linear;
    double loss_per_obstacle_db = rf::ChannelParams{}.loss_per_obstacle_db();
    std::optional<double> velocity_mps;
    std::optional<double> delay_s;
};

struct ScheduleOptions {
    int tags = 1;
    double rate_hz = 10.0;
    double superframe_s = 0.1;
    int slots = 15;
    int anchors = 8;
};

/// Writes measurements.csv, fixes.csv, truth.csv and stats.json for one
/// already-parsed config.
void write_simulation(const config::RunConfig& cfg, const std::string& out_dir);

int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err);
int cmd_localize(const LocalizeOptions& opt, std::ostream& out, std::ostream& err);
int cmd_linkbudget(const LinkBudgetOptions& opt, std::ostream& out, std::ostream& err);
int cmd_schedule(const ScheduleOptions& opt, std::ostream& out, std::ostream& err);

/// Full command line dispatch; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uwb::cli
