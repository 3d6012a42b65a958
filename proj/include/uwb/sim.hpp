#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "uwb/geometry.hpp"
#include "uwb/localization.hpp"
#include "uwb/ranging.hpp"
#include "uwb/rf_model.hpp"
#include "uwb/tdma.hpp"

namespace uwb::sim {

/// 48 x 24 inch enclosure.
inline constexpr double kArenaWidth = 1.2192;
inline constexpr double kArenaHeight = 0.6096;

struct ArenaConfig {
    double width_m = kArenaWidth;
    double height_m = kArenaHeight;
    loc::AnchorSet anchors;
    std::vector<Rect> obstacles;
    double tag_height_m = 0.05;

    bool contains(Vec2 p) const;
    Vec2 centroid() const { return {width_m / 2.0, height_m / 2.0}; }
    const loc::Anchor* find_anchor(int id) const;
    /// Throws ValidationError naming the offending key.
    void validate() const;
};

/// Eight anchors walking the perimeter: corners and edge midpoints.
loc::AnchorSet perimeter_anchors(double width_m, double height_m);

/// Arena with the default anchors and no obstacles.
ArenaConfig default_arena();

/// 0.3 x 0.1 m block standing in for lab furniture, centred in the arena.
Rect default_obstacle(const ArenaConfig& arena);

enum class NoiseMode { RangeNoise, PositionNoise };

std::string_view to_string(NoiseMode m);
std::optional<NoiseMode> parse_noise_mode(std::string_view s);

struct NoiseModel {
    NoiseMode mode = NoiseMode::PositionNoise;
    double los_mean_m = 0.162;
    double los_sigma_m = 0.076;
    double nlos_mean_m = 0.356;
    double nlos_sigma_m = 0.270;
    /// In position-noise mode error magnitudes are drawn from a normal
    /// truncated at zero. When set, the underlying normal is chosen so the
    /// truncated draws have exactly the configured mean and sigma.
    bool compensate_truncation = true;

    void validate() const;
};

struct Waypoint {
    double t_s = 0.0;
    Vec2 position;
};

struct Trajectory {
    std::vector<Waypoint> waypoints;
    double max_speed_mps = 0.5;

    double start_s() const { return waypoints.front().t_s; }
    double end_s() const { return waypoints.back().t_s; }
    /// Piecewise-linear position, clamped to the end points.
    Vec2 position_at(double t_s) const;
    /// Throws ValidationError with key "trajectory..." on a bad path.
    void validate(const ArenaConfig& arena) const;
};

/// Tag parked at one point for `duration_s`.
Trajectory stationary(Vec2 p, double duration_s);

/// Straight legs between uniformly drawn points at least `margin_m` inside
/// `region` (the whole arena by default), travelled at `speed_mps`, until
/// `duration_s` is covered.
Trajectory random_walk(const ArenaConfig& arena, double duration_s, double speed_mps,
                       double margin_m, std::uint64_t seed,
                       std::optional<Rect> region = std::nullopt);

struct Measurement {
    double t_s = 0.0;
    int tag_id = 0;
    int anchor_id = 0;
    int slot_index = 0;
    double distance_m = 0.0;
    double snr_db = 0.0;
    bool los = true;
    bool valid = true;
};

/// True iff the open segment tag -> anchor misses every obstacle.
bool classify_los(const ArenaConfig& arena, Vec2 tag_pos, Vec2 anchor_pos);

/// Number of obstacles the open segment a -> b passes through.
int count_blocking_obstacles(const ArenaConfig& arena, Vec2 a, Vec2 b);

/// Slab clipping of the open segment a -> b against a closed rectangle;
/// true when the clipped interval has positive length.
bool segment_intersects_rect(Vec2 a, Vec2 b, const Rect& r);

struct NormalParams {
    double mean = 0.0;
    double sigma = 0.0;
};

/// Mean and sigma of N(mean, sigma) conditioned on x >= 0.
NormalParams truncated_moments(const NormalParams& underlying);

/// Underlying normal whose zero-truncation has the requested moments.
/// Requires 0 <= sigma < mean.
NormalParams match_truncated_moments(double target_mean, double target_sigma);

/// Draws non-negative error magnitudes, resampling negative draws.
class MagnitudeSampler {
public:
    MagnitudeSampler(double mean, double sigma, bool compensate_truncation);
    double operator()(std::mt19937_64& rng) const;
    const NormalParams& underlying() const { return underlying_; }

private:
    NormalParams underlying_;
};

/// Keeps the newest valid range per anchor and solves once at least three
/// are fresher than `window_s`.
class FixAccumulator {
public:
    struct Result {
        loc::PositionFix fix;
        /// At least one range behind the fix was non-line-of-sight.
        bool nlos = false;
        /// Ranges the fix was solved from, ordered by anchor id.
        std::vector<loc::Range> ranges;
    };

    FixAccumulator(const ArenaConfig& arena, double window_s, loc::SolverOptions options = {});

    std::optional<Result> add(const Measurement& m);

private:
    struct Entry {
        double t_s;
        double distance_m;
        bool los;
    };

    loc::AnchorSet anchors_;
    Vec2 centroid_;
    double window_s_;
    loc::SolverOptions options_;
    std::map<int, Entry> latest_;
    std::optional<Vec2> last_position_;
};

struct SimulationInputs {
    ArenaConfig arena = default_arena();
    Trajectory trajectory;
    tdma::Schedule schedule;
    NoiseModel noise;
    rf::ChannelParams channel;
    ranging::ClockModel clock;
    std::uint64_t seed = 1;
    int tag_id = 0;
    /// Freshness window for fixes; defaults to one full anchor rotation.
    std::optional<double> fix_window_s;
};

struct SimulationResult {
    std::vector<Measurement> measurements;
    std::vector<loc::PositionFix> fixes;
    /// Regime of each fix, parallel to `fixes`.
    std::vector<bool> fix_nlos;
    /// Ranging slots that could have completed a fix.
    std::size_t attempts = 0;
};

/// Runs the scheduled ranging for one tag along its trajectory. Fully
/// determined by the inputs and seed.
SimulationResult simulate(const SimulationInputs& in);

double success_ratio(std::span<const loc::PositionFix> fixes, std::size_t attempts);

}  // namespace uwb::sim
