#include "uwb/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uwb/constants.hpp"
#include "uwb/errors.hpp"

namespace uwb::sim {

namespace {

// Slack for floating comparisons against arena walls and speed limits.
constexpr double kBoundsSlack = 1e-9;

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }

// 1 - Phi(x) without cancellation for large x.
double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

// phi(a) / (1 - Phi(a)), the inverse Mills ratio.
double inverse_mills(double a) { return std_normal_pdf(a) / std_normal_sf(a); }

// Coefficient of variation of the zero-truncated normal with alpha = -m/s.
double truncated_cv(double alpha) {
    const double lam = inverse_mills(alpha);
    const double var = 1.0 + alpha * lam - lam * lam;
    return std::sqrt(std::max(var, 0.0)) / (lam - alpha);
}

}  // namespace

bool ArenaConfig::contains(Vec2 p) const {
    return p.x >= -kBoundsSlack && p.x <= width_m + kBoundsSlack && p.y >= -kBoundsSlack &&
           p.y <= height_m + kBoundsSlack;
}

const loc::Anchor* ArenaConfig::find_anchor(int id) const {
    auto it = std::find_if(anchors.begin(), anchors.end(),
                           [id](const loc::Anchor& a) { return a.id == id; });
    return it == anchors.end() ? nullptr : &*it;
}

void ArenaConfig::validate() const {
    if (!(width_m > 0.0) || !std::isfinite(width_m)) {
        throw ValidationError("arena.width_m", "arena.width_m must be positive");
    }
    if (!(height_m > 0.0) || !std::isfinite(height_m)) {
        throw ValidationError("arena.height_m", "arena.height_m must be positive");
    }
    if (anchors.size() < 3) {
        throw ValidationError("arena.anchors", "arena.anchors needs at least three anchors");
    }
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        if (!contains(anchors[i].position)) {
            std::ostringstream os;
            os << "arena.anchors[" << i << "] lies outside the arena";
            throw ValidationError("arena.anchors", os.str());
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (anchors[i].id == anchors[j].id) {
                throw ValidationError("arena.anchors", "arena.anchors ids must be unique");
            }
        }
    }
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
        const auto& r = obstacles[i];
        if (!(r.x_min <= r.x_max) || !(r.y_min <= r.y_max) || !contains({r.x_min, r.y_min}) ||
            !contains({r.x_max, r.y_max})) {
            std::ostringstream os;
            os << "arena.obstacles[" << i << "] is inverted or outside the arena";
            throw ValidationError("arena.obstacles", os.str());
        }
    }
    if (!std::isfinite(tag_height_m)) {
        throw ValidationError("arena.tag_height_m", "arena.tag_height_m must be finite");
    }
}

loc::AnchorSet perimeter_anchors(double w, double h) {
    return {{0, {0.0, 0.0}},   {1, {w / 2, 0.0}}, {2, {w, 0.0}},   {3, {w, h / 2}},
            {4, {w, h}},       {5, {w / 2, h}},   {6, {0.0, h}},   {7, {0.0, h / 2}}};
}

ArenaConfig default_arena() {
    ArenaConfig a;
    a.anchors = perimeter_anchors(a.width_m, a.height_m);
    return a;
}

Rect default_obstacle(const ArenaConfig& arena) {
    const Vec2 c = arena.centroid();
    return {c.x - 0.15, c.y - 0.05, c.x + 0.15, c.y + 0.05};
}

std::string_view to_string(NoiseMode m) {
    return m == NoiseMode::RangeNoise ? "range_noise" : "position_noise";
}

std::optional<NoiseMode> parse_noise_mode(std::string_view s) {
    if (s == "range_noise") return NoiseMode::RangeNoise;
    if (s == "position_noise") return NoiseMode::PositionNoise;
    return std::nullopt;
}

void NoiseModel::validate() const {
    const std::pair<const char*, double> sigmas[] = {{"noise.los_sigma_m", los_sigma_m},
                                                     {"noise.nlos_sigma_m", nlos_sigma_m}};
    for (const auto& [key, v] : sigmas) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError(key, std::string(key) + " must be non-negative");
        }
    }
    if (!std::isfinite(los_mean_m) || !std::isfinite(nlos_mean_m)) {
        throw ValidationError("noise", "noise means must be finite");
    }
    if (mode == NoiseMode::PositionNoise) {
        // Magnitudes are non-negative, so their mean must be too.
        if (los_mean_m < 0.0) throw ValidationError("noise.los_mean_m", "noise.los_mean_m < 0");
        if (nlos_mean_m < 0.0) throw ValidationError("noise.nlos_mean_m", "noise.nlos_mean_m < 0");
    }
}

Vec2 Trajectory::position_at(double t) const {
    if (waypoints.empty()) throw DomainError("empty trajectory");
    if (t <= waypoints.front().t_s) return waypoints.front().position;
    if (t >= waypoints.back().t_s) return waypoints.back().position;
    auto hi = std::upper_bound(waypoints.begin(), waypoints.end(), t,
                               [](double v, const Waypoint& w) { return v < w.t_s; });
    auto lo = hi - 1;
    const double u = (t - lo->t_s) / (hi->t_s - lo->t_s);
    return lerp(lo->position, hi->position, u);
}

void Trajectory::validate(const ArenaConfig& arena) const {
    if (waypoints.size() < 2) {
        throw ValidationError("trajectory.waypoints", "trajectory needs at least two waypoints");
    }
    if (!(max_speed_mps > 0.0)) {
        throw ValidationError("trajectory.max_speed_mps", "trajectory.max_speed_mps must be positive");
    }
    for (std::size_t i = 0; i < waypoints.size(); ++i) {
        const auto& w = waypoints[i];
        if (!std::isfinite(w.t_s) || !std::isfinite(w.position.x) || !std::isfinite(w.position.y)) {
            throw ValidationError("trajectory.waypoints", "trajectory waypoint is not finite");
        }
        if (!arena.contains(w.position)) {
            std::ostringstream os;
            os << "trajectory waypoint " << i << " (" << w.position.x << ", " << w.position.y
               << ") is outside the arena";
            throw ValidationError("trajectory.waypoints", os.str());
        }
        if (i == 0) continue;
        const auto& prev = waypoints[i - 1];
        const double dt = w.t_s - prev.t_s;
        if (!(dt > 0.0)) {
            throw ValidationError("trajectory.waypoints",
                                  "trajectory timestamps must be strictly increasing");
        }
        const double speed = distance(w.position, prev.position) / dt;
        if (speed > max_speed_mps * (1.0 + kBoundsSlack)) {
            std::ostringstream os;
            os << "trajectory segment " << i << " moves at " << speed << " m/s, above max_speed_mps";
            throw ValidationError("trajectory.max_speed_mps", os.str());
        }
    }
}

Trajectory stationary(Vec2 p, double duration_s) {
    Trajectory t;
    t.waypoints = {{0.0, p}, {duration_s, p}};
    return t;
}

Trajectory random_walk(const ArenaConfig& arena, double duration_s, double speed_mps,
                       double margin_m, std::uint64_t seed, std::optional<Rect> region) {
    if (!(duration_s > 0.0) || !(speed_mps > 0.0)) {
        throw ValidationError("trajectory.random_walk", "random_walk needs positive duration and speed");
    }
    const Rect box = region.value_or(Rect{0.0, 0.0, arena.width_m, arena.height_m});
    if (!arena.contains({box.x_min, box.y_min}) || !arena.contains({box.x_max, box.y_max})) {
        throw ValidationError("trajectory.random_walk.region", "random_walk region leaves the arena");
    }
    if (!(margin_m >= 0.0) || !(box.x_min + margin_m < box.x_max - margin_m) ||
        !(box.y_min + margin_m < box.y_max - margin_m)) {
        throw ValidationError("trajectory.random_walk.margin_m", "random_walk margin does not fit the region");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(box.x_min + margin_m, box.x_max - margin_m);
    std::uniform_real_distribution<double> uy(box.y_min + margin_m, box.y_max - margin_m);

    Trajectory traj;
    traj.max_speed_mps = speed_mps;
    Vec2 p{ux(rng), uy(rng)};
    double t = 0.0;
    traj.waypoints.push_back({t, p});
    while (t < duration_s) {
        Vec2 next{ux(rng), uy(rng)};
        const double leg = distance(p, next);
        if (leg < 1e-6) continue;
        double dt = leg / speed_mps;
        if (t + dt > duration_s) {
            // Stop partway so the walk ends exactly at duration_s.
            next = lerp(p, next, (duration_s - t) / dt);
            dt = duration_s - t;
        }
        t += dt;
        p = next;
        traj.waypoints.push_back({t, p});
    }
    traj.waypoints.back().t_s = duration_s;
    return traj;
}

bool segment_intersects_rect(Vec2 a, Vec2 b, const Rect& r) {
    double t_lo = 0.0;
    double t_hi = 1.0;
    const double origin[2] = {a.x, a.y};
    const double dir[2] = {b.x - a.x, b.y - a.y};
    const double lo[2] = {r.x_min, r.y_min};
    const double hi[2] = {r.x_max, r.y_max};
    for (int k = 0; k < 2; ++k) {
        if (dir[k] == 0.0) {
            if (origin[k] < lo[k] || origin[k] > hi[k]) return false;
            continue;
        }
        double t0 = (lo[k] - origin[k]) / dir[k];
        double t1 = (hi[k] - origin[k]) / dir[k];
        if (t0 > t1) std::swap(t0, t1);
        t_lo = std::max(t_lo, t0);
        t_hi = std::min(t_hi, t1);
        if (t_lo >= t_hi) return false;
    }
    return t_lo < t_hi;
}

int count_blocking_obstacles(const ArenaConfig& arena, Vec2 a, Vec2 b) {
    return static_cast<int>(std::count_if(arena.obstacles.begin(), arena.obstacles.end(),
                                          [&](const Rect& r) { return segment_intersects_rect(a, b, r); }));
}

bool classify_los(const ArenaConfig& arena, Vec2 tag_pos, Vec2 anchor_pos) {
    return std::none_of(arena.obstacles.begin(), arena.obstacles.end(),
                        [&](const Rect& r) { return segment_intersects_rect(tag_pos, anchor_pos, r); });
}

NormalParams truncated_moments(const NormalParams& u) {
    if (u.sigma == 0.0) return {std::max(u.mean, 0.0), 0.0};
    const double alpha = -u.mean / u.sigma;
    const double lam = inverse_mills(alpha);
    const double mean = u.mean + u.sigma * lam;
    const double var = u.sigma * u.sigma * (1.0 + alpha * lam - lam * lam);
    return {mean, std::sqrt(std::max(var, 0.0))};
}

NormalParams match_truncated_moments(double target_mean, double target_sigma) {
    if (!(target_mean > 0.0) || !(target_sigma >= 0.0)) {
        throw DomainError("truncated moments need mean > 0 and sigma >= 0");
    }
    if (target_sigma == 0.0) return {target_mean, 0.0};
    const double target_cv = target_sigma / target_mean;

    // CV rises monotonically from 0 (alpha -> -inf) toward 1 (alpha -> +inf).
    // At alpha -> -inf the CV tends to -1/alpha; widen the bracket for small targets.
    double lo = -std::max(40.0, 2.0 / target_cv);
    double hi = 30.0;
    if (!(target_cv < truncated_cv(hi))) {
        throw DomainError("sigma/mean too large for a zero-truncated normal");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (truncated_cv(mid) < target_cv) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double alpha = 0.5 * (lo + hi);
    const double s = target_mean / (inverse_mills(alpha) - alpha);
    return {-alpha * s, s};
}

MagnitudeSampler::MagnitudeSampler(double mean, double sigma, bool compensate_truncation) {
    if (compensate_truncation && mean > 0.0 && sigma > 0.0) {
        underlying_ = match_truncated_moments(mean, sigma);
    } else {
        underlying_ = {mean, sigma};
    }
}

double MagnitudeSampler::operator()(std::mt19937_64& rng) const {
    if (underlying_.sigma == 0.0) return std::max(underlying_.mean, 0.0);
    std::normal_distribution<double> n(underlying_.mean, underlying_.sigma);
    for (;;) {
        const double v = n(rng);
        if (v >= 0.0) return v;
    }
}

FixAccumulator::FixAccumulator(const ArenaConfig& arena, double window_s,
                               loc::SolverOptions options)
    : anchors_(arena.anchors), centroid_(arena.centroid()), window_s_(window_s), options_(options) {}

std::optional<FixAccumulator::Result> FixAccumulator::add(const Measurement& m) {
    if (m.valid) latest_[m.anchor_id] = {m.t_s, m.distance_m, m.los};

    std::vector<loc::Range> ranges;
    bool nlos = false;
    for (auto it = latest_.begin(); it != latest_.end();) {
        if (m.t_s - it->second.t_s > window_s_) {
            it = latest_.erase(it);
            continue;
        }
        ranges.push_back({it->first, it->second.distance_m});
        nlos = nlos || !it->second.los;
        ++it;
    }
    if (!m.valid || ranges.size() < 3) return std::nullopt;

    Result r;
    r.fix = loc::multilaterate_ls(anchors_, ranges, last_position_.value_or(centroid_), options_);
    r.fix.t_s = m.t_s;
    r.nlos = nlos;
    r.ranges = std::move(ranges);
    if (r.fix.converged) last_position_ = r.fix.position;
    return r;
}

SimulationResult simulate(const SimulationInputs& in) {
    in.arena.validate();
    in.noise.validate();
    in.trajectory.validate(in.arena);
    in.channel.validate();
    in.clock.validate();
    in.schedule.frame.validate();
    if (in.schedule.n_anchors != static_cast<int>(in.arena.anchors.size())) {
        throw ValidationError("superframe", "schedule anchor count differs from arena.anchors");
    }

    std::vector<tdma::Assignment> mine;
    for (const auto& a : in.schedule.assignments) {
        if (a.tag_id == in.tag_id) mine.push_back(a);
    }
    if (mine.empty()) throw ValidationError("superframe", "simulated tag has no scheduled slots");

    const double window = in.fix_window_s.value_or(in.schedule.update_interval_s() *
                                                   static_cast<double>(in.arena.anchors.size()) +
                                                   0.5 * in.schedule.frame.slot_s());
    loc::SolverOptions solver;
    solver.sigma_pos_m = loc::combine_uncertainty(in.clock.sigma_tof_s * kSpeedOfLight,
                                                  std::abs(in.clock.sync_offset_s) * kSpeedOfLight);
    FixAccumulator acc(in.arena, window, solver);

    const MagnitudeSampler los_mag(in.noise.los_mean_m, in.noise.los_sigma_m,
                                   in.noise.compensate_truncation);
    const MagnitudeSampler nlos_mag(in.noise.nlos_mean_m, in.noise.nlos_sigma_m,
                                    in.noise.compensate_truncation);
    std::uniform_real_distribution<double> heading(0.0, 2.0 * kPi);

    std::mt19937_64 rng(in.seed);
    auto gaussian = [&rng](double mean, double sigma) {
        if (sigma == 0.0) return mean;
        return std::normal_distribution<double>(mean, sigma)(rng);
    };
    const double p_noise = rf::thermal_noise_w(in.channel.bandwidth_hz);
    const double t0 = in.trajectory.start_s();
    const double t_end = in.trajectory.end_s();

    SimulationResult out;
    for (std::uint64_t cycle = 0;; ++cycle) {
        bool finished = false;
        for (const auto& a : mine) {
            const std::uint64_t g = in.schedule.global_slot(a, cycle);
            const double t = t0 + in.schedule.slot_time(g);
            if (t > t_end) {
                finished = true;
                break;
            }
            const int anchor_index = in.schedule.anchor_for(a, cycle);
            const auto& anchor = in.arena.anchors[static_cast<std::size_t>(anchor_index)];
            const Vec2 tag = in.trajectory.position_at(t);

            Measurement m;
            m.t_s = t;
            m.tag_id = in.tag_id;
            m.anchor_id = anchor.id;
            m.slot_index = a.slot_index;

            const int blocking = count_blocking_obstacles(in.arena, tag, anchor.position);
            m.los = blocking == 0;
            const double true_d = distance(tag, anchor.position);

            // Exchange timestamps are local to the slot so they keep full precision.
            const auto ideal = ranging::ideal_exchange(ranging::tof_from_distance(true_d),
                                                       in.clock.reply_delay_s, 0,
                                                       in.clock.reply_delay_s);
            const auto observed = ranging::apply_clock_model(ideal, in.clock, rng);
            const auto tof = ranging::tof_from_exchange(observed);
            m.distance_m = kSpeedOfLight * tof.tof_s;
            m.valid = tof.valid;

            if (in.noise.mode == NoiseMode::RangeNoise) {
                m.distance_m += m.los ? gaussian(in.noise.los_mean_m, in.noise.los_sigma_m)
                                      : gaussian(in.noise.nlos_mean_m, in.noise.nlos_sigma_m);
                m.valid = m.valid && m.distance_m >= 0.0;
            }

            // Co-located nodes have no meaningful path loss; floor at 1 mm.
            const double p_rx = rf::received_power_w(in.channel, std::max(true_d, 1e-3), blocking);
            m.snr_db = rf::snr_db(p_rx, p_noise);

            out.measurements.push_back(m);
            ++out.attempts;

            if (auto r = acc.add(m)) {
                if (in.noise.mode == NoiseMode::PositionNoise) {
                    const double mag = r->nlos ? nlos_mag(rng) : los_mag(rng);
                    const double theta = heading(rng);
                    r->fix.position = r->fix.position + Vec2{std::cos(theta), std::sin(theta)} * mag;
                }
                r->fix.z_m = in.arena.tag_height_m;
                out.fixes.push_back(r->fix);
                out.fix_nlos.push_back(r->nlos);
            }
        }
        if (finished) break;
    }
    return out;
}

double success_ratio(std::span<const loc::PositionFix> fixes, std::size_t attempts) {
    if (attempts < 1) throw DomainError("attempts must be >= 1");
    const auto ok = std::count_if(fixes.begin(), fixes.end(),
                                  [](const loc::PositionFix& f) { return f.converged; });
    return std::min(1.0, static_cast<double>(ok) / static_cast<double>(attempts));
}

}  // namespace uwb::sim
