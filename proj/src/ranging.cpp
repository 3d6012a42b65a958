#include "uwb/ranging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uwb/constants.hpp"
#include "uwb/errors.hpp"

namespace uwb::ranging {

bool RangingExchange::is_consistent() const {
    return t_rr > t_sp && t_rf > t_sr && t_rsp >= 0 && (t_rr - t_sp) >= t_rsp &&
           (t_rf - t_sr) >= t_rsp;
}

void ClockModel::validate() const {
    if (!(sigma_tof_s >= 0.0)) throw DomainError("clock.sigma_tof_s must be non-negative");
    if (!(reply_delay_s >= 0.0)) throw DomainError("clock.reply_delay_s must be non-negative");
    if (!std::isfinite(drift_ppm) || !std::isfinite(sync_offset_s)) {
        throw DomainError("clock parameters must be finite");
    }
}

RangingExchange ideal_exchange(double tof_s, Timestamp reply_s, Timestamp start_s,
                               Timestamp turnaround_s) {
    const Timestamp round_trip = 2 * static_cast<Timestamp>(tof_s) + reply_s;
    RangingExchange ex;
    ex.t_sp = start_s;
    ex.t_rr = start_s + round_trip;
    ex.t_sr = ex.t_rr + turnaround_s;
    ex.t_rf = ex.t_sr + round_trip;
    ex.t_rsp = reply_s;
    return ex;
}

TofEstimate tof_from_exchange(const RangingExchange& ex) {
    const Timestamp r =
        ((ex.t_rr - ex.t_sp) - ex.t_rsp + (ex.t_rf - ex.t_sr) - ex.t_rsp) / 4;
    // Co-located nodes can come out a few ulps below zero; that is rounding,
    // not a causality violation.
    const Timestamp scale = std::max({std::fabs(ex.t_rr - ex.t_sp), std::fabs(ex.t_rf - ex.t_sr),
                                      std::fabs(ex.t_rsp)});
    const Timestamp noise = 16 * std::numeric_limits<Timestamp>::epsilon() * scale;
    TofEstimate out;
    out.tof_s = static_cast<double>(r < 0 && r >= -noise ? Timestamp{0} : r);
    out.valid = std::isfinite(out.tof_s) && out.tof_s >= 0.0;
    return out;
}

double distance_from_tof(double tof_s) {
    if (!(tof_s >= 0.0)) throw DomainError("time of flight must be non-negative");
    return kSpeedOfLight * tof_s;
}

double tof_from_distance(double distance_m) {
    if (!(distance_m >= 0.0)) throw DomainError("distance must be non-negative");
    return distance_m / kSpeedOfLight;
}

double normalized_distance(double t_rt, double t_total) {
    if (!(t_total > 0.0)) throw DomainError("total period must be positive");
    if (!(t_rt >= 0.0) || t_rt > t_total) {
        throw DomainError("round-trip time must lie in [0, total period]");
    }
    return t_rt / t_total;
}

RangingExchange apply_clock_model(const RangingExchange& ex, const ClockModel& clock,
                                  std::mt19937_64& rng) {
    const Timestamp scale = 1 + static_cast<Timestamp>(clock.drift_ppm) * 1e-6L;
    const Timestamp offset = clock.sync_offset_s;
    auto jitter = [&]() -> Timestamp {
        if (clock.sigma_tof_s <= 0.0) return 0;
        std::normal_distribution<double> n(0.0, clock.sigma_tof_s);
        return n(rng);
    };
    RangingExchange out;
    // Draw order is fixed so the stream is reproducible.
    out.t_sp = ex.t_sp * scale + offset + jitter();
    out.t_rr = ex.t_rr * scale + offset + jitter();
    out.t_sr = ex.t_sr * scale + offset + jitter();
    out.t_rf = ex.t_rf * scale + offset + jitter();
    out.t_rsp = ex.t_rsp * scale;
    return out;
}

RangingExchange apply_clock_model(const RangingExchange& ex, const ClockModel& clock,
                                  std::uint64_t rng_seed) {
    std::mt19937_64 rng(rng_seed);
    return apply_clock_model(ex, clock, rng);
}

}  // namespace uwb::ranging
