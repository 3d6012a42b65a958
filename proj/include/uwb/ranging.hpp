#pragma once

#include <cstdint>
#include <random>

namespace uwb::ranging {

/// Timestamps carry extended precision so that sub-picometre time-of-flight
/// differences survive millisecond reply delays.
using Timestamp = long double;

/// Symmetric double-sided two-way ranging exchange, as seen by the initiator.
///
///   t_sp  initiator sends poll
///   t_rr  initiator receives response
///   t_sr  initiator sends final
///   t_rf  initiator receives final-ack
///   t_rsp responder turnaround (same for both legs)
///
/// Each (round - reply) interval equals twice the time of flight when clocks
/// are ideal, so averaging both legs over four gives the one-way ToF.
struct RangingExchange {
    Timestamp t_sp = 0;
    Timestamp t_rr = 0;
    Timestamp t_sr = 0;
    Timestamp t_rf = 0;
    Timestamp t_rsp = 0;

    /// True when the ordering and reply-delay invariants hold.
    bool is_consistent() const;
};

struct ClockModel {
    double drift_ppm = 0.0;
    /// Constant offset between initiator and responder timebases. TWR cancels
    /// it; its magnitude is used as the synchronization uncertainty.
    double sync_offset_s = 0.0;
    /// Per-timestamp Gaussian jitter.
    double sigma_tof_s = 0.0;
    double reply_delay_s = 1e-3;

    void validate() const;
};

struct TofEstimate {
    double tof_s = 0.0;
    /// False when the estimate is negative or non-finite, which signals a
    /// clock fault. The value is kept for diagnostics.
    bool valid = true;
};

/// Build the exchange an ideal pair of clocks would record for `tof_s`.
RangingExchange ideal_exchange(double tof_s, Timestamp reply_s, Timestamp start_s = 0,
                               Timestamp turnaround_s = 0);

TofEstimate tof_from_exchange(const RangingExchange& ex);

double distance_from_tof(double tof_s);
double tof_from_distance(double distance_m);

/// Round-trip time as a fraction of the total period, in [0, 1].
double normalized_distance(double t_rt, double t_total);

/// Scale every timestamp by (1 + drift) and add the sync offset and
/// independent Gaussian jitter to the four event timestamps.
RangingExchange apply_clock_model(const RangingExchange& ex, const ClockModel& clock,
                                  std::mt19937_64& rng);
RangingExchange apply_clock_model(const RangingExchange& ex, const ClockModel& clock,
                                  std::uint64_t rng_seed);

}  // namespace uwb::ranging
