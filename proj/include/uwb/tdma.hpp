#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace uwb::tdma {

struct SuperframeConfig {
    double superframe_s = 0.100;
    int slots_per_superframe = 15;

    double slot_s() const { return superframe_s / slots_per_superframe; }
    /// Ranging events per second the frame can carry.
    double capacity_per_s() const { return slots_per_superframe / superframe_s; }
    void validate() const;
};

struct Assignment {
    int slot_index = 0;
    int superframe_phase = 0;
    int tag_id = 0;
    /// Anchor used on the first repetition; later repetitions advance
    /// round-robin (see Schedule::anchor_for).
    int anchor_id = 0;
    /// Which of the tag's slots within one period this is.
    int occurrence = 0;

    bool operator==(const Assignment&) const = default;
};

/// Slot plan that repeats every `period_superframes` frames. Every tag owns
/// `slots_per_tag` slots per period.
struct Schedule {
    SuperframeConfig frame;
    int period_superframes = 1;
    int slots_per_tag = 1;
    int n_tags = 0;
    int n_anchors = 1;
    std::vector<Assignment> assignments;

    /// Anchor a tag ranges with when `a` recurs in period number `cycle`.
    int anchor_for(const Assignment& a, std::uint64_t cycle) const;
    /// Slot index counted from the start of the run, for period `cycle`.
    std::uint64_t global_slot(const Assignment& a, std::uint64_t cycle) const;
    /// Start of global slot `g`, relative to the start of the run.
    double slot_time(std::uint64_t g) const;
    /// Nominal time between successive slots of one tag.
    double update_interval_s() const;
};

/// Thrown when the requested update load does not fit in the frame.
class CapacityExceeded : public std::runtime_error {
public:
    CapacityExceeded(double demand, int capacity);
    /// Requested ranging slots per superframe.
    double demand_slots_per_superframe() const noexcept { return demand_; }
    int capacity_slots_per_superframe() const noexcept { return capacity_; }

private:
    double demand_;
    int capacity_;
};

/// Requested slots per superframe: n_tags * rate * superframe length.
double slot_demand(int n_tags, double update_rate_hz, const SuperframeConfig& cfg);

/// Collision-free plan giving every tag one slot per 1/update_rate_hz.
///
/// The period is the fewest frames P for which P * rate * frame is a whole
/// number m of updates; each tag then gets m slots spread evenly over the
/// period, so consecutive slots of a tag sit 1/rate apart to within one
/// slot. Tags are placed in ascending id order.
Schedule build_schedule(int n_tags, double update_rate_hz, const SuperframeConfig& cfg = {},
                        int n_anchors = 8);

struct Conflict {
    enum class Kind { Collision, Starvation, OutOfRange };
    Kind kind;
    int slot_index;
    int superframe_phase;
    int tag_id;
    std::string detail;
};

std::vector<Conflict> validate_schedule(const Schedule& s);

/// `slot,phase,tag,anchor` rows, one per assignment, with header.
std::string schedule_csv(const Schedule& s);

}  // namespace uwb::tdma
