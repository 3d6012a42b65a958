#include "uwb/tdma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "uwb/errors.hpp"

namespace uwb::tdma {

namespace {

// Absorbs representation error in products such as 750 * 0.2 * 0.1.
constexpr double kRateTolerance = 1e-9;
constexpr int kMaxPeriod = 10000;

}  // namespace

void SuperframeConfig::validate() const {
    if (!(superframe_s > 0.0) || !std::isfinite(superframe_s)) {
        throw DomainError("superframe_s must be positive");
    }
    if (slots_per_superframe < 1) throw DomainError("slots_per_superframe must be >= 1");
}

CapacityExceeded::CapacityExceeded(double demand, int capacity)
    : std::runtime_error([&] {
          std::ostringstream os;
          os << "capacity exceeded: demand " << demand << " slots/superframe > capacity "
             << capacity;
          return os.str();
      }()),
      demand_(demand),
      capacity_(capacity) {}

int Schedule::anchor_for(const Assignment& a, std::uint64_t cycle) const {
    const std::uint64_t k = cycle * static_cast<std::uint64_t>(slots_per_tag) +
                            static_cast<std::uint64_t>(a.occurrence);
    return static_cast<int>((static_cast<std::uint64_t>(a.anchor_id) + k) %
                            static_cast<std::uint64_t>(n_anchors));
}

std::uint64_t Schedule::global_slot(const Assignment& a, std::uint64_t cycle) const {
    const auto s = static_cast<std::uint64_t>(frame.slots_per_superframe);
    const auto frame_index = cycle * static_cast<std::uint64_t>(period_superframes) +
                             static_cast<std::uint64_t>(a.superframe_phase);
    return frame_index * s + static_cast<std::uint64_t>(a.slot_index);
}

double Schedule::slot_time(std::uint64_t g) const {
    return static_cast<double>(g) * frame.superframe_s / frame.slots_per_superframe;
}

double Schedule::update_interval_s() const {
    return period_superframes * frame.superframe_s / slots_per_tag;
}

double slot_demand(int n_tags, double update_rate_hz, const SuperframeConfig& cfg) {
    return n_tags * update_rate_hz * cfg.superframe_s;
}

Schedule build_schedule(int n_tags, double update_rate_hz, const SuperframeConfig& cfg,
                        int n_anchors) {
    cfg.validate();
    if (n_tags < 1) throw DomainError("n_tags must be >= 1");
    if (!(update_rate_hz > 0.0) || !std::isfinite(update_rate_hz)) {
        throw DomainError("update_rate_hz must be positive");
    }
    if (n_anchors < 1) throw DomainError("n_anchors must be >= 1");

    const double demand = slot_demand(n_tags, update_rate_hz, cfg);
    if (demand > cfg.slots_per_superframe * (1.0 + kRateTolerance)) {
        throw CapacityExceeded(demand, cfg.slots_per_superframe);
    }

    Schedule s;
    s.frame = cfg;
    s.n_tags = n_tags;
    s.n_anchors = n_anchors;

    // Smallest period (in frames) holding a whole number of updates, so the
    // spacing P*S/m slots equals 1/rate exactly. Irrational-looking rates fall
    // back to the closest ratio found within kMaxPeriod frames.
    const double per_frame = update_rate_hz * cfg.superframe_s;
    double best_err = std::numeric_limits<double>::infinity();
    for (int p = 1; p <= kMaxPeriod; ++p) {
        const double want = p * per_frame;
        const double m = std::max(1.0, std::round(want));
        const double err = std::abs(m - want) / want;
        if (err < best_err) {
            best_err = err;
            s.period_superframes = p;
            s.slots_per_tag = static_cast<int>(m);
        }
        if (err <= kRateTolerance) break;
    }
    const std::int64_t capacity_slots =
        static_cast<std::int64_t>(s.period_superframes) * cfg.slots_per_superframe;
    if (static_cast<std::int64_t>(n_tags) * s.slots_per_tag > capacity_slots) {
        throw CapacityExceeded(demand, cfg.slots_per_superframe);
    }

    // Tag i's j-th slot sits at floor(j * spacing) + i on the period grid,
    // spacing = period_slots / slots_per_tag. Capacity guarantees
    // n_tags <= floor(spacing), so offsets never collide.
    const std::int64_t period_slots = capacity_slots;
    s.assignments.reserve(static_cast<std::size_t>(n_tags) * s.slots_per_tag);
    for (int tag = 0; tag < n_tags; ++tag) {
        for (int j = 0; j < s.slots_per_tag; ++j) {
            const std::int64_t g = (j * period_slots) / s.slots_per_tag + tag;
            Assignment a;
            a.slot_index = static_cast<int>(g % cfg.slots_per_superframe);
            a.superframe_phase = static_cast<int>(g / cfg.slots_per_superframe);
            a.tag_id = tag;
            a.anchor_id = tag % n_anchors;
            a.occurrence = j;
            s.assignments.push_back(a);
        }
    }
    std::sort(s.assignments.begin(), s.assignments.end(), [](const auto& l, const auto& r) {
        return std::tie(l.superframe_phase, l.slot_index) <
               std::tie(r.superframe_phase, r.slot_index);
    });
    return s;
}

std::vector<Conflict> validate_schedule(const Schedule& s) {
    std::vector<Conflict> out;
    const int period = std::max(1, s.period_superframes);
    const int slots = s.frame.slots_per_superframe;
    const std::int64_t period_slots = static_cast<std::int64_t>(period) * slots;

    std::map<std::pair<int, int>, int> owner;
    std::map<int, std::vector<std::int64_t>> per_tag;
    for (const auto& a : s.assignments) {
        if (a.slot_index < 0 || a.slot_index >= slots || a.superframe_phase < 0) {
            out.push_back({Conflict::Kind::OutOfRange, a.slot_index, a.superframe_phase, a.tag_id,
                           "slot outside the superframe"});
            continue;
        }
        const int phase = a.superframe_phase % period;
        const auto key = std::make_pair(a.slot_index, phase);
        auto [it, inserted] = owner.emplace(key, a.tag_id);
        if (!inserted) {
            std::ostringstream os;
            os << "slot " << a.slot_index << " phase " << phase << " shared by tags "
               << it->second << " and " << a.tag_id;
            out.push_back({Conflict::Kind::Collision, a.slot_index, phase, a.tag_id, os.str()});
            continue;
        }
        per_tag[a.tag_id].push_back(static_cast<std::int64_t>(phase) * slots + a.slot_index);
    }

    // A tag meets its update period when it holds its full share of slots and
    // no cyclic gap exceeds the nominal spacing by more than one slot.
    const double spacing = static_cast<double>(period_slots) / std::max(1, s.slots_per_tag);
    for (int tag = 0; tag < s.n_tags; ++tag) {
        auto it = per_tag.find(tag);
        const std::size_t have = it == per_tag.end() ? 0 : it->second.size();
        if (have < static_cast<std::size_t>(s.slots_per_tag)) {
            std::ostringstream os;
            os << "tag " << tag << " holds " << have << " of " << s.slots_per_tag
               << " slots per period";
            out.push_back({Conflict::Kind::Starvation, -1, -1, tag, os.str()});
            continue;
        }
        auto g = it->second;
        std::sort(g.begin(), g.end());
        for (std::size_t k = 0; k < g.size(); ++k) {
            const std::int64_t next = k + 1 < g.size() ? g[k + 1] : g[0] + period_slots;
            const auto gap = static_cast<double>(next - g[k]);
            if (gap > spacing + 1.0) {
                std::ostringstream os;
                os << "tag " << tag << " waits " << gap << " slots, nominal " << spacing;
                out.push_back({Conflict::Kind::Starvation, static_cast<int>(g[k] % slots),
                               static_cast<int>(g[k] / slots), tag, os.str()});
            }
        }
    }
    return out;
}

std::string schedule_csv(const Schedule& s) {
    std::ostringstream os;
    os << "slot,phase,tag,anchor\n";
    for (const auto& a : s.assignments) {
        os << a.slot_index << ',' << a.superframe_phase << ',' << a.tag_id << ',' << a.anchor_id
           << '\n';
    }
    return os.str();
}

}  // namespace uwb::tdma
