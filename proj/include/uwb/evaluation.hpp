#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uwb/errors.hpp"
#include "uwb/geometry.hpp"
#include "uwb/localization.hpp"

namespace uwb::eval {

struct TruthPoint {
    double t_s = 0.0;
    Vec2 position;
    std::string label;
};

struct GroundTruthTrack {
    std::vector<TruthPoint> points;

    /// Throws ValidationError unless there are >= 2 strictly increasing points.
    void validate() const;
    Vec2 position_at(double t_s) const;
};

struct AlignedPair {
    loc::PositionFix fix;
    Vec2 truth;

    double error_m() const { return distance(fix.position, truth); }
};

struct Alignment {
    std::vector<AlignedPair> pairs;
    std::size_t dropped = 0;
};

class NoOverlap : public DomainError {
public:
    using DomainError::DomainError;
};

/// Pair each fix with the truth track linearly interpolated at its time.
/// Fixes outside the track's time span, or more than `max_gap_s` away from
/// every truth point, are dropped and counted.
Alignment align(std::span<const loc::PositionFix> fixes, const GroundTruthTrack& truth,
                double max_gap_s);

struct HistogramBin {
    double lo_m = 0.0;
    double hi_m = 0.0;
    std::size_t count = 0;
};

struct ErrorStats {
    std::size_t n = 0;
    double mean_m = 0.0;
    /// Population standard deviation (divisor n).
    double sigma_m = 0.0;
    double max_m = 0.0;
    /// Gaussian maximum-likelihood fit.
    double fitted_mu_m = 0.0;
    double fitted_sigma_m = 0.0;
    std::vector<HistogramBin> histogram;
};

inline constexpr std::size_t kMinHistogramBins = 20;
inline constexpr std::size_t kMaxHistogramBins = 1000;

ErrorStats error_stats(std::span<const AlignedPair> pairs);
ErrorStats error_stats_from_errors(std::span<const double> errors);

/// Freedman-Diaconis binning, clamped to [kMinHistogramBins, kMaxHistogramBins].
std::vector<HistogramBin> histogram(std::span<const double> values);

double gaussian_pdf(double x, double mu, double sigma);

enum class PercentNorm {
    /// Total truth path length divided by the number of samples.
    PathScale,
    /// Truth path length travelled up to each sample.
    TruthDistance,
};

std::optional<PercentNorm> parse_percent_norm(std::string_view s);

struct PercentError {
    double mean_pct = 0.0;
    double sigma_pct = 0.0;
};

/// Position error as a percentage of a path-length scale. Pairs must be in
/// time order. Throws DomainError when the truth path has zero length.
PercentError percent_distance_error(std::span<const AlignedPair> pairs,
                                    PercentNorm norm = PercentNorm::PathScale);

}  // namespace uwb::eval
