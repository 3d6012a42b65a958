#include "uwb/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "uwb/constants.hpp"

namespace uwb::eval {

namespace {

// Linear-interpolated quantile of sorted data.
double quantile(std::span<const double> sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double frac = pos - static_cast<double>(i);
    if (i + 1 >= sorted.size()) return sorted.back();
    return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

struct Moments {
    double mean = 0.0;
    double sigma = 0.0;
};

Moments population_moments(std::span<const double> xs) {
    double sum = 0.0;
    for (double x : xs) sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size()))};
}

// Welford running estimates; the MLE of a normal is mean and population sigma.
Moments gaussian_mle(std::span<const double> xs) {
    double mean = 0.0;
    double m2 = 0.0;
    std::size_t k = 0;
    for (double x : xs) {
        ++k;
        const double delta = x - mean;
        mean += delta / static_cast<double>(k);
        m2 += delta * (x - mean);
    }
    return {mean, std::sqrt(std::max(m2, 0.0) / static_cast<double>(k))};
}

}  // namespace

void GroundTruthTrack::validate() const {
    if (points.size() < 2) throw ValidationError("truth", "truth track needs at least two points");
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (!(points[i].t_s > points[i - 1].t_s)) {
            std::ostringstream os;
            os << "truth timestamps must be strictly increasing (row " << i + 1 << ")";
            throw ValidationError("t", os.str());
        }
    }
}

Vec2 GroundTruthTrack::position_at(double t) const {
    if (t <= points.front().t_s) return points.front().position;
    if (t >= points.back().t_s) return points.back().position;
    auto hi = std::upper_bound(points.begin(), points.end(), t,
                               [](double v, const TruthPoint& p) { return v < p.t_s; });
    auto lo = hi - 1;
    return lerp(lo->position, hi->position, (t - lo->t_s) / (hi->t_s - lo->t_s));
}

Alignment align(std::span<const loc::PositionFix> fixes, const GroundTruthTrack& truth,
                double max_gap_s) {
    if (!(max_gap_s > 0.0)) throw DomainError("max_gap_s must be positive");
    truth.validate();
    const double first = truth.points.front().t_s;
    const double last = truth.points.back().t_s;

    Alignment out;
    for (const auto& f : fixes) {
        if (f.t_s < first || f.t_s > last) {
            ++out.dropped;
            continue;
        }
        auto hi = std::lower_bound(truth.points.begin(), truth.points.end(), f.t_s,
                                   [](const TruthPoint& p, double v) { return p.t_s < v; });
        double gap = std::abs(hi->t_s - f.t_s);
        if (hi != truth.points.begin()) gap = std::min(gap, std::abs(f.t_s - (hi - 1)->t_s));
        if (gap > max_gap_s) {
            ++out.dropped;
            continue;
        }
        out.pairs.push_back({f, truth.position_at(f.t_s)});
    }
    if (out.pairs.empty()) throw NoOverlap("no fix overlaps the truth track");
    return out;
}

std::vector<HistogramBin> histogram(std::span<const double> values) {
    if (values.empty()) return {};
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    double lo = sorted.front();
    double hi = sorted.back();
    if (hi == lo) {
        // All equal: give the bins a nominal span around the single value.
        const double pad = std::max(std::abs(lo) * 1e-6, 1e-9);
        lo -= pad;
        hi += pad;
    }
    const double iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
    std::size_t bins = kMinHistogramBins;
    if (iqr > 0.0) {
        const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
        const double want = std::ceil((hi - lo) / width);
        bins = static_cast<std::size_t>(std::clamp(want, static_cast<double>(kMinHistogramBins),
                                                   static_cast<double>(kMaxHistogramBins)));
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    std::vector<HistogramBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].lo_m = lo + width * static_cast<double>(b);
        out[b].hi_m = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
    }
    for (double v : sorted) {
        auto b = static_cast<std::size_t>(std::floor((v - lo) / width));
        out[std::min(b, bins - 1)].count++;
    }
    return out;
}

ErrorStats error_stats_from_errors(std::span<const double> errors) {
    if (errors.empty()) throw DomainError("error statistics need at least one sample");
    ErrorStats s;
    s.n = errors.size();
    const auto m = population_moments(errors);
    s.mean_m = m.mean;
    s.sigma_m = m.sigma;
    s.max_m = *std::max_element(errors.begin(), errors.end());
    const auto fit = gaussian_mle(errors);
    s.fitted_mu_m = fit.mean;
    s.fitted_sigma_m = fit.sigma;
    s.histogram = histogram(errors);
    return s;
}

ErrorStats error_stats(std::span<const AlignedPair> pairs) {
    std::vector<double> errors;
    errors.reserve(pairs.size());
    for (const auto& p : pairs) errors.push_back(p.error_m());
    return error_stats_from_errors(errors);
}

double gaussian_pdf(double x, double mu, double sigma) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    const double z = (x - mu) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

std::optional<PercentNorm> parse_percent_norm(std::string_view s) {
    if (s == "path_scale") return PercentNorm::PathScale;
    if (s == "truth_distance") return PercentNorm::TruthDistance;
    return std::nullopt;
}

PercentError percent_distance_error(std::span<const AlignedPair> pairs, PercentNorm norm) {
    if (pairs.empty()) throw DomainError("percent error needs at least one pair");
    std::vector<double> cumulative(pairs.size(), 0.0);
    for (std::size_t k = 1; k < pairs.size(); ++k) {
        cumulative[k] = cumulative[k - 1] + distance(pairs[k].truth, pairs[k - 1].truth);
    }
    const double total = cumulative.back();
    if (!(total > 0.0)) throw DomainError("truth path has zero length");

    std::vector<double> pct;
    pct.reserve(pairs.size());
    const double path_scale = total / static_cast<double>(pairs.size());
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        const double scale = norm == PercentNorm::PathScale ? path_scale : cumulative[k];
        if (scale <= 0.0) continue;
        pct.push_back(100.0 * pairs[k].error_m() / scale);
    }
    const auto m = population_moments(pct);
    return {m.mean, m.sigma};
}

}  // namespace uwb::eval
