#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "uwb/errors.hpp"
#include "uwb/evaluation.hpp"
#include "uwb/sim.hpp"
#include "uwb/tdma.hpp"

using namespace uwb;
using namespace uwb::eval;

namespace {

loc::PositionFix fix_at(double t, Vec2 p) {
    loc::PositionFix f;
    f.t_s = t;
    f.position = p;
    return f;
}

GroundTruthTrack square_track() {
    GroundTruthTrack g;
    g.points = {{0.0, {0, 0}, "a"}, {1.0, {1, 0}, "b"}, {2.0, {1, 1}, "c"}, {3.0, {0, 1}, "d"}};
    return g;
}

std::vector<AlignedPair> pairs_from(const std::vector<Vec2>& est, const std::vector<Vec2>& truth) {
    std::vector<AlignedPair> out;
    for (std::size_t i = 0; i < est.size(); ++i) {
        out.push_back({fix_at(static_cast<double>(i), est[i]), truth[i]});
    }
    return out;
}

// Error magnitudes of a simulated run against its own trajectory.
std::vector<AlignedPair> simulated_pairs(const std::vector<Rect>& obstacles, Rect region) {
    sim::SimulationInputs in;
    in.arena.obstacles = obstacles;
    in.trajectory = sim::random_walk(in.arena, 20.0, 0.05, 0.02, 8, region);
    in.schedule = tdma::build_schedule(1, 150.0);
    in.seed = 5;
    const auto r = sim::simulate(in);
    std::vector<AlignedPair> out;
    for (const auto& f : r.fixes) out.push_back({f, in.trajectory.position_at(f.t_s)});
    return out;
}

}  // namespace

TEST_CASE("align") {
    const auto truth = square_track();
    SUBCASE("fix times equal to truth times") {
        std::vector<loc::PositionFix> fixes;
        for (const auto& p : truth.points) fixes.push_back(fix_at(p.t_s, {5, 5}));
        const auto a = align(fixes, truth, 1.0);
        REQUIRE(a.pairs.size() == 4);
        CHECK(a.dropped == 0);
        for (std::size_t i = 0; i < 4; ++i) CHECK(a.pairs[i].truth == truth.points[i].position);
    }
    SUBCASE("midpoint interpolation") {
        const std::vector fixes{fix_at(1.5, {0, 0})};
        const auto a = align(fixes, truth, 1.0);
        CHECK(a.pairs[0].truth == Vec2{1.0, 0.5});
    }
    SUBCASE("fix beyond the track is dropped") {
        const std::vector fixes{fix_at(0.5, {0, 0}), fix_at(13.0, {0, 0})};
        const auto a = align(fixes, truth, 1.0);
        CHECK(a.pairs.size() == 1);
        CHECK(a.dropped == 1);
    }
    SUBCASE("fix inside a wide truth gap is dropped") {
        GroundTruthTrack sparse;
        sparse.points = {{0.0, {0, 0}, ""}, {10.0, {1, 0}, ""}};
        const std::vector fixes{fix_at(0.2, {0, 0}), fix_at(5.0, {0, 0})};
        const auto a = align(fixes, sparse, 1.0);
        CHECK(a.pairs.size() == 1);
        CHECK(a.dropped == 1);
    }
    SUBCASE("no overlap") {
        const std::vector fixes{fix_at(100.0, {0, 0})};
        CHECK_THROWS_AS(align(fixes, truth, 1.0), NoOverlap);
        CHECK_THROWS_AS(align(std::span<const loc::PositionFix>{}, truth, 1.0), NoOverlap);
    }
    SUBCASE("bad inputs") {
        const std::vector fixes{fix_at(1.0, {0, 0})};
        CHECK_THROWS_AS(align(fixes, truth, 0.0), DomainError);
        GroundTruthTrack bad;
        bad.points = {{1.0, {0, 0}, ""}, {1.0, {1, 0}, ""}};
        CHECK_THROWS_AS(align(fixes, bad, 1.0), ValidationError);
    }
    SUBCASE("nothing dropped inside the span") {
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> ut(0.0, 3.0);
        std::vector<loc::PositionFix> fixes;
        for (int i = 0; i < 500; ++i) fixes.push_back(fix_at(ut(rng), {0, 0}));
        const auto a = align(fixes, truth, 1.0);
        CHECK(a.dropped == 0);
        CHECK(a.pairs.size() == 500);
    }
}

TEST_CASE("error_stats examples") {
    SUBCASE("identical errors") {
        const std::vector<double> e(10, 0.25);
        const auto s = error_stats_from_errors(e);
        CHECK(s.mean_m == doctest::Approx(0.25).epsilon(1e-15));
        CHECK(s.sigma_m == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(s.max_m == 0.25);
    }
    SUBCASE("3, 4, 5") {
        const std::vector<double> e{3, 4, 5};
        const auto s = error_stats_from_errors(e);
        CHECK(s.n == 3);
        CHECK(s.mean_m == 4.0);
        CHECK(s.sigma_m == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
        CHECK(s.max_m == 5.0);
    }
    SUBCASE("from aligned pairs") {
        const auto p = pairs_from({{3, 0}, {0, 4}, {3, 4}}, {{0, 0}, {0, 0}, {0, 0}});
        const auto s = error_stats(p);
        CHECK(s.mean_m == 4.0);
        CHECK(s.max_m == 5.0);
    }
    SUBCASE("empty input") {
        CHECK_THROWS_AS(error_stats_from_errors(std::span<const double>{}), DomainError);
    }
}

TEST_CASE("fitted parameters of a zero-truncated Gaussian sample") {
    // Raw truncation of N(0.356, 0.270) moves the mean to 0.4058 (quadrature
    // value); the compensated sampler puts it back on 0.356.
    std::mt19937_64 rng(2718);
    const sim::MagnitudeSampler raw(0.356, 0.270, false);
    const sim::MagnitudeSampler compensated(0.356, 0.270, true);
    std::vector<double> a, b;
    for (int i = 0; i < 100000; ++i) {
        a.push_back(raw(rng));
        b.push_back(compensated(rng));
    }
    const auto sa = error_stats_from_errors(a);
    CHECK(std::abs(sa.fitted_mu_m - 0.4058283570076140) < 0.005);
    CHECK(std::abs(sa.fitted_sigma_m - 0.2295174061878776) < 0.005);
    const auto sb = error_stats_from_errors(b);
    CHECK(std::abs(sb.fitted_mu_m - 0.356) < 0.02);
    CHECK(std::abs(sb.fitted_sigma_m - 0.270) < 0.02);
}

TEST_CASE("error_stats invariants") {
    std::mt19937_64 rng(44);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Vec2> est, truth;
        const int n = 5 + trial * 20;
        for (int i = 0; i < n; ++i) {
            truth.push_back({u(rng), u(rng)});
            est.push_back(truth.back() + Vec2{0.1 * u(rng), 0.1 * u(rng)});
        }
        const auto base = error_stats(pairs_from(est, truth));

        CHECK(base.max_m >= base.mean_m);
        CHECK(base.sigma_m >= 0.0);
        CHECK(std::abs(base.fitted_mu_m - base.mean_m) < 1e-12);
        CHECK(std::abs(base.fitted_sigma_m - base.sigma_m) < 1e-12);
        std::size_t total = 0;
        for (const auto& b : base.histogram) total += b.count;
        CHECK(total == base.n);
        CHECK(base.histogram.size() >= kMinHistogramBins);
        CHECK(base.histogram.size() <= kMaxHistogramBins);

        // Rigid motion applied to both tracks.
        const double th = u(rng) * 3.0;
        const Vec2 shift{u(rng) * 10, u(rng) * 10};
        auto move = [&](Vec2 p) {
            return Vec2{std::cos(th) * p.x - std::sin(th) * p.y, std::sin(th) * p.x + std::cos(th) * p.y} +
                   shift;
        };
        std::vector<Vec2> est2, truth2;
        for (int i = 0; i < n; ++i) {
            est2.push_back(move(est[i]));
            truth2.push_back(move(truth[i]));
        }
        const auto moved = error_stats(pairs_from(est2, truth2));
        CHECK(moved.mean_m == doctest::Approx(base.mean_m).epsilon(1e-9));
        CHECK(moved.sigma_m == doctest::Approx(base.sigma_m).epsilon(1e-6));
        CHECK(moved.max_m == doctest::Approx(base.max_m).epsilon(1e-9));

        // Power-of-two scaling is exact in floating point.
        const double k = 4.0;
        std::vector<Vec2> est3, truth3;
        for (int i = 0; i < n; ++i) {
            est3.push_back(est[i] * k);
            truth3.push_back(truth[i] * k);
        }
        const auto scaled = error_stats(pairs_from(est3, truth3));
        CHECK(scaled.mean_m == k * base.mean_m);
        CHECK(scaled.sigma_m == k * base.sigma_m);
        CHECK(scaled.max_m == k * base.max_m);

        // General scaling to rounding.
        const double k2 = 0.37;
        std::vector<Vec2> est4, truth4;
        for (int i = 0; i < n; ++i) {
            est4.push_back(est[i] * k2);
            truth4.push_back(truth[i] * k2);
        }
        const auto s4 = error_stats(pairs_from(est4, truth4));
        CHECK(s4.mean_m == doctest::Approx(k2 * base.mean_m).epsilon(1e-12));
        CHECK(s4.sigma_m == doctest::Approx(k2 * base.sigma_m).epsilon(1e-9));
    }
}

TEST_CASE("histogram") {
    SUBCASE("bins cover the data and use at least 20 bins") {
        std::vector<double> v(1000);
        std::iota(v.begin(), v.end(), 0.0);
        const auto h = histogram(v);
        CHECK(h.size() >= 20);
        CHECK(h.front().lo_m == 0.0);
        CHECK(h.back().hi_m == 999.0);
        std::size_t total = 0;
        for (const auto& b : h) total += b.count;
        CHECK(total == 1000);
        for (std::size_t i = 1; i < h.size(); ++i) CHECK(h[i].lo_m == doctest::Approx(h[i - 1].hi_m));
    }
    SUBCASE("Freedman-Diaconis width for large samples") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> n(0.0, 1.0);
        std::vector<double> v(100000);
        for (auto& x : v) x = n(rng);
        const auto h = histogram(v);
        std::sort(v.begin(), v.end());
        const double iqr = v[74999] - v[24999];
        const double width = 2 * iqr / std::cbrt(100000.0);
        const double expected = std::ceil((v.back() - v.front()) / width);
        CHECK(std::abs(static_cast<double>(h.size()) - expected) <= 1.0);
    }
    SUBCASE("constant data") {
        const std::vector<double> v(7, 2.0);
        const auto h = histogram(v);
        CHECK(h.size() == kMinHistogramBins);
        std::size_t total = 0;
        for (const auto& b : h) total += b.count;
        CHECK(total == 7);
    }
    SUBCASE("extreme outlier is capped") {
        std::vector<double> v(100, 1.0);
        for (int i = 0; i < 100; ++i) v[i] += i * 1e-3;
        v.push_back(1e9);
        CHECK(histogram(v).size() == kMaxHistogramBins);
    }
}

TEST_CASE("gaussian_pdf") {
    CHECK(gaussian_pdf(0.356, 0.356, 0.270) == doctest::Approx(1.4775640014867877).epsilon(1e-14));
    CHECK(gaussian_pdf(0.356 + 0.270, 0.356, 0.270) ==
          doctest::Approx(1.4775640014867877 * std::exp(-0.5)).epsilon(1e-13));
    CHECK(gaussian_pdf(1.0, 0.0, 1.0) == gaussian_pdf(-1.0, 0.0, 1.0));
    CHECK_THROWS_AS(gaussian_pdf(0.0, 0.0, 0.0), DomainError);
    CHECK_THROWS_AS(gaussian_pdf(0.0, 0.0, -1.0), DomainError);

    // Composite Simpson over mu +/- 6 sigma.
    const double mu = 0.356, s = 0.270;
    const int n = 20000;
    const double a = mu - 6 * s, h = 12 * s / n;
    double sum = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        sum += w * gaussian_pdf(a + i * h, mu, s);
    }
    CHECK(std::abs(sum * h / 3.0 - 1.0) < 1e-6);
}

TEST_CASE("percent_distance_error") {
    SUBCASE("perfect estimate") {
        const auto p = pairs_from({{0, 0}, {1, 0}, {2, 0}}, {{0, 0}, {1, 0}, {2, 0}});
        const auto r = percent_distance_error(p);
        CHECK(r.mean_pct == 0.0);
        CHECK(r.sigma_pct == 0.0);
    }
    SUBCASE("0.1 m error with unit path scale") {
        // Four samples along a 4 m path: path scale 1 m.
        const auto p = pairs_from({{0, 0.1}, {2, 0.1}, {3, 0.1}, {4, 0.1}},
                                  {{0, 0}, {2, 0}, {3, 0}, {4, 0}});
        const auto r = percent_distance_error(p);
        CHECK(r.mean_pct == doctest::Approx(10.0).epsilon(1e-12));
        CHECK(r.sigma_pct == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("truth-distance normalization") {
        const auto p = pairs_from({{0, 0.1}, {1, 0.1}, {2, 0.1}}, {{0, 0}, {1, 0}, {2, 0}});
        // First sample has no travelled distance and is skipped; then 10% and 5%.
        const auto r = percent_distance_error(p, PercentNorm::TruthDistance);
        CHECK(r.mean_pct == doctest::Approx(7.5).epsilon(1e-12));
        CHECK(r.sigma_pct == doctest::Approx(2.5).epsilon(1e-12));
    }
    SUBCASE("zero path length") {
        const auto p = pairs_from({{0, 0.1}, {0, 0.2}}, {{0, 0}, {0, 0}});
        CHECK_THROWS_AS(percent_distance_error(p), DomainError);
        CHECK_THROWS_AS(percent_distance_error(std::span<const AlignedPair>{}), DomainError);
    }
    SUBCASE("NLoS runs deviate more than LoS runs") {
        const Rect left{0.0, 0.0, 0.55, sim::kArenaHeight};
        const auto los = percent_distance_error(simulated_pairs({}, left));
        const auto nlos =
            percent_distance_error(simulated_pairs({{0.62, 0.0, 0.64, sim::kArenaHeight}}, left));
        CHECK(nlos.mean_pct > los.mean_pct);
    }
    SUBCASE("norm names") {
        CHECK(parse_percent_norm("path_scale") == PercentNorm::PathScale);
        CHECK(parse_percent_norm("truth_distance") == PercentNorm::TruthDistance);
        CHECK_FALSE(parse_percent_norm("other").has_value());
    }
}
