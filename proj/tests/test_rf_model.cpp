#include <doctest.h>

#include <cmath>
#include <random>

#include "uwb/constants.hpp"
#include "uwb/errors.hpp"
#include "uwb/rf_model.hpp"

using namespace uwb;
using namespace uwb::rf;

namespace {

// Reference values evaluated with mpmath at 40 digits.
constexpr double kQuarterWaveOver2Pi = 3.670265507105340e-3;  // lambda/(4 pi) at 6.5 GHz
constexpr double kLossAt1m = 48.70605035474049;                // dB
constexpr double kTenLog2 = 3.010299956639812;

ChannelParams unit_gains() {
    ChannelParams p;
    p.carrier_frequency_hz = 6.5e9;
    p.tx_gain_linear = 1.0;
    p.rx_gain_linear = 1.0;
    p.tx_power_w = 1.0;
    return p;
}

}  // namespace

TEST_CASE("free_space_range") {
    auto p = unit_gains();
    SUBCASE("equal powers give lambda over 4 pi") {
        CHECK(free_space_range(p, p.tx_power_w) == doctest::Approx(kQuarterWaveOver2Pi).epsilon(1e-14));
    }
    SUBCASE("one microwatt received from one watt") {
        CHECK(free_space_range(p, 1e-6) == doctest::Approx(1000 * kQuarterWaveOver2Pi).epsilon(1e-14));
    }
    SUBCASE("doubling both gains doubles the range") {
        const double base = free_space_range(p, 1e-6);
        p.tx_gain_linear = 2.0;
        p.rx_gain_linear = 2.0;
        CHECK(free_space_range(p, 1e-6) / base == doctest::Approx(2.0).epsilon(1e-15));
    }
    SUBCASE("non-positive received power") {
        CHECK_THROWS_AS(free_space_range(p, 0.0), DomainError);
        CHECK_THROWS_AS(free_space_range(p, -1.0), DomainError);
    }
}

TEST_CASE("path_loss_db") {
    auto p = unit_gains();
    CHECK(path_loss_db(p, 1.0, 0) == doctest::Approx(kLossAt1m).epsilon(1e-13));
    CHECK(path_loss_db(p, p.wavelength_m() / (4 * kPi), 0) == doctest::Approx(0.0).epsilon(1e-12));

    p.path_loss_coeff_L = 5.0;
    p.freq_loss_factor_F = 1.0;
    CHECK(path_loss_db(p, 0.7, 1) - path_loss_db(p, 0.7, 0) == doctest::Approx(5.0).epsilon(1e-12));

    CHECK_THROWS_AS(path_loss_db(p, 0.0, 0), DomainError);
    CHECK_THROWS_AS(path_loss_db(p, -0.1, 0), DomainError);
    CHECK_THROWS_AS(path_loss_db(p, 1.0, -1), DomainError);
}

TEST_CASE("path loss is strictly increasing in distance and obstacles") {
    ChannelParams p;
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ud(1e-3, 50.0);
    for (int i = 0; i < 1000; ++i) {
        double a = ud(rng), b = ud(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        CHECK(path_loss_db(p, a, 0) < path_loss_db(p, b, 0));
        const int n = i % 5;
        CHECK(path_loss_db(p, a, n) < path_loss_db(p, a, n + 1));
    }
}

TEST_CASE("free-space range and path loss agree") {
    ChannelParams p;
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> exponent(-14.0, -3.0);
    for (int i = 0; i < 1000; ++i) {
        const double pr = std::pow(10.0, exponent(rng));
        const double d = free_space_range(p, pr);
        const double expected = 10.0 * std::log10(p.tx_power_w * p.tx_gain_linear * p.rx_gain_linear / pr);
        CHECK(std::abs(path_loss_db(p, d, 0) - expected) < 1e-9);
    }
}

TEST_CASE("snr_db") {
    CHECK(snr_db(3.0, 3.0) == 0.0);
    CHECK(snr_db(100.0, 1.0) == doctest::Approx(20.0).epsilon(1e-15));
    CHECK(snr_db(2.0, 1.0) == doctest::Approx(kTenLog2).epsilon(1e-14));
    CHECK_THROWS_AS(snr_db(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(snr_db(1.0, -1.0), DomainError);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(1e-9, 10.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(rng), b = u(rng);
        CHECK(snr_db(a, b) == doctest::Approx(-snr_db(b, a)).epsilon(1e-12));
    }
}

TEST_CASE("channel_capacity_bps") {
    CHECK(channel_capacity_bps(500e6, 1.0) == 5.0e8);
    CHECK(channel_capacity_bps(500e6, 0.0) == 0.0);
    CHECK(channel_capacity_bps(500e6, 1023.0) == 5.0e9);
    CHECK_THROWS_AS(channel_capacity_bps(500e6, -0.5), DomainError);
    CHECK_THROWS_AS(channel_capacity_bps(0.0, 1.0), DomainError);
}

TEST_CASE("capacity is increasing, concave in SNR, and linear in bandwidth") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> us(0.0, 1000.0);
    std::uniform_real_distribution<double> ub(1e6, 1e9);
    for (int i = 0; i < 500; ++i) {
        const double s = us(rng), b = ub(rng);
        const double h = 0.5;
        CHECK(channel_capacity_bps(b, s) < channel_capacity_bps(b, s + h));
        CHECK(channel_capacity_bps(b, s) < channel_capacity_bps(b * 1.5, s + 1e-3));
        // Midpoint concavity.
        const double mid = channel_capacity_bps(b, s + h);
        CHECK(2 * mid >= channel_capacity_bps(b, s) + channel_capacity_bps(b, s + 2 * h));
        CHECK(channel_capacity_bps(b, s) / b ==
              doctest::Approx(channel_capacity_bps(2 * b, s) / (2 * b)).epsilon(1e-14));
    }
}

TEST_CASE("range_resolution_m") {
    CHECK(range_resolution_m(500e6) == 0.299792458);
    CHECK(range_resolution_m(1e9) == 0.149896229);
    CHECK(range_resolution_m(149896229.0) == 1.0);
    CHECK_THROWS_AS(range_resolution_m(0.0), DomainError);
}

TEST_CASE("penetration_depth_m") {
    CHECK(penetration_depth_m(kSpeedOfLight, 1e-9) == doctest::Approx(0.299792458).epsilon(1e-15));
    CHECK(penetration_depth_m(kSpeedOfLight, 0.0) == 0.0);
    CHECK(penetration_depth_m(kSpeedOfLight / 2, 2e-9) == doctest::Approx(0.299792458).epsilon(1e-15));
    CHECK_THROWS_AS(penetration_depth_m(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(penetration_depth_m(1.0, -1.0), DomainError);
}

TEST_CASE("link budget attenuation is non-negative beyond the reference distance") {
    ChannelParams p;
    const double d0 = p.wavelength_m() / (4 * kPi);
    for (double d = d0; d < 10.0; d *= 1.7) {
        const auto lb = link_budget(p, d, 0);
        CHECK(lb.attenuation_db >= -1e-12);
        CHECK(lb.capacity_bps >= 0.0);
    }
}

TEST_CASE("db conversions invert") {
    for (double db : {-30.0, -3.0, 0.0, 2.5, 48.7}) {
        CHECK(linear_to_db(db_to_linear(db)) == doctest::Approx(db).epsilon(1e-12));
    }
    CHECK_THROWS_AS(linear_to_db(0.0), DomainError);
}
