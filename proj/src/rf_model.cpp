#include "uwb/rf_model.hpp"

#include <cmath>
#include <string>

#include "uwb/constants.hpp"
#include "uwb/errors.hpp"

namespace uwb::rf {

namespace {

void require_positive(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw DomainError(std::string(what) + " must be positive and finite");
    }
}

}  // namespace

double ChannelParams::wavelength_m() const {
    require_positive(carrier_frequency_hz, "carrier_frequency_hz");
    return kSpeedOfLight / carrier_frequency_hz;
}

void ChannelParams::validate() const {
    require_positive(carrier_frequency_hz, "carrier_frequency_hz");
    require_positive(bandwidth_hz, "bandwidth_hz");
    require_positive(tx_power_w, "tx_power_w");
    require_positive(tx_gain_linear, "tx_gain_linear");
    require_positive(rx_gain_linear, "rx_gain_linear");
    if (!std::isfinite(path_loss_coeff_L) || !std::isfinite(freq_loss_factor_F)) {
        throw DomainError("obstacle loss factors must be finite");
    }
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double ratio) {
    require_positive(ratio, "power ratio");
    return 10.0 * std::log10(ratio);
}

double free_space_range(const ChannelParams& params, double rx_power_w) {
    params.validate();
    require_positive(rx_power_w, "rx_power_w");
    const double lambda = params.wavelength_m();
    return lambda / (4.0 * kPi) *
           std::sqrt(params.tx_power_w * params.tx_gain_linear * params.rx_gain_linear / rx_power_w);
}

double path_loss_db(const ChannelParams& params, double distance_m, int n_obstacles) {
    require_positive(distance_m, "distance_m");
    if (n_obstacles < 0) {
        throw DomainError("n_obstacles must be non-negative");
    }
    const double lambda = params.wavelength_m();
    return 20.0 * std::log10(4.0 * kPi * distance_m / lambda) +
           n_obstacles * params.loss_per_obstacle_db();
}

double snr_db(double p_signal_w, double p_noise_w) {
    require_positive(p_signal_w, "p_signal_w");
    require_positive(p_noise_w, "p_noise_w");
    return 10.0 * std::log10(p_signal_w / p_noise_w);
}

double channel_capacity_bps(double bandwidth_hz, double snr_linear) {
    require_positive(bandwidth_hz, "bandwidth_hz");
    if (!(snr_linear >= 0.0)) {
        throw DomainError("snr_linear must be non-negative");
    }
    return bandwidth_hz * std::log2(1.0 + snr_linear);
}

double range_resolution_m(double bandwidth_hz) {
    require_positive(bandwidth_hz, "bandwidth_hz");
    return kSpeedOfLight / (2.0 * bandwidth_hz);
}

double penetration_depth_m(double velocity_mps, double delay_s) {
    require_positive(velocity_mps, "velocity_mps");
    if (!(delay_s >= 0.0)) {
        throw DomainError("delay_s must be non-negative");
    }
    return velocity_mps * delay_s;
}

double thermal_noise_w(double bandwidth_hz) {
    require_positive(bandwidth_hz, "bandwidth_hz");
    return kBoltzmann * kNoiseTemperature * bandwidth_hz;
}

double received_power_w(const ChannelParams& params, double distance_m, int n_obstacles) {
    params.validate();
    const double loss = path_loss_db(params, distance_m, n_obstacles);
    return params.tx_power_w * params.tx_gain_linear * params.rx_gain_linear / db_to_linear(loss);
}

LinkBudget link_budget(const ChannelParams& params, double distance_m, int n_obstacles) {
    LinkBudget out;
    out.distance_m = distance_m;
    out.attenuation_db = path_loss_db(params, distance_m, n_obstacles);
    const double p_rx = received_power_w(params, distance_m, n_obstacles);
    const double p_noise = thermal_noise_w(params.bandwidth_hz);
    out.snr_db = snr_db(p_rx, p_noise);
    out.capacity_bps = channel_capacity_bps(params.bandwidth_hz, p_rx / p_noise);
    return out;
}

}  // namespace uwb::rf
