#pragma once

// Closed-form RF link models for the UWB channel. All inputs and outputs are
// SI linear units unless the name says `_db`; conversions are explicit.

namespace uwb::rf {

struct ChannelParams {
    double carrier_frequency_hz = 6.5e9;
    double bandwidth_hz = 500e6;
    /// Roughly -41.3 dBm/MHz spread over 500 MHz.
    double tx_power_w = 3.7e-5;
    /// 2.5 dBi omnidirectional antenna.
    double tx_gain_linear = 1.7782794100389228;
    double rx_gain_linear = 1.7782794100389228;
    /// L and F multiply into a per-obstacle attenuation in dB.
    double path_loss_coeff_L = 5.0;
    double freq_loss_factor_F = 1.0;

    double wavelength_m() const;
    double loss_per_obstacle_db() const { return path_loss_coeff_L * freq_loss_factor_F; }
    /// Throws DomainError when an invariant is violated.
    void validate() const;
};

struct LinkBudget {
    double distance_m = 0.0;
    double attenuation_db = 0.0;
    double snr_db = 0.0;
    double capacity_bps = 0.0;
};

double db_to_linear(double db);
double linear_to_db(double ratio);

/// Free-space distance at which the received power drops to `rx_power_w`.
double free_space_range(const ChannelParams& params, double rx_power_w);

/// Free-space spreading loss plus `n_obstacles` times the per-obstacle loss.
double path_loss_db(const ChannelParams& params, double distance_m, int n_obstacles);

double snr_db(double p_signal_w, double p_noise_w);

/// Shannon-Hartley capacity. `snr_linear` is a power ratio, not dB.
double channel_capacity_bps(double bandwidth_hz, double snr_linear);

/// Smallest resolvable range difference for a pulse of the given bandwidth.
double range_resolution_m(double bandwidth_hz);

double penetration_depth_m(double velocity_mps, double delay_s);

/// Thermal noise floor kTB at 290 K.
double thermal_noise_w(double bandwidth_hz);

double received_power_w(const ChannelParams& params, double distance_m, int n_obstacles);

/// Attenuation, SNR against the thermal floor, and capacity at one distance.
LinkBudget link_budget(const ChannelParams& params, double distance_m, int n_obstacles);

}  // namespace uwb::rf
