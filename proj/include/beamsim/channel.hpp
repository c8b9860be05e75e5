// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/array.hpp"
#include "beamsim/common.hpp"

#include <nlohmann/json.hpp>
#include <vector>

namespace beamsim
{

// Full scenario description. site_seed fixes the site layout (hotspot
// directions, roadway, pathloss range); rng_seed fixes the user/channel
// realizations drawn on that site. Together they determine every sample.
struct ScenarioConfig
{
    ArrayGeometry tx_array{4, 8, 0.5, 0.5};
    arma::uword n_rx = 4;     // UE antennas (ULA)
    double rx_spacing = 0.5;

    arma::uword n_users = 32;       // site population per generated tensor
    arma::uword n_slots = 16;       // time slots per channel window
    arma::uword n_subcarriers = 64; // frequency bins per channel window

    double carrier_hz = 3.5e9;
    double subcarrier_hz = 15e3;
    double slot_s = 1e-3;

    // Site statistics
    arma::uword n_hotspots = 3;
    double hotspot_spread_deg = 8.0;
    double vehicular_fraction = 0.25;
    double vehicular_speed_mean = 25.0; // m/s
    double vehicular_speed_std = 2.2360679774997896;
    double pedestrian_speed_max = 3.0;  // uniform [0, max] m/s

    // Clustered multipath statistics
    arma::uword n_clusters = 6;
    arma::uword paths_per_cluster = 8;
    double cluster_angle_spread_deg = 12.0;
    double path_angle_spread_deg = 3.0;
    double cluster_power_std_db = 3.0;
    double delay_spread_s = 300e-9;
    double elevation_center_deg = 97.0;
    double elevation_spread_deg = 4.0;
    double pathloss_db_min = 88.0;
    double pathloss_db_max = 102.0;

    // Power and noise (linear units, milliwatt reference -> dBm)
    double tx_power = 1000.0;  // per resource element before the 1/sqrt(K*N_T) scaling
    double noise_power = 1e-9; // per resource element per rx antenna
    double snr_cap_db = 60.0;

    // Beam management
    double ssb_band_fraction = 0.2;
    double include_prob = 0.8;

    // Overhead accounting
    arma::uword frame_slots = 2048;   // accounting frame; >= n_slots
    double signaling_overhead = 0.10;
    double mcs0_bits_per_re = 0.2344; // uplink feedback spectral efficiency
    arma::uword rb_re = 12;           // resource elements per uplink resource block

    std::uint64_t site_seed = 1;
    std::uint64_t rng_seed = 1;

    void validate() const;

    arma::uword n_tx() const { return tx_array.size(); }
    arma::uword ssb_band_size() const;
    arma::uword ssb_band_start() const; // centered contiguous band

    nlohmann::json to_json() const;
    static ScenarioConfig from_json(const nlohmann::json &j);
    // FNV-1a over the canonical JSON dump; recorded in dataset headers.
    std::uint64_t config_hash() const;
};

// Channel realizations for a set of users. Per user the layout is a cube of
// n_rx x n_tx slabs, slice index s = t * n_subcarriers + k.
struct ChannelTensor
{
    arma::uword n_users = 0, n_slots = 0, n_subcarriers = 0, n_rx = 0, n_tx = 0;
    std::vector<arma::cx_cube> h;

    const arma::cx_mat &at(arma::uword user, arma::uword slot, arma::uword subcarrier) const;
    arma::cx_mat &at(arma::uword user, arma::uword slot, arma::uword subcarrier);

    ChannelTensor select_users(const arma::uvec &users) const;
    void validate() const;
};

// Clustered delay-line generator. Every draw derives from
// (cfg.site_seed, cfg.rng_seed); equal configs give equal tensors.
ChannelTensor generate_channels(const ScenarioConfig &cfg);

// Mean |h|^2 per (rx, tx, t, k) entry for one user, used by tests to verify
// the pathloss normalization.
double mean_entry_power(const ChannelTensor &h, arma::uword user);

} // namespace beamsim
