// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/channel.hpp"

namespace beamsim
{

// ---------- SCENARIO CONFIG ----------

void ScenarioConfig::validate() const
{
    tx_array.validate();
    if (n_rx == 0 || n_users == 0 || n_slots == 0 || n_subcarriers == 0)
        throw std::invalid_argument("ScenarioConfig: dimensions must be positive");
    if (!(rx_spacing > 0.0))
        throw std::invalid_argument("ScenarioConfig: rx_spacing must be positive");
    if (!(carrier_hz > 0.0) || !(subcarrier_hz > 0.0) || !(slot_s > 0.0))
        throw std::invalid_argument("ScenarioConfig: carrier, subcarrier spacing and slot duration must be positive");
    if (vehicular_fraction < 0.0 || vehicular_fraction > 1.0)
        throw std::invalid_argument("ScenarioConfig: vehicular_fraction must be in [0,1]");
    if (n_hotspots == 0 || n_clusters == 0 || paths_per_cluster == 0)
        throw std::invalid_argument("ScenarioConfig: hotspot/cluster/path counts must be positive");
    if (!(delay_spread_s > 0.0))
        throw std::invalid_argument("ScenarioConfig: delay_spread_s must be positive");
    if (pathloss_db_max < pathloss_db_min)
        throw std::invalid_argument("ScenarioConfig: pathloss range is inverted");
    if (!(tx_power > 0.0) || !(noise_power >= 0.0))
        throw std::invalid_argument("ScenarioConfig: tx_power must be positive, noise_power non-negative");
    if (ssb_band_fraction <= 0.0 || ssb_band_fraction > 1.0)
        throw std::invalid_argument("ScenarioConfig: ssb_band_fraction must be in (0,1]");
    if (include_prob < 0.0 || include_prob > 1.0)
        throw std::invalid_argument("ScenarioConfig: include_prob must be in [0,1]");
    if (frame_slots < n_slots)
        throw std::invalid_argument("ScenarioConfig: frame_slots must be >= n_slots");
    if (signaling_overhead < 0.0 || signaling_overhead >= 1.0)
        throw std::invalid_argument("ScenarioConfig: signaling_overhead must be in [0,1)");
    if (!(mcs0_bits_per_re > 0.0) || rb_re == 0)
        throw std::invalid_argument("ScenarioConfig: feedback link parameters must be positive");
}

arma::uword ScenarioConfig::ssb_band_size() const
{
    arma::uword b = arma::uword(std::llround(ssb_band_fraction * double(n_subcarriers)));
    if (b == 0)
        b = 1;
    if (b > n_subcarriers)
        b = n_subcarriers;
    return b;
}

arma::uword ScenarioConfig::ssb_band_start() const
{
    return (n_subcarriers - ssb_band_size()) / 2;
}

nlohmann::json ScenarioConfig::to_json() const
{
    nlohmann::json j;
    j["tx_array"] = {{"n_x", tx_array.n_x}, {"n_y", tx_array.n_y},
                     {"spacing_h", tx_array.spacing_h}, {"spacing_v", tx_array.spacing_v}};
    j["n_rx"] = n_rx;
    j["rx_spacing"] = rx_spacing;
    j["n_users"] = n_users;
    j["n_slots"] = n_slots;
    j["n_subcarriers"] = n_subcarriers;
    j["carrier_hz"] = carrier_hz;
    j["subcarrier_hz"] = subcarrier_hz;
    j["slot_s"] = slot_s;
    j["n_hotspots"] = n_hotspots;
    j["hotspot_spread_deg"] = hotspot_spread_deg;
    j["vehicular_fraction"] = vehicular_fraction;
    j["vehicular_speed_mean"] = vehicular_speed_mean;
    j["vehicular_speed_std"] = vehicular_speed_std;
    j["pedestrian_speed_max"] = pedestrian_speed_max;
    j["n_clusters"] = n_clusters;
    j["paths_per_cluster"] = paths_per_cluster;
    j["cluster_angle_spread_deg"] = cluster_angle_spread_deg;
    j["path_angle_spread_deg"] = path_angle_spread_deg;
    j["cluster_power_std_db"] = cluster_power_std_db;
    j["delay_spread_s"] = delay_spread_s;
    j["elevation_center_deg"] = elevation_center_deg;
    j["elevation_spread_deg"] = elevation_spread_deg;
    j["pathloss_db_min"] = pathloss_db_min;
    j["pathloss_db_max"] = pathloss_db_max;
    j["tx_power"] = tx_power;
    j["noise_power"] = noise_power;
    j["snr_cap_db"] = snr_cap_db;
    j["ssb_band_fraction"] = ssb_band_fraction;
    j["include_prob"] = include_prob;
    j["frame_slots"] = frame_slots;
    j["signaling_overhead"] = signaling_overhead;
    j["mcs0_bits_per_re"] = mcs0_bits_per_re;
    j["rb_re"] = rb_re;
    j["site_seed"] = site_seed;
    j["rng_seed"] = rng_seed;
    return j;
}

ScenarioConfig ScenarioConfig::from_json(const nlohmann::json &j)
{
    ScenarioConfig c;
    if (j.contains("tx_array"))
    {
        const auto &a = j.at("tx_array");
        if (a.contains("n_x")) c.tx_array.n_x = a.at("n_x").get<arma::uword>();
        if (a.contains("n_y")) c.tx_array.n_y = a.at("n_y").get<arma::uword>();
        if (a.contains("spacing_h")) c.tx_array.spacing_h = a.at("spacing_h").get<double>();
        if (a.contains("spacing_v")) c.tx_array.spacing_v = a.at("spacing_v").get<double>();
    }
    auto opt_u = [&](const char *k, arma::uword &v) { if (j.contains(k)) v = j.at(k).get<arma::uword>(); };
    auto opt_d = [&](const char *k, double &v) { if (j.contains(k)) v = j.at(k).get<double>(); };
    auto opt_s = [&](const char *k, std::uint64_t &v) { if (j.contains(k)) v = j.at(k).get<std::uint64_t>(); };
    opt_u("n_rx", c.n_rx);
    opt_d("rx_spacing", c.rx_spacing);
    opt_u("n_users", c.n_users);
    opt_u("n_slots", c.n_slots);
    opt_u("n_subcarriers", c.n_subcarriers);
    opt_d("carrier_hz", c.carrier_hz);
    opt_d("subcarrier_hz", c.subcarrier_hz);
    opt_d("slot_s", c.slot_s);
    opt_u("n_hotspots", c.n_hotspots);
    opt_d("hotspot_spread_deg", c.hotspot_spread_deg);
    opt_d("vehicular_fraction", c.vehicular_fraction);
    opt_d("vehicular_speed_mean", c.vehicular_speed_mean);
    opt_d("vehicular_speed_std", c.vehicular_speed_std);
    opt_d("pedestrian_speed_max", c.pedestrian_speed_max);
    opt_u("n_clusters", c.n_clusters);
    opt_u("paths_per_cluster", c.paths_per_cluster);
    opt_d("cluster_angle_spread_deg", c.cluster_angle_spread_deg);
    opt_d("path_angle_spread_deg", c.path_angle_spread_deg);
    opt_d("cluster_power_std_db", c.cluster_power_std_db);
    opt_d("delay_spread_s", c.delay_spread_s);
    opt_d("elevation_center_deg", c.elevation_center_deg);
    opt_d("elevation_spread_deg", c.elevation_spread_deg);
    opt_d("pathloss_db_min", c.pathloss_db_min);
    opt_d("pathloss_db_max", c.pathloss_db_max);
    opt_d("tx_power", c.tx_power);
    opt_d("noise_power", c.noise_power);
    opt_d("snr_cap_db", c.snr_cap_db);
    opt_d("ssb_band_fraction", c.ssb_band_fraction);
    opt_d("include_prob", c.include_prob);
    opt_u("frame_slots", c.frame_slots);
    opt_d("signaling_overhead", c.signaling_overhead);
    opt_d("mcs0_bits_per_re", c.mcs0_bits_per_re);
    opt_u("rb_re", c.rb_re);
    opt_s("site_seed", c.site_seed);
    opt_s("rng_seed", c.rng_seed);
    c.validate();
    return c;
}

std::uint64_t ScenarioConfig::config_hash() const
{
    const std::string s = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV-1a
    for (unsigned char ch : s)
    {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ---------- CHANNEL TENSOR ----------

const arma::cx_mat &ChannelTensor::at(arma::uword user, arma::uword slot, arma::uword subcarrier) const
{
    return h[user].slice(slot * n_subcarriers + subcarrier);
}

arma::cx_mat &ChannelTensor::at(arma::uword user, arma::uword slot, arma::uword subcarrier)
{
    return h[user].slice(slot * n_subcarriers + subcarrier);
}

ChannelTensor ChannelTensor::select_users(const arma::uvec &users) const
{
    ChannelTensor out;
    out.n_users = users.n_elem;
    out.n_slots = n_slots;
    out.n_subcarriers = n_subcarriers;
    out.n_rx = n_rx;
    out.n_tx = n_tx;
    out.h.reserve(users.n_elem);
    for (arma::uword i = 0; i < users.n_elem; i++)
    {
        if (users[i] >= n_users)
            throw std::invalid_argument("ChannelTensor::select_users: user index out of range");
        out.h.push_back(h[users[i]]);
    }
    return out;
}

void ChannelTensor::validate() const
{
    if (h.size() != n_users)
        throw std::invalid_argument("ChannelTensor: user count mismatch");
    for (const auto &cube : h)
        if (cube.n_rows != n_rx || cube.n_cols != n_tx || cube.n_slices != n_slots * n_subcarriers)
            throw std::invalid_argument("ChannelTensor: cube shape mismatch");
}

// ---------- GENERATOR ----------

namespace
{

double laplace(Rng &rng, double scale)
{
    const double u = rng.uniform() - 0.5;
    const double m = std::abs(u) < 1e-300 ? 1e-300 : 1.0 - 2.0 * std::abs(u);
    return -scale * (u < 0 ? -1.0 : 1.0) * std::log(m);
}

const double kDeg = arma::datum::pi / 180.0;

struct SiteLayout
{
    arma::vec hotspot_az_deg;
    double road_center_deg = 90.0;
    double road_halfwidth_deg = 25.0;
    double road_travel_deg = 0.0;
};

SiteLayout draw_site(const ScenarioConfig &cfg)
{
    Rng rng(split_seed(cfg.site_seed, {0x517eULL}));
    SiteLayout site;
    site.hotspot_az_deg.set_size(cfg.n_hotspots);
    for (arma::uword i = 0; i < cfg.n_hotspots; i++)
        site.hotspot_az_deg[i] = rng.uniform(30.0, 150.0);
    site.road_center_deg = rng.uniform(45.0, 135.0);
    site.road_halfwidth_deg = rng.uniform(15.0, 35.0);
    site.road_travel_deg = rng.uniform(0.0, 360.0);
    return site;
}

} // namespace

ChannelTensor generate_channels(const ScenarioConfig &cfg)
{
    cfg.validate();
    const SiteLayout site = draw_site(cfg);

    const arma::uword n_tx = cfg.n_tx();
    const arma::uword slices = cfg.n_slots * cfg.n_subcarriers;
    const double lambda = arma::datum::c_0 / cfg.carrier_hz;

    ChannelTensor out;
    out.n_users = cfg.n_users;
    out.n_slots = cfg.n_slots;
    out.n_subcarriers = cfg.n_subcarriers;
    out.n_rx = cfg.n_rx;
    out.n_tx = n_tx;
    out.h.resize(cfg.n_users);

    for (arma::uword u = 0; u < cfg.n_users; u++)
    {
        Rng rng(split_seed(cfg.rng_seed, {0x0aceULL, u, cfg.site_seed}));

        // User placement and mobility
        const bool vehicular = rng.uniform() < cfg.vehicular_fraction;
        double az_deg, speed, travel_deg;
        if (vehicular)
        {
            az_deg = rng.uniform(site.road_center_deg - site.road_halfwidth_deg,
                                 site.road_center_deg + site.road_halfwidth_deg);
            speed = std::max(0.5, cfg.vehicular_speed_mean + cfg.vehicular_speed_std * rng.gaussian());
            travel_deg = site.road_travel_deg + 10.0 * rng.gaussian();
        }
        else
        {
            const arma::uword hs = rng.integer(cfg.n_hotspots);
            az_deg = site.hotspot_az_deg[hs] + laplace(rng, cfg.hotspot_spread_deg);
            speed = rng.uniform(0.0, cfg.pedestrian_speed_max);
            travel_deg = rng.uniform(0.0, 360.0);
        }
        const double el_deg = cfg.elevation_center_deg + cfg.elevation_spread_deg * rng.gaussian();
        const double rx_orient_deg = rng.uniform(0.0, 360.0);
        const double pl_db = rng.uniform(cfg.pathloss_db_min, cfg.pathloss_db_max);
        const double pl_gain = db_to_linear(-pl_db);

        // Cluster powers and delays
        arma::vec cl_delay(cfg.n_clusters), cl_power(cfg.n_clusters);
        arma::vec cl_aod(cfg.n_clusters), cl_aoa(cfg.n_clusters), cl_el(cfg.n_clusters);
        for (arma::uword c = 0; c < cfg.n_clusters; c++)
        {
            cl_delay[c] = -cfg.delay_spread_s * std::log(std::max(rng.uniform(), 1e-12));
            cl_power[c] = std::exp(-cl_delay[c] / cfg.delay_spread_s) *
                          db_to_linear(cfg.cluster_power_std_db * rng.gaussian());
            cl_aod[c] = az_deg + laplace(rng, cfg.cluster_angle_spread_deg);
            cl_aoa[c] = rng.uniform(0.0, 360.0);
            cl_el[c] = el_deg + laplace(rng, cfg.path_angle_spread_deg);
        }
        cl_power /= arma::accu(cl_power);

        arma::cx_cube &cube = out.h[u];
        cube.zeros(cfg.n_rx, n_tx, slices);
        // Flat view: one column per (slot, subcarrier) slab
        arma::cx_mat flat(cube.memptr(), cfg.n_rx * n_tx, slices, false, true);

        arma::cx_vec freq_ph(cfg.n_subcarriers), time_ph(cfg.n_slots);
        for (arma::uword c = 0; c < cfg.n_clusters; c++)
        {
            const double path_amp = std::sqrt(cl_power[c] / double(cfg.paths_per_cluster));
            for (arma::uword p = 0; p < cfg.paths_per_cluster; p++)
            {
                const double aod = cl_aod[c] + laplace(rng, cfg.path_angle_spread_deg);
                const double aoa = cl_aoa[c] + laplace(rng, 2.0 * cfg.path_angle_spread_deg);
                const double pel = cl_el[c] + laplace(rng, 0.5 * cfg.path_angle_spread_deg);
                const double tau = cl_delay[c] + std::abs(cfg.delay_spread_s / 20.0 * rng.gaussian());
                const double doppler = speed / lambda * std::cos((aoa - travel_deg) * kDeg);
                const double phase = rng.uniform(0.0, 2.0 * arma::datum::pi);

                const arma::cx_vec a_tx = array_response(cfg.tx_array, aod * kDeg, pel * kDeg);
                const arma::cx_vec a_rx =
                    ula_response_cos(cfg.n_rx, cfg.rx_spacing, std::cos((aoa - rx_orient_deg) * kDeg));

                for (arma::uword k = 0; k < cfg.n_subcarriers; k++)
                {
                    const double f = (double(k) - 0.5 * double(cfg.n_subcarriers - 1)) * cfg.subcarrier_hz;
                    freq_ph[k] = std::polar(1.0, -2.0 * arma::datum::pi * f * tau);
                }
                for (arma::uword t = 0; t < cfg.n_slots; t++)
                    time_ph[t] = std::polar(1.0, 2.0 * arma::datum::pi * doppler * double(t) * cfg.slot_s);

                const arma::cx_mat outer = a_rx * a_tx.t(); // n_rx x n_tx
                const arma::cx_vec coef = std::polar(path_amp, phase) * arma::kron(time_ph, freq_ph);
                flat += arma::vectorise(outer) * coef.st();
            }
        }

        // Normalize the user's mean entry power to the drawn pathloss exactly.
        const double mean_pow = arma::accu(arma::square(arma::abs(arma::cx_vec(
                                    flat.memptr(), flat.n_elem, false, true)))) /
                                double(flat.n_elem);
        if (mean_pow > 0.0)
            cube *= std::sqrt(pl_gain / mean_pow);
    }
    return out;
}

double mean_entry_power(const ChannelTensor &h, arma::uword user)
{
    if (user >= h.n_users)
        throw std::invalid_argument("mean_entry_power: user index out of range");
    const arma::cx_cube &cube = h.h[user];
    double s = 0.0;
    for (arma::uword i = 0; i < cube.n_slices; i++)
        s += arma::accu(arma::square(arma::abs(cube.slice(i))));
    return s / double(cube.n_elem);
}

} // namespace beamsim
