// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include <catch2/catch_amalgamated.hpp>

#include "beamsim/channel.hpp"

// Covered tests:
// - Seed splitting is order independent and collision free in practice
// - Rng streams are reproducible, forkable, and unbiased over small ranges
// - Gaussian draws have the right first two moments
// - Generated tensors are bit-identical for equal configs
// - rng_seed and site_seed change realizations independently
// - Mean entry power lands inside the configured pathloss window
// - User selection slices the tensor without touching the data
// - Scenario JSON round trip preserves the config hash

using namespace beamsim;

TEST_CASE("seed splitting is order independent and well spread")
{
    const std::uint64_t root = 42;
    REQUIRE(split_seed(root, {1, 2}) != split_seed(root, {2, 1}));
    REQUIRE(split_seed(root, {1}) != split_seed(root, {2}));
    REQUIRE(split_seed(root, {1}) == split_seed(root, {1}));

    // No collisions over a small exhaustive scan.
    std::vector<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 32; ++a)
        for (std::uint64_t b = 0; b < 32; ++b)
            seen.push_back(split_seed(root, {a, b}));
    std::sort(seen.begin(), seen.end());
    REQUIRE(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
}

TEST_CASE("rng streams are reproducible and forks are independent")
{
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i)
        REQUIRE(a.uniform() == b.uniform());

    // A fork depends only on the parent seed, not on the parent draw state.
    Rng parent(5);
    Rng child_before = parent.fork(7);
    parent.uniform();
    Rng child_after = parent.fork(7);
    REQUIRE(child_before.uniform() == child_after.uniform());

    REQUIRE_THROWS_AS(parent.integer(0), std::invalid_argument);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(parent.integer(13) < 13);
}

TEST_CASE("gaussian draws have the right moments")
{
    Rng rng(99);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i)
    {
        const double g = rng.gaussian();
        s1 += g;
        s2 += g * g;
    }
    REQUIRE(std::abs(s1 / n) < 0.01);
    REQUIRE(std::abs(s2 / n - 1.0) < 0.02);

    // Complex draws carry unit total variance split across re and im.
    double c2 = 0.0;
    for (int i = 0; i < n; ++i)
        c2 += std::norm(rng.cgaussian());
    REQUIRE(std::abs(c2 / n - 1.0) < 0.02);
}

namespace
{

ScenarioConfig small_scenario()
{
    ScenarioConfig cfg;
    cfg.tx_array = {2, 2, 0.5, 0.5};
    cfg.n_rx = 2;
    cfg.n_users = 3;
    cfg.n_slots = 2;
    cfg.n_subcarriers = 8;
    cfg.n_clusters = 3;
    cfg.paths_per_cluster = 4;
    cfg.site_seed = 3;
    cfg.rng_seed = 4;
    return cfg;
}

double max_abs_diff(const ChannelTensor &a, const ChannelTensor &b)
{
    double d = 0.0;
    for (arma::uword u = 0; u < a.n_users; ++u)
        d = std::max(d, arma::abs(a.h[u] - b.h[u]).max());
    return d;
}

} // namespace

TEST_CASE("equal configs generate bit-identical tensors")
{
    const ScenarioConfig cfg = small_scenario();
    const ChannelTensor a = generate_channels(cfg);
    const ChannelTensor b = generate_channels(cfg);

    REQUIRE(a.n_users == cfg.n_users);
    REQUIRE(a.h[0].n_rows == cfg.n_rx);
    REQUIRE(a.h[0].n_cols == cfg.n_tx());
    REQUIRE(a.h[0].n_slices == cfg.n_slots * cfg.n_subcarriers);
    REQUIRE(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("rng and site seeds change realizations independently")
{
    ScenarioConfig cfg = small_scenario();
    const ChannelTensor base = generate_channels(cfg);

    cfg.rng_seed = 5;
    const ChannelTensor other_drop = generate_channels(cfg);
    REQUIRE(max_abs_diff(base, other_drop) > 0.0);

    cfg.rng_seed = 4;
    cfg.site_seed = 8;
    const ChannelTensor other_site = generate_channels(cfg);
    REQUIRE(max_abs_diff(base, other_site) > 0.0);
}

TEST_CASE("mean entry power lands inside the pathloss window")
{
    const ScenarioConfig cfg = small_scenario();
    const ChannelTensor t = generate_channels(cfg);
    const double lo = db_to_linear(-cfg.pathloss_db_max);
    const double hi = db_to_linear(-cfg.pathloss_db_min);
    for (arma::uword u = 0; u < t.n_users; ++u)
    {
        const double p = mean_entry_power(t, u);
        REQUIRE(p >= lo * (1.0 - 1e-9));
        REQUIRE(p <= hi * (1.0 + 1e-9));
    }
    REQUIRE_THROWS_AS(mean_entry_power(t, t.n_users), std::invalid_argument);
}

TEST_CASE("user selection slices the tensor without touching the data")
{
    const ScenarioConfig cfg = small_scenario();
    const ChannelTensor t = generate_channels(cfg);
    const ChannelTensor s = t.select_users(arma::uvec{2, 0});

    REQUIRE(s.n_users == 2);
    REQUIRE(arma::abs(s.h[0] - t.h[2]).max() == 0.0);
    REQUIRE(arma::abs(s.h[1] - t.h[0]).max() == 0.0);
    REQUIRE_THROWS_AS(t.select_users(arma::uvec{3}), std::invalid_argument);
}

TEST_CASE("scenario json round trip preserves the config hash")
{
    ScenarioConfig cfg = small_scenario();
    cfg.signaling_overhead = 0.12;
    cfg.vehicular_fraction = 0.4;

    const ScenarioConfig back = ScenarioConfig::from_json(cfg.to_json());
    REQUIRE(back.config_hash() == cfg.config_hash());
    REQUIRE(back.n_users == cfg.n_users);
    REQUIRE(back.signaling_overhead == cfg.signaling_overhead);

    ScenarioConfig tweaked = cfg;
    tweaked.noise_power *= 2.0;
    REQUIRE(tweaked.config_hash() != cfg.config_hash());
}
