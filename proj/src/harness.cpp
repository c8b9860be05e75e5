// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace beamsim
{

// ---------- EXPERIMENT CONFIGURATION ----------

void ExperimentConfig::validate() const
{
    scenario.validate();
    csirs.validate();
    const arma::uword grid_cols = scenario.tx_array.n_x * o_h * scenario.tx_array.n_y * o_v;
    if (o_h == 0 || o_v == 0)
        throw std::invalid_argument("ExperimentConfig: oversampling must be positive");
    if (l_max == 0 || l_max > grid_cols)
        throw std::invalid_argument("ExperimentConfig: l_max out of range");
    if (p_csi == 0 || p_csi > scenario.n_tx())
        throw std::invalid_argument("ExperimentConfig: p_csi must lie in [1, n_tx]");
    if (l_csi == 0 || l_csi > scenario.tx_array.n_x * scenario.tx_array.n_y)
        throw std::invalid_argument("ExperimentConfig: l_csi must lie in [1, n_x*n_y]");
    if (drops == 0)
        throw std::invalid_argument("ExperimentConfig: drops must be positive");
    if (user_min == 0 || user_min > user_max || user_max > scenario.n_users)
        throw std::invalid_argument("ExperimentConfig: user range must lie in [1, n_users]");
    if (max_rank == 0 || max_rank > scenario.n_rx)
        throw std::invalid_argument("ExperimentConfig: max_rank must lie in [1, n_rx]");
    if (sched_cap == 0)
        throw std::invalid_argument("ExperimentConfig: sched_cap must be positive");
    if (grid_x < scenario.tx_array.n_x || grid_y < scenario.tx_array.n_y)
        throw std::invalid_argument("ExperimentConfig: beamspace grid must cover the array");
    if (output_dir.empty())
        throw std::invalid_argument("ExperimentConfig: output_dir must be set");
}

nlohmann::json ExperimentConfig::to_json() const
{
    nlohmann::json j;
    j["scenario"] = scenario.to_json();
    j["csirs"] = {{"nrb", csirs.nrb},
                  {"bwp", csirs.bwp},
                  {"pilots_per_rb", csirs.pilots_per_rb},
                  {"zp_per_rb", csirs.zp_per_rb}};
    j["l_max"] = l_max;
    j["p_csi"] = p_csi;
    j["l_csi"] = l_csi;
    j["o_h"] = o_h;
    j["o_v"] = o_v;
    j["drops"] = drops;
    j["user_min"] = user_min;
    j["user_max"] = user_max;
    j["max_rank"] = max_rank;
    j["sched_cap"] = sched_cap;
    j["grid_x"] = grid_x;
    j["grid_y"] = grid_y;
    j["output_dir"] = output_dir;
    j["seed"] = seed;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json &j)
{
    ExperimentConfig c;
    if (j.contains("scenario"))
        c.scenario = ScenarioConfig::from_json(j.at("scenario"));
    if (j.contains("csirs"))
    {
        const nlohmann::json &r = j.at("csirs");
        c.csirs.nrb = r.value("nrb", c.csirs.nrb);
        c.csirs.bwp = r.value("bwp", c.csirs.bwp);
        c.csirs.pilots_per_rb = r.value("pilots_per_rb", c.csirs.pilots_per_rb);
        c.csirs.zp_per_rb = r.value("zp_per_rb", c.csirs.zp_per_rb);
    }
    c.l_max = j.value("l_max", c.l_max);
    c.p_csi = j.value("p_csi", c.p_csi);
    c.l_csi = j.value("l_csi", c.l_csi);
    c.o_h = j.value("o_h", c.o_h);
    c.o_v = j.value("o_v", c.o_v);
    c.drops = j.value("drops", c.drops);
    c.user_min = j.value("user_min", c.user_min);
    c.user_max = j.value("user_max", c.user_max);
    c.max_rank = j.value("max_rank", c.max_rank);
    c.sched_cap = j.value("sched_cap", c.sched_cap);
    c.grid_x = j.value("grid_x", c.grid_x);
    c.grid_y = j.value("grid_y", c.grid_y);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
    c.validate();
    return c;
}

// ---------- OUTPUT HELPERS ----------

std::string format_double(double v)
{
    if (!std::isfinite(v))
        throw std::runtime_error("format_double: non-finite value would leak into output");
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_csv(const std::string &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows)
{
    const std::filesystem::path p(path);
    if (!p.parent_path().empty())
        std::filesystem::create_directories(p.parent_path());
    std::ofstream os(path, std::ios::binary); // binary: fixed \n endings everywhere
    if (!os)
        throw std::runtime_error("write_csv: cannot open " + path);
    for (std::size_t i = 0; i < header.size(); ++i)
        os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto &row : rows)
    {
        if (row.size() != header.size())
            throw std::runtime_error("write_csv: ragged row in " + path);
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << "\n";
    }
    if (!os)
        throw std::runtime_error("write_csv: write failed for " + path);
}

double percentile(const arma::vec &v, double p)
{
    if (v.n_elem == 0)
        throw std::invalid_argument("percentile: empty sample");
    if (!(p > 0.0 && p <= 100.0))
        throw std::invalid_argument("percentile: p must lie in (0, 100]");
    arma::vec s = arma::sort(v);
    const double rank = std::ceil(p / 100.0 * static_cast<double>(s.n_elem));
    const arma::uword idx = static_cast<arma::uword>(std::max(1.0, rank)) - 1;
    return s(std::min<arma::uword>(idx, s.n_elem - 1));
}

// ---------- SHARED PIPELINE PIECES ----------

namespace
{

constexpr std::uint64_t kTagDrop = 0x11, kTagChannel = 0x12, kTagPrior = 0x13, kTagSsb = 0x14,
                        kTagCsiRs = 0x15;
constexpr std::uint64_t kTagEvalDrop = 0x21, kTagEvalChannel = 0x22, kTagEvalPrior = 0x23,
                        kTagEvalSsb = 0x24;
constexpr std::uint64_t kTagDataDrop = 0x31, kTagDataChannel = 0x32, kTagDataPrior = 0x33,
                        kTagDataSsb = 0x34;

arma::uword draw_users(const ExperimentConfig &cfg, std::uint64_t tag, arma::uword drop)
{
    Rng rng(split_seed(cfg.seed, {tag, drop}));
    const arma::uword span = cfg.user_max - cfg.user_min + 1;
    return cfg.user_min + (span > 1 ? static_cast<arma::uword>(rng.integer(span)) : 0);
}

double to_dbm(double p)
{
    return 10.0 * std::log10(std::max(p, 1e-30));
}

// Axis-independent part of a sweep drop: the channels, the prior sweep and
// its reports are shared by every swept value so comparisons are paired.
struct DropContext
{
    ScenarioConfig sc;
    ChannelTensor h;
    Codebook fb;
    Codebook ssb;
    std::vector<SsbReport> reports;
    std::uint64_t csirs_seed = 0;
    arma::uword slot = 0;
};

DropContext make_drop(const ExperimentConfig &cfg, arma::uword drop)
{
    DropContext ctx;
    ctx.sc = cfg.scenario;
    ctx.sc.n_users = draw_users(cfg, kTagDrop, drop);
    ctx.sc.rng_seed = split_seed(cfg.seed, {kTagChannel, drop});
    ctx.h = generate_channels(ctx.sc);
    ctx.fb = feedback_codebook(ctx.sc.tx_array, cfg.o_h, cfg.o_v);
    ctx.ssb = random_dft_ssb(ctx.fb, cfg.l_max, split_seed(cfg.seed, {kTagPrior, drop}));
    ctx.reports = ssb_round(ctx.h, ctx.ssb, ctx.sc, split_seed(cfg.seed, {kTagSsb, drop}));
    ctx.csirs_seed = split_seed(cfg.seed, {kTagCsiRs, drop});
    ctx.slot = cfg.l_max % ctx.sc.n_slots;
    return ctx;
}

// Quantize and rebuild one user's port-domain estimate. Reconstructed rows
// come back scaled to their lead coefficient; the wideband amplitude rides
// on the quality report, so each row is restored to the measured row power
// before precoding.
arma::cx_mat pmi_estimate(const arma::cx_mat &eff, const Codebook &csirs, const Codebook &fb,
                          arma::uword l_csi)
{
    const arma::cx_mat lift = reconstruct_channel(eff, csirs);
    const CsiReport rep = quantize_type2(lift, fb, l_csi);
    arma::cx_mat rows = reconstruct_pmi(rep, fb);
    for (arma::uword r = 0; r < rows.n_rows; ++r)
    {
        const double want = arma::norm(lift.row(r));
        const double have = arma::norm(rows.row(r));
        if (have > 0.0)
            rows.row(r) *= want / have;
    }
    return rows;
}

struct SchemeEval
{
    double pmi = 0, su = 0, non_pmi = 0;
    double pmi_objective = 0;
    arma::uword bits_pmi = 0, bits_non_pmi = 0;
    std::vector<CsiMeasurement> meas;
};

SchemeEval eval_drop(const ExperimentConfig &cfg, const DropContext &ctx)
{
    const ScenarioConfig &sc = ctx.sc;
    const arma::uword m = sc.n_users;
    const arma::uword bwp = cfg.csirs.bwp;

    SchemeEval out;
    const Codebook csirs_cb = decompose_ssb_to_csirs(ctx.ssb, ctx.fb, ctx.reports, cfg.p_csi);
    out.meas = csirs_round(ctx.h, csirs_cb, sc, cfg.csirs, ctx.slot, ctx.csirs_seed);

    out.bits_pmi = count_bits(ctx.fb, cfg.l_csi, sc.n_rx, bwp, cfg.p_csi, cfg.max_rank).total();
    arma::uvec pmi_bits(m);
    pmi_bits.fill(out.bits_pmi);
    const ResourceBudget bud_pmi = budget(sc, cfg.l_max, cfg.p_csi, cfg.csirs, pmi_bits);

    // Reported estimates, one per user and bandwidth part.
    std::vector<std::vector<arma::cx_mat>> hhat(bwp);
    for (arma::uword b = 0; b < bwp; ++b)
    {
        hhat[b].reserve(m);
        for (arma::uword u = 0; u < m; ++u)
            hhat[b].push_back(pmi_estimate(out.meas[u].eff_est[b], csirs_cb, ctx.fb, cfg.l_csi));
    }

    const double ns = noise_scale_of(sc);
    const arma::uword k_per = sc.n_subcarriers / bwp;
    std::vector<arma::uword> all_users(m);
    for (arma::uword u = 0; u < m; ++u)
        all_users[u] = u;

    for (arma::uword b = 0; b < bwp; ++b)
    {
        const ScheduleResult sched = schedule_users(hhat[b], ns, cfg.max_rank, cfg.sched_cap);
        out.pmi_objective += sched.objective / static_cast<double>(bwp);
        out.pmi += effective_sum_se(ctx.h, all_users, sched.precoders, bud_pmi, sc, b * k_per,
                                    k_per) /
                   static_cast<double>(bwp);
    }

    // Single-user reference: same reports, only the strongest user served.
    arma::uword best_u = 0;
    for (arma::uword u = 1; u < m; ++u)
    {
        if (out.meas[u].snr > out.meas[best_u].snr)
            best_u = u;
    }
    for (arma::uword b = 0; b < bwp; ++b)
    {
        const std::vector<arma::cx_mat> one = {hhat[b][best_u]};
        const ScheduleResult sched = schedule_users(one, ns, cfg.max_rank, cfg.sched_cap);
        out.su += effective_sum_se(ctx.h, {best_u}, sched.precoders, bud_pmi, sc, b * k_per,
                                   k_per) /
                  static_cast<double>(bwp);
    }

    // Beam-only reference: the reported refinement beam is the precoder and
    // the uplink carries no combining coefficients.
    out.bits_non_pmi = ceil_log2(cfg.p_csi) + ceil_log2(cfg.max_rank) + 4;
    arma::uvec np_bits(m);
    np_bits.fill(out.bits_non_pmi);
    const ResourceBudget bud_np = budget(sc, cfg.l_max, cfg.p_csi, cfg.csirs, np_bits);
    const NonPmiSchedule np = non_pmi_baseline(out.meas, csirs_cb, m);
    out.non_pmi = effective_sum_se(ctx.h, np.users, np.precoders, bud_np, sc);
    return out;
}

ExperimentConfig apply_axis(const ExperimentConfig &cfg, const std::string &name,
                            arma::uword value)
{
    ExperimentConfig c = cfg;
    if (name == "l_csi")
        c.l_csi = value;
    else if (name == "p_csi")
        c.p_csi = value;
    else if (name == "bwp")
        c.csirs.bwp = value;
    else if (name == "nrb")
        c.csirs.nrb = value;
    else
        throw std::invalid_argument("run_csirs_sweep: unknown axis " + name);
    c.validate();
    return c;
}

} // namespace

// ---------- BROADCAST CODEBOOK COMPARISON ----------

ScenarioConfig rsrp_scenario(const ExperimentConfig &cfg)
{
    ScenarioConfig sc = cfg.scenario;
    sc.n_slots = std::max<arma::uword>(1, cfg.l_max); // one slot per swept beam
    sc.n_subcarriers = 16;                            // narrow probe carrier
    return sc;
}

SsbExperimentResult run_ssb_experiment(const ExperimentConfig &cfg, arma::uword eval_drops,
                                       const Mlp *net, const std::string &csv_path)
{
    cfg.validate();
    if (eval_drops == 0)
        throw std::invalid_argument("run_ssb_experiment: eval_drops must be positive");

    const ArrayGeometry &geom = cfg.scenario.tx_array;
    const BeamspaceGrids grids = beamspace_grids(geom, cfg.grid_x, cfg.grid_y);

    SsbExperimentResult res;
    res.kinds = {"no_bf", "dft"};
    if (net != nullptr)
        res.kinds.push_back("bsc");
    res.kinds.push_back("rsv");
    std::map<std::string, std::vector<double>> acc;
    for (const auto &k : res.kinds)
        acc[k] = {};

    const Codebook no_bf = single_antenna(cfg.scenario.n_tx());

    for (arma::uword drop = 0; drop < eval_drops; ++drop)
    {
        ScenarioConfig sc = rsrp_scenario(cfg);
        sc.n_users = draw_users(cfg, kTagEvalDrop, drop);
        sc.rng_seed = split_seed(cfg.seed, {kTagEvalChannel, drop});
        const ChannelTensor h = generate_channels(sc);

        const Codebook fb = feedback_codebook(geom, cfg.o_h, cfg.o_v);
        const Codebook prior =
            random_dft_ssb(fb, cfg.l_max, split_seed(cfg.seed, {kTagEvalPrior, drop}));
        const Codebook rsv = rsv_codebook(h, 0, cfg.l_max, sc.ssb_band_start(), sc.ssb_band_size());

        std::map<std::string, const Codebook *> books;
        books["no_bf"] = &no_bf;
        books["dft"] = &prior;
        books["rsv"] = &rsv;

        Codebook bsc;
        if (net != nullptr)
        {
            const std::vector<SsbReport> reports =
                ssb_round(h, prior, sc, split_seed(cfg.seed, {kTagEvalSsb, drop}));
            const arma::cube input = build_input(prior, reports, geom, grids);
            if (input.n_elem != net->config().in_dim)
                throw std::invalid_argument(
                    "run_ssb_experiment: checkpoint incompatible with the experiment geometry");
            bsc = infer_codebook(*net, input, geom, grids);
            books["bsc"] = &bsc;
        }

        for (const auto &kind : res.kinds)
        {
            const arma::mat r = rsrp_matrix(h, *books[kind], sc, 0);
            for (arma::uword u = 0; u < sc.n_users; ++u)
                acc[kind].push_back(to_dbm(r.row(u).max()));
        }
    }

    for (const auto &kind : res.kinds)
        res.samples_dbm[kind] = arma::vec(acc[kind]);

    if (!csv_path.empty())
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto &kind : res.kinds)
        {
            for (int p = 1; p <= 99; ++p)
            {
                rows.push_back({kind, std::to_string(p),
                                format_double(percentile(res.samples_dbm[kind], p))});
            }
        }
        write_csv(csv_path, {"kind", "percentile", "rsrp_dbm"}, rows);
    }
    return res;
}

// ---------- DATASET AND TRAINING ----------

TrainingSet build_dataset(const ExperimentConfig &cfg, arma::uword n_samples)
{
    cfg.validate();
    if (n_samples == 0)
        throw std::invalid_argument("build_dataset: n_samples must be positive");

    const ArrayGeometry &geom = cfg.scenario.tx_array;
    const BeamspaceGrids grids = beamspace_grids(geom, cfg.grid_x, cfg.grid_y);
    const arma::uword in_dim = 2 * cfg.l_max * (cfg.grid_x + 2) * (cfg.grid_y + 2);
    const arma::uword out_dim = 2 * cfg.l_max * cfg.grid_x * cfg.grid_y;

    TrainingSet ts;
    ts.inputs.set_size(in_dim, n_samples);
    ts.targets.set_size(out_dim, n_samples);
    ts.l_max = cfg.l_max;
    ts.n_x0 = cfg.grid_x;
    ts.n_y0 = cfg.grid_y;
    ts.meta = {{"experiment", cfg.to_json()}, {"n_samples", n_samples}};

    const Codebook fb = feedback_codebook(geom, cfg.o_h, cfg.o_v);
    for (arma::uword i = 0; i < n_samples; ++i)
    {
        ScenarioConfig sc = rsrp_scenario(cfg);
        sc.n_users = draw_users(cfg, kTagDataDrop, i);
        sc.rng_seed = split_seed(cfg.seed, {kTagDataChannel, i});
        const ChannelTensor h = generate_channels(sc);

        const Codebook prior =
            random_dft_ssb(fb, cfg.l_max, split_seed(cfg.seed, {kTagDataPrior, i}));
        const std::vector<SsbReport> reports =
            ssb_round(h, prior, sc, split_seed(cfg.seed, {kTagDataSsb, i}));

        const arma::cube input = build_input(prior, reports, geom, grids);
        ts.inputs.col(i) = arma::vectorise(input);

        const Codebook rsv =
            rsv_codebook(h, 0, cfg.l_max, sc.ssb_band_start(), sc.ssb_band_size());
        ts.targets.col(i) = arma::vectorise(beams_to_cube(rsv, geom, grids));
    }
    ts.validate();
    return ts;
}

MlpConfig default_mlp_config(const TrainingSet &ts, std::uint64_t seed)
{
    ts.validate();
    MlpConfig mc;
    mc.in_dim = ts.inputs.n_rows;
    mc.out_dim = ts.targets.n_rows;
    mc.beams = ts.l_max;
    mc.seed = seed;
    return mc;
}

Mlp run_training(const ExperimentConfig &cfg, const TrainingSet &ts, MlpConfig mlp_cfg,
                 const std::string &checkpoint_path, const std::string &history_csv,
                 TrainResult *history_out)
{
    cfg.validate();
    if (mlp_cfg.in_dim == 0)
        mlp_cfg.in_dim = ts.inputs.n_rows;
    if (mlp_cfg.out_dim == 0)
        mlp_cfg.out_dim = ts.targets.n_rows;
    if (mlp_cfg.beams == 0)
        mlp_cfg.beams = ts.l_max;

    Mlp net(mlp_cfg);
    const TrainResult hist = net.fit(ts);

    if (!checkpoint_path.empty())
    {
        const std::filesystem::path p(checkpoint_path);
        if (!p.parent_path().empty())
            std::filesystem::create_directories(p.parent_path());
        net.save(checkpoint_path);
    }
    if (!history_csv.empty())
    {
        std::vector<std::vector<std::string>> rows;
        for (arma::uword e = 0; e < hist.train_loss.n_elem; ++e)
        {
            rows.push_back({std::to_string(e), std::to_string(hist.step_at(e)),
                            format_double(hist.lr(e)), format_double(hist.train_loss(e)),
                            format_double(hist.val_loss(e))});
        }
        write_csv(history_csv, {"epoch", "step", "lr", "train_loss", "val_loss"}, rows);
    }
    if (history_out != nullptr)
        *history_out = hist;
    return net;
}

// ---------- FEEDBACK PARAMETER SWEEP ----------

std::vector<SweepPoint> run_csirs_sweep(const ExperimentConfig &cfg, const SweepAxis &axis,
                                        const std::string &csv_path,
                                        std::vector<RunRecord> *records)
{
    cfg.validate();
    if (axis.values.empty())
        throw std::invalid_argument("run_csirs_sweep: empty sweep grid");

    std::vector<SweepPoint> points(axis.values.size());
    for (std::size_t i = 0; i < axis.values.size(); ++i)
        points[i].value = axis.values[i];

    for (arma::uword drop = 0; drop < cfg.drops; ++drop)
    {
        const DropContext ctx = make_drop(cfg, drop);
        for (std::size_t i = 0; i < axis.values.size(); ++i)
        {
            const ExperimentConfig cv = apply_axis(cfg, axis.name, axis.values[i]);
            const auto t0 = std::chrono::steady_clock::now();
            const SchemeEval ev = eval_drop(cv, ctx);
            const auto t1 = std::chrono::steady_clock::now();

            points[i].pmi += ev.pmi / static_cast<double>(cfg.drops);
            points[i].su += ev.su / static_cast<double>(cfg.drops);
            points[i].non_pmi += ev.non_pmi / static_cast<double>(cfg.drops);
            points[i].bits_pmi = ev.bits_pmi;
            points[i].bits_non_pmi = ev.bits_non_pmi;

            if (records != nullptr)
            {
                RunRecord rec;
                rec.config_id = static_cast<arma::uword>(i);
                rec.drop_id = drop;
                rec.rsrp.set_size(ctx.sc.n_users);
                rec.snr.set_size(ctx.sc.n_users);
                for (arma::uword u = 0; u < ctx.sc.n_users; ++u)
                {
                    rec.rsrp(u) = ctx.reports[u].best_rsrp;
                    rec.snr(u) = ev.meas[u].snr;
                }
                rec.sum_se = ev.pmi_objective;
                rec.eff_sse = ev.pmi;
                rec.feedback_bits = ev.bits_pmi;
                rec.wall_ms =
                    std::chrono::duration<double, std::milli>(t1 - t0).count();
                records->push_back(std::move(rec));
            }
        }
    }

    if (!csv_path.empty())
    {
        std::vector<std::vector<std::string>> rows;
        for (const auto &pt : points)
        {
            rows.push_back({axis.name, std::to_string(pt.value), "pmi", format_double(pt.pmi),
                            std::to_string(pt.bits_pmi)});
            rows.push_back({axis.name, std::to_string(pt.value), "su", format_double(pt.su),
                            std::to_string(pt.bits_pmi)});
            rows.push_back({axis.name, std::to_string(pt.value), "non_pmi",
                            format_double(pt.non_pmi), std::to_string(pt.bits_non_pmi)});
        }
        write_csv(csv_path, {"axis", "value", "scheme", "eff_sse", "bits_per_user"}, rows);
    }
    return points;
}

// ---------- SITE TRANSFER ----------

SiteTransferResult run_site_transfer(const ExperimentConfig &cfg, std::uint64_t new_site_seed,
                                     double budget_fraction, const Mlp &net,
                                     arma::uword original_steps, arma::uword eval_drops,
                                     arma::uword tune_samples, const std::string &csv_path)
{
    cfg.validate();
    if (!(budget_fraction > 0.0 && budget_fraction <= 1.0))
        throw std::invalid_argument("run_site_transfer: budget_fraction must lie in (0, 1]");
    if (original_steps == 0 || eval_drops == 0 || tune_samples < 2)
        throw std::invalid_argument("run_site_transfer: counts out of range");

    ExperimentConfig moved = cfg;
    moved.scenario.site_seed = new_site_seed;

    const ArrayGeometry &geom = moved.scenario.tx_array;
    const BeamspaceGrids grids = beamspace_grids(geom, moved.grid_x, moved.grid_y);
    const Codebook fb = feedback_codebook(geom, moved.o_h, moved.o_v);

    auto eval_deltas = [&](const Mlp &model) {
        arma::vec delta(eval_drops);
        for (arma::uword drop = 0; drop < eval_drops; ++drop)
        {
            ScenarioConfig sc = rsrp_scenario(moved);
            sc.n_users = draw_users(moved, kTagEvalDrop, drop);
            sc.rng_seed = split_seed(moved.seed, {kTagEvalChannel, drop});
            const ChannelTensor h = generate_channels(sc);

            const Codebook prior =
                random_dft_ssb(fb, moved.l_max, split_seed(moved.seed, {kTagEvalPrior, drop}));
            const std::vector<SsbReport> reports =
                ssb_round(h, prior, sc, split_seed(moved.seed, {kTagEvalSsb, drop}));
            const arma::cube input = build_input(prior, reports, geom, grids);
            if (input.n_elem != model.config().in_dim)
                throw std::invalid_argument(
                    "run_site_transfer: checkpoint incompatible with the experiment geometry");
            const Codebook bsc = infer_codebook(model, input, geom, grids);
            const Codebook rsv =
                rsv_codebook(h, 0, moved.l_max, sc.ssb_band_start(), sc.ssb_band_size());

            const arma::mat rb = rsrp_matrix(h, bsc, sc, 0);
            const arma::mat rr = rsrp_matrix(h, rsv, sc, 0);
            double d = 0;
            for (arma::uword u = 0; u < sc.n_users; ++u)
                d += to_dbm(rb.row(u).max()) - to_dbm(rr.row(u).max());
            delta(drop) = d / static_cast<double>(sc.n_users);
        }
        return delta;
    };

    SiteTransferResult res;
    res.agnostic_delta = eval_deltas(net);

    res.steps_budget = std::max<arma::uword>(
        1, static_cast<arma::uword>(std::floor(budget_fraction * static_cast<double>(original_steps))));
    const TrainingSet ft = build_dataset(moved, tune_samples);
    Mlp tuned = net;
    const TrainResult hist =
        tuned.fine_tune(ft, res.steps_budget + 1, net.config().lr, res.steps_budget);
    res.steps_used = hist.steps;
    res.tuned_delta = eval_deltas(tuned);

    if (!csv_path.empty())
    {
        std::vector<std::vector<std::string>> rows;
        const std::vector<std::pair<std::string, const arma::vec *>> phases = {
            {"agnostic", &res.agnostic_delta}, {"fine_tuned", &res.tuned_delta}};
        for (const auto &[phase, vals] : phases)
        {
            for (int p = 1; p <= 99; ++p)
                rows.push_back({phase, std::to_string(p), format_double(percentile(*vals, p))});
        }
        write_csv(csv_path, {"phase", "percentile", "delta_db"}, rows);
    }
    return res;
}

} // namespace beamsim
