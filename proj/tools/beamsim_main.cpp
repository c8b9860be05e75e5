// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.
//
// Command-line front end. Exit codes: 0 success, 2 configuration error,
// 3 runtime failure.

#include "beamsim/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace
{

// Parse "a.b.c=value" into the configuration tree. Numeric text becomes a
// number so overrides round-trip through the JSON loaders unchanged.
void apply_override(nlohmann::json &j, const std::string &expr)
{
    const auto eq = expr.find('=');
    if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("override must look like key=value: " + expr);
    const std::string path = expr.substr(0, eq);
    const std::string value = expr.substr(eq + 1);

    nlohmann::json *node = &j;
    std::size_t pos = 0;
    while (true)
    {
        const auto dot = path.find('.', pos);
        const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
        if (key.empty())
            throw std::invalid_argument("override has an empty key segment: " + expr);
        if (dot == std::string::npos)
        {
            try
            {
                std::size_t used = 0;
                if (value.find_first_of(".eE") == std::string::npos)
                {
                    const unsigned long long u = std::stoull(value, &used);
                    if (used == value.size())
                    {
                        (*node)[key] = u;
                        return;
                    }
                }
                const double d = std::stod(value, &used);
                if (used == value.size())
                {
                    (*node)[key] = d;
                    return;
                }
            }
            catch (const std::exception &)
            {
                // fall through to string
            }
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

beamsim::ExperimentConfig load_config(const std::string &config_path,
                                      const std::vector<std::string> &overrides,
                                      const std::string &out_dir_flag)
{
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty())
    {
        std::ifstream is(config_path);
        if (!is)
            throw std::invalid_argument("cannot open config file " + config_path);
        is >> j;
    }
    for (const auto &expr : overrides)
        apply_override(j, expr);

    // Precedence for the output directory: flag > environment > config file.
    if (const char *env = std::getenv("BEAMSIM_OUT_DIR"); env != nullptr && *env != '\0')
        j["output_dir"] = std::string(env);
    if (!out_dir_flag.empty())
        j["output_dir"] = out_dir_flag;

    return beamsim::ExperimentConfig::from_json(j);
}

std::string in_out_dir(const beamsim::ExperimentConfig &cfg, const std::string &name)
{
    return (std::filesystem::path(cfg.output_dir) / name).string();
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"beamsim: beam management and CSI feedback link simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir_flag;
    std::vector<std::string> overrides;
    std::uint64_t seed_flag = 0;
    bool seed_given = false;
    app.add_option("--config", config_path, "experiment configuration JSON file");
    app.add_option("--set", overrides, "override a config key, e.g. --set scenario.n_users=16")
        ->take_all();
    app.add_option("--out-dir", out_dir_flag, "output directory (overrides config and env)");
    app.add_option("--seed", seed_flag, "root seed override")->each([&](const std::string &) {
        seed_given = true;
    });

    // gen-channels
    auto *gen = app.add_subcommand("gen-channels", "generate a channel tensor file");
    std::string gen_out;
    gen->add_option("--out", gen_out, "output file (default <out-dir>/channels.bin)");

    // build-dataset
    auto *bld = app.add_subcommand("build-dataset", "assemble a supervised codebook dataset");
    std::uint64_t bld_samples = 256;
    std::string bld_out;
    bld->add_option("--samples", bld_samples, "number of samples");
    bld->add_option("--out", bld_out, "output file (default <out-dir>/dataset.bin)");

    // train
    auto *trn = app.add_subcommand("train", "train the codebook generator");
    std::string trn_dataset, trn_ckpt, trn_hist;
    std::uint64_t trn_epochs = 0, trn_batch = 0, trn_patience = 0;
    double trn_lr = 0.0, trn_val = -1.0;
    trn->add_option("--dataset", trn_dataset, "training set file")->required();
    trn->add_option("--checkpoint", trn_ckpt, "checkpoint out (default <out-dir>/model.ckpt)");
    trn->add_option("--history", trn_hist, "history CSV out (default <out-dir>/history.csv)");
    trn->add_option("--epochs", trn_epochs, "epoch budget override");
    trn->add_option("--batch", trn_batch, "batch size override");
    trn->add_option("--patience", trn_patience, "early-stopping patience override");
    trn->add_option("--lr", trn_lr, "learning rate override");
    trn->add_option("--val-fraction", trn_val, "holdout fraction override");

    // eval-ssb
    auto *ssb = app.add_subcommand("eval-ssb", "compare broadcast codebooks by RSRP CDF");
    std::string ssb_ckpt, ssb_out;
    std::uint64_t ssb_drops = 64;
    ssb->add_option("--checkpoint", ssb_ckpt, "generator checkpoint (adds the bsc kind)");
    ssb->add_option("--eval-drops", ssb_drops, "evaluation drops");
    ssb->add_option("--out", ssb_out, "CSV out (default <out-dir>/ssb_cdf.csv)");

    // sweep-csirs
    auto *swp = app.add_subcommand("sweep-csirs", "sweep a feedback parameter");
    std::string swp_axis, swp_out;
    std::vector<std::uint64_t> swp_values;
    swp->add_option("--axis", swp_axis, "one of l_csi, p_csi, bwp, nrb")->required();
    swp->add_option("--values", swp_values, "swept values")->required()->delimiter(',');
    swp->add_option("--out", swp_out, "CSV out (default <out-dir>/sweep_<axis>.csv)");

    // site-transfer
    auto *mov = app.add_subcommand("site-transfer", "evaluate and fine-tune on a new site");
    std::string mov_ckpt, mov_out;
    std::uint64_t mov_site = 0, mov_steps = 0, mov_drops = 48, mov_tune = 128;
    double mov_budget = 0.01;
    mov->add_option("--checkpoint", mov_ckpt, "trained generator checkpoint")->required();
    mov->add_option("--new-site", mov_site, "site seed of the new deployment")->required();
    mov->add_option("--budget-fraction", mov_budget, "fine-tuning step budget fraction");
    mov->add_option("--original-steps", mov_steps,
                    "original training steps (default: read from checkpoint)");
    mov->add_option("--eval-drops", mov_drops, "evaluation drops per phase");
    mov->add_option("--tune-samples", mov_tune, "fine-tuning dataset size");
    mov->add_option("--out", mov_out, "CSV out (default <out-dir>/site_transfer.csv)");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try
    {
        beamsim::ExperimentConfig cfg = load_config(config_path, overrides, out_dir_flag);
        if (seed_given)
            cfg.seed = seed_flag;

        if (gen->parsed())
        {
            const std::string out = gen_out.empty() ? in_out_dir(cfg, "channels.bin") : gen_out;
            beamsim::ScenarioConfig sc = cfg.scenario;
            const beamsim::ChannelTensor h = beamsim::generate_channels(sc);
            const std::filesystem::path p(out);
            if (!p.parent_path().empty())
                std::filesystem::create_directories(p.parent_path());
            beamsim::save_channels(out, h, sc);
            std::cout << "wrote " << out << " (" << h.n_users << " users)\n";
        }
        else if (bld->parsed())
        {
            const std::string out = bld_out.empty() ? in_out_dir(cfg, "dataset.bin") : bld_out;
            const beamsim::TrainingSet ts =
                beamsim::build_dataset(cfg, static_cast<arma::uword>(bld_samples));
            const std::filesystem::path p(out);
            if (!p.parent_path().empty())
                std::filesystem::create_directories(p.parent_path());
            beamsim::save_training_set(out, ts);
            std::cout << "wrote " << out << " (" << ts.n_samples() << " samples)\n";
        }
        else if (trn->parsed())
        {
            const beamsim::TrainingSet ts = beamsim::load_training_set(trn_dataset);
            beamsim::MlpConfig mc = beamsim::default_mlp_config(ts, cfg.seed);
            if (trn_epochs > 0)
                mc.epochs = static_cast<arma::uword>(trn_epochs);
            if (trn_batch > 0)
                mc.batch = static_cast<arma::uword>(trn_batch);
            if (trn_patience > 0)
                mc.patience = static_cast<arma::uword>(trn_patience);
            if (trn_lr > 0.0)
                mc.lr = trn_lr;
            if (trn_val >= 0.0)
                mc.val_fraction = trn_val;
            const std::string ckpt = trn_ckpt.empty() ? in_out_dir(cfg, "model.ckpt") : trn_ckpt;
            const std::string hist = trn_hist.empty() ? in_out_dir(cfg, "history.csv") : trn_hist;
            beamsim::TrainResult res;
            beamsim::run_training(cfg, ts, mc, ckpt, hist, &res);
            std::cout << "trained " << res.steps << " steps, best epoch " << res.best_epoch
                      << ", val loss " << res.val_loss(res.best_epoch) << "\n"
                      << "wrote " << ckpt << " and " << hist << "\n";
        }
        else if (ssb->parsed())
        {
            const std::string out = ssb_out.empty() ? in_out_dir(cfg, "ssb_cdf.csv") : ssb_out;
            std::unique_ptr<beamsim::Mlp> net;
            if (!ssb_ckpt.empty())
                net = std::make_unique<beamsim::Mlp>(beamsim::Mlp::load(ssb_ckpt));
            const beamsim::SsbExperimentResult res = beamsim::run_ssb_experiment(
                cfg, static_cast<arma::uword>(ssb_drops), net.get(), out);
            for (const auto &kind : res.kinds)
                std::cout << kind << " mean "
                          << beamsim::format_double(arma::mean(res.samples_dbm.at(kind)))
                          << " dBm\n";
            std::cout << "wrote " << out << "\n";
        }
        else if (swp->parsed())
        {
            const std::string out =
                swp_out.empty() ? in_out_dir(cfg, "sweep_" + swp_axis + ".csv") : swp_out;
            beamsim::SweepAxis axis;
            axis.name = swp_axis;
            for (std::uint64_t v : swp_values)
                axis.values.push_back(static_cast<arma::uword>(v));
            const auto points = beamsim::run_csirs_sweep(cfg, axis, out, nullptr);
            for (const auto &pt : points)
                std::cout << swp_axis << "=" << pt.value << " pmi "
                          << beamsim::format_double(pt.pmi) << " su "
                          << beamsim::format_double(pt.su) << " non_pmi "
                          << beamsim::format_double(pt.non_pmi) << "\n";
            std::cout << "wrote " << out << "\n";
        }
        else if (mov->parsed())
        {
            const std::string out =
                mov_out.empty() ? in_out_dir(cfg, "site_transfer.csv") : mov_out;
            const beamsim::Mlp net = beamsim::Mlp::load(mov_ckpt);
            const arma::uword orig = mov_steps > 0 ? static_cast<arma::uword>(mov_steps)
                                                   : static_cast<arma::uword>(net.steps());
            const beamsim::SiteTransferResult res = beamsim::run_site_transfer(
                cfg, mov_site, mov_budget, net, orig, static_cast<arma::uword>(mov_drops),
                static_cast<arma::uword>(mov_tune), out);
            std::cout << "p10 delta agnostic "
                      << beamsim::format_double(beamsim::percentile(res.agnostic_delta, 10))
                      << " dB, fine-tuned "
                      << beamsim::format_double(beamsim::percentile(res.tuned_delta, 10))
                      << " dB (" << res.steps_used << "/" << res.steps_budget << " steps)\n";
            std::cout << "wrote " << out << "\n";
        }
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const nlohmann::json::exception &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
