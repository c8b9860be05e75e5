// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/csi_feedback.hpp"
#include "beamsim/downlink.hpp"
#include "beamsim/mlp.hpp"

#include <map>

namespace beamsim
{

// ---------- EXPERIMENT CONFIGURATION ----------

struct ExperimentConfig
{
    ScenarioConfig scenario;
    CsiRsConfig csirs;

    arma::uword l_max = 8; // swept broadcast beams
    arma::uword p_csi = 8; // refinement beams
    arma::uword l_csi = 4; // combined columns per report row
    arma::uword o_h = 4, o_v = 4;

    arma::uword drops = 4;                 // Monte Carlo realizations
    arma::uword user_min = 4, user_max = 12; // candidates drawn per drop
    arma::uword max_rank = 2;
    arma::uword sched_cap = 8; // exhaustive scheduling up to this many users

    arma::uword grid_x = 16, grid_y = 16; // beamspace grid for the generator

    std::string output_dir = "out";
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static ExperimentConfig from_json(const nlohmann::json &j);
};

// One pipeline pass over one drop; wall time stays out of persisted CSVs so
// re-runs are byte-identical.
struct RunRecord
{
    static constexpr int kSchemaVersion = 1;
    arma::uword config_id = 0;
    arma::uword drop_id = 0;
    arma::vec rsrp;    // per-user reported best-beam power (linear)
    arma::vec snr;     // per-user refinement SNR (linear)
    double sum_se = 0; // scheduler objective on the estimates
    double eff_sse = 0;
    arma::uword feedback_bits = 0; // per user
    double wall_ms = 0;            // diagnostic only, never persisted
};

// ---------- OUTPUT HELPERS ----------

// Shortest round-trip decimal text; throws on NaN or infinity so bad math
// cannot leak into result files.
std::string format_double(double v);

void write_csv(const std::string &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows);

// Nearest-rank percentile, p in (0, 100].
double percentile(const arma::vec &v, double p);

// ---------- EXPERIMENTS ----------

// Reduced-geometry scenario used for broadcast-beam statistics and dataset
// assembly: one slot per swept beam and a narrow carrier so drop generation
// stays cheap.
ScenarioConfig rsrp_scenario(const ExperimentConfig &cfg);

// Best-beam RSRP comparison across codebook kinds. Kinds: "no_bf" (single
// element), "dft" (random grid prior), "bsc" (generated by net, skipped when
// net is null), "rsv" (per-drop optimal). Writes (kind, percentile, rsrp_dbm)
// rows when csv_path is non-empty.
struct SsbExperimentResult
{
    std::vector<std::string> kinds;               // emission order
    std::map<std::string, arma::vec> samples_dbm; // per kind, user x drop samples
};
SsbExperimentResult run_ssb_experiment(const ExperimentConfig &cfg, arma::uword eval_drops,
                                       const Mlp *net, const std::string &csv_path);

// Supervised set for the codebook generator: inputs are observation cubes
// from randomized prior codebooks, targets the per-drop optimal codebooks in
// beamspace.
TrainingSet build_dataset(const ExperimentConfig &cfg, arma::uword n_samples);

// Sensible generator shape for a dataset (fills dimensions and beam count).
MlpConfig default_mlp_config(const TrainingSet &ts, std::uint64_t seed);

// Train, checkpoint, and log history as (epoch, step, lr, train_loss,
// val_loss) rows.
Mlp run_training(const ExperimentConfig &cfg, const TrainingSet &ts, MlpConfig mlp_cfg,
                 const std::string &checkpoint_path, const std::string &history_csv,
                 TrainResult *history_out = nullptr);

// Feedback-parameter sweep. axis.name picks the swept knob: "l_csi",
// "p_csi", "bwp" or "nrb". Per value the full pipeline runs per drop for
// three schemes: "pmi" (multi-user RZF on reconstructed reports), "su"
// (same feedback, best user only) and "non_pmi" (reported refinement beam
// only). Channels are shared across values so comparisons are paired.
struct SweepAxis
{
    std::string name;
    std::vector<arma::uword> values;
};
struct SweepPoint
{
    arma::uword value = 0;
    double pmi = 0, su = 0, non_pmi = 0;        // mean effective sum SE
    arma::uword bits_pmi = 0, bits_non_pmi = 0; // per-user report payload
};
std::vector<SweepPoint> run_csirs_sweep(const ExperimentConfig &cfg, const SweepAxis &axis,
                                        const std::string &csv_path,
                                        std::vector<RunRecord> *records = nullptr);

// Generator transfer to a regenerated site: evaluate the per-drop mean
// (generated - optimal) RSRP delta, fine-tune under a step budget of
// budget_fraction times original_steps, and evaluate again. Writes
// (phase, percentile, delta_db) rows when csv_path is non-empty.
struct SiteTransferResult
{
    arma::vec agnostic_delta; // per eval drop [dB]
    arma::vec tuned_delta;
    arma::uword steps_budget = 0;
    arma::uword steps_used = 0;
};
SiteTransferResult run_site_transfer(const ExperimentConfig &cfg, std::uint64_t new_site_seed,
                                     double budget_fraction, const Mlp &net,
                                     arma::uword original_steps, arma::uword eval_drops,
                                     arma::uword tune_samples, const std::string &csv_path);

} // namespace beamsim
