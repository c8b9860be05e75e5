// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/codebook.hpp"

namespace beamsim
{

// ---------- SYNCHRONIZATION BEAM SWEEP ----------

struct SsbReport
{
    arma::uword best_beam = 0; // reported strongest beam
    double best_rsrp = 0.0;    // linear power
    arma::vec rsrp;            // per-beam measurement (diagnostic)
    bool included = true;      // user took part in this reporting round
};

// Sequential beam sweep: beam i is transmitted at slot (slot0 + i) mod n_slots
// over the centered synchronization band. Per beam the receiver accumulates
// |y|^2 over the band and keeps the best antenna; reception is
// y = sqrt(tx_power / (K * N_T)) * H f + noise.
std::vector<SsbReport> ssb_round(const ChannelTensor &h, const Codebook &ssb,
                                 const ScenarioConfig &cfg, std::uint64_t seed,
                                 arma::uword slot0 = 0);

// Noiseless per-user, per-beam power sum at a fixed slot; reference used by
// codebook quality metrics and tests.
arma::mat rsrp_matrix(const ChannelTensor &h, const Codebook &ssb, const ScenarioConfig &cfg,
                      arma::uword slot);

// ---------- LEAST-SQUARES CHANNEL ESTIMATION ----------

struct LsEstimate
{
    arma::cx_mat value;      // d x m solution
    double residual_ms = 0;  // mean |Y - S*X|^2 over received entries
};

// Solve min ||rx - pilots * X||_F for X. rx is N_p x m, pilots is N_p x d
// with N_p >= d and full column rank.
LsEstimate estimate_ls(const arma::cx_mat &rx, const arma::cx_mat &pilots);

// Predicted normalized estimation error for pilot-based least squares:
// 1 / ((n_pilots / n_tx) * snr), snr = per-resource received pilot SNR.
double ls_mse_law(double snr, double n_pilots, double n_tx);

// ---------- REFINEMENT ROUND ----------

struct CsiRsConfig
{
    arma::uword nrb = 24;          // resource blocks per bandwidth part
    arma::uword bwp = 1;           // bandwidth parts (wideband = 1)
    arma::uword pilots_per_rb = 1; // pilot resources per beam per RB
    arma::uword zp_per_rb = 8;     // zero-power resources per RB (noise estimation)

    void validate() const;
};

struct CsiMeasurement
{
    arma::uword cri = 0;  // strongest refinement beam
    double snr = 0.0;     // linear, capped
    double noise_est = 0; // estimated noise power per resource (vector norm)
    std::vector<arma::cx_mat> eff_est; // per bandwidth part: n_rx x p_csi
};

// Beamformed refinement round at one slot. Per beam, least-squares over the
// pilot resources of each bandwidth part gives a wideband estimate of H f;
// noise power is estimated from zero-power resources; the reported SNR is
// max over beams of ||est||^2 / (N_T * noise_est), capped at cfg.snr_cap_db.
std::vector<CsiMeasurement> csirs_round(const ChannelTensor &h, const Codebook &csirs,
                                        const ScenarioConfig &cfg, const CsiRsConfig &rs,
                                        arma::uword slot, std::uint64_t seed);

// ---------- SSB -> CSI-RS DECOMPOSITION ----------

// Proportional budgets with largest-remainder rounding; ties toward the
// lower index. All-zero counts fall back to a uniform split.
arma::uvec largest_remainder(const arma::uvec &counts, arma::uword total);

// Splits p_csi refinement beams across the swept beams proportionally to the
// number of users reporting each beam, then picks for every swept beam its
// most correlated feedback-grid columns. Columns already taken are skipped,
// and so are columns linearly dependent on the picks so far: the oversampled
// grid is overcomplete, and a dependent pick would leave the returned
// codebook without a right inverse.
Codebook decompose_ssb_to_csirs(const Codebook &ssb, const Codebook &fb,
                                const std::vector<SsbReport> &reports, arma::uword p_csi);

// ---------- RESOURCE BUDGET ----------

struct ResourceBudget
{
    arma::uword frame_slots = 0;
    arma::uword ssb_symbols = 0;
    arma::uword csirs_symbols = 0;
    arma::uword feedback_symbols = 0;
    arma::uvec t_bm; // leading frame symbols consumed by beam management
    arma::uvec k_bm; // reserved subcarriers across data symbols (default none)
    double signaling_overhead = 0.0;

    arma::uword bm_symbols() const { return ssb_symbols + csirs_symbols + feedback_symbols; }
};

// Accounts one sweep (l_max symbols), the refinement pilots and the uplink
// reports (MCS0 rate, per-user rounding up to whole resource blocks).
ResourceBudget budget(const ScenarioConfig &cfg, arma::uword l_max, arma::uword p_csi,
                      const CsiRsConfig &rs, const arma::uvec &report_bits);

} // namespace beamsim
