// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/beam_training.hpp"
#include "beamsim/channel.hpp"
#include "beamsim/codebook.hpp"

namespace beamsim
{

// Regularized zero-forcing precoders from stacked channel estimates.
//
// hhat[u] is the n_rx x n_tx port-domain estimate, ranks[u] in {0..n_rx} the
// granted layer count (0 = user not served this frame; its output slot is an
// n_tx x 0 matrix so indices stay aligned). The shared inverse uses
//   M = sum_u hhat[u]^H hhat[u] + n_active * noise_scale * I,
// and each served user's column block is scaled to squared Frobenius norm
// n_tx / n_active so the precoders jointly spend the full array power budget.
std::vector<arma::cx_mat> rzf_precode(const std::vector<arma::cx_mat> &hhat,
                                      const std::vector<arma::uword> &ranks,
                                      double noise_scale);

// Per-layer post-combining SINRs for user u under the full precoder set.
// h is that user's channel at one resource element; noise_scale is the noise
// variance relative to the per-element transmit scaling (k * n_tx * sigma^2
// for white noise sigma^2 = noise_power / tx_power spread over k
// subcarriers). Uses the optimal linear receiver: with
// s = v^H R^{-1} v for layer direction v = h * f and total covariance R,
// the SINR is s / (1 - s).
arma::vec lmmse_sinr(const arma::cx_mat &h, const std::vector<arma::cx_mat> &precoders,
                     arma::uword user, double noise_scale);

// Shannon sum spectral efficiency at one resource element.
double sum_se_at(const std::vector<arma::cx_mat> &h_users,
                 const std::vector<arma::cx_mat> &precoders, double noise_scale);

struct ScheduleResult
{
    std::vector<arma::uword> ranks;      // chosen layers per candidate
    std::vector<arma::cx_mat> precoders; // aligned with the candidates
    double objective = 0.0;              // estimated sum SE of the winner
};

// Choose per-user layer counts on the estimated channels. Up to
// exhaustive_cap candidates every assignment in {0..max_rank}^n is scored
// (enumeration order: candidate 0 is the fastest-varying digit, so ties keep
// the earliest assignment); beyond the cap a greedy ascent adds one layer at
// a time until no single increment helps.
ScheduleResult schedule_users(const std::vector<arma::cx_mat> &hhat, double noise_scale,
                              arma::uword max_rank = 2, arma::uword exhaustive_cap = 8);

// Overhead-adjusted sum spectral efficiency over one accounting frame.
//
// The frame has budget.frame_slots symbols by cfg.n_subcarriers subcarriers;
// the fading realization repeats cyclically in time with period
// truth.n_slots. Elements whose symbol lies in budget.t_bm or whose
// subcarrier lies in budget.k_bm carry beam management and contribute
// nothing; the rest carry data with the scheduled precoders, and the average
// is further scaled by (1 - budget.signaling_overhead).
// users[i] names the tensor user behind precoders[i].
//
// A nonzero k_count restricts the accounting to the subcarrier window
// [k_start, k_start + k_count), averaging over that window only — used when
// separate bandwidth parts carry separately precoded transmissions.
double effective_sum_se(const ChannelTensor &truth, const std::vector<arma::uword> &users,
                        const std::vector<arma::cx_mat> &precoders,
                        const ResourceBudget &budget, const ScenarioConfig &cfg,
                        arma::uword k_start = 0, arma::uword k_count = 0);

// Convenience: the SINR noise scale implied by a scenario (noise power over
// per-subcarrier per-antenna transmit power).
double noise_scale_of(const ScenarioConfig &cfg);

struct NonPmiSchedule
{
    std::vector<arma::uword> users;      // candidate indices actually served
    std::vector<arma::cx_mat> precoders; // one rank-1 precoder each
};

// Baseline without precoder feedback: users sorted by reported SNR
// (descending, ties toward the lower index) each claim their reported
// refinement beam as a rank-1 precoder, skipping users whose beam is already
// taken, up to max_users served.
NonPmiSchedule non_pmi_baseline(const std::vector<CsiMeasurement> &meas,
                                const Codebook &csirs, arma::uword max_users);

} // namespace beamsim
