// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/codebook.hpp"

namespace beamsim
{

// Linear-combination precoder report. q holds per-row selected columns of the
// chosen orthogonal block, ranked by descending |coefficient| (ties toward
// the lower index), so a(r, 0) is the per-row normalizer and equals 1 + 0j.
struct CsiReport
{
    arma::uword q0x = 0, q0y = 0; // oversampling shifts of the chosen block
    arma::umat q;                 // n_rx x l_csi in-block column indices
    arma::cx_mat a;               // n_rx x l_csi coefficients, |a| <= 1
    arma::uword rank = 1;         // layers the user asks for
    arma::uword cri = 0;          // carried refinement-beam choice
    double snr = 0.0;             // carried measured SNR (linear)
};

// Quantize port-domain channel rows (n_rx x n_ports) against the feedback
// grid: pick the orthogonal block via the globally strongest projection,
// then per row the l_csi strongest in-block projections, normalized to the
// strongest coefficient.
CsiReport quantize_type2(const arma::cx_mat &eff, const Codebook &fb, arma::uword l_csi);

struct BitBreakdown
{
    arma::uword combination = 0; // per-row column-subset choice
    arma::uword oversampling = 0;
    arma::uword amplitude = 0;   // 4 bits per non-normalizer coefficient
    arma::uword phase = 0;       // 3 bits per non-normalizer coefficient
    arma::uword cri = 0;
    arma::uword rank = 0;
    arma::uword cqi = 0;

    arma::uword total() const { return combination + oversampling + amplitude + phase + cri + rank + cqi; }
};

// Feedback payload accounting for one user reporting `bwp` bandwidth parts.
// Coefficients are carried exact in simulation; the bit count is what the
// uplink budget charges.
BitBreakdown count_bits(const Codebook &fb, arma::uword l_csi, arma::uword n_rx,
                        arma::uword bwp, arma::uword p_csi, arma::uword max_rank = 2);

// Exact binomial coefficient (throws on overflow) and ceil(log2(v)).
std::uint64_t nchoosek(std::uint64_t n, std::uint64_t k);
arma::uword ceil_log2(std::uint64_t v);

// Rebuild the quantized port-domain rows from a report: row r is the
// coefficient-weighted sum of the conjugate-transposed selections, matching
// the beam-product scoring of the quantizer.
arma::cx_mat reconstruct_pmi(const CsiReport &rep, const Codebook &fb);

// Lift beam-domain rows (n_rx x p_csi, the channel observed through the
// refinement codebook) back to the port domain via the codebook
// pseudo-inverse. When the codebook is a subset of one orthogonal DFT block
// this reduces to the conjugate-transpose (inverse DFT) scaling, which is
// used as a fast path and must agree with the pseudo-inverse.
arma::cx_mat reconstruct_channel(const arma::cx_mat &beam_rows, const Codebook &csirs);

// Stack per-user reconstructions; validates matching shapes.
std::vector<arma::cx_mat> aggregate_users(const std::vector<arma::cx_mat> &rows);

} // namespace beamsim
