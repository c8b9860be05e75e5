// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/channel.hpp"

#include <utility>

namespace beamsim
{

enum class CodebookKind
{
    kSsb,     // wide beams swept during synchronization
    kCsiRs,   // refinement beams
    kFeedback // DFT grid the PMI quantizer runs against
};

// Every codeword satisfies the transmit power constraint ||w||^2 = n_ports.
//
// For kFeedback the matrix is the oversampled DFT grid
//   B = (sqrt(N_P)) * [U, D U, ..., D^(O_H-1) U]_NX  kron  [...]_NY
// with column index c = cx * (o_v*n_y) + cy, cx = qx*n_x + ux,
// cy = qy*n_y + uy, i.e. blocks ordered by oversampling power.
struct Codebook
{
    CodebookKind kind = CodebookKind::kSsb;
    arma::cx_mat w; // n_ports x n_codewords

    // Feedback-grid layout (meaningful when derived from a DFT grid)
    arma::uword n_x = 0, n_y = 0, o_h = 1, o_v = 1;

    // Provenance of each column in the parent feedback grid (empty if unknown)
    arma::uvec fb_cols;

    arma::uword n_ports() const { return w.n_rows; }
    arma::uword n_codewords() const { return w.n_cols; }
    void validate() const;
};

// Unitary DFT matrix, U[m,k] = exp(-j*2*pi*m*k/n) / sqrt(n).
arma::cx_mat dft_matrix(arma::uword n);

// Oversampled DFT grid [U, D U, ..., D^(o-1) U], n x o*n, unit-norm columns,
// D = diag(1, exp(-j*2*pi/(o*n)), ..., exp(-j*2*pi*(n-1)/(o*n))).
arma::cx_mat oversampled_dft(arma::uword n, arma::uword o);

// Full feedback grid for a planar array, scaled to the power constraint.
Codebook feedback_codebook(const ArrayGeometry &geom, arma::uword o_h, arma::uword o_v);

// Orthogonal block for oversampling shifts (q0x, q0y): n_ports x n_x*n_y,
// columns mutually orthogonal, gram = n_ports * I.
Codebook orthogonal_subset(const Codebook &fb, arma::uword q0x, arma::uword q0y);

// Decompose a flat feedback-grid column index into oversampling shifts.
std::pair<arma::uword, arma::uword> oversampling_of(const Codebook &fb, arma::uword flat_col);

// Flat feedback-grid column for (q0x, q0y) and in-block index ux*n_y + uy.
arma::uword global_column(const Codebook &fb, arma::uword q0x, arma::uword q0y, arma::uword ortho_idx);

// Per-user right-singular-vector codebook: pools the eigenpairs of the
// transmit covariance (averaged over the given subband at one slot) across
// all users and keeps the l_max globally strongest. Ties: lower user first.
Codebook rsv_codebook(const ChannelTensor &h, arma::uword slot, arma::uword l_max,
                      arma::uword band_start, arma::uword band_size);

// l_max distinct feedback-grid columns drawn uniformly per seed.
Codebook random_dft_ssb(const Codebook &fb, arma::uword l_max, std::uint64_t seed);

// Single-element transmission (no beamforming reference).
Codebook single_antenna(arma::uword n_ports);

} // namespace beamsim
