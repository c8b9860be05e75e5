// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/csi_feedback.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace beamsim
{

// ---------- QUANTIZATION ----------

CsiReport quantize_type2(const arma::cx_mat &eff, const Codebook &fb, arma::uword l_csi)
{
    fb.validate();
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("quantize_type2: codebook must be a feedback grid");
    if (eff.n_cols != fb.n_ports())
        throw std::invalid_argument("quantize_type2: row width must equal the port count");
    if (eff.n_rows == 0)
        throw std::invalid_argument("quantize_type2: need at least one row");

    const arma::uword block = fb.n_x * fb.n_y;
    if (l_csi < 1 || l_csi > block)
        throw std::invalid_argument("quantize_type2: l_csi must lie in [1, n_x*n_y]");

    for (arma::uword r = 0; r < eff.n_rows; ++r)
    {
        if (!arma::any(arma::abs(eff.row(r)) > 0.0))
            throw std::invalid_argument("quantize_type2: zero channel row cannot be quantized");
    }

    // Score every grid column by the complex beam product. A row lying in
    // the span of a block's conjugate-transposed columns scores exactly
    // n_ports times its coefficients against that block.
    const arma::cx_mat scores = eff * fb.w;
    const arma::mat mag = arma::abs(scores);

    // Strongest single projection anywhere picks the oversampling shift.
    arma::uword best_col = 0;
    double best_val = -1.0;
    for (arma::uword c = 0; c < mag.n_cols; ++c)
    {
        const double v = mag.col(c).max();
        if (v > best_val)
        {
            best_val = v;
            best_col = c;
        }
    }

    CsiReport rep;
    const auto shifts = oversampling_of(fb, best_col);
    rep.q0x = shifts.first;
    rep.q0y = shifts.second;

    const Codebook ortho = orthogonal_subset(fb, rep.q0x, rep.q0y);
    const arma::cx_mat c_ortho = eff * ortho.w;

    rep.q.set_size(eff.n_rows, l_csi);
    rep.a.set_size(eff.n_rows, l_csi);
    for (arma::uword r = 0; r < eff.n_rows; ++r)
    {
        const arma::rowvec row_mag = arma::abs(c_ortho.row(r));
        std::vector<arma::uword> order(block);
        for (arma::uword i = 0; i < block; ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](arma::uword a, arma::uword b)
                         { return row_mag(a) > row_mag(b); });

        const arma::cx_double lead = c_ortho(r, order[0]);
        rep.q(r, 0) = order[0];
        rep.a(r, 0) = arma::cx_double(1.0, 0.0);
        for (arma::uword l = 1; l < l_csi; ++l)
        {
            rep.q(r, l) = order[l];
            rep.a(r, l) = c_ortho(r, order[l]) / lead;
        }
    }
    return rep;
}

// ---------- PAYLOAD SIZE ----------

std::uint64_t nchoosek(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return 0;
    if (k > n - k)
        k = n - k;
    // Each prefix product is itself a binomial coefficient, so dividing by i
    // is exact; a 128-bit intermediate absorbs the multiply.
    unsigned __int128 c = 1;
    for (std::uint64_t i = 1; i <= k; ++i)
    {
        c = c * (n - k + i) / i;
        if (c > std::numeric_limits<std::uint64_t>::max())
            throw std::overflow_error("nchoosek: result exceeds 64 bits");
    }
    return static_cast<std::uint64_t>(c);
}

arma::uword ceil_log2(std::uint64_t v)
{
    if (v == 0)
        throw std::invalid_argument("ceil_log2: undefined for zero");
    arma::uword bits = 0;
    while ((std::uint64_t{1} << bits) < v)
        ++bits;
    return bits;
}

BitBreakdown count_bits(const Codebook &fb, arma::uword l_csi, arma::uword n_rx,
                        arma::uword bwp, arma::uword p_csi, arma::uword max_rank)
{
    fb.validate();
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("count_bits: codebook must be a feedback grid");
    const arma::uword block = fb.n_x * fb.n_y;
    if (l_csi < 1 || l_csi > block)
        throw std::invalid_argument("count_bits: l_csi must lie in [1, n_x*n_y]");
    if (n_rx == 0 || bwp == 0 || p_csi == 0 || max_rank == 0)
        throw std::invalid_argument("count_bits: counts must be positive");

    BitBreakdown b;
    b.combination = n_rx * bwp * ceil_log2(nchoosek(block, l_csi));
    b.oversampling = bwp * ceil_log2(fb.o_h * fb.o_v);
    b.amplitude = n_rx * bwp * 4 * (l_csi - 1);
    b.phase = n_rx * bwp * 3 * (l_csi - 1);
    b.cri = ceil_log2(p_csi);
    b.rank = ceil_log2(max_rank);
    b.cqi = 4;
    return b;
}

// ---------- RECONSTRUCTION ----------

arma::cx_mat reconstruct_pmi(const CsiReport &rep, const Codebook &fb)
{
    fb.validate();
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("reconstruct_pmi: codebook must be a feedback grid");
    if (rep.q.n_rows != rep.a.n_rows || rep.q.n_cols != rep.a.n_cols)
        throw std::invalid_argument("reconstruct_pmi: index and coefficient shapes differ");
    if (rep.q.n_cols == 0 || rep.q.n_rows == 0)
        throw std::invalid_argument("reconstruct_pmi: empty report");
    if (rep.q0x >= fb.o_h || rep.q0y >= fb.o_v)
        throw std::invalid_argument("reconstruct_pmi: oversampling shift out of range");

    const arma::uword block = fb.n_x * fb.n_y;
    arma::cx_mat rows(rep.q.n_rows, fb.n_ports(), arma::fill::zeros);
    for (arma::uword r = 0; r < rep.q.n_rows; ++r)
    {
        for (arma::uword l = 0; l < rep.q.n_cols; ++l)
        {
            if (rep.q(r, l) >= block)
                throw std::invalid_argument("reconstruct_pmi: in-block index out of range");
            const arma::uword col = global_column(fb, rep.q0x, rep.q0y, rep.q(r, l));
            // Beam products score rows against the columns directly, so the
            // matching synthesis basis is the conjugate-transposed column.
            rows.row(r) += rep.a(r, l) * fb.w.col(col).t();
        }
    }
    return rows;
}

arma::cx_mat reconstruct_channel(const arma::cx_mat &beam_rows, const Codebook &csirs)
{
    csirs.validate();
    if (beam_rows.n_cols != csirs.n_codewords())
        throw std::invalid_argument("reconstruct_channel: row width must equal the codeword count");
    if (beam_rows.n_rows == 0)
        throw std::invalid_argument("reconstruct_channel: need at least one row");
    if (arma::rank(csirs.w) < csirs.n_codewords())
        throw std::invalid_argument("reconstruct_channel: codebook columns must be independent");

    const double np = static_cast<double>(csirs.n_ports());
    const arma::cx_mat gram = csirs.w.t() * csirs.w;
    arma::cx_mat ident(csirs.n_codewords(), csirs.n_codewords(), arma::fill::eye);
    if (arma::abs(gram - np * ident).max() < 1e-9 * np)
    {
        // Columns drawn from one orthogonal block: the pseudo-inverse is the
        // scaled conjugate transpose.
        return beam_rows * csirs.w.t() / np;
    }
    return beam_rows * arma::pinv(csirs.w);
}

std::vector<arma::cx_mat> aggregate_users(const std::vector<arma::cx_mat> &rows)
{
    if (rows.empty())
        throw std::invalid_argument("aggregate_users: no users");
    for (const auto &m : rows)
    {
        if (m.n_rows != rows.front().n_rows || m.n_cols != rows.front().n_cols)
            throw std::invalid_argument("aggregate_users: mismatched shapes");
    }
    return rows;
}

} // namespace beamsim
