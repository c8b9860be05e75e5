// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/codebook.hpp"

#include <algorithm>

namespace beamsim
{

void Codebook::validate() const
{
    if (w.n_rows == 0 || w.n_cols == 0)
        throw std::invalid_argument("Codebook: empty codeword matrix");
    const double target = double(w.n_rows);
    for (arma::uword c = 0; c < w.n_cols; c++)
    {
        const double p = std::pow(arma::norm(w.col(c)), 2);
        if (std::abs(p - target) > 1e-9 * target)
            throw std::invalid_argument("Codebook: codeword power constraint violated");
    }
    if (kind == CodebookKind::kFeedback)
    {
        if (w.n_rows != n_x * n_y || w.n_cols != n_x * o_h * n_y * o_v)
            throw std::invalid_argument("Codebook: feedback grid layout mismatch");
    }
    if (!fb_cols.is_empty() && fb_cols.n_elem != w.n_cols)
        throw std::invalid_argument("Codebook: fb_cols length mismatch");
}

arma::cx_mat dft_matrix(arma::uword n)
{
    if (n == 0)
        throw std::invalid_argument("dft_matrix: n must be positive");
    arma::cx_mat u(n, n);
    const double s = 1.0 / std::sqrt(double(n));
    for (arma::uword k = 0; k < n; k++)
        for (arma::uword m = 0; m < n; m++)
            u(m, k) = std::polar(s, -2.0 * arma::datum::pi * double(m) * double(k) / double(n));
    return u;
}

arma::cx_mat oversampled_dft(arma::uword n, arma::uword o)
{
    if (n == 0 || o == 0)
        throw std::invalid_argument("oversampled_dft: n and o must be positive");
    const arma::cx_mat u = dft_matrix(n);
    arma::cx_mat b(n, o * n);
    for (arma::uword q = 0; q < o; q++)
    {
        arma::cx_vec d(n);
        for (arma::uword m = 0; m < n; m++)
            d[m] = std::polar(1.0, -2.0 * arma::datum::pi * double(m) * double(q) / double(o * n));
        b.cols(q * n, q * n + n - 1) = u.each_col() % d;
    }
    return b;
}

Codebook feedback_codebook(const ArrayGeometry &geom, arma::uword o_h, arma::uword o_v)
{
    geom.validate();
    if (o_h == 0 || o_v == 0)
        throw std::invalid_argument("feedback_codebook: oversampling must be positive");
    Codebook cb;
    cb.kind = CodebookKind::kFeedback;
    cb.n_x = geom.n_x;
    cb.n_y = geom.n_y;
    cb.o_h = o_h;
    cb.o_v = o_v;
    cb.w = std::sqrt(double(geom.size())) *
           arma::kron(oversampled_dft(geom.n_x, o_h), oversampled_dft(geom.n_y, o_v));
    return cb;
}

Codebook orthogonal_subset(const Codebook &fb, arma::uword q0x, arma::uword q0y)
{
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("orthogonal_subset: feedback codebook required");
    if (q0x >= fb.o_h || q0y >= fb.o_v)
        throw std::invalid_argument("orthogonal_subset: oversampling shift out of range");
    Codebook sub;
    sub.kind = CodebookKind::kFeedback;
    sub.n_x = fb.n_x;
    sub.n_y = fb.n_y;
    sub.o_h = 1;
    sub.o_v = 1;
    sub.w.set_size(fb.n_ports(), fb.n_x * fb.n_y);
    sub.fb_cols.set_size(sub.w.n_cols);
    for (arma::uword j = 0; j < sub.w.n_cols; j++)
    {
        const arma::uword g = global_column(fb, q0x, q0y, j);
        sub.w.col(j) = fb.w.col(g);
        sub.fb_cols[j] = g;
    }
    return sub;
}

std::pair<arma::uword, arma::uword> oversampling_of(const Codebook &fb, arma::uword flat_col)
{
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("oversampling_of: feedback codebook required");
    if (flat_col >= fb.n_codewords())
        throw std::invalid_argument("oversampling_of: column index out of range");
    const arma::uword cx = flat_col / (fb.o_v * fb.n_y);
    const arma::uword cy = flat_col % (fb.o_v * fb.n_y);
    return {cx / fb.n_x, cy / fb.n_y};
}

arma::uword global_column(const Codebook &fb, arma::uword q0x, arma::uword q0y, arma::uword ortho_idx)
{
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("global_column: feedback codebook required");
    if (q0x >= fb.o_h || q0y >= fb.o_v || ortho_idx >= fb.n_x * fb.n_y)
        throw std::invalid_argument("global_column: index out of range");
    const arma::uword ux = ortho_idx / fb.n_y;
    const arma::uword uy = ortho_idx % fb.n_y;
    return (q0x * fb.n_x + ux) * (fb.o_v * fb.n_y) + q0y * fb.n_y + uy;
}

Codebook rsv_codebook(const ChannelTensor &h, arma::uword slot, arma::uword l_max,
                      arma::uword band_start, arma::uword band_size)
{
    h.validate();
    if (slot >= h.n_slots)
        throw std::invalid_argument("rsv_codebook: slot out of range");
    if (band_size == 0 || band_start + band_size > h.n_subcarriers)
        throw std::invalid_argument("rsv_codebook: subband out of range");
    if (l_max == 0 || l_max > h.n_users * h.n_tx)
        throw std::invalid_argument("rsv_codebook: l_max out of range");

    struct Entry
    {
        double value;
        arma::uword user, order;
        arma::cx_vec vec;
    };
    std::vector<Entry> pool;
    pool.reserve(h.n_users * h.n_tx);

    for (arma::uword u = 0; u < h.n_users; u++)
    {
        arma::cx_mat r(h.n_tx, h.n_tx, arma::fill::zeros);
        for (arma::uword k = band_start; k < band_start + band_size; k++)
        {
            const arma::cx_mat &m = h.at(u, slot, k);
            r += m.t() * m;
        }
        r /= double(band_size);
        arma::vec eigval;
        arma::cx_mat eigvec;
        if (!arma::eig_sym(eigval, eigvec, r))
            throw std::runtime_error("rsv_codebook: eigendecomposition failed");
        // eig_sym returns ascending order; store descending per user.
        for (arma::uword i = 0; i < eigval.n_elem; i++)
        {
            const arma::uword src = eigval.n_elem - 1 - i;
            pool.push_back({eigval[src], u, i, eigvec.col(src)});
        }
    }

    std::stable_sort(pool.begin(), pool.end(), [](const Entry &a, const Entry &b) {
        if (a.value != b.value)
            return a.value > b.value;
        if (a.user != b.user)
            return a.user < b.user;
        return a.order < b.order;
    });

    Codebook cb;
    cb.kind = CodebookKind::kSsb;
    cb.w.set_size(h.n_tx, l_max);
    const double scale = std::sqrt(double(h.n_tx));
    for (arma::uword i = 0; i < l_max; i++)
    {
        arma::cx_vec v = pool[i].vec / arma::norm(pool[i].vec);
        // Eigenvector phase is arbitrary; pin it so the strongest entry is
        // real and positive, making the codebook a deterministic function of
        // the channel.
        const arma::uword peak = arma::abs(v).index_max();
        const double mag = std::abs(v[peak]);
        if (mag > 0.0)
            v *= std::conj(v[peak]) / mag;
        cb.w.col(i) = scale * v;
    }
    return cb;
}

Codebook random_dft_ssb(const Codebook &fb, arma::uword l_max, std::uint64_t seed)
{
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("random_dft_ssb: feedback codebook required");
    if (l_max == 0 || l_max > fb.n_codewords())
        throw std::invalid_argument("random_dft_ssb: l_max out of range");
    Rng rng(seed);
    arma::uvec idx = arma::regspace<arma::uvec>(0, fb.n_codewords() - 1);
    // Partial Fisher-Yates for a draw without replacement.
    for (arma::uword i = 0; i < l_max; i++)
    {
        const arma::uword j = i + arma::uword(rng.integer(idx.n_elem - i));
        std::swap(idx[i], idx[j]);
    }
    Codebook cb;
    cb.kind = CodebookKind::kSsb;
    cb.w.set_size(fb.n_ports(), l_max);
    cb.fb_cols.set_size(l_max);
    for (arma::uword i = 0; i < l_max; i++)
    {
        cb.w.col(i) = fb.w.col(idx[i]);
        cb.fb_cols[i] = idx[i];
    }
    return cb;
}

Codebook single_antenna(arma::uword n_ports)
{
    if (n_ports == 0)
        throw std::invalid_argument("single_antenna: n_ports must be positive");
    Codebook cb;
    cb.kind = CodebookKind::kSsb;
    cb.w.zeros(n_ports, 1);
    cb.w(0, 0) = std::sqrt(double(n_ports));
    return cb;
}

} // namespace beamsim
