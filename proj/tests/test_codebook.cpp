// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include <catch2/catch_amalgamated.hpp>

#include "beamsim/codebook.hpp"

// Covered tests:
// - DFT matrix unitarity and oversampled grid layout
// - Feedback grid power constraint and column indexing round trip
// - Orthogonal subsets have gram n_ports * I and faithful provenance
// - RSV codebook recovers the dominant direction of a synthetic channel
// - RSV pooling keeps the globally strongest eigenbeams with pinned phase
// - Random DFT broadcast codebooks are reproducible and without repeats
// - Single-antenna reference spends the full power on one element
// - Codebook validation catches power and layout violations

using namespace beamsim;

namespace
{

ChannelTensor single_matrix_tensor(const arma::cx_mat &m)
{
    ChannelTensor t;
    t.n_users = 1;
    t.n_slots = 1;
    t.n_subcarriers = 1;
    t.n_rx = m.n_rows;
    t.n_tx = m.n_cols;
    t.h.resize(1);
    t.h[0].set_size(m.n_rows, m.n_cols, 1);
    t.h[0].slice(0) = m;
    return t;
}

} // namespace

TEST_CASE("dft matrix is unitary")
{
    const arma::uword n = 6;
    const arma::cx_mat u = dft_matrix(n);
    const arma::cx_mat eye = arma::eye<arma::cx_mat>(n, n);
    REQUIRE(arma::abs(u.t() * u - eye).max() < 1e-12);
}

TEST_CASE("oversampled grid stacks rotated unitary blocks")
{
    const arma::uword n = 4, o = 3;
    const arma::cx_mat b = oversampled_dft(n, o);
    REQUIRE(b.n_rows == n);
    REQUIRE(b.n_cols == o * n);

    // Block zero is the plain DFT; every column stays unit norm.
    REQUIRE(arma::abs(b.cols(0, n - 1) - dft_matrix(n)).max() < 1e-12);
    for (arma::uword c = 0; c < b.n_cols; ++c)
        REQUIRE(std::abs(arma::norm(b.col(c)) - 1.0) < 1e-12);

    // Block q applies the fractional-shift diagonal to the base matrix.
    for (arma::uword q = 1; q < o; ++q)
        for (arma::uword m = 0; m < n; ++m)
        {
            const cxd rot = std::polar(1.0, -2.0 * arma::datum::pi * double(m) * double(q) /
                                                double(o * n));
            REQUIRE(std::abs(b(m, q * n) - rot * b(m, 0)) < 1e-12);
        }
}

TEST_CASE("feedback grid satisfies the power constraint and its index maps invert")
{
    ArrayGeometry geom{2, 4, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 3, 2);
    REQUIRE_NOTHROW(fb.validate());
    REQUIRE(fb.n_ports() == geom.size());
    REQUIRE(fb.n_codewords() == geom.n_x * 3 * geom.n_y * 2);

    for (arma::uword c = 0; c < fb.n_codewords(); ++c)
        REQUIRE(std::pow(arma::norm(fb.w.col(c)), 2) ==
                Catch::Approx(double(fb.n_ports())).margin(1e-9));

    // Every flat column decodes to shifts that re-encode to the same column.
    for (arma::uword c = 0; c < fb.n_codewords(); ++c)
    {
        const auto [qx, qy] = oversampling_of(fb, c);
        REQUIRE(qx < fb.o_h);
        REQUIRE(qy < fb.o_v);
        bool found = false;
        for (arma::uword j = 0; j < fb.n_x * fb.n_y && !found; ++j)
            found = global_column(fb, qx, qy, j) == c;
        REQUIRE(found);
    }
}

TEST_CASE("orthogonal subsets are orthogonal with faithful provenance")
{
    ArrayGeometry geom{4, 2, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 4);
    const double np = double(fb.n_ports());
    for (arma::uword qx = 0; qx < fb.o_h; ++qx)
        for (arma::uword qy = 0; qy < fb.o_v; ++qy)
        {
            const Codebook sub = orthogonal_subset(fb, qx, qy);
            REQUIRE(sub.n_codewords() == fb.n_x * fb.n_y);
            const arma::cx_mat gram = sub.w.t() * sub.w;
            const arma::cx_mat expect = np * arma::eye<arma::cx_mat>(sub.n_codewords(),
                                                                     sub.n_codewords());
            REQUIRE(arma::abs(gram - expect).max() < 1e-9);

            for (arma::uword j = 0; j < sub.n_codewords(); ++j)
            {
                REQUIRE(sub.fb_cols[j] == global_column(fb, qx, qy, j));
                REQUIRE(arma::abs(sub.w.col(j) - fb.w.col(sub.fb_cols[j])).max() < 1e-12);
            }
        }
    REQUIRE_THROWS_AS(orthogonal_subset(fb, fb.o_h, 0), std::invalid_argument);
}

TEST_CASE("rsv codebook recovers the dominant direction of a rank-one channel")
{
    // H = u v^H has right singular vector v; the codeword must align with it.
    const arma::uword n_rx = 2, n_tx = 8;
    arma::arma_rng::set_seed(7);
    arma::cx_vec u(n_rx, arma::fill::randn), v(n_tx, arma::fill::randn);
    u /= arma::norm(u);
    v /= arma::norm(v);
    const ChannelTensor t = single_matrix_tensor(u * v.t());

    const Codebook cb = rsv_codebook(t, 0, 1, 0, 1);
    REQUIRE(cb.n_codewords() == 1);
    REQUIRE(std::pow(arma::norm(cb.w.col(0)), 2) ==
            Catch::Approx(double(n_tx)).margin(1e-9));

    const double align = std::abs(arma::cdot(v, cb.w.col(0))) / arma::norm(cb.w.col(0));
    REQUIRE(align == Catch::Approx(1.0).margin(1e-9));

    // Phase pinning: the strongest entry is real and positive.
    const arma::uword peak = arma::abs(cb.w.col(0)).index_max();
    REQUIRE(cb.w.col(0)[peak].imag() == Catch::Approx(0.0).margin(1e-9));
    REQUIRE(cb.w.col(0)[peak].real() > 0.0);
}

TEST_CASE("rsv pooling keeps the globally strongest eigenbeams")
{
    // Two single-antenna users whose channels differ only in gain: the
    // stronger user must supply the first pooled codeword.
    const arma::uword n_tx = 4;
    arma::cx_vec d1(n_tx, arma::fill::zeros), d2(n_tx, arma::fill::zeros);
    d1[1] = 1.0; // weak user points at element 1
    d2[2] = 3.0; // strong user points at element 2

    ChannelTensor t;
    t.n_users = 2;
    t.n_slots = 1;
    t.n_subcarriers = 1;
    t.n_rx = 1;
    t.n_tx = n_tx;
    t.h.resize(2);
    t.h[0].set_size(1, n_tx, 1);
    t.h[0].slice(0) = d1.st();
    t.h[1].set_size(1, n_tx, 1);
    t.h[1].slice(0) = d2.st();

    const Codebook cb = rsv_codebook(t, 0, 2, 0, 1);
    REQUIRE(arma::abs(cb.w.col(0)).index_max() == 2);
    REQUIRE(arma::abs(cb.w.col(1)).index_max() == 1);
}

TEST_CASE("random broadcast draws are reproducible and without repeats")
{
    ArrayGeometry geom{4, 4, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 2);

    const Codebook a = random_dft_ssb(fb, 6, 11);
    const Codebook b = random_dft_ssb(fb, 6, 11);
    const Codebook c = random_dft_ssb(fb, 6, 12);

    REQUIRE(a.n_codewords() == 6);
    REQUIRE(arma::all(a.fb_cols == b.fb_cols));
    REQUIRE(arma::any(a.fb_cols != c.fb_cols));

    const arma::uvec sorted = arma::sort(a.fb_cols);
    for (arma::uword i = 0; i + 1 < sorted.n_elem; ++i)
        REQUIRE(sorted[i] != sorted[i + 1]);
    for (arma::uword i = 0; i < a.n_codewords(); ++i)
        REQUIRE(arma::abs(a.w.col(i) - fb.w.col(a.fb_cols[i])).max() < 1e-12);
}

TEST_CASE("single antenna reference spends the full power on one element")
{
    const Codebook cb = single_antenna(5);
    REQUIRE(cb.n_codewords() == 1);
    REQUIRE(std::abs(cb.w(0, 0) - cxd(std::sqrt(5.0), 0.0)) < 1e-12);
    REQUIRE(arma::abs(cb.w.col(0).subvec(1, 4)).max() == 0.0);
    REQUIRE_NOTHROW(cb.validate());
}

TEST_CASE("codebook validation catches power and layout violations")
{
    Codebook bad;
    bad.w = arma::cx_mat(4, 2, arma::fill::ones); // columns have power 4 != 4? rows=4 ok
    bad.w *= 2.0;                                 // power 16 per column now
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);

    ArrayGeometry geom{2, 2, 0.5, 0.5};
    Codebook fb = feedback_codebook(geom, 2, 2);
    fb.n_x = 3; // break the advertised layout
    REQUIRE_THROWS_AS(fb.validate(), std::invalid_argument);

    Codebook empty;
    REQUIRE_THROWS_AS(empty.validate(), std::invalid_argument);
}
