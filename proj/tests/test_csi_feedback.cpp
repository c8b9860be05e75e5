// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include <catch2/catch_amalgamated.hpp>

#include "beamsim/csi_feedback.hpp"

#include <vector>

// Covered tests:
// - Exact binomial coefficients, overflow detection, ceil(log2) table
// - Quantizer agrees with an independent exhaustive enumeration
// - In-span rows are quantized to their exact construction coefficients
// - Quantize/reconstruct round trip restores in-span rows up to the lead
// - Bit accounting matches a hand-computed payload
// - Port-domain lift is exact for estimates in the codebook row space
// - Orthogonal-block fast path agrees with the pseudo-inverse
// - Input validation: zero rows, wrong codebook kind, bad l_csi, shapes

using namespace beamsim;

namespace
{

arma::cx_mat random_cx(arma::uword r, arma::uword c, Rng &rng)
{
    arma::cx_mat m(r, c);
    for (arma::uword i = 0; i < m.n_elem; ++i)
        m(i) = rng.cgaussian();
    return m;
}

// Reference quantizer written against the documented report format: flat
// scores by explicit inner products, selection by repeated strict-max scans.
// Deliberately a different algorithm from the production code.
CsiReport oracle_quantize(const arma::cx_mat &eff, const Codebook &fb, arma::uword l_csi)
{
    const arma::uword n_ports = fb.n_ports();
    const arma::uword block = fb.n_x * fb.n_y;

    auto score_col = [&](arma::uword r, arma::uword c) {
        cxd s = 0.0;
        for (arma::uword p = 0; p < n_ports; ++p)
            s += eff(r, p) * fb.w(p, c);
        return s;
    };

    arma::uword best_col = 0;
    double best_val = -1.0;
    for (arma::uword c = 0; c < fb.n_codewords(); ++c)
    {
        double colmax = 0.0;
        for (arma::uword r = 0; r < eff.n_rows; ++r)
            colmax = std::max(colmax, std::abs(score_col(r, c)));
        if (colmax > best_val)
        {
            best_val = colmax;
            best_col = c;
        }
    }

    CsiReport rep;
    // Decode the flat column by the documented kron layout.
    const arma::uword cx = best_col / (fb.o_v * fb.n_y);
    const arma::uword cy = best_col % (fb.o_v * fb.n_y);
    rep.q0x = cx / fb.n_x;
    rep.q0y = cy / fb.n_y;

    rep.q.set_size(eff.n_rows, l_csi);
    rep.a.set_size(eff.n_rows, l_csi);
    for (arma::uword r = 0; r < eff.n_rows; ++r)
    {
        std::vector<cxd> c_block(block);
        for (arma::uword j = 0; j < block; ++j)
        {
            const arma::uword g = (rep.q0x * fb.n_x + j / fb.n_y) * (fb.o_v * fb.n_y) +
                                  rep.q0y * fb.n_y + j % fb.n_y;
            c_block[j] = score_col(r, g);
        }
        std::vector<bool> used(block, false);
        cxd lead = 0.0;
        for (arma::uword l = 0; l < l_csi; ++l)
        {
            arma::uword pick = block;
            double top = -1.0;
            for (arma::uword j = 0; j < block; ++j)
                if (!used[j] && std::abs(c_block[j]) > top)
                {
                    top = std::abs(c_block[j]);
                    pick = j;
                }
            used[pick] = true;
            rep.q(r, l) = pick;
            if (l == 0)
            {
                lead = c_block[pick];
                rep.a(r, 0) = cxd(1.0, 0.0);
            }
            else
            {
                rep.a(r, l) = c_block[pick] / lead;
            }
        }
    }
    return rep;
}

} // namespace

TEST_CASE("binomial coefficients are exact and overflow is detected")
{
    REQUIRE(nchoosek(0, 0) == 1);
    REQUIRE(nchoosek(5, 2) == 10);
    REQUIRE(nchoosek(8, 4) == 70);
    REQUIRE(nchoosek(10, 11) == 0);
    REQUIRE(nchoosek(52, 5) == 2598960);
    REQUIRE(nchoosek(64, 32) == 1832624140942590534ULL);
    REQUIRE_THROWS_AS(nchoosek(68, 34), std::overflow_error);
}

TEST_CASE("ceil log2 rounds up and rejects zero")
{
    REQUIRE(ceil_log2(1) == 0);
    REQUIRE(ceil_log2(2) == 1);
    REQUIRE(ceil_log2(3) == 2);
    REQUIRE(ceil_log2(4) == 2);
    REQUIRE(ceil_log2(5) == 3);
    REQUIRE(ceil_log2(1024) == 10);
    REQUIRE(ceil_log2(1025) == 11);
    REQUIRE_THROWS_AS(ceil_log2(0), std::invalid_argument);
}

TEST_CASE("quantizer matches the exhaustive reference on random rows")
{
    const ArrayGeometry geoms[] = {{2, 2, 0.5, 0.5}, {2, 4, 0.5, 0.5}, {4, 2, 0.5, 0.5}};
    Rng rng(2024);
    for (const auto &geom : geoms)
    {
        const Codebook fb = feedback_codebook(geom, 4, 4);
        for (int trial = 0; trial < 40; ++trial)
        {
            const arma::uword n_rx = 1 + rng.integer(2);
            const arma::uword l_csi = 1 + rng.integer(3);
            const arma::cx_mat eff = random_cx(n_rx, geom.size(), rng);

            const CsiReport got = quantize_type2(eff, fb, l_csi);
            const CsiReport want = oracle_quantize(eff, fb, l_csi);

            REQUIRE(got.q0x == want.q0x);
            REQUIRE(got.q0y == want.q0y);
            REQUIRE(arma::all(arma::vectorise(got.q == want.q)));
            REQUIRE(arma::abs(got.a - want.a).max() < 1e-12);
            REQUIRE(got.a(0, 0) == cxd(1.0, 0.0));
            for (arma::uword r = 0; r < n_rx; ++r)
                for (arma::uword l = 0; l < l_csi; ++l)
                    REQUIRE(std::abs(got.a(r, l)) <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("in-span rows come back with their construction coefficients")
{
    ArrayGeometry geom{2, 4, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 2);
    const Codebook ortho = orthogonal_subset(fb, 1, 0);

    // Dominant lead keeps every cross-block projection strictly smaller.
    const arma::uvec sel{5, 1, 6};
    const std::vector<cxd> coef = {cxd(1.0, 0.0), cxd(0.05, 0.25), cxd(-0.12, 0.08)};

    arma::cx_mat eff(1, geom.size(), arma::fill::zeros);
    for (arma::uword l = 0; l < sel.n_elem; ++l)
        eff.row(0) += coef[l] * ortho.w.col(sel[l]).t();

    const CsiReport rep = quantize_type2(eff, fb, 3);
    REQUIRE(rep.q0x == 1);
    REQUIRE(rep.q0y == 0);
    // |coef| ordering: lead, then the two smaller ones by magnitude.
    REQUIRE(rep.q(0, 0) == 5);
    REQUIRE(rep.q(0, 1) == 1);
    REQUIRE(rep.q(0, 2) == 6);
    REQUIRE(std::abs(rep.a(0, 1) - coef[1] / coef[0]) < 1e-12);
    REQUIRE(std::abs(rep.a(0, 2) - coef[2] / coef[0]) < 1e-12);

    // Reconstruction restores the row up to the lead coefficient.
    const arma::cx_mat back = reconstruct_pmi(rep, fb);
    REQUIRE(arma::abs(coef[0] * back - eff).max() < 1e-10);
}

TEST_CASE("bit accounting matches a hand-computed payload")
{
    ArrayGeometry geom{2, 2, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 4, 4);

    const BitBreakdown b = count_bits(fb, 2, 2, 2, 8, 2);
    REQUIRE(b.combination == 12);  // 2 rx * 2 bwp * ceil(log2 C(4,2)=6) = 3
    REQUIRE(b.oversampling == 8);  // 2 bwp * ceil(log2 16)
    REQUIRE(b.amplitude == 16);    // 4 bits * 1 extra beam * 2 rx * 2 bwp
    REQUIRE(b.phase == 12);        // 3 bits * 1 extra beam * 2 rx * 2 bwp
    REQUIRE(b.cri == 3);
    REQUIRE(b.rank == 1);
    REQUIRE(b.cqi == 4);
    REQUIRE(b.total() == 56);

    // One combined beam needs no amplitude or phase payload.
    const BitBreakdown single = count_bits(fb, 1, 1, 1, 1, 1);
    REQUIRE(single.amplitude == 0);
    REQUIRE(single.phase == 0);
    REQUIRE(single.cri == 0);
    REQUIRE(single.rank == 0);

    REQUIRE_THROWS_AS(count_bits(fb, 0, 2, 1, 8, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(count_bits(fb, 5, 2, 1, 8, 2), std::invalid_argument);
}

TEST_CASE("port-domain lift is exact for estimates in the codebook row space")
{
    ArrayGeometry geom{2, 4, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 2);
    Rng rng(55);

    for (int trial = 0; trial < 20; ++trial)
    {
        const Codebook ortho = orthogonal_subset(fb, rng.integer(2), rng.integer(2));
        // Keep a 4-column refinement subset of the block.
        Codebook csirs;
        csirs.kind = CodebookKind::kCsiRs;
        csirs.w = ortho.w.cols(0, 3);

        const arma::cx_mat g = random_cx(2, 4, rng);
        const arma::cx_mat h = g * csirs.w.t(); // rows inside the lift span
        const arma::cx_mat beams = h * csirs.w;

        const arma::cx_mat est = reconstruct_channel(beams, csirs);
        const double rel = arma::abs(est - h).max() / arma::abs(h).max();
        REQUIRE(rel < 1e-12);
    }
}

TEST_CASE("orthogonal-block fast path agrees with the pseudo-inverse")
{
    ArrayGeometry geom{4, 2, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 2);
    const Codebook ortho = orthogonal_subset(fb, 0, 1);
    Codebook csirs;
    csirs.kind = CodebookKind::kCsiRs;
    csirs.w = ortho.w.cols(1, 6);

    Rng rng(66);
    const arma::cx_mat beams = random_cx(2, csirs.n_codewords(), rng);
    const arma::cx_mat fast = reconstruct_channel(beams, csirs);
    const arma::cx_mat direct = beams * arma::pinv(csirs.w);
    REQUIRE(arma::abs(fast - direct).max() < 1e-9);

    // A mixed-block codebook leaves the fast path; the lift still solves the
    // least-squares system exactly.
    Codebook mixed;
    mixed.kind = CodebookKind::kCsiRs;
    mixed.w = arma::join_rows(fb.w.col(0), fb.w.col(9), fb.w.col(20));
    const arma::cx_mat rows = random_cx(2, 3, rng);
    const arma::cx_mat est = reconstruct_channel(rows, mixed);
    REQUIRE(arma::abs(est * mixed.w - rows).max() < 1e-9);
}

TEST_CASE("feedback validation rejects malformed inputs")
{
    ArrayGeometry geom{2, 2, 0.5, 0.5};
    const Codebook fb = feedback_codebook(geom, 2, 2);
    Rng rng(7);
    const arma::cx_mat eff = random_cx(2, 4, rng);

    arma::cx_mat with_zero = eff;
    with_zero.row(1).zeros();
    REQUIRE_THROWS_AS(quantize_type2(with_zero, fb, 2), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize_type2(eff, fb, 0), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize_type2(eff, fb, 5), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize_type2(random_cx(2, 3, rng), fb, 2), std::invalid_argument);

    Codebook ssb = random_dft_ssb(fb, 2, 1);
    REQUIRE_THROWS_AS(quantize_type2(eff, ssb, 1), std::invalid_argument);

    // Duplicated refinement columns cannot be lifted.
    Codebook dup;
    dup.kind = CodebookKind::kCsiRs;
    dup.w = arma::join_rows(fb.w.col(0), fb.w.col(0));
    REQUIRE_THROWS_AS(reconstruct_channel(random_cx(1, 2, rng), dup), std::invalid_argument);

    REQUIRE_THROWS_AS(aggregate_users({}), std::invalid_argument);
    std::vector<arma::cx_mat> rows = {random_cx(2, 4, rng), random_cx(2, 3, rng)};
    REQUIRE_THROWS_AS(aggregate_users(rows), std::invalid_argument);
    rows[1] = random_cx(2, 4, rng);
    REQUIRE(aggregate_users(rows).size() == 2);
}
