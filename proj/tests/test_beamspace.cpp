// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include <catch2/catch_amalgamated.hpp>

#include "beamsim/beamspace.hpp"

#include <vector>

// Covered tests:
// - Critically sampled grids are unitary
// - Beamspace round trip restores codewords exactly
// - Overcomplete grids still invert and keep the power convention
// - Codebook cubes pack real/imag slice pairs in codeword order
// - Network input frames carry pick counts and normalized power
// - Degenerate report statistics collapse to the documented constants

using namespace beamsim;

TEST_CASE("critically sampled grids are unitary")
{
    const ArrayGeometry geom{4, 8, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 4, 8);

    const arma::cx_mat gx = grids.ax.t() * grids.ax;
    const arma::cx_mat gy = grids.ay.t() * grids.ay;
    REQUIRE(arma::abs(gx - arma::eye<arma::cx_mat>(4, 4)).max() < 1e-12);
    REQUIRE(arma::abs(gy - arma::eye<arma::cx_mat>(8, 8)).max() < 1e-12);

    REQUIRE_THROWS_AS(beamspace_grids(geom, 0, 8), std::invalid_argument);
}

TEST_CASE("beamspace round trip restores codewords exactly")
{
    const ArrayGeometry geom{4, 4, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 4, 4);
    const Codebook fb = feedback_codebook(geom, 2, 2);

    for (arma::uword i = 0; i < fb.n_codewords(); i += 7)
    {
        const arma::cx_mat img = to_beamspace(fb.w.col(i), geom, grids);
        const arma::cx_vec back = from_beamspace(img, geom, grids);
        REQUIRE(arma::abs(back - fb.w.col(i)).max() < 1e-9);
    }
}

TEST_CASE("overcomplete grids still invert and keep the power convention")
{
    const ArrayGeometry geom{4, 4, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 16, 16);
    const Codebook fb = feedback_codebook(geom, 2, 2);

    const arma::cx_vec f = fb.w.col(9);
    const arma::cx_mat img = to_beamspace(f, geom, grids);
    REQUIRE(img.n_rows == 16);
    REQUIRE(img.n_cols == 16);

    const arma::cx_vec back = from_beamspace(img, geom, grids);
    REQUIRE(arma::abs(back - f).max() < 1e-9);
    REQUIRE(arma::norm(back) ==
            Catch::Approx(std::sqrt(double(geom.size()))).epsilon(1e-12));

    // Shape mismatches are rejected.
    REQUIRE_THROWS_AS(from_beamspace(arma::cx_mat(4, 4, arma::fill::zeros), geom, grids),
                      std::invalid_argument);
}

TEST_CASE("codebook cubes pack real/imag slice pairs in codeword order")
{
    const ArrayGeometry geom{2, 4, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 2, 4);
    const Codebook ssb = random_dft_ssb(feedback_codebook(geom, 2, 2), 4, 21);

    const arma::cube cube = beams_to_cube(ssb, geom, grids);
    REQUIRE(cube.n_rows == 2);
    REQUIRE(cube.n_cols == 4);
    REQUIRE(cube.n_slices == 8);

    for (arma::uword i = 0; i < 4; ++i)
    {
        const arma::cx_mat img = to_beamspace(ssb.w.col(i), geom, grids);
        REQUIRE(arma::abs(cube.slice(2 * i) - arma::real(img)).max() < 1e-14);
        REQUIRE(arma::abs(cube.slice(2 * i + 1) - arma::imag(img)).max() < 1e-14);
    }

    const Codebook back = cube_to_beams(cube, geom, grids, CodebookKind::kSsb);
    REQUIRE(back.kind == CodebookKind::kSsb);
    REQUIRE(back.n_codewords() == 4);
    for (arma::uword i = 0; i < 4; ++i)
        REQUIRE(arma::abs(back.w.col(i) - ssb.w.col(i)).max() < 1e-9);

    REQUIRE_THROWS_AS(cube_to_beams(arma::cube(2, 4, 3), geom, grids, CodebookKind::kSsb),
                      std::invalid_argument);
}

TEST_CASE("network input frames carry pick counts and normalized power")
{
    const ArrayGeometry geom{2, 4, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 2, 4);
    const Codebook ssb = random_dft_ssb(feedback_codebook(geom, 2, 2), 3, 22);

    std::vector<SsbReport> reports(4);
    for (auto &r : reports)
        r.rsrp = arma::vec(3, arma::fill::zeros);
    reports[0].best_beam = 0;
    reports[0].best_rsrp = 1.0;
    reports[1].best_beam = 0;
    reports[1].best_rsrp = 3.0;
    reports[2].best_beam = 2;
    reports[2].best_rsrp = 6.0;
    reports[3].best_beam = 1;
    reports[3].best_rsrp = 100.0;
    reports[3].included = false; // dropped from the statistics

    const arma::cube in = build_input(ssb, reports, geom, grids);
    REQUIRE(in.n_rows == 4);   // gx + 2
    REQUIRE(in.n_cols == 6);   // gy + 2
    REQUIRE(in.n_slices == 6); // two per beam

    // Beam powers {4, 0, 6} min-max normalize to {2/3, 0, 1}.
    REQUIRE(in.slice(0)(0, 0) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(in.slice(2)(0, 0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(in.slice(4)(0, 0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(in.slice(1)(0, 0) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    REQUIRE(in.slice(3)(0, 0) == Catch::Approx(0.0).margin(1e-15));
    REQUIRE(in.slice(5)(0, 0) == Catch::Approx(1.0).margin(1e-15));

    // Interior pixels are the beamspace image of the codeword.
    const arma::cx_mat img = to_beamspace(ssb.w.col(1), geom, grids);
    REQUIRE(arma::abs(arma::mat(in.slice(2)(arma::span(1, 2), arma::span(1, 4))) -
                      arma::real(img))
                .max() < 1e-14);
    REQUIRE(arma::abs(arma::mat(in.slice(3)(arma::span(1, 2), arma::span(1, 4))) -
                      arma::imag(img))
                .max() < 1e-14);

    // The frame is constant all the way around.
    REQUIRE(in.slice(0)(3, 5) == Catch::Approx(2.0).margin(1e-15));
    REQUIRE(in.slice(0)(0, 3) == Catch::Approx(2.0).margin(1e-15));
}

TEST_CASE("degenerate report statistics collapse to the documented constants")
{
    const ArrayGeometry geom{2, 2, 0.5, 0.5};
    const BeamspaceGrids grids = beamspace_grids(geom, 2, 2);
    const Codebook ssb = random_dft_ssb(feedback_codebook(geom, 2, 2), 2, 23);

    // Nobody reports: every frame value is zero.
    const arma::cube empty = build_input(ssb, {}, geom, grids);
    REQUIRE(empty.slice(1)(0, 0) == 0.0);
    REQUIRE(empty.slice(3)(0, 0) == 0.0);

    // Equal powers on every beam: the spread is degenerate and the
    // normalized power saturates at one.
    std::vector<SsbReport> reports(2);
    for (auto &r : reports)
        r.rsrp = arma::vec(2, arma::fill::zeros);
    reports[0].best_beam = 0;
    reports[0].best_rsrp = 5.0;
    reports[1].best_beam = 1;
    reports[1].best_rsrp = 5.0;
    const arma::cube flat = build_input(ssb, reports, geom, grids);
    REQUIRE(flat.slice(1)(0, 0) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(flat.slice(3)(0, 0) == Catch::Approx(1.0).margin(1e-15));

    // Mismatched report lengths are rejected.
    std::vector<SsbReport> bad(1);
    bad[0].rsrp = arma::vec(5, arma::fill::zeros);
    REQUIRE_THROWS_AS(build_input(ssb, bad, geom, grids), std::invalid_argument);
}
