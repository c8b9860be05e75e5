// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include <catch2/catch_amalgamated.hpp>

#include "beamsim/array.hpp"

// Covered tests:
// - ULA response normalization and per-element phase progression
// - Broadside steering gives equal in-phase weights
// - Half-wavelength responses on the critical cosine grid are orthonormal
// - Planar response equals the Kronecker product of the axis responses
// - Cosine and angle entry points agree
// - Geometry validation rejects degenerate arrays

using namespace beamsim;

namespace
{
constexpr double kTol = 1e-12;
}

TEST_CASE("ula response is unit norm with the advertised phase ramp")
{
    const arma::uword n = 7;
    const double spacing = 0.5, c = 0.37;
    const arma::cx_vec a = ula_response_cos(n, spacing, c);

    REQUIRE(a.n_elem == n);
    REQUIRE(std::abs(arma::norm(a) - 1.0) < kTol);
    for (arma::uword m = 0; m < n; ++m)
    {
        const cxd expect = std::polar(1.0 / std::sqrt(double(n)),
                                      2.0 * arma::datum::pi * spacing * double(m) * c);
        REQUIRE(std::abs(a[m] - expect) < kTol);
    }
}

TEST_CASE("broadside steering weights are constant")
{
    const arma::cx_vec a = ula_response_cos(5, 0.5, 0.0);
    for (arma::uword m = 0; m < a.n_elem; ++m)
        REQUIRE(std::abs(a[m] - a[0]) < kTol);
}

TEST_CASE("critical cosine grid yields an orthonormal response family")
{
    // At half-wavelength spacing the cosines -1 + 2g/n produce a DFT-like
    // basis; cross-correlations must vanish.
    const arma::uword n = 8;
    arma::cx_mat basis(n, n);
    for (arma::uword g = 0; g < n; ++g)
        basis.col(g) = ula_response_cos(n, 0.5, -1.0 + 2.0 * double(g) / double(n));

    const arma::cx_mat gram = basis.t() * basis;
    const arma::cx_mat eye = arma::eye<arma::cx_mat>(n, n);
    REQUIRE(arma::abs(gram - eye).max() < 1e-10);
}

TEST_CASE("planar response is the kronecker product of the axis responses")
{
    ArrayGeometry geom{3, 4, 0.5, 0.5};
    const double az = 0.6, el = 1.8;
    const arma::cx_vec v = array_response(geom, az, el);

    const arma::cx_vec ah = ula_response(geom.n_x, geom.spacing_h, az);
    const arma::cx_vec av = ula_response(geom.n_y, geom.spacing_v, el);
    const arma::cx_vec expect = arma::kron(ah, av);

    REQUIRE(v.n_elem == geom.size());
    REQUIRE(std::abs(arma::norm(v) - 1.0) < kTol);
    REQUIRE(arma::abs(v - expect).max() < kTol);
}

TEST_CASE("angle and cosine entry points agree")
{
    const double theta = 1.1;
    const arma::cx_vec a = ula_response(6, 0.5, theta);
    const arma::cx_vec b = ula_response_cos(6, 0.5, std::cos(theta));
    REQUIRE(arma::abs(a - b).max() < kTol);

    ArrayGeometry geom{2, 3, 0.5, 0.5};
    const arma::cx_vec p = array_response(geom, 0.4, 2.0);
    const arma::cx_vec q = array_response_cos(geom, std::cos(0.4), std::cos(2.0));
    REQUIRE(arma::abs(p - q).max() < kTol);
}

TEST_CASE("geometry validation rejects degenerate arrays")
{
    ArrayGeometry zero_x{0, 4, 0.5, 0.5};
    REQUIRE_THROWS_AS(zero_x.validate(), std::invalid_argument);
    ArrayGeometry zero_y{4, 0, 0.5, 0.5};
    REQUIRE_THROWS_AS(zero_y.validate(), std::invalid_argument);
    ArrayGeometry bad_spacing{2, 2, 0.0, 0.5};
    REQUIRE_THROWS_AS(bad_spacing.validate(), std::invalid_argument);
}
