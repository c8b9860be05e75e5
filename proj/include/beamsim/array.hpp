// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/common.hpp"

namespace beamsim
{

// Uniform planar array, N_X horizontal columns by N_Y vertical rows.
// Port index p = x * n_y + y (horizontal index major), matching the
// Kronecker ordering of the DFT feedback codebook.
struct ArrayGeometry
{
    arma::uword n_x = 4;      // horizontal elements
    arma::uword n_y = 8;      // vertical elements
    double spacing_h = 0.5;   // element spacing, wavelengths
    double spacing_v = 0.5;

    arma::uword size() const { return n_x * n_y; }
    void validate() const;
};

// Unit-norm ULA response sampled at a given cosine of the steering angle:
//   a[m] = exp(j*2*pi*spacing*m*cos_theta) / sqrt(n),  m = 0..n-1
arma::cx_vec ula_response_cos(arma::uword n, double spacing, double cos_theta);

// ULA response from the physical angle (radians).
arma::cx_vec ula_response(arma::uword n, double spacing, double theta);

// Planar response: Kronecker product of the horizontal response (azimuth)
// and the vertical response (elevation). Unit norm.
arma::cx_vec array_response(const ArrayGeometry &geom, double azimuth, double elevation);
arma::cx_vec array_response_cos(const ArrayGeometry &geom, double cos_az, double cos_el);

} // namespace beamsim
