// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/array.hpp"

namespace beamsim
{

void ArrayGeometry::validate() const
{
    if (n_x == 0 || n_y == 0)
        throw std::invalid_argument("ArrayGeometry: element counts must be positive");
    if (!(spacing_h > 0.0) || !(spacing_v > 0.0))
        throw std::invalid_argument("ArrayGeometry: spacing must be positive");
}

arma::cx_vec ula_response_cos(arma::uword n, double spacing, double cos_theta)
{
    if (n == 0)
        throw std::invalid_argument("ula_response_cos: n must be positive");
    if (!(spacing > 0.0))
        throw std::invalid_argument("ula_response_cos: spacing must be positive");

    arma::cx_vec a(n);
    const double scale = 1.0 / std::sqrt(double(n));
    const double step = 2.0 * arma::datum::pi * spacing * cos_theta;
    for (arma::uword m = 0; m < n; m++)
        a[m] = std::polar(scale, step * double(m));
    return a;
}

arma::cx_vec ula_response(arma::uword n, double spacing, double theta)
{
    return ula_response_cos(n, spacing, std::cos(theta));
}

arma::cx_vec array_response(const ArrayGeometry &geom, double azimuth, double elevation)
{
    return array_response_cos(geom, std::cos(azimuth), std::cos(elevation));
}

arma::cx_vec array_response_cos(const ArrayGeometry &geom, double cos_az, double cos_el)
{
    geom.validate();
    const arma::cx_vec ax = ula_response_cos(geom.n_x, geom.spacing_h, cos_az);
    const arma::cx_vec ay = ula_response_cos(geom.n_y, geom.spacing_v, cos_el);
    return arma::kron(ax, ay);
}

} // namespace beamsim
