// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/beamspace.hpp"

#include <cmath>
#include <stdexcept>

namespace beamsim
{

// ---------- GRIDS AND TRANSFORMS ----------

BeamspaceGrids beamspace_grids(const ArrayGeometry &geom, arma::uword gx, arma::uword gy)
{
    geom.validate();
    if (gx == 0 || gy == 0)
        throw std::invalid_argument("beamspace_grids: grid sizes must be positive");

    BeamspaceGrids grids;
    grids.ax.set_size(geom.n_x, gx);
    for (arma::uword g = 0; g < gx; ++g)
    {
        const double c = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(gx);
        grids.ax.col(g) = ula_response_cos(geom.n_x, geom.spacing_h, c);
    }
    grids.ay.set_size(geom.n_y, gy);
    for (arma::uword g = 0; g < gy; ++g)
    {
        const double c = -1.0 + 2.0 * static_cast<double>(g) / static_cast<double>(gy);
        grids.ay.col(g) = ula_response_cos(geom.n_y, geom.spacing_v, c);
    }
    return grids;
}

namespace
{

// View a port-domain beam as the n_x x n_y array aperture. Ports run
// vertical-first (p = x * n_y + y), so a column-major reshape onto n_y rows
// puts x along columns; the transpose then gives aperture(x, y).
arma::cx_mat aperture_of(const arma::cx_vec &f, const ArrayGeometry &geom)
{
    if (f.n_elem != geom.size())
        throw std::invalid_argument("beamspace: beam length must match the array size");
    return arma::cx_mat(arma::reshape(f, geom.n_y, geom.n_x).st());
}

} // namespace

arma::cx_mat to_beamspace(const arma::cx_vec &f, const ArrayGeometry &geom,
                          const BeamspaceGrids &grids)
{
    if (grids.ax.n_rows != geom.n_x || grids.ay.n_rows != geom.n_y)
        throw std::invalid_argument("to_beamspace: grids built for a different array");
    const arma::cx_mat ap = aperture_of(f, geom);
    return grids.ax.t() * ap * grids.ay;
}

arma::cx_vec from_beamspace(const arma::cx_mat &image, const ArrayGeometry &geom,
                            const BeamspaceGrids &grids)
{
    geom.validate();
    if (grids.ax.n_rows != geom.n_x || grids.ay.n_rows != geom.n_y)
        throw std::invalid_argument("from_beamspace: grids built for a different array");
    if (image.n_rows != grids.ax.n_cols || image.n_cols != grids.ay.n_cols)
        throw std::invalid_argument("from_beamspace: image shape must match the grids");

    const arma::cx_mat ap = arma::pinv(grids.ax.t()) * image * arma::pinv(grids.ay);
    arma::cx_vec f = arma::vectorise(ap.st());
    const double nrm = arma::norm(f);
    if (!(nrm > 0.0))
        throw std::invalid_argument("from_beamspace: zero image cannot become a beam");
    return f * (std::sqrt(static_cast<double>(geom.size())) / nrm);
}

// ---------- CODEBOOK PACKING ----------

arma::cube beams_to_cube(const Codebook &cb, const ArrayGeometry &geom,
                         const BeamspaceGrids &grids)
{
    cb.validate();
    if (cb.n_ports() != geom.size())
        throw std::invalid_argument("beams_to_cube: codebook built for a different array");

    arma::cube out(grids.ax.n_cols, grids.ay.n_cols, 2 * cb.n_codewords());
    for (arma::uword i = 0; i < cb.n_codewords(); ++i)
    {
        const arma::cx_mat img = to_beamspace(cb.w.col(i), geom, grids);
        out.slice(2 * i) = arma::real(img);
        out.slice(2 * i + 1) = arma::imag(img);
    }
    return out;
}

Codebook cube_to_beams(const arma::cube &cube, const ArrayGeometry &geom,
                       const BeamspaceGrids &grids, CodebookKind kind)
{
    if (cube.n_slices == 0 || cube.n_slices % 2 != 0)
        throw std::invalid_argument("cube_to_beams: need an even, positive slice count");
    if (cube.n_rows != grids.ax.n_cols || cube.n_cols != grids.ay.n_cols)
        throw std::invalid_argument("cube_to_beams: slice shape must match the grids");

    Codebook cb;
    cb.kind = kind;
    cb.n_x = geom.n_x;
    cb.n_y = geom.n_y;
    cb.o_h = 1;
    cb.o_v = 1;
    cb.w.set_size(geom.size(), cube.n_slices / 2);
    for (arma::uword i = 0; i < cb.n_codewords(); ++i)
    {
        const arma::cx_mat img(cube.slice(2 * i), cube.slice(2 * i + 1));
        cb.w.col(i) = from_beamspace(img, geom, grids);
    }
    return cb;
}

// ---------- NETWORK INPUT ----------

arma::cube build_input(const Codebook &ssb, const std::vector<SsbReport> &reports,
                       const ArrayGeometry &geom, const BeamspaceGrids &grids)
{
    ssb.validate();
    if (ssb.n_ports() != geom.size())
        throw std::invalid_argument("build_input: codebook built for a different array");
    const arma::uword n_beams = ssb.n_codewords();
    for (const auto &rep : reports)
    {
        if (rep.rsrp.n_elem != n_beams)
            throw std::invalid_argument("build_input: report covers a different beam count");
    }

    arma::vec picks(n_beams, arma::fill::zeros);
    arma::vec power(n_beams, arma::fill::zeros);
    bool any = false;
    for (const auto &rep : reports)
    {
        if (!rep.included)
            continue;
        any = true;
        picks(rep.best_beam) += 1.0;
        power(rep.best_beam) += rep.best_rsrp;
    }

    arma::vec power_norm(n_beams, arma::fill::zeros);
    if (any)
    {
        const double lo = power.min();
        const double hi = power.max();
        if (hi > lo)
            power_norm = (power - lo) / (hi - lo);
        else
            power_norm.fill(1.0);
    }

    const arma::uword rows = grids.ax.n_cols + 2;
    const arma::uword cols = grids.ay.n_cols + 2;
    arma::cube out(rows, cols, 2 * n_beams);
    for (arma::uword i = 0; i < n_beams; ++i)
    {
        const arma::cx_mat img = to_beamspace(ssb.w.col(i), geom, grids);
        out.slice(2 * i).fill(picks(i));
        out.slice(2 * i + 1).fill(power_norm(i));
        out.slice(2 * i)(arma::span(1, rows - 2), arma::span(1, cols - 2)) = arma::real(img);
        out.slice(2 * i + 1)(arma::span(1, rows - 2), arma::span(1, cols - 2)) = arma::imag(img);
    }
    return out;
}

} // namespace beamsim
