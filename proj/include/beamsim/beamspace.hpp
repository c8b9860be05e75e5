// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/beam_training.hpp"
#include "beamsim/codebook.hpp"

namespace beamsim
{

// Steering dictionaries over uniform grids in the direction cosines,
// c_g = -1 + 2 g / G for g = 0..G-1 per axis. With half-wavelength spacing
// and G equal to the axis length the dictionary is unitary, making the
// beamspace map exactly invertible.
struct BeamspaceGrids
{
    arma::cx_mat ax; // n_x x gx
    arma::cx_mat ay; // n_y x gy
};

BeamspaceGrids beamspace_grids(const ArrayGeometry &geom, arma::uword gx, arma::uword gy);

// Angular-domain image of one port-domain beam: reshape the beam onto the
// planar array and project both axes onto the grids.
arma::cx_mat to_beamspace(const arma::cx_vec &f, const ArrayGeometry &geom,
                          const BeamspaceGrids &grids);

// Invert the projection (least squares on both axes) and restore the
// codeword power convention ||f||^2 = n_ports.
arma::cx_vec from_beamspace(const arma::cx_mat &image, const ArrayGeometry &geom,
                            const BeamspaceGrids &grids);

// Stack a codebook as a real cube with two slices per beam (real then
// imaginary part of the beamspace image), in codeword order.
arma::cube beams_to_cube(const Codebook &cb, const ArrayGeometry &geom,
                         const BeamspaceGrids &grids);

// Rebuild a codebook from such a cube; slice pairs become codewords.
Codebook cube_to_beams(const arma::cube &cube, const ArrayGeometry &geom,
                       const BeamspaceGrids &grids, CodebookKind kind);

// Network input for one training round: the broadcast codebook rendered as a
// cube with a one-pixel frame around each slice. For beam i, the frame of
// slice 2i carries the number of users that picked the beam as their best,
// and the frame of slice 2i+1 carries that beam's total reported power,
// min-max normalized across beams (1 everywhere if the spread is degenerate,
// 0 if nobody reported).
arma::cube build_input(const Codebook &ssb, const std::vector<SsbReport> &reports,
                       const ArrayGeometry &geom, const BeamspaceGrids &grids);

} // namespace beamsim
