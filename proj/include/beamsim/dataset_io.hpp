// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/channel.hpp"

#include <iosfwd>
#include <string>

namespace beamsim
{

// All files share one container layout: a 6-byte magic, a little-endian
// uint64 header length, a JSON header, then raw little-endian float64
// payload (complex data interleaved re, im). Channel files use magic
// "BSIM1\n", training sets "BSDS1\n", model checkpoints "BSCK1\n".

void write_blob_header(std::ostream &os, const char magic[6], const nlohmann::json &header);
nlohmann::json read_blob_header(std::istream &is, const char magic[6]);

void write_doubles(std::ostream &os, const double *p, std::size_t n);
void read_doubles(std::istream &is, double *p, std::size_t n);
void write_complex(std::ostream &os, const cxd *p, std::size_t n);
void read_complex(std::istream &is, cxd *p, std::size_t n);

void save_channels(const std::string &path, const ChannelTensor &h, const ScenarioConfig &cfg);

struct LoadedChannels
{
    ChannelTensor tensor;
    ScenarioConfig config;
    nlohmann::json header;
};
LoadedChannels load_channels(const std::string &path);

// Supervised codebook-learning set; samples are stored as columns.
struct TrainingSet
{
    arma::mat inputs;  // in_dim x n_samples
    arma::mat targets; // out_dim x n_samples
    arma::uword l_max = 0, n_x0 = 0, n_y0 = 0;
    nlohmann::json meta;

    arma::uword n_samples() const { return inputs.n_cols; }
    void validate() const;
};

void save_training_set(const std::string &path, const TrainingSet &ts);
TrainingSet load_training_set(const std::string &path);

} // namespace beamsim
