// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace beamsim
{

namespace
{

void require_little_endian()
{
    static_assert(sizeof(double) == 8);
    if constexpr (std::endian::native != std::endian::little)
        throw std::runtime_error("dataset_io: little-endian host required");
}

} // namespace

void write_blob_header(std::ostream &os, const char magic[6], const nlohmann::json &header)
{
    require_little_endian();
    os.write(magic, 6);
    const std::string s = header.dump();
    const std::uint64_t len = s.size();
    os.write(reinterpret_cast<const char *>(&len), 8);
    os.write(s.data(), std::streamsize(s.size()));
    if (!os)
        throw std::runtime_error("dataset_io: header write failed");
}

nlohmann::json read_blob_header(std::istream &is, const char magic[6])
{
    require_little_endian();
    char m[6];
    is.read(m, 6);
    if (!is || std::memcmp(m, magic, 6) != 0)
        throw std::runtime_error("dataset_io: bad magic");
    std::uint64_t len = 0;
    is.read(reinterpret_cast<char *>(&len), 8);
    if (!is || len > (1ULL << 30))
        throw std::runtime_error("dataset_io: bad header length");
    std::string s(len, '\0');
    is.read(s.data(), std::streamsize(len));
    if (!is)
        throw std::runtime_error("dataset_io: truncated header");
    return nlohmann::json::parse(s);
}

void write_doubles(std::ostream &os, const double *p, std::size_t n)
{
    os.write(reinterpret_cast<const char *>(p), std::streamsize(n * sizeof(double)));
    if (!os)
        throw std::runtime_error("dataset_io: payload write failed");
}

void read_doubles(std::istream &is, double *p, std::size_t n)
{
    is.read(reinterpret_cast<char *>(p), std::streamsize(n * sizeof(double)));
    if (!is)
        throw std::runtime_error("dataset_io: truncated payload");
}

void write_complex(std::ostream &os, const cxd *p, std::size_t n)
{
    write_doubles(os, reinterpret_cast<const double *>(p), 2 * n);
}

void read_complex(std::istream &is, cxd *p, std::size_t n)
{
    read_doubles(is, reinterpret_cast<double *>(p), 2 * n);
}

static const char kChannelsMagic[7] = "BSIM1\n";
static const char kTrainingMagic[7] = "BSDS1\n";

void save_channels(const std::string &path, const ChannelTensor &h, const ScenarioConfig &cfg)
{
    h.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_channels: cannot open " + path);

    nlohmann::json header;
    header["format_version"] = 1;
    header["kind"] = "channels";
    header["shape"] = {{"n_users", h.n_users}, {"n_slots", h.n_slots},
                       {"n_subcarriers", h.n_subcarriers}, {"n_rx", h.n_rx}, {"n_tx", h.n_tx}};
    header["config"] = cfg.to_json();
    header["config_hash"] = cfg.config_hash();
    write_blob_header(os, kChannelsMagic, header);

    for (const auto &cube : h.h)
        write_complex(os, cube.memptr(), cube.n_elem);
}

LoadedChannels load_channels(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_channels: cannot open " + path);

    LoadedChannels out;
    out.header = read_blob_header(is, kChannelsMagic);
    if (out.header.value("kind", "") != std::string("channels"))
        throw std::runtime_error("load_channels: wrong file kind");
    out.config = ScenarioConfig::from_json(out.header.at("config"));
    if (out.header.value("config_hash", std::uint64_t(0)) != out.config.config_hash())
        throw std::runtime_error("load_channels: config hash mismatch");

    const auto &sh = out.header.at("shape");
    ChannelTensor &h = out.tensor;
    h.n_users = sh.at("n_users").get<arma::uword>();
    h.n_slots = sh.at("n_slots").get<arma::uword>();
    h.n_subcarriers = sh.at("n_subcarriers").get<arma::uword>();
    h.n_rx = sh.at("n_rx").get<arma::uword>();
    h.n_tx = sh.at("n_tx").get<arma::uword>();
    h.h.resize(h.n_users);
    for (auto &cube : h.h)
    {
        cube.set_size(h.n_rx, h.n_tx, h.n_slots * h.n_subcarriers);
        read_complex(is, cube.memptr(), cube.n_elem);
    }
    h.validate();
    return out;
}

void TrainingSet::validate() const
{
    if (inputs.n_cols != targets.n_cols)
        throw std::invalid_argument("TrainingSet: sample count mismatch");
    if (l_max == 0 || n_x0 == 0 || n_y0 == 0)
        throw std::invalid_argument("TrainingSet: shape metadata missing");
    if (inputs.n_rows != 2 * l_max * (n_x0 + 2) * (n_y0 + 2))
        throw std::invalid_argument("TrainingSet: input dimension mismatch");
    if (targets.n_rows != 2 * l_max * n_x0 * n_y0)
        throw std::invalid_argument("TrainingSet: target dimension mismatch");
}

void save_training_set(const std::string &path, const TrainingSet &ts)
{
    ts.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("save_training_set: cannot open " + path);

    nlohmann::json header;
    header["format_version"] = 1;
    header["kind"] = "training_set";
    header["l_max"] = ts.l_max;
    header["n_x0"] = ts.n_x0;
    header["n_y0"] = ts.n_y0;
    header["n_samples"] = ts.n_samples();
    header["meta"] = ts.meta;
    write_blob_header(os, kTrainingMagic, header);
    write_doubles(os, ts.inputs.memptr(), ts.inputs.n_elem);
    write_doubles(os, ts.targets.memptr(), ts.targets.n_elem);
}

TrainingSet load_training_set(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("load_training_set: cannot open " + path);

    const nlohmann::json header = read_blob_header(is, kTrainingMagic);
    if (header.value("kind", "") != std::string("training_set"))
        throw std::runtime_error("load_training_set: wrong file kind");

    TrainingSet ts;
    ts.l_max = header.at("l_max").get<arma::uword>();
    ts.n_x0 = header.at("n_x0").get<arma::uword>();
    ts.n_y0 = header.at("n_y0").get<arma::uword>();
    ts.meta = header.value("meta", nlohmann::json::object());
    const arma::uword n = header.at("n_samples").get<arma::uword>();
    ts.inputs.set_size(2 * ts.l_max * (ts.n_x0 + 2) * (ts.n_y0 + 2), n);
    ts.targets.set_size(2 * ts.l_max * ts.n_x0 * ts.n_y0, n);
    read_doubles(is, ts.inputs.memptr(), ts.inputs.n_elem);
    read_doubles(is, ts.targets.memptr(), ts.targets.n_elem);
    ts.validate();
    return ts;
}

} // namespace beamsim
