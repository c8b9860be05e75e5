// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.
//
// Python bindings. Matrices cross the boundary as numpy arrays (complex128
// for complex data); every crossing copies, so Python and C++ never alias
// the same buffer. Configuration objects expose their fields directly plus
// JSON text round trips matching the CLI file format.

#include "beamsim/beamspace.hpp"
#include "beamsim/harness.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstring>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace py = pybind11;
using namespace beamsim;

namespace
{

// ---------- ARRAY CONVERSION ----------

using PyF64 = py::array_t<double, py::array::f_style | py::array::forcecast>;
using PyC128 = py::array_t<std::complex<double>, py::array::f_style | py::array::forcecast>;

// 1-D arrays spell out their stride: the count-only array_t constructor of
// older pybind11 releases leaves the stride at zero, which silently aliases
// every element onto the first.
py::array_t<double> make_array(const arma::vec &v)
{
    py::array_t<double> out({static_cast<py::ssize_t>(v.n_elem)},
                            {static_cast<py::ssize_t>(sizeof(double))});
    if (v.n_elem > 0)
        std::memcpy(out.mutable_data(), v.memptr(), sizeof(double) * v.n_elem);
    return out;
}

py::array_t<std::complex<double>> make_array(const arma::cx_vec &v)
{
    py::array_t<std::complex<double>> out({static_cast<py::ssize_t>(v.n_elem)},
                                          {static_cast<py::ssize_t>(sizeof(std::complex<double>))});
    if (v.n_elem > 0)
        std::memcpy(out.mutable_data(), v.memptr(), sizeof(std::complex<double>) * v.n_elem);
    return out;
}

py::array_t<double> make_array(const arma::mat &m)
{
    const auto r = static_cast<py::ssize_t>(m.n_rows);
    const auto c = static_cast<py::ssize_t>(m.n_cols);
    const auto w = static_cast<py::ssize_t>(sizeof(double));
    py::array_t<double> out({r, c}, {w, w * r});
    if (m.n_elem > 0)
        std::memcpy(out.mutable_data(), m.memptr(), sizeof(double) * m.n_elem);
    return out;
}

py::array_t<std::complex<double>> make_array(const arma::cx_mat &m)
{
    const auto r = static_cast<py::ssize_t>(m.n_rows);
    const auto c = static_cast<py::ssize_t>(m.n_cols);
    const auto w = static_cast<py::ssize_t>(sizeof(std::complex<double>));
    py::array_t<std::complex<double>> out({r, c}, {w, w * r});
    if (m.n_elem > 0)
        std::memcpy(out.mutable_data(), m.memptr(), sizeof(std::complex<double>) * m.n_elem);
    return out;
}

py::array_t<double> make_array(const arma::cube &c)
{
    const auto r = static_cast<py::ssize_t>(c.n_rows);
    const auto co = static_cast<py::ssize_t>(c.n_cols);
    const auto s = static_cast<py::ssize_t>(c.n_slices);
    const auto w = static_cast<py::ssize_t>(sizeof(double));
    py::array_t<double> out({r, co, s}, {w, w * r, w * r * co});
    if (c.n_elem > 0)
        std::memcpy(out.mutable_data(), c.memptr(), sizeof(double) * c.n_elem);
    return out;
}

py::array_t<std::uint64_t> make_array(const arma::uvec &v)
{
    py::array_t<std::uint64_t> out({static_cast<py::ssize_t>(v.n_elem)},
                                   {static_cast<py::ssize_t>(sizeof(std::uint64_t))});
    auto a = out.mutable_unchecked<1>();
    for (arma::uword i = 0; i < v.n_elem; ++i)
        a(static_cast<py::ssize_t>(i)) = static_cast<std::uint64_t>(v(i));
    return out;
}

py::array_t<std::uint64_t> make_array(const arma::umat &m)
{
    py::array_t<std::uint64_t> out(
        {static_cast<py::ssize_t>(m.n_rows), static_cast<py::ssize_t>(m.n_cols)});
    auto a = out.mutable_unchecked<2>();
    for (arma::uword j = 0; j < m.n_cols; ++j)
        for (arma::uword i = 0; i < m.n_rows; ++i)
            a(static_cast<py::ssize_t>(i), static_cast<py::ssize_t>(j)) =
                static_cast<std::uint64_t>(m(i, j));
    return out;
}

py::list make_list(const std::vector<arma::cx_mat> &v)
{
    py::list out;
    for (const auto &m : v)
        out.append(make_array(m));
    return out;
}

arma::vec as_vec(const PyF64 &a)
{
    if (a.ndim() != 1)
        throw std::invalid_argument("expected a 1-D real array");
    return arma::vec(a.data(), static_cast<arma::uword>(a.shape(0)));
}

arma::cx_vec as_cx_vec(const PyC128 &a)
{
    if (a.ndim() != 1)
        throw std::invalid_argument("expected a 1-D complex array");
    return arma::cx_vec(a.data(), static_cast<arma::uword>(a.shape(0)));
}

arma::mat as_mat(const PyF64 &a)
{
    if (a.ndim() != 2)
        throw std::invalid_argument("expected a 2-D real array");
    return arma::mat(a.data(), static_cast<arma::uword>(a.shape(0)),
                     static_cast<arma::uword>(a.shape(1)));
}

arma::cx_mat as_cx_mat(const PyC128 &a)
{
    if (a.ndim() != 2)
        throw std::invalid_argument("expected a 2-D complex array");
    return arma::cx_mat(a.data(), static_cast<arma::uword>(a.shape(0)),
                        static_cast<arma::uword>(a.shape(1)));
}

arma::cube as_cube(const PyF64 &a)
{
    if (a.ndim() != 3)
        throw std::invalid_argument("expected a 3-D real array");
    return arma::cube(a.data(), static_cast<arma::uword>(a.shape(0)),
                      static_cast<arma::uword>(a.shape(1)), static_cast<arma::uword>(a.shape(2)));
}

std::vector<arma::cx_mat> as_cx_mats(const std::vector<PyC128> &v)
{
    std::vector<arma::cx_mat> out;
    out.reserve(v.size());
    for (const auto &a : v)
        out.push_back(as_cx_mat(a));
    return out;
}

// ---------- JSON TEXT HELPERS ----------

// Malformed configuration text is a caller error, so parse failures surface
// as ValueError rather than RuntimeError.
template <typename T> T config_from_text(const std::string &text)
{
    try
    {
        return T::from_json(nlohmann::json::parse(text));
    }
    catch (const nlohmann::json::exception &e)
    {
        throw std::invalid_argument(e.what());
    }
}

} // namespace

// ---------- MODULE ----------

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Link-level beam management and CSI feedback simulation";
    m.attr("__version__") = "0.1.0";

    // ---------- GEOMETRY AND CONFIGURATION ----------

    py::class_<ArrayGeometry>(m, "ArrayGeometry")
        .def(py::init<>())
        .def(py::init([](arma::uword n_x, arma::uword n_y, double spacing_h, double spacing_v) {
                 ArrayGeometry g{n_x, n_y, spacing_h, spacing_v};
                 g.validate();
                 return g;
             }),
             py::arg("n_x"), py::arg("n_y"), py::arg("spacing_h") = 0.5, py::arg("spacing_v") = 0.5)
        .def_readwrite("n_x", &ArrayGeometry::n_x)
        .def_readwrite("n_y", &ArrayGeometry::n_y)
        .def_readwrite("spacing_h", &ArrayGeometry::spacing_h)
        .def_readwrite("spacing_v", &ArrayGeometry::spacing_v)
        .def("size", &ArrayGeometry::size)
        .def("validate", &ArrayGeometry::validate)
        .def("__repr__", [](const ArrayGeometry &g) {
            return "ArrayGeometry(" + std::to_string(g.n_x) + "x" + std::to_string(g.n_y) + ")";
        });

    py::class_<ScenarioConfig>(m, "ScenarioConfig")
        .def(py::init<>())
        .def_readwrite("tx_array", &ScenarioConfig::tx_array)
        .def_readwrite("n_rx", &ScenarioConfig::n_rx)
        .def_readwrite("rx_spacing", &ScenarioConfig::rx_spacing)
        .def_readwrite("n_users", &ScenarioConfig::n_users)
        .def_readwrite("n_slots", &ScenarioConfig::n_slots)
        .def_readwrite("n_subcarriers", &ScenarioConfig::n_subcarriers)
        .def_readwrite("carrier_hz", &ScenarioConfig::carrier_hz)
        .def_readwrite("subcarrier_hz", &ScenarioConfig::subcarrier_hz)
        .def_readwrite("slot_s", &ScenarioConfig::slot_s)
        .def_readwrite("n_hotspots", &ScenarioConfig::n_hotspots)
        .def_readwrite("hotspot_spread_deg", &ScenarioConfig::hotspot_spread_deg)
        .def_readwrite("vehicular_fraction", &ScenarioConfig::vehicular_fraction)
        .def_readwrite("vehicular_speed_mean", &ScenarioConfig::vehicular_speed_mean)
        .def_readwrite("vehicular_speed_std", &ScenarioConfig::vehicular_speed_std)
        .def_readwrite("pedestrian_speed_max", &ScenarioConfig::pedestrian_speed_max)
        .def_readwrite("n_clusters", &ScenarioConfig::n_clusters)
        .def_readwrite("paths_per_cluster", &ScenarioConfig::paths_per_cluster)
        .def_readwrite("cluster_angle_spread_deg", &ScenarioConfig::cluster_angle_spread_deg)
        .def_readwrite("path_angle_spread_deg", &ScenarioConfig::path_angle_spread_deg)
        .def_readwrite("cluster_power_std_db", &ScenarioConfig::cluster_power_std_db)
        .def_readwrite("delay_spread_s", &ScenarioConfig::delay_spread_s)
        .def_readwrite("elevation_center_deg", &ScenarioConfig::elevation_center_deg)
        .def_readwrite("elevation_spread_deg", &ScenarioConfig::elevation_spread_deg)
        .def_readwrite("pathloss_db_min", &ScenarioConfig::pathloss_db_min)
        .def_readwrite("pathloss_db_max", &ScenarioConfig::pathloss_db_max)
        .def_readwrite("tx_power", &ScenarioConfig::tx_power)
        .def_readwrite("noise_power", &ScenarioConfig::noise_power)
        .def_readwrite("snr_cap_db", &ScenarioConfig::snr_cap_db)
        .def_readwrite("ssb_band_fraction", &ScenarioConfig::ssb_band_fraction)
        .def_readwrite("include_prob", &ScenarioConfig::include_prob)
        .def_readwrite("frame_slots", &ScenarioConfig::frame_slots)
        .def_readwrite("signaling_overhead", &ScenarioConfig::signaling_overhead)
        .def_readwrite("mcs0_bits_per_re", &ScenarioConfig::mcs0_bits_per_re)
        .def_readwrite("rb_re", &ScenarioConfig::rb_re)
        .def_readwrite("site_seed", &ScenarioConfig::site_seed)
        .def_readwrite("rng_seed", &ScenarioConfig::rng_seed)
        .def("validate", &ScenarioConfig::validate)
        .def("n_tx", &ScenarioConfig::n_tx)
        .def("ssb_band_size", &ScenarioConfig::ssb_band_size)
        .def("ssb_band_start", &ScenarioConfig::ssb_band_start)
        .def("config_hash", &ScenarioConfig::config_hash)
        .def("to_json", [](const ScenarioConfig &c) { return c.to_json().dump(); })
        .def_static("from_json", &config_from_text<ScenarioConfig>, py::arg("text"));

    py::class_<CsiRsConfig>(m, "CsiRsConfig")
        .def(py::init<>())
        .def_readwrite("nrb", &CsiRsConfig::nrb)
        .def_readwrite("bwp", &CsiRsConfig::bwp)
        .def_readwrite("pilots_per_rb", &CsiRsConfig::pilots_per_rb)
        .def_readwrite("zp_per_rb", &CsiRsConfig::zp_per_rb)
        .def("validate", &CsiRsConfig::validate);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init<>())
        .def_readwrite("scenario", &ExperimentConfig::scenario)
        .def_readwrite("csirs", &ExperimentConfig::csirs)
        .def_readwrite("l_max", &ExperimentConfig::l_max)
        .def_readwrite("p_csi", &ExperimentConfig::p_csi)
        .def_readwrite("l_csi", &ExperimentConfig::l_csi)
        .def_readwrite("o_h", &ExperimentConfig::o_h)
        .def_readwrite("o_v", &ExperimentConfig::o_v)
        .def_readwrite("drops", &ExperimentConfig::drops)
        .def_readwrite("user_min", &ExperimentConfig::user_min)
        .def_readwrite("user_max", &ExperimentConfig::user_max)
        .def_readwrite("max_rank", &ExperimentConfig::max_rank)
        .def_readwrite("sched_cap", &ExperimentConfig::sched_cap)
        .def_readwrite("grid_x", &ExperimentConfig::grid_x)
        .def_readwrite("grid_y", &ExperimentConfig::grid_y)
        .def_readwrite("output_dir", &ExperimentConfig::output_dir)
        .def_readwrite("seed", &ExperimentConfig::seed)
        .def("validate", &ExperimentConfig::validate)
        .def("to_json", [](const ExperimentConfig &c) { return c.to_json().dump(); })
        .def_static("from_json", &config_from_text<ExperimentConfig>, py::arg("text"));

    // ---------- CHANNELS ----------

    py::class_<ChannelTensor>(m, "ChannelTensor")
        .def_readonly("n_users", &ChannelTensor::n_users)
        .def_readonly("n_slots", &ChannelTensor::n_slots)
        .def_readonly("n_subcarriers", &ChannelTensor::n_subcarriers)
        .def_readonly("n_rx", &ChannelTensor::n_rx)
        .def_readonly("n_tx", &ChannelTensor::n_tx)
        .def("at",
             [](const ChannelTensor &h, arma::uword user, arma::uword slot, arma::uword k) {
                 return make_array(h.at(user, slot, k));
             },
             py::arg("user"), py::arg("slot"), py::arg("subcarrier"))
        .def("select_users",
             [](const ChannelTensor &h, const std::vector<arma::uword> &users) {
                 return h.select_users(arma::uvec(users));
             },
             py::arg("users"))
        .def("validate", &ChannelTensor::validate);

    m.def("generate_channels", &generate_channels, py::arg("config"));
    m.def("mean_entry_power", &mean_entry_power, py::arg("tensor"), py::arg("user"));
    m.def("save_channels", &save_channels, py::arg("path"), py::arg("tensor"), py::arg("config"));

    py::class_<LoadedChannels>(m, "LoadedChannels")
        .def_readonly("tensor", &LoadedChannels::tensor)
        .def_readonly("config", &LoadedChannels::config)
        .def_property_readonly("header",
                               [](const LoadedChannels &l) { return l.header.dump(); });
    m.def("load_channels", &load_channels, py::arg("path"));

    // ---------- CODEBOOKS ----------

    py::enum_<CodebookKind>(m, "CodebookKind")
        .value("ssb", CodebookKind::kSsb)
        .value("csi_rs", CodebookKind::kCsiRs)
        .value("feedback", CodebookKind::kFeedback);

    py::class_<Codebook>(m, "Codebook")
        .def_readonly("kind", &Codebook::kind)
        .def_property_readonly("w", [](const Codebook &c) { return make_array(c.w); })
        .def_readonly("n_x", &Codebook::n_x)
        .def_readonly("n_y", &Codebook::n_y)
        .def_readonly("o_h", &Codebook::o_h)
        .def_readonly("o_v", &Codebook::o_v)
        .def_property_readonly("fb_cols", [](const Codebook &c) { return make_array(c.fb_cols); })
        .def("n_ports", &Codebook::n_ports)
        .def("n_codewords", &Codebook::n_codewords)
        .def("validate", &Codebook::validate);

    m.def("dft_matrix", [](arma::uword n) { return make_array(dft_matrix(n)); }, py::arg("n"));
    m.def("oversampled_dft",
          [](arma::uword n, arma::uword o) { return make_array(oversampled_dft(n, o)); },
          py::arg("n"), py::arg("o"));
    m.def("feedback_codebook", &feedback_codebook, py::arg("geom"), py::arg("o_h"),
          py::arg("o_v"));
    m.def("orthogonal_subset", &orthogonal_subset, py::arg("fb"), py::arg("q0x"), py::arg("q0y"));
    m.def("oversampling_of", &oversampling_of, py::arg("fb"), py::arg("flat_col"));
    m.def("global_column", &global_column, py::arg("fb"), py::arg("q0x"), py::arg("q0y"),
          py::arg("ortho_idx"));
    m.def("rsv_codebook", &rsv_codebook, py::arg("tensor"), py::arg("slot"), py::arg("l_max"),
          py::arg("band_start"), py::arg("band_size"));
    m.def("random_dft_ssb", &random_dft_ssb, py::arg("fb"), py::arg("l_max"), py::arg("seed"));
    m.def("single_antenna", &single_antenna, py::arg("n_ports"));
    m.def("ula_response",
          [](arma::uword n, double spacing, double theta) {
              return make_array(ula_response(n, spacing, theta));
          },
          py::arg("n"), py::arg("spacing"), py::arg("theta"));
    m.def("array_response",
          [](const ArrayGeometry &geom, double azimuth, double elevation) {
              return make_array(array_response(geom, azimuth, elevation));
          },
          py::arg("geom"), py::arg("azimuth"), py::arg("elevation"));

    // ---------- BEAM TRAINING ----------

    py::class_<SsbReport>(m, "SsbReport")
        .def(py::init<>())
        .def_readwrite("best_beam", &SsbReport::best_beam)
        .def_readwrite("best_rsrp", &SsbReport::best_rsrp)
        .def_property("rsrp", [](const SsbReport &r) { return make_array(r.rsrp); },
                      [](SsbReport &r, const PyF64 &v) { r.rsrp = as_vec(v); })
        .def_readwrite("included", &SsbReport::included);

    m.def("ssb_round", &ssb_round, py::arg("tensor"), py::arg("ssb"), py::arg("config"),
          py::arg("seed"), py::arg("slot0") = 0);
    m.def("rsrp_matrix",
          [](const ChannelTensor &h, const Codebook &ssb, const ScenarioConfig &cfg,
             arma::uword slot) { return make_array(rsrp_matrix(h, ssb, cfg, slot)); },
          py::arg("tensor"), py::arg("ssb"), py::arg("config"), py::arg("slot"));

    py::class_<LsEstimate>(m, "LsEstimate")
        .def_property_readonly("value", [](const LsEstimate &e) { return make_array(e.value); })
        .def_readonly("residual_ms", &LsEstimate::residual_ms);
    m.def("estimate_ls",
          [](const PyC128 &rx, const PyC128 &pilots) {
              return estimate_ls(as_cx_mat(rx), as_cx_mat(pilots));
          },
          py::arg("rx"), py::arg("pilots"));
    m.def("ls_mse_law", &ls_mse_law, py::arg("snr"), py::arg("n_pilots"), py::arg("n_tx"));

    py::class_<CsiMeasurement>(m, "CsiMeasurement")
        .def_readonly("cri", &CsiMeasurement::cri)
        .def_readonly("snr", &CsiMeasurement::snr)
        .def_readonly("noise_est", &CsiMeasurement::noise_est)
        .def_property_readonly("eff_est",
                               [](const CsiMeasurement &c) { return make_list(c.eff_est); });
    m.def("csirs_round", &csirs_round, py::arg("tensor"), py::arg("csirs"), py::arg("config"),
          py::arg("rs"), py::arg("slot"), py::arg("seed"));

    m.def("largest_remainder",
          [](const std::vector<arma::uword> &counts, arma::uword total) {
              return make_array(largest_remainder(arma::uvec(counts), total));
          },
          py::arg("counts"), py::arg("total"));
    m.def("decompose_ssb_to_csirs", &decompose_ssb_to_csirs, py::arg("ssb"), py::arg("fb"),
          py::arg("reports"), py::arg("p_csi"));

    py::class_<ResourceBudget>(m, "ResourceBudget")
        .def_readonly("frame_slots", &ResourceBudget::frame_slots)
        .def_readonly("ssb_symbols", &ResourceBudget::ssb_symbols)
        .def_readonly("csirs_symbols", &ResourceBudget::csirs_symbols)
        .def_readonly("feedback_symbols", &ResourceBudget::feedback_symbols)
        .def_property_readonly("t_bm", [](const ResourceBudget &b) { return make_array(b.t_bm); })
        .def_property_readonly("k_bm", [](const ResourceBudget &b) { return make_array(b.k_bm); })
        .def_readonly("signaling_overhead", &ResourceBudget::signaling_overhead)
        .def("bm_symbols", &ResourceBudget::bm_symbols);
    m.def("budget",
          [](const ScenarioConfig &cfg, arma::uword l_max, arma::uword p_csi,
             const CsiRsConfig &rs, const std::vector<arma::uword> &report_bits) {
              return budget(cfg, l_max, p_csi, rs, arma::uvec(report_bits));
          },
          py::arg("config"), py::arg("l_max"), py::arg("p_csi"), py::arg("rs"),
          py::arg("report_bits"));

    // ---------- CSI FEEDBACK ----------

    py::class_<CsiReport>(m, "CsiReport")
        .def_readonly("q0x", &CsiReport::q0x)
        .def_readonly("q0y", &CsiReport::q0y)
        .def_property_readonly("q", [](const CsiReport &r) { return make_array(r.q); })
        .def_property_readonly("a", [](const CsiReport &r) { return make_array(r.a); })
        .def_readonly("rank", &CsiReport::rank)
        .def_readonly("cri", &CsiReport::cri)
        .def_readonly("snr", &CsiReport::snr);

    m.def("quantize_type2",
          [](const PyC128 &eff, const Codebook &fb, arma::uword l_csi) {
              return quantize_type2(as_cx_mat(eff), fb, l_csi);
          },
          py::arg("eff"), py::arg("fb"), py::arg("l_csi"));

    py::class_<BitBreakdown>(m, "BitBreakdown")
        .def_readonly("combination", &BitBreakdown::combination)
        .def_readonly("oversampling", &BitBreakdown::oversampling)
        .def_readonly("amplitude", &BitBreakdown::amplitude)
        .def_readonly("phase", &BitBreakdown::phase)
        .def_readonly("cri", &BitBreakdown::cri)
        .def_readonly("rank", &BitBreakdown::rank)
        .def_readonly("cqi", &BitBreakdown::cqi)
        .def("total", &BitBreakdown::total);
    m.def("count_bits", &count_bits, py::arg("fb"), py::arg("l_csi"), py::arg("n_rx"),
          py::arg("bwp"), py::arg("p_csi"), py::arg("max_rank") = 2);
    m.def("nchoosek", &nchoosek, py::arg("n"), py::arg("k"));
    m.def("ceil_log2", &ceil_log2, py::arg("v"));

    m.def("reconstruct_pmi",
          [](const CsiReport &rep, const Codebook &fb) { return make_array(reconstruct_pmi(rep, fb)); },
          py::arg("report"), py::arg("fb"));
    m.def("reconstruct_channel",
          [](const PyC128 &beam_rows, const Codebook &csirs) {
              return make_array(reconstruct_channel(as_cx_mat(beam_rows), csirs));
          },
          py::arg("beam_rows"), py::arg("csirs"));

    // ---------- DOWNLINK ----------

    m.def("rzf_precode",
          [](const std::vector<PyC128> &hhat, const std::vector<arma::uword> &ranks,
             double noise_scale) { return make_list(rzf_precode(as_cx_mats(hhat), ranks, noise_scale)); },
          py::arg("hhat"), py::arg("ranks"), py::arg("noise_scale"));
    m.def("lmmse_sinr",
          [](const PyC128 &h, const std::vector<PyC128> &precoders, arma::uword user,
             double noise_scale) {
              return make_array(lmmse_sinr(as_cx_mat(h), as_cx_mats(precoders), user, noise_scale));
          },
          py::arg("h"), py::arg("precoders"), py::arg("user"), py::arg("noise_scale"));
    m.def("sum_se_at",
          [](const std::vector<PyC128> &h_users, const std::vector<PyC128> &precoders,
             double noise_scale) {
              return sum_se_at(as_cx_mats(h_users), as_cx_mats(precoders), noise_scale);
          },
          py::arg("h_users"), py::arg("precoders"), py::arg("noise_scale"));

    py::class_<ScheduleResult>(m, "ScheduleResult")
        .def_readonly("ranks", &ScheduleResult::ranks)
        .def_property_readonly("precoders",
                               [](const ScheduleResult &s) { return make_list(s.precoders); })
        .def_readonly("objective", &ScheduleResult::objective);
    m.def("schedule_users",
          [](const std::vector<PyC128> &hhat, double noise_scale, arma::uword max_rank,
             arma::uword exhaustive_cap) {
              return schedule_users(as_cx_mats(hhat), noise_scale, max_rank, exhaustive_cap);
          },
          py::arg("hhat"), py::arg("noise_scale"), py::arg("max_rank") = 2,
          py::arg("exhaustive_cap") = 8);

    m.def("effective_sum_se",
          [](const ChannelTensor &truth, const std::vector<arma::uword> &users,
             const std::vector<PyC128> &precoders, const ResourceBudget &bud,
             const ScenarioConfig &cfg, arma::uword k_start, arma::uword k_count) {
              return effective_sum_se(truth, users, as_cx_mats(precoders), bud, cfg, k_start,
                                      k_count);
          },
          py::arg("truth"), py::arg("users"), py::arg("precoders"), py::arg("budget"),
          py::arg("config"), py::arg("k_start") = 0, py::arg("k_count") = 0);
    m.def("noise_scale_of", &noise_scale_of, py::arg("config"));

    py::class_<NonPmiSchedule>(m, "NonPmiSchedule")
        .def_readonly("users", &NonPmiSchedule::users)
        .def_property_readonly("precoders",
                               [](const NonPmiSchedule &s) { return make_list(s.precoders); });
    m.def("non_pmi_baseline", &non_pmi_baseline, py::arg("measurements"), py::arg("csirs"),
          py::arg("max_users"));

    // ---------- BEAMSPACE ----------

    py::class_<BeamspaceGrids>(m, "BeamspaceGrids")
        .def_property_readonly("ax", [](const BeamspaceGrids &g) { return make_array(g.ax); })
        .def_property_readonly("ay", [](const BeamspaceGrids &g) { return make_array(g.ay); });
    m.def("beamspace_grids", &beamspace_grids, py::arg("geom"), py::arg("gx"), py::arg("gy"));
    m.def("to_beamspace",
          [](const PyC128 &f, const ArrayGeometry &geom, const BeamspaceGrids &grids) {
              return make_array(to_beamspace(as_cx_vec(f), geom, grids));
          },
          py::arg("f"), py::arg("geom"), py::arg("grids"));
    m.def("from_beamspace",
          [](const PyC128 &image, const ArrayGeometry &geom, const BeamspaceGrids &grids) {
              return make_array(from_beamspace(as_cx_mat(image), geom, grids));
          },
          py::arg("image"), py::arg("geom"), py::arg("grids"));
    m.def("beams_to_cube",
          [](const Codebook &cb, const ArrayGeometry &geom, const BeamspaceGrids &grids) {
              return make_array(beams_to_cube(cb, geom, grids));
          },
          py::arg("cb"), py::arg("geom"), py::arg("grids"));
    m.def("cube_to_beams",
          [](const PyF64 &cube, const ArrayGeometry &geom, const BeamspaceGrids &grids,
             CodebookKind kind) { return cube_to_beams(as_cube(cube), geom, grids, kind); },
          py::arg("cube"), py::arg("geom"), py::arg("grids"), py::arg("kind"));
    m.def("build_input",
          [](const Codebook &ssb, const std::vector<SsbReport> &reports,
             const ArrayGeometry &geom, const BeamspaceGrids &grids) {
              return make_array(build_input(ssb, reports, geom, grids));
          },
          py::arg("ssb"), py::arg("reports"), py::arg("geom"), py::arg("grids"));

    // ---------- TRAINING DATA AND GENERATOR ----------

    py::class_<TrainingSet>(m, "TrainingSet")
        .def(py::init([](const PyF64 &inputs, const PyF64 &targets, arma::uword l_max,
                         arma::uword n_x0, arma::uword n_y0) {
                 TrainingSet ts;
                 ts.inputs = as_mat(inputs);
                 ts.targets = as_mat(targets);
                 ts.l_max = l_max;
                 ts.n_x0 = n_x0;
                 ts.n_y0 = n_y0;
                 ts.validate();
                 return ts;
             }),
             py::arg("inputs"), py::arg("targets"), py::arg("l_max"), py::arg("n_x0"),
             py::arg("n_y0"))
        .def_property_readonly("inputs", [](const TrainingSet &t) { return make_array(t.inputs); })
        .def_property_readonly("targets",
                               [](const TrainingSet &t) { return make_array(t.targets); })
        .def_readonly("l_max", &TrainingSet::l_max)
        .def_readonly("n_x0", &TrainingSet::n_x0)
        .def_readonly("n_y0", &TrainingSet::n_y0)
        .def("n_samples", &TrainingSet::n_samples)
        .def("validate", &TrainingSet::validate);
    m.def("save_training_set", &save_training_set, py::arg("path"), py::arg("ts"));
    m.def("load_training_set", &load_training_set, py::arg("path"));

    py::class_<MlpConfig>(m, "MlpConfig")
        .def(py::init<>())
        .def_readwrite("in_dim", &MlpConfig::in_dim)
        .def_readwrite("out_dim", &MlpConfig::out_dim)
        .def_readwrite("beams", &MlpConfig::beams)
        .def_readwrite("hidden", &MlpConfig::hidden)
        .def_readwrite("dropout", &MlpConfig::dropout)
        .def_readwrite("lr", &MlpConfig::lr)
        .def_readwrite("beta1", &MlpConfig::beta1)
        .def_readwrite("beta2", &MlpConfig::beta2)
        .def_readwrite("adam_eps", &MlpConfig::adam_eps)
        .def_readwrite("epochs", &MlpConfig::epochs)
        .def_readwrite("batch", &MlpConfig::batch)
        .def_readwrite("horizon", &MlpConfig::horizon)
        .def_readwrite("val_fraction", &MlpConfig::val_fraction)
        .def_readwrite("patience", &MlpConfig::patience)
        .def_readwrite("seed", &MlpConfig::seed)
        .def("validate", &MlpConfig::validate)
        .def("to_json", [](const MlpConfig &c) { return c.to_json().dump(); })
        .def_static("from_json", &config_from_text<MlpConfig>, py::arg("text"));

    py::class_<TrainResult>(m, "TrainResult")
        .def_property_readonly("train_loss",
                               [](const TrainResult &r) { return make_array(r.train_loss); })
        .def_property_readonly("val_loss",
                               [](const TrainResult &r) { return make_array(r.val_loss); })
        .def_property_readonly("lr", [](const TrainResult &r) { return make_array(r.lr); })
        .def_property_readonly("step_at",
                               [](const TrainResult &r) { return make_array(r.step_at); })
        .def_readonly("best_epoch", &TrainResult::best_epoch)
        .def_readonly("steps", &TrainResult::steps);

    m.def("cosine_loss",
          [](const PyF64 &pred, const PyF64 &target, arma::uword beams) {
              auto [loss, grad] = cosine_loss(as_mat(pred), as_mat(target), beams);
              return py::make_tuple(loss, make_array(grad));
          },
          py::arg("pred"), py::arg("target"), py::arg("beams"));

    py::class_<Mlp>(m, "Mlp")
        .def(py::init<const MlpConfig &>(), py::arg("config"))
        .def("config", &Mlp::config)
        .def("steps", &Mlp::steps)
        .def("n_layers", &Mlp::n_layers)
        .def("weight",
             [](const Mlp &n, arma::uword layer) { return make_array(n.weight(layer)); },
             py::arg("layer"))
        .def("bias", [](const Mlp &n, arma::uword layer) { return make_array(n.bias(layer)); },
             py::arg("layer"))
        .def("predict", [](const Mlp &n, const PyF64 &x) { return make_array(n.predict(as_mat(x))); },
             py::arg("x"))
        .def("evaluate",
             [](const Mlp &n, const PyF64 &x, const PyF64 &y) {
                 return n.evaluate(as_mat(x), as_mat(y));
             },
             py::arg("x"), py::arg("y"))
        .def("fit", &Mlp::fit, py::arg("ts"))
        .def("fine_tune", &Mlp::fine_tune, py::arg("ts"), py::arg("epochs"), py::arg("lr"),
             py::arg("step_cap") = 0)
        .def("save", &Mlp::save, py::arg("path"))
        .def_static("load", &Mlp::load, py::arg("path"));

    m.def("infer_codebook",
          [](const Mlp &net, const PyF64 &input, const ArrayGeometry &geom,
             const BeamspaceGrids &grids) { return infer_codebook(net, as_cube(input), geom, grids); },
          py::arg("net"), py::arg("input"), py::arg("geom"), py::arg("grids"));

    // ---------- EXPERIMENT HARNESS ----------

    m.def("format_double", &format_double, py::arg("v"));
    m.def("percentile", [](const PyF64 &v, double p) { return percentile(as_vec(v), p); },
          py::arg("values"), py::arg("p"));
    m.def("rsrp_scenario", &rsrp_scenario, py::arg("config"));

    py::class_<SsbExperimentResult>(m, "SsbExperimentResult")
        .def_readonly("kinds", &SsbExperimentResult::kinds)
        .def_property_readonly("samples_dbm", [](const SsbExperimentResult &r) {
            py::dict out;
            for (const auto &[kind, samples] : r.samples_dbm)
                out[py::str(kind)] = make_array(samples);
            return out;
        });
    m.def("run_ssb_experiment",
          [](const ExperimentConfig &cfg, arma::uword eval_drops, const Mlp *net,
             const std::string &csv_path) {
              return run_ssb_experiment(cfg, eval_drops, net, csv_path);
          },
          py::arg("config"), py::arg("eval_drops"), py::arg("net") = nullptr,
          py::arg("csv_path") = std::string());

    m.def("build_dataset", &build_dataset, py::arg("config"), py::arg("n_samples"));
    m.def("default_mlp_config", &default_mlp_config, py::arg("ts"), py::arg("seed"));
    m.def("run_training",
          [](const ExperimentConfig &cfg, const TrainingSet &ts, MlpConfig mlp_cfg,
             const std::string &checkpoint_path, const std::string &history_csv) {
              TrainResult history;
              Mlp net = run_training(cfg, ts, std::move(mlp_cfg), checkpoint_path, history_csv,
                                     &history);
              return py::make_tuple(std::move(net), history);
          },
          py::arg("config"), py::arg("ts"), py::arg("mlp_config"), py::arg("checkpoint_path"),
          py::arg("history_csv"));

    py::class_<SweepPoint>(m, "SweepPoint")
        .def_readonly("value", &SweepPoint::value)
        .def_readonly("pmi", &SweepPoint::pmi)
        .def_readonly("su", &SweepPoint::su)
        .def_readonly("non_pmi", &SweepPoint::non_pmi)
        .def_readonly("bits_pmi", &SweepPoint::bits_pmi)
        .def_readonly("bits_non_pmi", &SweepPoint::bits_non_pmi);
    m.def("run_csirs_sweep",
          [](const ExperimentConfig &cfg, const std::string &axis,
             const std::vector<arma::uword> &values, const std::string &csv_path) {
              SweepAxis ax;
              ax.name = axis;
              ax.values = values;
              return run_csirs_sweep(cfg, ax, csv_path, nullptr);
          },
          py::arg("config"), py::arg("axis"), py::arg("values"),
          py::arg("csv_path") = std::string());

    py::class_<SiteTransferResult>(m, "SiteTransferResult")
        .def_property_readonly("agnostic_delta",
                               [](const SiteTransferResult &r) { return make_array(r.agnostic_delta); })
        .def_property_readonly("tuned_delta",
                               [](const SiteTransferResult &r) { return make_array(r.tuned_delta); })
        .def_readonly("steps_budget", &SiteTransferResult::steps_budget)
        .def_readonly("steps_used", &SiteTransferResult::steps_used);
    m.def("run_site_transfer",
          [](const ExperimentConfig &cfg, std::uint64_t new_site_seed, double budget_fraction,
             const Mlp &net, arma::uword original_steps, arma::uword eval_drops,
             arma::uword tune_samples, const std::string &csv_path) {
              return run_site_transfer(cfg, new_site_seed, budget_fraction, net, original_steps,
                                       eval_drops, tune_samples, csv_path);
          },
          py::arg("config"), py::arg("new_site_seed"), py::arg("budget_fraction"), py::arg("net"),
          py::arg("original_steps"), py::arg("eval_drops"), py::arg("tune_samples"),
          py::arg("csv_path") = std::string());
}
