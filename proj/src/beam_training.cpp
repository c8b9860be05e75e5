// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/beam_training.hpp"

#include <algorithm>
#include <numeric>

namespace beamsim
{

// ---------- SYNCHRONIZATION BEAM SWEEP ----------

std::vector<SsbReport> ssb_round(const ChannelTensor &h, const Codebook &ssb,
                                 const ScenarioConfig &cfg, std::uint64_t seed,
                                 arma::uword slot0)
{
    h.validate();
    ssb.validate();
    if (ssb.n_ports() != h.n_tx)
        throw std::invalid_argument("ssb_round: codebook/channel port mismatch");
    if (slot0 >= h.n_slots)
        throw std::invalid_argument("ssb_round: slot0 out of range");

    const arma::uword n_beams = ssb.n_codewords();
    const arma::uword b0 = cfg.ssb_band_start(), bs = cfg.ssb_band_size();
    if (b0 + bs > h.n_subcarriers)
        throw std::invalid_argument("ssb_round: synchronization band exceeds channel bandwidth");
    const double amp = std::sqrt(cfg.tx_power / double(h.n_subcarriers * h.n_tx));
    const double nstd = std::sqrt(cfg.noise_power / 2.0);

    Rng root(seed);
    std::vector<SsbReport> reports(h.n_users);
    for (arma::uword u = 0; u < h.n_users; u++)
    {
        SsbReport &rep = reports[u];
        rep.rsrp.zeros(n_beams);
        Rng rng_u = root.fork(u);
        rep.included = rng_u.uniform() < cfg.include_prob;

        for (arma::uword i = 0; i < n_beams; i++)
        {
            const arma::uword t = (slot0 + i) % h.n_slots;
            Rng rng_b = rng_u.fork(i + 1);
            arma::vec acc(h.n_rx, arma::fill::zeros);
            for (arma::uword k = b0; k < b0 + bs; k++)
            {
                arma::cx_vec y = amp * (h.at(u, t, k) * ssb.w.col(i));
                for (arma::uword r = 0; r < h.n_rx; r++)
                {
                    y[r] += cxd(nstd * rng_b.gaussian(), nstd * rng_b.gaussian());
                    acc[r] += std::norm(y[r]);
                }
            }
            rep.rsrp[i] = acc.max();
        }
        rep.best_beam = rep.rsrp.index_max();
        rep.best_rsrp = rep.rsrp[rep.best_beam];
    }
    return reports;
}

arma::mat rsrp_matrix(const ChannelTensor &h, const Codebook &ssb, const ScenarioConfig &cfg,
                      arma::uword slot)
{
    h.validate();
    ssb.validate();
    if (ssb.n_ports() != h.n_tx)
        throw std::invalid_argument("rsrp_matrix: codebook/channel port mismatch");
    if (slot >= h.n_slots)
        throw std::invalid_argument("rsrp_matrix: slot out of range");

    const arma::uword b0 = cfg.ssb_band_start(), bs = cfg.ssb_band_size();
    const double scale = cfg.tx_power / double(h.n_subcarriers * h.n_tx);
    arma::mat out(h.n_users, ssb.n_codewords());
    for (arma::uword u = 0; u < h.n_users; u++)
        for (arma::uword i = 0; i < ssb.n_codewords(); i++)
        {
            arma::vec acc(h.n_rx, arma::fill::zeros);
            for (arma::uword k = b0; k < b0 + bs; k++)
            {
                const arma::cx_vec y = h.at(u, slot, k) * ssb.w.col(i);
                for (arma::uword r = 0; r < h.n_rx; r++)
                    acc[r] += std::norm(y[r]);
            }
            out(u, i) = scale * acc.max();
        }
    return out;
}

// ---------- LEAST-SQUARES CHANNEL ESTIMATION ----------

LsEstimate estimate_ls(const arma::cx_mat &rx, const arma::cx_mat &pilots)
{
    if (rx.n_rows != pilots.n_rows)
        throw std::invalid_argument("estimate_ls: observation/pilot row mismatch");
    if (pilots.n_rows < pilots.n_cols)
        throw std::invalid_argument("estimate_ls: underdetermined pilot matrix");
    if (arma::rank(pilots) < pilots.n_cols)
        throw std::invalid_argument("estimate_ls: pilot matrix is rank deficient");

    LsEstimate est;
    if (!arma::solve(est.value, pilots, rx))
        throw std::runtime_error("estimate_ls: least-squares solve failed");
    const arma::cx_mat res = rx - pilots * est.value;
    est.residual_ms = std::pow(arma::norm(res, "fro"), 2) / double(rx.n_elem);
    return est;
}

double ls_mse_law(double snr, double n_pilots, double n_tx)
{
    if (!(snr > 0.0) || !(n_pilots > 0.0) || !(n_tx > 0.0))
        throw std::invalid_argument("ls_mse_law: arguments must be positive");
    return 1.0 / ((n_pilots / n_tx) * snr);
}

// ---------- REFINEMENT ROUND ----------

void CsiRsConfig::validate() const
{
    if (nrb == 0 || bwp == 0 || pilots_per_rb == 0)
        throw std::invalid_argument("CsiRsConfig: nrb, bwp and pilots_per_rb must be positive");
}

std::vector<CsiMeasurement> csirs_round(const ChannelTensor &h, const Codebook &csirs,
                                        const ScenarioConfig &cfg, const CsiRsConfig &rs,
                                        arma::uword slot, std::uint64_t seed)
{
    h.validate();
    csirs.validate();
    rs.validate();
    if (csirs.n_ports() != h.n_tx)
        throw std::invalid_argument("csirs_round: codebook/channel port mismatch");
    if (slot >= h.n_slots)
        throw std::invalid_argument("csirs_round: slot out of range");
    if (h.n_subcarriers % rs.bwp != 0)
        throw std::invalid_argument("csirs_round: subcarriers not divisible by bandwidth parts");

    const arma::uword p_csi = csirs.n_codewords();
    const arma::uword band = h.n_subcarriers / rs.bwp;
    const arma::uword n_p = rs.nrb * rs.pilots_per_rb;
    const arma::uword n_zp = rs.nrb * rs.zp_per_rb * rs.bwp;
    const double amp = std::sqrt(cfg.tx_power / double(h.n_subcarriers * h.n_tx));
    const double nstd = std::sqrt(cfg.noise_power / 2.0);
    const double cap = db_to_linear(cfg.snr_cap_db);

    Rng root(seed);
    std::vector<CsiMeasurement> out(h.n_users);
    const arma::cx_mat pilot_col(n_p, 1, arma::fill::value(cxd(amp, 0.0)));

    for (arma::uword u = 0; u < h.n_users; u++)
    {
        Rng rng_u = root.fork(u);
        CsiMeasurement &m = out[u];
        m.eff_est.assign(rs.bwp, arma::cx_mat(h.n_rx, p_csi, arma::fill::zeros));

        // Noise estimate from zero-power resources (pure noise draws).
        if (n_zp > 0 && cfg.noise_power > 0.0)
        {
            double acc = 0.0;
            for (arma::uword z = 0; z < n_zp; z++)
                for (arma::uword r = 0; r < h.n_rx; r++)
                    acc += std::norm(cxd(nstd * rng_u.gaussian(), nstd * rng_u.gaussian()));
            m.noise_est = acc / double(n_zp);
        }

        arma::vec score(p_csi, arma::fill::zeros);
        for (arma::uword b = 0; b < rs.bwp; b++)
        {
            const arma::uword k0 = b * band;
            for (arma::uword c = 0; c < p_csi; c++)
            {
                arma::cx_mat rx(n_p, h.n_rx);
                for (arma::uword p = 0; p < n_p; p++)
                {
                    const arma::uword k = k0 + (2 * p + 1) * band / (2 * n_p);
                    arma::cx_vec y = amp * (h.at(u, slot, k) * csirs.w.col(c));
                    for (arma::uword r = 0; r < h.n_rx; r++)
                        rx(p, r) = y[r] + cxd(nstd * rng_u.gaussian(), nstd * rng_u.gaussian());
                }
                const LsEstimate ls = estimate_ls(rx, pilot_col);
                m.eff_est[b].col(c) = ls.value.st(); // descaled estimate of H f
                score[c] += std::pow(arma::norm(m.eff_est[b].col(c)), 2);
            }
        }
        score /= double(rs.bwp);

        for (arma::uword c = 0; c < p_csi; c++)
        {
            const double s = m.noise_est > 0.0
                                 ? score[c] / (double(h.n_tx) * m.noise_est)
                                 : cap;
            score[c] = std::min(s, cap);
        }
        m.cri = score.index_max();
        m.snr = score[m.cri];
    }
    return out;
}

// ---------- SSB -> CSI-RS DECOMPOSITION ----------

arma::uvec largest_remainder(const arma::uvec &counts, arma::uword total)
{
    if (counts.is_empty())
        throw std::invalid_argument("largest_remainder: empty counts");
    arma::uvec n = counts;
    if (arma::accu(n) == 0)
        n.ones();
    const double denom = double(arma::accu(n));

    arma::uvec base(n.n_elem);
    arma::vec frac(n.n_elem);
    for (arma::uword i = 0; i < n.n_elem; i++)
    {
        const double quota = double(total) * double(n[i]) / denom;
        base[i] = arma::uword(std::floor(quota));
        frac[i] = quota - std::floor(quota);
    }
    arma::uword left = total - arma::accu(base);
    // Distribute the remainder by descending fractional part, lower index first.
    arma::uvec order = arma::regspace<arma::uvec>(0, n.n_elem - 1);
    std::stable_sort(order.begin(), order.end(),
                     [&](arma::uword a, arma::uword b) { return frac[a] > frac[b]; });
    for (arma::uword i = 0; i < left; i++)
        base[order[i]] += 1;
    return base;
}

Codebook decompose_ssb_to_csirs(const Codebook &ssb, const Codebook &fb,
                                const std::vector<SsbReport> &reports, arma::uword p_csi)
{
    ssb.validate();
    fb.validate();
    if (fb.kind != CodebookKind::kFeedback)
        throw std::invalid_argument("decompose_ssb_to_csirs: feedback codebook required");
    if (ssb.n_ports() != fb.n_ports())
        throw std::invalid_argument("decompose_ssb_to_csirs: port mismatch");
    if (p_csi == 0)
        throw std::invalid_argument("decompose_ssb_to_csirs: p_csi must be positive");
    if (p_csi > fb.n_codewords())
        throw std::invalid_argument("decompose_ssb_to_csirs: p_csi exceeds the feedback grid");

    const arma::uword n_beams = ssb.n_codewords();
    arma::uvec counts(n_beams, arma::fill::zeros);
    for (const auto &rep : reports)
        if (rep.included)
        {
            if (rep.best_beam >= n_beams)
                throw std::invalid_argument("decompose_ssb_to_csirs: report beam out of range");
            counts[rep.best_beam] += 1;
        }
    const arma::uvec budgets = largest_remainder(counts, p_csi);

    // Beams claim columns in order of descending budget (ties: lower index).
    arma::uvec beam_order = arma::regspace<arma::uvec>(0, n_beams - 1);
    std::stable_sort(beam_order.begin(), beam_order.end(),
                     [&](arma::uword a, arma::uword b) { return budgets[a] > budgets[b]; });

    std::vector<bool> taken(fb.n_codewords(), false);
    std::vector<arma::uword> chosen;
    chosen.reserve(p_csi);
    // Orthonormal span of the columns picked so far. A candidate already in
    // that span would leave the CSI-RS codebook without a right inverse (the
    // oversampled grid holds more steering vectors than dimensions), so the
    // next-best column substitutes, exactly as for a duplicate.
    arma::cx_mat span(fb.n_ports(), 0);
    for (arma::uword bi = 0; bi < n_beams; bi++)
    {
        const arma::uword beam = beam_order[bi];
        if (budgets[beam] == 0)
            continue;
        // Correlation ranking of the full feedback grid against this beam.
        const arma::vec corr = arma::abs(fb.w.t() * ssb.w.col(beam));
        arma::uvec rank = arma::regspace<arma::uvec>(0, fb.n_codewords() - 1);
        std::stable_sort(rank.begin(), rank.end(),
                         [&](arma::uword a, arma::uword b) { return corr[a] > corr[b]; });
        arma::uword got = 0;
        for (arma::uword r = 0; r < rank.n_elem && got < budgets[beam]; r++)
        {
            if (taken[rank[r]])
                continue;
            arma::cx_vec resid = fb.w.col(rank[r]);
            if (span.n_cols > 0)
            {
                // Two projection passes keep the residual orthogonal even
                // when the accepted columns are strongly correlated.
                resid -= span * (span.t() * resid);
                resid -= span * (span.t() * resid);
            }
            const double rn = arma::norm(resid);
            if (rn <= 1e-8 * arma::norm(fb.w.col(rank[r])))
            {
                taken[rank[r]] = true; // dependent on the chosen set for good
                continue;
            }
            span.insert_cols(span.n_cols, resid / rn);
            taken[rank[r]] = true;
            chosen.push_back(rank[r]);
            got++;
        }
    }

    Codebook cb;
    cb.kind = CodebookKind::kCsiRs;
    cb.w.set_size(fb.n_ports(), chosen.size());
    cb.fb_cols.set_size(chosen.size());
    for (arma::uword i = 0; i < chosen.size(); i++)
    {
        cb.w.col(i) = fb.w.col(chosen[i]);
        cb.fb_cols[i] = chosen[i];
    }
    return cb;
}

// ---------- RESOURCE BUDGET ----------

ResourceBudget budget(const ScenarioConfig &cfg, arma::uword l_max, arma::uword p_csi,
                      const CsiRsConfig &rs, const arma::uvec &report_bits)
{
    cfg.validate();
    rs.validate();
    if (l_max == 0 || p_csi == 0)
        throw std::invalid_argument("budget: beam counts must be positive");

    ResourceBudget b;
    b.frame_slots = cfg.frame_slots;
    b.signaling_overhead = cfg.signaling_overhead;
    b.ssb_symbols = l_max;

    const arma::uword csirs_re = (p_csi * rs.pilots_per_rb + rs.zp_per_rb) * rs.nrb * rs.bwp;
    b.csirs_symbols = (csirs_re + cfg.n_subcarriers - 1) / cfg.n_subcarriers;

    arma::uword fb_re = 0;
    for (arma::uword u = 0; u < report_bits.n_elem; u++)
    {
        const arma::uword re = arma::uword(std::ceil(double(report_bits[u]) / cfg.mcs0_bits_per_re));
        const arma::uword rb = (re + cfg.rb_re - 1) / cfg.rb_re;
        fb_re += rb * cfg.rb_re;
    }
    b.feedback_symbols = (fb_re + cfg.n_subcarriers - 1) / cfg.n_subcarriers;

    if (b.bm_symbols() >= cfg.frame_slots)
        throw std::invalid_argument("budget: beam management consumes the whole frame");
    b.t_bm = b.bm_symbols() > 0 ? arma::regspace<arma::uvec>(0, b.bm_symbols() - 1) : arma::uvec();
    return b;
}

} // namespace beamsim
