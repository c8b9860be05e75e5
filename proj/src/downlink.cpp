// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/downlink.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace beamsim
{

// ---------- PRECODING ----------

std::vector<arma::cx_mat> rzf_precode(const std::vector<arma::cx_mat> &hhat,
                                      const std::vector<arma::uword> &ranks,
                                      double noise_scale)
{
    if (hhat.empty())
        throw std::invalid_argument("rzf_precode: no users");
    if (ranks.size() != hhat.size())
        throw std::invalid_argument("rzf_precode: one rank per user required");
    if (!(noise_scale > 0.0))
        throw std::invalid_argument("rzf_precode: noise_scale must be positive");

    const arma::uword n_tx = hhat.front().n_cols;
    arma::uword n_active = 0;
    for (std::size_t u = 0; u < hhat.size(); ++u)
    {
        if (hhat[u].n_cols != n_tx)
            throw std::invalid_argument("rzf_precode: mismatched transmit dimensions");
        if (ranks[u] > hhat[u].n_rows)
            throw std::invalid_argument("rzf_precode: rank exceeds receive dimension");
        if (ranks[u] > 0)
            ++n_active;
    }
    if (n_active == 0)
        throw std::invalid_argument("rzf_precode: at least one user must be served");

    arma::cx_mat m(n_tx, n_tx, arma::fill::zeros);
    for (std::size_t u = 0; u < hhat.size(); ++u)
    {
        if (ranks[u] > 0)
            m += hhat[u].t() * hhat[u];
    }
    m.diag() += static_cast<double>(n_active) * noise_scale;

    const double target = std::sqrt(static_cast<double>(n_tx) / static_cast<double>(n_active));
    std::vector<arma::cx_mat> out(hhat.size());
    for (std::size_t u = 0; u < hhat.size(); ++u)
    {
        if (ranks[u] == 0)
        {
            out[u].set_size(n_tx, 0);
            continue;
        }
        arma::cx_mat f = arma::solve(m, hhat[u].t(),
                                     arma::solve_opts::likely_sympd + arma::solve_opts::no_approx);
        f = f.cols(0, ranks[u] - 1);
        const double nrm = arma::norm(f, "fro");
        if (!(nrm > 0.0))
            throw std::invalid_argument("rzf_precode: zero channel estimate for a served user");
        out[u] = f * (target / nrm);
    }
    return out;
}

// ---------- SINR ----------

arma::vec lmmse_sinr(const arma::cx_mat &h, const std::vector<arma::cx_mat> &precoders,
                     arma::uword user, double noise_scale)
{
    if (user >= precoders.size())
        throw std::invalid_argument("lmmse_sinr: user index out of range");
    if (!(noise_scale > 0.0))
        throw std::invalid_argument("lmmse_sinr: noise_scale must be positive");

    const arma::uword layers = precoders[user].n_cols;
    arma::vec sinr(layers, arma::fill::zeros);
    if (layers == 0)
        return sinr;
    if (h.n_cols != precoders[user].n_rows)
        throw std::invalid_argument("lmmse_sinr: channel and precoder dimensions differ");

    arma::cx_mat cov(h.n_rows, h.n_rows, arma::fill::zeros);
    for (const auto &f : precoders)
    {
        if (f.n_cols == 0)
            continue;
        const arma::cx_mat hf = h * f;
        cov += hf * hf.t();
    }
    cov.diag() += noise_scale;

    const arma::cx_mat hfu = h * precoders[user];
    const arma::cx_mat sol = arma::solve(cov, hfu,
                                         arma::solve_opts::likely_sympd + arma::solve_opts::no_approx);
    for (arma::uword l = 0; l < layers; ++l)
    {
        double s = std::real(arma::cdot(hfu.col(l), sol.col(l)));
        s = std::clamp(s, 0.0, 1.0);
        sinr(l) = s / std::max(1.0 - s, 1e-15);
    }
    return sinr;
}

double sum_se_at(const std::vector<arma::cx_mat> &h_users,
                 const std::vector<arma::cx_mat> &precoders, double noise_scale)
{
    if (h_users.size() != precoders.size())
        throw std::invalid_argument("sum_se_at: one channel per precoder required");
    double se = 0.0;
    for (std::size_t u = 0; u < h_users.size(); ++u)
    {
        if (precoders[u].n_cols == 0)
            continue;
        const arma::vec sinr = lmmse_sinr(h_users[u], precoders, static_cast<arma::uword>(u), noise_scale);
        for (arma::uword l = 0; l < sinr.n_elem; ++l)
            se += std::log2(1.0 + sinr(l));
    }
    return se;
}

// ---------- SCHEDULING ----------

namespace
{

struct Scored
{
    double objective = -1.0;
    std::vector<arma::cx_mat> precoders;
};

Scored score_assignment(const std::vector<arma::cx_mat> &hhat,
                        const std::vector<arma::uword> &ranks, double noise_scale)
{
    Scored s;
    bool any = false;
    for (arma::uword r : ranks)
        any = any || r > 0;
    if (!any)
        return s;
    s.precoders = rzf_precode(hhat, ranks, noise_scale);
    s.objective = sum_se_at(hhat, s.precoders, noise_scale);
    return s;
}

} // namespace

ScheduleResult schedule_users(const std::vector<arma::cx_mat> &hhat, double noise_scale,
                              arma::uword max_rank, arma::uword exhaustive_cap)
{
    if (hhat.empty())
        throw std::invalid_argument("schedule_users: no candidates");
    if (max_rank == 0)
        throw std::invalid_argument("schedule_users: max_rank must be positive");

    const std::size_t n = hhat.size();
    std::vector<arma::uword> cap(n);
    for (std::size_t u = 0; u < n; ++u)
    {
        cap[u] = std::min<arma::uword>(max_rank, hhat[u].n_rows);
        if (cap[u] == 0)
            throw std::invalid_argument("schedule_users: candidate with no receive antennas");
    }

    ScheduleResult best;
    best.ranks.assign(n, 0);
    best.objective = -1.0;

    if (n <= exhaustive_cap)
    {
        std::vector<arma::uword> ranks(n, 0);
        bool more = true;
        while (more)
        {
            bool valid = true;
            for (std::size_t u = 0; u < n && valid; ++u)
                valid = ranks[u] <= cap[u];
            if (valid)
            {
                const Scored s = score_assignment(hhat, ranks, noise_scale);
                if (s.objective > best.objective)
                {
                    best.objective = s.objective;
                    best.ranks = ranks;
                    best.precoders = s.precoders;
                }
            }
            // Odometer step, candidate 0 fastest.
            more = false;
            for (std::size_t u = 0; u < n; ++u)
            {
                if (ranks[u] < max_rank)
                {
                    ++ranks[u];
                    more = true;
                    break;
                }
                ranks[u] = 0;
            }
        }
    }
    else
    {
        // Greedy layer-by-layer ascent.
        std::vector<arma::uword> ranks(n, 0);
        double current = -1.0;
        std::vector<arma::cx_mat> current_pre;
        while (true)
        {
            double best_step = current;
            std::size_t best_user = n;
            std::vector<arma::cx_mat> best_pre;
            for (std::size_t u = 0; u < n; ++u)
            {
                if (ranks[u] >= cap[u])
                    continue;
                ++ranks[u];
                Scored s = score_assignment(hhat, ranks, noise_scale);
                --ranks[u];
                if (s.objective > best_step)
                {
                    best_step = s.objective;
                    best_user = u;
                    best_pre = std::move(s.precoders);
                }
            }
            if (best_user == n)
                break;
            ++ranks[best_user];
            current = best_step;
            current_pre = std::move(best_pre);
        }
        best.ranks = ranks;
        best.objective = current;
        best.precoders = std::move(current_pre);
    }

    if (best.objective < 0.0)
        throw std::invalid_argument("schedule_users: no feasible assignment");
    return best;
}

// ---------- EFFECTIVE SPECTRAL EFFICIENCY ----------

double noise_scale_of(const ScenarioConfig &cfg)
{
    return cfg.noise_power * static_cast<double>(cfg.n_subcarriers) *
           static_cast<double>(cfg.n_tx()) / cfg.tx_power;
}

double effective_sum_se(const ChannelTensor &truth, const std::vector<arma::uword> &users,
                        const std::vector<arma::cx_mat> &precoders,
                        const ResourceBudget &budget, const ScenarioConfig &cfg,
                        arma::uword k_start, arma::uword k_count)
{
    truth.validate();
    if (users.size() != precoders.size())
        throw std::invalid_argument("effective_sum_se: one tensor index per precoder required");
    if (users.empty())
        throw std::invalid_argument("effective_sum_se: no users");
    for (arma::uword u : users)
    {
        if (u >= truth.n_users)
            throw std::invalid_argument("effective_sum_se: user index out of range");
    }
    if (budget.frame_slots == 0)
        throw std::invalid_argument("effective_sum_se: empty frame");
    if (!(budget.signaling_overhead >= 0.0 && budget.signaling_overhead < 1.0))
        throw std::invalid_argument("effective_sum_se: signaling overhead must lie in [0, 1)");

    const arma::uword n_slots = truth.n_slots;
    const arma::uword n_sub = truth.n_subcarriers;
    if (k_count == 0)
    {
        k_start = 0;
        k_count = n_sub;
    }
    if (k_start + k_count > n_sub)
        throw std::invalid_argument("effective_sum_se: subcarrier window out of range");
    const double noise_scale = noise_scale_of(cfg);

    std::vector<bool> t_masked(budget.frame_slots, false);
    for (arma::uword t : budget.t_bm)
    {
        if (t >= budget.frame_slots)
            throw std::invalid_argument("effective_sum_se: reserved symbol beyond the frame");
        t_masked[t] = true;
    }
    std::vector<bool> k_masked(n_sub, false);
    for (arma::uword k : budget.k_bm)
    {
        if (k >= n_sub)
            throw std::invalid_argument("effective_sum_se: reserved subcarrier out of range");
        k_masked[k] = true;
    }

    // The fading repeats with period n_slots, so score each residue class
    // once and weight it by how many usable frame symbols land on it.
    arma::vec residue_weight(n_slots, arma::fill::zeros);
    for (arma::uword t = 0; t < budget.frame_slots; ++t)
    {
        if (!t_masked[t])
            residue_weight(t % n_slots) += 1.0;
    }

    std::vector<arma::cx_mat> h_users(users.size());
    double total = 0.0;
    for (arma::uword r = 0; r < n_slots; ++r)
    {
        if (residue_weight(r) == 0.0)
            continue;
        double row_se = 0.0;
        for (arma::uword k = k_start; k < k_start + k_count; ++k)
        {
            if (k_masked[k])
                continue;
            for (std::size_t i = 0; i < users.size(); ++i)
                h_users[i] = truth.at(users[i], r, k);
            row_se += sum_se_at(h_users, precoders, noise_scale);
        }
        total += residue_weight(r) * row_se;
    }

    const double denom = static_cast<double>(budget.frame_slots) * static_cast<double>(k_count);
    return (1.0 - budget.signaling_overhead) * total / denom;
}

// ---------- NON-PMI BASELINE ----------

NonPmiSchedule non_pmi_baseline(const std::vector<CsiMeasurement> &meas,
                                const Codebook &csirs, arma::uword max_users)
{
    csirs.validate();
    if (meas.empty())
        throw std::invalid_argument("non_pmi_baseline: no measurements");
    if (max_users == 0)
        throw std::invalid_argument("non_pmi_baseline: max_users must be positive");

    std::vector<std::size_t> order(meas.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b)
                     { return meas[a].snr > meas[b].snr; });

    NonPmiSchedule sched;
    std::vector<bool> taken(csirs.n_codewords(), false);
    std::vector<arma::uword> beams;
    for (std::size_t i : order)
    {
        if (sched.users.size() >= max_users)
            break;
        const arma::uword cri = meas[i].cri;
        if (cri >= csirs.n_codewords())
            throw std::invalid_argument("non_pmi_baseline: refinement index out of range");
        if (taken[cri])
            continue;
        taken[cri] = true;
        sched.users.push_back(static_cast<arma::uword>(i));
        beams.push_back(cri);
    }

    const double scale = 1.0 / std::sqrt(static_cast<double>(sched.users.size()));
    for (arma::uword b : beams)
        sched.precoders.push_back(csirs.w.col(b) * scale);
    return sched;
}

} // namespace beamsim
