// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#include "beamsim/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

namespace beamsim
{

// ---------- CONFIG ----------

void MlpConfig::validate() const
{
    if (in_dim == 0 || out_dim == 0)
        throw std::invalid_argument("MlpConfig: dimensions must be positive");
    if (beams == 0 || out_dim % beams != 0)
        throw std::invalid_argument("MlpConfig: out_dim must split evenly into beams");
    if (hidden.size() != dropout.size())
        throw std::invalid_argument("MlpConfig: one dropout rate per hidden layer required");
    for (arma::uword hsize : hidden)
    {
        if (hsize == 0)
            throw std::invalid_argument("MlpConfig: hidden widths must be positive");
    }
    for (double p : dropout)
    {
        if (!(p >= 0.0 && p < 1.0))
            throw std::invalid_argument("MlpConfig: dropout rates must lie in [0, 1)");
    }
    if (!(lr > 0.0) || epochs == 0 || batch == 0)
        throw std::invalid_argument("MlpConfig: learning rate, epochs and batch must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0 && adam_eps > 0.0))
        throw std::invalid_argument("MlpConfig: optimizer constants out of range");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw std::invalid_argument("MlpConfig: val_fraction must lie in [0, 1)");
    if (patience == 0)
        throw std::invalid_argument("MlpConfig: patience must be positive");
}

nlohmann::json MlpConfig::to_json() const
{
    nlohmann::json j;
    j["in_dim"] = in_dim;
    j["out_dim"] = out_dim;
    j["beams"] = beams;
    j["hidden"] = hidden;
    j["dropout"] = dropout;
    j["lr"] = lr;
    j["beta1"] = beta1;
    j["beta2"] = beta2;
    j["adam_eps"] = adam_eps;
    j["epochs"] = epochs;
    j["batch"] = batch;
    j["horizon"] = horizon;
    j["val_fraction"] = val_fraction;
    j["patience"] = patience;
    j["seed"] = seed;
    return j;
}

MlpConfig MlpConfig::from_json(const nlohmann::json &j)
{
    MlpConfig c;
    c.in_dim = j.at("in_dim").get<arma::uword>();
    c.out_dim = j.at("out_dim").get<arma::uword>();
    c.beams = j.at("beams").get<arma::uword>();
    c.hidden = j.at("hidden").get<std::vector<arma::uword>>();
    c.dropout = j.at("dropout").get<std::vector<double>>();
    c.lr = j.at("lr").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.epochs = j.at("epochs").get<arma::uword>();
    c.batch = j.at("batch").get<arma::uword>();
    c.horizon = j.at("horizon").get<arma::uword>();
    c.val_fraction = j.at("val_fraction").get<double>();
    c.patience = j.at("patience").get<arma::uword>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
}

// ---------- LOSS ----------

std::pair<double, arma::mat> cosine_loss(const arma::mat &pred, const arma::mat &target,
                                         arma::uword beams)
{
    if (pred.n_rows != target.n_rows || pred.n_cols != target.n_cols)
        throw std::invalid_argument("cosine_loss: shape mismatch");
    if (beams == 0 || pred.n_rows % beams != 0 || pred.n_cols == 0)
        throw std::invalid_argument("cosine_loss: rows must split evenly into beams");

    const arma::uword d = pred.n_rows / beams;
    const double denom = static_cast<double>(beams) * static_cast<double>(pred.n_cols);
    constexpr double eps = 1e-12;

    double loss = 0.0;
    arma::mat grad(pred.n_rows, pred.n_cols, arma::fill::zeros);
    for (arma::uword n = 0; n < pred.n_cols; ++n)
    {
        for (arma::uword g = 0; g < beams; ++g)
        {
            const arma::uword r0 = g * d, r1 = r0 + d - 1;
            const arma::vec a = pred(arma::span(r0, r1), arma::span(n, n));
            const arma::vec b = target(arma::span(r0, r1), arma::span(n, n));
            const double na = arma::norm(a);
            const double nb = arma::norm(b);
            if (na < eps || nb < eps)
            {
                loss += 1.0 / denom;
                continue;
            }
            const double cosv = arma::dot(a, b) / (na * nb);
            loss += (1.0 - cosv) / denom;
            grad(arma::span(r0, r1), arma::span(n, n)) =
                (cosv * a / (na * na) - b / (na * nb)) / denom;
        }
    }
    return {loss, grad};
}

// ---------- NETWORK ----------

namespace
{

std::vector<arma::uword> layer_dims(const MlpConfig &cfg)
{
    std::vector<arma::uword> dims;
    dims.push_back(cfg.in_dim);
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(cfg.out_dim);
    return dims;
}

} // namespace

Mlp::Mlp(const MlpConfig &cfg) : cfg_(cfg), rng_(cfg.seed)
{
    cfg_.validate();
    const auto dims = layer_dims(cfg_);
    const std::size_t n_lin = dims.size() - 1;
    w_.resize(n_lin);
    b_.resize(n_lin);
    mw_.resize(n_lin);
    vw_.resize(n_lin);
    mb_.resize(n_lin);
    vb_.resize(n_lin);
    for (std::size_t l = 0; l < n_lin; ++l)
    {
        const arma::uword fan_in = dims[l], fan_out = dims[l + 1];
        // He initialization for the rectified layers, smaller for the
        // linear output.
        const double std_dev = (l + 1 == n_lin) ? std::sqrt(1.0 / static_cast<double>(fan_in))
                                                : std::sqrt(2.0 / static_cast<double>(fan_in));
        w_[l].set_size(fan_out, fan_in);
        for (arma::uword i = 0; i < w_[l].n_elem; ++i)
            w_[l](i) = std_dev * rng_.gaussian();
        b_[l].zeros(fan_out);
        mw_[l].zeros(fan_out, fan_in);
        vw_[l].zeros(fan_out, fan_in);
        mb_[l].zeros(fan_out);
        vb_[l].zeros(fan_out);
    }
}

arma::mat &Mlp::weight(arma::uword layer)
{
    if (layer >= w_.size())
        throw std::invalid_argument("Mlp::weight: layer out of range");
    return w_[layer];
}

const arma::mat &Mlp::weight(arma::uword layer) const
{
    return const_cast<Mlp *>(this)->weight(layer);
}

arma::vec &Mlp::bias(arma::uword layer)
{
    if (layer >= b_.size())
        throw std::invalid_argument("Mlp::bias: layer out of range");
    return b_[layer];
}

const arma::vec &Mlp::bias(arma::uword layer) const
{
    return const_cast<Mlp *>(this)->bias(layer);
}

arma::mat Mlp::predict(const arma::mat &x) const
{
    if (x.n_rows != cfg_.in_dim)
        throw std::invalid_argument("Mlp::predict: input dimension mismatch");
    arma::mat a = x;
    for (std::size_t l = 0; l < w_.size(); ++l)
    {
        a = w_[l] * a;
        a.each_col() += b_[l];
        if (l + 1 < w_.size())
            a.transform([](double v) { return v > 0.0 ? v : 0.0; });
    }
    return a;
}

double Mlp::evaluate(const arma::mat &x, const arma::mat &y) const
{
    return cosine_loss(predict(x), y, cfg_.beams).first;
}

std::pair<std::vector<arma::mat>, std::vector<arma::vec>> Mlp::gradients(const arma::mat &x,
                                                                         const arma::mat &y) const
{
    if (x.n_rows != cfg_.in_dim || y.n_rows != cfg_.out_dim || x.n_cols != y.n_cols)
        throw std::invalid_argument("Mlp::gradients: shape mismatch");
    if (x.n_cols == 0)
        throw std::invalid_argument("Mlp::gradients: need at least one sample");

    const std::size_t n_lin = w_.size();
    std::vector<arma::mat> act(n_lin + 1);
    act[0] = x;
    for (std::size_t l = 0; l < n_lin; ++l)
    {
        arma::mat z = w_[l] * act[l];
        z.each_col() += b_[l];
        if (l + 1 < n_lin)
            z.transform([](double v) { return v > 0.0 ? v : 0.0; });
        act[l + 1] = std::move(z);
    }

    std::vector<arma::mat> dw(n_lin);
    std::vector<arma::vec> db(n_lin);
    arma::mat delta = cosine_loss(act[n_lin], y, cfg_.beams).second;
    for (std::size_t l = n_lin; l-- > 0;)
    {
        dw[l] = delta * act[l].t();
        db[l] = arma::sum(delta, 1);
        if (l > 0)
        {
            delta = w_[l].t() * delta;
            delta.elem(arma::find(act[l] <= 0.0)).zeros();
        }
    }
    return {std::move(dw), std::move(db)};
}

TrainResult Mlp::fit(const TrainingSet &ts)
{
    return run_training(ts, cfg_.epochs, cfg_.lr, 0);
}

TrainResult Mlp::fine_tune(const TrainingSet &ts, arma::uword epochs, double lr,
                           arma::uword step_cap)
{
    if (epochs == 0 || !(lr > 0.0))
        throw std::invalid_argument("Mlp::fine_tune: epochs and lr must be positive");
    // Fresh optimizer, retained weights.
    step_ = 0;
    for (std::size_t l = 0; l < w_.size(); ++l)
    {
        mw_[l].zeros();
        vw_[l].zeros();
        mb_[l].zeros();
        vb_[l].zeros();
    }
    return run_training(ts, epochs, lr, step_cap);
}

TrainResult Mlp::run_training(const TrainingSet &ts, arma::uword epochs, double lr,
                              arma::uword step_cap)
{
    ts.validate();
    if (ts.inputs.n_rows != cfg_.in_dim || ts.targets.n_rows != cfg_.out_dim)
        throw std::invalid_argument("Mlp: training set dimensions do not match the network");
    if (ts.l_max != cfg_.beams)
        throw std::invalid_argument("Mlp: training set beam count does not match the loss");
    const arma::uword n = ts.n_samples();
    if (n < 2)
        throw std::invalid_argument("Mlp: need at least two samples");

    // Deterministic holdout split.
    std::vector<arma::uword> idx(n);
    for (arma::uword i = 0; i < n; ++i)
        idx[i] = i;
    for (arma::uword i = 0; i + 1 < n; ++i)
    {
        const arma::uword j = i + static_cast<arma::uword>(rng_.integer(n - i));
        std::swap(idx[i], idx[j]);
    }
    arma::uword n_val = 0;
    if (cfg_.val_fraction > 0.0)
    {
        n_val = static_cast<arma::uword>(std::lround(cfg_.val_fraction * static_cast<double>(n)));
        n_val = std::max<arma::uword>(1, std::min<arma::uword>(n_val, n - 1));
    }
    const arma::uword n_train = n - n_val;

    arma::mat xt(cfg_.in_dim, n_train), tt(cfg_.out_dim, n_train);
    for (arma::uword i = 0; i < n_train; ++i)
    {
        xt.col(i) = ts.inputs.col(idx[i]);
        tt.col(i) = ts.targets.col(idx[i]);
    }
    // Without a holdout the schedule monitors the training fold itself.
    arma::mat xv = xt, tv = tt;
    if (n_val > 0)
    {
        xv.set_size(cfg_.in_dim, n_val);
        tv.set_size(cfg_.out_dim, n_val);
        for (arma::uword i = 0; i < n_val; ++i)
        {
            xv.col(i) = ts.inputs.col(idx[n_train + i]);
            tv.col(i) = ts.targets.col(idx[n_train + i]);
        }
    }

    const arma::uword n_batches = (n_train + cfg_.batch - 1) / cfg_.batch;
    const arma::uword horizon = cfg_.horizon > 0 ? cfg_.horizon
                                                 : std::max<arma::uword>(1, epochs * n_batches);
    const std::size_t n_lin = w_.size();

    TrainResult res;
    res.train_loss.set_size(epochs);
    res.val_loss.set_size(epochs);
    res.lr.set_size(epochs);
    res.step_at.set_size(epochs);

    std::vector<arma::mat> best_w = w_;
    std::vector<arma::vec> best_b = b_;
    double best_val = std::numeric_limits<double>::infinity();
    arma::uword bad_epochs = 0, ran = 0;

    std::vector<arma::uword> order(n_train);
    for (arma::uword i = 0; i < n_train; ++i)
        order[i] = i;

    std::vector<arma::mat> act(n_lin + 1), mask(n_lin), dw(n_lin);
    std::vector<arma::vec> db(n_lin);

    arma::uword used = 0;
    double last_lr = lr;
    bool capped = false;

    for (arma::uword e = 0; e < epochs && !capped; ++e)
    {
        for (arma::uword i = 0; i + 1 < n_train; ++i)
        {
            const arma::uword j = i + static_cast<arma::uword>(rng_.integer(n_train - i));
            std::swap(order[i], order[j]);
        }

        double epoch_loss = 0.0;
        arma::uword batches_done = 0;
        for (arma::uword bi = 0; bi < n_batches; ++bi)
        {
            if (step_cap > 0 && used >= step_cap)
            {
                capped = true;
                break;
            }
            ++batches_done;
            const arma::uword lo = bi * cfg_.batch;
            const arma::uword hi = std::min<arma::uword>(lo + cfg_.batch, n_train) - 1;
            arma::uvec cols(hi - lo + 1);
            for (arma::uword i = lo; i <= hi; ++i)
                cols[i - lo] = order[i];
            const arma::mat xb = xt.cols(cols);
            const arma::mat tb = tt.cols(cols);

            // Forward with cached activations and dropout masks.
            act[0] = xb;
            for (std::size_t l = 0; l < n_lin; ++l)
            {
                arma::mat z = w_[l] * act[l];
                z.each_col() += b_[l];
                if (l + 1 < n_lin)
                {
                    z.transform([](double v) { return v > 0.0 ? v : 0.0; });
                    const double p = cfg_.dropout[l];
                    mask[l].set_size(z.n_rows, z.n_cols);
                    if (p > 0.0)
                    {
                        const double keep = 1.0 - p;
                        for (arma::uword i = 0; i < mask[l].n_elem; ++i)
                            mask[l](i) = rng_.uniform() < keep ? 1.0 / keep : 0.0;
                        z %= mask[l];
                    }
                    else
                    {
                        mask[l].ones();
                    }
                }
                act[l + 1] = std::move(z);
            }

            auto [loss, grad] = cosine_loss(act[n_lin], tb, cfg_.beams);
            epoch_loss += loss * static_cast<double>(cols.n_elem) / static_cast<double>(n_train);

            // Backward pass.
            arma::mat delta = std::move(grad);
            for (std::size_t l = n_lin; l-- > 0;)
            {
                dw[l] = delta * act[l].t();
                db[l] = arma::sum(delta, 1);
                if (l > 0)
                {
                    delta = w_[l].t() * delta;
                    delta %= mask[l - 1];
                    // ReLU gate: the cached activation is positive exactly
                    // where the unit fired.
                    delta.elem(arma::find(act[l] <= 0.0)).zeros();
                }
            }

            // Adam with cosine-decayed step size.
            ++step_;
            ++used;
            const double frac = static_cast<double>(std::min<std::uint64_t>(step_, horizon)) /
                                static_cast<double>(horizon);
            const double lr_t = lr * 0.5 * (1.0 + std::cos(arma::datum::pi * frac));
            last_lr = lr_t;
            const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
            const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
            for (std::size_t l = 0; l < n_lin; ++l)
            {
                mw_[l] = cfg_.beta1 * mw_[l] + (1.0 - cfg_.beta1) * dw[l];
                vw_[l] = cfg_.beta2 * vw_[l] + (1.0 - cfg_.beta2) * arma::square(dw[l]);
                w_[l] -= lr_t * (mw_[l] / c1) / (arma::sqrt(vw_[l] / c2) + cfg_.adam_eps);
                mb_[l] = cfg_.beta1 * mb_[l] + (1.0 - cfg_.beta1) * db[l];
                vb_[l] = cfg_.beta2 * vb_[l] + (1.0 - cfg_.beta2) * arma::square(db[l]);
                b_[l] -= lr_t * (mb_[l] / c1) / (arma::sqrt(vb_[l] / c2) + cfg_.adam_eps);
            }
        }

        if (batches_done == 0)
            break; // cap landed exactly on an epoch boundary

        res.train_loss(e) = epoch_loss;
        res.val_loss(e) = cosine_loss(predict(xv), tv, cfg_.beams).first;
        res.lr(e) = last_lr;
        res.step_at(e) = static_cast<arma::uword>(step_);
        ran = e + 1;

        if (res.val_loss(e) < best_val - 1e-12)
        {
            best_val = res.val_loss(e);
            res.best_epoch = e;
            best_w = w_;
            best_b = b_;
            bad_epochs = 0;
        }
        else if (++bad_epochs >= cfg_.patience)
        {
            break;
        }
    }

    w_ = std::move(best_w);
    b_ = std::move(best_b);
    res.train_loss.resize(ran);
    res.val_loss.resize(ran);
    res.lr.resize(ran);
    res.step_at.resize(ran);
    res.steps = static_cast<arma::uword>(step_);
    return res;
}

// ---------- CHECKPOINTS ----------

namespace
{
constexpr char kCheckpointMagic[7] = "BSCK1\n";
}

void Mlp::save(const std::string &path) const
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("Mlp::save: cannot open " + path);

    nlohmann::json header;
    header["format_version"] = 1;
    header["kind"] = "checkpoint";
    header["config"] = cfg_.to_json();
    header["step"] = step_;
    write_blob_header(os, kCheckpointMagic, header);

    auto dump_mat = [&os](const arma::mat &m) { write_doubles(os, m.memptr(), m.n_elem); };
    auto dump_vec = [&os](const arma::vec &v) { write_doubles(os, v.memptr(), v.n_elem); };
    for (std::size_t l = 0; l < w_.size(); ++l)
    {
        dump_mat(w_[l]);
        dump_vec(b_[l]);
        dump_mat(mw_[l]);
        dump_mat(vw_[l]);
        dump_vec(mb_[l]);
        dump_vec(vb_[l]);
    }
    if (!os)
        throw std::runtime_error("Mlp::save: write failed for " + path);
}

Mlp Mlp::load(const std::string &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("Mlp::load: cannot open " + path);
    const nlohmann::json header = read_blob_header(is, kCheckpointMagic);
    if (header.at("kind").get<std::string>() != "checkpoint")
        throw std::runtime_error("Mlp::load: not a checkpoint file");

    Mlp net(MlpConfig::from_json(header.at("config")));
    net.step_ = header.at("step").get<std::uint64_t>();
    auto slurp_mat = [&is](arma::mat &m) { read_doubles(is, m.memptr(), m.n_elem); };
    auto slurp_vec = [&is](arma::vec &v) { read_doubles(is, v.memptr(), v.n_elem); };
    for (std::size_t l = 0; l < net.w_.size(); ++l)
    {
        slurp_mat(net.w_[l]);
        slurp_vec(net.b_[l]);
        slurp_mat(net.mw_[l]);
        slurp_mat(net.vw_[l]);
        slurp_vec(net.mb_[l]);
        slurp_vec(net.vb_[l]);
    }
    if (!is)
        throw std::runtime_error("Mlp::load: truncated checkpoint " + path);
    return net;
}

// ---------- CODEBOOK DECODING ----------

Codebook infer_codebook(const Mlp &net, const arma::cube &input, const ArrayGeometry &geom,
                        const BeamspaceGrids &grids)
{
    const MlpConfig &cfg = net.config();
    if (input.n_elem != cfg.in_dim)
        throw std::invalid_argument("infer_codebook: observation size does not match the network");
    const arma::uword gx = grids.ax.n_cols, gy = grids.ay.n_cols;
    if (cfg.out_dim != 2 * cfg.beams * gx * gy)
        throw std::invalid_argument("infer_codebook: output size does not match the grids");

    const arma::mat x(const_cast<double *>(input.memptr()), cfg.in_dim, 1, true, true);
    const arma::mat y = net.predict(x);
    const arma::cube slices(const_cast<double *>(y.memptr()), gx, gy, 2 * cfg.beams, true, true);
    return cube_to_beams(slices, geom, grids, CodebookKind::kSsb);
}

} // namespace beamsim
