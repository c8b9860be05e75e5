// SPDX-License-Identifier: Apache-2.0
//
// beamsim: link-level beam management and CSI feedback simulator
// Licensed under the Apache License, Version 2.0; see
// http://www.apache.org/licenses/LICENSE-2.0 for the full text.

#pragma once

#include "beamsim/beamspace.hpp"
#include "beamsim/dataset_io.hpp"

namespace beamsim
{

// Fully connected codebook generator. Samples are columns; hidden layers are
// ReLU with inverted dropout, the output layer is linear and is reshaped
// externally into beamspace slices.
struct MlpConfig
{
    arma::uword in_dim = 0;
    arma::uword out_dim = 0;
    arma::uword beams = 0; // output groups scored by the cosine loss

    std::vector<arma::uword> hidden = {144, 1808, 272, 240, 80};
    std::vector<double> dropout = {0.2, 0.4, 0.4, 0.0, 0.0};

    double lr = 1e-3;
    double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    arma::uword epochs = 60;
    arma::uword batch = 32;
    arma::uword horizon = 0; // cosine-decay steps; 0 = one full schedule
    double val_fraction = 0.15;
    arma::uword patience = 10; // epochs without validation improvement
    std::uint64_t seed = 1;

    void validate() const;
    nlohmann::json to_json() const;
    static MlpConfig from_json(const nlohmann::json &j);
};

// Mean over samples and beam groups of 1 - <a,b>/(|a||b|), with the
// gradient in the prediction. Degenerate groups (either norm zero) score 1
// and propagate no gradient.
std::pair<double, arma::mat> cosine_loss(const arma::mat &pred, const arma::mat &target,
                                         arma::uword beams);

struct TrainResult
{
    arma::vec train_loss; // per epoch, on the training fold
    arma::vec val_loss;   // per epoch, dropout disabled
    arma::vec lr;         // step size at each epoch's last update
    arma::uvec step_at;   // cumulative optimizer steps after each epoch
    arma::uword best_epoch = 0;
    arma::uword steps = 0;
};

class Mlp
{
  public:
    explicit Mlp(const MlpConfig &cfg);

    const MlpConfig &config() const { return cfg_; }
    std::uint64_t steps() const { return step_; } // lifetime optimizer updates

    // Parameter access, layer-indexed. Exposed for inspection and for the
    // finite-difference validation of the backward pass.
    arma::uword n_layers() const { return static_cast<arma::uword>(w_.size()); }
    arma::mat &weight(arma::uword layer);
    const arma::mat &weight(arma::uword layer) const;
    arma::vec &bias(arma::uword layer);
    const arma::vec &bias(arma::uword layer) const;

    // Deterministic inference pass (dropout disabled).
    arma::mat predict(const arma::mat &x) const;

    // Mean cosine loss of the deterministic forward pass on a labeled set.
    double evaluate(const arma::mat &x, const arma::mat &y) const;

    // Analytic parameter gradients of evaluate() at the current weights,
    // dropout disabled; pairs with evaluate() for gradient checking.
    std::pair<std::vector<arma::mat>, std::vector<arma::vec>> gradients(const arma::mat &x,
                                                                        const arma::mat &y) const;

    // Train with Adam under a cosine learning-rate schedule and early
    // stopping; the best validation weights are restored on return.
    TrainResult fit(const TrainingSet &ts);

    // Continue training on a new set with fresh optimizer state. A positive
    // step_cap stops mid-epoch once that many updates have been spent.
    TrainResult fine_tune(const TrainingSet &ts, arma::uword epochs, double lr,
                          arma::uword step_cap = 0);

    void save(const std::string &path) const;
    static Mlp load(const std::string &path);

  private:
    TrainResult run_training(const TrainingSet &ts, arma::uword epochs, double lr,
                             arma::uword step_cap);

    MlpConfig cfg_;
    std::vector<arma::mat> w_;
    std::vector<arma::vec> b_;
    std::vector<arma::mat> mw_, vw_;
    std::vector<arma::vec> mb_, vb_;
    std::uint64_t step_ = 0;
    Rng rng_;
};

// Run the generator on one observation cube and decode the predicted slices
// into a broadcast codebook.
Codebook infer_codebook(const Mlp &net, const arma::cube &input, const ArrayGeometry &geom,
                        const BeamspaceGrids &grids);

} // namespace beamsim
