#pragma once

#include <optional>

#include "ffr/models.hpp"
#include "ffr/rng.hpp"
#include "ffr/tape.hpp"

namespace ffr {

/// Per-batch loss components in nats. The minimized total is
/// reconstruction + alpha * predictiveness + gamma * tc_estimate
/// + beta * dimwise_kl (beta = 1 outside the beta-VAE objective).
/// The dimension-wise KL covers the z head only: q(b|x) is a point mass
/// against a uniform p(b), so its KL term is a constant and is dropped.
struct LossBreakdown {
    double reconstruction = 0.0;
    double predictiveness = 0.0;
    double tc_estimate = 0.0;
    double dimwise_kl = 0.0;
    double total = 0.0;
};

/// Loss graph plus extracted component values. `code` is the sampled [z, b]
/// for the batch (used to train the discriminator on the same batch).
struct LossGraph {
    Var total;
    Var code;
    LossBreakdown values;
};

LossGraph vae_loss(Tape& tape, FfvaeModel& model, Var x, Var eps);
LossGraph betavae_loss(Tape& tape, FfvaeModel& model, Var x, double beta, Var eps);
LossGraph cvae_loss(Tape& tape, FfvaeModel& model, Var x, Var a, double alpha, Var eps);
LossGraph factorvae_loss(Tape& tape, FfvaeModel& model, Discriminator& disc, Var x, double gamma, Var eps);
/// Eq.-style four-term objective. The discriminator is evaluated frozen: its
/// parameters receive no gradient from this graph.
LossGraph ffvae_loss(Tape& tape, FfvaeModel& model, Discriminator* disc, Var x, Var a, double alpha,
                     double gamma, Var eps);

/// Independent uniform row permutation per subspace, where the subspaces
/// partition the columns as [z | b_1 | ... | b_nb]; z stays together. Breaks
/// joint cross-subspace statistics while preserving each marginal.
Tensor shuffle_product_of_marginals(const Tensor& zb, std::size_t n_z, std::size_t n_b, Rng& rng);

/// Mean over the batch of (l_real - l_fake); approximates
/// KL(q(z,b) || q(z) prod_j q(b_j)) when the discriminator is well trained.
double tc_adversarial_estimate(const Discriminator& disc, const Tensor& zb_real);

/// 2-class softmax cross-entropy, real rows labeled as class 0 ("real"),
/// shuffled rows as class 1. Inputs are detached values: only discriminator
/// parameters receive gradient.
Var discriminator_loss(Tape& tape, Discriminator& disc, const Tensor& zb_real, const Tensor& zb_fake);

/// Batch-mixture (biased) total-correlation estimator:
/// E[log q(z,b) - log q(z) - sum_j log q(b_j)] with each density approximated
/// by the minibatch mixture (1/M) sum_m q(.|x_m). The z head uses the encoder
/// posterior (mu, logvar); the deterministic b columns use a Gaussian kernel
/// of width tau around their values.
double tc_minibatch_estimate(const Tensor& zb, const Tensor& mu_z, const Tensor& logvar_z, std::size_t n_z,
                             std::size_t n_b, double tau = 0.05);

} // namespace ffr
