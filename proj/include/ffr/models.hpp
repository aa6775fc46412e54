#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffr/adam.hpp"
#include "ffr/rng.hpp"
#include "ffr/tape.hpp"

namespace ffr {

struct MlpSpec {
    std::size_t input = 0;
    std::vector<std::size_t> hidden;
    std::size_t output = 0;
    Activation act = Activation::Relu;
};

/// Fully connected stack registered in a ParamStore. Weights start uniform in
/// +/- sqrt(6 / (fan_in + fan_out)), biases at zero.
class Mlp {
public:
    Mlp() = default;
    Mlp(ParamStore& store, const std::string& prefix, MlpSpec spec, Rng init);

    Var forward(Tape& tape, ParamStore& store, Var x, bool trainable) const;
    /// Forward without a tape, for bulk encoding and evaluation.
    Tensor forward_values(const ParamStore& store, const Tensor& x) const;

    const MlpSpec& spec() const { return spec_; }
    std::size_t layer_weight_index(std::size_t layer) const { return w_[layer]; }
    std::size_t layer_bias_index(std::size_t layer) const { return b_[layer]; }
    std::size_t layer_count() const { return w_.size(); }

private:
    MlpSpec spec_;
    std::vector<std::size_t> w_, b_;
};

enum class Likelihood { Bernoulli, Gaussian };

struct FfvaeSpec {
    std::size_t input_dim = 0;
    std::size_t n_z = 6;
    std::size_t n_b = 2;
    std::vector<std::size_t> enc_hidden = {256, 256};
    std::vector<std::size_t> dec_hidden = {256, 256};
    Likelihood likelihood = Likelihood::Bernoulli;
};

struct EncoderOutput {
    Var mu;     // [batch, n_z]
    Var logvar; // [batch, n_z], clamped to [-10, 10]
    Var b;      // [batch, n_b] deterministic sensitive logits
};

struct EncodedValues {
    Tensor mu;
    Tensor logvar;
    Tensor b;
};

/// Encoder with a shared trunk and three affine heads (mu, logvar, b), plus a
/// decoder over the concatenated code [z, b]. The sensitive-attribute head
/// p(a|b) uses b directly as logits and owns no parameters.
class FfvaeModel {
public:
    FfvaeModel() = default;
    FfvaeModel(FfvaeSpec spec, Rng init);

    EncoderOutput encode(Tape& tape, Var x, bool trainable = true);
    Var decode(Tape& tape, Var z, Var b, bool trainable = true);
    Var decode(Tape& tape, Var code, bool trainable = true);

    EncodedValues encode_values(const Tensor& x) const;
    /// Codes [z, b] for every row of x; z is a reparameterized sample when
    /// sample_rng is given, otherwise the posterior mean.
    Tensor codes(const Tensor& x, Rng* sample_rng) const;

    const FfvaeSpec& spec() const { return spec_; }
    std::size_t code_dim() const { return spec_.n_z + spec_.n_b; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

private:
    FfvaeSpec spec_;
    ParamStore store_;
    Mlp trunk_;
    std::size_t mu_w_ = 0, mu_b_ = 0, lv_w_ = 0, lv_b_ = 0, bh_w_ = 0, bh_b_ = 0;
    Mlp dec_;
};

/// sigma(b) per dimension; parameter-free.
Tensor predict_sensitive(const Tensor& b);

struct DiscSpec {
    std::size_t input_dim = 0;
    std::size_t width = 256;  // paper-scale 1000
    std::size_t affine_layers = 6;
};

/// MLP over [z, b] emitting two logits (real, shuffled), LeakyReLU(0.2)
/// between the affine layers.
class Discriminator {
public:
    Discriminator() = default;
    Discriminator(DiscSpec spec, Rng init);

    Var forward(Tape& tape, Var zb, bool trainable = true);
    Tensor forward_values(const Tensor& zb) const;

    const DiscSpec& spec() const { return spec_; }
    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }

private:
    DiscSpec spec_;
    ParamStore store_;
    Mlp net_;
};

/// Binary classifier used by every audit: two hidden layers of 128 units.
class AuditClassifier {
public:
    AuditClassifier() = default;
    AuditClassifier(std::size_t input_dim, Rng init, std::vector<std::size_t> hidden = {128, 128});

    Var forward(Tape& tape, Var x, bool trainable = true);
    Tensor forward_values(const Tensor& x) const;

    ParamStore& store() { return store_; }
    const ParamStore& store() const { return store_; }
    const Mlp& net() const { return net_; }

private:
    ParamStore store_;
    Mlp net_;
};

/// FFCKPT01 checkpoint: 8-byte magic, u64 little-endian header length, JSON
/// header (architecture, hyperparameters, seed, step, adam step counts), then
/// little-endian double payloads in registry order: model params, model adam
/// moments, then the same for the discriminator when present.
struct Checkpoint {
    FfvaeModel model;
    std::optional<Discriminator> disc;
    AdamState opt_model;
    AdamState opt_disc;
    std::int64_t step = 0;
    nlohmann::json meta; // kind, alpha/beta/gamma, seed, split_seed, dataset info
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace ffr
