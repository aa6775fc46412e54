#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "ffr/tensor.hpp"

namespace ffr {

/// Registry of named trainable parameters with per-parameter gradient
/// accumulators. Backward passes accumulate into grad(); optimizers consume
/// grads and mutate value().
class ParamStore {
public:
    std::size_t add(std::string name, Tensor init);

    std::size_t count() const { return entries_.size(); }
    std::size_t scalar_count() const;

    const std::string& name(std::size_t i) const { return entries_[i].name; }
    Tensor& value(std::size_t i) { return entries_[i].value; }
    const Tensor& value(std::size_t i) const { return entries_[i].value; }
    Tensor& grad(std::size_t i) { return entries_[i].grad; }
    const Tensor& grad(std::size_t i) const { return entries_[i].grad; }

    void zero_grads();

    /// Index of a parameter by name; throws if absent.
    std::size_t index_of(const std::string& name) const;

private:
    struct Entry {
        std::string name;
        Tensor value;
        Tensor grad;
    };
    std::vector<Entry> entries_;
};

/// Handle to a node on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

enum class Activation { Relu, LeakyRelu, Sigmoid, Tanh };

/// Reverse-mode gradient tape over a fixed set of primitive operations.
/// Forward calls append nodes in execution order; backward() replays the
/// recorded closures in exact reverse order and flushes leaf gradients into
/// their owning ParamStore.
class Tape {
public:
    /// Leaf that never receives a gradient entry in any registry.
    Var constant(Tensor v);

    /// Leaf bound to store parameter i. When trainable is false the value is
    /// used but the store receives no gradient (frozen-network semantics).
    Var param(ParamStore& store, std::size_t i, bool trainable = true);

    // out[r,j] = sum_k x[r,k] * w[k,j] + c[j]
    Var affine(Var x, Var w, Var c);
    Var activation(Var x, Activation kind);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, double s);
    Var concat_cols(Var a, Var b);
    Var clamp(Var x, double lo, double hi);
    /// Mean over all entries -> scalar.
    Var mean_all(Var x);
    /// Per-row 0.5 * sum_j (mu^2 + exp(logvar) - 1 - logvar): KL to N(0, I).
    Var gaussian_kl_std_normal(Var mu, Var logvar);
    /// mu + exp(0.5 * logvar) * eps, elementwise.
    Var reparam_sample(Var mu, Var logvar, Var eps);
    /// Per-row summed binary cross-entropy from logits, stable form
    /// max(l,0) - l*t + log1p(exp(-|l|)). Targets must lie in [0,1] and are
    /// treated as constants.
    Var bernoulli_ce_with_logits(Var logits, Var targets);
    /// Per-row 0.5 * sum_j (mean - target)^2 + 0.5 * D * log(2*pi):
    /// unit-variance Gaussian negative log likelihood.
    Var gaussian_nll(Var mean, Var targets);
    /// Per-column batch standardization: (x - mean) / sqrt(var + eps) with
    /// statistics over the batch dimension; fully differentiable.
    Var standardize_cols(Var x, double eps = 1e-8);
    /// Per-row 2-class softmax cross-entropy; labels[r] in {0, 1}.
    Var softmax_ce_two_class(Var logits, std::vector<int> labels);
    /// Mean over rows of (l[r,0] - l[r,1]) -> scalar.
    Var mean_col_diff(Var logits);

    const Tensor& value(Var v) const;
    const Tensor& grad(Var v) const;

    std::size_t node_count() const { return nodes_.size(); }

    /// Reverse pass from a scalar loss. Zeroes grads of every store touched
    /// by trainable leaves first, so unused parameters end at exactly zero.
    void backward(Var loss);

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back; // empty for leaves
    };

    Var push(Tensor value, std::function<void()> back = {});
    Tensor& grad_mut(Var v) { return nodes_[static_cast<std::size_t>(v.id)].grad; }
    const Tensor& val(Var v) const { return nodes_[static_cast<std::size_t>(v.id)].value; }
    void check(Var v) const;

    std::vector<Node> nodes_;
    struct Binding {
        int node;
        ParamStore* store;
        std::size_t index;
    };
    std::vector<Binding> bindings_;
};

/// Central-difference validation of backward(): perturbs every coordinate of
/// every parameter in `store` by +/-h, rebuilds the loss via `build`, and
/// returns max over coordinates of |analytic - numeric| /
/// max(1e-8, |analytic| + |numeric|).
double finite_diff_check(ParamStore& store, const std::function<Var(Tape&)>& build, double h = 1e-3);

} // namespace ffr
