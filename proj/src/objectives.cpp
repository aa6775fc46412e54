#include "ffr/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ffr {

namespace {

struct ComposeArgs {
    Var x;
    Var a;          // invalid when unused
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
    Discriminator* disc = nullptr;
    Var eps;
};

// Shared four-term composition. Terms with zero weight are skipped so the
// reduction identities (ffvae with alpha=gamma=0 vs vae, factorvae with
// gamma=0 vs vae, betavae with beta=1 vs vae) hold bitwise on shared noise.
LossGraph compose(Tape& tape, FfvaeModel& model, const ComposeArgs& args) {
    const auto& spec = model.spec();
    EncoderOutput enc = model.encode(tape, args.x);
    Var z = tape.reparam_sample(enc.mu, enc.logvar, args.eps);
    Var code = enc.b.valid() ? tape.concat_cols(z, enc.b) : z;
    Var xhat = model.decode(tape, code);

    Var recon_pe = spec.likelihood == Likelihood::Bernoulli ? tape.bernoulli_ce_with_logits(xhat, args.x)
                                                            : tape.gaussian_nll(xhat, args.x);
    Var recon = tape.mean_all(recon_pe);
    Var kl = tape.mean_all(tape.gaussian_kl_std_normal(enc.mu, enc.logvar));

    LossGraph out;
    out.code = code;
    out.values.reconstruction = tape.value(recon).item();
    Var total = recon;

    if (spec.n_b > 0 && args.a.valid()) {
        if (tape.value(args.a).cols() != spec.n_b) {
            throw std::invalid_argument("ffvae_loss: attribute width " +
                                        std::to_string(tape.value(args.a).cols()) +
                                        " does not match n_b = " + std::to_string(spec.n_b));
        }
        Var pred = tape.mean_all(tape.bernoulli_ce_with_logits(enc.b, args.a));
        out.values.predictiveness = tape.value(pred).item();
        if (args.alpha != 0.0) total = tape.add(total, tape.scale(pred, args.alpha));
    }

    if (args.gamma != 0.0) {
        if (!args.disc) throw std::invalid_argument("loss: gamma != 0 requires a discriminator");
        // The discriminator always reads batch-standardized codes: total
        // correlation is invariant to per-column affine maps, and the b
        // logits grow unbounded under large alpha.
        Var logits = args.disc->forward(tape, tape.standardize_cols(code), /*trainable=*/false);
        Var tc = tape.mean_col_diff(logits);
        out.values.tc_estimate = tape.value(tc).item();
        total = tape.add(total, tape.scale(tc, args.gamma));
    }

    out.values.dimwise_kl = tape.value(kl).item();
    total = args.beta == 1.0 ? tape.add(total, kl) : tape.add(total, tape.scale(kl, args.beta));

    out.total = total;
    out.values.total = tape.value(total).item();
    return out;
}

} // namespace

LossGraph vae_loss(Tape& tape, FfvaeModel& model, Var x, Var eps) {
    ComposeArgs args;
    args.x = x;
    args.eps = eps;
    return compose(tape, model, args);
}

LossGraph betavae_loss(Tape& tape, FfvaeModel& model, Var x, double beta, Var eps) {
    if (beta < 1.0) throw std::invalid_argument("betavae_loss: beta must be >= 1");
    ComposeArgs args;
    args.x = x;
    args.beta = beta;
    args.eps = eps;
    return compose(tape, model, args);
}

LossGraph cvae_loss(Tape& tape, FfvaeModel& model, Var x, Var a, double alpha, Var eps) {
    ComposeArgs args;
    args.x = x;
    args.a = a;
    args.alpha = alpha;
    args.eps = eps;
    return compose(tape, model, args);
}

LossGraph factorvae_loss(Tape& tape, FfvaeModel& model, Discriminator& disc, Var x, double gamma, Var eps) {
    if (gamma < 0.0) throw std::invalid_argument("factorvae_loss: gamma must be >= 0");
    ComposeArgs args;
    args.x = x;
    args.gamma = gamma;
    args.disc = &disc;
    args.eps = eps;
    return compose(tape, model, args);
}

LossGraph ffvae_loss(Tape& tape, FfvaeModel& model, Discriminator* disc, Var x, Var a, double alpha,
                     double gamma, Var eps) {
    if (alpha < 0.0 || gamma < 0.0) throw std::invalid_argument("ffvae_loss: weights must be >= 0");
    ComposeArgs args;
    args.x = x;
    args.a = a;
    args.alpha = alpha;
    args.gamma = gamma;
    args.disc = disc;
    args.eps = eps;
    return compose(tape, model, args);
}

Tensor shuffle_product_of_marginals(const Tensor& zb, std::size_t n_z, std::size_t n_b, Rng& rng) {
    if (zb.rank() != 2 || zb.cols() != n_z + n_b) {
        throw std::invalid_argument("shuffle: expected [batch, n_z + n_b] input");
    }
    const std::size_t batch = zb.rows();
    if (batch < 2) throw std::invalid_argument("shuffle: batch must be >= 2");

    Tensor out({batch, zb.cols()});
    std::vector<std::size_t> perm(batch);
    const std::size_t subspaces = (n_z > 0 ? 1 : 0) + n_b;
    std::size_t col = 0;
    for (std::size_t s = 0; s < subspaces; ++s) {
        const std::size_t width = (s == 0 && n_z > 0) ? n_z : 1;
        for (std::size_t i = 0; i < batch; ++i) perm[i] = i;
        rng.shuffle(perm);
        for (std::size_t r = 0; r < batch; ++r) {
            const std::size_t src = perm[r];
            for (std::size_t j = 0; j < width; ++j) out.at(r, col + j) = zb.at(src, col + j);
        }
        col += width;
    }
    return out;
}

namespace {

// Value-level counterpart of Tape::standardize_cols.
Tensor standardize_cols_values(const Tensor& x, double eps = 1e-8) {
    const std::size_t rows = x.rows(), cols = x.cols();
    Tensor y({rows, cols});
    for (std::size_t c = 0; c < cols; ++c) {
        double s = 0.0, s2 = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            s += x.at(r, c);
            s2 += x.at(r, c) * x.at(r, c);
        }
        const double mean = s / static_cast<double>(rows);
        const double var = std::max(0.0, s2 / static_cast<double>(rows) - mean * mean);
        const double inv_sd = 1.0 / std::sqrt(var + eps);
        for (std::size_t r = 0; r < rows; ++r) y.at(r, c) = (x.at(r, c) - mean) * inv_sd;
    }
    return y;
}

} // namespace

double tc_adversarial_estimate(const Discriminator& disc, const Tensor& zb_real) {
    Tensor logits = disc.forward_values(standardize_cols_values(zb_real));
    double s = 0.0;
    for (std::size_t r = 0; r < logits.rows(); ++r) s += logits.at(r, 0) - logits.at(r, 1);
    return s / static_cast<double>(logits.rows());
}

Var discriminator_loss(Tape& tape, Discriminator& disc, const Tensor& zb_real, const Tensor& zb_fake) {
    if (zb_real.rank() != 2 || zb_fake.rank() != 2 || zb_real.cols() != zb_fake.cols()) {
        throw std::invalid_argument("discriminator_loss: real/fake column mismatch");
    }
    if (zb_real.rows() == 0 || zb_fake.rows() == 0) {
        throw std::invalid_argument("discriminator_loss: empty batch");
    }
    const std::size_t nr = zb_real.rows(), nf = zb_fake.rows(), c = zb_real.cols();
    Tensor both({nr + nf, c});
    std::copy(zb_real.data(), zb_real.data() + nr * c, both.data());
    std::copy(zb_fake.data(), zb_fake.data() + nf * c, both.data() + nr * c);
    std::vector<int> labels(nr + nf, 0);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(nr), labels.end(), 1);

    // Shuffled rows are column permutations of the real ones, so the combined
    // statistics match the real batch's and the transformation seen at
    // training time equals the one used in the encoder's TC term.
    Var in = tape.constant(standardize_cols_values(both));
    Var logits = disc.forward(tape, in, /*trainable=*/true);
    return tape.mean_all(tape.softmax_ce_two_class(logits, std::move(labels)));
}

namespace {

// log N(x | mu, var) summed over a span of columns.
double gaussian_log_density(const double* x, const double* mu, const double* logvar, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double diff = x[j] - mu[j];
        s += -0.5 * (diff * diff / std::exp(logvar[j]) + logvar[j] + 1.8378770664093454836);
    }
    return s;
}

} // namespace

double tc_minibatch_estimate(const Tensor& zb, const Tensor& mu_z, const Tensor& logvar_z, std::size_t n_z,
                             std::size_t n_b, double tau) {
    if (zb.rank() != 2 || zb.cols() != n_z + n_b) {
        throw std::invalid_argument("tc_minibatch_estimate: expected [batch, n_z + n_b] codes");
    }
    const std::size_t m = zb.rows();
    if (m < 2) throw std::invalid_argument("tc_minibatch_estimate: batch must be >= 2");
    if (n_z > 0 && (mu_z.rank() != 2 || mu_z.rows() != m || mu_z.cols() != n_z || !mu_z.same_shape(logvar_z))) {
        throw std::invalid_argument("tc_minibatch_estimate: z-head parameter shape mismatch");
    }
    const double log_m = std::log(static_cast<double>(m));
    const double log_tau2 = 2.0 * std::log(tau);

    // Per-(i, m) joint subspace log densities; column-marginal pieces reuse them.
    double total = 0.0;
    std::vector<double> lz(m), lb(m * std::max<std::size_t>(n_b, 1));
    for (std::size_t i = 0; i < m; ++i) {
        const double* zi = zb.data() + i * (n_z + n_b);
        for (std::size_t k = 0; k < m; ++k) {
            lz[k] = n_z > 0 ? gaussian_log_density(zi, mu_z.data() + k * n_z, logvar_z.data() + k * n_z, n_z)
                            : 0.0;
            for (std::size_t j = 0; j < n_b; ++j) {
                const double bkj = zb.at(k, n_z + j);
                const double diff = zi[n_z + j] - bkj;
                lb[k * n_b + j] = -0.5 * (diff * diff / (tau * tau) + log_tau2 + 1.8378770664093454836);
            }
        }
        auto logsumexp = [&](auto&& term) {
            double mx = -1e300;
            for (std::size_t k = 0; k < m; ++k) mx = std::max(mx, term(k));
            double s = 0.0;
            for (std::size_t k = 0; k < m; ++k) s += std::exp(term(k) - mx);
            return mx + std::log(s);
        };
        double joint = logsumexp([&](std::size_t k) {
            double v = lz[k];
            for (std::size_t j = 0; j < n_b; ++j) v += lb[k * n_b + j];
            return v;
        }) - log_m;
        double marg = n_z > 0 ? logsumexp([&](std::size_t k) { return lz[k]; }) - log_m : 0.0;
        for (std::size_t j = 0; j < n_b; ++j) {
            marg += logsumexp([&](std::size_t k) { return lb[k * n_b + j]; }) - log_m;
        }
        total += joint - marg;
    }
    return total / static_cast<double>(m);
}

} // namespace ffr
