// Acceptance suite: one checkable criterion per function, each printing a
// single PASS/FAIL line with the measured numbers. Exit code 0 iff every
// requested criterion passes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ffr/adam.hpp"
#include "ffr/audits.hpp"
#include "ffr/dataset.hpp"
#include "ffr/models.hpp"
#include "ffr/objectives.hpp"
#include "ffr/reports.hpp"
#include "ffr/training.hpp"

using namespace ffr;
namespace fs = std::filesystem;

namespace {

std::string g_scratch = "acceptance_scratch";
std::string g_cli; // path to the command-line binary, for the determinism criterion

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << "FAILED: " << what;
        }
    }
    void note(const std::string& what) {
        if (detail.tellp() > 0) detail << "; ";
        detail << what;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

// --------------------------------------------------------------------------
// C1: finite differences across every model/objective composition.

bool criterion1(Check& c) {
    FfvaeSpec spec;
    spec.input_dim = 6;
    spec.n_z = 2;
    spec.n_b = 2;
    spec.enc_hidden = {5};
    spec.dec_hidden = {5};

    Rng data_rng = Rng::from_seed(40);
    Tensor x({3, 6});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = data_rng.uniform() > 0.5 ? 1.0 : 0.0;
    Tensor a({3, 2});
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = data_rng.uniform() > 0.5 ? 1.0 : 0.0;
    Tensor eps = Rng::from_seed(42).normal_tensor({3, 2});

    DiscSpec ds;
    ds.input_dim = 4;
    ds.width = 4;
    ds.affine_layers = 3;

    const double h = 1e-3;
    auto fd_model = [&](const char* name, const std::function<Var(Tape&, FfvaeModel&, Discriminator&)>& loss) {
        FfvaeModel model(spec, Rng::from_seed(38));
        Discriminator disc(ds, Rng::from_seed(39));
        const double err = finite_diff_check(
            model.store(), [&](Tape& t) { return loss(t, model, disc); }, h);
        c.require(err < 1e-4, std::string(name) + " rel err " + fmt(err));
        c.note(std::string(name) + "=" + fmt(err));
    };
    fd_model("vae", [&](Tape& t, FfvaeModel& m, Discriminator&) {
        return vae_loss(t, m, t.constant(x), t.constant(eps)).total;
    });
    fd_model("betavae", [&](Tape& t, FfvaeModel& m, Discriminator&) {
        return betavae_loss(t, m, t.constant(x), 4.0, t.constant(eps)).total;
    });
    fd_model("factorvae", [&](Tape& t, FfvaeModel& m, Discriminator& d) {
        return factorvae_loss(t, m, d, t.constant(x), 1.5, t.constant(eps)).total;
    });
    fd_model("cvae", [&](Tape& t, FfvaeModel& m, Discriminator&) {
        return cvae_loss(t, m, t.constant(x), t.constant(a), 2.0, t.constant(eps)).total;
    });
    fd_model("ffvae", [&](Tape& t, FfvaeModel& m, Discriminator& d) {
        return ffvae_loss(t, m, &d, t.constant(x), t.constant(a), 2.0, 1.5, t.constant(eps)).total;
    });

    {
        FfvaeModel model(spec, Rng::from_seed(38));
        Discriminator disc(ds, Rng::from_seed(39));
        Tensor zb = Rng::from_seed(43).normal_tensor({4, 4});
        Rng shuffle_rng = Rng::from_seed(44);
        Tensor fake = shuffle_product_of_marginals(zb, 2, 2, shuffle_rng);
        const double err = finite_diff_check(
            disc.store(), [&](Tape& t) { return discriminator_loss(t, disc, zb, fake); }, h);
        c.require(err < 1e-4, "discriminator rel err " + fmt(err));
        c.note("discriminator=" + fmt(err));
    }
    {
        AuditClassifier clf(3, Rng::from_seed(10), {6, 6});
        Rng rng = Rng::from_seed(12);
        Tensor ax = rng.uniform_tensor({4, 3}, -1.0, 1.0);
        Tensor at({4, 1}, {1, 0, 1, 0});
        const double err = finite_diff_check(
            clf.store(),
            [&](Tape& t) {
                Var logits = clf.forward(t, t.constant(ax));
                return t.mean_all(t.bernoulli_ce_with_logits(logits, t.constant(at)));
            },
            h);
        c.require(err < 1e-4, "audit MLP rel err " + fmt(err));
        c.note("audit_mlp=" + fmt(err));
    }
    return c.ok;
}

// --------------------------------------------------------------------------
// C2: reduction identities, bitwise on shared noise.

bool criterion2(Check& c) {
    Rng data_rng = Rng::from_seed(7);
    Tensor x({8, 12});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = data_rng.uniform() > 0.5 ? 1.0 : 0.0;
    Tensor eps = Rng::from_seed(8).normal_tensor({8, 3});

    FfvaeSpec spec;
    spec.input_dim = 12;
    spec.n_z = 3;
    spec.n_b = 0;
    spec.enc_hidden = {8};
    spec.dec_hidden = {8};
    FfvaeModel model(spec, Rng::from_seed(9));
    DiscSpec ds;
    ds.input_dim = 3;
    ds.width = 8;
    Discriminator disc(ds, Rng::from_seed(10));

    Tape t1;
    const double vae = vae_loss(t1, model, t1.constant(x), t1.constant(eps)).values.total;
    Tape t2;
    const double ff =
        ffvae_loss(t2, model, nullptr, t2.constant(x), Var{}, 0.0, 0.0, t2.constant(eps)).values.total;
    Tape t3;
    const double b1 = betavae_loss(t3, model, t3.constant(x), 1.0, t3.constant(eps)).values.total;
    Tape t4;
    const double f0 = factorvae_loss(t4, model, disc, t4.constant(x), 0.0, t4.constant(eps)).values.total;

    c.require(ff == vae, "|ffvae(a=0,g=0,nb=0) - vae| = " + fmt(std::abs(ff - vae)));
    c.require(b1 == vae, "|betavae(1) - vae| = " + fmt(std::abs(b1 - vae)));
    c.require(f0 == vae, "|factorvae(0) - vae| = " + fmt(std::abs(f0 - vae)));
    c.note("vae=" + fmt(vae) + ", all deltas bitwise zero: " + (c.ok ? "yes" : "no"));
    return c.ok;
}

// --------------------------------------------------------------------------
// C3: TC estimator benchmark on correlated Gaussians.

Tensor gauss2(std::size_t n, double rho, Rng& rng) {
    Tensor out({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.normal(), v = rng.normal();
        out.at(i, 0) = u;
        out.at(i, 1) = rho * u + std::sqrt(1.0 - rho * rho) * v;
    }
    return out;
}

double adversarial_estimate(double rho, std::size_t steps) {
    DiscSpec ds;
    ds.input_dim = 2;
    ds.width = 64;
    ds.affine_layers = 4;
    Discriminator disc(ds, Rng::from_seed(11));
    AdamState opt(disc.store(), {});
    Rng rng = Rng::from_seed(12);
    Rng shuffle_rng = Rng::from_seed(13);
    for (std::size_t t = 0; t < steps; ++t) {
        Tensor real = gauss2(256, rho, rng);
        Tensor fake = shuffle_product_of_marginals(real, 1, 1, shuffle_rng);
        Tape tape;
        Var loss = discriminator_loss(tape, disc, real, fake);
        tape.backward(loss);
        opt.step(disc.store());
    }
    return tc_adversarial_estimate(disc, gauss2(8192, rho, rng));
}

double minibatch_estimate(double rho, std::size_t m, std::uint64_t seed) {
    Rng rng = Rng::from_seed(seed);
    Tensor zb = gauss2(m, rho, rng);
    // Bandwidth: 1.5x the 1-d Silverman rule at unit variance.
    const double h = 1.5 * 1.06 * std::pow(static_cast<double>(m), -0.2);
    Tensor mu({m, 1}), lv({m, 1});
    for (std::size_t i = 0; i < m; ++i) {
        mu.at(i, 0) = zb.at(i, 0);
        lv.at(i, 0) = 2.0 * std::log(h);
    }
    return tc_minibatch_estimate(zb, mu, lv, 1, 1, h);
}

bool criterion3(Check& c) {
    const double analytic = -0.5 * std::log(1.0 - 0.8 * 0.8); // 0.5108
    const double adv8 = adversarial_estimate(0.8, 2000);
    const double adv0 = adversarial_estimate(0.0, 2000);
    const double mb8 = minibatch_estimate(0.8, 512, 21);
    const double mb0 = minibatch_estimate(0.0, 512, 21);
    c.require(std::abs(adv8 - analytic) <= 0.15,
              "adversarial rho=0.8: " + fmt(adv8) + " vs " + fmt(analytic));
    c.require(std::abs(adv0) < 0.05, "adversarial rho=0: " + fmt(adv0));
    c.require(std::abs(mb8 - analytic) <= 0.2, "minibatch rho=0.8: " + fmt(mb8));
    c.require(std::abs(mb0) < 0.05, "minibatch rho=0: " + fmt(mb0));
    c.require(std::abs(adv8 - mb8) <= 0.25, "estimator agreement: |" + fmt(adv8) + " - " + fmt(mb8) + "|");
    c.note("analytic=" + fmt(analytic) + " adv=(" + fmt(adv8) + "," + fmt(adv0) + ") mb=(" + fmt(mb8) +
           "," + fmt(mb0) + ")");
    return c.ok;
}

// --------------------------------------------------------------------------
// C4: shuffle preserves per-column multisets; batch-2 hits all arrangements.

bool criterion4(Check& c) {
    Rng rng = Rng::from_seed(17);
    std::size_t checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        Rng t = rng.fork(static_cast<std::uint64_t>(trial));
        const std::size_t batch = 2 + t.below(31);
        const std::size_t n_z = t.below(4);
        const std::size_t n_b = n_z == 0 ? 1 + t.below(3) : t.below(3);
        Tensor zb = t.normal_tensor({batch, n_z + n_b});
        Rng perm = t.fork("perm");
        Tensor out = shuffle_product_of_marginals(zb, n_z, n_b, perm);
        for (std::size_t col = 0; col < zb.cols(); ++col) {
            std::vector<double> a, b;
            for (std::size_t r = 0; r < batch; ++r) {
                a.push_back(zb.at(r, col));
                b.push_back(out.at(r, col));
            }
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            if (a != b) {
                c.require(false, "multiset broken at trial " + std::to_string(trial));
                return c.ok;
            }
            ++checked;
        }
    }
    c.note("10000 batches, " + std::to_string(checked) + " columns preserved");

    Tensor zb({2, 2}, {1, 10, 2, 20});
    std::set<std::pair<double, double>> seen;
    for (int s = 0; s < 64; ++s) {
        Rng r = Rng::from_seed(18).fork(static_cast<std::uint64_t>(s));
        Tensor out = shuffle_product_of_marginals(zb, 1, 1, r);
        seen.insert({out.at(0, 0), out.at(0, 1)});
    }
    c.require(seen.size() == 4, "batch-2 arrangements seen: " + std::to_string(seen.size()));
    c.note("batch-2 arrangements=4");
    return c.ok;
}

// --------------------------------------------------------------------------
// C5: delta-dp and pareto oracles.

bool criterion5(Check& c) {
    auto dp1 = delta_dp({1, 1, 1, 0}, {1, 1, 0, 0});
    c.require(dp1 && *dp1 == 0.5, "enumerated dp case = " + (dp1 ? fmt(*dp1) : "undefined"));
    auto dp0 = delta_dp({1, 1, 0, 0}, {1, 0, 1, 0});
    c.require(dp0 && *dp0 == 0.0, "balanced dp case");
    auto front = pareto_front({{0.1, 0.9, 0}, {0.2, 0.8, 1}});
    c.require(front.size() == 1 && front[0].dp == 0.1, "domination case");

    Rng rng = Rng::from_seed(19);
    for (int trial = 0; trial < 1000; ++trial) {
        Rng t = rng.fork(static_cast<std::uint64_t>(trial));
        std::vector<ParetoPoint> pts;
        const std::size_t n = 1 + t.below(40);
        for (std::size_t i = 0; i < n; ++i) pts.push_back({t.below(20) / 20.0, t.below(20) / 20.0, i});
        auto f = pareto_front(pts);
        // Brute-force O(n^2): no front point dominated by any input point.
        for (const auto& p : f) {
            for (const auto& q : pts) {
                const bool dominates = q.dp <= p.dp && q.accuracy >= p.accuracy &&
                                       (q.dp < p.dp || q.accuracy > p.accuracy);
                if (dominates) {
                    c.require(false, "dominated front point in trial " + std::to_string(trial));
                    return c.ok;
                }
            }
        }
        // Every non-front point is dominated or a duplicate of a front point.
        for (const auto& q : pts) {
            bool covered = false;
            for (const auto& p : f) {
                if ((p.dp <= q.dp && p.accuracy >= q.accuracy &&
                     (p.dp < q.dp || p.accuracy > q.accuracy)) ||
                    (p.dp == q.dp && p.accuracy == q.accuracy)) {
                    covered = true;
                    break;
                }
            }
            if (!covered) {
                c.require(false, "missing point in trial " + std::to_string(trial));
                return c.ok;
            }
        }
    }
    c.note("1000 random point sets pass the brute-force check");
    return c.ok;
}

// --------------------------------------------------------------------------
// C6: MIG analytic cases.

bool criterion6(Check& c) {
    const std::size_t n = 10000;
    Rng rng = Rng::from_seed(22);
    std::vector<std::vector<int>> factors(2, std::vector<int>(n));
    Tensor copy_code({n, 3}), noise_code({n, 3}), dup_code({n, 2});
    for (std::size_t i = 0; i < n; ++i) {
        factors[0][i] = rng.below(2) ? 1 : 0;
        factors[1][i] = rng.below(2) ? 1 : 0;
        copy_code.at(i, 0) = factors[0][i];
        copy_code.at(i, 1) = factors[1][i];
        copy_code.at(i, 2) = rng.normal();
        dup_code.at(i, 0) = factors[0][i];
        dup_code.at(i, 1) = factors[0][i];
        for (std::size_t j = 0; j < 3; ++j) noise_code.at(i, j) = rng.normal();
    }
    const double m_copy = mig_from_code(copy_code, factors, 20);
    const double m_dup = mig_from_code(dup_code, {factors[0]}, 20);
    const double m_noise = mig_from_code(noise_code, factors, 20);
    c.require(std::abs(m_copy - 1.0) <= 0.05, "copy-code mig " + fmt(m_copy));
    c.require(std::abs(m_dup) <= 0.05, "duplicated-dimension mig " + fmt(m_dup));
    c.require(std::abs(m_noise) <= 0.05, "all-noise mig " + fmt(m_noise));
    c.note("copy=" + fmt(m_copy) + " dup=" + fmt(m_dup) + " noise=" + fmt(m_noise));
    return c.ok;
}

// --------------------------------------------------------------------------
// C7: DSpritesUnfair statistics against the exact weight table.

double exact_bit_correlation(const UnfairSamplingParams& p) {
    double z = 0, es = 0, ex = 0, esx = 0;
    for (int s = 0; s < 3; ++s) {
        for (int x = 0; x < 32; ++x) {
            const double is = s + p.index_base;
            const double ix = (31 - x) + p.index_base;
            const double w = std::pow(is / 3.0, p.q_shape) + std::pow(ix / 32.0, p.q_xpos);
            const double bs = s >= 1 ? 1.0 : 0.0;
            const double bx = x >= 16 ? 1.0 : 0.0;
            z += w;
            es += w * bs;
            ex += w * bx;
            esx += w * bs * bx;
        }
    }
    es /= z;
    ex /= z;
    esx /= z;
    return (esx - es * ex) / std::sqrt(es * (1 - es) * ex * (1 - ex));
}

double sampled_bit_correlation(const UnfairSamplingParams& p, std::size_t n, std::uint64_t seed) {
    auto factors = dsprites_factors();
    auto m = sample_factors_unfair(p, factors, Rng::from_seed(seed).fork("factors"), n);
    double es = 0, ex = 0, esx = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double bs = m[i * 6 + 1] >= 1 ? 1.0 : 0.0;
        const double bx = m[i * 6 + 4] >= 16 ? 1.0 : 0.0;
        es += bs;
        ex += bx;
        esx += bs * bx;
    }
    const double dn = static_cast<double>(n);
    es /= dn;
    ex /= dn;
    esx /= dn;
    return (esx - es * ex) / std::sqrt(es * (1 - es) * ex * (1 - ex));
}

bool criterion7(Check& c) {
    UnfairSamplingParams defaults;
    const double exact = exact_bit_correlation(defaults);
    const double emp = sampled_bit_correlation(defaults, 100000, 123);
    c.require(std::abs(emp - exact) <= 0.01,
              "empirical " + fmt(emp) + " vs oracle " + fmt(exact));
    c.require(emp > 0.05, "correlation " + fmt(emp) + " > 0.05");

    UnfairSamplingParams flat;
    flat.q_shape = 0.0;
    flat.q_xpos = 0.0;
    const double emp0 = sampled_bit_correlation(flat, 100000, 123);
    c.require(std::abs(emp0) < 0.02, "independent-case correlation " + fmt(emp0));
    c.note("oracle=" + fmt(exact) + " empirical=" + fmt(emp) + " q0=" + fmt(emp0));
    return c.ok;
}

// --------------------------------------------------------------------------
// C8 / C9: desk-scale replications. Both share one dataset.

std::string desk_dataset() {
    fs::create_directories(g_scratch);
    const std::string path = g_scratch + "/dsprites_unfair_20k.ffdset";
    if (!fs::exists(path)) {
        DspritesConfig cfg;
        cfg.n = 20000;
        cfg.resolution = 16;
        cfg.seed = 100;
        // Desk-scale pose space: few orientations keep 16x16 shapes learnable
        // by an MLP encoder, and a sharper weight table gives the baseline a
        // clearly measurable parity gap (exact bit correlation ~0.21).
        cfg.orientation_cardinality = 4;
        cfg.sampling.q_shape = 4.0;
        cfg.sampling.q_xpos = 3.0;
        save_dataset(generate_dsprites_unfair(cfg), path);
    }
    return path;
}

TrainConfig desk_config(const std::string& dataset, const std::string& out_dir, double alpha, double gamma,
                        std::uint64_t seed) {
    TrainConfig cfg;
    cfg.dataset = dataset;
    cfg.out_dir = out_dir;
    cfg.kind = "ffvae";
    cfg.alpha = alpha;
    cfg.gamma = gamma;
    cfg.n_z = 6;
    cfg.n_b = 2;
    cfg.batch = 64;
    cfg.steps = 20000;
    cfg.seed = seed;
    cfg.enc_hidden = {96, 96};
    cfg.dec_hidden = {96, 96};
    cfg.disc_width = 128;
    cfg.disc_layers = 6;
    return cfg;
}

struct DeskAudits {
    double fair_acc = 0.0;
    double fair_dp = 0.0;
    double pred = 0.0;
    double disent = 0.0;
    double reference = 0.0;
};

DeskAudits desk_audit(const FfvaeModel& model, const Dataset& data, std::uint64_t audit_seed,
                      bool with_reference) {
    AuditConfig cfg;
    cfg.seed = audit_seed;
    GroupExpr shape = parse_group_expr("Shape", data.attr_names);
    DeskAudits out;
    FairAuditResult fair =
        fair_classification_audit(&model, data, 0, shape, ScrubPolicy::Named, ScrubMode::Drop, cfg);
    out.fair_acc = fair.accuracy;
    out.fair_dp = fair.dp.value_or(0.0);
    out.pred = predictiveness_audit(model, data, 0, cfg);
    DisentanglementResult disent = disentanglement_audit(model, data, 0, cfg, with_reference);
    out.disent = disent.audit_loss;
    out.reference = disent.reference_loss.value_or(0.0);
    return out;
}

bool criterion8(Check& c) {
    const std::string dataset = desk_dataset();
    Dataset data = load_dataset(dataset);

    double acc_sum = 0, dp_sum = 0, pred_sum = 0, disent_sum = 0, ref_sum = 0;
    const std::vector<std::uint64_t> seeds = {0, 1, 2};
    for (std::uint64_t seed : seeds) {
        const std::string run = g_scratch + "/c8_seed" + std::to_string(seed);
        TrainConfig cfg = desk_config(dataset, run, 100.0, 10.0, seed);
        const std::string ckpt = run + "/ckpt_final.ffckpt";
        if (!fs::exists(ckpt)) train_on(cfg, data);
        Checkpoint loaded = load_checkpoint(ckpt);
        DeskAudits audits = desk_audit(loaded.model, data, seed, /*with_reference=*/seed == 0);
        acc_sum += audits.fair_acc;
        dp_sum += audits.fair_dp;
        pred_sum += audits.pred;
        disent_sum += audits.disent;
        if (seed == 0) ref_sum = audits.reference;
    }
    const double k = static_cast<double>(seeds.size());
    const double acc = acc_sum / k, dp = dp_sum / k, pred = pred_sum / k, disent = disent_sum / k;

    // Raw-input MLP baseline, averaged over the same three audit seeds.
    GroupExpr shape = parse_group_expr("Shape", data.attr_names);
    double raw_dp = 0.0, raw_acc = 0.0;
    for (std::uint64_t seed : seeds) {
        AuditConfig acfg;
        acfg.seed = seed;
        FairAuditResult raw =
            fair_classification_audit(nullptr, data, 0, shape, ScrubPolicy::None, ScrubMode::Drop, acfg);
        raw_dp += raw.dp.value_or(0.0) / k;
        raw_acc += raw.accuracy / k;
    }

    c.require(dp <= 0.5 * raw_dp,
              "(a) dp " + fmt(dp) + " <= 0.5 x raw dp " + fmt(raw_dp));
    c.require(raw_acc - acc <= 0.10,
              "(a) accuracy drop " + fmt(raw_acc - acc) + " <= 0.10");
    c.require(pred < 0.3, "(b) predictiveness ce " + fmt(pred) + " < 0.3");
    c.require(disent >= 0.8 * ref_sum,
              "(c) disentanglement ce " + fmt(disent) + " >= 0.8 x reference " + fmt(ref_sum));
    c.note("ffvae acc=" + fmt(acc) + " dp=" + fmt(dp) + " | raw acc=" + fmt(raw_acc) + " dp=" +
           fmt(raw_dp) + " | pred=" + fmt(pred) + " disent=" + fmt(disent) + " ref=" + fmt(ref_sum));
    return c.ok;
}

bool criterion9(Check& c) {
    const std::string dataset = desk_dataset();
    Dataset data = load_dataset(dataset);
    const std::vector<double> alphas = {0.0, 50.0, 200.0};
    const std::vector<std::uint64_t> seeds = {0, 1, 2};

    std::vector<double> pred(alphas.size(), 0.0), disent(alphas.size(), 0.0);
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        for (std::uint64_t seed : seeds) {
            const std::string run =
                g_scratch + "/c9_a" + std::to_string(static_cast<int>(alphas[ai])) + "_s" +
                std::to_string(seed);
            TrainConfig cfg = desk_config(dataset, run, alphas[ai], 10.0, seed);
            const std::string ckpt = run + "/ckpt_final.ffckpt";
            if (!fs::exists(ckpt)) train_on(cfg, data);
            Checkpoint loaded = load_checkpoint(ckpt);
            AuditConfig acfg;
            acfg.seed = seed;
            pred[ai] += predictiveness_audit(loaded.model, data, 0, acfg) / 3.0;
            disent[ai] += disentanglement_audit(loaded.model, data, 0, acfg, false).audit_loss / 3.0;
        }
    }
    c.require(pred[0] >= pred[1] && pred[1] >= pred[2],
              "predictiveness non-increasing: " + fmt(pred[0]) + " >= " + fmt(pred[1]) + " >= " +
                  fmt(pred[2]));
    c.require(disent[2] > disent[0],
              "disentanglement(200) " + fmt(disent[2]) + " > disentanglement(0) " + fmt(disent[0]));
    c.note("pred=[" + fmt(pred[0]) + "," + fmt(pred[1]) + "," + fmt(pred[2]) + "] disent=[" +
           fmt(disent[0]) + "," + fmt(disent[1]) + "," + fmt(disent[2]) + "]");
    return c.ok;
}

// --------------------------------------------------------------------------
// C10: determinism of emitted bytes and training traces.

int run_cli(const std::string& args) {
    if (g_cli.empty()) return -1;
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

bool criterion10(Check& c) {
    fs::create_directories(g_scratch);
    const std::string dir = g_scratch + "/c10";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Training traces identical for 100 steps across two runs.
    DspritesConfig gen_cfg;
    gen_cfg.n = 600;
    gen_cfg.seed = 5;
    const std::string data_path = dir + "/d.ffdset";
    save_dataset(generate_dsprites_unfair(gen_cfg), data_path);
    TrainConfig cfg;
    cfg.dataset = data_path;
    cfg.kind = "ffvae";
    cfg.alpha = 50.0;
    cfg.gamma = 5.0;
    cfg.n_z = 3;
    cfg.n_b = 2;
    cfg.steps = 100;
    cfg.batch = 32;
    cfg.enc_hidden = {16};
    cfg.dec_hidden = {16};
    cfg.disc_width = 8;
    cfg.disc_layers = 3;
    cfg.out_dir = dir + "/runA";
    TrainResult a = train(cfg);
    cfg.out_dir = dir + "/runB";
    TrainResult b = train(cfg);
    bool traces_equal = a.trace.size() == b.trace.size();
    for (std::size_t i = 0; traces_equal && i < a.trace.size(); ++i) {
        traces_equal = a.trace[i].loss.total == b.trace[i].loss.total &&
                       a.trace[i].disc_loss == b.trace[i].disc_loss;
    }
    c.require(traces_equal, "100-step traces identical");
    c.require(read_file(dir + "/runA/trace.csv") == read_file(dir + "/runB/trace.csv"),
              "trace.csv bytes identical");

    if (!g_cli.empty()) {
        // Full command-level byte determinism via the cli.
        const std::string d1 = dir + "/demoA", d2 = dir + "/demoB";
        const std::string common = " --n 300 --steps 30 --seed 4";
        c.require(run_cli("demo --out " + d1 + common) == 0, "demo run A");
        c.require(run_cli("demo --out " + d2 + common) == 0, "demo run B");
        for (const char* f :
             {"front.csv", "pareto.svg", "report/rollup.csv", "report/audit_vs_alpha.csv",
              "runs/ffvae_a100_g10_s4/trace.csv", "runs/ffvae_a100_g10_s4/audit_Shape.json",
              "runs/ffvae_a100_g10_s4/mig.json"}) {
            if (!c.ok) break;
            c.require(read_file(d1 + "/" + std::string(f)) == read_file(d2 + "/" + std::string(f)),
                      std::string("byte-identical ") + f);
        }
        c.note("cli artifacts byte-identical across reruns");
    } else {
        c.note("cli path not set; library-level determinism only");
    }
    return c.ok;
}

struct Criterion {
    int number;
    const char* title;
    std::function<bool(Check&)> fn;
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (arg == "--scratch" && i + 1 < argc) {
            g_scratch = argv[++i];
        } else if (arg == "--cli" && i + 1 < argc) {
            g_cli = argv[++i];
        } else {
            std::cerr << "usage: acceptance [--criterion N] [--scratch DIR] [--cli PATH]\n";
            return 2;
        }
    }
    if (g_cli.empty()) {
        if (const char* env = std::getenv("FFR_CLI")) g_cli = env;
    }

    const std::vector<Criterion> criteria = {
        {1, "gradient correctness of every model/objective composition", criterion1},
        {2, "reduction identities are bitwise exact", criterion2},
        {3, "TC estimators on the correlated-Gaussian benchmark", criterion3},
        {4, "subspace shuffle preserves marginals and randomizes order", criterion4},
        {5, "delta-dp and pareto oracles", criterion5},
        {6, "MIG analytic cases", criterion6},
        {7, "DSpritesUnfair bit-correlation statistics", criterion7},
        {8, "desk-scale fair-classification replication", criterion8},
        {9, "desk-scale predictiveness/disentanglement trend in alpha", criterion9},
        {10, "seeded determinism of traces and emitted artifacts", criterion10},
    };

    bool all_ok = true;
    for (const auto& crit : criteria) {
        if (only != 0 && crit.number != only) continue;
        Check check;
        bool ok = false;
        try {
            ok = crit.fn(check);
        } catch (const std::exception& e) {
            check.require(false, std::string("exception: ") + e.what());
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " C" << crit.number << ": " << crit.title << " ("
                  << check.detail.str() << ")" << std::endl;
        all_ok = all_ok && ok;
    }
    return all_ok ? 0 : 1;
}
