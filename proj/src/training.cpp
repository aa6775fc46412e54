#include "ffr/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <thread>

#include "ffr/reports.hpp"

namespace ffr {

using nlohmann::json;
namespace fs = std::filesystem;

json config_to_json(const TrainConfig& cfg) {
    return {{"kind", cfg.kind},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta},
            {"gamma", cfg.gamma},
            {"n_z", cfg.n_z},
            {"n_b", cfg.n_b},
            {"batch", cfg.batch},
            {"steps", cfg.steps},
            {"lr", cfg.lr},
            {"seed", cfg.seed},
            {"split_seed", cfg.split_seed},
            {"dataset", cfg.dataset},
            {"out_dir", cfg.out_dir},
            {"checkpoint_interval", cfg.checkpoint_interval},
            {"enc_hidden", cfg.enc_hidden},
            {"dec_hidden", cfg.dec_hidden},
            {"disc_width", cfg.disc_width},
            {"disc_layers", cfg.disc_layers}};
}

TrainConfig config_from_json(const json& j, TrainConfig cfg) {
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") cfg.kind = value;
        else if (key == "alpha") cfg.alpha = value;
        else if (key == "beta") cfg.beta = value;
        else if (key == "gamma") cfg.gamma = value;
        else if (key == "n_z") cfg.n_z = value;
        else if (key == "n_b") cfg.n_b = value;
        else if (key == "batch") cfg.batch = value;
        else if (key == "steps") cfg.steps = value;
        else if (key == "lr") cfg.lr = value;
        else if (key == "seed") cfg.seed = value;
        else if (key == "split_seed") cfg.split_seed = value;
        else if (key == "dataset") cfg.dataset = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "checkpoint_interval") cfg.checkpoint_interval = value;
        else if (key == "enc_hidden") cfg.enc_hidden = value.get<std::vector<std::size_t>>();
        else if (key == "dec_hidden") cfg.dec_hidden = value.get<std::vector<std::size_t>>();
        else if (key == "disc_width") cfg.disc_width = value;
        else if (key == "disc_layers") cfg.disc_layers = value;
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return cfg;
}

bool kind_uses_attributes(const std::string& kind) { return kind == "ffvae" || kind == "cvae"; }

bool kind_uses_discriminator(const std::string& kind, double gamma) {
    return (kind == "ffvae" || kind == "factorvae") && gamma != 0.0;
}

std::string trace_to_csv(const std::vector<TraceRow>& trace) {
    std::ostringstream os;
    os << "step,recon,pred,tc,kl,total,disc_loss\n";
    for (const auto& r : trace) {
        os << r.step << ',' << format_double(r.loss.reconstruction) << ',' << format_double(r.loss.predictiveness)
           << ',' << format_double(r.loss.tc_estimate) << ',' << format_double(r.loss.dimwise_kl) << ','
           << format_double(r.loss.total) << ',' << format_double(r.disc_loss) << '\n';
    }
    return os.str();
}

TrainState TrainState::init(const TrainConfig& cfg, std::size_t input_dim, Likelihood lik) {
    static const char* kKinds[] = {"ffvae", "cvae", "factorvae", "betavae", "vae"};
    if (std::find_if(std::begin(kKinds), std::end(kKinds),
                     [&](const char* k) { return cfg.kind == k; }) == std::end(kKinds)) {
        throw std::invalid_argument("train: unknown model kind '" + cfg.kind + "'");
    }
    Rng root = Rng::from_seed(cfg.seed);
    FfvaeSpec spec;
    spec.input_dim = input_dim;
    spec.n_z = cfg.n_z;
    spec.n_b = cfg.n_b;
    spec.enc_hidden = cfg.enc_hidden;
    spec.dec_hidden = cfg.dec_hidden;
    spec.likelihood = lik;

    TrainState st;
    st.model = FfvaeModel(spec, root.fork("init"));
    AdamConfig opt;
    opt.lr = cfg.lr;
    st.opt_model = AdamState(st.model.store(), opt);
    if (kind_uses_discriminator(cfg.kind, cfg.gamma)) {
        DiscSpec ds;
        ds.input_dim = spec.n_z + spec.n_b;
        ds.width = cfg.disc_width;
        ds.affine_layers = cfg.disc_layers;
        st.disc = Discriminator(ds, root.fork("disc-init"));
        st.opt_disc = AdamState(st.disc->store(), opt);
    }
    st.step = 0;
    return st;
}

TrainState TrainState::from_checkpoint(const Checkpoint& ckpt) {
    TrainState st;
    st.model = ckpt.model;
    st.disc = ckpt.disc;
    st.opt_model = ckpt.opt_model;
    st.opt_disc = ckpt.opt_disc;
    st.step = ckpt.step;
    return st;
}

TraceRow train_step(TrainState& state, const Tensor& x, const Tensor& a,
                    const std::vector<std::size_t>& batch_rows, const TrainConfig& cfg, Rng step_noise,
                    Rng step_shuffle) {
    const bool with_disc = kind_uses_discriminator(cfg.kind, cfg.gamma);
    if (with_disc && batch_rows.size() < 2) {
        throw std::invalid_argument("train_step: adversarial objectives need batch >= 2");
    }
    Tensor xb = gather_rows(x, batch_rows);
    Tensor eps = step_noise.normal_tensor({batch_rows.size(), state.model.spec().n_z});

    Tape tape;
    Var xv = tape.constant(std::move(xb));
    Var ev = tape.constant(std::move(eps));
    LossGraph g;
    if (cfg.kind == "ffvae") {
        Var av = tape.constant(gather_rows(a, batch_rows));
        g = ffvae_loss(tape, state.model, state.disc ? &*state.disc : nullptr, xv, av, cfg.alpha, cfg.gamma,
                       ev);
    } else if (cfg.kind == "cvae") {
        Var av = tape.constant(gather_rows(a, batch_rows));
        g = cvae_loss(tape, state.model, xv, av, cfg.alpha, ev);
    } else if (cfg.kind == "factorvae") {
        g = factorvae_loss(tape, state.model, *state.disc, xv, cfg.gamma, ev);
    } else if (cfg.kind == "betavae") {
        g = betavae_loss(tape, state.model, xv, cfg.beta, ev);
    } else {
        g = vae_loss(tape, state.model, xv, ev);
    }

    const auto& v = g.values;
    if (!(std::isfinite(v.total) && std::isfinite(v.reconstruction) && std::isfinite(v.predictiveness) &&
          std::isfinite(v.tc_estimate) && std::isfinite(v.dimwise_kl))) {
        std::ostringstream os;
        os << "train_step: non-finite loss at step " << state.step << "; offending batch rows:";
        for (std::size_t i = 0; i < std::min<std::size_t>(batch_rows.size(), 8); ++i) os << ' ' << batch_rows[i];
        if (batch_rows.size() > 8) os << " ...";
        throw TrainAbort(os.str());
    }

    tape.backward(g.total);
    state.opt_model.step(state.model.store());

    TraceRow row;
    row.step = state.step;
    row.loss = v;
    if (with_disc) {
        // Detached codes from the same batch, before any discriminator update.
        Tensor zb = tape.value(g.code);
        Tensor fake =
            shuffle_product_of_marginals(zb, state.model.spec().n_z, state.model.spec().n_b, step_shuffle);
        Tape dt;
        Var dl = discriminator_loss(dt, *state.disc, zb, fake);
        row.disc_loss = dt.value(dl).item();
        if (!std::isfinite(row.disc_loss)) {
            throw TrainAbort("train_step: non-finite discriminator loss at step " +
                             std::to_string(state.step));
        }
        dt.backward(dl);
        state.opt_disc.step(state.disc->store());
    }
    ++state.step;
    return row;
}

namespace {

Checkpoint make_checkpoint(const TrainState& st, const TrainConfig& cfg, const std::string& dataset_hash) {
    Checkpoint ckpt;
    ckpt.model = st.model;
    ckpt.disc = st.disc;
    ckpt.opt_model = st.opt_model;
    ckpt.opt_disc = st.opt_disc;
    ckpt.step = st.step;
    ckpt.meta = {{"kind", cfg.kind},       {"alpha", cfg.alpha},
                 {"beta", cfg.beta},       {"gamma", cfg.gamma},
                 {"lr", cfg.lr},           {"seed", cfg.seed},
                 {"split_seed", cfg.split_seed}, {"dataset", cfg.dataset},
                 {"dataset_hash", dataset_hash}, {"batch", cfg.batch}};
    return ckpt;
}

} // namespace

TrainResult train_on(const TrainConfig& cfg, const Dataset& data,
                     const std::optional<std::string>& resume_from) {
    if (data.n() < 2) throw std::invalid_argument("train: dataset has fewer than 2 rows");
    if (kind_uses_attributes(cfg.kind) && cfg.n_b != data.A.cols()) {
        throw std::invalid_argument("train: n_b = " + std::to_string(cfg.n_b) + " but dataset carries " +
                                    std::to_string(data.A.cols()) + " sensitive attributes");
    }
    const Likelihood lik = data.x_dtype == "u1" ? Likelihood::Bernoulli : Likelihood::Gaussian;

    TrainState st = resume_from ? TrainState::from_checkpoint(load_checkpoint(*resume_from))
                                : TrainState::init(cfg, data.feature_dim(), lik);

    const std::string dataset_hash = cfg.dataset.empty() ? "" : file_hash(cfg.dataset);
    fs::create_directories(cfg.out_dir);
    write_file(cfg.out_dir + "/config.json", config_to_json(cfg).dump(2) + "\n");

    Splits split = split_indices(data.n(), cfg.split_seed);
    Rng root = Rng::from_seed(cfg.seed);
    Rng data_rng = root.fork("data");
    Rng noise_rng = root.fork("noise");
    Rng shuffle_rng = root.fork("shuffle");

    std::vector<TraceRow> trace;
    trace.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, cfg.steps - st.step)));
    std::vector<std::size_t> rows(cfg.batch);
    while (st.step < cfg.steps) {
        const auto t = static_cast<std::uint64_t>(st.step);
        Rng batch_rng = data_rng.fork(t);
        for (std::size_t i = 0; i < cfg.batch; ++i) rows[i] = split.train[batch_rng.below(split.train.size())];
        TraceRow row = train_step(st, data.X, data.A, rows, cfg, noise_rng.fork(t), shuffle_rng.fork(t));
        trace.push_back(row);
        if (cfg.checkpoint_interval > 0 && st.step % cfg.checkpoint_interval == 0 && st.step < cfg.steps) {
            save_checkpoint(cfg.out_dir + "/ckpt_" + std::to_string(st.step) + ".ffckpt",
                            make_checkpoint(st, cfg, dataset_hash));
        }
    }

    TrainResult result;
    result.checkpoint_path = cfg.out_dir + "/ckpt_final.ffckpt";
    save_checkpoint(result.checkpoint_path, make_checkpoint(st, cfg, dataset_hash));
    // A resumed run appends to the existing trace so the CSV covers every step.
    std::string prefix;
    if (resume_from && fs::exists(cfg.out_dir + "/trace.csv")) {
        CsvTable existing = csv_from_file(cfg.out_dir + "/trace.csv");
        std::ostringstream os;
        for (const auto& r : existing.rows) {
            if (std::stoll(r[0]) < (trace.empty() ? cfg.steps : trace.front().step)) {
                for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
                os << '\n';
            }
        }
        prefix = os.str();
    }
    std::string csv = trace_to_csv(trace);
    if (!prefix.empty()) {
        const auto nl = csv.find('\n');
        csv.insert(nl + 1, prefix);
    }
    write_file(cfg.out_dir + "/trace.csv", csv);
    result.trace = std::move(trace);
    return result;
}

TrainResult train(const TrainConfig& cfg, const std::optional<std::string>& resume_from) {
    if (cfg.dataset.empty()) throw std::invalid_argument("train: no dataset path configured");
    Dataset data = load_dataset(cfg.dataset);
    return train_on(cfg, data, resume_from);
}

std::vector<SweepRun> hyperparameter_sweep(const TrainConfig& base, const SweepGrid& grid, std::size_t jobs) {
    if (grid.alphas.empty() || grid.gammas.empty() || grid.betas.empty() || grid.seeds.empty()) {
        throw std::invalid_argument("sweep: empty grid");
    }
    Dataset data = load_dataset(base.dataset);
    const std::string dataset_hash = file_hash(base.dataset);

    std::vector<SweepRun> runs;
    std::size_t idx = 0;
    for (double alpha : grid.alphas) {
        for (double gamma : grid.gammas) {
            for (double beta : grid.betas) {
                for (std::uint64_t seed : grid.seeds) {
                    SweepRun r;
                    char id[32];
                    std::snprintf(id, sizeof(id), "run_%03zu", idx++);
                    r.run_id = id;
                    r.config = base;
                    r.config.alpha = alpha;
                    r.config.gamma = gamma;
                    r.config.beta = beta;
                    r.config.seed = seed;
                    r.config.out_dir = base.out_dir + "/" + r.run_id;
                    runs.push_back(std::move(r));
                }
            }
        }
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            try {
                TrainResult res = train_on(runs[i].config, data);
                runs[i].checkpoint_path = res.checkpoint_path;
                runs[i].status = "ok";
            } catch (const std::exception& e) {
                runs[i].status = std::string("failed: ") + e.what();
            }
        }
    };
    jobs = std::max<std::size_t>(1, jobs);
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j + 1 < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();

    CsvTable manifest;
    manifest.columns = {"run_id", "config_hash", "dataset_hash", "checkpoint", "status"};
    for (const auto& r : runs) {
        manifest.rows.push_back({r.run_id, content_hash(config_to_json(r.config).dump()), dataset_hash,
                                 r.checkpoint_path, r.status});
    }
    fs::create_directories(base.out_dir);
    write_file(base.out_dir + "/manifest.csv", csv_to_string(manifest));
    return runs;
}

} // namespace ffr
