#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ffr/dataset.hpp"
#include "ffr/models.hpp"
#include "ffr/objectives.hpp"

namespace ffr {

struct TrainConfig {
    std::string kind = "ffvae"; // ffvae | cvae | factorvae | betavae | vae
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;
    std::size_t n_z = 6;
    std::size_t n_b = 2;
    std::size_t batch = 64;
    std::int64_t steps = 20000;
    double lr = 0.001;
    std::uint64_t seed = 0;
    std::uint64_t split_seed = 0;
    std::string dataset;
    std::string out_dir;
    std::int64_t checkpoint_interval = 0; // 0: final checkpoint only
    std::vector<std::size_t> enc_hidden = {256, 256};
    std::vector<std::size_t> dec_hidden = {256, 256};
    std::size_t disc_width = 256;
    std::size_t disc_layers = 6;
};

nlohmann::json config_to_json(const TrainConfig& cfg);
/// Applies the keys present in `j` over `base`; unknown keys are an error.
TrainConfig config_from_json(const nlohmann::json& j, TrainConfig base = {});

/// Raised when a step produces a non-finite loss; carries the step and batch.
struct TrainAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TraceRow {
    std::int64_t step = 0;
    LossBreakdown loss;
    double disc_loss = 0.0;
};

std::string trace_to_csv(const std::vector<TraceRow>& trace);

/// Live training state: model, optional adversary, their optimizers, and the
/// step counter. Construction is deterministic in (config, dataset widths).
struct TrainState {
    FfvaeModel model;
    std::optional<Discriminator> disc;
    AdamState opt_model;
    AdamState opt_disc;
    std::int64_t step = 0;

    static TrainState init(const TrainConfig& cfg, std::size_t input_dim, Likelihood lik);
    static TrainState from_checkpoint(const Checkpoint& ckpt);
};

bool kind_uses_attributes(const std::string& kind);
bool kind_uses_discriminator(const std::string& kind, double gamma);

/// One alternating update: encoder/decoder step on the model loss, then a
/// discriminator step on the same batch's real/shuffled codes. Both sides use
/// per-step substreams of the run seed, so a run is replayable from (seed,
/// step) alone.
TraceRow train_step(TrainState& state, const Tensor& x, const Tensor& a,
                    const std::vector<std::size_t>& batch_rows, const TrainConfig& cfg, Rng step_noise,
                    Rng step_shuffle);

struct TrainResult {
    std::string checkpoint_path;
    std::vector<TraceRow> trace;
};

/// Full run: loads the dataset, trains on the 80% train split, writes
/// trace.csv, interval checkpoints and ckpt_final.ffckpt under cfg.out_dir.
/// With `resume_from`, continues a checkpointed run to cfg.steps.
TrainResult train(const TrainConfig& cfg, const std::optional<std::string>& resume_from = {});
TrainResult train_on(const TrainConfig& cfg, const Dataset& data,
                     const std::optional<std::string>& resume_from = {});

struct SweepGrid {
    std::vector<double> alphas = {0.0};
    std::vector<double> gammas = {0.0};
    std::vector<double> betas = {1.0};
    std::vector<std::uint64_t> seeds = {0};
};

struct SweepRun {
    std::string run_id;
    TrainConfig config;
    std::string status; // "ok" or "failed: <reason>"
    std::string checkpoint_path;
};

/// One run per grid point per seed, fanned out over `jobs` workers. Failures
/// are recorded in the manifest and do not stop the sweep. Returns the runs
/// and writes <out_dir>/manifest.csv.
std::vector<SweepRun> hyperparameter_sweep(const TrainConfig& base, const SweepGrid& grid, std::size_t jobs);

} // namespace ffr
