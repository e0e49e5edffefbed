#pragma once

#include "dp/dataset.hpp"
#include "dp/losses.hpp"
#include "dp/model.hpp"
#include "dp/report.hpp"

#include <filesystem>
#include <fstream>
#include <optional>
#include <span>

namespace dp {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 4;
  double base_lr = 2e-4;
  int decay_start_epoch = 100;
  LossWeights weights;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;  // epochs; final checkpoint always written
  std::filesystem::path out_dir;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 10.0;  // global-norm gradient clip (NaN guard)
  std::size_t emd_exact_max_n = 256;
  double eval_tau_cm = 1.0;

  void validate() const;
};

/// Piecewise-linear schedule: base_lr until decay_start_epoch, then a linear
/// ramp hitting zero exactly at epoch == epochs.
double lr_at(int epoch, const TrainConfig& cfg);

struct StepLosses {
  double l_d = 0;
  double l_g_adv = 0;
  double cd = 0;
  double emd = 0;
  bool clipped_d = false, clipped_g = false;

  double l_g_total(const LossWeights& w) const {
    return l_g_adv + w.lambda_cf * cd + w.lambda_emd * emd;
  }
};

struct TrainLogRecord {
  int epoch = 0;
  int step = 0;  // global step index
  double lr = 0;
  double l_d = 0, l_g_adv = 0, cd = 0, emd = 0;
  long wall_ms = 0;
};

/// Append-only step log; one line per record, `#` lines for events
/// (clip firings, evaluations).
class TrainLog {
public:
  explicit TrainLog(const std::filesystem::path& path, bool append);
  void record(const TrainLogRecord& r);
  void event(const std::string& text);
  const std::vector<TrainLogRecord>& records() const { return records_; }

private:
  std::ofstream stream_;
  std::vector<TrainLogRecord> records_;
};

/// One alternating update: discriminator first (generator frozen via a
/// detached fake), then the generator against the frozen discriminator.
/// Losses are batch means. lr == 0 computes losses without changing anything.
StepLosses train_step(std::span<const SamplePair> batch, ParamStore& gen_params,
                      ParamStore& disc_params, const TrainConfig& cfg, double lr);

struct TrainResult {
  std::filesystem::path gen_checkpoint;
  std::filesystem::path disc_checkpoint;
  MetricsReport final_eval;
  int steps_run = 0;
};

/// Full training loop over the train split with per-epoch seeded shuffling,
/// checkpointing and a final test-split evaluation. `resume` picks up from
/// the newest checkpoint pair in cfg.out_dir.
TrainResult train(const TrainConfig& cfg, std::span<const SamplePair> train_split,
                  std::span<const SamplePair> test_split, bool resume = false);

/// Throws ConfigMismatch if the store's parameter names/shapes do not match
/// what the config would create.
void check_generator_params(const ParamStore& store, const GeneratorConfig& cfg);

/// Per-sample CD/EMD/F-score of generator predictions against ground truth,
/// reported in cm after denormalization.
MetricsReport evaluate(ParamStore& gen_params, const GeneratorConfig& cfg,
                       std::span<const SamplePair> split, double tau_cm,
                       std::size_t emd_exact_max_n = 256);

// --- Ablation sweep ----------------------------------------------------------

struct AblationVariant {
  std::string name;
  GeneratorConfig gen;
  DiscriminatorConfig disc;
};

/// Reference results reported for the original radar-derived dataset; printed
/// as non-binding context next to locally measured rows. F-scores are
/// fractions (published magnitudes were 1e-2).
struct ReferenceRow {
  const char* name;
  double cd_avg, cd_std, emd_avg, emd_std, f_avg, f_std;
};
std::span<const ReferenceRow> reference_block_rows();
std::span<const ReferenceRow> reference_pooling_rows();

struct AblationRow {
  std::string name;
  MetricsReport report;
};

/// Trains every variant from the same seed and evaluates on the test split.
std::vector<AblationRow> ablation_sweep(const TrainConfig& base,
                                        std::span<const AblationVariant> variants,
                                        std::span<const SamplePair> train_split,
                                        std::span<const SamplePair> test_split);

/// Variant sets mirroring the published ablations.
std::vector<AblationVariant> block_count_variants(const TrainConfig& base, bool full_set);
std::vector<AblationVariant> pooling_variants(const TrainConfig& base);

/// Table with measured rows and, where available, the published reference
/// numbers alongside.
std::string ablation_table(std::span<const AblationRow> rows,
                           std::span<const ReferenceRow> refs, const std::string& title);

}  // namespace dp
