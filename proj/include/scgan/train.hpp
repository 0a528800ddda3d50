#pragma once

#include <functional>
#include <string>
#include <vector>

#include "scgan/data.hpp"
#include "scgan/metrics.hpp"
#include "scgan/models.hpp"

namespace scgan {

struct TrainConfig {
  std::string dataset_id = "mnist";
  std::string data_root;  // empty: $SCGAN_DATA_ROOT/<id> or data/<id>
  int subset = 0;         // 0 = full training split

  ObjectiveConfig objective;
  NoiseSpec noise;
  CodeSpec code;
  int base_channels = 64;
  int dense_units = 1024;
  bool batchnorm = true;

  int epochs = 25;
  int batch = 32;
  AdamConfig adam_g{2e-4, 0.5, 0.999, 1e-8};
  AdamConfig adam_d{2e-4, 0.5, 0.999, 1e-8};
  uint64_t seed = 0;
  bool stratified_codes = false;

  int log_every = 1;         // log-file cadence in steps
  int checkpoint_every = 0;  // steps; 0 = once per epoch
  std::string out_dir;       // empty = keep everything in memory
  int threads = 0;           // 0 = library default

  std::string resolved_root() const;
  ArchDescriptor arch_for(const Dataset& ds) const;
  void validate() const;
};

struct StepTiming {
  double total = 0.0;
  double forward = 0.0;
  double sc = 0.0;
  double backward = 0.0;
  double optimizer = 0.0;
};

struct StepRecord {
  int64_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double sc_value = std::nan("");
  double info_lower_bound = std::nan("");
  ContributionStats sc_stats;
  int64_t sc_pair_count = 0;
  StepTiming timing;

  nlohmann::json to_json() const;
};

struct TrainResult {
  ModelBundle bundle;
  std::vector<StepRecord> log;
  std::string log_path;
  std::string last_checkpoint;
};

// One full alternating step (D update, then G update with the constraint).
StepRecord train_step(ModelBundle& bundle, const Dataset& ds,
                      const TrainConfig& cfg);

// Advances `bundle` by n steps from bundle.step; epoch boundaries and all
// random draws are derived from (cfg.seed, step), so a resumed run is
// bit-identical to an uninterrupted one.
std::vector<StepRecord> run_steps(ModelBundle& bundle, const Dataset& ds,
                                  const TrainConfig& cfg, int64_t n_steps,
                                  const std::function<void(const StepRecord&)>&
                                      on_step = nullptr);

// Full experiment: ingest, train cfg.epochs, write logs/checkpoints under
// cfg.out_dir when set. Aborts with TrainingFailure (referencing the last
// checkpoint) if a loss turns non-finite.
TrainResult train_model(const TrainConfig& cfg);

enum class GridMode { fix_c_per_column, fix_z_per_row_sweep_c };

// Deterministic sample grid PNG. fix_c_per_column: column j uses the j-th
// code value, one z per row. fix_z_per_row_sweep_c: one z per row, slot 0 of
// a continuous code swept across columns.
void emit_sample_grid(ModelBundle& bundle, GridMode mode, int rows, int cols,
                      uint64_t seed, const std::string& path);

// Mean per-step wall time over `measured` steps after `warmup` discarded
// steps, with the forward/sc/backward/optimizer decomposition.
StepTiming measure_step_time(const TrainConfig& cfg, int warmup, int measured);

}  // namespace scgan
