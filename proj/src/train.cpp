#include "scgan/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "scgan/kernels.hpp"
#include "scgan/png.hpp"
#include "scgan/serialize.hpp"

namespace scgan {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

std::string TrainConfig::resolved_root() const {
  if (!data_root.empty()) return data_root;
  if (const char* env = std::getenv("SCGAN_DATA_ROOT"))
    return (fs::path(env) / dataset_id).string();
  return (fs::path("data") / dataset_id).string();
}

ArchDescriptor TrainConfig::arch_for(const Dataset& ds) const {
  ArchDescriptor arch;
  arch.image_size = ds.height;
  arch.image_channels = ds.channels;
  arch.noise_dim = noise.dim;
  arch.code = code;
  if (code.kind == CodeKind::discrete) {
    // match class-conditioned codes to the dataset's label space
    arch.code.cardinality = ds.num_classes;
  }
  arch.base_channels = base_channels;
  arch.dense_units = dense_units;
  arch.batchnorm = batchnorm;
  arch.conditional_d = objective.kind == ObjectiveKind::cgan;
  arch.q_head = objective.kind == ObjectiveKind::infogan;
  return arch;
}

void TrainConfig::validate() const {
  require(batch >= 2, "batch must be >= 2");
  require(epochs >= 1, "epochs must be >= 1");
  require(adam_g.lr > 0 && adam_d.lr > 0, "learning rates must be positive");
  require(log_every >= 1, "log_every must be >= 1");
  objective.validate();
  if (objective.sc)
    require(objective.sc->n1 + objective.sc->n2 <= batch ||
                objective.kind != ObjectiveKind::modified,
            "sc subsample sizes exceed the batch");
}

nlohmann::json StepRecord::to_json() const {
  nlohmann::json j{{"step", step},
                   {"d_loss", d_loss},
                   {"g_loss", g_loss},
                   {"timing",
                    {{"total", timing.total},
                     {"forward", timing.forward},
                     {"sc", timing.sc},
                     {"backward", timing.backward},
                     {"optimizer", timing.optimizer}}}};
  if (!std::isnan(sc_value)) {
    j["sc"] = sc_value;
    j["sc_pairs"] = sc_pair_count;
    j["same_pairs"] = sc_stats.same_pairs;
    j["diff_pairs"] = sc_stats.diff_pairs;
    j["ratio_diff_to_same"] = std::isnan(sc_stats.ratio_diff_to_same)
                                  ? nlohmann::json(nullptr)
                                  : nlohmann::json(sc_stats.ratio_diff_to_same);
  }
  if (!std::isnan(info_lower_bound)) j["info_lower_bound"] = info_lower_bound;
  return j;
}

// ----------------------------- training step --------------------------------

StepRecord train_step(ModelBundle& bundle, const Dataset& ds,
                      const TrainConfig& cfg) {
  const ObjectiveConfig& obj = bundle.objective;
  const bool conditional = bundle.arch.conditional_d;
  const int batch = cfg.batch;
  const int64_t step = bundle.step;
  const auto t_step0 = Clock::now();

  StepRecord rec;
  rec.step = step;

  // Batch selection: a fresh permutation per epoch, derived statelessly from
  // (seed, epoch) so resume from a checkpoint replays the identical order.
  const int steps_per_epoch = std::max(1, ds.train_size() / batch);
  const int64_t epoch = step / steps_per_epoch;
  const int64_t step_in_epoch = step % steps_per_epoch;
  std::vector<int> perm(static_cast<size_t>(ds.train_size()));
  std::iota(perm.begin(), perm.end(), 0);
  Rng perm_rng = Rng::for_step(cfg.seed, kStreamData, static_cast<uint64_t>(epoch));
  perm_rng.shuffle(perm);
  std::vector<int> idx(perm.begin() + step_in_epoch * batch,
                       perm.begin() + (step_in_epoch + 1) * batch);
  const ImageBatch real = ds.train_batch(idx);
  const Tensor real_codes = ds.label_rows(idx, true);

  StepTiming tm;

  // ---------------- D update ----------------
  const LatentBatch latent_d = sample_latent(
      cfg.noise, bundle.arch.code, batch,
      Rng::for_step(cfg.seed, kStreamLatentD, static_cast<uint64_t>(step)).next(),
      cfg.stratified_codes);

  auto t0 = Clock::now();
  const ImageBatch fake_d = bundle.g->forward(latent_d, Phase::train);
  const DiscOut d_real = bundle.d->forward(
      real, conditional ? &real_codes : nullptr, Phase::train);
  tm.forward += seconds_since(t0);

  const auto d_params = bundle.d_side_params();
  bundle.opt_d.zero_grads(d_params);

  t0 = Clock::now();
  Tensor dz_real({batch, 1});
  for (int b = 0; b < batch; ++b)
    dz_real.at(b, 0) = (d_real.probs.at(b, 0) - 1.0) / batch;
  bundle.d->backward(dz_real, nullptr);
  tm.backward += seconds_since(t0);

  t0 = Clock::now();
  const DiscOut d_fake = bundle.d->forward(
      fake_d, conditional ? &latent_d.c : nullptr, Phase::train);
  tm.forward += seconds_since(t0);

  t0 = Clock::now();
  Tensor dz_fake({batch, 1});
  for (int b = 0; b < batch; ++b)
    dz_fake.at(b, 0) = d_fake.probs.at(b, 0) / batch;
  bundle.d->backward(dz_fake, nullptr);
  tm.backward += seconds_since(t0);

  t0 = Clock::now();
  bundle.opt_d.step(d_params);
  tm.optimizer += seconds_since(t0);

  {
    std::vector<double> pr(static_cast<size_t>(batch)), pf(static_cast<size_t>(batch));
    for (int b = 0; b < batch; ++b) {
      pr[static_cast<size_t>(b)] = d_real.probs.at(b, 0);
      pf[static_cast<size_t>(b)] = d_fake.probs.at(b, 0);
    }
    rec.d_loss = -gan_value(pr, pf);
  }

  // ---------------- G update ----------------
  const LatentBatch latent_g = sample_latent(
      cfg.noise, bundle.arch.code, batch,
      Rng::for_step(cfg.seed, kStreamLatentG, static_cast<uint64_t>(step)).next(),
      cfg.stratified_codes);

  t0 = Clock::now();
  const ImageBatch fake_g = bundle.g->forward(latent_g, Phase::train);
  const DiscOut d_on_g = bundle.d->forward(
      fake_g, conditional ? &latent_g.c : nullptr, Phase::train);
  tm.forward += seconds_since(t0);

  const auto g_params = bundle.g_side_params();
  bundle.opt_g.zero_grads(g_params);
  bundle.opt_d.zero_grads(d_params);  // polluted below; D does not learn here

  double g_adv = 0.0;
  Tensor dz_g({batch, 1});
  for (int b = 0; b < batch; ++b) {
    const double p = d_on_g.probs.at(b, 0);
    const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    if (obj.literal_minimax) {
      g_adv += std::log(1.0 - pc);
      dz_g.at(b, 0) = -p / batch;
    } else {
      g_adv += -std::log(pc);
      dz_g.at(b, 0) = (p - 1.0) / batch;
    }
  }
  g_adv /= batch;
  rec.g_loss = g_adv;

  // Q head gradient (infogan): g_loss -= lambda_info * L_I
  Tensor dq;
  if (obj.kind == ObjectiveKind::infogan) {
    rec.info_lower_bound = infogan_lower_bound(d_on_g.q, latent_g);
    rec.g_loss -= obj.lambda_info * rec.info_lower_bound;
    dq = Tensor(d_on_g.q.shape);
    const int qd = d_on_g.q.dim(1);
    if (bundle.arch.code.kind == CodeKind::discrete) {
      for (int b = 0; b < batch; ++b) {
        const double* row = d_on_g.q.ptr() + static_cast<size_t>(b) * qd;
        double mx = row[0];
        for (int j = 1; j < qd; ++j) mx = std::max(mx, row[j]);
        double lse = 0.0;
        for (int j = 0; j < qd; ++j) lse += std::exp(row[j] - mx);
        lse = mx + std::log(lse);
        const int cls = latent_g.class_of(b);
        for (int j = 0; j < qd; ++j) {
          const double p = std::exp(row[j] - lse);
          dq.at(b, j) = obj.lambda_info * (p - (j == cls ? 1.0 : 0.0)) / batch;
        }
      }
    } else {
      for (int b = 0; b < batch; ++b)
        for (int j = 0; j < qd; ++j)
          dq.at(b, j) = obj.lambda_info *
                        (d_on_g.q.at(b, j) - latent_g.c.at(b, j)) / batch;
    }
  }

  // Adversarial gradient w.r.t. the generated images.
  t0 = Clock::now();
  Tensor dimages = bundle.d->backward(dz_g, dq.size() ? &dq : nullptr);
  tm.backward += seconds_since(t0);

  // Similarity constraint: enters only the generator's loss.
  if (obj.kind == ObjectiveKind::scgan || obj.kind == ObjectiveKind::modified) {
    t0 = Clock::now();
    const SCConfig& sc_cfg = *obj.sc;
    SCResult sc;
    if (obj.kind == ObjectiveKind::scgan) {
      Tensor dsc(fake_g.pixels.shape, 0.0);
      sc = sc_original(fake_g, latent_g, sc_cfg, &dsc);
      for (int64_t i = 0; i < dimages.size(); ++i)
        dimages[i] += sc_cfg.lambda * dsc[i];
      rec.g_loss += sc_cfg.lambda * sc.value;
    } else {
      const auto pairs = subsample_pairs(
          batch, sc_cfg.n1, sc_cfg.n2,
          Rng::for_step(cfg.seed, kStreamPairs, static_cast<uint64_t>(step)).next());
      sc = sc_modified(fake_g, latent_g, pairs, sc_cfg, &dimages);
      rec.g_loss += sc.value;
    }
    rec.sc_value = sc.value;
    rec.sc_stats = sc.stats;
    rec.sc_pair_count = sc.stats.total();
    tm.sc += seconds_since(t0);
  }

  t0 = Clock::now();
  bundle.g->backward(dimages);
  tm.backward += seconds_since(t0);

  t0 = Clock::now();
  bundle.opt_g.step(g_params);
  tm.optimizer += seconds_since(t0);

  tm.total = seconds_since(t_step0);
  rec.timing = tm;
  bundle.step = step + 1;
  return rec;
}

std::vector<StepRecord> run_steps(
    ModelBundle& bundle, const Dataset& ds, const TrainConfig& cfg,
    int64_t n_steps, const std::function<void(const StepRecord&)>& on_step) {
  std::vector<StepRecord> out;
  out.reserve(static_cast<size_t>(n_steps));
  for (int64_t i = 0; i < n_steps; ++i) {
    StepRecord rec = train_step(bundle, ds, cfg);
    if (!std::isfinite(rec.d_loss) || !std::isfinite(rec.g_loss))
      throw TrainingFailure("non-finite loss at step " + std::to_string(rec.step));
    if (on_step) on_step(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

TrainResult train_model(const TrainConfig& cfg) {
  cfg.validate();
  if (cfg.threads > 0) kernels::set_threads(cfg.threads);
  const Dataset ds = ingest_dataset(cfg.dataset_id, cfg.resolved_root(), cfg.subset);
  require(ds.train_size() >= cfg.batch,
          "training split smaller than one batch");

  TrainResult result{ModelBundle::create(cfg.arch_for(ds), cfg.objective,
                                         cfg.adam_g, cfg.adam_d, cfg.seed),
                     {}, "", ""};
  ModelBundle& bundle = result.bundle;

  const bool persist = !cfg.out_dir.empty();
  std::ofstream log_file;
  if (persist) {
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "checkpoints");
    result.log_path = (fs::path(cfg.out_dir) / "train_log.jsonl").string();
    log_file.open(result.log_path);
    if (!log_file) throw InvalidArgument("cannot open training log: " + result.log_path);
  }

  const int steps_per_epoch = std::max(1, ds.train_size() / cfg.batch);
  const int64_t total_steps = static_cast<int64_t>(steps_per_epoch) * cfg.epochs;
  const int64_t ckpt_every = cfg.checkpoint_every > 0 ? cfg.checkpoint_every
                                                      : steps_per_epoch;

  auto save_ckpt = [&](int64_t step) {
    if (!persist) return;
    const std::string path =
        (fs::path(cfg.out_dir) / "checkpoints" /
         ("step-" + std::to_string(step) + ".ckpt")).string();
    save_checkpoint(bundle, path);
    result.last_checkpoint = path;
  };

  try {
    result.log = run_steps(bundle, ds, cfg, total_steps, [&](const StepRecord& rec) {
      if (persist && (rec.step % cfg.log_every == 0 ||
                      rec.step + 1 == total_steps)) {
        log_file << rec.to_json().dump() << "\n";
      }
      if ((rec.step + 1) % ckpt_every == 0) save_ckpt(rec.step + 1);
    });
  } catch (const TrainingFailure& e) {
    std::string msg = e.what();
    if (!result.last_checkpoint.empty())
      msg += "; last good checkpoint: " + result.last_checkpoint;
    throw TrainingFailure(msg);
  }
  if (persist) {
    log_file.flush();
    save_ckpt(bundle.step);
  }
  return result;
}

// ------------------------------ sample grids --------------------------------

void emit_sample_grid(ModelBundle& bundle, GridMode mode, int rows, int cols,
                      uint64_t seed, const std::string& path) {
  require(rows >= 1 && cols >= 1, "grid dimensions must be positive");
  const ArchDescriptor& arch = bundle.arch;
  if (mode == GridMode::fix_z_per_row_sweep_c)
    require(arch.code.kind == CodeKind::continuous,
            "sweep mode requires a continuous code");

  const int n = rows * cols;
  NoiseSpec noise{arch.noise_dim, NoiseDist::uniform};
  LatentBatch latent = sample_latent(noise, arch.code, n, seed);
  // one z per row
  Rng zrng(seed);
  Tensor zrow({rows, arch.noise_dim});
  for (int64_t i = 0; i < zrow.size(); ++i) zrow[i] = zrng.uniform(-1.0, 1.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      std::memcpy(latent.z.ptr() + (static_cast<size_t>(r) * cols + c) * arch.noise_dim,
                  zrow.ptr() + static_cast<size_t>(r) * arch.noise_dim,
                  sizeof(double) * arch.noise_dim);

  if (mode == GridMode::fix_c_per_column) {
    if (arch.code.kind == CodeKind::discrete) {
      latent.c.fill(0.0);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
          latent.c.at(r * cols + c, c % arch.code.cardinality) = 1.0;
    } else {
      // distinct code per column: spread slot 0 over the range
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
          const double t = cols == 1 ? 0.5 : static_cast<double>(c) / (cols - 1);
          latent.c.at(r * cols + c, 0) =
              arch.code.range_lo + t * arch.code.range_width();
        }
    }
  } else {
    latent.c.fill(0.0);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double t = cols == 1 ? 0.0 : static_cast<double>(c) / (cols - 1);
        latent.c.at(r * cols + c, 0) =
            arch.code.range_lo + t * arch.code.range_width();
      }
  }

  const ImageBatch images = bundle.g->forward(latent, Phase::eval);
  const int pad = 2;
  const int cell_h = arch.image_size + pad, cell_w = arch.image_size + pad;
  const int out_h = rows * cell_h + pad, out_w = cols * cell_w + pad;
  const int ch = arch.image_channels;
  std::vector<uint8_t> canvas(static_cast<size_t>(out_h) * out_w * ch, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const ImageView v = images.image(r * cols + c);
      for (int y = 0; y < arch.image_size; ++y)
        for (int x = 0; x < arch.image_size; ++x)
          for (int k = 0; k < ch; ++k) {
            const double val =
                v.data[(static_cast<size_t>(k) * arch.image_size + y) *
                           arch.image_size + x];
            const int px = std::clamp(
                static_cast<int>(std::lround((val + 1.0) * 127.5)), 0, 255);
            const size_t off =
                ((static_cast<size_t>(pad + r * cell_h + y)) * out_w +
                 (pad + c * cell_w + x)) * ch + k;
            canvas[off] = static_cast<uint8_t>(px);
          }
    }
  write_png(path, canvas, out_w, out_h, ch);
}

// -------------------------------- timing ------------------------------------

StepTiming measure_step_time(const TrainConfig& cfg, int warmup, int measured) {
  require(measured >= 10, "measure_step_time requires measured >= 10");
  require(warmup >= 0, "warmup must be non-negative");
  TrainConfig c = cfg;
  c.validate();
  if (c.threads > 0) kernels::set_threads(c.threads);
  const Dataset ds = ingest_dataset(c.dataset_id, c.resolved_root(), c.subset);
  ModelBundle bundle = ModelBundle::create(c.arch_for(ds), c.objective,
                                           c.adam_g, c.adam_d, c.seed);
  for (int i = 0; i < warmup; ++i) train_step(bundle, ds, c);
  StepTiming acc;
  for (int i = 0; i < measured; ++i) {
    const StepRecord rec = train_step(bundle, ds, c);
    acc.total += rec.timing.total;
    acc.forward += rec.timing.forward;
    acc.sc += rec.timing.sc;
    acc.backward += rec.timing.backward;
    acc.optimizer += rec.timing.optimizer;
  }
  acc.total /= measured;
  acc.forward /= measured;
  acc.sc /= measured;
  acc.backward /= measured;
  acc.optimizer /= measured;
  return acc;
}

}  // namespace scgan
