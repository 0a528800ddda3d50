#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scgan/config.hpp"
#include "scgan/metrics.hpp"
#include "scgan/serialize.hpp"
#include "scgan/train.hpp"

namespace fs = std::filesystem;
using namespace scgan;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;

// Exclusive lock file; concurrent runs must target distinct output dirs.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) : path_((fs::path(dir) / ".lock").string()) {
    fs::create_directories(dir);
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw ConfigError("output directory is locked by another run: " + dir);
  }
  ~DirLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      ::unlink(path_.c_str());
    }
  }

 private:
  std::string path_;
  int fd_ = -1;
};

TrainConfig config_from(const std::string& path,
                        const std::vector<std::string>& overrides) {
  nlohmann::json doc = load_config_file(path);
  for (const std::string& o : overrides) apply_override(doc, o);
  return parse_train_config(doc);
}

std::string data_root_for(const std::string& id) {
  if (const char* env = std::getenv("SCGAN_DATA_ROOT"))
    return (fs::path(env) / id).string();
  return (fs::path("data") / id).string();
}

std::string cache_dir_for(const TrainConfig& cfg) {
  return (fs::path(cfg.resolved_root()) / "cache").string();
}

int cmd_train(const std::string& config_path,
              const std::vector<std::string>& overrides) {
  const TrainConfig cfg = config_from(config_path, overrides);
  if (cfg.out_dir.empty())
    throw ConfigError("run.out_dir is required for the train command");
  DirLock lock(cfg.out_dir);
  const ExperimentManifest manifest = ExperimentManifest::from_config(cfg);
  manifest.write((fs::path(cfg.out_dir) / "manifest.json").string());

  TrainResult result = train_model(cfg);
  const std::string grid_path = (fs::path(cfg.out_dir) / "samples.png").string();
  const int k = result.bundle.arch.code.kind == CodeKind::discrete
                    ? result.bundle.arch.code.cardinality
                    : 8;
  emit_sample_grid(result.bundle, GridMode::fix_c_per_column, 10, k, cfg.seed,
                   grid_path);
  std::cout << "training complete: " << result.log.size() << " steps\n"
            << "log: " << result.log_path << "\n"
            << "checkpoint: " << result.last_checkpoint << "\n"
            << "samples: " << grid_path << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& metric,
             const std::string& config_path,
             const std::vector<std::string>& overrides, uint64_t seed,
             const std::string& report_path) {
  ModelBundle bundle = load_checkpoint(ckpt_path);
  TrainConfig cfg;
  if (!config_path.empty()) {
    cfg = config_from(config_path, overrides);
  } else {
    cfg.dataset_id = "mnist";
    cfg.objective = bundle.objective;
    cfg.code = bundle.arch.code;
    cfg.noise.dim = bundle.arch.noise_dim;
  }
  const Dataset ds = ingest_dataset(cfg.dataset_id, cfg.resolved_root(), 0);
  const NoiseSpec noise{bundle.arch.noise_dim, NoiseDist::uniform};

  MetricReport report;
  if (metric == "parzen") {
    ParzenConfig pc;
    pc.seed = seed;
    pc.sample_count = std::min(10000, 4 * ds.test_size());
    const int batch = 100;
    Tensor gen({pc.sample_count, static_cast<int>(ds.test_images.size() /
                                                  std::max(1, ds.test_size()))});
    for (int start = 0; start < pc.sample_count; start += batch) {
      const int count = std::min(batch, pc.sample_count - start);
      const LatentBatch latent =
          sample_latent(noise, bundle.arch.code, count,
                        Rng::for_step(seed, kStreamEval, start).next());
      const ImageBatch fake = bundle.g->forward(latent, Phase::eval);
      const Tensor flat = raw_pixel_features(fake);
      std::copy(flat.data.begin(), flat.data.end(),
                gen.data.begin() + static_cast<int64_t>(start) * gen.dim(1));
    }
    const Tensor test = raw_pixel_features(
        ImageBatch(ds.test_images, ImageRange::sym));
    report = parzen_loglik(gen, test, pc);
    std::cout << "parzen_loglik: " << report.value << " ± " << report.uncertainty
              << "\n";
  } else if (metric == "fid") {
    FeatureExtractor fx = FeatureExtractor::cached(ds, 0, cache_dir_for(cfg));
    const int n = std::min(10000, ds.test_size());
    std::vector<int> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    const Tensor real_f = fx.features(ds.test_batch(idx));
    Tensor fake_f({n, real_f.dim(1)});
    const int batch = 100;
    for (int start = 0; start < n; start += batch) {
      const int count = std::min(batch, n - start);
      const LatentBatch latent =
          sample_latent(noise, bundle.arch.code, count,
                        Rng::for_step(seed, kStreamEval, start).next());
      const Tensor f = fx.features(bundle.g->forward(latent, Phase::eval));
      std::copy(f.data.begin(), f.data.end(),
                fake_f.data.begin() + static_cast<int64_t>(start) * f.dim(1));
    }
    report.metric = "fid";
    report.value = fid(real_f, fake_f);
    report.seed = seed;
    report.extractor_hash = fx.content_hash();
    report.config_snapshot = {{"samples", n}, {"extractor", "dataset-classifier"}};
    report.config_hash = sha256_hex(report.config_snapshot.dump());
    std::cout << "fid: " << report.value << " (extractor " << fx.content_hash()
              << ")\n"
              << "note: values are comparable only across runs with the same "
                 "extractor hash\n";
  } else if (metric == "factor") {
    FactorVAEConfig fc;
    fc.seed = seed;
    Representation rep;
    if (cfg.dataset_id == "synthetic-factors") {
      // metric validation path: exact decoder on the synthetic dataset
      rep = [](const ImageBatch& b) {
        Tensor out({b.batch(), 2});
        for (int i = 0; i < b.batch(); ++i) {
          int shape = 0, pos = 0;
          SyntheticFactors::decode(b.image(i), &shape, &pos);
          out.at(i, 0) = shape;
          out.at(i, 1) = pos;
        }
        return out;
      };
      report = factorvae_score(rep, SyntheticFactors(), fc);
    } else {
      rep = bundle.arch.q_head ? q_head_representation(bundle)
                               : train_posthoc_encoder(bundle, 4096, seed);
      GeneratorFactors factors(bundle, noise);
      report = factorvae_score(rep, factors, fc);
    }
    std::cout << "factorvae_score: " << report.value << "\n";
  } else {
    throw ConfigError("unknown metric: " + metric +
                      " (expected parzen, fid or factor)");
  }
  if (!report_path.empty()) {
    report.write(report_path);
    std::cout << "report: " << report_path << "\n";
  }
  return 0;
}

int cmd_grid(const std::string& ckpt_path, const std::string& mode, int rows,
             int cols, uint64_t seed, const std::string& out_path) {
  ModelBundle bundle = load_checkpoint(ckpt_path);
  GridMode gm;
  if (mode == "fix-c-per-column") {
    gm = GridMode::fix_c_per_column;
  } else if (mode == "sweep-c") {
    if (bundle.arch.code.kind != CodeKind::continuous)
      throw ConfigError("sweep mode: continuous code required");
    gm = GridMode::fix_z_per_row_sweep_c;
  } else {
    throw ConfigError("unknown grid mode: " + mode);
  }
  emit_sample_grid(bundle, gm, rows, cols, seed, out_path);
  std::cout << out_path << "\n";
  return 0;
}

int cmd_timing(const std::string& config_path,
               const std::vector<std::string>& overrides, int warmup,
               int steps) {
  const TrainConfig cfg = config_from(config_path, overrides);
  const StepTiming t = measure_step_time(cfg, warmup, steps);
  nlohmann::json j{{"total", t.total},
                   {"forward", t.forward},
                   {"sc", t.sc},
                   {"backward", t.backward},
                   {"optimizer", t.optimizer},
                   {"warmup", warmup},
                   {"measured", steps}};
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"similarity-constraint GAN toolkit"};
  app.require_subcommand(1);

  std::string config_path, ckpt_path, metric, mode = "fix-c-per-column";
  std::string out_path = "grid.png", report_path;
  std::vector<std::string> overrides;
  uint64_t seed = 0;
  int rows = 10, cols = 10, warmup = 3, steps = 15;

  CLI::App* train = app.add_subcommand("train", "train a model from a config");
  train->add_option("--config", config_path, "config JSON")->required();
  train->add_option("overrides", overrides, "key=value overrides");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  eval->add_option("--metric", metric, "parzen | fid | factor")->required();
  eval->add_option("--config", config_path, "config JSON (dataset etc.)");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--report", report_path, "write the metric report here");
  eval->add_option("overrides", overrides, "key=value overrides");

  CLI::App* grid = app.add_subcommand("grid", "emit a sample grid PNG");
  grid->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  grid->add_option("--mode", mode, "fix-c-per-column | sweep-c");
  grid->add_option("--rows", rows);
  grid->add_option("--cols", cols);
  grid->add_option("--seed", seed);
  grid->add_option("--out", out_path);

  CLI::App* timing = app.add_subcommand("timing", "measure per-step time");
  timing->add_option("--config", config_path, "config JSON")->required();
  timing->add_option("--warmup", warmup);
  timing->add_option("--steps", steps);
  timing->add_option("overrides", overrides, "key=value overrides");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, overrides);
    if (eval->parsed())
      return cmd_eval(ckpt_path, metric, config_path, overrides, seed, report_path);
    if (grid->parsed())
      return cmd_grid(ckpt_path, mode, rows, cols, seed, out_path);
    if (timing->parsed()) return cmd_timing(config_path, overrides, warmup, steps);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IngestionError& e) {
    std::cerr << "ingestion error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrainingFailure& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
