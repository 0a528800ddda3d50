#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const fs::path out = fs::temp_directory_path() / "scgan_cli_out.txt";
  const std::string cmd =
      std::string(SCGAN_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  std::ifstream f(out);
  std::string text((std::istreambuf_iterator<char>(f)), {});
  fs::remove(out);
  return {WEXITSTATUS(rc), text};
}

fs::path write_config(const fs::path& dir, const std::string& out_dir) {
  fs::create_directories(dir);
  nlohmann::json doc{
      {"dataset", {{"id", "synthetic-factors"}}},
      {"model",
       {{"noise_dim", 8},
        {"code", {{"kind", "discrete"}, {"cardinality", 4}}},
        {"base_channels", 8},
        {"dense_units", 32}}},
      {"objective", {{"kind", "modified"}}},
      {"sc", {{"n1", 4}, {"n2", 6}}},
      {"run",
       {{"epochs", 1}, {"batch", 16}, {"seed", 3}, {"out_dir", out_dir}}}};
  const fs::path p = dir / "config.json";
  std::ofstream(p) << doc.dump(2);
  return p;
}

}  // namespace

TEST_CASE("cli train: manifest, log, checkpoint, samples; then grid and eval") {
  const fs::path base = fs::temp_directory_path() / "scgan_cli_test";
  fs::remove_all(base);
  const fs::path run_dir = base / "run";
  const fs::path cfg = write_config(base, run_dir.string());

  const RunResult train = run_cli("train --config " + cfg.string());
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(run_dir / "manifest.json"));
  CHECK(fs::exists(run_dir / "train_log.jsonl"));
  CHECK(fs::exists(run_dir / "samples.png"));
  const fs::path ckpt = run_dir / "checkpoints" / "step-36.ckpt";
  CHECK(fs::exists(ckpt));

  // manifest written with the resolved snapshot + hash
  const auto manifest =
      nlohmann::json::parse(std::ifstream(run_dir / "manifest.json"));
  CHECK(manifest.contains("config_hash"));
  CHECK(manifest.at("config").at("sc").at("n1").get<int>() == 4);

  // an override changes the manifest hash
  const fs::path run2 = base / "run2";
  const RunResult train2 = run_cli("train --config " + cfg.string() +
                                   " run.out_dir=" + run2.string() +
                                   " sc.lambda1=2.0");
  CHECK(train2.exit_code == 0);
  const auto manifest2 =
      nlohmann::json::parse(std::ifstream(run2 / "manifest.json"));
  CHECK(manifest.at("config_hash").get<std::string>() !=
        manifest2.at("config_hash").get<std::string>());

  // unknown key: exit 2 naming it
  const RunResult bad = run_cli("train --config " + cfg.string() +
                                " run.out_dir=" + (base / "run3").string() +
                                " sc.lamda1=2.0");
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("sc.lamda1") != std::string::npos);

  // grid determinism through the CLI
  const fs::path g1 = base / "g1.png", g2 = base / "g2.png";
  CHECK(run_cli("grid --checkpoint " + ckpt.string() + " --rows 3 --cols 4" +
                " --seed 9 --out " + g1.string()).exit_code == 0);
  CHECK(run_cli("grid --checkpoint " + ckpt.string() + " --rows 3 --cols 4" +
                " --seed 9 --out " + g2.string()).exit_code == 0);
  std::ifstream f1(g1, std::ios::binary), f2(g2, std::ios::binary);
  const std::string b1((std::istreambuf_iterator<char>(f1)), {});
  const std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);

  // sweep mode on a discrete checkpoint: exit 2
  const RunResult sweep = run_cli("grid --checkpoint " + ckpt.string() +
                                  " --mode sweep-c --out " +
                                  (base / "g3.png").string());
  CHECK(sweep.exit_code == 2);
  CHECK(sweep.output.find("continuous code required") != std::string::npos);

  // factor eval on the synthetic dataset prints the identity-decoder score
  const RunResult factor =
      run_cli("eval --checkpoint " + ckpt.string() +
              " --metric factor --config " + cfg.string() +
              " run.out_dir=unused --report " + (base / "factor.json").string());
  CHECK(factor.exit_code == 0);
  CHECK(factor.output.find("factorvae_score: 1") != std::string::npos);
  const auto report = nlohmann::json::parse(std::ifstream(base / "factor.json"));
  CHECK(report.at("metric").get<std::string>() == "factorvae_score");
  CHECK(report.at("value").get<double>() == 1.0);

  // parzen eval prints value +/- sem
  const RunResult parzen = run_cli("eval --checkpoint " + ckpt.string() +
                                   " --metric parzen --config " + cfg.string());
  CHECK(parzen.exit_code == 0);
  CHECK(parzen.output.find("parzen_loglik:") != std::string::npos);
  CHECK(parzen.output.find("±") != std::string::npos);

  // locked output directory: exit 2
  fs::create_directories(base / "locked");
  std::ofstream(base / "locked" / ".lock") << "";
  const RunResult locked = run_cli("train --config " + cfg.string() +
                                   " run.out_dir=" + (base / "locked").string());
  CHECK(locked.exit_code == 2);
  CHECK(locked.output.find("locked") != std::string::npos);

  // unknown metric: exit 2
  const RunResult badmetric = run_cli("eval --checkpoint " + ckpt.string() +
                                      " --metric inception --config " + cfg.string());
  CHECK(badmetric.exit_code == 2);

  fs::remove_all(base);
}
