#include "scgan/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "scgan/kernels.hpp"
#include "scgan/serialize.hpp"

namespace scgan {

using nlohmann::json;

json MetricReport::to_json() const {
  json j{{"metric", metric},
         {"value", value},
         {"seed", seed},
         {"config", config_snapshot},
         {"config_hash", config_hash}};
  j["uncertainty"] = std::isnan(uncertainty) ? json(nullptr) : json(uncertainty);
  if (!extractor_hash.empty()) j["extractor_hash"] = extractor_hash;
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

void MetricReport::write(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw InvalidArgument("cannot write metric report: " + path);
  f << to_json().dump(2) << "\n";
}

// -------------------------- Parzen log-likelihood ---------------------------

std::vector<double> ParzenConfig::resolved_grid() const {
  if (!sigma_grid.empty()) return sigma_grid;
  std::vector<double> grid(20);
  const double lo = std::log(0.01), hi = std::log(1.0);
  for (int i = 0; i < 20; ++i)
    grid[static_cast<size_t>(i)] = std::exp(lo + (hi - lo) * i / 19.0);
  return grid;
}

void ParzenConfig::validate() const {
  for (double s : sigma_grid)
    require(s > 0, "sigma grid entries must be positive");
  require(validation_fraction > 0 && validation_fraction < 1,
          "validation fraction must be in (0,1)");
  require(sample_count >= 1, "sample count must be >= 1");
}

namespace {

// Mean log-likelihood rows of `points` under the Gaussian KDE centered on
// `centers` with bandwidth sigma. sqdist is [rows x centers], precomputed.
std::vector<double> kde_rows(const Tensor& sqdist, int dim, double sigma) {
  const int rows = sqdist.dim(0), n = sqdist.dim(1);
  Tensor expo({rows, n});
  const double inv = -0.5 / (sigma * sigma);
  for (int64_t i = 0; i < sqdist.size(); ++i) expo[i] = sqdist[i] * inv;
  Tensor lse({rows});
  kernels::logsumexp_rows(expo.ptr(), lse.ptr(), rows, n);
  const double norm =
      -std::log(static_cast<double>(n)) -
      0.5 * dim * std::log(2.0 * M_PI * sigma * sigma);
  std::vector<double> out(static_cast<size_t>(rows));
  for (int i = 0; i < rows; ++i) out[static_cast<size_t>(i)] = lse[i] + norm;
  return out;
}

Tensor rows_subset(const Tensor& m, std::span<const int> idx) {
  Tensor out({static_cast<int>(idx.size()), m.dim(1)});
  for (size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.ptr() + i * m.dim(1),
                m.ptr() + static_cast<size_t>(idx[i]) * m.dim(1),
                sizeof(double) * m.dim(1));
  return out;
}

}  // namespace

MetricReport parzen_loglik(const Tensor& generated, const Tensor& test,
                           const ParzenConfig& cfg) {
  cfg.validate();
  require(generated.ndim() == 2 && test.ndim() == 2, "parzen expects 2-D matrices");
  require(generated.dim(0) >= 1, "parzen requires at least one generated sample");
  require(test.dim(0) >= 1, "parzen requires at least one test sample");
  require(generated.dim(1) == test.dim(1), "parzen feature dimensions differ");
  const int dim = generated.dim(1);
  const int m = test.dim(0);
  const std::vector<double> grid = cfg.resolved_grid();

  std::vector<int> order(static_cast<size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  double sigma = grid[0];
  std::vector<int> eval_idx = order;

  if (grid.size() > 1) {
    Rng rng(cfg.seed);
    rng.shuffle(order);
    int n_val = static_cast<int>(std::lround(cfg.validation_fraction * m));
    n_val = std::clamp(n_val, 1, m - 1);
    const std::vector<int> val_idx(order.begin(), order.begin() + n_val);
    eval_idx.assign(order.begin() + n_val, order.end());

    const Tensor val = rows_subset(test, val_idx);
    Tensor sqd({val.dim(0), generated.dim(0)});
    kernels::sqdist_matrix(val.ptr(), generated.ptr(), sqd.ptr(), val.dim(0),
                           generated.dim(0), dim);
    double best = -std::numeric_limits<double>::infinity();
    bool any_finite = false;
    for (double s : grid) {
      const std::vector<double> ll = kde_rows(sqd, dim, s);
      const double mean =
          std::accumulate(ll.begin(), ll.end(), 0.0) / static_cast<double>(ll.size());
      if (std::isfinite(mean)) {
        any_finite = true;
        if (mean > best) {
          best = mean;
          sigma = s;
        }
      }
    }
    if (!any_finite)
      throw NumericalError(
          "parzen: validation likelihood underflowed for every sigma in the grid");
  }

  const Tensor eval = rows_subset(test, eval_idx);
  Tensor sqd({eval.dim(0), generated.dim(0)});
  kernels::sqdist_matrix(eval.ptr(), generated.ptr(), sqd.ptr(), eval.dim(0),
                         generated.dim(0), dim);
  const std::vector<double> ll = kde_rows(sqd, dim, sigma);
  const double n = static_cast<double>(ll.size());
  const double mean = std::accumulate(ll.begin(), ll.end(), 0.0) / n;
  if (!std::isfinite(mean))
    throw NumericalError("parzen: evaluation log-likelihood is not finite");
  double sem = std::nan("");
  if (ll.size() > 1) {
    double var = 0.0;
    for (double v : ll) var += (v - mean) * (v - mean);
    var /= (n - 1.0);
    sem = std::sqrt(var / n);
  }

  MetricReport rep;
  rep.metric = "parzen_loglik";
  rep.value = mean;
  rep.uncertainty = sem;
  rep.seed = cfg.seed;
  rep.config_snapshot = json{{"sample_count", cfg.sample_count},
                             {"sigma", sigma},
                             {"sigma_grid_size", grid.size()},
                             {"validation_fraction", cfg.validation_fraction},
                             {"eval_points", ll.size()}};
  rep.config_hash = sha256_hex(rep.config_snapshot.dump());
  return rep;
}

MetricReport parzen_loglik(const ImageBatch& generated, const ImageBatch& test,
                           const ParzenConfig& cfg) {
  const auto flatten = [](const ImageBatch& b) {
    return b.pixels.reshaped(
        {b.batch(), static_cast<int>(b.pixels.size() / b.batch())});
  };
  return parzen_loglik(flatten(generated), flatten(test), cfg);
}

// --------------------------------- FID --------------------------------------

namespace {

Eigen::MatrixXd to_eigen(const Tensor& t) {
  require(t.ndim() == 2, "expected a matrix");
  Eigen::MatrixXd m(t.dim(0), t.dim(1));
  for (int i = 0; i < t.dim(0); ++i)
    for (int j = 0; j < t.dim(1); ++j) m(i, j) = t.at(i, j);
  return m;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success)
    throw NumericalError("fid: eigendecomposition did not converge");
  Eigen::VectorXd d = es.eigenvalues();
  for (int i = 0; i < d.size(); ++i) d(i) = std::sqrt(std::max(0.0, d(i)));
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double fid_from_moments(const Tensor& mu1, const Tensor& cov1,
                        const Tensor& mu2, const Tensor& cov2) {
  require(mu1.ndim() == 1 && mu2.ndim() == 1, "means must be vectors");
  const int d = mu1.dim(0);
  require(mu2.dim(0) == d, "fid: dimension mismatch");
  require(cov1.ndim() == 2 && cov1.dim(0) == d && cov1.dim(1) == d &&
              cov2.ndim() == 2 && cov2.dim(0) == d && cov2.dim(1) == d,
          "fid: covariance shape mismatch");

  Eigen::VectorXd dm(d);
  for (int i = 0; i < d; ++i) dm(i) = mu1[i] - mu2[i];
  const Eigen::MatrixXd s1 = to_eigen(cov1), s2 = to_eigen(cov2);

  const Eigen::MatrixXd r1 = psd_sqrt((s1 + s1.transpose()) / 2.0);
  Eigen::MatrixXd inner = r1 * s2 * r1;
  inner = (inner + inner.transpose()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(inner);
  if (es.info() != Eigen::Success)
    throw NumericalError("fid: matrix square root did not converge");
  double tr_sqrt = 0.0;
  for (int i = 0; i < d; ++i)
    tr_sqrt += std::sqrt(std::max(0.0, es.eigenvalues()(i)));

  const double v = dm.squaredNorm() + s1.trace() + s2.trace() - 2.0 * tr_sqrt;
  return std::max(0.0, v);
}

double fid(const Tensor& features_real, const Tensor& features_fake) {
  require(features_real.ndim() == 2 && features_fake.ndim() == 2,
          "fid expects feature matrices");
  require(features_real.dim(1) == features_fake.dim(1),
          "fid: feature dimensions differ");
  require(features_real.dim(0) >= 2 && features_fake.dim(0) >= 2,
          "fid needs at least 2 samples per side");
  const int d = features_real.dim(1);

  auto moments = [&](const Tensor& f, Tensor& mu, Tensor& cov) {
    const int n = f.dim(0);
    mu = Tensor({d}, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) mu[j] += f.at(i, j);
    for (int j = 0; j < d; ++j) mu[j] /= n;
    cov = Tensor({d, d}, 0.0);
    Tensor centered({n, d});
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) centered.at(i, j) = f.at(i, j) - mu[j];
    kernels::gemm_tn(centered.ptr(), centered.ptr(), cov.ptr(), d, n, d, false);
    const double scale = 1.0 / (n - 1);
    for (int64_t i = 0; i < cov.size(); ++i) cov[i] *= scale;
    for (int j = 0; j < d; ++j) cov.at(j, j) += 1e-6;  // shrinkage
  };
  Tensor mu1, cov1, mu2, cov2;
  moments(features_real, mu1, cov1);
  moments(features_fake, mu2, cov2);
  return fid_from_moments(mu1, cov1, mu2, cov2);
}

// ------------------------------ FactorVAE -----------------------------------

MetricReport factorvae_score(const Representation& representation,
                             const FactorDataset& dataset,
                             const FactorVAEConfig& cfg) {
  require(dataset.n_factors() >= 2, "factorvae needs at least 2 factors");
  require(cfg.votes >= 10, "factorvae needs a reasonable vote count");
  require(cfg.batch_per_vote >= 2, "batch per vote must be >= 2");

  MetricReport rep;
  rep.metric = "factorvae_score";
  rep.seed = cfg.seed;

  // Normalizing scales from an all-factors-varying sample.
  const ImageBatch ref =
      dataset.sample_random(cfg.norm_samples, Rng::for_step(cfg.seed, 1, 0).next());
  const Tensor r = representation(ref);
  require(r.ndim() == 2 && r.dim(0) == cfg.norm_samples,
          "representation must return one row per image");
  const int dims = r.dim(1);
  require(dims >= dataset.n_factors(),
          "representation dimension must be >= number of factors");
  std::vector<double> stddev(static_cast<size_t>(dims), 0.0);
  std::vector<bool> kept(static_cast<size_t>(dims), true);
  for (int j = 0; j < dims; ++j) {
    double mean = 0.0;
    for (int i = 0; i < r.dim(0); ++i) mean += r.at(i, j);
    mean /= r.dim(0);
    double var = 0.0;
    for (int i = 0; i < r.dim(0); ++i) {
      const double c = r.at(i, j) - mean;
      var += c * c;
    }
    var /= r.dim(0);
    stddev[static_cast<size_t>(j)] = std::sqrt(var);
    if (stddev[static_cast<size_t>(j)] < 1e-9) {
      kept[static_cast<size_t>(j)] = false;
      rep.notes.push_back("excluded zero-variance representation dimension " +
                          std::to_string(j));
    }
  }
  if (std::none_of(kept.begin(), kept.end(), [](bool b) { return b; }))
    throw NumericalError("factorvae: every representation dimension has zero variance");

  // Votes: (argmin-variance dimension, fixed factor).
  Rng vote_rng = Rng::for_step(cfg.seed, 2, 0);
  std::vector<std::pair<int, int>> votes;
  votes.reserve(static_cast<size_t>(cfg.votes));
  for (int v = 0; v < cfg.votes; ++v) {
    const int factor = vote_rng.below(dataset.n_factors());
    const int value = vote_rng.below(dataset.cardinality(factor));
    const ImageBatch batch = dataset.sample_with_fixed(
        factor, value, cfg.batch_per_vote, vote_rng.next());
    const Tensor q = representation(batch);
    int best = -1;
    double best_var = 0.0;
    for (int j = 0; j < dims; ++j) {
      if (!kept[static_cast<size_t>(j)]) continue;
      double mean = 0.0;
      for (int i = 0; i < q.dim(0); ++i) mean += q.at(i, j);
      mean /= q.dim(0);
      double var = 0.0;
      for (int i = 0; i < q.dim(0); ++i) {
        const double c = q.at(i, j) - mean;
        var += c * c;
      }
      var /= q.dim(0);
      var /= (stddev[static_cast<size_t>(j)] * stddev[static_cast<size_t>(j)]);
      if (best < 0 || var < best_var) {
        best = j;
        best_var = var;
      }
    }
    votes.emplace_back(best, factor);
  }

  const int n_hold = std::max(1, static_cast<int>(std::lround(
                                     cfg.holdout_fraction * cfg.votes)));
  const int n_train = cfg.votes - n_hold;
  require(n_train >= 1, "factorvae: no training votes left");

  // Majority table dim -> factor over the training votes.
  std::vector<std::vector<int>> counts(static_cast<size_t>(dims),
                                       std::vector<int>(
                                           static_cast<size_t>(dataset.n_factors()), 0));
  for (int v = 0; v < n_train; ++v)
    ++counts[static_cast<size_t>(votes[static_cast<size_t>(v)].first)]
            [static_cast<size_t>(votes[static_cast<size_t>(v)].second)];
  std::vector<int> majority(static_cast<size_t>(dims), 0);
  for (int j = 0; j < dims; ++j) {
    int best_f = 0;
    for (int f = 1; f < dataset.n_factors(); ++f)
      if (counts[static_cast<size_t>(j)][static_cast<size_t>(f)] >
          counts[static_cast<size_t>(j)][static_cast<size_t>(best_f)])
        best_f = f;
    majority[static_cast<size_t>(j)] = best_f;
  }
  int correct = 0;
  for (int v = n_train; v < cfg.votes; ++v)
    if (majority[static_cast<size_t>(votes[static_cast<size_t>(v)].first)] ==
        votes[static_cast<size_t>(v)].second)
      ++correct;
  rep.value = static_cast<double>(correct) / n_hold;
  rep.config_snapshot = json{{"votes", cfg.votes},
                             {"batch_per_vote", cfg.batch_per_vote},
                             {"norm_samples", cfg.norm_samples},
                             {"holdout_fraction", cfg.holdout_fraction}};
  rep.config_hash = sha256_hex(rep.config_snapshot.dump());
  return rep;
}

// --------------------------- feature extractor ------------------------------

namespace {

// Shared small CNN: two strided convs into a 128-d feature layer plus a
// linear head (classifier logits or regression outputs).
struct SmallCnn {
  Sequential features;
  Sequential head;
  int in_h = 0, in_w = 0, in_c = 0, out_dim = 0;

  SmallCnn(int c, int h, int w, int out) {
    in_c = c;
    in_h = h;
    in_w = w;
    out_dim = out;
    const int h4 = kernels::conv_out_size(kernels::conv_out_size(h, 5, 2, 2), 5, 2, 2);
    const int w4 = kernels::conv_out_size(kernels::conv_out_size(w, 5, 2, 2), 5, 2, 2);
    features.add(std::make_unique<Conv2d>("fx.conv1", c, 32, 5, 2, 2));
    features.add(std::make_unique<BatchNorm>("fx.bn1", 32));
    features.add(std::make_unique<LeakyReLU>(0.1));
    features.add(std::make_unique<Conv2d>("fx.conv2", 32, 64, 5, 2, 2));
    features.add(std::make_unique<BatchNorm>("fx.bn2", 64));
    features.add(std::make_unique<LeakyReLU>(0.1));
    features.add(std::make_unique<Reshape>(std::vector<int>{64 * h4 * w4}));
    features.add(std::make_unique<Dense>("fx.fc", 64 * h4 * w4, 128));
    features.add(std::make_unique<LeakyReLU>(0.1));
    head.add(std::make_unique<Dense>("fx.head", 128, out));
  }

  std::vector<Param*> params() {
    std::vector<Param*> out = features.params();
    for (Param* p : head.params()) out.push_back(p);
    return out;
  }

  Tensor forward(const Tensor& images, Phase phase) {
    return head.forward(features.forward(images, phase), phase);
  }
};

double softmax_xent_step(SmallCnn& net, const Tensor& images,
                         const std::vector<int>& labels, AdamOpt& opt) {
  const int batch = images.dim(0);
  const auto params = net.params();
  opt.zero_grads(params);
  Tensor logits = net.forward(images, Phase::train);
  const int k = logits.dim(1);
  Tensor dlogits({batch, k});
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    const double* row = logits.ptr() + static_cast<size_t>(b) * k;
    double mx = row[0];
    for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double lse = 0.0;
    for (int j = 0; j < k; ++j) lse += std::exp(row[j] - mx);
    lse = mx + std::log(lse);
    loss -= (row[labels[static_cast<size_t>(b)]] - lse);
    for (int j = 0; j < k; ++j) {
      const double p = std::exp(row[j] - lse);
      dlogits.at(b, j) =
          (p - (j == labels[static_cast<size_t>(b)] ? 1.0 : 0.0)) / batch;
    }
  }
  net.features.backward(net.head.backward(dlogits));
  opt.step(params);
  return loss / batch;
}

constexpr char kExtractorMagic[8] = {'S', 'C', 'G', 'A', 'N', 'F', 'X', '1'};

double accuracy_floor(const std::string& id) {
  if (id == "mnist") return 0.98;
  if (id == "fashion-mnist") return 0.88;
  if (id == "synthetic-factors") return 0.99;
  return 0.0;
}

}  // namespace

struct FeatureExtractor::Impl {
  std::unique_ptr<SmallCnn> net;
  std::string dataset_id;
  uint64_t seed = 0;
};

FeatureExtractor::FeatureExtractor() : impl_(new Impl) {}
FeatureExtractor::~FeatureExtractor() = default;

Tensor FeatureExtractor::features(const ImageBatch& images) const {
  return impl_->net->features.forward(images.pixels, Phase::eval);
}

namespace {

double classifier_accuracy(SmallCnn& net, const Dataset& ds) {
  const int n = ds.test_size();
  int correct = 0;
  for (int start = 0; start < n; start += 256) {
    const int count = std::min(256, n - start);
    std::vector<int> idx(static_cast<size_t>(count));
    std::iota(idx.begin(), idx.end(), start);
    const ImageBatch b = ds.test_batch(idx);
    const Tensor logits = net.forward(b.pixels, Phase::eval);
    for (int i = 0; i < count; ++i) {
      int arg = 0;
      for (int j = 1; j < logits.dim(1); ++j)
        if (logits.at(i, j) > logits.at(i, arg)) arg = j;
      if (arg == ds.test_labels[static_cast<size_t>(start + i)]) ++correct;
    }
  }
  return static_cast<double>(correct) / n;
}

std::string hash_params(const std::vector<Param*>& params, const json& meta) {
  std::string buf = meta.dump();
  for (const Param* p : params)
    buf.append(reinterpret_cast<const char*>(p->value.ptr()),
               p->value.size() * sizeof(double));
  return sha256_hex(buf);
}

}  // namespace

FeatureExtractor FeatureExtractor::train(const Dataset& ds, uint64_t seed) {
  FeatureExtractor fx;
  fx.impl_->dataset_id = ds.id;
  fx.impl_->seed = seed;
  fx.impl_->net = std::make_unique<SmallCnn>(ds.channels, ds.height, ds.width,
                                             ds.num_classes);
  Rng init = Rng::for_step(seed, kStreamInit, 987);
  fx.impl_->net->features.init(init);
  fx.impl_->net->head.init(init);

  AdamOpt opt(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  const int batch = 128;
  const int n = ds.train_size();
  const int steps = std::max(1, n / batch);
  const double floor = accuracy_floor(ds.id);
  const int max_epochs = 30;
  double acc = 0.0;
  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::vector<int> perm(static_cast<size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng shuffle_rng = Rng::for_step(seed, kStreamData, 7000 + epoch);
    shuffle_rng.shuffle(perm);
    for (int s = 0; s < steps; ++s) {
      std::vector<int> idx(perm.begin() + static_cast<int64_t>(s) * batch,
                           perm.begin() + std::min<int64_t>(
                                              n, static_cast<int64_t>(s + 1) * batch));
      const ImageBatch b = ds.train_batch(idx);
      std::vector<int> labels(idx.size());
      for (size_t i = 0; i < idx.size(); ++i)
        labels[i] = ds.train_labels[static_cast<size_t>(idx[i])];
      softmax_xent_step(*fx.impl_->net, b.pixels, labels, opt);
    }
    acc = classifier_accuracy(*fx.impl_->net, ds);
    if (acc >= floor + 0.003 && epoch >= 2) break;
  }
  fx.test_accuracy_ = acc;
  if (acc < floor)
    throw TrainingFailure("feature extractor accuracy " + std::to_string(acc) +
                          " below the required floor " + std::to_string(floor) +
                          " for dataset " + ds.id);
  fx.hash_ = hash_params(fx.impl_->net->params(),
                         json{{"id", ds.id}, {"seed", seed}});
  return fx;
}

void FeatureExtractor::save(const std::string& path) const {
  json header{{"id", impl_->dataset_id},
              {"seed", impl_->seed},
              {"test_accuracy", test_accuracy_},
              {"hash", hash_},
              {"in", {impl_->net->in_c, impl_->net->in_h, impl_->net->in_w}},
              {"out_dim", impl_->net->out_dim}};
  const std::string hs = header.dump();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot write extractor: " + path);
  f.write(kExtractorMagic, sizeof(kExtractorMagic));
  const uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  SmallCnn& net = *const_cast<Impl&>(*impl_).net;
  for (const Param* p : net.params())
    f.write(reinterpret_cast<const char*>(p->value.ptr()),
            static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  for (const Tensor* t : net.features.state())
    f.write(reinterpret_cast<const char*>(t->ptr()),
            static_cast<std::streamsize>(t->size() * sizeof(double)));
}

FeatureExtractor FeatureExtractor::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open extractor: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kExtractorMagic, sizeof(magic)) != 0)
    throw InvalidArgument("not an extractor file: " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  const json header = json::parse(hs);
  FeatureExtractor fx;
  fx.impl_->dataset_id = header.at("id").get<std::string>();
  fx.impl_->seed = header.at("seed").get<uint64_t>();
  fx.test_accuracy_ = header.at("test_accuracy").get<double>();
  fx.hash_ = header.at("hash").get<std::string>();
  const auto in = header.at("in").get<std::vector<int>>();
  fx.impl_->net = std::make_unique<SmallCnn>(in[0], in[1], in[2],
                                             header.at("out_dim").get<int>());
  for (Param* p : fx.impl_->net->params()) {
    f.read(reinterpret_cast<char*>(p->value.ptr()),
           static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!f) throw InvalidArgument("truncated extractor file: " + path);
  return fx;
}

FeatureExtractor FeatureExtractor::cached(const Dataset& ds, uint64_t seed,
                                          const std::string& cache_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(cache_dir);
  const std::string path =
      (fs::path(cache_dir) / ("extractor-" + ds.id + "-seed" +
                              std::to_string(seed) + ".bin")).string();
  if (fs::exists(path)) {
    FeatureExtractor fx = load(path);
    if (fx.impl_->dataset_id == ds.id && fx.impl_->seed == seed) return fx;
  }
  FeatureExtractor fx = train(ds, seed);
  fx.save(path);
  return fx;
}

Tensor raw_pixel_features(const ImageBatch& images) {
  return images.pixels.reshaped(
      {images.batch(), static_cast<int>(images.pixels.size() / images.batch())});
}

// ---------------------- GAN-side representations ----------------------------

Representation q_head_representation(ModelBundle& bundle) {
  require(bundle.arch.q_head, "bundle has no Q head");
  ModelBundle* b = &bundle;
  return [b](const ImageBatch& images) {
    return b->d->forward(images, nullptr, Phase::eval).q;
  };
}

Representation train_posthoc_encoder(ModelBundle& bundle, int samples,
                                     uint64_t seed) {
  require(samples >= 256, "posthoc encoder needs at least 256 samples");
  const ArchDescriptor& arch = bundle.arch;
  auto net = std::make_shared<SmallCnn>(arch.image_channels, arch.image_size,
                                        arch.image_size, arch.code_dim());
  Rng init = Rng::for_step(seed, kStreamInit, 991);
  net->features.init(init);
  net->head.init(init);
  AdamOpt opt(AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  const auto params = net->params();

  const int batch = 64;
  const int steps = samples / batch * 8;  // several passes over fresh samples
  NoiseSpec noise{arch.noise_dim, NoiseDist::uniform};
  for (int s = 0; s < steps; ++s) {
    const LatentBatch latent = sample_latent(
        noise, arch.code, batch, Rng::for_step(seed, kStreamEval, s).next());
    const ImageBatch fake = bundle.g->forward(latent, Phase::eval);
    opt.zero_grads(params);
    Tensor pred = net->forward(fake.pixels, Phase::train);
    Tensor dpred({batch, arch.code_dim()});
    for (int64_t i = 0; i < pred.size(); ++i)
      dpred[i] = 2.0 * (pred[i] - latent.c[i]) / batch;
    net->features.backward(net->head.backward(dpred));
    opt.step(params);
  }
  return [net](const ImageBatch& images) {
    return net->forward(images.pixels, Phase::eval);
  };
}

GeneratorFactors::GeneratorFactors(ModelBundle& bundle, NoiseSpec noise,
                                   int code_bins)
    : bundle_(bundle), noise_(noise), code_bins_(code_bins) {
  require(code_bins >= 2, "code_bins must be >= 2");
}

int GeneratorFactors::cardinality(int factor) const {
  require(factor == 0 || factor == 1, "factor index out of range");
  if (factor == 1) return 4;  // sign quadrant of (z0, z1)
  return bundle_.arch.code.kind == CodeKind::discrete
             ? bundle_.arch.code.cardinality
             : code_bins_;
}

ImageBatch GeneratorFactors::sample(int fixed_factor, int value, int count,
                                    uint64_t seed) const {
  const CodeSpec& code = bundle_.arch.code;
  LatentBatch latent = sample_latent(noise_, code, count, seed);
  Rng rng(seed ^ 0x5eedf00dull);
  if (fixed_factor == 0) {
    if (code.kind == CodeKind::discrete) {
      latent.c.fill(0.0);
      for (int i = 0; i < count; ++i) latent.c.at(i, value) = 1.0;
    } else {
      const double w = code.range_width() / code_bins_;
      const double v = code.range_lo + (value + 0.5) * w;
      for (int i = 0; i < count; ++i) latent.c.at(i, 0) = v;
    }
  } else if (fixed_factor == 1) {
    const double sx = (value & 1) ? 1.0 : -1.0;
    const double sy = (value & 2) ? 1.0 : -1.0;
    for (int i = 0; i < count; ++i) {
      latent.z.at(i, 0) = sx * std::abs(latent.z.at(i, 0));
      if (noise_.dim > 1) latent.z.at(i, 1) = sy * std::abs(latent.z.at(i, 1));
    }
  }
  (void)rng;
  return bundle_.g->forward(latent, Phase::eval);
}

ImageBatch GeneratorFactors::sample_with_fixed(int factor, int value, int count,
                                               uint64_t seed) const {
  require(value >= 0 && value < cardinality(factor), "factor value out of range");
  return sample(factor, value, count, seed);
}

ImageBatch GeneratorFactors::sample_random(int count, uint64_t seed) const {
  return sample(-1, 0, count, seed);
}

}  // namespace scgan
