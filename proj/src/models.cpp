#include "scgan/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "scgan/kernels.hpp"
#include "scgan/serialize.hpp"

namespace scgan {

using nlohmann::json;

void ArchDescriptor::validate() const {
  require(image_size >= 8 && image_size % 4 == 0,
          "image_size must be a multiple of 4 and at least 8");
  require(image_channels >= 1, "image_channels must be >= 1");
  require(noise_dim >= 1, "noise_dim must be >= 1");
  require(base_channels >= 1 && dense_units >= 1, "bad layer sizes");
  code.validate();
}

// ------------------------------ Generator ----------------------------------

Generator::Generator(const ArchDescriptor& arch, Rng& init_rng) : arch_(arch) {
  arch.validate();
  const int start = arch.image_size / 4;
  const int inner = 2 * arch.base_channels;
  const int in_dim = arch.noise_dim + arch.code_dim();
  net_.add(std::make_unique<Dense>("g.fc1", in_dim, arch.dense_units));
  if (arch.batchnorm) net_.add(std::make_unique<BatchNorm>("g.bn1", arch.dense_units));
  net_.add(std::make_unique<LeakyReLU>(0.0));  // plain ReLU
  net_.add(std::make_unique<Dense>("g.fc2", arch.dense_units, inner * start * start));
  if (arch.batchnorm)
    net_.add(std::make_unique<BatchNorm>("g.bn2", inner * start * start));
  net_.add(std::make_unique<LeakyReLU>(0.0));
  net_.add(std::make_unique<Reshape>(std::vector<int>{inner, start, start}));
  net_.add(std::make_unique<Deconv2d>("g.deconv1", inner, arch.base_channels, 4, 2, 1));
  if (arch.batchnorm)
    net_.add(std::make_unique<BatchNorm>("g.bn3", arch.base_channels));
  net_.add(std::make_unique<LeakyReLU>(0.0));
  net_.add(std::make_unique<Deconv2d>("g.deconv2", arch.base_channels,
                                      arch.image_channels, 4, 2, 1));
  net_.add(std::make_unique<Tanh>());
  net_.init(init_rng);
}

ImageBatch Generator::forward(const LatentBatch& latent, Phase phase) {
  const int batch = latent.batch();
  require(latent.z.dim(1) == arch_.noise_dim, "latent noise dim mismatch");
  require(latent.c.dim(1) == arch_.code_dim(), "latent code dim mismatch");
  Tensor in({batch, arch_.noise_dim + arch_.code_dim()});
  for (int b = 0; b < batch; ++b) {
    double* row = in.ptr() + static_cast<size_t>(b) * in.dim(1);
    std::memcpy(row, latent.z.ptr() + static_cast<size_t>(b) * arch_.noise_dim,
                sizeof(double) * arch_.noise_dim);
    std::memcpy(row + arch_.noise_dim,
                latent.c.ptr() + static_cast<size_t>(b) * arch_.code_dim(),
                sizeof(double) * arch_.code_dim());
  }
  Tensor img = net_.forward(in, phase);
  return ImageBatch(std::move(img), ImageRange::sym);
}

void Generator::backward(const Tensor& dimages) { net_.backward(dimages); }

// ---------------------------- Discriminator --------------------------------

Discriminator::Discriminator(const ArchDescriptor& arch, Rng& init_rng)
    : arch_(arch) {
  arch.validate();
  const int start = arch.image_size / 4;
  const int inner = 2 * arch.base_channels;
  const int in_ch = arch.image_channels + (arch.conditional_d ? arch.code_dim() : 0);
  trunk_.add(std::make_unique<Conv2d>("d.conv1", in_ch, arch.base_channels, 4, 2, 1));
  trunk_.add(std::make_unique<LeakyReLU>(arch.leaky_slope));
  trunk_.add(std::make_unique<Conv2d>("d.conv2", arch.base_channels, inner, 4, 2, 1));
  if (arch.batchnorm) trunk_.add(std::make_unique<BatchNorm>("d.bn1", inner));
  trunk_.add(std::make_unique<LeakyReLU>(arch.leaky_slope));
  trunk_.add(std::make_unique<Reshape>(std::vector<int>{inner * start * start}));
  trunk_.add(std::make_unique<Dense>("d.fc1", inner * start * start, arch.dense_units));
  if (arch.batchnorm) trunk_.add(std::make_unique<BatchNorm>("d.bn2", arch.dense_units));
  trunk_.add(std::make_unique<LeakyReLU>(arch.leaky_slope));
  head_.add(std::make_unique<Dense>("d.head", arch.dense_units, 1));
  if (arch.q_head) {
    qnet_.add(std::make_unique<Dense>("q.fc1", arch.dense_units, 128));
    if (arch.batchnorm) qnet_.add(std::make_unique<BatchNorm>("q.bn1", 128));
    qnet_.add(std::make_unique<LeakyReLU>(arch.leaky_slope));
    qnet_.add(std::make_unique<Dense>("q.out", 128, arch.q_out_dim()));
  }
  trunk_.init(init_rng);
  head_.init(init_rng);
  qnet_.init(init_rng);
}

DiscOut Discriminator::forward(const ImageBatch& images, const Tensor* codes,
                               Phase phase) {
  const int batch = images.batch();
  require(images.channels() == arch_.image_channels &&
              images.height() == arch_.image_size &&
              images.width() == arch_.image_size,
          "discriminator input shape mismatch");
  Tensor in;
  if (arch_.conditional_d) {
    require(codes != nullptr && codes->dim(0) == batch &&
                codes->dim(1) == arch_.code_dim(),
            "conditional discriminator requires code rows");
    const int hw = arch_.image_size * arch_.image_size;
    const int in_ch = arch_.image_channels + arch_.code_dim();
    in = Tensor({batch, in_ch, arch_.image_size, arch_.image_size});
    for (int b = 0; b < batch; ++b) {
      double* dst = in.ptr() + static_cast<size_t>(b) * in_ch * hw;
      std::memcpy(dst,
                  images.pixels.ptr() +
                      static_cast<size_t>(b) * arch_.image_channels * hw,
                  sizeof(double) * arch_.image_channels * hw);
      for (int k = 0; k < arch_.code_dim(); ++k) {
        const double v = codes->at(b, k);
        double* plane = dst + static_cast<size_t>(arch_.image_channels + k) * hw;
        for (int i = 0; i < hw; ++i) plane[i] = v;
      }
    }
  } else {
    in = images.pixels;
  }
  input_shape_ = in.shape;
  trunk_out_ = trunk_.forward(in, phase);
  DiscOut out;
  out.logits = head_.forward(trunk_out_, phase);
  out.probs = Tensor(out.logits.shape);
  kernels::sigmoid_fwd(out.logits.ptr(), out.probs.ptr(), out.logits.size());
  if (arch_.q_head) out.q = qnet_.forward(trunk_out_, phase);
  return out;
}

Tensor Discriminator::backward(const Tensor& dlogits, const Tensor* dq) {
  Tensor dt = head_.backward(dlogits);
  if (dq != nullptr) {
    require(arch_.q_head, "dq supplied but no Q head");
    Tensor dtq = qnet_.backward(*dq);
    for (int64_t i = 0; i < dt.size(); ++i) dt[i] += dtq[i];
  }
  Tensor din = trunk_.backward(dt);
  if (!arch_.conditional_d) return din;
  // strip the code planes
  const int batch = din.dim(0);
  const int hw = arch_.image_size * arch_.image_size;
  const int in_ch = din.dim(1);
  Tensor dimg({batch, arch_.image_channels, arch_.image_size, arch_.image_size});
  for (int b = 0; b < batch; ++b)
    std::memcpy(dimg.ptr() + static_cast<size_t>(b) * arch_.image_channels * hw,
                din.ptr() + static_cast<size_t>(b) * in_ch * hw,
                sizeof(double) * arch_.image_channels * hw);
  return dimg;
}

std::vector<Param*> Discriminator::trunk_params() {
  std::vector<Param*> out = trunk_.params();
  for (Param* p : head_.params()) out.push_back(p);
  return out;
}

std::vector<Param*> Discriminator::q_params() { return qnet_.params(); }

std::vector<Tensor*> Discriminator::state() {
  std::vector<Tensor*> out = trunk_.state();
  for (Tensor* t : head_.state()) out.push_back(t);
  for (Tensor* t : qnet_.state()) out.push_back(t);
  return out;
}

// ------------------------------ ModelBundle --------------------------------

ModelBundle ModelBundle::create(const ArchDescriptor& arch,
                                const ObjectiveConfig& objective,
                                const AdamConfig& adam_g,
                                const AdamConfig& adam_d, uint64_t master_seed) {
  arch.validate();
  objective.validate();
  ModelBundle b;
  b.arch = arch;
  b.objective = objective;
  b.master_seed = master_seed;
  Rng init = Rng::for_step(master_seed, kStreamInit, 0);
  b.g = std::make_unique<Generator>(arch, init);
  b.d = std::make_unique<Discriminator>(arch, init);
  b.opt_g = AdamOpt(adam_g);
  b.opt_d = AdamOpt(adam_d);
  return b;
}

std::vector<Param*> ModelBundle::g_side_params() {
  std::vector<Param*> out = g->params();
  for (Param* p : d->q_params()) out.push_back(p);
  return out;
}

std::vector<Param*> ModelBundle::d_side_params() { return d->trunk_params(); }

// ------------------------------ objectives ---------------------------------

namespace {

inline double clamped_log(double p) {
  return std::log(std::clamp(p, kProbClamp, 1.0 - kProbClamp));
}

}  // namespace

double gan_value(std::span<const double> d_real, std::span<const double> d_fake) {
  require(!d_real.empty() && !d_fake.empty(), "gan_value requires non-empty batches");
  double vr = 0.0, vf = 0.0;
  for (double p : d_real) vr += clamped_log(p);
  for (double p : d_fake) vf += clamped_log(1.0 - p);
  return vr / static_cast<double>(d_real.size()) +
         vf / static_cast<double>(d_fake.size());
}

double cgan_value(std::span<const double> d_real_given_c,
                  std::span<const double> d_fake_given_c) {
  return gan_value(d_real_given_c, d_fake_given_c);
}

double infogan_lower_bound(const Tensor& q, const LatentBatch& codes) {
  const int batch = codes.batch();
  require(q.ndim() == 2 && q.dim(0) == batch, "q parameter shape mismatch");
  if (codes.spec.kind == CodeKind::discrete) {
    if (q.dim(1) != codes.spec.cardinality)
      throw ConfigError("q logits do not match discrete code cardinality");
    double total = 0.0;
    for (int b = 0; b < batch; ++b) {
      const double* row = q.ptr() + static_cast<size_t>(b) * q.dim(1);
      double mx = row[0];
      for (int k = 1; k < q.dim(1); ++k) mx = std::max(mx, row[k]);
      double lse = 0.0;
      for (int k = 0; k < q.dim(1); ++k) lse += std::exp(row[k] - mx);
      lse = mx + std::log(lse);
      const int cls = codes.class_of(b);
      const double logp = row[cls] - lse;
      total += std::max(logp, std::log(kProbClamp));
    }
    return total / batch;
  }
  if (q.dim(1) != codes.spec.dim())
    throw ConfigError("q means do not match continuous code dimension");
  // Gaussian with fixed unit sigma: log N(c; mu, 1)
  const int d = q.dim(1);
  double total = 0.0;
  for (int b = 0; b < batch; ++b) {
    double sq = 0.0;
    for (int k = 0; k < d; ++k) {
      const double diff = codes.c.at(b, k) - q.at(b, k);
      sq += diff * diff;
    }
    total += -0.5 * d * std::log(2.0 * M_PI) - 0.5 * sq;
  }
  return total / batch;
}

double code_entropy(const CodeSpec& spec) {
  if (spec.kind == CodeKind::discrete)
    return std::log(static_cast<double>(spec.cardinality));
  return spec.dim() * std::log(spec.range_width());
}

TotalObjective total_objective(ModelBundle& bundle, const ImageBatch& real,
                               const Tensor* real_codes,
                               const LatentBatch& latent, uint64_t pair_seed) {
  bundle.objective.validate();
  const ObjectiveConfig& cfg = bundle.objective;
  const bool conditional = bundle.arch.conditional_d;
  require(real.batch() == latent.batch(),
          "real batch and latent batch sizes differ");

  const ImageBatch fake = bundle.g->forward(latent, Phase::objective_eval);
  const DiscOut d_real =
      bundle.d->forward(real, conditional ? real_codes : nullptr,
                        Phase::objective_eval);
  const DiscOut d_fake = bundle.d->forward(
      fake, conditional ? &latent.c : nullptr, Phase::objective_eval);

  TotalObjective out;
  const std::span<const double> pr{d_real.probs.ptr(),
                                   static_cast<size_t>(d_real.probs.size())};
  const std::span<const double> pf{d_fake.probs.ptr(),
                                   static_cast<size_t>(d_fake.probs.size())};
  out.d_loss = -gan_value(pr, pf);

  double g_adv = 0.0;
  for (double p : pf)
    g_adv += cfg.literal_minimax ? clamped_log(1.0 - p) : -clamped_log(p);
  g_adv /= static_cast<double>(pf.size());
  out.g_loss = g_adv;

  double mr = 0.0, mf = 0.0;
  for (double p : pr) mr += p;
  for (double p : pf) mf += p;
  out.diag.mean_d_real = mr / static_cast<double>(pr.size());
  out.diag.mean_d_fake = mf / static_cast<double>(pf.size());

  if (cfg.kind == ObjectiveKind::infogan) {
    out.diag.info_lower_bound = infogan_lower_bound(d_fake.q, latent);
    out.g_loss -= cfg.lambda_info * out.diag.info_lower_bound;
  }
  if (cfg.kind == ObjectiveKind::scgan) {
    SCResult sc = sc_original(fake, latent, *cfg.sc);
    out.diag.sc_value = sc.value;
    out.diag.sc_stats = sc.stats;
    out.diag.sc_pair_count = sc.stats.total();
    out.g_loss += cfg.sc->lambda * sc.value;
  }
  if (cfg.kind == ObjectiveKind::modified) {
    const auto pairs =
        subsample_pairs(latent.batch(), cfg.sc->n1, cfg.sc->n2, pair_seed);
    SCResult sc = sc_modified(fake, latent, pairs, *cfg.sc);
    out.diag.sc_value = sc.value;
    out.diag.sc_stats = sc.stats;
    out.diag.sc_pair_count = sc.stats.total();
    out.g_loss += sc.value;
  }
  return out;
}

// ------------------------------ checkpoints --------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'C', 'G', 'A', 'N', 'C', 'K', '1'};

struct NamedTensor {
  std::string name;
  Tensor* t;
};

std::vector<NamedTensor> checkpoint_tensors(ModelBundle& b) {
  std::vector<NamedTensor> out;
  auto add_params = [&](const std::vector<Param*>& ps, const std::string& tag) {
    for (Param* p : ps) {
      out.push_back({tag + "." + p->name, &p->value});
      if (p->m.size() == 0) {
        p->m = Tensor(p->value.shape, 0.0);
        p->v = Tensor(p->value.shape, 0.0);
      }
      out.push_back({tag + "." + p->name + ".adam_m", &p->m});
      out.push_back({tag + "." + p->name + ".adam_v", &p->v});
    }
  };
  add_params(b.g->params(), "g");
  add_params(b.d->trunk_params(), "d");
  add_params(b.d->q_params(), "q");
  int idx = 0;
  for (Tensor* t : b.g->state())
    out.push_back({"g.state." + std::to_string(idx++), t});
  idx = 0;
  for (Tensor* t : b.d->state())
    out.push_back({"d.state." + std::to_string(idx++), t});
  return out;
}

}  // namespace

void save_checkpoint(ModelBundle& bundle, const std::string& path) {
  const std::vector<NamedTensor> tensors = checkpoint_tensors(bundle);
  json header;
  header["version"] = 1;
  header["arch"] = bundle.arch;
  header["objective"] = bundle.objective;
  header["step"] = bundle.step;
  header["master_seed"] = bundle.master_seed;
  header["opt_g"] = {{"t", bundle.opt_g.t()}, {"config", bundle.opt_g.config()}};
  header["opt_d"] = {{"t", bundle.opt_d.t()}, {"config", bundle.opt_d.config()}};
  json tlist = json::array();
  for (const NamedTensor& nt : tensors)
    tlist.push_back({{"name", nt.name}, {"shape", nt.t->shape}});
  header["tensors"] = tlist;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open checkpoint for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  const uint64_t hlen = hs.size();
  f.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const NamedTensor& nt : tensors)
    f.write(reinterpret_cast<const char*>(nt.t->ptr()),
            static_cast<std::streamsize>(nt.t->size() * sizeof(double)));
  if (!f) throw InvalidArgument("failed writing checkpoint: " + path);
}

ModelBundle load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open checkpoint: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw InvalidArgument("not a checkpoint file: " + path);
  uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f) throw InvalidArgument("truncated checkpoint header: " + path);
  const json header = json::parse(hs);
  if (header.at("version").get<int>() != 1)
    throw InvalidArgument("unsupported checkpoint version");

  const auto arch = header.at("arch").get<ArchDescriptor>();
  const auto objective = header.at("objective").get<ObjectiveConfig>();
  auto adam_g = header.at("opt_g").at("config").get<AdamConfig>();
  auto adam_d = header.at("opt_d").at("config").get<AdamConfig>();
  ModelBundle b = ModelBundle::create(arch, objective, adam_g, adam_d,
                                      header.at("master_seed").get<uint64_t>());
  b.step = header.at("step").get<int64_t>();
  b.opt_g.set_t(header.at("opt_g").at("t").get<int64_t>());
  b.opt_d.set_t(header.at("opt_d").at("t").get<int64_t>());

  const std::vector<NamedTensor> tensors = checkpoint_tensors(b);
  const json& tlist = header.at("tensors");
  if (tlist.size() != tensors.size())
    throw InvalidArgument("checkpoint/architecture tensor count mismatch");
  for (size_t i = 0; i < tensors.size(); ++i) {
    if (tlist[i].at("name").get<std::string>() != tensors[i].name)
      throw InvalidArgument("checkpoint tensor order mismatch at " +
                            tensors[i].name);
    const auto shape = tlist[i].at("shape").get<std::vector<int>>();
    if (shape != tensors[i].t->shape)
      throw InvalidArgument("checkpoint tensor shape mismatch at " +
                            tensors[i].name);
    f.read(reinterpret_cast<char*>(tensors[i].t->ptr()),
           static_cast<std::streamsize>(tensors[i].t->size() * sizeof(double)));
  }
  if (!f) throw InvalidArgument("truncated checkpoint data: " + path);
  return b;
}

}  // namespace scgan
