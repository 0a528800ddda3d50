#include "scgan/nn.hpp"

#include <cstring>

#include "scgan/kernels.hpp"

namespace scgan {

namespace {

void init_normal(Tensor& t, Rng& rng, double stddev) {
  for (auto& v : t.data) v = stddev * rng.normal();
}

// [B, C, P] -> [B*P, C]
Tensor to_rows(const Tensor& x, int b, int c, int p) {
  Tensor out({b * p, c});
  for (int ib = 0; ib < b; ++ib)
    for (int ic = 0; ic < c; ++ic) {
      const double* src = x.ptr() + (static_cast<size_t>(ib) * c + ic) * p;
      for (int ip = 0; ip < p; ++ip)
        out[(static_cast<size_t>(ib) * p + ip) * c + ic] = src[ip];
    }
  return out;
}

// [B*P, C] -> [B, C, P]
Tensor from_rows(const Tensor& rows, int b, int c, int p) {
  Tensor out({b, c, p});
  for (int ib = 0; ib < b; ++ib)
    for (int ic = 0; ic < c; ++ic) {
      double* dst = out.ptr() + (static_cast<size_t>(ib) * c + ic) * p;
      for (int ip = 0; ip < p; ++ip)
        dst[ip] = rows[(static_cast<size_t>(ib) * p + ip) * c + ic];
    }
  return out;
}

}  // namespace

// ------------------------------- Dense -------------------------------------

Dense::Dense(std::string name, int in, int out)
    : in_(in), out_(out), w_(name + ".w", {in, out}), b_(name + ".b", {out}) {}

void Dense::init(Rng& rng) {
  init_normal(w_.value, rng, 0.02);
  b_.value.fill(0.0);
}

Tensor Dense::forward(const Tensor& x, Phase) {
  require(x.ndim() == 2 && x.dim(1) == in_, "Dense: bad input shape " + x.shape_str());
  x_ = x;
  const int batch = x.dim(0);
  Tensor y({batch, out_});
  kernels::gemm_nn(x.ptr(), w_.value.ptr(), y.ptr(), batch, in_, out_, false);
  kernels::add_bias(y.ptr(), b_.value.ptr(), batch, out_);
  return y;
}

Tensor Dense::backward(const Tensor& dy) {
  const int batch = x_.dim(0);
  kernels::gemm_tn(x_.ptr(), dy.ptr(), w_.grad.ptr(), in_, batch, out_, true);
  Tensor db({out_});
  kernels::col_sums(dy.ptr(), db.ptr(), batch, out_);
  for (int i = 0; i < out_; ++i) b_.grad[i] += db[i];
  Tensor dx({batch, in_});
  kernels::gemm_nt(dy.ptr(), w_.value.ptr(), dx.ptr(), batch, out_, in_, false);
  return dx;
}

void Dense::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ------------------------------- Conv2d ------------------------------------

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride,
               int pad)
    : ci_(in_ch), co_(out_ch), k_(ksize), s_(stride), p_(pad),
      w_(name + ".w", {out_ch, in_ch * ksize * ksize}),
      b_(name + ".b", {out_ch}) {}

void Conv2d::init(Rng& rng) {
  init_normal(w_.value, rng, 0.02);
  b_.value.fill(0.0);
}

Tensor Conv2d::forward(const Tensor& x, Phase) {
  require(x.ndim() == 4 && x.dim(1) == ci_, "Conv2d: bad input shape " + x.shape_str());
  xshape_ = x.shape;
  const int batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  const int oh = kernels::conv_out_size(h, k_, s_, p_);
  const int ow = kernels::conv_out_size(w, k_, s_, p_);
  const int np = oh * ow, patch = ci_ * k_ * k_;
  cols_ = Tensor({batch * np, patch});
  kernels::im2col(x.ptr(), batch, ci_, h, w, k_, s_, p_, cols_.ptr());
  Tensor rows({batch * np, co_});
  kernels::gemm_nt(cols_.ptr(), w_.value.ptr(), rows.ptr(), batch * np, patch,
                   co_, false);
  kernels::add_bias(rows.ptr(), b_.value.ptr(), batch * np, co_);
  return from_rows(rows, batch, co_, np).reshaped({batch, co_, oh, ow});
}

Tensor Conv2d::backward(const Tensor& dy) {
  const int batch = xshape_[0], h = xshape_[2], w = xshape_[3];
  const int oh = dy.dim(2), ow = dy.dim(3), np = oh * ow, patch = ci_ * k_ * k_;
  const Tensor drows = to_rows(dy.reshaped({batch, co_, np}), batch, co_, np);
  Tensor db({co_});
  kernels::col_sums(drows.ptr(), db.ptr(), batch * np, co_);
  for (int i = 0; i < co_; ++i) b_.grad[i] += db[i];
  kernels::gemm_tn(drows.ptr(), cols_.ptr(), w_.grad.ptr(), co_, batch * np,
                   patch, true);
  Tensor dcols({batch * np, patch});
  kernels::gemm_nn(drows.ptr(), w_.value.ptr(), dcols.ptr(), batch * np, co_,
                   patch, false);
  Tensor dx(xshape_, 0.0);
  kernels::col2im_add(dcols.ptr(), batch, ci_, h, w, k_, s_, p_, dx.ptr());
  return dx;
}

void Conv2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ------------------------------ Deconv2d -----------------------------------

Deconv2d::Deconv2d(std::string name, int in_ch, int out_ch, int ksize,
                   int stride, int pad)
    : ci_(in_ch), co_(out_ch), k_(ksize), s_(stride), p_(pad),
      w_(name + ".w", {in_ch, out_ch * ksize * ksize}),
      b_(name + ".b", {out_ch}) {}

void Deconv2d::init(Rng& rng) {
  init_normal(w_.value, rng, 0.02);
  b_.value.fill(0.0);
}

Tensor Deconv2d::forward(const Tensor& x, Phase) {
  require(x.ndim() == 4 && x.dim(1) == ci_, "Deconv2d: bad input shape " + x.shape_str());
  xshape_ = x.shape;
  const int batch = x.dim(0), h = x.dim(2), w = x.dim(3);
  out_h_ = (h - 1) * s_ + k_ - 2 * p_;
  out_w_ = (w - 1) * s_ + k_ - 2 * p_;
  require(kernels::conv_out_size(out_h_, k_, s_, p_) == h &&
              kernels::conv_out_size(out_w_, k_, s_, p_) == w,
          "Deconv2d: inconsistent geometry");
  const int np = h * w, patch = co_ * k_ * k_;
  xt_ = to_rows(x.reshaped({batch, ci_, np}), batch, ci_, np);
  Tensor cols({batch * np, patch});
  kernels::gemm_nn(xt_.ptr(), w_.value.ptr(), cols.ptr(), batch * np, ci_,
                   patch, false);
  Tensor y({batch, co_, out_h_, out_w_}, 0.0);
  kernels::col2im_add(cols.ptr(), batch, co_, out_h_, out_w_, k_, s_, p_, y.ptr());
  // per-channel bias over the spatial plane
  const int64_t spatial = static_cast<int64_t>(out_h_) * out_w_;
  for (int ib = 0; ib < batch; ++ib)
    for (int ic = 0; ic < co_; ++ic) {
      double* dst = y.ptr() + (static_cast<size_t>(ib) * co_ + ic) * spatial;
      const double bias = b_.value[ic];
      for (int64_t i = 0; i < spatial; ++i) dst[i] += bias;
    }
  return y;
}

Tensor Deconv2d::backward(const Tensor& dy) {
  const int batch = xshape_[0], h = xshape_[2], w = xshape_[3];
  const int np = h * w, patch = co_ * k_ * k_;
  const int64_t spatial = static_cast<int64_t>(out_h_) * out_w_;
  for (int ic = 0; ic < co_; ++ic) {
    double s = 0.0;
    for (int ib = 0; ib < batch; ++ib) {
      const double* src = dy.ptr() + (static_cast<size_t>(ib) * co_ + ic) * spatial;
      for (int64_t i = 0; i < spatial; ++i) s += src[i];
    }
    b_.grad[ic] += s;
  }
  Tensor cols_dy({batch * np, patch});
  kernels::im2col(dy.ptr(), batch, co_, out_h_, out_w_, k_, s_, p_, cols_dy.ptr());
  kernels::gemm_tn(xt_.ptr(), cols_dy.ptr(), w_.grad.ptr(), ci_, batch * np,
                   patch, true);
  Tensor dxt({batch * np, ci_});
  kernels::gemm_nt(cols_dy.ptr(), w_.value.ptr(), dxt.ptr(), batch * np, patch,
                   ci_, false);
  return from_rows(dxt, batch, ci_, np).reshaped(xshape_);
}

void Deconv2d::collect_params(std::vector<Param*>& out) {
  out.push_back(&w_);
  out.push_back(&b_);
}

// ------------------------------ BatchNorm ----------------------------------

BatchNorm::BatchNorm(std::string name, int channels, double momentum, double eps)
    : c_(channels), momentum_(momentum), eps_(eps),
      gamma_(name + ".gamma", {channels}), beta_(name + ".beta", {channels}),
      running_mean_({channels}, 0.0), running_var_({channels}, 1.0) {}

void BatchNorm::init(Rng&) {
  gamma_.value.fill(1.0);
  beta_.value.fill(0.0);
}

Tensor BatchNorm::forward(const Tensor& x, Phase phase) {
  xshape_ = x.shape;
  const int n = x.dim(0);
  require(x.ndim() >= 2 && x.dim(1) == c_, "BatchNorm: bad input shape " + x.shape_str());
  const int s = static_cast<int>(x.size() / (static_cast<int64_t>(n) * c_));
  Tensor mean({c_}), var({c_});
  if (phase == Phase::eval) {
    mean = running_mean_;
    var = running_var_;
  } else {
    kernels::bn_stats(x.ptr(), n, c_, s, mean.ptr(), var.ptr());
    if (phase == Phase::train) {
      for (int i = 0; i < c_; ++i) {
        running_mean_[i] = momentum_ * running_mean_[i] + (1 - momentum_) * mean[i];
        running_var_[i] = momentum_ * running_var_[i] + (1 - momentum_) * var[i];
      }
    }
  }
  batch_var_ = var;
  Tensor y(x.shape);
  xhat_ = Tensor(x.shape);
  kernels::bn_fwd(x.ptr(), n, c_, s, mean.ptr(), var.ptr(), gamma_.value.ptr(),
                  beta_.value.ptr(), eps_, y.ptr(), xhat_.ptr());
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
  const int n = xshape_[0];
  const int s = static_cast<int>(dy.size() / (static_cast<int64_t>(n) * c_));
  Tensor dx(xshape_);
  Tensor dgamma({c_}), dbeta({c_});
  kernels::bn_bwd(xhat_.ptr(), dy.ptr(), n, c_, s, gamma_.value.ptr(),
                  batch_var_.ptr(), eps_, dx.ptr(), dgamma.ptr(), dbeta.ptr());
  for (int i = 0; i < c_; ++i) {
    gamma_.grad[i] += dgamma[i];
    beta_.grad[i] += dbeta[i];
  }
  return dx;
}

void BatchNorm::collect_params(std::vector<Param*>& out) {
  out.push_back(&gamma_);
  out.push_back(&beta_);
}

void BatchNorm::collect_state(std::vector<Tensor*>& out) {
  out.push_back(&running_mean_);
  out.push_back(&running_var_);
}

// ----------------------------- activations ---------------------------------

Tensor LeakyReLU::forward(const Tensor& x, Phase) {
  x_ = x;
  Tensor y(x.shape);
  kernels::leaky_relu(x.ptr(), y.ptr(), x.size(), slope_);
  return y;
}

Tensor LeakyReLU::backward(const Tensor& dy) {
  Tensor dx(x_.shape);
  kernels::leaky_relu_bwd(x_.ptr(), dy.ptr(), dx.ptr(), dy.size(), slope_);
  return dx;
}

Tensor Tanh::forward(const Tensor& x, Phase) {
  y_ = Tensor(x.shape);
  kernels::tanh_fwd(x.ptr(), y_.ptr(), x.size());
  return y_;
}

Tensor Tanh::backward(const Tensor& dy) {
  Tensor dx(y_.shape);
  kernels::tanh_bwd(y_.ptr(), dy.ptr(), dx.ptr(), dy.size());
  return dx;
}

Tensor Reshape::forward(const Tensor& x, Phase) {
  xshape_ = x.shape;
  std::vector<int> s{x.dim(0)};
  s.insert(s.end(), tail_.begin(), tail_.end());
  return x.reshaped(s);
}

Tensor Reshape::backward(const Tensor& dy) { return dy.reshaped(xshape_); }

// ----------------------------- Sequential ----------------------------------

Tensor Sequential::forward(const Tensor& x, Phase phase) {
  Tensor t = x;
  for (auto& l : layers_) t = l->forward(t, phase);
  return t;
}

Tensor Sequential::backward(const Tensor& dy) {
  Tensor t = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
    t = (*it)->backward(t);
  return t;
}

std::vector<Param*> Sequential::params() {
  std::vector<Param*> out;
  for (auto& l : layers_) l->collect_params(out);
  return out;
}

std::vector<Tensor*> Sequential::state() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) l->collect_state(out);
  return out;
}

void Sequential::init(Rng& rng) {
  for (auto& l : layers_) l->init(rng);
}

// -------------------------------- Adam -------------------------------------

void AdamOpt::step(const std::vector<Param*>& params) {
  ++t_;
  for (Param* p : params) {
    if (p->m.size() == 0) {
      p->m = Tensor(p->value.shape, 0.0);
      p->v = Tensor(p->value.shape, 0.0);
    }
    kernels::adam_update(p->value.ptr(), p->grad.ptr(), p->m.ptr(), p->v.ptr(),
                         p->value.size(), t_, cfg_.lr, cfg_.beta1, cfg_.beta2,
                         cfg_.eps);
  }
}

void AdamOpt::zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

}  // namespace scgan
