#include "biomech/denoiser.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace biomech {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Eigen::MatrixXd centered_windows(const Eigen::MatrixXd& x, int window) {
  const int T = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  const int half = window / 2;
  Eigen::MatrixXd out(T, window * n);
  for (int i = 0; i < T; ++i)
    for (int w = 0; w < window; ++w) {
      const int src = std::clamp(i - half + w, 0, T - 1);
      out.block(i, w * n, 1, n) = x.row(src);
    }
  return out;
}

}  // namespace

Eigen::VectorXd time_embedding(int t, int t_steps) {
  Eigen::VectorXd e(kTimeEmbedDim);
  const double tn = static_cast<double>(t) / static_cast<double>(t_steps);
  for (int k = 0; k < kTimeEmbedDim / 2; ++k) {
    const double f = static_cast<double>(1 << k);  // 1, 2, 4, 8
    e[2 * k] = std::sin(kTwoPi * f * tn);
    e[2 * k + 1] = std::cos(kTwoPi * f * tn);
  }
  return e;
}

BaseDenoiser::BaseDenoiser(ParamStore& store, const std::string& prefix, int n_, int x_window_,
                           int hidden_) {
  n = n_;
  x_window = x_window_;
  hidden = hidden_;
  in_map = Linear(store, prefix + ".in", x_window * n + kCondDim + n, hidden);
  time_map = store.add(prefix + ".time", kTimeEmbedDim, hidden);
  res_block = Linear(store, prefix + ".res", hidden, hidden);
  out_map = Linear(store, prefix + ".out", hidden, n);
}

void BaseDenoiser::init(ParamStore& store, Rng& rng) const {
  store.init_xavier(in_map.W, rng);
  store.init_xavier(time_map, rng);
  store.init_xavier(res_block.W, rng);
  store.init_xavier(out_map.W, rng);
}

Eigen::MatrixXd BaseDenoiser::forward(const ParamStore& store, const Eigen::MatrixXd& x,
                                      const Eigen::VectorXd& temb, const Eigen::VectorXd& cond,
                                      const Eigen::MatrixXd& accel, Cache& cache) const {
  const int T = static_cast<int>(x.rows());
  cache.temb = temb;
  cache.input.resize(T, x_window * n + kCondDim + n);
  cache.input.leftCols(x_window * n) = centered_windows(x, x_window);
  cache.input.middleCols(x_window * n, kCondDim) = cond.transpose().replicate(T, 1);
  cache.input.rightCols(n) = accel;

  const Eigen::RowVectorXd tfeat = temb.transpose() * store.view(time_map);
  cache.h1 = tanh_forward(in_map.forward(store, cache.input).rowwise() + tfeat);
  cache.r = tanh_forward(res_block.forward(store, cache.h1));
  return out_map.forward(store, cache.h1 + cache.r);
}

Eigen::MatrixXd BaseDenoiser::backward(ParamStore& store, const Cache& cache,
                                       const Eigen::MatrixXd& d_eps) const {
  const Eigen::MatrixXd d_h2 = out_map.backward(store, cache.h1 + cache.r, d_eps);
  // h2 = h1 + tanh(res_block(h1))
  Eigen::MatrixXd d_h1 = res_block.backward(store, cache.h1, tanh_backward(cache.r, d_h2));
  d_h1 += d_h2;
  const Eigen::MatrixXd d_pre = tanh_backward(cache.h1, d_h1);
  store.grad_view(time_map) += cache.temb * d_pre.colwise().sum();
  const Eigen::MatrixXd d_input = in_map.backward(store, cache.input, d_pre);
  return d_input.rightCols(n);
}

Denoiser::Denoiser(int n_, int t_steps_, int vae_window, int vae_hidden, int dec_hidden,
                   int base_hidden) {
  n = n_;
  t_steps = t_steps_;
  vae = ComponentPredictor(params, "vae", n, vae_window, vae_hidden);
  decoder = ResidualDecoder(params, "decoder", n, vae_window, dec_hidden);
  base = BaseDenoiser(params, "base", n, 7, base_hidden);
  params.finalize();
}

void Denoiser::init_params(Rng& rng) {
  vae.init(params, rng);
  decoder.init(params, rng);
  base.init(params, rng);
}

Denoiser::Output Denoiser::forward(const Eigen::MatrixXd& x_t, int t, const Eigen::VectorXd& cond,
                                   const Eigen::VectorXd& factors, Cache& cache) const {
  if (static_cast<int>(x_t.cols()) != n)
    throw std::invalid_argument("denoiser expects " + std::to_string(n) + " channels, got " +
                                std::to_string(x_t.cols()));
  if (cond.size() != kCondDim) throw std::invalid_argument("condition vector must have 8 entries");

  vae.forward_batch(params, assemble_history_input(x_t, vae.window), cache.vae);
  cache.accel_raw = cache.vae.accel;
  if (factors.size() == 0) {
    cache.factors = Eigen::VectorXd::Ones(n);
    cache.accel_scaled = cache.accel_raw;
  } else {
    if (factors.size() != n) throw std::invalid_argument("editing factors must have n channels");
    if ((factors.array() <= 0.0).any())
      throw std::invalid_argument("editing factors must be positive");
    cache.factors = factors;
    cache.accel_scaled = cache.accel_raw.array().rowwise() * factors.transpose().array();
  }

  Output out;
  out.accel = cache.accel_scaled;
  const Eigen::MatrixXd residual =
      decoder.forward_batch(params, cache.accel_scaled, x_t, cache.decoder);
  out.eps = base.forward(params, x_t, time_embedding(t, t_steps), cond, cache.accel_scaled,
                         cache.base) +
            residual;
  return out;
}

void Denoiser::backward(const Cache& cache, const Eigen::MatrixXd& d_eps,
                        const Eigen::MatrixXd& d_accel_direct) {
  Eigen::MatrixXd d_accel_scaled = base.backward(params, cache.base, d_eps);
  d_accel_scaled += decoder.backward_batch(params, cache.decoder, d_eps);
  if (d_accel_direct.size() > 0) d_accel_scaled += d_accel_direct;
  const Eigen::MatrixXd d_accel_raw =
      d_accel_scaled.array().rowwise() * cache.factors.transpose().array();
  vae.backward_batch(params, cache.vae, d_accel_raw);
}

Denoiser::Output biovae_denoise(const JointState& state, const Denoiser& denoiser,
                                const Eigen::VectorXd& cond, const Eigen::VectorXd& factors) {
  if (state.t < 0 || state.t > denoiser.t_steps)
    throw std::invalid_argument("state step out of range");
  Denoiser::Cache cache;
  return denoiser.forward(state.theta, state.t, cond, factors, cache);
}

}  // namespace biomech
