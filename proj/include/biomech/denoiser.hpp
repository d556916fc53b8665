#pragma once

#include <Eigen/Dense>
#include <string>

#include "biomech/dynamics.hpp"
#include "biomech/nn.hpp"

namespace biomech {

constexpr int kCondDim = 8;
constexpr int kTimeEmbedDim = 8;

// sin/cos features of t / t_steps at octave frequencies
Eigen::VectorXd time_embedding(int t, int t_steps);

// Per-frame residual MLP over a centered window of the noisy motion,
// conditioned on the time embedding, a fixed-size condition vector and the
// predicted acceleration of the same frame.
struct BaseDenoiser {
  int n = 0;
  int x_window = 7;  // centered, edge-clamped
  int hidden = 64;

  Linear in_map;    // (x_window*n + cond + accel n) -> hidden
  int time_map = -1;  // temb -> hidden, no bias
  Linear res_block;   // hidden -> hidden
  Linear out_map;     // hidden -> n

  BaseDenoiser() = default;
  BaseDenoiser(ParamStore& store, const std::string& prefix, int n, int x_window, int hidden);
  void init(ParamStore& store, Rng& rng) const;

  struct Cache {
    Eigen::MatrixXd input;  // N x in_dim
    Eigen::VectorXd temb;
    Eigen::MatrixXd h1;     // N x hidden (post tanh)
    Eigen::MatrixXd r;      // N x hidden (residual block tanh output)
  };

  Eigen::MatrixXd forward(const ParamStore& store, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& temb, const Eigen::VectorXd& cond,
                          const Eigen::MatrixXd& accel, Cache& cache) const;
  // returns d_accel (N x n); gradients w.r.t. x and cond are not needed
  Eigen::MatrixXd backward(ParamStore& store, const Cache& cache,
                           const Eigen::MatrixXd& d_eps) const;
};

struct JointState {
  Eigen::MatrixXd theta;  // T x n noisy motion
  Eigen::MatrixXd accel;  // T x n acceleration channel
  int t = 0;
};

// The full parameter bundle: base noise predictor plus the structured
// dynamics path (component predictor -> Euler-Lagrange composition ->
// residual decoder added onto the noise prediction).
struct Denoiser {
  int n = 0;
  int t_steps = 1000;
  ParamStore params;
  ComponentPredictor vae;
  ResidualDecoder decoder;
  BaseDenoiser base;

  Denoiser() = default;
  Denoiser(int n, int t_steps, int vae_window = 8, int vae_hidden = 48, int dec_hidden = 32,
           int base_hidden = 64);
  void init_params(Rng& rng);

  struct Cache {
    ComponentPredictor::Cache vae;
    ResidualDecoder::Cache decoder;
    BaseDenoiser::Cache base;
    Eigen::MatrixXd accel_raw;     // before editing factors
    Eigen::MatrixXd accel_scaled;  // after editing factors
    Eigen::VectorXd factors;
  };

  struct Output {
    Eigen::MatrixXd eps;    // T x n noise prediction
    Eigen::MatrixXd accel;  // T x n acceleration prediction (scaled)
  };

  // factors: per-channel acceleration scaling (editing hook); empty = 1
  Output forward(const Eigen::MatrixXd& x_t, int t, const Eigen::VectorXd& cond,
                 const Eigen::VectorXd& factors, Cache& cache) const;
  // d_eps from the diffusion losses, d_accel_direct from the physics loss
  // (both in the scaled-acceleration frame); accumulates parameter grads
  void backward(const Cache& cache, const Eigen::MatrixXd& d_eps,
                const Eigen::MatrixXd& d_accel_direct);
};

// spec-level entry point: predicts the acceleration channel from the noisy
// state and couples it into the noise prediction
Denoiser::Output biovae_denoise(const JointState& state, const Denoiser& denoiser,
                                const Eigen::VectorXd& cond,
                                const Eigen::VectorXd& factors = {});

}  // namespace biomech
