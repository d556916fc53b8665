#pragma once

#include <Eigen/Dense>

#include "biomech/nn.hpp"

namespace biomech {

// Per-frame bundle for the Euler-Lagrange composition
// xddot = m_inv * (e_force + c_force + muscle_force).
struct DynamicsComponents {
  Eigen::MatrixXd m_inv;        // n x n, symmetric by construction
  Eigen::VectorXd e_force;      // external contact force
  Eigen::VectorXd c_force;      // Coriolis + gravity
  Eigen::VectorXd muscle_force; // R*A(u)

  // m_inv = factor + factor^T; symmetry is exact in floating point
  static DynamicsComponents from_factor(const Eigen::MatrixXd& factor,
                                        const Eigen::VectorXd& e, const Eigen::VectorXd& c,
                                        const Eigen::VectorXd& muscle);
  void validate() const;
};

struct MuscleActivation {
  Eigen::VectorXd u;  // 8 coefficients in [0,1]
};

constexpr int kMuscleChannels = 8;

// Four small maps over a W-frame history/velocity window: a symmetrized
// inertia-inverse factor, external and Coriolis/gravity force vectors, and a
// bilinear-attention muscle force driven by 8 activation coefficients.
struct ComponentPredictor {
  int n = 0;        // working dimension, 3 * joint count
  int window = 8;   // history frames
  int hidden = 48;
  int query_dim = 8;

  Linear trunk;       // (2*window*n) -> hidden, tanh
  Linear head_s;      // hidden -> n*n inertia factor
  Linear head_e;      // hidden -> n
  Linear head_c;      // hidden -> n
  Linear head_u;      // hidden -> 8 activation logits, sigmoid
  Linear head_q;      // hidden -> query_dim
  int muscle_keys = -1;    // 8 x query_dim
  int muscle_values = -1;  // 8 x n

  ComponentPredictor() = default;
  ComponentPredictor(ParamStore& store, const std::string& prefix, int n, int window, int hidden);
  void init(ParamStore& store, Rng& rng) const;

  struct Cache {
    Eigen::MatrixXd input;    // N x 2*W*n
    Eigen::MatrixXd h;        // N x hidden (post tanh)
    Eigen::MatrixXd s_rows;   // N x n*n
    Eigen::MatrixXd e, c;     // N x n
    Eigen::MatrixXd u;        // N x 8 (post sigmoid)
    Eigen::MatrixXd q;        // N x query_dim
    Eigen::MatrixXd scores;   // N x 8
    Eigen::MatrixXd muscle;   // N x n
    Eigen::MatrixXd force;    // N x n  (e + c + muscle)
    Eigen::MatrixXd accel;    // N x n
  };

  // rows of `input` are flattened [history window | velocity window]
  void forward_batch(const ParamStore& store, const Eigen::MatrixXd& input, Cache& cache) const;
  // d_accel: N x n, d_u_extra: optional N x 8 gradient applied directly to u
  // (activation supervision). Accumulates parameter gradients only.
  void backward_batch(ParamStore& store, const Cache& cache, const Eigen::MatrixXd& d_accel,
                      const Eigen::MatrixXd* d_u_extra = nullptr) const;
};

// window assembly: frame i sees frames [i-W+1, i] of x left-padded by
// repeating the first frame, then the same window of per-frame differences
Eigen::MatrixXd assemble_history_input(const Eigen::MatrixXd& x, int window);

// spec-level single-window entry points
DynamicsComponents predict_components(const Eigen::MatrixXd& history,
                                      const Eigen::MatrixXd& velocity,
                                      const ComponentPredictor& predictor,
                                      const ParamStore& store);
MuscleActivation muscle_activation(const Eigen::MatrixXd& history,
                                   const Eigen::MatrixXd& velocity,
                                   const ComponentPredictor& predictor, const ParamStore& store);
Eigen::VectorXd muscle_force(const MuscleActivation& u, const Eigen::MatrixXd& history,
                             const Eigen::MatrixXd& velocity, const ComponentPredictor& predictor,
                             const ParamStore& store);

// per-node m*omega^2*r + 2*m*(omega x v) + (0,-m*g,0); position/velocity are
// stacked 3-vectors per node
Eigen::VectorXd coriolis_gravity_analytic(const Eigen::VectorXd& position,
                                          const Eigen::VectorXd& velocity, double mass,
                                          const Eigen::Vector3d& omega, double g);

Eigen::VectorXd compose_acceleration(const DynamicsComponents& c);

// Causal map from the predicted acceleration sequence and the noisy motion
// context to a residual on the noise prediction. The acceleration path is
// linear with per-joint blocks; all output-side weights start at zero so a
// fresh decoder is exactly silent.
struct ResidualDecoder {
  int n = 0;
  int window = 8;
  int hidden = 32;

  int accel_blocks = -1;  // (3*window) x 3 per joint, stacked: (J*3*window) x 3
  Linear ctx_trunk;       // (window*n) -> hidden, tanh (random init)
  Linear ctx_out;         // hidden -> n (zero init)

  ResidualDecoder() = default;
  ResidualDecoder(ParamStore& store, const std::string& prefix, int n, int window, int hidden);
  void init(ParamStore& store, Rng& rng) const;

  struct Cache {
    Eigen::MatrixXd accel_win;  // N x window*n (causal windows)
    Eigen::MatrixXd ctx_win;    // N x window*n
    Eigen::MatrixXd h;          // N x hidden
  };

  Eigen::MatrixXd forward_batch(const ParamStore& store, const Eigen::MatrixXd& accel,
                                const Eigen::MatrixXd& context, Cache& cache) const;
  // returns d_accel (N x n aggregated back through the causal windows)
  Eigen::MatrixXd backward_batch(ParamStore& store, const Cache& cache,
                                 const Eigen::MatrixXd& d_residual) const;
};

Eigen::MatrixXd decode_residual(const Eigen::MatrixXd& accel_seq, const Eigen::MatrixXd& context,
                                const ResidualDecoder& decoder, const ParamStore& store);

}  // namespace biomech
