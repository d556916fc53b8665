#include "biomech/dynamics.hpp"

#include <algorithm>
#include <stdexcept>

namespace biomech {

namespace {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// row-major n x n view of one row of a (column-major) N x n*n matrix
Eigen::MatrixXd unpack_square(const Eigen::MatrixXd& rows, int i, int n) {
  const Eigen::RowVectorXd row = rows.row(i);
  return Eigen::Map<const RowMajorMatrix>(row.data(), n, n);
}

// frame i sees frames [i-W+1, i], left-padded by repeating frame 0;
// flattened frame-major
Eigen::MatrixXd causal_windows(const Eigen::MatrixXd& x, int window) {
  const int T = static_cast<int>(x.rows());
  const int n = static_cast<int>(x.cols());
  Eigen::MatrixXd out(T, window * n);
  for (int i = 0; i < T; ++i)
    for (int w = 0; w < window; ++w) {
      const int src = std::max(0, i - window + 1 + w);
      out.block(i, w * n, 1, n) = x.row(src);
    }
  return out;
}

Eigen::MatrixXd frame_differences(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int i = 1; i < x.rows(); ++i) d.row(i) = x.row(i) - x.row(i - 1);
  return d;
}

}  // namespace

DynamicsComponents DynamicsComponents::from_factor(const Eigen::MatrixXd& factor,
                                                   const Eigen::VectorXd& e,
                                                   const Eigen::VectorXd& c,
                                                   const Eigen::VectorXd& muscle) {
  DynamicsComponents out;
  out.m_inv = factor + factor.transpose();
  out.e_force = e;
  out.c_force = c;
  out.muscle_force = muscle;
  out.validate();
  return out;
}

void DynamicsComponents::validate() const {
  const long n = m_inv.rows();
  if (m_inv.cols() != n || e_force.size() != n || c_force.size() != n ||
      muscle_force.size() != n)
    throw std::invalid_argument("dynamics component shapes disagree");
  if (!m_inv.allFinite() || !e_force.allFinite() || !c_force.allFinite() ||
      !muscle_force.allFinite())
    throw std::invalid_argument("non-finite dynamics components");
  if ((m_inv - m_inv.transpose()).cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("m_inv must be exactly symmetric");
}

ComponentPredictor::ComponentPredictor(ParamStore& store, const std::string& prefix, int n_,
                                       int window_, int hidden_) {
  n = n_;
  window = window_;
  hidden = hidden_;
  trunk = Linear(store, prefix + ".trunk", 2 * window * n, hidden);
  head_s = Linear(store, prefix + ".head_s", hidden, n * n);
  head_e = Linear(store, prefix + ".head_e", hidden, n);
  head_c = Linear(store, prefix + ".head_c", hidden, n);
  head_u = Linear(store, prefix + ".head_u", hidden, kMuscleChannels);
  head_q = Linear(store, prefix + ".head_q", hidden, query_dim);
  muscle_keys = store.add(prefix + ".muscle_keys", kMuscleChannels, query_dim);
  muscle_values = store.add(prefix + ".muscle_values", kMuscleChannels, n);
}

void ComponentPredictor::init(ParamStore& store, Rng& rng) const {
  store.init_xavier(trunk.W, rng);
  store.init_xavier(head_s.W, rng);
  store.init_xavier(head_e.W, rng);
  store.init_xavier(head_c.W, rng);
  store.init_xavier(head_u.W, rng);
  store.init_xavier(head_q.W, rng);
  store.init_xavier(muscle_keys, rng);
  store.init_xavier(muscle_values, rng);
}

void ComponentPredictor::forward_batch(const ParamStore& store, const Eigen::MatrixXd& input,
                                       Cache& cache) const {
  if (!input.allFinite()) throw std::invalid_argument("non-finite predictor input");
  cache.input = input;
  cache.h = tanh_forward(trunk.forward(store, input));
  cache.s_rows = head_s.forward(store, cache.h);
  cache.e = head_e.forward(store, cache.h);
  cache.c = head_c.forward(store, cache.h);
  cache.u = sigmoid_forward(head_u.forward(store, cache.h));
  cache.q = head_q.forward(store, cache.h);
  const auto K = store.view(muscle_keys);
  const auto V = store.view(muscle_values);
  cache.scores = cache.q * K.transpose();
  cache.muscle = (cache.u.array() * cache.scores.array()).matrix() * V;
  cache.force = cache.e + cache.c + cache.muscle;

  const int N = static_cast<int>(input.rows());
  cache.accel.resize(N, n);
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd S = unpack_square(cache.s_rows, i, n);
    const Eigen::VectorXd f = cache.force.row(i).transpose();
    cache.accel.row(i) = (S * f + S.transpose() * f).transpose();
  }
}

void ComponentPredictor::backward_batch(ParamStore& store, const Cache& cache,
                                        const Eigen::MatrixXd& d_accel,
                                        const Eigen::MatrixXd* d_u_extra) const {
  const int N = static_cast<int>(cache.input.rows());
  Eigen::MatrixXd d_force(N, n);
  Eigen::MatrixXd d_s_rows(N, n * n);
  for (int i = 0; i < N; ++i) {
    const Eigen::MatrixXd S = unpack_square(cache.s_rows, i, n);
    const Eigen::VectorXd f = cache.force.row(i).transpose();
    const Eigen::VectorXd da = d_accel.row(i).transpose();
    d_force.row(i) = ((S + S.transpose()) * da).transpose();
    const RowMajorMatrix dS = da * f.transpose() + f * da.transpose();
    d_s_rows.row(i) = Eigen::Map<const Eigen::RowVectorXd>(dS.data(), n * n);
  }

  const auto K = store.view(muscle_keys);
  const auto V = store.view(muscle_values);
  const Eigen::MatrixXd attn = (cache.u.array() * cache.scores.array()).matrix();
  const Eigen::MatrixXd d_attn = d_force * V.transpose();
  store.grad_view(muscle_values) += attn.transpose() * d_force;
  Eigen::MatrixXd d_u = (d_attn.array() * cache.scores.array()).matrix();
  if (d_u_extra) d_u += *d_u_extra;
  const Eigen::MatrixXd d_scores = (d_attn.array() * cache.u.array()).matrix();
  store.grad_view(muscle_keys) += d_scores.transpose() * cache.q;
  const Eigen::MatrixXd d_q = d_scores * K;

  Eigen::MatrixXd dh = head_s.backward(store, cache.h, d_s_rows);
  dh += head_e.backward(store, cache.h, d_force);
  dh += head_c.backward(store, cache.h, d_force);
  dh += head_u.backward(store, cache.h, sigmoid_backward(cache.u, d_u));
  dh += head_q.backward(store, cache.h, d_q);
  trunk.backward(store, cache.input, tanh_backward(cache.h, dh));
}

Eigen::MatrixXd assemble_history_input(const Eigen::MatrixXd& x, int window) {
  Eigen::MatrixXd out(x.rows(), 2 * window * x.cols());
  out.leftCols(window * x.cols()) = causal_windows(x, window);
  out.rightCols(window * x.cols()) = causal_windows(frame_differences(x), window);
  return out;
}

namespace {

Eigen::MatrixXd single_window_input(const Eigen::MatrixXd& history,
                                    const Eigen::MatrixXd& velocity,
                                    const ComponentPredictor& p) {
  if (history.rows() != p.window || history.cols() != p.n || velocity.rows() != p.window ||
      velocity.cols() != p.n)
    throw std::invalid_argument("window shape must be W x n");
  Eigen::MatrixXd input(1, 2 * p.window * p.n);
  for (int w = 0; w < p.window; ++w) {
    input.block(0, w * p.n, 1, p.n) = history.row(w);
    input.block(0, (p.window + w) * p.n, 1, p.n) = velocity.row(w);
  }
  return input;
}

}  // namespace

DynamicsComponents predict_components(const Eigen::MatrixXd& history,
                                      const Eigen::MatrixXd& velocity,
                                      const ComponentPredictor& predictor,
                                      const ParamStore& store) {
  ComponentPredictor::Cache cache;
  predictor.forward_batch(store, single_window_input(history, velocity, predictor), cache);
  DynamicsComponents out;
  const Eigen::MatrixXd S = unpack_square(cache.s_rows, 0, predictor.n);
  out.m_inv = S + S.transpose();
  out.e_force = cache.e.row(0).transpose();
  out.c_force = cache.c.row(0).transpose();
  out.muscle_force = cache.muscle.row(0).transpose();
  out.validate();
  return out;
}

MuscleActivation muscle_activation(const Eigen::MatrixXd& history,
                                   const Eigen::MatrixXd& velocity,
                                   const ComponentPredictor& predictor, const ParamStore& store) {
  ComponentPredictor::Cache cache;
  predictor.forward_batch(store, single_window_input(history, velocity, predictor), cache);
  return {cache.u.row(0).transpose()};
}

Eigen::VectorXd muscle_force(const MuscleActivation& u, const Eigen::MatrixXd& history,
                             const Eigen::MatrixXd& velocity, const ComponentPredictor& predictor,
                             const ParamStore& store) {
  if (u.u.size() != kMuscleChannels) throw std::invalid_argument("u must have 8 channels");
  ComponentPredictor::Cache cache;
  predictor.forward_batch(store, single_window_input(history, velocity, predictor), cache);
  const auto V = store.view(predictor.muscle_values);
  const Eigen::RowVectorXd weighted =
      (u.u.transpose().array() * cache.scores.row(0).array()).matrix();
  return (weighted * V).transpose();
}

Eigen::VectorXd coriolis_gravity_analytic(const Eigen::VectorXd& position,
                                          const Eigen::VectorXd& velocity, double mass,
                                          const Eigen::Vector3d& omega, double g) {
  if (position.size() != velocity.size() || position.size() % 3 != 0)
    throw std::invalid_argument("position/velocity must stack 3-vectors");
  if (!position.allFinite() || !velocity.allFinite())
    throw std::invalid_argument("non-finite input");
  const double omega_sq = omega.squaredNorm();
  Eigen::VectorXd out(position.size());
  for (long k = 0; k < position.size() / 3; ++k) {
    const Eigen::Vector3d r = position.segment<3>(3 * k);
    const Eigen::Vector3d v = velocity.segment<3>(3 * k);
    Eigen::Vector3d c = mass * omega_sq * r + 2.0 * mass * omega.cross(v);
    c[1] -= mass * g;  // -grad of U = m*g*y
    out.segment<3>(3 * k) = c;
  }
  return out;
}

Eigen::VectorXd compose_acceleration(const DynamicsComponents& c) {
  c.validate();
  return c.m_inv * (c.e_force + c.c_force + c.muscle_force);
}

ResidualDecoder::ResidualDecoder(ParamStore& store, const std::string& prefix, int n_, int window_,
                                 int hidden_) {
  n = n_;
  window = window_;
  hidden = hidden_;
  if (n % 3 != 0) throw std::invalid_argument("decoder dimension must stack 3-vectors");
  accel_blocks = store.add(prefix + ".accel_blocks", (n / 3) * 3 * window, 3);
  ctx_trunk = Linear(store, prefix + ".ctx_trunk", window * n, hidden);
  ctx_out = Linear(store, prefix + ".ctx_out", hidden, n);
}

void ResidualDecoder::init(ParamStore& store, Rng& rng) const {
  // accel_blocks and ctx_out stay zero: a fresh decoder adds nothing
  store.init_xavier(ctx_trunk.W, rng);
}

Eigen::MatrixXd ResidualDecoder::forward_batch(const ParamStore& store,
                                               const Eigen::MatrixXd& accel,
                                               const Eigen::MatrixXd& context,
                                               Cache& cache) const {
  if (accel.rows() != context.rows())
    throw std::invalid_argument("acceleration and context lengths differ");
  const int N = static_cast<int>(accel.rows());
  const int J = n / 3;
  cache.accel_win = causal_windows(accel, window);
  cache.ctx_win = causal_windows(context, window);
  cache.h = tanh_forward(ctx_trunk.forward(store, cache.ctx_win));

  Eigen::MatrixXd res = ctx_out.forward(store, cache.h);
  const auto blocks = store.view(accel_blocks);
  Eigen::MatrixXd joint_win(N, 3 * window);
  for (int j = 0; j < J; ++j) {
    for (int w = 0; w < window; ++w)
      joint_win.block(0, 3 * w, N, 3) = cache.accel_win.block(0, w * n + 3 * j, N, 3);
    res.block(0, 3 * j, N, 3) += joint_win * blocks.block(3 * window * j, 0, 3 * window, 3);
  }
  return res;
}

Eigen::MatrixXd ResidualDecoder::backward_batch(ParamStore& store, const Cache& cache,
                                                const Eigen::MatrixXd& d_residual) const {
  const int N = static_cast<int>(d_residual.rows());
  const int J = n / 3;
  const Eigen::MatrixXd dh = ctx_out.backward(store, cache.h, d_residual);
  ctx_trunk.backward(store, cache.ctx_win, tanh_backward(cache.h, dh));

  const auto blocks = store.view(accel_blocks);
  auto d_blocks = store.grad_view(accel_blocks);
  Eigen::MatrixXd d_accel_win = Eigen::MatrixXd::Zero(N, window * n);
  Eigen::MatrixXd joint_win(N, 3 * window);
  for (int j = 0; j < J; ++j) {
    for (int w = 0; w < window; ++w)
      joint_win.block(0, 3 * w, N, 3) = cache.accel_win.block(0, w * n + 3 * j, N, 3);
    const Eigen::MatrixXd d_out = d_residual.block(0, 3 * j, N, 3);
    d_blocks.block(3 * window * j, 0, 3 * window, 3) += joint_win.transpose() * d_out;
    const Eigen::MatrixXd d_jwin = d_out * blocks.block(3 * window * j, 0, 3 * window, 3).transpose();
    for (int w = 0; w < window; ++w)
      d_accel_win.block(0, w * n + 3 * j, N, 3) += d_jwin.block(0, 3 * w, N, 3);
  }

  // transpose of the causal windowing: frame src feeds window slot w of
  // frame i = src + window - 1 - w (clamped windows pile onto frame 0)
  Eigen::MatrixXd d_accel = Eigen::MatrixXd::Zero(N, n);
  for (int i = 0; i < N; ++i)
    for (int w = 0; w < window; ++w) {
      const int src = std::max(0, i - window + 1 + w);
      d_accel.row(src) += d_accel_win.block(i, w * n, 1, n);
    }
  return d_accel;
}

Eigen::MatrixXd decode_residual(const Eigen::MatrixXd& accel_seq, const Eigen::MatrixXd& context,
                                const ResidualDecoder& decoder, const ParamStore& store) {
  ResidualDecoder::Cache cache;
  return decoder.forward_batch(store, accel_seq, context, cache);
}

}  // namespace biomech
