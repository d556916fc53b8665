#include "biomech/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "biomech/json_writer.hpp"
#include "biomech/motion_io.hpp"
#include "biomech/rng.hpp"

namespace biomech {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

// quintic smoothstep and derivatives; zero first and second derivatives at
// both ends, so piecewise trajectories built from it are C^2
double q5(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double q5d(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double q5dd(double u) { return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u); }

struct Curve {
  double p = 0.0, v = 0.0, a = 0.0;  // value, first, second time derivative
};

Curve smoothstep_between(double t, double t0, double t1, double lo, double hi) {
  Curve c;
  if (t <= t0) {
    c.p = lo;
    return c;
  }
  if (t >= t1) {
    c.p = hi;
    return c;
  }
  const double w = t1 - t0;
  const double u = (t - t0) / w;
  c.p = lo + (hi - lo) * q5(u);
  c.v = (hi - lo) * q5d(u) / w;
  c.a = (hi - lo) * q5dd(u) / (w * w);
  return c;
}

}  // namespace

std::string scenario_kind_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kPendulumChain: return "pendulum-chain";
    case ScenarioKind::kBouncingMass: return "bouncing-mass";
    case ScenarioKind::kGait: return "gait";
  }
  throw std::logic_error("unreachable scenario kind");
}

ScenarioKind scenario_kind_from_name(const std::string& name) {
  if (name == "pendulum-chain") return ScenarioKind::kPendulumChain;
  if (name == "bouncing-mass") return ScenarioKind::kBouncingMass;
  if (name == "gait") return ScenarioKind::kGait;
  throw std::invalid_argument("unknown scenario kind \"" + name + "\"");
}

void SimScenario::validate() const {
  if (fps <= 0.0) throw std::invalid_argument("scenario fps must be positive");
  if (duration_s * fps < 8.0) throw std::invalid_argument("scenario must span at least 8 frames");
  for (double l : link_lengths)
    if (l <= 0.0) throw std::invalid_argument("link lengths must be positive");
  for (double m : masses)
    if (m <= 0.0) throw std::invalid_argument("masses must be positive");
  if (kind == ScenarioKind::kPendulumChain) {
    if (link_lengths.empty()) throw std::invalid_argument("pendulum chain needs links");
    if (masses.size() != link_lengths.size())
      throw std::invalid_argument("pendulum chain needs one mass per link");
  }
  if (kind == ScenarioKind::kBouncingMass && masses.size() != 1)
    throw std::invalid_argument("bouncing mass needs exactly one mass");
  if (kind == ScenarioKind::kGait) {
    if (gait_speed < 0.0 || gait_cadence <= 0.0)
      throw std::invalid_argument("gait speed/cadence invalid");
  }
}

// ---------------------------------------------------------------------------
// pendulum chain: absolute link angles as generalized coordinates, point
// masses at link ends, penalty-spring ground contact on each mass
// ---------------------------------------------------------------------------

namespace {

struct ChainModel {
  const SimScenario& sc;
  int n;

  explicit ChainModel(const SimScenario& s) : sc(s), n(static_cast<int>(s.link_lengths.size())) {}

  // planar positions (x up-to-pivot), y measured from the ground
  void mass_positions(const Eigen::VectorXd& theta, Eigen::MatrixXd& pos) const {
    pos.resize(n, 2);
    double x = 0.0, y = sc.pivot_height;
    for (int k = 0; k < n; ++k) {
      x += sc.link_lengths[k] * std::sin(theta[k]);
      y -= sc.link_lengths[k] * std::cos(theta[k]);
      pos(k, 0) = x;
      pos(k, 1) = y;
    }
  }

  // dp_k/dtheta_j, 2x1 blocks; zero for j > k
  void jacobian_column(const Eigen::VectorXd& theta, int j, Eigen::Vector2d& col) const {
    col << sc.link_lengths[j] * std::cos(theta[j]), sc.link_lengths[j] * std::sin(theta[j]);
  }

  // velocity of mass k and the centripetal term (Jdot * thetadot)
  void kinematics(const Eigen::VectorXd& theta, const Eigen::VectorXd& thetadot,
                  Eigen::MatrixXd& vel, Eigen::MatrixXd& jdot_qd) const {
    vel.setZero(n, 2);
    jdot_qd.setZero(n, 2);
    Eigen::Vector2d v = Eigen::Vector2d::Zero();
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int k = 0; k < n; ++k) {
      const double L = sc.link_lengths[k];
      const double s = std::sin(theta[k]), cth = std::cos(theta[k]);
      v += thetadot[k] * Eigen::Vector2d(L * cth, L * s);
      c += thetadot[k] * thetadot[k] * Eigen::Vector2d(-L * s, L * cth);
      vel.row(k) = v.transpose();
      jdot_qd.row(k) = c.transpose();
    }
  }

  // generalized accelerations plus diagnostics used for outputs
  void dynamics(const Eigen::VectorXd& theta, const Eigen::VectorXd& thetadot,
                Eigen::VectorXd& thetaddot, Eigen::VectorXd* generalized_force = nullptr) const {
    Eigen::MatrixXd pos, vel, jdot_qd;
    mass_positions(theta, pos);
    kinematics(theta, thetadot, vel, jdot_qd);

    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd Q = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      const double m = sc.masses[k];
      Eigen::Vector2d f(0.0, -m * sc.gravity);
      const double y = pos(k, 1);
      if (y < 0.0) {
        const double fy = -sc.contact_stiffness * y - sc.contact_damping * vel(k, 1);
        f[1] += std::max(0.0, fy);
      }
      // bias force from the moving Jacobian
      const Eigen::Vector2d bias = m * jdot_qd.row(k).transpose();
      for (int i = 0; i <= k; ++i) {
        Eigen::Vector2d ji;
        jacobian_column(theta, i, ji);
        Q[i] += ji.dot(f - bias);
        for (int j = 0; j <= k; ++j) {
          Eigen::Vector2d jj;
          jacobian_column(theta, j, jj);
          M(i, j) += m * ji.dot(jj);
        }
      }
    }
    thetaddot = M.ldlt().solve(Q);
    if (generalized_force) *generalized_force = Q;
  }
};

Skeleton chain_skeleton(const SimScenario& sc) {
  Skeleton s;
  const int n = static_cast<int>(sc.link_lengths.size());
  s.joints.push_back({"pivot", std::nullopt, {0.0, sc.pivot_height, 0.0}});
  for (int k = 0; k < n; ++k)
    s.joints.push_back({"link_" + std::to_string(k), k, {0.0, -sc.link_lengths[k], 0.0}});
  s.foot_left = n;  // distal masses stand in for feet
  s.foot_right = std::max(1, n - 1);
  for (int k = 1; k <= n; ++k) s.lowest_candidates.push_back(k);
  return s;
}

SimOutput simulate_chain(const SimScenario& sc) {
  const ChainModel model(sc);
  const int n = model.n;
  const int T = sc.frame_count();

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd thetadot = Eigen::VectorXd::Zero(n);
  for (int k = 0; k < n && k < static_cast<int>(sc.initial_angles.size()); ++k)
    theta[k] = sc.initial_angles[k];
  for (int k = 0; k < n && k < static_cast<int>(sc.initial_rates.size()); ++k)
    thetadot[k] = sc.initial_rates[k];

  // substeps sized for the contact spring frequency
  const double min_mass = *std::min_element(sc.masses.begin(), sc.masses.end());
  const double omega_c = std::sqrt(sc.contact_stiffness / min_mass);
  const double dt_frame = 1.0 / sc.fps;
  const int substeps = std::max(4, static_cast<int>(std::ceil(omega_c * dt_frame / 0.25)));
  const double h = dt_frame / substeps;

  SimOutput out;
  out.skeleton = chain_skeleton(sc);
  const int J = n + 1;
  out.motion.fps = sc.fps;
  for (const Joint& j : out.skeleton.joints) out.motion.joint_names.push_back(j.name);
  out.motion.positions.resize(T, 3 * J);
  out.accel_gt.setZero(T, 3 * J);
  out.torque_proxy.setZero(T, 8);

  auto derivative = [&](const Eigen::VectorXd& th, const Eigen::VectorXd& thd,
                        Eigen::VectorXd& dth, Eigen::VectorXd& dthd) {
    dth = thd;
    model.dynamics(th, thd, dthd);
  };

  Eigen::VectorXd k1q(n), k1v(n), k2q(n), k2v(n), k3q(n), k3v(n), k4q(n), k4v(n);
  for (int t = 0; t < T; ++t) {
    // record frame from the current state
    Eigen::MatrixXd pos, vel, jdot_qd;
    model.mass_positions(theta, pos);
    model.kinematics(theta, thetadot, vel, jdot_qd);
    Eigen::VectorXd thetaddot, Q;
    model.dynamics(theta, thetadot, thetaddot, &Q);

    out.motion.positions(t, 0) = 0.0;
    out.motion.positions(t, 1) = sc.pivot_height;
    out.motion.positions(t, 2) = 0.0;
    for (int k = 0; k < n; ++k) {
      out.motion.positions(t, 3 * (k + 1)) = pos(k, 0);
      out.motion.positions(t, 3 * (k + 1) + 1) = pos(k, 1);
      out.motion.positions(t, 3 * (k + 1) + 2) = 0.0;
      // xddot = J * thetaddot + Jdot * thetadot
      Eigen::Vector2d acc = jdot_qd.row(k).transpose();
      for (int j = 0; j <= k; ++j) {
        Eigen::Vector2d jj;
        model.jacobian_column(theta, j, jj);
        acc += thetaddot[j] * jj;
      }
      out.accel_gt(t, 3 * (k + 1)) = acc[0];
      out.accel_gt(t, 3 * (k + 1) + 1) = acc[1];
    }
    for (int k = 0; k < n && k < 8; ++k) out.torque_proxy(t, k) = std::abs(Q[k]);

    if (t == T - 1) break;
    for (int s = 0; s < substeps; ++s) {
      derivative(theta, thetadot, k1q, k1v);
      derivative(theta + 0.5 * h * k1q, thetadot + 0.5 * h * k1v, k2q, k2v);
      derivative(theta + 0.5 * h * k2q, thetadot + 0.5 * h * k2v, k3q, k3v);
      derivative(theta + h * k3q, thetadot + h * k3v, k4q, k4v);
      theta += (h / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
      thetadot += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if (theta.cwiseAbs().maxCoeff() > 1e6 || thetadot.cwiseAbs().maxCoeff() > 1e6)
        throw std::runtime_error("simulation blow-up at frame " + std::to_string(t) +
                                 ", substep " + std::to_string(s));
    }
  }
  return out;
}

Skeleton mass_skeleton() {
  Skeleton s;
  s.joints.push_back({"mass", std::nullopt, {0.0, 0.0, 0.0}});
  s.foot_left = 0;
  s.foot_right = 0;
  s.lowest_candidates = {0};
  return s;
}

SimOutput simulate_bounce(const SimScenario& sc) {
  const double m = sc.masses[0];
  const int T = sc.frame_count();
  const double omega_c = std::sqrt(sc.contact_stiffness / m);
  const double dt_frame = 1.0 / sc.fps;
  const int substeps = std::max(4, static_cast<int>(std::ceil(omega_c * dt_frame / 0.25)));
  const double h = dt_frame / substeps;

  auto accel_of = [&](double y, double ydot) {
    double f = -m * sc.gravity;
    if (y < 0.0) f += std::max(0.0, -sc.contact_stiffness * y - sc.contact_damping * ydot);
    return f / m;
  };

  SimOutput out;
  out.skeleton = mass_skeleton();
  out.motion.fps = sc.fps;
  out.motion.joint_names = {"mass"};
  out.motion.positions.setZero(T, 3);
  out.accel_gt.setZero(T, 3);
  out.torque_proxy.setZero(T, 8);

  double y = sc.drop_height, ydot = 0.0;
  for (int t = 0; t < T; ++t) {
    out.motion.positions(t, 1) = y;
    const double a = accel_of(y, ydot);
    out.accel_gt(t, 1) = a;
    out.torque_proxy(t, 0) = std::abs(m * a);
    if (t == T - 1) break;
    for (int s = 0; s < substeps; ++s) {
      const double k1y = ydot, k1v = accel_of(y, ydot);
      const double k2y = ydot + 0.5 * h * k1v, k2v = accel_of(y + 0.5 * h * k1y, ydot + 0.5 * h * k1v);
      const double k3y = ydot + 0.5 * h * k2v, k3v = accel_of(y + 0.5 * h * k2y, ydot + 0.5 * h * k2v);
      const double k4y = ydot + h * k3v, k4v = accel_of(y + h * k3y, ydot + h * k3v);
      y += (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
      ydot += (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      if (std::abs(y) > 1e6 || std::abs(ydot) > 1e6)
        throw std::runtime_error("simulation blow-up at frame " + std::to_string(t) +
                                 ", substep " + std::to_string(s));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// kinematic gait: closed-form trajectory with exact zero-velocity stance
// ---------------------------------------------------------------------------

Skeleton gait_skeleton() {
  Skeleton s;
  s.joints.push_back({"root", std::nullopt, {0.0, 0.95, 0.0}});
  s.joints.push_back({"chest", 0, {0.0, 0.25, 0.0}});
  s.joints.push_back({"head", 1, {0.0, 0.20, 0.0}});
  s.joints.push_back({"foot_l", 0, {0.0, -0.95, 0.10}});
  s.joints.push_back({"foot_r", 0, {0.0, -0.95, -0.10}});
  s.foot_left = 3;
  s.foot_right = 4;
  s.lowest_candidates = {3, 4};
  return s;
}

struct GaitParams {
  double speed, cycle, swing, stride, lift, bob, sway, phase_shift;
};

// one foot; t_off shifts the cycle, x_base is the first plant position
void gait_foot(const GaitParams& g, double t, double t_off, double x_base, Curve& x, Curve& y) {
  const double tau = t - t_off;
  const double k = std::floor(tau / g.cycle);
  const double s_in = tau - k * g.cycle;
  const double plant_x = x_base + k * g.stride;
  const double stance = 0.6 * g.cycle;
  x = Curve{plant_x, 0.0, 0.0};
  y = Curve{0.0, 0.0, 0.0};
  if (s_in < stance) return;  // stance: exactly pinned
  const double s = (s_in - stance) / g.swing;  // [0,1)
  // vertical bump: rise on [0,0.2], hold, fall on [0.8,1]
  Curve up = smoothstep_between(s, 0.0, 0.2, 0.0, 1.0);
  Curve down = smoothstep_between(s, 0.8, 1.0, 0.0, 1.0);
  y.p = g.lift * (up.p - down.p);
  y.v = g.lift * (up.v - down.v) / g.swing;
  y.a = g.lift * (up.a - down.a) / (g.swing * g.swing);
  // horizontal travel restricted to the lifted part of the swing
  Curve fx = smoothstep_between(s, 0.15, 0.85, 0.0, 1.0);
  x.p = plant_x + g.stride * fx.p;
  x.v = g.stride * fx.v / g.swing;
  x.a = g.stride * fx.a / (g.swing * g.swing);
}

SimOutput run_gait(const SimScenario& sc) {
  const int T = sc.frame_count();
  const double amp = sc.amplitude_scale;
  GaitParams g;
  g.speed = sc.gait_speed;
  g.cycle = 2.0 / sc.gait_cadence;
  g.swing = 0.4 * g.cycle;
  g.stride = sc.gait_speed * g.cycle;
  const double vscale = sc.gait_speed / 1.2;  // oscillation amplitudes follow speed
  g.lift = 0.10 * vscale;
  g.bob = 0.025 * vscale;
  g.sway = 0.03 * vscale;
  g.phase_shift = sc.gait_phase * g.cycle;

  SimOutput out;
  out.skeleton = gait_skeleton();
  out.motion.fps = sc.fps;
  for (const Joint& j : out.skeleton.joints) out.motion.joint_names.push_back(j.name);
  out.motion.positions.resize(T, 15);
  out.accel_gt.setZero(T, 15);
  out.torque_proxy.setZero(T, 8);

  const double w = 0.10;  // half stance width
  const double x_base_l = -0.3 * g.stride;
  const double x_base_r = x_base_l + 0.5 * g.stride;

  for (int t = 0; t < T; ++t) {
    const double time = static_cast<double>(t) / sc.fps + g.phase_shift;
    const double th = 2.0 * kPi * time / g.cycle;  // cycle angle
    const double thd = 2.0 * kPi / g.cycle;

    // joint curves: [pos, vel, acc] per channel, gait minus pure translation
    // scaled by amplitude_scale and added back onto the translation baseline
    auto emit = [&](int j, const Curve& cx, const Curve& cy, const Curve& cz, double rest_x,
                    double rest_y, double rest_z) {
      const Curve full[3] = {cx, cy, cz};
      if (amp == 1.0) {  // keep stance positions bit-exact
        for (int c = 0; c < 3; ++c) {
          out.motion.positions(t, 3 * j + c) = full[c].p;
          out.accel_gt(t, 3 * j + c) = full[c].a;
        }
        return;
      }
      const Curve base[3] = {Curve{rest_x + g.speed * time, g.speed, 0.0}, Curve{rest_y, 0.0, 0.0},
                             Curve{rest_z, 0.0, 0.0}};
      for (int c = 0; c < 3; ++c) {
        out.motion.positions(t, 3 * j + c) = base[c].p + amp * (full[c].p - base[c].p);
        out.accel_gt(t, 3 * j + c) = base[c].a + amp * (full[c].a - base[c].a);
      }
    };

    // root with vertical bob (step frequency) and lateral sway (cycle frequency)
    Curve rx{g.speed * time - 0.05 * g.stride, g.speed, 0.0};
    Curve ry{0.95 + g.bob * std::cos(2.0 * th), -2.0 * thd * g.bob * std::sin(2.0 * th),
             -4.0 * thd * thd * g.bob * std::cos(2.0 * th)};
    Curve rz{g.sway * std::sin(th), thd * g.sway * std::cos(th),
             -thd * thd * g.sway * std::sin(th)};
    emit(0, rx, ry, rz, -0.05 * g.stride, 0.95, 0.0);

    // chest and head follow with scaled sway and slight counter-motion
    Curve cx{rx.p + 0.01 * vscale * std::sin(2.0 * th), rx.v + 0.02 * thd * vscale * std::cos(2.0 * th),
             -0.04 * thd * thd * vscale * std::sin(2.0 * th)};
    Curve cy{ry.p + 0.25, ry.v, ry.a};
    Curve cz{1.3 * rz.p, 1.3 * rz.v, 1.3 * rz.a};
    emit(1, cx, cy, cz, -0.05 * g.stride, 1.20, 0.0);

    Curve hx{rx.p - 0.005 * vscale * std::sin(2.0 * th), rx.v - 0.01 * thd * vscale * std::cos(2.0 * th),
             0.02 * thd * thd * vscale * std::sin(2.0 * th)};
    Curve hy{ry.p + 0.45, ry.v, ry.a};
    Curve hz{1.5 * rz.p, 1.5 * rz.v, 1.5 * rz.a};
    emit(2, hx, hy, hz, -0.05 * g.stride, 1.40, 0.0);

    Curve flx, fly, frx, fry;
    gait_foot(g, time, 0.0, x_base_l, flx, fly);
    gait_foot(g, time, -0.5 * g.cycle, x_base_r, frx, fry);
    emit(3, flx, fly, Curve{w, 0.0, 0.0}, x_base_l, 0.0, w);
    emit(4, frx, fry, Curve{-w, 0.0, 0.0}, x_base_r, 0.0, -w);

    // torque proxy: per-joint |m * accel| magnitudes, unit masses
    for (int j = 0; j < 5; ++j) {
      const Eigen::Vector3d a = out.accel_gt.block<1, 3>(t, 3 * j).transpose();
      out.torque_proxy(t, j) = a.norm();
    }
  }
  return out;
}

void rescale_torque(Eigen::MatrixXd& torque) {
  const double peak = torque.maxCoeff();
  if (peak > 0.0) torque /= peak;
}

}  // namespace

SimOutput gait_pattern(const SimScenario& scenario) {
  scenario.validate();
  if (scenario.kind != ScenarioKind::kGait)
    throw std::invalid_argument("gait_pattern requires a gait scenario");
  SimOutput out = run_gait(scenario);
  rescale_torque(out.torque_proxy);
  return out;
}

SimOutput simulate(const SimScenario& scenario) {
  scenario.validate();
  SimOutput out;
  switch (scenario.kind) {
    case ScenarioKind::kPendulumChain: out = simulate_chain(scenario); break;
    case ScenarioKind::kBouncingMass: out = simulate_bounce(scenario); break;
    case ScenarioKind::kGait: out = run_gait(scenario); break;
  }
  rescale_torque(out.torque_proxy);
  return out;
}

Eigen::VectorXd scenario_condition(const SimScenario& scenario) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(8);
  c[static_cast<int>(scenario.kind)] = 1.0;
  c[3] = scenario.gait_speed / 2.0;
  c[4] = scenario.gait_cadence / 3.0;
  c[5] = scenario.amplitude_scale;
  c[6] = scenario.gait_phase;
  c[7] = scenario.gravity / 20.0;
  return c;
}

std::vector<SimScenario> default_corpus_scenarios(std::uint64_t seed, int count) {
  std::vector<SimScenario> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
    SimScenario s;
    s.kind = ScenarioKind::kGait;
    s.gait_speed = rng.uniform(1.0, 1.4);
    s.gait_cadence = 1.7;
    s.gait_phase = 0.0;
    s.amplitude_scale = 1.0;
    s.fps = 20.0;
    s.duration_s = 3.2;
    s.seed = Rng::derive(seed, static_cast<std::uint64_t>(i));
    out.push_back(s);
  }
  return out;
}

std::string scenario_to_json(const SimScenario& s) {
  JsonWriter w;
  w.begin_object();
  w.key("amplitude_scale");
  w.value(s.amplitude_scale);
  w.key("contact_damping");
  w.value(s.contact_damping);
  w.key("contact_stiffness");
  w.value(s.contact_stiffness);
  w.key("drop_height");
  w.value(s.drop_height);
  w.key("duration_s");
  w.value(s.duration_s);
  w.key("fps");
  w.value(s.fps);
  w.key("gait_cadence");
  w.value(s.gait_cadence);
  w.key("gait_phase");
  w.value(s.gait_phase);
  w.key("gait_speed");
  w.value(s.gait_speed);
  w.key("gravity");
  w.value(s.gravity);
  w.key("initial_angles");
  w.begin_array();
  for (double v : s.initial_angles) w.value(v);
  w.end_array();
  w.key("initial_rates");
  w.begin_array();
  for (double v : s.initial_rates) w.value(v);
  w.end_array();
  w.key("kind");
  w.value(scenario_kind_name(s.kind));
  w.key("link_lengths");
  w.begin_array();
  for (double v : s.link_lengths) w.value(v);
  w.end_array();
  w.key("masses");
  w.begin_array();
  for (double v : s.masses) w.value(v);
  w.end_array();
  w.key("pivot_height");
  w.value(s.pivot_height);
  w.key("seed");
  w.value_int(static_cast<long long>(s.seed));
  w.end_object();
  return w.str();
}

namespace {

SimScenario scenario_from_json(const nlohmann::json& j, const std::string& origin) {
  SimScenario s;
  s.kind = scenario_kind_from_name(j.at("kind").get<std::string>());
  if (j.contains("link_lengths"))
    s.link_lengths = j["link_lengths"].get<std::vector<double>>();
  if (j.contains("masses")) s.masses = j["masses"].get<std::vector<double>>();
  if (j.contains("initial_angles"))
    s.initial_angles = j["initial_angles"].get<std::vector<double>>();
  if (j.contains("initial_rates")) s.initial_rates = j["initial_rates"].get<std::vector<double>>();
  s.pivot_height = j.value("pivot_height", s.pivot_height);
  s.drop_height = j.value("drop_height", s.drop_height);
  s.gravity = j.value("gravity", s.gravity);
  s.contact_stiffness = j.value("contact_stiffness", s.contact_stiffness);
  s.contact_damping = j.value("contact_damping", s.contact_damping);
  s.duration_s = j.value("duration_s", s.duration_s);
  s.fps = j.value("fps", s.fps);
  s.seed = j.value("seed", static_cast<std::uint64_t>(0));
  s.gait_speed = j.value("gait_speed", s.gait_speed);
  s.gait_cadence = j.value("gait_cadence", s.gait_cadence);
  s.gait_phase = j.value("gait_phase", s.gait_phase);
  s.amplitude_scale = j.value("amplitude_scale", s.amplitude_scale);
  s.validate();
  (void)origin;
  return s;
}

}  // namespace

SimScenario scenario_from_json_text(const std::string& text, const std::string& origin) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + origin);
  return scenario_from_json(doc, origin);
}

namespace {

// motion-file array layout; group 3 nests per-joint 3-vectors, group 1 writes
// flat per-frame rows (torque channels)
std::string matrix_file_json(double fps, const std::vector<std::string>& names,
                             const Eigen::MatrixXd& rows, int group) {
  JsonWriter w;
  w.begin_object();
  w.key("fps");
  w.value(fps);
  w.key("frames");
  w.begin_array();
  const int T = static_cast<int>(rows.rows());
  const int J = static_cast<int>(rows.cols()) / group;
  for (int t = 0; t < T; ++t) {
    w.begin_array();
    for (int j = 0; j < J; ++j) {
      if (group == 1) {
        w.value(rows(t, j));
      } else {
        w.begin_array();
        for (int c = 0; c < group; ++c) w.value(rows(t, group * j + c));
        w.end_array();
      }
    }
    w.end_array();
  }
  w.end_array();
  w.key("joints");
  w.begin_array();
  for (const auto& n : names) w.value(n);
  w.end_array();
  w.end_object();
  return w.str() + "\n";
}

}  // namespace

CorpusManifest make_corpus(const std::vector<SimScenario>& scenarios, const std::string& out_dir,
                           const MetricConfig& metric_cfg, int jobs) {
  if (scenarios.empty()) throw std::invalid_argument("corpus needs at least one scenario");
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::vector<SimOutput> sims(scenarios.size());
  jobs = std::max(1, jobs);
  if (jobs == 1 || scenarios.size() < 2) {
    for (size_t i = 0; i < scenarios.size(); ++i) sims[i] = simulate(scenarios[i]);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (int j = 0; j < jobs; ++j)
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < scenarios.size(); i = next.fetch_add(1))
          sims[i] = simulate(scenarios[i]);
      });
    for (auto& th : pool) th.join();
  }

  CorpusManifest manifest;
  std::map<std::string, std::string> skeleton_files;  // kind name -> relative path
  char idbuf[16];
  for (size_t i = 0; i < scenarios.size(); ++i) {
    const SimScenario& sc = scenarios[i];
    SimOutput& sim = sims[i];
    std::snprintf(idbuf, sizeof(idbuf), "%03zu", i);
    CorpusEntry e;
    e.id = "clip_" + std::string(idbuf);
    e.motion_path = e.id + "_motion.json";
    e.accel_path = e.id + "_accel.json";
    e.torque_path = e.id + "_torque.json";
    e.scenario = sc;

    const std::string kind = scenario_kind_name(sc.kind);
    auto it = skeleton_files.find(kind);
    if (it == skeleton_files.end()) {
      const std::string rel = "skeleton_" + kind + ".json";
      save_skeleton(sim.skeleton, (fs::path(out_dir) / rel).string());
      it = skeleton_files.emplace(kind, rel).first;
    }
    e.skeleton_path = it->second;

    save_motion(sim.motion, (fs::path(out_dir) / e.motion_path).string());
    write_text_file((fs::path(out_dir) / e.accel_path).string(),
                    matrix_file_json(sc.fps, sim.motion.joint_names, sim.accel_gt, 3));
    std::vector<std::string> channels;
    for (int c = 0; c < 8; ++c) channels.push_back("torque_" + std::to_string(c));
    write_text_file((fs::path(out_dir) / e.torque_path).string(),
                    matrix_file_json(sc.fps, channels, sim.torque_proxy, 1));
    // score the file as written so the manifest matches any later
    // recomputation from disk bit for bit
    e.metrics = full_report(load_motion((fs::path(out_dir) / e.motion_path).string()),
                            sim.skeleton, metric_cfg);
    manifest.clips.push_back(std::move(e));
  }
  save_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
  return manifest;
}

void save_manifest(const CorpusManifest& manifest, const std::string& path) {
  JsonWriter w;
  w.begin_object();
  w.key("clips");
  w.begin_array();
  for (const CorpusEntry& e : manifest.clips) {
    w.begin_object();
    w.key("accel_path");
    w.value(e.accel_path);
    w.key("id");
    w.value(e.id);
    w.key("metrics");
    // embed the canonical report object (already serialized text)
    {
      std::string rep = report_to_json(e.metrics);
      while (!rep.empty() && (rep.back() == '\n')) rep.pop_back();
      w.raw(rep);
    }
    w.key("motion_path");
    w.value(e.motion_path);
    w.key("scenario");
    w.raw(scenario_to_json(e.scenario));
    w.key("skeleton_path");
    w.value(e.skeleton_path);
    w.key("torque_path");
    w.value(e.torque_path);
    w.end_object();
  }
  w.end_array();
  w.end_object();
  write_text_file(path, w.str() + "\n");
}

LoadedMatrix load_matrix_file(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + path);
  LoadedMatrix out;
  out.fps = doc.at("fps").get<double>();
  for (const auto& n : doc.at("joints")) out.names.push_back(n.get<std::string>());
  const auto& frames = doc.at("frames");
  const int T = static_cast<int>(frames.size());
  if (T < 1) throw std::runtime_error(path + ": empty frames array");
  const bool nested = !frames[0].empty() && frames[0][0].is_array();
  const int J = static_cast<int>(frames[0].size());
  out.values.resize(T, nested ? 3 * J : J);
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < J; ++j) {
      if (nested) {
        for (int c = 0; c < 3; ++c) out.values(t, 3 * j + c) = frames[t][j][c].get<double>();
      } else {
        out.values(t, j) = frames[t][j].get<double>();
      }
    }
  }
  return out;
}

CorpusManifest load_manifest(const std::string& path) {
  nlohmann::json doc = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + path);
  CorpusManifest m;
  for (const auto& cj : doc.at("clips")) {
    CorpusEntry e;
    e.id = cj.at("id").get<std::string>();
    e.motion_path = cj.at("motion_path").get<std::string>();
    e.accel_path = cj.at("accel_path").get<std::string>();
    e.torque_path = cj.at("torque_path").get<std::string>();
    e.skeleton_path = cj.at("skeleton_path").get<std::string>();
    e.scenario = scenario_from_json(cj.at("scenario"), path);
    e.metrics = report_from_json(cj.at("metrics").dump(), path);
    m.clips.push_back(std::move(e));
  }
  return m;
}

}  // namespace biomech
