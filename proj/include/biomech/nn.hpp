#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "biomech/rng.hpp"

namespace biomech {

// All trainable tensors live in one flat value vector with a parallel
// gradient vector; modules hold tensor ids and view their slices as
// matrices. This keeps the optimizer, EMA, serialization and
// finite-difference probing trivial.
class ParamStore {
 public:
  struct Spec {
    std::string name;
    int rows = 0, cols = 0;
    long offset = 0;
  };

  int add(const std::string& name, int rows, int cols);
  void finalize();
  bool finalized() const { return finalized_; }

  long size() const { return values_.size(); }
  int tensor_count() const { return static_cast<int>(specs_.size()); }
  const Spec& spec(int id) const { return specs_[id]; }

  Eigen::Map<Eigen::MatrixXd> view(int id);
  Eigen::Map<const Eigen::MatrixXd> view(int id) const;
  Eigen::Map<Eigen::MatrixXd> grad_view(int id);

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  Eigen::VectorXd& grads() { return grads_; }
  const Eigen::VectorXd& grads() const { return grads_; }
  void zero_grads() { grads_.setZero(); }

  // uniform Xavier fill for one tensor; biases and zero-init tensors are
  // left at zero by callers
  void init_xavier(int id, Rng& rng);

  // "biovae-params-v1" flat array + shape manifest; meta is an arbitrary
  // canonical JSON object spliced in verbatim
  std::string to_json(const std::string& meta_json) const;
  // restores values into an already-registered store with identical shapes;
  // returns the meta object text
  std::string load_values_from_json(const std::string& text, const std::string& origin);

 private:
  std::vector<Spec> specs_;
  std::map<std::string, int> by_name_;
  Eigen::VectorXd values_, grads_;
  bool finalized_ = false;
};

inline Eigen::MatrixXd tanh_forward(const Eigen::MatrixXd& z) { return z.array().tanh(); }
// derivative through y = tanh(z) given y
inline Eigen::MatrixXd tanh_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}
inline Eigen::MatrixXd sigmoid_forward(const Eigen::MatrixXd& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}
inline Eigen::MatrixXd sigmoid_backward(const Eigen::MatrixXd& y, const Eigen::MatrixXd& dy) {
  return (dy.array() * y.array() * (1.0 - y.array())).matrix();
}

// y = x * W + b (row-wise); backward accumulates into the store's gradients
struct Linear {
  int W = -1, b = -1;
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int in, int out);
  Eigen::MatrixXd forward(const ParamStore& store, const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd backward(ParamStore& store, const Eigen::MatrixXd& x,
                           const Eigen::MatrixXd& dy) const;
};

}  // namespace biomech
