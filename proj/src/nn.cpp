#include "biomech/nn.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "biomech/json_writer.hpp"

namespace biomech {

int ParamStore::add(const std::string& name, int rows, int cols) {
  if (finalized_) throw std::logic_error("ParamStore already finalized");
  if (by_name_.count(name)) throw std::logic_error("duplicate tensor name " + name);
  Spec s;
  s.name = name;
  s.rows = rows;
  s.cols = cols;
  s.offset = specs_.empty() ? 0 : specs_.back().offset + specs_.back().rows * specs_.back().cols;
  by_name_[name] = static_cast<int>(specs_.size());
  specs_.push_back(s);
  return static_cast<int>(specs_.size()) - 1;
}

void ParamStore::finalize() {
  long total = specs_.empty() ? 0 : specs_.back().offset + specs_.back().rows * specs_.back().cols;
  values_ = Eigen::VectorXd::Zero(total);
  grads_ = Eigen::VectorXd::Zero(total);
  finalized_ = true;
}

Eigen::Map<Eigen::MatrixXd> ParamStore::view(int id) {
  const Spec& s = specs_[id];
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<const Eigen::MatrixXd> ParamStore::view(int id) const {
  const Spec& s = specs_[id];
  return {values_.data() + s.offset, s.rows, s.cols};
}

Eigen::Map<Eigen::MatrixXd> ParamStore::grad_view(int id) {
  const Spec& s = specs_[id];
  return {grads_.data() + s.offset, s.rows, s.cols};
}

void ParamStore::init_xavier(int id, Rng& rng) {
  const Spec& s = specs_[id];
  const double limit = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
  auto v = view(id);
  for (int c = 0; c < s.cols; ++c)
    for (int r = 0; r < s.rows; ++r) v(r, c) = rng.uniform(-limit, limit);
}

std::string ParamStore::to_json(const std::string& meta_json) const {
  JsonWriter w;
  w.begin_object();
  w.key("meta");
  w.raw(meta_json.empty() ? "{}" : meta_json);
  w.key("shapes");
  w.begin_object();
  // manifest in registration order; parsing is name-keyed so order is
  // informational only
  for (const Spec& s : specs_) {
    w.key(s.name);
    w.begin_array();
    w.value_int(s.rows);
    w.value_int(s.cols);
    w.end_array();
  }
  w.end_object();
  w.key("values");
  w.begin_array();
  for (long i = 0; i < values_.size(); ++i) w.value_exact(values_[i]);
  w.end_array();
  w.key("version");
  w.value("biovae-params-v1");
  w.end_object();
  return w.str() + "\n";
}

std::string ParamStore::load_values_from_json(const std::string& text, const std::string& origin) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw std::runtime_error("malformed JSON in " + origin);
  if (doc.value("version", "") != std::string("biovae-params-v1"))
    throw std::runtime_error(origin + ": expected version biovae-params-v1");
  const auto& shapes = doc.at("shapes");
  for (const Spec& s : specs_) {
    const auto it = shapes.find(s.name);
    if (it == shapes.end())
      throw std::runtime_error(origin + ": missing tensor \"" + s.name + "\"");
    if ((*it)[0].get<int>() != s.rows || (*it)[1].get<int>() != s.cols)
      throw std::runtime_error(origin + ": shape mismatch for tensor \"" + s.name + "\"");
  }
  const auto& vals = doc.at("values");
  if (static_cast<long>(vals.size()) != values_.size())
    throw std::runtime_error(origin + ": parameter count mismatch");
  for (long i = 0; i < values_.size(); ++i) values_[i] = vals[i].get<double>();
  return doc.at("meta").dump();
}

Linear::Linear(ParamStore& store, const std::string& name, int in, int out) {
  W = store.add(name + ".W", in, out);
  b = store.add(name + ".b", 1, out);
}

Eigen::MatrixXd Linear::forward(const ParamStore& store, const Eigen::MatrixXd& x) const {
  return (x * store.view(W)).rowwise() + store.view(b).row(0);
}

Eigen::MatrixXd Linear::backward(ParamStore& store, const Eigen::MatrixXd& x,
                                 const Eigen::MatrixXd& dy) const {
  store.grad_view(W) += x.transpose() * dy;
  store.grad_view(b).row(0) += dy.colwise().sum();
  return dy * store.view(W).transpose();
}

}  // namespace biomech
