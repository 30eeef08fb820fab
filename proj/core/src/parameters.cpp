#include "weakoie/parameters.hpp"

#include <cmath>
#include <stdexcept>

namespace weakoie {

Eigen::MatrixXd& ParameterSet::add(std::string name, Eigen::Index rows, Eigen::Index cols) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter " + name);
  params_.push_back({std::move(name), Eigen::MatrixXd::Zero(rows, cols)});
  return params_.back().value;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw std::out_of_range("no parameter named " + name);
}

Eigen::MatrixXd& ParameterSet::operator[](const std::string& name) {
  return params_[index_of(name)].value;
}

const Eigen::MatrixXd& ParameterSet::operator[](const std::string& name) const {
  return params_[index_of(name)].value;
}

bool ParameterSet::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return true;
  }
  return false;
}

std::size_t ParameterSet::num_values() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.params_.reserve(params_.size());
  for (const auto& p : params_) {
    out.params_.push_back({p.name, Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols())});
  }
  return out;
}

void ParameterSet::set_zero() {
  for (auto& p : params_) p.value.setZero();
}

void ParameterSet::scale(double factor) {
  for (auto& p : params_) p.value *= factor;
}

void ParameterSet::add_scaled(const ParameterSet& other, double factor) {
  if (other.params_.size() != params_.size()) throw std::invalid_argument("parameter set mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    params_[i].value += factor * other.params_[i].value;
  }
}

bool ParameterSet::all_finite() const {
  for (const auto& p : params_) {
    if (!p.value.allFinite()) return false;
  }
  return true;
}

double ParameterSet::squared_norm() const {
  double s = 0.0;
  for (const auto& p : params_) s += p.value.squaredNorm();
  return s;
}

bool operator==(const ParameterSet& a, const ParameterSet& b) {
  if (a.params_.size() != b.params_.size()) return false;
  for (std::size_t i = 0; i < a.params_.size(); ++i) {
    const auto& pa = a.params_[i];
    const auto& pb = b.params_[i];
    if (pa.name != pb.name || pa.value.rows() != pb.value.rows() ||
        pa.value.cols() != pb.value.cols()) {
      return false;
    }
    if (pa.value != pb.value) return false;
  }
  return true;
}

Optimizer::Optimizer(OptimizerConfig config, const ParameterSet& shape)
    : config_(config), first_moment_(shape.zeros_like()), second_moment_(shape.zeros_like()) {
  if (!(config_.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be > 0");
}

void Optimizer::step(ParameterSet& params, const ParameterSet& grads) {
  double scale = 1.0;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(grads.squared_norm());
    if (norm > config_.clip_norm) scale = config_.clip_norm / norm;
  }
  auto& p = params.entries();
  const auto& g = grads.entries();
  if (config_.kind == OptimizerKind::kSgd) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i].value -= config_.learning_rate * scale * g[i].value;
    }
    return;
  }
  ++steps_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  auto& m = first_moment_.entries();
  auto& v = second_moment_.entries();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Eigen::MatrixXd gi = scale * g[i].value;
    m[i].value = config_.beta1 * m[i].value + (1.0 - config_.beta1) * gi;
    v[i].value = config_.beta2 * v[i].value + (1.0 - config_.beta2) * gi.cwiseProduct(gi);
    p[i].value.array() -= config_.learning_rate * (m[i].value.array() / bc1) /
                          ((v[i].value.array() / bc2).sqrt() + config_.epsilon);
  }
}

}  // namespace weakoie
