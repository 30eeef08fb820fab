#pragma once

// Named parameter arrays and first-order optimizers over them.

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace weakoie {

struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
};

class ParameterSet {
 public:
  Eigen::MatrixXd& add(std::string name, Eigen::Index rows, Eigen::Index cols);

  Eigen::MatrixXd& operator[](const std::string& name);
  const Eigen::MatrixXd& operator[](const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  std::size_t num_values() const;
  std::vector<Parameter>& entries() { return params_; }
  const std::vector<Parameter>& entries() const { return params_; }

  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  void set_zero();
  void scale(double factor);
  void add_scaled(const ParameterSet& other, double factor);
  bool all_finite() const;
  double squared_norm() const;

  friend bool operator==(const ParameterSet& a, const ParameterSet& b);

 private:
  std::size_t index_of(const std::string& name) const;
  std::vector<Parameter> params_;
};

enum class OptimizerKind { kAdam, kSgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // <= 0 disables clipping
};

// Minimizes: params -= step(grads).
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, const ParameterSet& shape);
  void step(ParameterSet& params, const ParameterSet& grads);
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  ParameterSet first_moment_;
  ParameterSet second_moment_;
  long steps_ = 0;
};

}  // namespace weakoie
