#pragma once

#include "mdta2g/autograd.hpp"
#include "mdta2g/rng.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mdta2g {

struct NamedParameter {
  std::string name;
  ad::Var var;
};

/// Ordered registry of trainable tensors. Registration order is part of the
/// model definition: checkpoints and optimizers iterate it.
class ParameterStore {
 public:
  ad::Var add(std::string name, Mat init);

  const std::vector<NamedParameter>& entries() const { return entries_; }
  ad::Var find(std::string_view name) const;
  bool contains(std::string_view name) const;
  std::size_t scalar_count() const;
  void zero_grad();

  /// Copies values by name; both stores must hold the same names and shapes.
  void copy_values_from(const ParameterStore& other);

 private:
  std::vector<NamedParameter> entries_;
};

/// Normal(0, std) resampled until within two standard deviations.
Mat trunc_normal(Eigen::Index rows, Eigen::Index cols, double std, Rng& rng);

/// Affine map x W + b with W stored (in, out).
struct Linear {
  ad::Var weight;
  ad::Var bias;

  static Linear create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
                       double std = 0.02);
  ad::Var operator()(const ad::Var& x) const { return ad::linear(x, weight, bias); }
  int in_features() const { return static_cast<int>(weight.rows()); }
  int out_features() const { return static_cast<int>(weight.cols()); }
};

}  // namespace mdta2g
