#include "mdta2g/params.hpp"

#include "mdta2g/errors.hpp"

#include <cmath>

namespace mdta2g {

ad::Var ParameterStore::add(std::string name, Mat init) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  ad::Var v = ad::leaf(std::move(init));
  entries_.push_back({std::move(name), v});
  return v;
}

ad::Var ParameterStore::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.var;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

bool ParameterStore::contains(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return true;
  }
  return false;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += static_cast<std::size_t>(e.var.value().size());
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& e : entries_) e.var.zero_grad();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (other.entries_.size() != entries_.size()) throw ConfigError("parameter stores differ in size");
  for (auto& e : entries_) {
    const Mat& src = other.find(e.name).value();
    if (src.rows() != e.var.rows() || src.cols() != e.var.cols()) {
      throw ConfigError("parameter '" + e.name + "' has a different shape");
    }
    e.var.mutable_value() = src;
  }
}

Mat trunc_normal(Eigen::Index rows, Eigen::Index cols, double std, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double z = rng.normal();
    while (std::abs(z) > 2.0) z = rng.normal();
    m.data()[i] = z * std;
  }
  return m;
}

Linear Linear::create(ParameterStore& store, const std::string& name, int in, int out, Rng& rng,
                      double std) {
  Linear l;
  l.weight = store.add(name + ".weight", trunc_normal(in, out, std, rng));
  l.bias = store.add(name + ".bias", Mat::Zero(1, out));
  return l;
}

}  // namespace mdta2g
