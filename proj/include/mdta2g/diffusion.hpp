#pragma once

#include "mdta2g/autograd.hpp"
#include "mdta2g/conditions.hpp"
#include "mdta2g/rng.hpp"

#include <functional>
#include <string>
#include <vector>

namespace mdta2g {

/// Precomputed noise tables. Steps are 1-based; index t-1 holds step t.
struct Schedule {
  int steps = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;

  double beta_at(int t) const { return beta.at(static_cast<std::size_t>(t - 1)); }
  double alpha_at(int t) const { return alpha.at(static_cast<std::size_t>(t - 1)); }
  /// alpha_bar_0 is defined as 1.
  double alpha_bar_at(int t) const { return t == 0 ? 1.0 : alpha_bar.at(static_cast<std::size_t>(t - 1)); }
};

/// Linear beta from beta_start to beta_end inclusive; alpha_bar by cumulative product.
Schedule make_schedule(int steps = 1000, double beta_start = 1e-4, double beta_end = 0.02);

/// Rows "t beta_t alpha_bar_t", one per step.
std::string schedule_table(const Schedule& schedule);

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps.
Mat q_sample(const Mat& x0, int t, const Mat& eps, const Schedule& schedule);

/// Mean of q(x_{t-1} | x_t, x0_hat).
Mat posterior_mean(const Mat& x_t, const Mat& x0_hat, int t, const Schedule& schedule);

/// Draws x_{t-1} ~ N(posterior_mean, beta_t I); returns the mean at t = 1.
Mat posterior_step(const Mat& x_t, const Mat& x0_hat, int t, const Schedule& schedule, Rng& rng);

/// Anything that maps (x_t, t, conditions) to an estimate of x0.
using Denoiser = std::function<Mat(const Mat& x_t, int t, const ConditionBundle& cond)>;

/// Runs the denoiser and enforces the x0-prediction contract (same shape as x_t).
Mat predict_x0(const Denoiser& denoiser, const Mat& x_t, int t, const ConditionBundle& cond);

Mat gaussian_like(Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace mdta2g
