#include "mdta2g/diffusion.hpp"

#include "mdta2g/errors.hpp"
#include "mdta2g/io.hpp"

#include <cmath>

namespace mdta2g {

namespace {

void check_step(int t, const Schedule& s, const char* op) {
  if (t < 1 || t > s.steps) {
    throw std::invalid_argument(std::string(op) + ": step " + std::to_string(t) + " outside [1, " +
                                std::to_string(s.steps) + "]");
  }
}

}  // namespace

Schedule make_schedule(int steps, double beta_start, double beta_end) {
  if (steps < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
  if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
    throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");
  }
  Schedule s;
  s.steps = steps;
  s.beta.resize(static_cast<std::size_t>(steps));
  s.alpha.resize(s.beta.size());
  s.alpha_bar.resize(s.beta.size());
  double prod = 1.0;
  for (int i = 0; i < steps; ++i) {
    const double frac = steps == 1 ? 0.0 : static_cast<double>(i) / (steps - 1);
    const double b = i == steps - 1 && steps > 1 ? beta_end : beta_start + (beta_end - beta_start) * frac;
    s.beta[static_cast<std::size_t>(i)] = b;
    s.alpha[static_cast<std::size_t>(i)] = 1.0 - b;
    prod *= 1.0 - b;
    s.alpha_bar[static_cast<std::size_t>(i)] = prod;
  }
  return s;
}

std::string schedule_table(const Schedule& schedule) {
  std::string out;
  for (int t = 1; t <= schedule.steps; ++t) {
    out += std::to_string(t) + " " + format_double(schedule.beta_at(t)) + " " +
           format_double(schedule.alpha_bar_at(t)) + "\n";
  }
  return out;
}

Mat q_sample(const Mat& x0, int t, const Mat& eps, const Schedule& schedule) {
  check_step(t, schedule, "q_sample");
  if (x0.rows() != eps.rows() || x0.cols() != eps.cols()) throw std::invalid_argument("q_sample: shape mismatch");
  const double ab = schedule.alpha_bar_at(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

Mat posterior_mean(const Mat& x_t, const Mat& x0_hat, int t, const Schedule& schedule) {
  check_step(t, schedule, "posterior_step");
  if (x_t.rows() != x0_hat.rows() || x_t.cols() != x0_hat.cols()) {
    throw std::invalid_argument("posterior_step: shape mismatch");
  }
  const double ab_t = schedule.alpha_bar_at(t);
  const double ab_prev = schedule.alpha_bar_at(t - 1);
  const double beta = schedule.beta_at(t);
  const double c_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
  const double c_xt = std::sqrt(schedule.alpha_at(t)) * (1.0 - ab_prev) / (1.0 - ab_t);
  return c_x0 * x0_hat + c_xt * x_t;
}

Mat posterior_step(const Mat& x_t, const Mat& x0_hat, int t, const Schedule& schedule, Rng& rng) {
  Mat mean = posterior_mean(x_t, x0_hat, t, schedule);
  if (t == 1) return mean;
  return mean + std::sqrt(schedule.beta_at(t)) * gaussian_like(mean.rows(), mean.cols(), rng);
}

Mat predict_x0(const Denoiser& denoiser, const Mat& x_t, int t, const ConditionBundle& cond) {
  Mat out = denoiser(x_t, t, cond);
  if (out.rows() != x_t.rows() || out.cols() != x_t.cols()) {
    throw std::runtime_error("denoiser returned a " + std::to_string(out.rows()) + "x" + std::to_string(out.cols()) +
                             " estimate for a " + std::to_string(x_t.rows()) + "x" + std::to_string(x_t.cols()) +
                             " input");
  }
  return out;
}

Mat gaussian_like(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace mdta2g
