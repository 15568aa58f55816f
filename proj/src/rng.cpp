#include "mltm/rng.hpp"

#include <cassert>
#include <cmath>
#include <limits>

#include "mltm/common.hpp"

namespace mltm {

int Rng::categorical(const double* weights, int n) {
  assert(n >= 1);
  if (n == 1) return 0;  // no draw consumed
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += weights[i];
  if (!(total > 0.0)) throw NumericError("categorical: no positive weight");
  double u = next_double() * total;
  for (int i = 0; i < n; ++i) {
    u -= weights[i];
    if (u < 0.0) return i;
  }
  // rounding pushed u past the last bucket
  for (int i = n - 1; i >= 0; --i) {
    if (weights[i] > 0.0) return i;
  }
  return n - 1;
}

int Rng::categorical_log(const double* log_weights, int n) {
  assert(n >= 1);
  if (n == 1) return std::isinf(log_weights[0]) && log_weights[0] < 0 ? -1 : 0;
  double max_lw = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) max_lw = std::max(max_lw, log_weights[i]);
  if (std::isinf(max_lw) && max_lw < 0) return -1;
  double total = 0.0;
  for (int i = 0; i < n; ++i) total += std::exp(log_weights[i] - max_lw);
  double u = next_double() * total;
  for (int i = 0; i < n; ++i) {
    u -= std::exp(log_weights[i] - max_lw);
    if (u < 0.0) return i;
  }
  for (int i = n - 1; i >= 0; --i) {
    if (log_weights[i] == max_lw) return i;
  }
  return n - 1;
}

double Rng::normal() {
  // polar method; the spare is discarded to keep the state a pure function of
  // the draw count
  while (true) {
    double u = 2.0 * next_double() - 1.0;
    double v = 2.0 * next_double() - 1.0;
    double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) {
      return u * std::sqrt(-2.0 * std::log(s) / s);
    }
  }
}

double Rng::gamma(double shape) {
  assert(shape > 0.0);
  if (shape < 1.0) {
    double u = next_double();
    while (u <= 0.0) u = next_double();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

void Rng::dirichlet(const Eigen::VectorXd& concentration, Eigen::VectorXd& out) {
  const auto n = concentration.size();
  out.resize(n);
  double sum = 0.0;
  while (sum == 0.0) {
    for (Eigen::Index i = 0; i < n; ++i) {
      // zero concentration is a point mass at zero
      out[i] = concentration[i] > 0.0 ? gamma(concentration[i]) : 0.0;
      sum += out[i];
    }
  }
  out /= sum;
}

Eigen::VectorXd Rng::dirichlet_symmetric(int dim, double concentration) {
  Eigen::VectorXd conc = Eigen::VectorXd::Constant(dim, concentration);
  Eigen::VectorXd out;
  dirichlet(conc, out);
  return out;
}

}  // namespace mltm
