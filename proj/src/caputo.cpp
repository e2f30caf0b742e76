#include "fracquench/caputo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace fracquench::caputo {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("caputo: alpha must lie in (0, 1), got " + std::to_string(alpha));
}

// x^{p} - y^{p} for x > y >= 0, without cancellation when x ~ y.
double power_difference(double x, double y, double p) {
  if (y <= 0.0) return std::pow(x, p);
  return std::pow(y, p) * std::expm1(p * std::log1p((x - y) / y));
}

}  // namespace

TimeMesh::TimeMesh(std::vector<double> nodes, double grading)
    : nodes_(std::move(nodes)), grading_(grading) {
  if (nodes_.size() < 2) throw std::invalid_argument("TimeMesh: need at least one step");
  if (nodes_.front() != 0.0) throw std::invalid_argument("TimeMesh: first node must be 0");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (!(nodes_[i] > nodes_[i - 1]))
      throw std::invalid_argument("TimeMesh: nodes must be strictly increasing");
  }
  if (!(grading_ >= 1.0)) throw std::invalid_argument("TimeMesh: grading must be >= 1");
}

TimeMesh TimeMesh::uniform(double horizon, int steps) { return graded(horizon, steps, 1.0); }

TimeMesh TimeMesh::graded(double horizon, int steps, double grading) {
  if (!(horizon > 0.0) || steps < 1) throw std::invalid_argument("TimeMesh: bad horizon/steps");
  std::vector<double> nodes(static_cast<std::size_t>(steps) + 1);
  for (int n = 0; n <= steps; ++n) {
    nodes[static_cast<std::size_t>(n)] =
        horizon * std::pow(static_cast<double>(n) / steps, grading);
  }
  nodes.back() = horizon;
  return TimeMesh(std::move(nodes), grading);
}

double TimeMesh::min_step() const {
  double m = nodes_[1] - nodes_[0];
  for (std::size_t i = 2; i < nodes_.size(); ++i) m = std::min(m, nodes_[i] - nodes_[i - 1]);
  return m;
}

void l1_increment_coefficients(std::span<const double> nodes, int n, double alpha,
                               std::span<double> out) {
  check_alpha(alpha);
  if (n < 1 || static_cast<std::size_t>(n) >= nodes.size())
    throw ContractError("l1: step index out of range");
  const double p = 1.0 - alpha;
  const double inv_gamma = 1.0 / std::tgamma(2.0 - alpha);
  const double tn = nodes[static_cast<std::size_t>(n)];
  for (int k = 1; k <= n; ++k) {
    const double lo = nodes[static_cast<std::size_t>(k - 1)];
    const double hi = nodes[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(k - 1)] =
        power_difference(tn - lo, tn - hi, p) * inv_gamma / (hi - lo);
  }
}

std::vector<double> l1_weights(std::span<const double> nodes, int n, double alpha) {
  std::vector<double> a(static_cast<std::size_t>(n));
  l1_increment_coefficients(nodes, n, alpha, a);
  std::vector<double> b(static_cast<std::size_t>(n) + 1, 0.0);
  // sum_k a_k (u^k - u^{k-1})  =>  b_k = a_k - a_{k+1}, b_0 = -a_1, b_n = a_n.
  b[0] = -a[0];
  for (int k = 1; k < n; ++k) b[static_cast<std::size_t>(k)] = a[k - 1] - a[k];
  b[static_cast<std::size_t>(n)] = a[static_cast<std::size_t>(n) - 1];
  return b;
}

std::vector<double> l1_weights(const TimeMesh& mesh, int n, double alpha) {
  return l1_weights(mesh.nodes(), n, alpha);
}

void HistoryBuffer::push(std::span<const double> level) {
  if (level.size() != width_) throw ContractError("HistoryBuffer: level width mismatch");
  data_.insert(data_.end(), level.begin(), level.end());
}

void HistoryBuffer::truncate(std::size_t levels) {
  if (levels < size()) data_.resize(levels * width_);
}

std::vector<double> HistoryBuffer::series(std::size_t node) const {
  std::vector<double> out(size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = value(k, node);
  return out;
}

double caputo_l1_apply(std::span<const double> values, std::span<const double> nodes, int n,
                       double alpha) {
  if (n < 1) throw ContractError("caputo_l1_apply: n must be >= 1");
  if (values.size() < static_cast<std::size_t>(n) + 1)
    throw ContractError("caputo_l1_apply: history holds " + std::to_string(values.size()) +
                        " values, need " + std::to_string(n + 1));
  const std::vector<double> b = l1_weights(nodes, n, alpha);
  // Extended accumulator: the sum cancels down from terms of size b_{n,n} u.
  long double acc = 0.0L;
  for (int k = 0; k <= n; ++k)
    acc += static_cast<long double>(b[static_cast<std::size_t>(k)]) * values[static_cast<std::size_t>(k)];
  return static_cast<double>(acc);
}

long double caputo_l1_apply_wide(std::span<const long double> values, std::span<const double> nodes, int n,
                                 double alpha) {
  if (n < 1) throw ContractError("caputo_l1_apply: n must be >= 1");
  if (values.size() < static_cast<std::size_t>(n) + 1)
    throw ContractError("caputo_l1_apply: history holds " + std::to_string(values.size()) +
                        " values, need " + std::to_string(n + 1));
  const std::vector<double> b = l1_weights(nodes, n, alpha);
  long double acc = 0.0L;
  for (int k = 0; k <= n; ++k)
    acc += static_cast<long double>(b[static_cast<std::size_t>(k)]) * values[static_cast<std::size_t>(k)];
  return acc;
}

double caputo_l1_apply(const HistoryBuffer& history, std::size_t node, const TimeMesh& mesh, int n,
                       double alpha) {
  if (history.size() < static_cast<std::size_t>(n) + 1)
    throw ContractError("caputo_l1_apply: history shorter than n + 1");
  const std::vector<double> series = history.series(node);
  return caputo_l1_apply(series, mesh.nodes(), n, alpha);
}

void caputo_l1_apply_all(const HistoryBuffer& history, std::span<const double> nodes, int n,
                         double alpha, std::span<double> out) {
  if (history.size() < static_cast<std::size_t>(n) + 1)
    throw ContractError("caputo_l1_apply_all: history shorter than n + 1");
  if (out.size() != history.width()) throw ContractError("caputo_l1_apply_all: output width");
  const std::vector<double> b = l1_weights(nodes, n, alpha);
  std::vector<long double> acc(out.size(), 0.0L);
  for (int k = 0; k <= n; ++k) {
    const long double w = b[static_cast<std::size_t>(k)];
    const auto level = history.level(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < out.size(); ++i) acc[i] += w * level[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(acc[i]);
}

double caputo_exact_power(double alpha, double p, double t) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::invalid_argument("caputo_exact_power: alpha must lie in (0, 1]");
  if (!(p > 0.0)) throw std::domain_error("caputo_exact_power: p must be > 0");
  if (!(t >= 0.0)) throw std::domain_error("caputo_exact_power: t must be >= 0");
  const double coeff = std::exp(std::lgamma(p + 1.0) - std::lgamma(p + 1.0 - alpha));
  if (t == 0.0) {
    if (p > alpha) return 0.0;
    if (p == alpha) return coeff;
    return std::numeric_limits<double>::infinity();
  }
  return coeff * std::pow(t, p - alpha);
}

std::vector<double> rl_integral(double alpha, std::span<const double> samples,
                                std::span<const double> nodes) {
  if (!(alpha > 0.0)) throw std::invalid_argument("rl_integral: alpha must be > 0");
  if (samples.size() != nodes.size()) throw ContractError("rl_integral: samples/nodes mismatch");
  const std::size_t count = nodes.size();
  std::vector<double> out(count, 0.0);
  const double inv_gamma = 1.0 / std::tgamma(alpha);
  for (std::size_t n = 1; n < count; ++n) {
    const double tn = nodes[n];
    double acc = 0.0;
    for (std::size_t k = 1; k <= n; ++k) {
      const double a = tn - nodes[k - 1];
      const double b = tn - nodes[k];
      const double h = nodes[k] - nodes[k - 1];
      // int_b^a s^{alpha-1} ds and int_b^a s^{alpha-1} (a - s) ds
      const double i0 = power_difference(a, b, alpha) / alpha;
      const double i1 = a * i0 - power_difference(a, b, alpha + 1.0) / (alpha + 1.0);
      acc += samples[k - 1] * (h * i0 - i1) / h + samples[k] * i1 / h;
    }
    out[n] = acc * inv_gamma;
  }
  return out;
}

}  // namespace fracquench::caputo
