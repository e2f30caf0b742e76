#include "fracquench/caputo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fracquench::caputo {

namespace {

// Max relative residual of the modes against tau^{-alpha} on a log grid.
double max_relative_residual(const SoeModes& modes, std::size_t samples) {
  const double lo = std::log(modes.delta);
  const double hi = std::log(modes.horizon);
  double worst = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const double tau = std::exp(lo + (hi - lo) * static_cast<double>(j) / (samples - 1));
    const double exact = std::pow(tau, -modes.alpha);
    worst = std::max(worst, std::abs(modes.evaluate(tau) - exact) / exact);
  }
  return worst;
}

// Upper-tail cut: Gamma(alpha, y) / Gamma(alpha) <= tol for y >= cut.
double upper_tail_cut(double alpha, double tol) {
  const double g = std::tgamma(alpha);
  double y = std::log(1.0 / (tol * g)) + 1.0;
  // Gamma(alpha, y) <= y^{alpha-1} e^{-y} for alpha <= 1 and y > 0.
  while (std::pow(y, alpha - 1.0) * std::exp(-y) / g > tol) y += 0.5;
  return y;
}

}  // namespace

double SoeModes::evaluate(double tau) const {
  double acc = 0.0;
  for (std::size_t m = 0; m < weights.size(); ++m) acc += weights[m] * std::exp(-exponents[m] * tau);
  return acc;
}

// tau^{-alpha} = 1/Gamma(alpha) int_R exp(alpha x - tau e^x) dx, discretized
// by the truncated trapezoidal rule in x. Truncation limits and the step are
// set from the tail and strip-analyticity bounds, then the residual is
// checked directly and the step shrunk until the tolerance holds.
SoeModes soe_compress(double alpha, double delta, double horizon, double soe_tol,
                      std::size_t max_modes) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("soe_compress: alpha in (0, 1)");
  if (!(delta > 0.0 && delta < horizon)) throw std::invalid_argument("soe_compress: need 0 < delta < T");
  if (!(soe_tol > 0.0 && soe_tol <= 1e-3)) throw std::invalid_argument("soe_compress: soe_tol in (0, 1e-3]");

  const double part = soe_tol / 4.0;
  const double g = std::tgamma(alpha);
  const double x_min = (std::log(part * alpha * g) - alpha * std::log(horizon)) / alpha;
  const double x_max = std::log(upper_tail_cut(alpha, part) / delta);

  // Strip half-width d: trapezoid error <= 2 (cos d)^{-alpha} / (e^{2 pi d / h} - 1).
  const double d = 1.3;
  double h = 2.0 * std::numbers::pi * d / std::log(1.0 + 2.0 * std::pow(std::cos(d), -alpha) / part);

  SoeModes modes;
  modes.alpha = alpha;
  modes.delta = delta;
  modes.horizon = horizon;
  modes.tol = soe_tol;
  for (int attempt = 0; attempt < 30; ++attempt) {
    const auto count = static_cast<std::size_t>(std::ceil((x_max - x_min) / h)) + 1;
    if (count > max_modes) {
      std::ostringstream os;
      os << "soe_compress: " << count << " modes needed for tol " << soe_tol << " on [" << delta
         << ", " << horizon << "], budget " << max_modes;
      throw SoeCapacityError(os.str(), modes.achieved > 0.0 ? modes.achieved : 1.0);
    }
    modes.weights.resize(count);
    modes.exponents.resize(count);
    for (std::size_t j = 0; j < count; ++j) {
      const double x = x_min + h * static_cast<double>(j);
      modes.weights[j] = h * std::exp(alpha * x) / g;
      modes.exponents[j] = std::exp(x);
    }
    modes.achieved = max_relative_residual(modes, 2000);
    if (modes.achieved <= soe_tol) return modes;
    h *= 0.85;
  }
  std::ostringstream os;
  os << "soe_compress: tolerance " << soe_tol << " not reached, best " << modes.achieved;
  throw SoeCapacityError(os.str(), modes.achieved);
}

L1Memory::L1Memory(double alpha, std::size_t width, std::optional<SoeModes> modes)
    : alpha_(alpha), modes_(std::move(modes)), history_(width) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("L1Memory: alpha in (0, 1)");
  if (modes_ && std::abs(modes_->alpha - alpha) > 0.0)
    throw std::invalid_argument("L1Memory: SOE modes built for a different alpha");
}

void L1Memory::commit(double t, std::span<const double> level) {
  wide_t_ = -1.0;
  if (times_.empty()) {
    if (t != 0.0) throw ContractError("L1Memory: first level must sit at t = 0");
    history_.push(level);
    times_.push_back(t);
    if (modes_) sums_.assign(history_.width() * modes_->size(), 0.0);
    return;
  }
  const double dt = t - times_.back();
  if (!(dt > 0.0)) throw ContractError("L1Memory: times must increase");
  if (modes_) {
    const std::size_t m_count = modes_->size();
    scratch_.resize(2 * m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
      const double s = modes_->exponents[m];
      scratch_[m] = std::exp(-s * dt);
      scratch_[m_count + m] = -std::expm1(-s * dt) / s;
    }
    const auto prev = history_.level(history_.size() - 1);
    for (std::size_t i = 0; i < history_.width(); ++i) {
      const double slope = (level[i] - prev[i]) / dt;
      double* row = sums_.data() + i * m_count;
      for (std::size_t m = 0; m < m_count; ++m) row[m] = scratch_[m] * row[m] + slope * scratch_[m_count + m];
    }
  }
  history_.push(level);
  times_.push_back(t);
}

void L1Memory::truncate(std::size_t levels) {
  wide_t_ = -1.0;
  if (modes_ && levels < times_.size())
    throw ContractError("L1Memory: the SOE path cannot rewind its running sums");
  history_.truncate(levels);
  if (levels < times_.size()) times_.resize(levels);
}

double L1Memory::local_coefficient(double t_next) const {
  const double dt = t_next - times_.back();
  return std::pow(dt, -alpha_) / std::tgamma(2.0 - alpha_);
}

void L1Memory::history_term(double t_next, std::span<double> out) const {
  if (times_.empty()) throw ContractError("L1Memory: no initial level committed");
  if (out.size() != history_.width()) throw ContractError("L1Memory: output width");
  const std::size_t n = times_.size();  // index of the trial level
  const auto last = history_.level(n - 1);

  if (!modes_) {
    scratch_.assign(times_.begin(), times_.end());
    scratch_.push_back(t_next);
    const std::vector<double> b = l1_weights(scratch_, static_cast<int>(n), alpha_);
    wide_.assign(out.size(), 0.0L);
    for (std::size_t k = 0; k < n; ++k) {
      const long double w = b[k];
      const auto level = history_.level(k);
      for (std::size_t i = 0; i < out.size(); ++i) wide_[i] += w * level[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(wide_[i]);
    wide_t_ = t_next;
    wide_local_ = b[n];
    return;
  }

  const std::size_t m_count = modes_->size();
  const double dt = t_next - times_.back();
  scratch_.resize(m_count);
  const double scale = 1.0 / std::tgamma(1.0 - alpha_);
  for (std::size_t m = 0; m < m_count; ++m)
    scratch_[m] = scale * modes_->weights[m] * std::exp(-modes_->exponents[m] * dt);
  const double local = local_coefficient(t_next);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double* row = sums_.data() + i * m_count;
    double acc = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) acc += scratch_[m] * row[m];
    out[i] = acc - local * last[i];
  }
}

void L1Memory::derivative_row(double t_next, std::span<const double> level, std::span<double> out) const {
  if (level.size() != history_.width() || out.size() != history_.width())
    throw ContractError("L1Memory: output width");
  if (!modes_) {
    if (wide_t_ != t_next || times_.empty()) {
      std::vector<double> scratch(out.size());
      history_term(t_next, scratch);
    }
    const long double local = wide_local_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(wide_[i] + local * level[i]);
    return;
  }
  history_term(t_next, out);
  const double local = local_coefficient(t_next);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += local * level[i];
}

}  // namespace fracquench::caputo
