#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fracquench::caputo {

/// Strictly increasing time grid 0 = t_0 < t_1 < ... < t_N.
class TimeMesh {
 public:
  /// Validates the nodes; throws std::invalid_argument on t_0 != 0,
  /// non-monotone nodes or N < 1.
  explicit TimeMesh(std::vector<double> nodes, double grading = 1.0);

  static TimeMesh uniform(double horizon, int steps);
  /// t_n = horizon * (n / steps)^grading, grading >= 1.
  static TimeMesh graded(double horizon, int steps, double grading);

  std::span<const double> nodes() const { return nodes_; }
  int steps() const { return static_cast<int>(nodes_.size()) - 1; }
  double operator[](int n) const { return nodes_[static_cast<std::size_t>(n)]; }
  double step(int n) const { return (*this)[n] - (*this)[n - 1]; }
  double horizon() const { return nodes_.back(); }
  double grading() const { return grading_; }
  double min_step() const;

 private:
  std::vector<double> nodes_;
  double grading_;
};

/// Thrown when a history is shorter than the requested step index.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Coefficient of (u^k - u^{k-1}) in the L1 sum at t_n, for k = 1..n:
///   a_{n,k} = [(t_n - t_{k-1})^{1-alpha} - (t_n - t_k)^{1-alpha}] / (Gamma(2-alpha) dt_k)
/// out[k-1] receives a_{n,k}; out must hold n entries.
void l1_increment_coefficients(std::span<const double> nodes, int n, double alpha,
                               std::span<double> out);

/// L1 weights b_{n,0..n} so that D^alpha u(t_n) ~ sum_k b_{n,k} u(t_k).
/// Exact for piecewise-linear u; the weights sum to zero.
std::vector<double> l1_weights(std::span<const double> nodes, int n, double alpha);
std::vector<double> l1_weights(const TimeMesh& mesh, int n, double alpha);

/// Time-major store of u^0..u^n for `width` spatial nodes.
///
/// Single writer (the stepping loop); readers may inspect committed levels
/// between pushes.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(std::size_t width) : width_(width) {}

  void push(std::span<const double> level);
  void truncate(std::size_t levels);

  std::size_t width() const { return width_; }
  /// Number of stored levels (current step index + 1).
  std::size_t size() const { return width_ == 0 ? 0 : data_.size() / width_; }
  std::span<const double> level(std::size_t k) const {
    return {data_.data() + k * width_, width_};
  }
  double value(std::size_t k, std::size_t node) const { return data_[k * width_ + node]; }
  std::vector<double> series(std::size_t node) const;

 private:
  std::size_t width_;
  std::vector<double> data_;
};

/// Discrete Caputo derivative sum_k b_{n,k} u^k of a scalar series.
double caputo_l1_apply(std::span<const double> values, std::span<const double> nodes, int n,
                       double alpha);
/// Extended-precision variant for series that are themselves extended.
long double caputo_l1_apply_wide(std::span<const long double> values, std::span<const double> nodes, int n,
                                 double alpha);
/// Same for one spatial node of a history buffer.
double caputo_l1_apply(const HistoryBuffer& history, std::size_t node, const TimeMesh& mesh, int n,
                       double alpha);
/// All nodes of a history buffer at once; out.size() == history.width().
void caputo_l1_apply_all(const HistoryBuffer& history, std::span<const double> nodes, int n,
                         double alpha, std::span<double> out);

/// Gamma(p+1) / Gamma(p+1-alpha) * t^{p-alpha}: the Caputo derivative of t^p.
double caputo_exact_power(double alpha, double p, double t);

/// Product-integration approximation of the Riemann-Liouville integral
/// (I^alpha u)(t_n) for every node, with u piecewise linear between samples.
std::vector<double> rl_integral(double alpha, std::span<const double> samples,
                                std::span<const double> nodes);

// ---------------------------------------------------------------------------
// Sum-of-exponentials approximation of the kernel tau^{-alpha}.

struct SoeModes {
  double alpha = 0.5;
  double delta = 0.0;    // window start
  double horizon = 0.0;  // window end
  double tol = 0.0;      // requested relative accuracy
  double achieved = 0.0; // measured max relative residual on the window
  std::vector<double> weights;
  std::vector<double> exponents;

  std::size_t size() const { return weights.size(); }
  /// sum_m w_m exp(-s_m tau)
  double evaluate(double tau) const;
};

class SoeCapacityError : public std::runtime_error {
 public:
  SoeCapacityError(const std::string& what, double achieved)
      : std::runtime_error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Modes with |sum_m w_m e^{-s_m tau} - tau^{-alpha}| <= soe_tol * tau^{-alpha}
/// for every tau in [delta, horizon]. The residual is verified on a dense
/// logarithmic sample before returning.
SoeModes soe_compress(double alpha, double delta, double horizon, double soe_tol,
                      std::size_t max_modes = 4000);

/// Memory term of the L1 scheme for `width` trajectories, evaluated either
/// by the direct O(n) sum or by the SOE recursion in O(modes).
///
/// For committed levels u^0..u^{n-1} and a trial time t_n, the discrete
/// derivative splits as  D^alpha u(t_n) = local(t_n) * u^n + history_i(t_n).
class L1Memory {
 public:
  L1Memory(double alpha, std::size_t width, std::optional<SoeModes> modes = std::nullopt);

  double alpha() const { return alpha_; }
  bool fast() const { return modes_.has_value(); }
  const std::optional<SoeModes>& modes() const { return modes_; }
  const HistoryBuffer& history() const { return history_; }
  std::span<const double> times() const { return times_; }

  /// Appends an accepted level at time t (first call must be t = 0).
  void commit(double t, std::span<const double> level);
  /// Drops everything after the first `levels` levels (direct mode only).
  void truncate(std::size_t levels);

  /// b_{n,n} for the trial time t_next.
  double local_coefficient(double t_next) const;
  /// history_i(t_next) for every node.
  void history_term(double t_next, std::span<double> out) const;
  /// Full discrete derivative at t_next for the trial level, rounded once
  /// in direct mode. Reuses the sum of the preceding history_term call.
  void derivative_row(double t_next, std::span<const double> level, std::span<double> out) const;

 private:
  double alpha_;
  std::optional<SoeModes> modes_;
  HistoryBuffer history_;
  std::vector<double> times_;
  // SOE running sums, node-major: sums_[i * modes + m].
  std::vector<double> sums_;
  mutable std::vector<double> scratch_;
  mutable std::vector<long double> wide_;
  mutable double wide_t_ = -1.0;
  mutable double wide_local_ = 0.0;
};

}  // namespace fracquench::caputo
