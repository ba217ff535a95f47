#include "potcast/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace potcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kGammaFloor = -0.5 + 1e-6;
constexpr double kGradTol = 1e-8;
// The quasi-Newton stage only has to localize the optimum; the Newton polish
// afterwards owns the endgame, so its iteration budget can stay small.
constexpr std::size_t kMaxIter = 60;

// Negative log-likelihood and its gradient in (ls, g) = (log sigma, gamma)
// coordinates; +inf outside the feasible region (barrier rejection).
struct Objective {
  const std::vector<double>& x;

  double value(double ls, double g) const {
    if (g <= kGammaFloor) return kInf;
    const double sigma = std::exp(ls);
    double total = static_cast<double>(x.size()) * ls;
    if (std::abs(g) < kGammaSwitch) {
      for (double xi : x) {
        const double z = xi / sigma;
        total += z - g * (0.5 * z * z - z);
      }
      return total;
    }
    const double a = 1.0 / g + 1.0;
    for (double xi : x) {
      const double w = 1.0 + g * xi / sigma;
      if (w <= 0.0) return kInf;
      total += a * std::log1p(g * xi / sigma);
    }
    return total;
  }

  // Gradient of the negative log-likelihood:
  //   d/dls  = -sum[(1+g) z_i/w_i - 1]
  //   d/dg   = -sum[(1/g^2) log w_i - (1/g+1) z_i/w_i]
  // with z_i = x_i/sigma, w_i = 1 + g z_i. Near g = 0 the g-derivative uses
  // the series sum[z^2/2 - z + g(z^2 - 2 z^3/3)].
  bool gradient(double ls, double g, double* dls, double* dg) const {
    if (g <= kGammaFloor) return false;
    const double sigma = std::exp(ls);
    double sum_ls = 0.0;
    double sum_g = 0.0;
    if (std::abs(g) < kGammaSwitch) {
      for (double xi : x) {
        const double z = xi / sigma;
        sum_ls += (1.0 + g) * z / (1.0 + g * z) - 1.0;
        sum_g += 0.5 * z * z - z + g * (z * z - 2.0 * z * z * z / 3.0);
      }
    } else {
      for (double xi : x) {
        const double z = xi / sigma;
        const double w = 1.0 + g * z;
        if (w <= 0.0) return false;
        sum_ls += (1.0 + g) * z / w - 1.0;
        sum_g += std::log1p(g * z) / (g * g) - (1.0 / g + 1.0) * z / w;
      }
    }
    *dls = -sum_ls;
    *dg = -sum_g;
    return true;
  }
};

// Golden-section minimization of f over [lo, hi].
template <typename F>
double golden_section(F&& f, double lo, double hi, int iters = 60) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc < fd ? c : d;
}

}  // namespace

ExcessData extract_excesses(std::span<const double> sample, std::size_t k) {
  const std::size_t n = sample.size();
  if (k == 0) throw domain_error("extract_excesses: k must be at least 1");
  if (k >= n) {
    std::ostringstream msg;
    msg << "extract_excesses: need k < n, got k=" << k << " n=" << n;
    throw domain_error(msg.str());
  }
  for (double v : sample) {
    if (!std::isfinite(v)) {
      throw input_error("extract_excesses: sample contains non-finite values");
    }
  }
  std::vector<double> sorted(sample.begin(), sample.end());
  std::stable_sort(sorted.begin(), sorted.end());
  ExcessData data;
  data.n = n;
  data.k = k;
  data.threshold = sorted[n - k - 1];  // (n-k)th smallest, ascending
  data.excesses.reserve(k);
  for (std::size_t i = n - k; i < n; ++i) {
    data.excesses.push_back(sorted[i] - data.threshold);
  }
  return data;
}

GpParams FitResult::params() const {
  if (!in_theta) {
    std::ostringstream msg;
    msg << "FitResult::params: estimate (sigma=" << sigma << ", gamma=" << gamma
        << ") lies outside the parameter space";
    throw domain_error(msg.str());
  }
  return GpParams(sigma, gamma);
}

FitResult fit_gpwm(const ExcessData& data) {
  const std::size_t k = data.k;
  if (k < 2) throw domain_error("fit_gpwm: need k >= 2");
  // P = mean excess; Q = mean of (i/k)-weighted excesses, weight i/k on the
  // i-th largest (descending order).
  double P = 0.0;
  double Q = 0.0;
  for (std::size_t i = 1; i <= k; ++i) {
    const double excess = data.excesses[k - i];  // i-th largest
    P += excess;
    Q += (static_cast<double>(i) / static_cast<double>(k)) * excess;
  }
  P /= static_cast<double>(k);
  Q /= static_cast<double>(k);
  if (P <= 0.0) {
    throw input_error("fit_gpwm: all excesses are zero (degenerate data)");
  }
  const double r = P / (2.0 * Q) - 1.0;
  if (r == 0.0) {
    throw numerical_error("fit_gpwm: P/(2Q) equals 1 (singular closed form)");
  }
  FitResult result;
  result.method = FitMethod::GPWM;
  result.gamma = 1.0 - 1.0 / r;
  result.sigma = P / r;
  result.loglik = kNaN;
  result.converged = true;  // closed form evaluated
  result.iterations = 0;
  result.in_theta = result.sigma > 0.0 && result.gamma > -0.5;
  result.in_validity_region =
      result.in_theta && result.gamma > -0.5 && result.gamma < 0.5;
  return result;
}

FitResult fit_mle(const ExcessData& data) {
  const std::size_t k = data.k;
  if (k < 2) throw domain_error("fit_mle: need k >= 2");
  const std::vector<double>& x = data.excesses;
  double mean = 0.0;
  double max_excess = 0.0;
  for (double xi : x) {
    mean += xi;
    max_excess = std::max(max_excess, xi);
  }
  mean /= static_cast<double>(k);
  if (!(max_excess > 0.0)) {
    throw input_error("fit_mle: all excesses are zero (degenerate data)");
  }

  const Objective obj{x};

  // Stage 1: coarse profile over gamma with a golden-section search on
  // log sigma for each gamma, plus the GPWM candidate when it is feasible.
  double best_ls = std::log(mean);
  double best_g = 0.1;
  double best_f = obj.value(best_ls, best_g);
  constexpr std::array<double, 12> kGammaGrid = {
      -0.45, -0.35, -0.25, -0.15, -0.05, 0.0,
      0.1,   0.25,  0.5,   1.0,   2.0,   4.0};
  for (double g : kGammaGrid) {
    // Feasibility for g < 0 needs sigma > -g * max excess.
    const double ls_floor =
        g < 0.0 ? std::log(-g * max_excess) + 1e-9 : std::log(mean) - 6.0;
    const double ls_lo = std::max(ls_floor, std::log(mean) - 6.0);
    const double ls_hi = std::log(mean) + 6.0;
    if (!(ls_lo < ls_hi)) continue;
    const double ls = golden_section(
        [&](double v) { return obj.value(v, g); }, ls_lo, ls_hi, 36);
    const double f = obj.value(ls, g);
    if (f < best_f) {
      best_f = f;
      best_ls = ls;
      best_g = g;
    }
  }
  try {
    const FitResult wm = fit_gpwm(data);
    if (wm.in_theta) {
      const double f = obj.value(std::log(wm.sigma), wm.gamma);
      if (f < best_f) {
        best_f = f;
        best_ls = std::log(wm.sigma);
        best_g = wm.gamma;
      }
    }
  } catch (const error&) {
    // GPWM unavailable: the grid candidate stands.
  }

  // Stage 2: BFGS on (ls, g) with backtracking Armijo line search; infeasible
  // trial points evaluate to +inf and shrink the step.
  double ls = best_ls;
  double g = best_g;
  double f = best_f;
  double grad_ls = 0.0;
  double grad_g = 0.0;
  obj.gradient(ls, g, &grad_ls, &grad_g);
  // Inverse Hessian approximation (2x2, symmetric).
  double h11 = 1.0, h12 = 0.0, h22 = 1.0;
  std::size_t iter = 0;
  int stagnant = 0;
  bool converged =
      std::max(std::abs(grad_ls), std::abs(grad_g)) < kGradTol;
  while (!converged && iter < kMaxIter && stagnant < 8) {
    ++iter;
    double step_ls = -(h11 * grad_ls + h12 * grad_g);
    double step_g = -(h12 * grad_ls + h22 * grad_g);
    double descent = step_ls * grad_ls + step_g * grad_g;
    if (!(descent < 0.0)) {  // reset to steepest descent
      h11 = h22 = 1.0;
      h12 = 0.0;
      step_ls = -grad_ls;
      step_g = -grad_g;
      descent = -(grad_ls * grad_ls + grad_g * grad_g);
    }
    double t = 1.0;
    double new_ls = ls, new_g = g, new_f = kInf;
    bool moved = false;
    for (int bt = 0; bt < 60; ++bt) {
      new_ls = ls + t * step_ls;
      new_g = g + t * step_g;
      new_f = obj.value(new_ls, new_g);
      if (new_f <= f + 1e-4 * t * descent) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    double new_grad_ls = 0.0, new_grad_g = 0.0;
    if (!obj.gradient(new_ls, new_g, &new_grad_ls, &new_grad_g)) break;
    // BFGS update of the inverse Hessian.
    const double s1 = new_ls - ls, s2 = new_g - g;
    const double y1 = new_grad_ls - grad_ls, y2 = new_grad_g - grad_g;
    const double sy = s1 * y1 + s2 * y2;
    if (sy > 1e-14) {
      const double rho = 1.0 / sy;
      // H_new = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      const double hy1 = h11 * y1 + h12 * y2;
      const double hy2 = h12 * y1 + h22 * y2;
      const double yhy = y1 * hy1 + y2 * hy2;
      const double c = rho * rho * yhy + rho;
      h11 = h11 - rho * (s1 * hy1 + hy1 * s1) + c * s1 * s1;
      h12 = h12 - rho * (s1 * hy2 + hy1 * s2) + c * s1 * s2;
      h22 = h22 - rho * (s2 * hy2 + hy2 * s2) + c * s2 * s2;
    }
    stagnant = new_f < f - 1e-10 * (std::abs(f) + 1.0) ? 0 : stagnant + 1;
    ls = new_ls;
    g = new_g;
    f = new_f;
    grad_ls = new_grad_ls;
    grad_g = new_grad_g;
    converged = std::max(std::abs(grad_ls), std::abs(grad_g)) < kGradTol;
  }

  // Newton polish: BFGS with an Armijo search stalls once objective
  // differences fall below evaluation noise, while the analytic gradient is
  // still accurate there. Damped Newton steps on a finite-difference Hessian
  // of that gradient converge quadratically to the tolerance.
  for (int round = 0; !converged && round < 40; ++round) {
    if (!obj.gradient(ls, g, &grad_ls, &grad_g)) break;
    if (std::max(std::abs(grad_ls), std::abs(grad_g)) < kGradTol) {
      converged = true;
      break;
    }
    const double h_ls = 1e-7 * std::max(1.0, std::abs(ls));
    const double h_g = 1e-7 * std::max(0.1, std::abs(g));
    double p1 = 0.0, p2 = 0.0, m1 = 0.0, m2 = 0.0;
    if (!obj.gradient(ls + h_ls, g, &p1, &p2) ||
        !obj.gradient(ls - h_ls, g, &m1, &m2)) {
      break;
    }
    const double a11 = (p1 - m1) / (2.0 * h_ls);
    const double a21 = (p2 - m2) / (2.0 * h_ls);
    if (!obj.gradient(ls, g + h_g, &p1, &p2) ||
        !obj.gradient(ls, g - h_g, &m1, &m2)) {
      break;
    }
    const double a12 = (p1 - m1) / (2.0 * h_g);
    const double a22 = (p2 - m2) / (2.0 * h_g);
    const double b12 = 0.5 * (a12 + a21);  // symmetrized mixed term
    const double det = a11 * a22 - b12 * b12;
    if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
    const double step_ls = -(a22 * grad_ls - b12 * grad_g) / det;
    const double step_g = -(a11 * grad_g - b12 * grad_ls) / det;
    // Damp the step until it is feasible and does not increase the objective
    // beyond evaluation noise.
    double t = 1.0;
    bool moved = false;
    for (int bt = 0; bt < 50; ++bt) {
      const double new_ls = ls + t * step_ls;
      const double new_g = g + t * step_g;
      const double new_f = obj.value(new_ls, new_g);
      if (new_f <= f + 1e-12 * (std::abs(f) + 1.0)) {
        ls = new_ls;
        g = new_g;
        f = new_f;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    ++iter;
    if (!moved) break;
  }

  // Constrained optimum at the shape floor: when the unconstrained optimum
  // lies at or below the floor the interior gradient cannot vanish, so accept
  // a floor-pinned solution whose profile over log sigma is stationary and
  // whose shape gradient points outward.
  if (!converged && g < -0.4) {
    const double g_pin = kGammaFloor + 1e-12;
    const double ls_lo = std::max(std::log(-g_pin * max_excess) + 1e-9,
                                  std::log(mean) - 6.0);
    const double ls_hi = std::log(mean) + 6.0;
    if (ls_lo < ls_hi) {
      double ls_pin = golden_section(
          [&](double v) { return obj.value(v, g_pin); }, ls_lo, ls_hi, 90);
      // A bracketing search only locates the minimum to sqrt(eps) precision;
      // 1-D Newton on the profile gradient reaches the gradient tolerance.
      for (int round = 0; round < 30; ++round) {
        double d1 = 0.0, d2 = 0.0;
        if (!obj.gradient(ls_pin, g_pin, &d1, &d2)) break;
        if (std::abs(d1) < kGradTol) break;
        const double h = 1e-7 * std::max(1.0, std::abs(ls_pin));
        double q1 = 0.0, q2 = 0.0, r1 = 0.0, r2 = 0.0;
        if (!obj.gradient(ls_pin + h, g_pin, &q1, &q2) ||
            !obj.gradient(ls_pin - h, g_pin, &r1, &r2)) {
          break;
        }
        const double curvature = (q1 - r1) / (2.0 * h);
        if (!(curvature > 0.0)) break;
        double next = ls_pin - d1 / curvature;
        if (next <= ls_lo) next = 0.5 * (ls_pin + ls_lo);
        if (next >= ls_hi) next = 0.5 * (ls_pin + ls_hi);
        ls_pin = next;
      }
      const double f_pin = obj.value(ls_pin, g_pin);
      double pin_grad_ls = 0.0, pin_grad_g = 0.0;
      if (f_pin <= f + 1e-9 * (std::abs(f) + 1.0) &&
          obj.gradient(ls_pin, g_pin, &pin_grad_ls, &pin_grad_g) &&
          std::abs(pin_grad_ls) < kGradTol && pin_grad_g > -kGradTol) {
        ls = ls_pin;
        g = g_pin;
        f = f_pin;
        converged = true;
        ++iter;
      }
    }
  }

  FitResult result;
  result.method = FitMethod::ML;
  result.sigma = std::exp(ls);
  result.gamma = g;
  result.loglik = -f;
  result.converged = converged;
  result.iterations = iter;
  result.in_theta = result.sigma > 0.0 && result.gamma > -0.5;
  result.in_validity_region = result.in_theta;
  return result;
}

double endpoint_estimate(const GpParams& params, double threshold) {
  if (params.gamma() < 0.0) {
    return threshold - params.sigma() / params.gamma();
  }
  return kInf;
}

}  // namespace potcast
