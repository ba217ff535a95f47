#include "potcast/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "potcast/errors.hpp"

namespace potcast {

namespace {

using GK = boost::math::quadrature::gauss_kronrod<double, 15>;

struct Panel {
  double a = 0.0;
  double b = 0.0;
  double value = 0.0;
  double err = 0.0;
};

Panel evaluate_panel(const std::function<double(double)>& f, double a,
                     double b) {
  Panel panel;
  panel.a = a;
  panel.b = b;
  // max_depth = 0: a single Gauss-Kronrod application; adaptivity is ours.
  panel.value = GK::integrate(f, a, b, 0, 0.0, &panel.err);
  if (!std::isfinite(panel.value)) {
    panel.value = 0.0;
    panel.err = std::numeric_limits<double>::infinity();
  }
  return panel;
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double lo,
                           double hi, std::size_t initial_panels,
                           double abs_tol, double rel_tol) {
  if (!(hi > lo)) {
    throw domain_error("integrate: need hi > lo");
  }
  if (initial_panels == 0) initial_panels = 1;

  // Map a semi-infinite domain onto [0, 1) via x = lo + u/(1-u).
  std::function<double(double)> g;
  double a = lo;
  double b = hi;
  if (std::isinf(hi)) {
    g = [f, lo](double u) {
      const double om = 1.0 - u;
      return f(lo + u / om) / (om * om);
    };
    a = 0.0;
    b = 1.0;
  } else {
    g = f;
  }

  auto worse = [](const Panel& p, const Panel& q) { return p.err < q.err; };
  std::priority_queue<Panel, std::vector<Panel>, decltype(worse)> queue(worse);
  double total_value = 0.0;
  double total_err = 0.0;
  const double width = (b - a) / static_cast<double>(initial_panels);
  for (std::size_t i = 0; i < initial_panels; ++i) {
    const double pa = a + width * static_cast<double>(i);
    const double pb = i + 1 == initial_panels ? b : pa + width;
    Panel panel = evaluate_panel(g, pa, pb);
    total_value += panel.value;
    total_err += panel.err;
    queue.push(panel);
  }

  constexpr std::size_t kMaxPanels = 200000;
  std::size_t panels = initial_panels;
  while (true) {
    const double budget =
        std::max(abs_tol, rel_tol * std::abs(total_value));
    if (total_err <= budget) break;
    if (panels >= kMaxPanels) {
      std::ostringstream msg;
      msg << "integrate: tolerance not met after " << panels
          << " panels; achieved absolute error estimate " << total_err
          << " (requested " << budget << ")";
      throw numerical_error(msg.str());
    }
    Panel worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b) {
      // Interval exhausted at machine precision; accept its estimate.
      total_err -= worst.err;
      worst.err = 0.0;
      queue.push(worst);
      continue;
    }
    Panel left = evaluate_panel(g, worst.a, mid);
    Panel right = evaluate_panel(g, mid, worst.b);
    total_value += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    queue.push(left);
    queue.push(right);
    ++panels;
  }
  return QuadratureResult{total_value, total_err};
}

}  // namespace potcast
