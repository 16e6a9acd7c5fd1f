#include "trc/optimizer.hpp"

#include "trc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace trc {

namespace {

constexpr double inv_phi = 0.6180339887498948482;

double eval(const Objective1d& f, double x) {
  const double v = f(x);
  if (std::isnan(v)) {
    std::ostringstream os;
    os.precision(17);
    os << "objective returned NaN at x = " << x;
    throw NumericError(os.str());
  }
  return v;
}

} // namespace

SearchReport maximize_concave_1d(const Objective1d& f, double lo, double hi, double tol, int max_iter) {
  if (!(lo <= hi)) throw DomainError("maximize_concave_1d: need lo <= hi");
  if (!(tol > 0.0)) throw DomainError("maximize_concave_1d: tolerance must be positive");
  if (lo == hi) return {lo, eval(f, lo), 0.0, 0, true};
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(f, c), fd = eval(f, d);
  int it = 0;
  while (b - a > tol && it < max_iter) {
    ++it;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(f, c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(f, d);
    }
  }
  SearchReport r;
  r.iterations = it;
  r.bracket_width = b - a;
  r.converged = b - a <= tol;
  r.argmax = fc >= fd ? c : d;
  r.value = fc >= fd ? fc : fd;
  const double flo = eval(f, lo);
  if (flo >= r.value) {
    r.argmax = lo;
    r.value = flo;
  }
  const double fhi = eval(f, hi);
  if (fhi > r.value) {
    r.argmax = hi;
    r.value = fhi;
  }
  return r;
}

SearchReport maximize_unbounded(const Objective1d& f, double lo, double tol, double cap) {
  if (!(cap > lo)) throw DomainError("maximize_unbounded: cap must exceed lo");
  double prev = lo, cur = lo;
  double fcur = eval(f, lo);
  double step = 1.0;
  int it = 0;
  for (;;) {
    ++it;
    const double next = std::min(lo + step, cap);
    const double fnext = eval(f, next);
    if (fnext <= fcur) {
      auto r = maximize_concave_1d(f, prev, next, tol);
      r.iterations += it;
      if (fcur > r.value || (fcur == r.value && cur < r.argmax)) {
        r.argmax = cur;
        r.value = fcur;
      }
      return r;
    }
    if (next >= cap) {
      SearchReport r;
      r.argmax = cap;
      r.value = fnext;
      r.bracket_width = cap - cur;
      r.iterations = it;
      r.converged = false;
      return r;
    }
    prev = cur;
    cur = next;
    fcur = fnext;
    step *= 2.0;
  }
}

namespace {

double sup_norm(std::span<const double> v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

// Gradient with components that push outside the box removed.
void project_gradient(std::span<const double> x, std::span<const double> g, double r, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool at_hi = x[i] >= r && g[i] > 0.0;
    const bool at_lo = x[i] <= -r && g[i] < 0.0;
    out[i] = (at_hi || at_lo) ? 0.0 : g[i];
  }
}

void check_gradient(const ObjectiveNd& f, const GradientNd& grad, std::span<const double> x0) {
  const std::size_t k = x0.size();
  std::vector<double> g(k), xp(x0.begin(), x0.end());
  grad(x0, g);
  for (std::size_t i = 0; i < k; ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(x0[i]));
    xp[i] = x0[i] + h;
    const double fp = f(xp);
    xp[i] = x0[i] - h;
    const double fm = f(xp);
    xp[i] = x0[i];
    const double fd = (fp - fm) / (2.0 * h);
    if (!(std::abs(fd - g[i]) <= 1e-5 * std::max(1.0, std::abs(g[i])))) {
      std::ostringstream os;
      os.precision(12);
      os << "gradient check failed in coordinate " << i << ": analytic " << g[i] << ", finite difference " << fd;
      throw SetupError(os.str());
    }
  }
}

} // namespace

MultiSearchReport ascend_multivariate(const ObjectiveNd& f, const GradientNd& grad, std::vector<double> x0,
                                      double trust_radius, double tol, int max_iter) {
  if (!(trust_radius > 0.0)) throw DomainError("ascend_multivariate: trust radius must be positive");
  const std::size_t k = x0.size();
  for (auto& v : x0) v = std::clamp(v, -trust_radius, trust_radius);
  check_gradient(f, grad, x0);

  std::vector<double> x = std::move(x0), g(k), pg(k), d(k), xn(k), gn(k), s(k), y(k), hy(k);
  std::vector<double> h(k * k, 0.0);
  auto reset_h = [&] {
    std::fill(h.begin(), h.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) h[i * k + i] = 1.0;
  };
  reset_h();

  double fx = f(x);
  if (std::isnan(fx)) throw NumericError("ascend_multivariate: objective is NaN at the start point");
  grad(x, g);
  MultiSearchReport rep;
  bool stalled = false;
  int it = 0;
  for (; it < max_iter; ++it) {
    project_gradient(x, g, trust_radius, pg);
    if (sup_norm(pg) < tol) break;

    // Quasi-Newton direction, restricted to free coordinates.
    for (std::size_t i = 0; i < k; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < k; ++j) acc += h[i * k + j] * pg[j];
      d[i] = acc;
    }
    double slope = 0.0;
    for (std::size_t i = 0; i < k; ++i) slope += d[i] * pg[i];
    if (!(slope > 0.0)) {
      reset_h();
      d = pg;
    }

    double t = 1.0;
    bool accepted = false;
    double fn = fx;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      double gain = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        xn[i] = std::clamp(x[i] + t * d[i], -trust_radius, trust_radius);
        gain += g[i] * (xn[i] - x[i]);
      }
      fn = f(xn);
      if (std::isnan(fn)) continue;
      if (fn >= fx + 1e-4 * gain && fn >= fx) {
        accepted = gain > 0.0 || fn > fx;
        break;
      }
    }
    if (!accepted) {
      // No representable improvement along the steepest direction either.
      if (d != pg) {
        reset_h();
        continue;
      }
      stalled = true;
      break;
    }
    grad(xn, gn);
    double sy = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      s[i] = xn[i] - x[i];
      y[i] = g[i] - gn[i];  // curvature of -f
      sy += s[i] * y[i];
    }
    if (sy > 1e-16 * std::max(1.0, sup_norm(s) * sup_norm(y))) {
      double yhy = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += h[i * k + j] * y[j];
        hy[i] = acc;
        yhy += y[i] * acc;
      }
      const double rho = 1.0 / sy;
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
          h[i * k + j] += (1.0 + yhy * rho) * rho * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
    }
    x = xn;
    g = gn;
    fx = fn;
  }
  project_gradient(x, g, trust_radius, pg);
  rep.argmax = x;
  rep.value = fx;
  rep.gradient_norm = sup_norm(pg);
  rep.iterations = it;
  // A stall at rounding level with a small gradient is the numerical optimum.
  rep.converged = rep.gradient_norm < tol || (stalled && rep.gradient_norm < 1e3 * tol);
  rep.on_boundary = std::any_of(x.begin(), x.end(), [&](double v) { return std::abs(v) >= trust_radius; });
  return rep;
}

} // namespace trc
