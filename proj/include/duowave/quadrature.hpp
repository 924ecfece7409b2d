#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace duowave {

struct QuadOptions {
  double rel_tol = 1e-11;     // refinement target
  double accept_tol = 1e-6;   // failure threshold, relative to the L1 norm
  double abs_floor = 1e-300;  // accept tiny absolute errors on vanishing integrands
  unsigned max_depth = 20;
};

// Adaptive Gauss-Kronrod (15-point) on [a, b].
template <class F>
double integrate(F&& f, double a, double b, const QuadOptions& opt = {},
                 const char* module = "quadrature", const char* op = "integrate")
{
  if (a == b) return 0.0;
  double err = 0.0, l1 = 0.0;
  double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      f, a, b, opt.max_depth, opt.rel_tol, &err, &l1);
  if (!std::isfinite(v) || err > std::max(opt.accept_tol * l1, opt.abs_floor))
    throw Error(ErrorCode::QuadratureNotConverged, module, op,
                "estimated error " + fmt(err) + " vs L1 " + fmt(l1));
  return v;
}

// Same, splitting at interior breakpoints where the integrand is only piecewise smooth.
template <class F>
double integrate_pieces(F&& f, std::vector<double> cuts, const QuadOptions& opt = {},
                        const char* module = "quadrature", const char* op = "integrate")
{
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i)
    s += integrate(f, cuts[i], cuts[i + 1], opt, module, op);
  return s;
}

} // namespace duowave
