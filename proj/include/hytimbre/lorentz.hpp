#pragma once

// Lorentz (hyperboloid) model of d-dimensional hyperbolic space with constant
// negative curvature K.  Points live on the upper sheet
//   H_K^d = { a in R^{d+1} : <a,a>_L = 1/K, a[0] > 0 },
// where <a,b>_L = -a[0]b[0] + sum_{i>=1} a[i]b[i] is the Lorentzian inner
// product.  The radius is R = 1/sqrt(-K).
//
// Note on the distance argument: for two on-sheet points K<a,b>_L =
// cosh(sqrt(-K) d(a,b)) >= 1, so acosh takes K<a,b>_L (clamped from below
// at 1 to absorb rounding).

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hytimbre/errors.hpp"
#include "hytimbre/scalar_math.hpp"

namespace hytimbre::lorentz {

struct Curvature {
  double K;

  explicit Curvature(double k) : K(k) {
    if (!(k < 0.0) || !std::isfinite(k))
      throw std::domain_error("Curvature: K must be finite and negative, got " + std::to_string(k));
  }
  static Curvature from_radius(double R) {
    if (!(R > 0.0) || !std::isfinite(R))
      throw std::domain_error("Curvature: radius must be finite and positive");
    return Curvature(-1.0 / (R * R));
  }
  double radius() const { return 1.0 / std::sqrt(-K); }

  friend bool operator==(const Curvature& a, const Curvature& b) { return a.K == b.K; }
};

struct ManifoldPoint {
  std::vector<double> coords;  // d+1 ambient coordinates, coords[0] > 0
  Curvature curv;

  int dim() const { return static_cast<int>(coords.size()) - 1; }
};

struct TangentVector {
  ManifoldPoint base;
  std::vector<double> coords;  // d+1 ambient coordinates, Lorentz-orthogonal to base

  int dim() const { return static_cast<int>(coords.size()) - 1; }
};

inline double lorentz_inner(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw std::invalid_argument("lorentz_inner: length mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  if (a.size() < 2) throw std::invalid_argument("lorentz_inner: need at least 2 coordinates");
  double s = -a[0] * b[0];
  for (std::size_t i = 1; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double lorentz_inner(const ManifoldPoint& a, const ManifoldPoint& b) {
  if (!(a.curv == b.curv)) throw std::domain_error("lorentz_inner: curvature mismatch");
  return lorentz_inner(std::span<const double>(a.coords), std::span<const double>(b.coords));
}

inline ManifoldPoint origin(Curvature c, int d) {
  if (d < 1) throw std::invalid_argument("origin: dimension must be >= 1");
  std::vector<double> x(static_cast<std::size_t>(d) + 1, 0.0);
  x[0] = c.radius();
  return ManifoldPoint{std::move(x), c};
}

// |<p,p>_L - 1/K|, the on-manifold constraint violation.
inline double manifold_defect(const ManifoldPoint& p) {
  return std::abs(lorentz_inner(std::span<const double>(p.coords),
                                std::span<const double>(p.coords)) -
                  1.0 / p.curv.K);
}

// Norm of a tangent vector; <v,v>_L >= 0 on tangent spaces of the upper sheet,
// so tiny negative rounding is clamped to 0.
inline double tangent_norm(const TangentVector& v) {
  const double q = lorentz_inner(std::span<const double>(v.coords), std::span<const double>(v.coords));
  return std::sqrt(q > 0.0 ? q : 0.0);
}

namespace detail {

inline void check_same_space(const ManifoldPoint& a, const ManifoldPoint& b, const char* who) {
  if (a.coords.size() != b.coords.size())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
  if (!(a.curv == b.curv)) throw std::domain_error(std::string(who) + ": curvature mismatch");
}

inline void check_tangent(const ManifoldPoint& base, std::span<const double> v, const char* who) {
  if (v.size() != base.coords.size())
    throw std::invalid_argument(std::string(who) + ": tangent dimension mismatch");
  double ip = lorentz_inner(std::span<const double>(base.coords), v);
  double nrm = 0.0;
  for (double x : v) nrm += x * x;
  nrm = std::sqrt(nrm);
  if (std::abs(ip) > 1e-6 * (1.0 + nrm))
    throw std::domain_error(std::string(who) + ": vector is not tangent at base (<v,base>_L = " +
                            std::to_string(ip) + ")");
}

}  // namespace detail

inline double distance(const ManifoldPoint& a, const ManifoldPoint& b) {
  detail::check_same_space(a, b, "distance");
  double arg = a.curv.K * lorentz_inner(a, b);
  if (arg < 1.0) arg = 1.0;
  return a.curv.radius() * std::acosh(arg);
}

inline ManifoldPoint exp_map(const ManifoldPoint& base, const TangentVector& v) {
  detail::check_tangent(base, std::span<const double>(v.coords), "exp_map");
  const double sk = std::sqrt(-base.curv.K);
  const double x = sk * tangent_norm(v);
  double c, s;  // cosh(x) and sinh(x)/x
  if (x < 1e-6) {
    c = 1.0 + x * x / 2.0;
    s = 1.0 + x * x / 6.0;
  } else {
    c = std::cosh(x);
    s = std::sinh(x) / x;
  }
  // sinh(x) v / (sqrt(-K)||v||) = (sinh(x)/x) v
  std::vector<double> out(base.coords.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = c * base.coords[i] + s * v.coords[i];
  return ManifoldPoint{std::move(out), base.curv};
}

inline TangentVector log_map(const ManifoldPoint& base, const ManifoldPoint& target) {
  detail::check_same_space(base, target, "log_map");
  if (base.coords == target.coords)
    return TangentVector{base, std::vector<double>(base.coords.size(), 0.0)};
  double alpha = base.curv.K * lorentz_inner(base, target);
  if (alpha < 1.0) alpha = 1.0;
  const double s = std::acosh(alpha);
  const double factor = num::s_over_sinh(s);
  std::vector<double> out(base.coords.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = factor * (target.coords[i] - alpha * base.coords[i]);
  return TangentVector{base, std::move(out)};
}

inline TangentVector parallel_transport(const ManifoldPoint& from, const ManifoldPoint& to,
                                        const TangentVector& v) {
  detail::check_same_space(from, to, "parallel_transport");
  detail::check_tangent(from, std::span<const double>(v.coords), "parallel_transport");
  const double K = from.curv.K;
  const double denom = 1.0 + K * lorentz_inner(from, to);
  if (std::abs(denom) < 1e-9)
    throw std::domain_error("parallel_transport: degenerate transport denominator");
  const double coef =
      K * lorentz_inner(std::span<const double>(to.coords), std::span<const double>(v.coords)) / denom;
  std::vector<double> out(v.coords.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = v.coords[i] - coef * (from.coords[i] + to.coords[i]);
  return TangentVector{to, std::move(out)};
}

// Tangent vector [0; w] at the origin.
inline TangentVector lift_to_tangent(std::span<const double> w, Curvature c) {
  if (w.empty()) throw std::invalid_argument("lift_to_tangent: empty vector");
  std::vector<double> x(w.size() + 1, 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) x[i + 1] = w[i];
  return TangentVector{origin(c, static_cast<int>(w.size())), std::move(x)};
}

// exp_base . PT_{origin->base}: maps a tangent vector at the origin onto the
// manifold "around" base.
inline ManifoldPoint proj(const ManifoldPoint& base, const TangentVector& w) {
  const ManifoldPoint o = origin(base.curv, base.dim());
  if (w.base.coords.size() != o.coords.size())
    throw std::invalid_argument("proj: dimension mismatch");
  if (std::abs(w.base.coords[0] - o.coords[0]) > 1e-6 * (1.0 + o.coords[0]))
    throw std::domain_error("proj: tangent vector is not based at the origin");
  return exp_map(base, parallel_transport(o, base, w));
}

// Repair representation drift: recompute the time coordinate from the spatial
// ones so the manifold constraint holds exactly.
inline ManifoldPoint project_to_manifold(std::vector<double> coords, Curvature c) {
  if (coords.size() < 2) throw std::invalid_argument("project_to_manifold: need at least 2 coordinates");
  double sq = 0.0;
  for (std::size_t i = 1; i < coords.size(); ++i) sq += coords[i] * coords[i];
  const double R = c.radius();
  coords[0] = std::sqrt(R * R + sq);
  return ManifoldPoint{std::move(coords), c};
}

}  // namespace hytimbre::lorentz
