#pragma once

#include "phasekit/core.hpp"
#include "phasekit/measurement.hpp"

namespace phasekit {

/// The split variables (x, y) of E.
struct SplitPoint {
  CVector x;
  CVector y;

  SplitPoint() = default;
  SplitPoint(CVector x_, CVector y_);
  /// (z, z).
  static SplitPoint diagonal(const CVector& z) { return {z, z}; }

  Eigen::Index dim() const noexcept { return x.size(); }
  /// (x + y) / 2, the reported estimate.
  CVector midpoint() const { return 0.5 * (x + y); }
};

/// Cached forward products and residuals at a split point:
/// fx = F^* x, fy = F^* y, r_n = conj(fx_n) fy_n - b_n.
struct Residuals {
  CVector fx;
  CVector fy;
  CVector r;

  static Residuals compute(const Ensemble& e, const SplitPoint& p, const RVector& b);
  /// Rebuilds r from already-known fx and fy.
  static Residuals from_products(CVector fx, CVector fy, const RVector& b);
};

struct SplitGradient {
  CVector gx;
  CVector gy;
};

// Gradients follow the convention grad = 2 d/d(conj z), which coincides with the
// ordinary gradient for real variables.

/// E(x,y) = (1/N) sum_n |x^* f_n f_n^* y - b_n|^2 + lambda ||x - y||^2.
double eval_E(const Ensemble& e, const SplitPoint& p, const RVector& b, double lambda);
double eval_E(const Residuals& res, const SplitPoint& p, double lambda);

/// gx = (2/N) sum conj(r_n) f_n (f_n^* y) + 2 lambda (x - y),
/// gy = (2/N) sum r_n f_n (f_n^* x) + 2 lambda (y - x).
SplitGradient grad_E(const Ensemble& e, const SplitPoint& p, const RVector& b, double lambda);

/// x block only, from cached residuals.
CVector grad_E_x(const Ensemble& e, const Residuals& res, const SplitPoint& p, double lambda);
/// y block only, from cached residuals.
CVector grad_E_y(const Ensemble& e, const Residuals& res, const SplitPoint& p, double lambda);

/// G(z) = (1/N) sum_n (|f_n^* z|^2 - b_n)^2.
double eval_G(const Ensemble& e, const CVector& z, const RVector& b);

/// (4/N) sum_n (|f_n^* z|^2 - b_n) f_n (f_n^* z).
CVector grad_G(const Ensemble& e, const CVector& z, const RVector& b);

/// v^* H v with H = (1/N) sum_n |f_n^* y|^2 f_n f_n^* + lambda I, i.e. the exact
/// second-order coefficient of alpha -> E(x - alpha v, y).
double quad_form_x(const Ensemble& e, const CVector& y, const CVector& v, double lambda);
/// Same with the roles of x and y swapped.
double quad_form_y(const Ensemble& e, const CVector& x, const CVector& v, double lambda);
/// Variant taking precomputed F^* y.
double quad_form_cached(const Ensemble& e, const CVector& fy, const CVector& v, double lambda);

/// Re(v^* H11 v) + Re(v^T H21 v) with
///   H11 = (4/N) sum_n f_n f_n^* z z^* f_n f_n^*,
///   H21 = (2/N) sum_n conj(f_n f_n^* z) z^* f_n f_n^*.
/// With u = F^* z and s = F^* v this is (1/N) sum_n [4 |u_n|^2 |s_n|^2 + 2 Re(conj(u_n)^2 s_n^2)],
/// which is 6 (1/N) sum_n u_n^2 s_n^2 for real data.
double wf_quad_form(const Ensemble& e, const CVector& z, const CVector& v);

}  // namespace phasekit
