#include "phasekit/objective.hpp"

namespace phasekit {

namespace {
void check_point(const Ensemble& e, const SplitPoint& p, const RVector& b, const char* where) {
  require_same_dim(p.x.size(), e.dim(), where);
  require_same_dim(p.y.size(), e.dim(), where);
  require_same_dim(b.size(), e.count(), where);
}

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
}
}  // namespace

SplitPoint::SplitPoint(CVector x_, CVector y_) : x(std::move(x_)), y(std::move(y_)) {
  require_same_dim(x.size(), y.size(), "SplitPoint");
}

Residuals Residuals::from_products(CVector fx, CVector fy, const RVector& b) {
  Residuals res{std::move(fx), std::move(fy), {}};
  res.r = res.fx.conjugate().cwiseProduct(res.fy) - b.cast<Complex>();
  return res;
}

Residuals Residuals::compute(const Ensemble& e, const SplitPoint& p, const RVector& b) {
  check_point(e, p, b, "Residuals");
  return from_products(forward(e, p.x), forward(e, p.y), b);
}

double eval_E(const Residuals& res, const SplitPoint& p, double lambda) {
  check_lambda(lambda);
  const double n = static_cast<double>(res.r.size());
  return res.r.squaredNorm() / n + lambda * (p.x - p.y).squaredNorm();
}

double eval_E(const Ensemble& e, const SplitPoint& p, const RVector& b, double lambda) {
  check_lambda(lambda);
  return eval_E(Residuals::compute(e, p, b), p, lambda);
}

CVector grad_E_x(const Ensemble& e, const Residuals& res, const SplitPoint& p, double lambda) {
  const double n = static_cast<double>(e.count());
  return (2.0 / n) * adjoint(e, res.r.conjugate().cwiseProduct(res.fy)) + 2.0 * lambda * (p.x - p.y);
}

CVector grad_E_y(const Ensemble& e, const Residuals& res, const SplitPoint& p, double lambda) {
  const double n = static_cast<double>(e.count());
  return (2.0 / n) * adjoint(e, res.r.cwiseProduct(res.fx)) + 2.0 * lambda * (p.y - p.x);
}

SplitGradient grad_E(const Ensemble& e, const SplitPoint& p, const RVector& b, double lambda) {
  check_lambda(lambda);
  const Residuals res = Residuals::compute(e, p, b);
  return {grad_E_x(e, res, p, lambda), grad_E_y(e, res, p, lambda)};
}

double eval_G(const Ensemble& e, const CVector& z, const RVector& b) {
  require_same_dim(z.size(), e.dim(), "eval_G");
  require_same_dim(b.size(), e.count(), "eval_G");
  const RVector q = forward(e, z).cwiseAbs2() - b;
  return q.squaredNorm() / static_cast<double>(e.count());
}

CVector grad_G(const Ensemble& e, const CVector& z, const RVector& b) {
  require_same_dim(z.size(), e.dim(), "grad_G");
  require_same_dim(b.size(), e.count(), "grad_G");
  const CVector fz = forward(e, z);
  const RVector q = fz.cwiseAbs2() - b;
  return (4.0 / static_cast<double>(e.count())) * adjoint(e, q.cast<Complex>().cwiseProduct(fz));
}

double quad_form_cached(const Ensemble& e, const CVector& fy, const CVector& v, double lambda) {
  check_lambda(lambda);
  require_same_dim(v.size(), e.dim(), "quad_form");
  require_same_dim(fy.size(), e.count(), "quad_form");
  const CVector fv = forward(e, v);
  return fy.cwiseAbs2().dot(fv.cwiseAbs2()) / static_cast<double>(e.count()) + lambda * v.squaredNorm();
}

double quad_form_x(const Ensemble& e, const CVector& y, const CVector& v, double lambda) {
  require_same_dim(y.size(), e.dim(), "quad_form_x");
  return quad_form_cached(e, forward(e, y), v, lambda);
}

double quad_form_y(const Ensemble& e, const CVector& x, const CVector& v, double lambda) {
  require_same_dim(x.size(), e.dim(), "quad_form_y");
  return quad_form_cached(e, forward(e, x), v, lambda);
}

double wf_quad_form(const Ensemble& e, const CVector& z, const CVector& v) {
  require_same_dim(z.size(), e.dim(), "wf_quad_form");
  require_same_dim(v.size(), e.dim(), "wf_quad_form");
  const CVector u = forward(e, z);
  const CVector s = forward(e, v);
  double acc = 0.0;
  for (Eigen::Index n = 0; n < u.size(); ++n) {
    const Complex us = std::conj(u[n]) * s[n];
    acc += 4.0 * std::norm(us) + 2.0 * (us * us).real();
  }
  return acc / static_cast<double>(e.count());
}

}  // namespace phasekit
