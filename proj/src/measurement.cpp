#include "phasekit/measurement.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <sstream>

#include <Eigen/QR>

namespace phasekit {

namespace detail {

// FFTW planning touches global planner state; execution of an existing plan on
// caller-owned arrays (fftw_execute_dft) is thread-safe.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftPlans {
  int n = 0;
  fftw_plan forward = nullptr;   // kernel exp(-2 pi i q t / n), unnormalized
  fftw_plan backward = nullptr;  // kernel exp(+2 pi i q t / n), unnormalized

  explicit FftPlans(int size) : n(size) {
    std::vector<Complex> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    auto* pin = reinterpret_cast<fftw_complex*>(in.data());
    auto* pout = reinterpret_cast<fftw_complex*>(out.data());
    std::lock_guard lock(fftw_planner_mutex());
    forward = fftw_plan_dft_1d(n, pin, pout, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft_1d(n, pin, pout, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward == nullptr || backward == nullptr) throw std::runtime_error("FFTW planning failed");
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    std::lock_guard lock(fftw_planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
  }

  void run(fftw_plan plan, const Complex* in, Complex* out) const {
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(const_cast<Complex*>(in)),
                     reinterpret_cast<fftw_complex*>(out));
  }
};

}  // namespace detail

std::string to_string(EnsembleKind kind) {
  switch (kind) {
    case EnsembleKind::GaussianComplex: return "gaussian_complex";
    case EnsembleKind::GaussianReal: return "gaussian_real";
    case EnsembleKind::CDP: return "cdp";
    case EnsembleKind::Explicit: return "explicit";
  }
  return "unknown";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "gaussian_complex") return EnsembleKind::GaussianComplex;
  if (name == "gaussian_real") return EnsembleKind::GaussianReal;
  if (name == "cdp") return EnsembleKind::CDP;
  throw std::invalid_argument("unknown ensemble kind '" + name + "'");
}

std::string EnsembleSpec::to_text() const {
  std::ostringstream os;
  os << "kind=" << to_string(kind) << " d=" << d << (kind == EnsembleKind::CDP ? " L=" : " N=")
     << count << " seed=" << seed;
  return os.str();
}

EnsembleSpec EnsembleSpec::parse(const std::string& text) {
  EnsembleSpec spec;
  bool have_kind = false, have_d = false, have_count = false, have_seed = false;
  std::istringstream is(text);
  std::string token;
  while (is >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("ensemble spec: bad token '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    if (key == "kind") {
      spec.kind = ensemble_kind_from_string(value);
      have_kind = true;
    } else if (key == "d") {
      spec.d = std::stol(value);
      have_d = true;
    } else if (key == "N" || key == "L") {
      spec.count = std::stol(value);
      have_count = true;
    } else if (key == "seed") {
      spec.seed = std::stoull(value);
      have_seed = true;
    } else {
      throw std::invalid_argument("ensemble spec: unknown key '" + key + "'");
    }
  }
  if (!(have_kind && have_d && have_count && have_seed)) {
    throw std::invalid_argument("ensemble spec: requires kind, d, N or L, seed");
  }
  if (spec.d < 1 || spec.count < 1) throw std::invalid_argument("ensemble spec: counts must be positive");
  return spec;
}

MeasurementData::MeasurementData(RVector values) : b_(std::move(values)) {
  for (Eigen::Index i = 0; i < b_.size(); ++i) {
    if (!std::isfinite(b_[i]) || b_[i] < 0.0) {
      throw std::invalid_argument("MeasurementData: entries must be finite and nonnegative");
    }
  }
}

const CMatrix& Ensemble::frame() const {
  if (is_cdp()) throw std::logic_error("Ensemble::frame: CDP ensembles have no dense frame");
  return frame_;
}

const std::vector<CVector>& Ensemble::masks() const {
  if (!is_cdp()) throw std::logic_error("Ensemble::masks: not a CDP ensemble");
  return masks_;
}

void Ensemble::finalize() {
  if (is_cdp()) {
    d_ = masks_.front().size();
    n_ = mask_count() * d_;
    // ||G_p f_q||^2 = sum_t |g_p(t)|^2 for every q.
    frame_energy_ = 0.0;
    RVector coverage = RVector::Zero(d_);
    for (const auto& g : masks_) {
      frame_energy_ += static_cast<double>(d_) * g.squaredNorm();
      coverage += g.cwiseAbs2();
    }
    rank_deficient_ = (coverage.array() == 0.0).any();
    real_ = false;
    fft_ = std::make_shared<const detail::FftPlans>(static_cast<int>(d_));
  } else {
    d_ = frame_.rows();
    n_ = frame_.cols();
    frame_energy_ = frame_.squaredNorm();
    real_ = frame_.imag().isZero(0.0);
    if (n_ < d_) {
      rank_deficient_ = true;
    } else {
      Eigen::ColPivHouseholderQR<CMatrix> qr(frame_);
      rank_deficient_ = qr.rank() < d_;
    }
  }
}

Ensemble Ensemble::from_matrix(CMatrix frame) {
  if (frame.rows() < 1 || frame.cols() < 1) throw std::invalid_argument("Ensemble: empty frame");
  if (!frame.allFinite()) throw std::invalid_argument("Ensemble: frame entries must be finite");
  Ensemble e;
  e.kind_ = EnsembleKind::Explicit;
  e.frame_ = std::move(frame);
  e.finalize();
  return e;
}

Ensemble Ensemble::from_masks(std::vector<CVector> masks) {
  if (masks.empty() || masks.front().size() < 1) throw std::invalid_argument("Ensemble: empty mask list");
  for (const auto& g : masks) {
    require_same_dim(g.size(), masks.front().size(), "Ensemble::from_masks");
    if (!all_finite(g)) throw std::invalid_argument("Ensemble: mask entries must be finite");
  }
  Ensemble e;
  e.kind_ = EnsembleKind::CDP;
  e.masks_ = std::move(masks);
  e.finalize();
  return e;
}

CMatrix Ensemble::materialize() const {
  if (!is_cdp()) return frame_;
  CMatrix out(d_, n_);
  for (Eigen::Index p = 0; p < mask_count(); ++p) {
    for (Eigen::Index q = 0; q < d_; ++q) {
      out.col(p * d_ + q) = adjoint(*this, CVector::Unit(n_, p * d_ + q));
    }
  }
  return out;
}

Ensemble gaussian_ensemble(Eigen::Index d, Eigen::Index n, Field field, RngStream& rng) {
  if (d < 1 || n < 1) throw std::invalid_argument("gaussian_ensemble: d and N must be >= 1");
  Ensemble e;
  e.kind_ = field == Field::Complex ? EnsembleKind::GaussianComplex : EnsembleKind::GaussianReal;
  if (rng.draws() == 0) e.spec_ = EnsembleSpec{e.kind_, d, n, rng.seed()};
  e.frame_.resize(d, n);
  for (Eigen::Index col = 0; col < n; ++col) e.frame_.col(col) = sample_complex_gaussian(rng, d, field);
  e.finalize();
  return e;
}

Complex draw_cdp_atom(RngStream& rng) {
  static const double kSmall = std::sqrt(2.0) / 2.0;
  static const double kLarge = std::sqrt(3.0);
  const double u = rng.uniform();
  // Four atoms of mass 1/5 occupy [0, 0.8); four of mass 1/20 occupy [0.8, 1).
  if (u < 0.8) {
    switch (static_cast<int>(u / 0.2)) {
      case 0: return {kSmall, 0.0};
      case 1: return {-kSmall, 0.0};
      case 2: return {0.0, kSmall};
      default: return {0.0, -kSmall};
    }
  }
  switch (std::min(3, static_cast<int>((u - 0.8) / 0.05))) {
    case 0: return {kLarge, 0.0};
    case 1: return {-kLarge, 0.0};
    case 2: return {0.0, kLarge};
    default: return {0.0, -kLarge};
  }
}

Ensemble cdp_ensemble(Eigen::Index d, Eigen::Index masks, RngStream& rng) {
  if (d < 1 || masks < 1) throw std::invalid_argument("cdp_ensemble: d and L must be >= 1");
  Ensemble e;
  e.kind_ = EnsembleKind::CDP;
  if (rng.draws() == 0) e.spec_ = EnsembleSpec{EnsembleKind::CDP, d, masks, rng.seed()};
  e.masks_.reserve(static_cast<std::size_t>(masks));
  for (Eigen::Index p = 0; p < masks; ++p) {
    CVector g(d);
    for (Eigen::Index t = 0; t < d; ++t) g[t] = draw_cdp_atom(rng);
    e.masks_.push_back(std::move(g));
  }
  e.finalize();
  return e;
}

Ensemble build_ensemble(const EnsembleSpec& spec) {
  RngStream rng(spec.seed);
  switch (spec.kind) {
    case EnsembleKind::GaussianComplex: return gaussian_ensemble(spec.d, spec.count, Field::Complex, rng);
    case EnsembleKind::GaussianReal: return gaussian_ensemble(spec.d, spec.count, Field::Real, rng);
    case EnsembleKind::CDP: return cdp_ensemble(spec.d, spec.count, rng);
    case EnsembleKind::Explicit: break;
  }
  throw std::invalid_argument("build_ensemble: explicit frames cannot be rebuilt from a seed");
}

CVector forward(const Ensemble& e, const CVector& v) {
  require_same_dim(v.size(), e.d_, "forward");
  if (!e.is_cdp()) return e.frame_.adjoint() * v;
  const Eigen::Index d = e.d_;
  CVector out(e.n_);
  CVector masked(d);
  for (Eigen::Index p = 0; p < e.mask_count(); ++p) {
    masked = e.masks_[p].conjugate().cwiseProduct(v);
    e.fft_->run(e.fft_->forward, masked.data(), out.data() + p * d);
  }
  return out;
}

CVector adjoint(const Ensemble& e, const CVector& w) {
  require_same_dim(w.size(), e.n_, "adjoint");
  if (!e.is_cdp()) return e.frame_ * w;
  const Eigen::Index d = e.d_;
  CVector out = CVector::Zero(d);
  CVector spread(d);
  for (Eigen::Index p = 0; p < e.mask_count(); ++p) {
    e.fft_->run(e.fft_->backward, w.data() + p * d, spread.data());
    out += e.masks_[p].cwiseProduct(spread);
  }
  return out;
}

CVector dft(const CVector& v, bool inverse) {
  if (v.size() < 1) throw std::invalid_argument("dft: empty input");
  const detail::FftPlans plans(static_cast<int>(v.size()));
  CVector out(v.size());
  plans.run(inverse ? plans.backward : plans.forward, v.data(), out.data());
  return out;
}

MeasurementData measure(const Ensemble& e, const CVector& x, const std::optional<IntensityNoise>& noise) {
  RVector b = forward(e, x).cwiseAbs2();
  if (noise && noise->sigma > 0.0) {
    RngStream rng(noise->seed);
    for (Eigen::Index n = 0; n < b.size(); ++n) b[n] = std::max(0.0, b[n] + noise->sigma * rng.normal());
  }
  return MeasurementData(std::move(b));
}

FrameBoundEstimate estimate_frame_bound(const Ensemble& e, double rel_tol, int max_iter) {
  RngStream rng(0x9a2f5c1d3e7b4a60ULL);
  CVector v = sample_complex_gaussian(rng, e.dim(), e.is_real() ? Field::Real : Field::Complex);
  v.normalize();
  double rho = 0.0;
  FrameBoundEstimate est;
  for (int it = 1; it <= max_iter; ++it) {
    const CVector w = adjoint(e, forward(e, v));
    const double next = v.dot(w).real();
    const double residual = (w - next * v).norm();
    const double wn = w.norm();
    if (wn == 0.0) break;
    const bool settled = std::abs(next - rho) <= rel_tol * next && residual <= std::sqrt(rel_tol) * next;
    rho = next;
    v = w / wn;
    est.iterations = it;
    if (settled) break;
  }
  est.bound = rho;
  est.eigenvector = std::move(v);
  return est;
}

double upper_frame_bound(const Ensemble& e, double rel_tol, int max_iter) {
  return estimate_frame_bound(e, rel_tol, max_iter).bound;
}

}  // namespace phasekit
