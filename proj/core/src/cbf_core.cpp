#include "cbfsafe/cbf_core.hpp"

#include "cbfsafe/errors.hpp"

#include <cmath>
#include <sstream>

namespace cbfsafe {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw ConfigError(what);
}

bool all_finite(const Vector& v) { return v.allFinite(); }

const BarrierLie& check_barrier_lie(const BarrierLie& lie, int m, int q) {
  if (static_cast<int>(lie.lf.size()) < m) {
    std::ostringstream os;
    os << "barrier Lie bundle provides " << lie.lf.size() << " drift derivatives, need " << m;
    throw ConfigError(os.str());
  }
  require(lie.lg_lf.size() == q, "L_g L_f^{m-1} b has wrong length");
  return lie;
}

// Sum_j coeff[j] * L_f^j b for j = 0..order, with L_f^0 b = b.
double drift_chain(const std::vector<double>& coeff, double b, const std::vector<double>& lf) {
  double acc = coeff[0] * b;
  for (std::size_t j = 1; j < coeff.size(); ++j) acc += coeff[j] * lf[j - 1];
  return acc;
}

}  // namespace

// ---------------------------------------------------------------------------
// SystemModel

SystemModel::SystemModel(int state_dim, int control_dim, Drift drift, Actuation actuation,
                         LieBundle lie)
    : n_(state_dim),
      q_(control_dim),
      drift_(std::move(drift)),
      actuation_(std::move(actuation)),
      lie_(std::move(lie)) {
  require(n_ > 0 && q_ > 0, "system dimensions must be positive");
  require(static_cast<bool>(drift_) && static_cast<bool>(actuation_),
          "system needs drift and actuation maps");
  require(static_cast<bool>(lie_.barrier), "system needs a barrier Lie bundle");
}

void SystemModel::check_state(const Vector& x) const {
  if (x.size() != n_) {
    std::ostringstream os;
    os << "state has dimension " << x.size() << ", model expects " << n_;
    throw ConfigError(os.str());
  }
}

Vector SystemModel::drift(const Vector& x, const Signals& s) const {
  check_state(x);
  Vector f = drift_(x, s);
  require(f.size() == n_, "drift output has wrong dimension");
  return f;
}

Matrix SystemModel::actuation(const Vector& x, const Signals& s) const {
  check_state(x);
  Matrix g = actuation_(x, s);
  require(g.rows() == n_ && g.cols() == q_, "actuation output has wrong shape");
  return g;
}

Vector SystemModel::dynamics(const Vector& x, const Vector& u, const Signals& s) const {
  require(u.size() == q_, "control has wrong dimension");
  return drift(x, s) + actuation(x, s) * u;
}

BarrierLie SystemModel::barrier_lie(const Vector& x, const Signals& s) const {
  check_state(x);
  return lie_.barrier(x, s);
}

LyapunovLie SystemModel::lyapunov_lie(const Vector& x, const Signals& s) const {
  check_state(x);
  require(has_lyapunov(), "system has no Lyapunov Lie bundle");
  LyapunovLie l = lie_.lyapunov(x, s);
  require(l.lg_v.size() == q_, "L_g V has wrong length");
  return l;
}

// ---------------------------------------------------------------------------
// Specs

ControlBounds::ControlBounds(Vector lower, Vector upper)
    : lower_(std::move(lower)), upper_(std::move(upper)) {
  require(lower_.size() == upper_.size() && lower_.size() > 0, "bounds size mismatch");
  require(all_finite(lower_) && all_finite(upper_), "control bounds must be finite");
  require((lower_.array() <= upper_.array()).all(), "control bounds require lower <= upper");
}

bool ControlBounds::contains(const Vector& u, double tol) const {
  return u.size() == lower_.size() && (u.array() >= lower_.array() - tol).all() &&
         (u.array() <= upper_.array() + tol).all();
}

HocbfSpec::HocbfSpec(int relative_degree, std::vector<double> kappa_gains, ScalarField barrier)
    : m_(relative_degree), gains_(std::move(kappa_gains)), barrier_(std::move(barrier)) {
  require(m_ >= 1, "relative degree must be at least 1");
  require(static_cast<int>(gains_.size()) == m_, "need one class-kappa gain per order");
  for (double k : gains_) require(k > 0.0 && std::isfinite(k), "class-kappa gains must be positive");
  require(static_cast<bool>(barrier_), "HOCBF needs a barrier function");
}

std::vector<double> HocbfSpec::chain_coefficients(int order) const {
  std::vector<double> c{1.0};
  for (int l = 0; l < order; ++l) {
    // multiply by (s + k_l)
    std::vector<double> next(c.size() + 1, 0.0);
    for (std::size_t j = 0; j < c.size(); ++j) {
      next[j] += gains_[l] * c[j];
      next[j + 1] += c[j];
    }
    c = std::move(next);
  }
  return c;
}

ClfSpec::ClfSpec(ScalarField lyapunov, double c3, double relax_weight)
    : lyapunov_(std::move(lyapunov)), c3_(c3), p_(relax_weight) {
  require(static_cast<bool>(lyapunov_), "CLF needs a Lyapunov function");
  require(c3_ > 0.0, "CLF decay rate c3 must be positive");
  require(p_ > 0.0, "CLF relaxation weight must be positive");
}

double ClfSpec::lyapunov(const Vector& x, const Signals& s) const {
  const double v = lyapunov_(x, s);
  if (!(v >= 0.0)) throw ConfigError("Lyapunov function evaluated negative");
  return v;
}

FeasibilitySpec::FeasibilitySpec(double gain, double epsilon, double a0)
    : gain_(gain), epsilon_(epsilon), a0_(a0) {
  require(gain_ > 0.0, "feasibility gain k_F must be positive");
  require(epsilon_ > 0.0, "feasibility margin epsilon must be positive");
  require(std::isfinite(a0_), "initial auxiliary variable must be finite");
}

double FeasibilitySpec::aux(double a) { return std::exp(a); }
double FeasibilitySpec::aux_slope(double a) { return std::exp(a); }

std::string_view to_string(RowLabel label) {
  switch (label) {
    case RowLabel::Hocbf: return "hocbf";
    case RowLabel::Clf: return "clf";
    case RowLabel::Feasibility: return "feasibility";
    case RowLabel::Bounds: return "bounds";
  }
  return "?";
}

double ConstraintRow::slack(const Vector& z) const {
  const double v = lhs(z);
  return sense == Sense::GreaterEqual ? v - bound : bound - v;
}

// ---------------------------------------------------------------------------
// Constraint mathematics

std::vector<double> psi_sequence(const HocbfSpec& spec, const SystemModel& sys, const Vector& x,
                                 const Signals& s) {
  const int m = spec.relative_degree();
  const double b = spec.barrier(x, s);
  std::vector<double> psi{b};
  if (m == 1) {
    sys.check_state(x);
    return psi;
  }
  const BarrierLie lie = sys.barrier_lie(x, s);
  check_barrier_lie(lie, m, sys.control_dim());
  for (int i = 1; i < m; ++i) psi.push_back(drift_chain(spec.chain_coefficients(i), b, lie.lf));
  return psi;
}

ConstraintRow hocbf_constraint_row(const HocbfSpec& spec, const SystemModel& sys, const Vector& x,
                                   const Signals& s) {
  const int m = spec.relative_degree();
  const int q = sys.control_dim();
  const BarrierLie lie = sys.barrier_lie(x, s);
  check_barrier_lie(lie, m, q);
  const double drift_part = drift_chain(spec.chain_coefficients(m), spec.barrier(x, s), lie.lf);

  ConstraintRow row;
  row.coeffs = Vector::Zero(q + 1);
  row.coeffs.head(q) = lie.lg_lf;
  row.bound = -drift_part;
  row.sense = Sense::GreaterEqual;
  row.label = RowLabel::Hocbf;
  return row;
}

ConstraintRow clf_constraint_row(const ClfSpec& spec, const SystemModel& sys, const Vector& x,
                                 const Signals& s) {
  const int q = sys.control_dim();
  const LyapunovLie lie = sys.lyapunov_lie(x, s);
  const double v = spec.lyapunov(x, s);

  ConstraintRow row;
  row.coeffs = Vector::Zero(q + 1);
  row.coeffs.head(q) = lie.lg_v;
  row.coeffs(q) = -1.0;
  row.bound = -(lie.lf_v + spec.c3() * v);
  row.sense = Sense::LessEqual;
  row.label = RowLabel::Clf;
  return row;
}

Vector compute_u_m(const Vector& coeffs, const ControlBounds& bounds) {
  if (coeffs.size() != bounds.size()) throw ConfigError("u_M: coefficient/bound size mismatch");
  Vector u(coeffs.size());
  for (Eigen::Index i = 0; i < coeffs.size(); ++i)
    u(i) = coeffs(i) > 0.0 ? bounds.upper()(i) : bounds.lower()(i);
  return u;
}

FeasibilityTerms feasibility_terms(const HocbfSpec& spec, const SystemModel& sys,
                                   const ControlBounds& bounds, const Vector& x,
                                   const Signals& s) {
  const int m = spec.relative_degree();
  const int q = sys.control_dim();
  if (bounds.size() != q) throw ConfigError("bounds dimension differs from control dimension");
  const BarrierLie lie = sys.barrier_lie(x, s);
  check_barrier_lie(lie, m + 1, q);
  require(lie.lg_lf_next.size() == q, "L_g L_f^m b has wrong length");
  require(lie.lf_of_lg_lf.size() == q, "L_f L_g L_f^{m-1} b has wrong length");
  require(lie.lg_of_lg_lf.rows() == q && lie.lg_of_lg_lf.cols() == q,
          "L_g L_g L_f^{m-1} b has wrong shape");

  const std::vector<double> c = spec.chain_coefficients(m);
  const double b = spec.barrier(x, s);

  FeasibilityTerms out;
  out.u_m = compute_u_m(lie.lg_lf, bounds);
  out.b_f = drift_chain(c, b, lie.lf) + lie.lg_lf.dot(out.u_m);

  // L_f (L_f^j b) = L_f^{j+1} b
  double lf = lie.lf_of_lg_lf.dot(out.u_m);
  for (int j = 0; j <= m; ++j) lf += c[j] * lie.lf[j];
  out.lf_b_f = lf;

  // L_g L_f^j b vanishes below j = m-1
  Vector lg = lie.lg_of_lg_lf.transpose() * out.u_m;
  lg += c[m - 1] * lie.lg_lf;
  lg += c[m] * lie.lg_lf_next;
  out.lg_b_f = lg;
  return out;
}

double feasibility_value(const HocbfSpec& spec, const SystemModel& sys,
                         const ControlBounds& bounds, const Vector& x, const Signals& s) {
  const int m = spec.relative_degree();
  const BarrierLie lie = sys.barrier_lie(x, s);
  check_barrier_lie(lie, m, sys.control_dim());
  const Vector u_m = compute_u_m(lie.lg_lf, bounds);
  return drift_chain(spec.chain_coefficients(m), spec.barrier(x, s), lie.lf) + lie.lg_lf.dot(u_m);
}

double aux_dot(const FeasibilitySpec& spec, const FeasibilityTerms& terms, double a, double t) {
  (void)spec;
  if (!(terms.b_f > 0.0)) {
    std::ostringstream os;
    os << "feasibility constraint lost: b_F = " << terms.b_f << " at t = " << t;
    throw FeasibilityLoss(os.str(), t, terms.b_f);
  }
  const double A = FeasibilitySpec::aux(a);
  const double lambda = A * terms.lg_b_f.dot(terms.u_m);
  return -(A * terms.lf_b_f + lambda) / (FeasibilitySpec::aux_slope(a) * terms.b_f);
}

ConstraintRow feasibility_constraint_row(const FeasibilitySpec& spec,
                                         const FeasibilityTerms& terms, double a, double a_dot) {
  const int q = static_cast<int>(terms.lg_b_f.size());
  const double A = FeasibilitySpec::aux(a);
  const double dA = FeasibilitySpec::aux_slope(a);

  ConstraintRow row;
  row.coeffs = Vector::Zero(q + 1);
  row.coeffs.head(q) = A * terms.lg_b_f;
  row.bound = spec.epsilon() - dA * a_dot * terms.b_f - A * terms.lf_b_f -
              spec.gain() * A * terms.b_f;
  row.sense = Sense::GreaterEqual;
  row.label = RowLabel::Feasibility;
  return row;
}

ConstraintRow reduced_feasibility_row(const FeasibilitySpec& spec, const FeasibilityTerms& terms,
                                      double a) {
  const int q = static_cast<int>(terms.lg_b_f.size());
  const double A = FeasibilitySpec::aux(a);

  ConstraintRow row;
  row.coeffs = Vector::Zero(q + 1);
  row.coeffs.head(q) = A * terms.lg_b_f;
  row.bound = spec.epsilon() + A * terms.lg_b_f.dot(terms.u_m) - spec.gain() * A * terms.b_f;
  row.sense = Sense::GreaterEqual;
  row.label = RowLabel::Feasibility;
  return row;
}

Vector sign_pattern(const Vector& v) {
  Vector s(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) s(i) = v(i) > 0.0 ? 1.0 : (v(i) < 0.0 ? -1.0 : 0.0);
  return s;
}

SignCheck check_sign_pattern(const Vector& current, const Vector& reference_signs) {
  if (current.size() != reference_signs.size())
    throw ConfigError("sign pattern size mismatch");
  SignCheck out;
  const Vector now = sign_pattern(current);
  for (Eigen::Index i = 0; i < now.size(); ++i) {
    if (now(i) == 0.0) {
      out.has_zero = true;
    } else if (now(i) != reference_signs(i)) {
      out.holds = false;
    }
  }
  return out;
}

bool assumption1_check(const SystemModel& sys, const Vector& x, const Signals& s,
                       const HocbfSpec& spec, const Vector& reference_signs) {
  const BarrierLie lie = sys.barrier_lie(x, s);
  check_barrier_lie(lie, spec.relative_degree(), sys.control_dim());
  return check_sign_pattern(lie.lg_lf, reference_signs).holds;
}

}  // namespace cbfsafe
