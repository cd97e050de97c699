#pragma once

#include <Eigen/Dense>

#include <functional>
#include <string_view>
#include <vector>

namespace cbfsafe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Information an agent knows at evaluation time besides its own state:
/// the time and scenario-defined exogenous quantities (lead acceleration, jerk, ...).
struct Signals {
  double t = 0.0;
  Vector exogenous;
};

/// Lie derivatives of a relative-degree-m barrier b at one state.
///
/// Only the entries the constraint rows actually consume are stored. The
/// entries past order m feed the feasibility CBF, whose own derivatives are
/// assembled from them in `feasibility_terms`.
struct BarrierLie {
  /// lf[i-1] = L_f^i b for i = 1..m+1.
  std::vector<double> lf;
  /// L_g L_f^{m-1} b, one entry per control.
  Vector lg_lf;
  /// L_g L_f^m b.
  Vector lg_lf_next;
  /// L_f of each component of L_g L_f^{m-1} b.
  Vector lf_of_lg_lf;
  /// (i, j) = L_{g_j} of component i of L_g L_f^{m-1} b.
  Matrix lg_of_lg_lf;
};

struct LyapunovLie {
  double lf_v = 0.0;
  Vector lg_v;
};

/// Scenario-supplied analytic Lie derivatives.
struct LieBundle {
  std::function<BarrierLie(const Vector&, const Signals&)> barrier;
  std::function<LyapunovLie(const Vector&, const Signals&)> lyapunov;
};

/// Control-affine dynamics x' = f(x) + g(x) u with the Lie derivatives the
/// constraint rows need. Immutable after construction.
class SystemModel {
 public:
  using Drift = std::function<Vector(const Vector&, const Signals&)>;
  using Actuation = std::function<Matrix(const Vector&, const Signals&)>;

  SystemModel(int state_dim, int control_dim, Drift drift, Actuation actuation, LieBundle lie);

  int state_dim() const { return n_; }
  int control_dim() const { return q_; }

  Vector drift(const Vector& x, const Signals& s) const;
  Matrix actuation(const Vector& x, const Signals& s) const;
  Vector dynamics(const Vector& x, const Vector& u, const Signals& s) const;

  BarrierLie barrier_lie(const Vector& x, const Signals& s) const;
  LyapunovLie lyapunov_lie(const Vector& x, const Signals& s) const;
  bool has_lyapunov() const { return static_cast<bool>(lie_.lyapunov); }

  void check_state(const Vector& x) const;

 private:
  int n_;
  int q_;
  Drift drift_;
  Actuation actuation_;
  LieBundle lie_;
};

/// Box U = {u : lower <= u <= upper}, all entries finite.
class ControlBounds {
 public:
  ControlBounds(Vector lower, Vector upper);

  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  int size() const { return static_cast<int>(lower_.size()); }
  bool contains(const Vector& u, double tol = 0.0) const;

 private:
  Vector lower_;
  Vector upper_;
};

using ScalarField = std::function<double(const Vector&, const Signals&)>;

/// High-order CBF with linear class-kappa functions alpha_i(s) = k_i s.
class HocbfSpec {
 public:
  HocbfSpec(int relative_degree, std::vector<double> kappa_gains, ScalarField barrier);

  int relative_degree() const { return m_; }
  const std::vector<double>& kappa_gains() const { return gains_; }
  double barrier(const Vector& x, const Signals& s) const { return barrier_(x, s); }

  /// Coefficients of prod_{l=1..order} (s + k_l), lowest power first. With
  /// linear gains psi_order = sum_j coeff[j] * d^j b / dt^j.
  std::vector<double> chain_coefficients(int order) const;

 private:
  int m_;
  std::vector<double> gains_;
  ScalarField barrier_;
};

/// Relaxed CLF: L_f V + L_g V u + c3 V <= delta, with cost weight p on delta^2.
/// The bounding constants c1, c2 of the exponential-stability definition are
/// existence conditions only and are not stored.
class ClfSpec {
 public:
  ClfSpec(ScalarField lyapunov, double c3, double relax_weight);

  double lyapunov(const Vector& x, const Signals& s) const;
  double c3() const { return c3_; }
  double relax_weight() const { return p_; }

 private:
  ScalarField lyapunov_;
  double c3_;
  double p_;
};

/// Auxiliary-function CBF enforcing b_F > 0 with A(a) = e^a and alpha_F(s) = k_F s.
class FeasibilitySpec {
 public:
  FeasibilitySpec(double gain, double epsilon, double a0);

  double gain() const { return gain_; }
  double epsilon() const { return epsilon_; }
  double a0() const { return a0_; }

  static double aux(double a);
  static double aux_slope(double a);

 private:
  double gain_;
  double epsilon_;
  double a0_;
};

enum class Sense { GreaterEqual, LessEqual };
enum class RowLabel { Hocbf, Clf, Feasibility, Bounds };

std::string_view to_string(RowLabel label);

/// coeffs . (u_1..u_q, delta)  (sense)  bound
struct ConstraintRow {
  Vector coeffs;
  double bound = 0.0;
  Sense sense = Sense::GreaterEqual;
  RowLabel label = RowLabel::Hocbf;

  double lhs(const Vector& z) const { return coeffs.dot(z); }
  /// Nonnegative iff z satisfies the row.
  double slack(const Vector& z) const;
};

/// psi_0 .. psi_{m-1} at x.
std::vector<double> psi_sequence(const HocbfSpec& spec, const SystemModel& sys, const Vector& x,
                                 const Signals& s);

/// psi_m(x, u) >= 0 as a row over (u, delta); zero coefficient on delta.
ConstraintRow hocbf_constraint_row(const HocbfSpec& spec, const SystemModel& sys, const Vector& x,
                                   const Signals& s);

/// L_f V + L_g V u + c3 V - delta <= 0.
ConstraintRow clf_constraint_row(const ClfSpec& spec, const SystemModel& sys, const Vector& x,
                                 const Signals& s);

/// Point of the box attaining sup_u coeffs . u. Zero coefficients take the lower bound.
Vector compute_u_m(const Vector& coeffs, const ControlBounds& bounds);

/// b_F(x): psi_m evaluated at u = u_M.
double feasibility_value(const HocbfSpec& spec, const SystemModel& sys,
                         const ControlBounds& bounds, const Vector& x, const Signals& s);

/// b_F together with its Lie derivatives and the u_M used to build it.
struct FeasibilityTerms {
  double b_f = 0.0;
  double lf_b_f = 0.0;
  Vector lg_b_f;
  Vector u_m;
};

/// Evaluates b_F, L_f b_F and L_g b_F from the barrier's Lie derivatives.
/// u_M is held fixed while differentiating, which is exact while Assumption 1
/// (no sign change of L_g L_f^{m-1} b) holds.
FeasibilityTerms feasibility_terms(const HocbfSpec& spec, const SystemModel& sys,
                                   const ControlBounds& bounds, const Vector& x, const Signals& s);

/// Closed-form auxiliary dynamics
///   a' = -(dA/da)^{-1} (A(a) L_f b_F + lambda) / b_F,  lambda = A(a) L_g b_F u_M.
/// Throws FeasibilityLoss when b_F <= 0.
double aux_dot(const FeasibilitySpec& spec, const FeasibilityTerms& terms, double a,
               double t = 0.0);

/// A'(a) a' b_F + A(a)(L_f b_F + L_g b_F u) + k_F A(a) b_F >= epsilon.
ConstraintRow feasibility_constraint_row(const FeasibilitySpec& spec,
                                         const FeasibilityTerms& terms, double a, double a_dot);

/// The same row after substituting `aux_dot`:
///   A(a) L_g b_F (u - u_M) + k_F A(a) b_F >= epsilon.
ConstraintRow reduced_feasibility_row(const FeasibilitySpec& spec, const FeasibilityTerms& terms,
                                      double a);

/// Componentwise sign (-1, 0, +1).
Vector sign_pattern(const Vector& v);

struct SignCheck {
  bool holds = true;
  bool has_zero = false;
};

/// Assumption 1 monitor: every component of L_g L_f^{m-1} b keeps its reference
/// sign. A zero component is accepted and reported through `has_zero`.
SignCheck check_sign_pattern(const Vector& current, const Vector& reference_signs);

bool assumption1_check(const SystemModel& sys, const Vector& x, const Signals& s,
                       const HocbfSpec& spec, const Vector& reference_signs);

}  // namespace cbfsafe
