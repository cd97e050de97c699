#pragma once

#include "cbfsafe/cbf_core.hpp"

#include <string_view>
#include <vector>

namespace cbfsafe::qp {

/// minimize 0.5 z'Hz + c'z + constant
/// subject to rows and lower <= z <= upper (entries may be +-infinity).
struct QpProblem {
  Matrix hessian;
  Vector linear;
  double constant = 0.0;
  std::vector<ConstraintRow> rows;
  Vector lower;
  Vector upper;

  int dim() const { return static_cast<int>(linear.size()); }
  double objective(const Vector& z) const;

  /// Unbounded box of dimension d.
  static QpProblem make(Matrix hessian, Vector linear);
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

std::string_view to_string(QpStatus status);

/// Lagrange multipliers, all nonnegative at a KKT point. Each row and bound is
/// read as g(z) <= 0 so that  Hz + c + sum_i mult_i grad g_i = 0.
struct QpMultipliers {
  Vector rows;
  Vector lower;
  Vector upper;
};

/// Index of a constraint in a QpProblem: rows first, then (lower, upper) per variable.
struct ConstraintRef {
  enum class Kind { Row, Lower, Upper } kind;
  int index;
  bool operator==(const ConstraintRef&) const = default;
};

/// Nonnegative weights over a constraint subset whose combination of the
/// constraints (each read as g(z) <= 0) has zero gradient and a positive constant,
/// i.e. sum_k w_k g_k(z) = const > 0 for all z. No z satisfies all of them.
struct InfeasibilityCertificate {
  std::vector<ConstraintRef> constraints;
  std::vector<double> weights;
};

struct QpSolution {
  QpStatus status = QpStatus::MaxIterations;
  Vector point;
  double objective = 0.0;
  double kkt_residual = 0.0;
  std::vector<ConstraintRef> active_set;
  QpMultipliers multipliers;
  InfeasibilityCertificate certificate;
  int iterations = 0;
};

struct SolverOptions {
  double feasibility_tol = 1e-9;
  double kkt_tol = 1e-8;
  int max_iterations = 1000;
};

/// Dense strictly-convex QP solver (dual active set). One instance per thread;
/// each call is independent and deterministic.
class ActiveSetSolver {
 public:
  explicit ActiveSetSolver(SolverOptions opts = {}) : opts_(opts) {}

  QpSolution solve(const QpProblem& problem) const;

  const SolverOptions& options() const { return opts_; }

 private:
  SolverOptions opts_;
};

inline QpSolution solve(const QpProblem& problem) { return ActiveSetSolver{}.solve(problem); }

/// Largest violation over stationarity, primal feasibility, dual feasibility
/// and complementary slackness. Stationarity and dual feasibility are absolute;
/// a constraint's violation and its complementarity product are measured
/// relative to max(1, |grad'z| + |offset|), the size of the terms it subtracts.
double verify_kkt(const QpProblem& problem, const Vector& point, const QpMultipliers& multipliers);

/// Largest constraint violation of `point` (rows and box), 0 if feasible.
double max_violation(const QpProblem& problem, const Vector& point);

/// Checks that the certificate really proves infeasibility: weights >= 0, the
/// weighted gradient sum vanishes (relative tol) and the constant is positive.
bool check_certificate(const QpProblem& problem, const InfeasibilityCertificate& cert,
                       double tol = 1e-9);

}  // namespace cbfsafe::qp
