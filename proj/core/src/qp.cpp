#include "cbfsafe/qp.hpp"

#include "cbfsafe/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cbfsafe::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One inequality n'z >= b with unit-norm n, plus the scale that maps it back.
struct Inequality {
  Vector normal;
  double rhs;
  double scale;
  ConstraintRef ref;
};

// g(z) <= 0 view of an original constraint: gradient and offset so that g(z) = grad'z + offset.
struct Affine {
  Vector grad;
  double offset;
};

Affine as_affine(const QpProblem& p, const ConstraintRef& ref) {
  const int d = p.dim();
  Affine a{Vector::Zero(d), 0.0};
  switch (ref.kind) {
    case ConstraintRef::Kind::Row: {
      const ConstraintRow& row = p.rows[ref.index];
      if (row.sense == Sense::GreaterEqual) {
        a.grad = -row.coeffs;
        a.offset = row.bound;
      } else {
        a.grad = row.coeffs;
        a.offset = -row.bound;
      }
      break;
    }
    case ConstraintRef::Kind::Lower:
      a.grad(ref.index) = -1.0;
      a.offset = p.lower(ref.index);
      break;
    case ConstraintRef::Kind::Upper:
      a.grad(ref.index) = 1.0;
      a.offset = -p.upper(ref.index);
      break;
  }
  return a;
}

void validate(const QpProblem& p) {
  const int d = p.dim();
  if (d <= 0) throw ConfigError("QP has no decision variables");
  if (p.hessian.rows() != d || p.hessian.cols() != d) throw ConfigError("QP Hessian shape mismatch");
  if (p.lower.size() != d || p.upper.size() != d) throw ConfigError("QP box size mismatch");
  if ((p.lower.array() > p.upper.array()).any()) throw ConfigError("QP box has lower > upper");
  if (!p.hessian.isApprox(p.hessian.transpose(), 1e-12)) throw ConfigError("QP Hessian not symmetric");
  for (const auto& row : p.rows) {
    if (row.coeffs.size() != d) throw ConfigError("QP row length mismatch");
    if (!row.coeffs.allFinite() || !std::isfinite(row.bound)) throw ConfigError("QP row not finite");
  }
}

}  // namespace

double QpProblem::objective(const Vector& z) const {
  return 0.5 * z.dot(hessian * z) + linear.dot(z) + constant;
}

QpProblem QpProblem::make(Matrix hessian, Vector linear) {
  QpProblem p;
  const auto d = linear.size();
  p.hessian = std::move(hessian);
  p.linear = std::move(linear);
  p.lower = Vector::Constant(d, -kInf);
  p.upper = Vector::Constant(d, kInf);
  return p;
}

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIterations: return "max-iterations";
  }
  return "?";
}

QpSolution ActiveSetSolver::solve(const QpProblem& problem) const {
  validate(problem);
  const int d = problem.dim();

  Eigen::LLT<Matrix> llt(problem.hessian);
  if (llt.info() != Eigen::Success) throw ConfigError("QP Hessian is not positive definite");
  const Matrix L = llt.matrixL();

  QpSolution sol;
  sol.multipliers.rows = Vector::Zero(static_cast<Eigen::Index>(problem.rows.size()));
  sol.multipliers.lower = Vector::Zero(d);
  sol.multipliers.upper = Vector::Zero(d);

  // Normalised constraint set.
  std::vector<Inequality> cons;
  for (int i = 0; i < static_cast<int>(problem.rows.size()); ++i) {
    const Affine a = as_affine(problem, {ConstraintRef::Kind::Row, i});
    const double norm = a.grad.norm();
    if (norm == 0.0) {
      if (a.offset > opts_.feasibility_tol) {
        sol.status = QpStatus::Infeasible;
        sol.certificate.constraints.push_back({ConstraintRef::Kind::Row, i});
        sol.certificate.weights.push_back(1.0);
        sol.point = Vector::Zero(d);
        return sol;
      }
      continue;
    }
    cons.push_back({-a.grad / norm, a.offset / norm, norm, {ConstraintRef::Kind::Row, i}});
  }
  for (int i = 0; i < d; ++i) {
    if (std::isfinite(problem.lower(i))) {
      Vector n = Vector::Zero(d);
      n(i) = 1.0;
      cons.push_back({n, problem.lower(i), 1.0, {ConstraintRef::Kind::Lower, i}});
    }
    if (std::isfinite(problem.upper(i))) {
      Vector n = Vector::Zero(d);
      n(i) = -1.0;
      cons.push_back({n, -problem.upper(i), 1.0, {ConstraintRef::Kind::Upper, i}});
    }
  }

  // Unconstrained minimiser.
  Vector x = -llt.solve(problem.linear);
  std::vector<int> active;
  std::vector<double> u;

  const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));

  int iter = 0;
  auto finish_optimal = [&]() {
    sol.status = QpStatus::Optimal;
    sol.point = x;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const Inequality& c = cons[active[k]];
      const double lam = u[k] / c.scale;
      switch (c.ref.kind) {
        case ConstraintRef::Kind::Row: sol.multipliers.rows(c.ref.index) = lam; break;
        case ConstraintRef::Kind::Lower: sol.multipliers.lower(c.ref.index) = lam; break;
        case ConstraintRef::Kind::Upper: sol.multipliers.upper(c.ref.index) = lam; break;
      }
      sol.active_set.push_back(c.ref);
    }
    sol.objective = problem.objective(x);
    sol.kkt_residual = verify_kkt(problem, x, sol.multipliers);
    sol.iterations = iter;
  };

  std::vector<char> in_active(cons.size(), 0);

  while (true) {
    // Step 1: most violated constraint.
    int p = -1;
    double sp = -opts_.feasibility_tol;
    for (int i = 0; i < static_cast<int>(cons.size()); ++i) {
      if (in_active[i]) continue;
      const double s = cons[i].normal.dot(x) - cons[i].rhs;
      if (s < sp) {
        sp = s;
        p = i;
      }
    }
    if (p < 0) {
      finish_optimal();
      return sol;
    }
    double up = 0.0;

    // Step 2: move towards satisfying p.
    while (true) {
      if (++iter > opts_.max_iterations) {
        sol.status = QpStatus::MaxIterations;
        sol.point = x;
        sol.objective = problem.objective(x);
        sol.iterations = iter;
        return sol;
      }
      const int k = static_cast<int>(active.size());
      const Vector& np = cons[p].normal;

      Vector z;
      Vector r(k);
      if (k == 0) {
        z = llt.solve(np);
      } else {
        Matrix N(d, k);
        for (int j = 0; j < k; ++j) N.col(j) = cons[active[j]].normal;
        const Matrix M = Linv * N;
        Eigen::HouseholderQR<Matrix> qr(M);
        const Matrix Q = qr.householderQ() * Matrix::Identity(d, d);
        const Matrix R = qr.matrixQR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
        const Matrix J = Linv.transpose() * Q;
        const Vector Jtn = J.transpose() * np;
        z = J.rightCols(d - k) * Jtn.tail(d - k);
        r = R.triangularView<Eigen::Upper>().solve(Jtn.head(k));
      }

      // Partial (dual) step length.
      double t1 = kInf;
      int drop = -1;
      for (int j = 0; j < k; ++j) {
        if (r(j) > 0.0) {
          const double ratio = u[j] / r(j);
          if (ratio < t1) {
            t1 = ratio;
            drop = j;
          }
        }
      }
      // Full (primal) step length.
      double t2 = kInf;
      const double zn = z.dot(np);
      if (z.norm() > 1e-14 * (1.0 + np.norm()) && zn > 0.0) {
        t2 = -(np.dot(x) - cons[p].rhs) / zn;
      }

      if (!std::isfinite(t1) && !std::isfinite(t2)) {
        sol.status = QpStatus::Infeasible;
        sol.point = x;
        sol.objective = problem.objective(x);
        sol.iterations = iter;
        sol.certificate.constraints.push_back(cons[p].ref);
        sol.certificate.weights.push_back(1.0 / cons[p].scale);
        for (int j = 0; j < k; ++j) {
          if (r(j) == 0.0) continue;
          sol.certificate.constraints.push_back(cons[active[j]].ref);
          sol.certificate.weights.push_back(-r(j) / cons[active[j]].scale);
        }
        return sol;
      }

      if (!std::isfinite(t2)) {
        // Dual step only; the dropped constraint makes room for p.
        for (int j = 0; j < k; ++j) u[j] -= t1 * r(j);
        up += t1;
        in_active[active[drop]] = 0;
        active.erase(active.begin() + drop);
        u.erase(u.begin() + drop);
        continue;
      }

      const double t = std::min(t1, t2);
      x += t * z;
      for (int j = 0; j < k; ++j) u[j] -= t * r(j);
      up += t;

      if (t2 <= t1) {
        active.push_back(p);
        u.push_back(up);
        in_active[p] = 1;
        break;
      }
      in_active[active[drop]] = 0;
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
}

double verify_kkt(const QpProblem& problem, const Vector& point, const QpMultipliers& mult) {
  const int d = problem.dim();
  if (point.size() != d || mult.rows.size() != static_cast<Eigen::Index>(problem.rows.size()) ||
      mult.lower.size() != d || mult.upper.size() != d)
    throw ConfigError("verify_kkt: dimension mismatch");

  Vector grad = problem.hessian * point + problem.linear;
  double worst = 0.0;
  auto account = [&](const ConstraintRef& ref, double lam) {
    const Affine a = as_affine(problem, ref);
    worst = std::max(worst, std::max(0.0, -lam));
    if (!std::isfinite(a.offset)) {
      // infinite bound: can never be active
      worst = std::max(worst, std::abs(lam));
      return;
    }
    const double g = a.grad.dot(point) + a.offset;
    const double size = std::max(1.0, std::abs(a.grad.dot(point)) + std::abs(a.offset));
    grad += lam * a.grad;
    worst = std::max(worst, std::max(0.0, g) / size);
    worst = std::max(worst, std::abs(lam * g) / std::max(1.0, std::abs(lam) * size));
  };
  for (int i = 0; i < static_cast<int>(problem.rows.size()); ++i)
    account({ConstraintRef::Kind::Row, i}, mult.rows(i));
  for (int i = 0; i < d; ++i) {
    account({ConstraintRef::Kind::Lower, i}, mult.lower(i));
    account({ConstraintRef::Kind::Upper, i}, mult.upper(i));
  }
  return std::max(worst, grad.lpNorm<Eigen::Infinity>());
}

double max_violation(const QpProblem& problem, const Vector& point) {
  double worst = 0.0;
  for (const auto& row : problem.rows) worst = std::max(worst, -row.slack(point));
  for (int i = 0; i < problem.dim(); ++i) {
    worst = std::max(worst, problem.lower(i) - point(i));
    worst = std::max(worst, point(i) - problem.upper(i));
  }
  return std::max(0.0, worst);
}

bool check_certificate(const QpProblem& problem, const InfeasibilityCertificate& cert, double tol) {
  if (cert.constraints.empty() || cert.constraints.size() != cert.weights.size()) return false;
  Vector grad = Vector::Zero(problem.dim());
  double offset = 0.0;
  double grad_scale = 0.0;
  for (std::size_t k = 0; k < cert.constraints.size(); ++k) {
    const double w = cert.weights[k];
    if (!(w >= 0.0)) return false;
    const Affine a = as_affine(problem, cert.constraints[k]);
    if (!std::isfinite(a.offset)) return false;
    grad += w * a.grad;
    offset += w * a.offset;
    grad_scale = std::max(grad_scale, w * a.grad.norm());
  }
  return grad.norm() <= tol * std::max(1.0, grad_scale) && offset > 0.0;
}

}  // namespace cbfsafe::qp
