#pragma once

// Brute-force QP oracle: tries every active set of at most d constraints,
// solves the equality-constrained KKT system and keeps the candidate that is
// primal and dual feasible.

#include "cbfsafe/qp.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace cbfsafe::testing {

struct OracleResult {
  bool feasible = false;
  Vector point;
  double objective = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

struct Halfspace {  // a'z <= b
  Vector a;
  double b;
};

inline std::vector<Halfspace> halfspaces(const qp::QpProblem& p) {
  std::vector<Halfspace> out;
  for (const ConstraintRow& r : p.rows) {
    if (r.sense == Sense::LessEqual) out.push_back({r.coeffs, r.bound});
    else out.push_back({-r.coeffs, -r.bound});
  }
  const int d = p.dim();
  for (int i = 0; i < d; ++i) {
    Vector e = Vector::Zero(d);
    e(i) = 1.0;
    if (std::isfinite(p.upper(i))) out.push_back({e, p.upper(i)});
    if (std::isfinite(p.lower(i))) out.push_back({-e, -p.lower(i)});
  }
  return out;
}

inline void subsets(int n, int k, int start, std::vector<int>& cur,
                    std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < n; ++i) {
    cur.push_back(i);
    subsets(n, k, i + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace detail

inline OracleResult enumerate_qp(const qp::QpProblem& p, double tol = 1e-9) {
  const int d = p.dim();
  const auto hs = detail::halfspaces(p);
  const int n = static_cast<int>(hs.size());
  OracleResult best;

  for (int k = 0; k <= std::min(d, n); ++k) {
    std::vector<std::vector<int>> sets;
    std::vector<int> cur;
    detail::subsets(n, k, 0, cur, sets);
    for (const auto& s : sets) {
      Matrix K = Matrix::Zero(d + k, d + k);
      Vector rhs(d + k);
      K.topLeftCorner(d, d) = p.hessian;
      rhs.head(d) = -p.linear;
      for (int j = 0; j < k; ++j) {
        K.block(0, d + j, d, 1) = hs[s[j]].a;
        K.block(d + j, 0, 1, d) = hs[s[j]].a.transpose();
        rhs(d + j) = hs[s[j]].b;
      }
      Eigen::FullPivLU<Matrix> lu(K);
      if (lu.rank() < d + k) continue;
      const Vector sol = lu.solve(rhs);
      const Vector z = sol.head(d);
      bool ok = true;
      for (int j = 0; j < k && ok; ++j) ok = sol(d + j) >= -tol;
      for (int i = 0; i < n && ok; ++i)
        ok = hs[i].a.dot(z) - hs[i].b <= tol * std::max(1.0, std::abs(hs[i].b));
      if (!ok) continue;
      const double f = p.objective(z);
      if (!best.feasible || f < best.objective) {
        best.feasible = true;
        best.point = z;
        best.objective = f;
      }
    }
  }
  return best;
}

}  // namespace cbfsafe::testing
