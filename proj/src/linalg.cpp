#include "cbrl/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

namespace cbrl {

namespace {

void require_square(const Matrix& m, const char* name) {
  if (m.rows() != m.cols()) {
    std::ostringstream ss;
    ss << name << " must be square, got " << m.rows() << "x" << m.cols();
    throw DimensionError(ss.str());
  }
}

void require_symmetric(const Matrix& m, const char* name, double tol = 1e-9) {
  require_square(m, name);
  const double skew = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (skew > tol * std::max(1.0, m.cwiseAbs().maxCoeff())) {
    std::ostringstream ss;
    ss << name << " must be symmetric (max asymmetry " << skew << ")";
    throw InputError(ss.str());
  }
}

// Index of the (i, j) entry, i <= j, in the packed upper triangle.
inline int packed_index(int i, int j, int n) { return i * n - i * (i - 1) / 2 + (j - i); }

}  // namespace

void require_finite(const Matrix& m, const char* name) {
  if (!m.allFinite()) {
    throw InputError(std::string(name) + " contains a non-finite entry");
  }
}

double spectral_abscissa(const Matrix& a) {
  require_square(a, "A");
  require_finite(a, "A");
  if (a.rows() == 0) throw DimensionError("A must be non-empty");
  Eigen::EigenSolver<Matrix> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

LyapunovOperator::LyapunovOperator(const Matrix& a) : n_(static_cast<int>(a.rows())) {
  require_square(a, "A");
  require_finite(a, "A");
  const double alpha = spectral_abscissa(a);
  if (alpha >= 0.0) {
    std::ostringstream ss;
    ss << "Lyapunov solve requires a stable A; spectral abscissa is " << alpha;
    throw SolverError(ss.str());
  }
  // Linearize A'X + XA over the packed symmetric coordinates of X.
  const int n = n_;
  const int nsym = n * (n + 1) / 2;
  Matrix sys = Matrix::Zero(nsym, nsym);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const int row = packed_index(i, j, n);
      // (A'X + XA)(i,j) = sum_k A(k,i) X(k,j) + X(i,k) A(k,j)
      for (int k = 0; k < n; ++k) {
        const int col_kj = packed_index(std::min(k, j), std::max(k, j), n);
        sys(row, col_kj) += a(k, i);
        const int col_ik = packed_index(std::min(i, k), std::max(i, k), n);
        sys(row, col_ik) += a(k, j);
      }
    }
  }
  lu_.compute(sys);
}

Matrix LyapunovOperator::solve(const Matrix& c) const {
  if (c.rows() != n_ || c.cols() != n_) {
    throw DimensionError("C dimension does not match the factored operator");
  }
  require_symmetric(c, "C");
  const int n = n_;
  Vector rhs(n * (n + 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) rhs(packed_index(i, j, n)) = -c(i, j);
  const Vector xp = lu_.solve(rhs);
  Matrix x(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) x(i, j) = x(j, i) = xp(packed_index(i, j, n));
  return x;
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& c) {
  if (c.rows() != a.rows() || c.cols() != a.cols()) {
    throw DimensionError("A and C must have matching dimensions");
  }
  require_finite(c, "C");
  LyapunovOperator op(a);
  Matrix x = op.solve(c);
  x = 0.5 * (x + x.transpose()).eval();
  const double resid = (a.transpose() * x + x * a + c).norm();
  if (resid > 1e-9 * std::max(1.0, c.norm())) {
    std::ostringstream ss;
    ss << "Lyapunov residual " << resid << " exceeds tolerance";
    throw SolverError(ss.str());
  }
  return x;
}

CareSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                        const Matrix& r) {
  return solve_care(CareProblem{a, b, q, r});
}

CareSolution solve_care(const CareProblem& prob) {
  const Matrix& a = prob.a;
  const Matrix& b = prob.b;
  const Matrix& q = prob.q;
  const Matrix& r = prob.r;

  const auto n = a.rows();
  const auto m = b.cols();
  if (a.cols() != n || b.rows() != n || q.rows() != n || q.cols() != n ||
      r.rows() != m || r.cols() != m) {
    throw DimensionError("solve_care: inconsistent A/B/Q/R dimensions");
  }
  require_finite(a, "A");
  require_finite(b, "B");
  require_symmetric(q, "Q");
  require_symmetric(r, "R");

  Eigen::LLT<Matrix> r_llt(r);
  if (r_llt.info() != Eigen::Success) {
    throw InputError("R must be symmetric positive definite");
  }
  const Matrix r_inv = r_llt.solve(Matrix::Identity(m, m));

  Matrix ham(2 * n, 2 * n);
  ham << a, -b * r_inv * b.transpose(), -q, -a.transpose();

  Eigen::EigenSolver<Matrix> es(ham, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success) {
    throw CareFailure("Hamiltonian eigendecomposition did not converge");
  }

  // Basis of the stable invariant subspace: eigenvectors with Re(lambda) < 0.
  std::vector<Eigen::Index> stable;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (es.eigenvalues()(i).real() < 0.0) stable.push_back(i);
  }
  if (static_cast<Eigen::Index>(stable.size()) != n) {
    std::ostringstream ss;
    ss << "no stabilizing solution: Hamiltonian has " << stable.size()
       << " strictly stable eigenvalues, expected " << n
       << " (is (A,B) stabilizable?)";
    throw CareFailure(ss.str());
  }
  Eigen::MatrixXcd basis(2 * n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    basis.col(i) = es.eigenvectors().col(stable[static_cast<std::size_t>(i)]);
  }

  const Eigen::MatrixXcd x_blk = basis.topRows(n);
  const Eigen::MatrixXcd y_blk = basis.bottomRows(n);
  Eigen::FullPivLU<Eigen::MatrixXcd> x_lu(x_blk);
  if (!x_lu.isInvertible()) {
    throw CareFailure("stable subspace is not a graph over the state block");
  }
  const Eigen::MatrixXcd p_c = y_blk * x_lu.inverse();

  const double max_imag = p_c.imag().cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, p_c.real().cwiseAbs().maxCoeff());
  if (max_imag > 1e-9 * scale) {
    std::ostringstream ss;
    ss << "solution has non-negligible imaginary part " << max_imag;
    throw CareFailure(ss.str());
  }

  CareSolution sol;
  sol.p = p_c.real();
  sol.p = (0.5 * (sol.p + sol.p.transpose())).eval();
  sol.k = r_inv * b.transpose() * sol.p;
  sol.residual_norm =
      (a.transpose() * sol.p + sol.p * a -
       sol.p * b * r_inv * b.transpose() * sol.p + q)
          .norm();

  if (sol.residual_norm > 1e-8 * std::max(1.0, q.norm())) {
    std::ostringstream ss;
    ss << "Riccati residual " << sol.residual_norm << " exceeds tolerance "
       << 1e-8 * std::max(1.0, q.norm());
    throw CareFailure(ss.str());
  }
  Eigen::SelfAdjointEigenSolver<Matrix> p_eig(sol.p);
  const double min_eig = p_eig.eigenvalues().minCoeff();
  const double max_eig = p_eig.eigenvalues().maxCoeff();
  if (min_eig < -1e-9 * std::max(1.0, max_eig)) {
    std::ostringstream ss;
    ss << "solution is not positive semidefinite (min eigenvalue " << min_eig << ")";
    throw CareFailure(ss.str());
  }
  const double cl_abscissa = spectral_abscissa(a - b * sol.k);
  if (cl_abscissa >= 0.0) {
    std::ostringstream ss;
    ss << "closed loop is not stable (spectral abscissa " << cl_abscissa << ")";
    throw CareFailure(ss.str());
  }
  return sol;
}

CareDerivative care_directional_derivative(const CareProblem& prob,
                                           const CareSolution& sol,
                                           const Matrix& da, const Matrix& db,
                                           const Matrix& dq, const Matrix& dr) {
  const auto n = prob.a.rows();
  const auto m = prob.b.cols();
  if (da.rows() != n || da.cols() != n || db.rows() != n || db.cols() != m ||
      dq.rows() != n || dq.cols() != n || dr.rows() != m || dr.cols() != m) {
    throw DimensionError("care_directional_derivative: perturbation dimensions mismatch");
  }
  const Matrix acl = prob.a - prob.b * sol.k;
  const Matrix z = sol.p * (da - db * sol.k);
  const Matrix rhs = z + z.transpose() + dq + sol.k.transpose() * dr * sol.k;
  CareDerivative d;
  d.dp = solve_lyapunov(acl, rhs);
  d.dk = prob.r.llt().solve(db.transpose() * sol.p + prob.b.transpose() * d.dp -
                            dr * sol.k);
  return d;
}

}  // namespace cbrl
