#pragma once

#include <Eigen/Dense>

#include "cbrl/errors.hpp"

namespace cbrl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws InputError if any entry of m is NaN/Inf.
void require_finite(const Matrix& m, const char* name);

// Max real part over the eigenvalues of a square matrix. Negative value
// certifies asymptotic stability of x' = Ax.
double spectral_abscissa(const Matrix& a);

// Solves A'X + XA + C = 0 for symmetric X, given a stable A and symmetric C.
// Direct solve of the n(n+1)/2 symmetry-reduced linear system; adequate for
// the small dense problems handled here.
Matrix solve_lyapunov(const Matrix& a, const Matrix& c);

// Factors the Lyapunov operator X -> A'X + XA once so many right-hand sides
// can be solved against the same A.
class LyapunovOperator {
 public:
  explicit LyapunovOperator(const Matrix& a);
  Matrix solve(const Matrix& c) const;  // A'X + XA + C = 0
  int dim() const { return n_; }

 private:
  int n_;
  Eigen::PartialPivLU<Matrix> lu_;
};

struct CareProblem {
  Matrix a;  // n x n
  Matrix b;  // n x m
  Matrix q;  // n x n, symmetric PSD
  Matrix r;  // m x m, symmetric PD
};

struct CareSolution {
  Matrix p;             // n x n symmetric PSD value Hessian
  Matrix k;             // m x n gain, k = r^-1 b' p
  double residual_norm; // Frobenius norm of the Riccati residual
};

// Stabilizing solution of a'p + pa - p b r^-1 b' p + q = 0 via the stable
// invariant subspace of the Hamiltonian matrix [[a, -b r^-1 b'], [-q, -a']].
// Eigenvector-based extraction; fine for the n <= 6 systems used here.
CareSolution solve_care(const CareProblem& prob);
CareSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q,
                        const Matrix& r);

struct CareDerivative {
  Matrix dp;  // n x n
  Matrix dk;  // m x n
};

// Directional derivative of the stabilizing solution under perturbations
// (da, db, dq, dr): with acl = a - b k and z = p (da - db k), dp solves
//   dp acl + acl' dp + (z + z' + dq + k' dr k) = 0,
// and dk = r^-1 (db' p + b' dp - dr k).
CareDerivative care_directional_derivative(const CareProblem& prob,
                                           const CareSolution& sol,
                                           const Matrix& da, const Matrix& db,
                                           const Matrix& dq, const Matrix& dr);

}  // namespace cbrl
