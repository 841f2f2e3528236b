#pragma once

// Dense complex matrix/vector kernels and the Hilbert-Schmidt (Liouville)
// space correspondence. Row-stacking convention throughout:
//   A = sum_ij a_ij |i><j|   <->   |A>> = sum_ij a_ij |ij>>,
// so a superoperator rho -> X rho Y becomes the matrix X (x) Y^T.

#include <vector>

#include "metachan/types.hpp"

namespace metachan {

inline constexpr double kHermitianTol = 1e-8;
inline constexpr double kPsdClampTol = 1e-10;

Operator identity(Eigen::Index d);
Operator pauli_x();
Operator pauli_y();
Operator pauli_z();

/// |i><i| on a d-dimensional space.
Operator basis_projector(Eigen::Index i, Eigen::Index d);

bool is_finite(const Operator& a);
bool is_hermitian(const Operator& a, double tol = kHermitianTol);
bool is_psd(const Operator& a, double tol = kHermitianTol);
bool is_unitary(const Operator& a, double tol = kHermitianTol);

/// Row-stacking vectorization, entry i*d+j <- a_ij.
HsVector vectorize(const Operator& a);
Operator devectorize(const HsVector& v);

/// Tr(A^dag B), the HS-space inner product.
Complex hs_inner(const Operator& a, const Operator& b);

/// X (x) Y^T, so that sandwich(X,Y) * |rho>> = |X rho Y>>.
SuperOp sandwich(const Operator& x, const Operator& y);

Operator kron(const Operator& a, const Operator& b);

enum class Subsystem { First, Second };

/// Reduced operator of one factor of a bipartite space ordered first (x) second.
Operator partial_trace(const Operator& rho_tot, Eigen::Index dim_first,
                       Eigen::Index dim_second, Subsystem keep);

/// Matrix exponential (scaling-and-squaring). Anti-Hermitian input gives a
/// unitary result to ~1e-12.
Operator matrix_exp(const Operator& a);

/// Hermitian PSD square root. Eigenvalues in [-clamp_tol, 0) are clamped to
/// zero; anything more negative is an error.
Operator psd_sqrt(const Operator& a, double clamp_tol = kPsdClampTol);

/// Uhlmann fidelity Tr sqrt(sqrt(sigma) rho sqrt(sigma)), in [0, 1].
double fidelity(const Operator& rho, const Operator& sigma);

/// (1/2) ||rho - sigma||_1 for Hermitian inputs.
double trace_distance(const Operator& rho, const Operator& sigma);

double max_abs(const Eigen::MatrixXcd& a);

Operator commutator(const Operator& a, const Operator& b);

/// vec(devectorize(v)^dag): the antilinear conjugation HS space inherits from
/// the operator adjoint.
HsVector hs_adjoint(const HsVector& v);

}  // namespace metachan
