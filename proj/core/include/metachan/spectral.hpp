#pragma once

// Eigendecomposition of a channel's natural representation,
// biorthonormalization, eigenvalue classification, metastable-region
// detection and spectral propagation.

#include <optional>
#include <vector>

#include "metachan/hs.hpp"
#include "metachan/types.hpp"

namespace metachan {

inline constexpr double kEpsUnitDefault = 1e-10;
inline constexpr double kDiagCondLimit = 1e8;

/// Result of decomposing a d^2 x d^2 superoperator. Eigenvalues are sorted by
/// decreasing modulus (ties: decreasing real part, then increasing imaginary
/// part). The stored basis is canonicalized:
///   - conjugate eigenvalue pairs carry adjoint-related eigenvectors,
///   - simple real eigenvalues carry Hermitian representatives,
///   - in the eigenvalue-1 subspace exactly one basis vector carries trace
///     (normalized to trace 1); the rest are traceless.
/// Left vectors come from the inverse of the right-eigenvector matrix, so
/// <<L_i|R_j>> = delta_ij to machine precision whenever diagonalizable.
struct SpectralData {
    Eigen::Index d = 0;  // Hilbert-space dimension
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd right;  // columns |R_i>>
    Eigen::MatrixXcd left;   // columns |L_i>>
    double cond_eigvec = 0.0;
    bool diagonalizable = false;

    Eigen::Index size() const { return eigenvalues.size(); }
    HsVector right_vec(Eigen::Index i) const { return right.col(i); }
    HsVector left_vec(Eigen::Index i) const { return left.col(i); }
};

SpectralData spectral_decompose(const SuperOp& phi_hat);

enum class PointKind { Fixed, Rotating, Metastable, Decaying };

struct EigenClass {
    PointKind kind;
    double phase;  // arg(lambda)
};

struct MetastableRegion {
    int l;  // number of retained leading modes (1-based count)
    double mu_prime;         // 1/|ln|lambda_l||
    double mu_double_prime;  // 1/|ln|lambda_{l+1}||
    double gap_ratio;        // mu_prime / mu_double_prime
};

enum class RegionStatus { Found, NoDecayingEigenvalue, NoAdmissibleGap };

struct SpectrumClassification {
    std::vector<EigenClass> classes;
    int n_unit;  // eigenvalues on the unit circle (fixed + rotating)
    RegionStatus status;
    std::optional<MetastableRegion> region;
};

/// Fixed/rotating labels per eps_unit; truncation index l either supplied or
/// chosen to maximize |ln|lambda_{l+1}|| / |ln|lambda_l|| over n < l < d^2
/// with |lambda_l| > 0.5.
SpectrumClassification classify_spectrum(const SpectralData& sd, double eps_unit = kEpsUnitDefault,
                                         std::optional<int> l_override = {});

/// sum_i c_i lambda_i^m R_i with c_i = Tr(L_i^dag rho); truncate_to keeps the
/// leading l modes. Output is symmetrized to Hermitian.
Operator propagate(const SpectralData& sd, const Operator& rho, long m,
                   std::optional<int> truncate_to = {});

/// Real-basis modes for a conjugation-closed set of eigenvalue indices.
struct RealModeEntry {
    bool is_pair;
    Complex lambda;   // representative eigenvalue, Im >= 0
    HsVector mode1;   // R'_1 = R + R_conj (pair) or the Hermitian mode itself
    HsVector mode2;   // R'_2 = i (R - R_conj); empty for real eigenvalues
    HsVector left1;   // left vector of the representative
    int index1;
    int index2;  // -1 for real eigenvalues

    /// (|c|, delta) with c = <<L|rho>>.
    std::pair<double, double> phase_data(const Operator& rho) const;

    /// c'_1(m) = |c| cos(m phi + delta), c'_2(m) = |c| sin(m phi + delta);
    /// for a real eigenvalue c'_1 = c, c'_2 = 0. The |lambda|^m decay factor
    /// is not included (metastable-region form).
    std::pair<double, double> coefficients(const Operator& rho, long m) const;
};

struct RealModeSet {
    Eigen::Index d = 0;
    std::vector<RealModeEntry> entries;
};

RealModeSet real_modes(const SpectralData& sd, const std::vector<int>& indices);

}  // namespace metachan
