#pragma once

// Quantum channel construction (Kraus, Stinespring), CPTP/unitality
// validation, natural representation and repeated application.

#include <vector>

#include "metachan/hs.hpp"
#include "metachan/types.hpp"

namespace metachan {

inline constexpr double kTpConstructionTol = 1e-8;
inline constexpr double kTpResidualTol = 1e-10;
inline constexpr double kChoiMinEigTol = -1e-10;

struct ValidityReport {
    bool trace_preserving = false;
    double tp_residual = 0.0;  // ||sum M^dag M - I||_max
    bool completely_positive = false;
    double choi_min_eigenvalue = 0.0;
    bool unital = false;
    double unitality_residual = 0.0;  // ||Phi(I) - I||_max

    bool all_ok() const { return trace_preserving && completely_positive && unital; }
};

class QuantumChannel {
  public:
    /// Build from Kraus operators; fails if the trace-preservation residual
    /// exceeds 1e-8.
    static QuantumChannel from_kraus(std::vector<Operator> kraus);

    /// Same, but skips the TP gate. Meant for feeding deliberately broken
    /// Kraus sets into validate().
    static QuantumChannel from_kraus_unchecked(std::vector<Operator> kraus);

    /// Stinespring form: Kraus M_a = <a|U|psi>, ancilla-first ordering.
    /// The ancilla state must be pure (mixed states are rejected).
    static QuantumChannel from_joint_unitary(const Operator& u, const Operator& ancilla_init,
                                             Eigen::Index dim_ancilla, Eigen::Index dim_system);

    Eigen::Index dim() const { return dim_; }
    const std::vector<Operator>& kraus() const { return kraus_; }
    const SuperOp& natural() const { return natural_; }

    /// Phi^m(rho) by repeated mat-vec on the natural representation; the
    /// result is re-symmetrized to Hermitian.
    Operator apply(const Operator& rho, long m = 1) const;

    /// Phi-hat^m as a matrix, by binary exponentiation.
    SuperOp power(long m) const;

  private:
    QuantumChannel(Eigen::Index d, std::vector<Operator> kraus, SuperOp natural)
        : dim_(d), kraus_(std::move(kraus)), natural_(std::move(natural)) {}

    Eigen::Index dim_;
    std::vector<Operator> kraus_;
    SuperOp natural_;
};

/// Choi matrix from a natural representation by index reshuffling:
/// C_{(i,j),(k,l)} = Phi-hat_{(i,k),(j,l)}.
Operator choi_from_natural(const SuperOp& phi_hat, Eigen::Index d);

ValidityReport validate(const QuantumChannel& ch);

/// Validation of a bare superoperator (used for conditional-map sums).
ValidityReport validate_natural(const SuperOp& phi_hat, Eigen::Index d);

/// Composition a after b: Kraus products {A_i B_j}, natural rep A-hat B-hat.
QuantumChannel compose(const QuantumChannel& a, const QuantumChannel& b);

}  // namespace metachan
