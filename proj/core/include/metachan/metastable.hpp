#pragma once

// Fixed-point space computation and its commutant characterization, extreme
// metastable states and dual observables, and the metastable-manifold
// projector.

#include <optional>
#include <vector>

#include "metachan/channel.hpp"
#include "metachan/spectral.hpp"

namespace metachan {

struct FixedPointStructure {
    /// Hermitian basis of the fixed-point space; the first element carries
    /// trace 1 when the space holds any trace, the rest are traceless.
    std::vector<Operator> basis;
    /// Minimal projections {Pi_j} with sum Pi_j = I (commutant route only).
    std::optional<std::vector<Operator>> projections;
    std::optional<std::vector<int>> block_dims;
    /// Unitary whose columns block-diagonalize B and C (commutant route only).
    std::optional<Operator> transform;
};

/// Span of the eigenvalue-1 right eigenspace of a unital channel, verified to
/// commute with every Kraus operator.
FixedPointStructure fixed_point_space(const SpectralData& sd, const QuantumChannel& ch,
                                      double eps_unit = kEpsUnitDefault);

/// Commutant {X : [X,B] = [X,C] = 0} via the joint kernel of the two
/// commutator maps, with minimal projections extracted from a generic
/// Hermitian commutant element.
FixedPointStructure commutant_projections(const Operator& b, const Operator& c);

struct MetastableManifold {
    std::vector<Operator> ems;    // extreme metastable states rho_v
    std::vector<Operator> duals;  // observables P_v, <<P_v|rho_u>> = delta
    double h = 0.0;               // normalization sqrt(<<L2|L2>><<R2|R2>>)
    double c2_max = 0.0;
    double c2_min = 0.0;
    double dual_min_eigenvalue = 0.0;
    bool approximate = false;  // midpoint-propagated candidates (d > 2)
};

/// Exact qubit construction from the one-dimensional metastable manifold:
/// rho_{1,2} = I/2 + (c2^{M,m}/h) R2, P_v from the L2 spectral data.
MetastableManifold ems_qubit(const SpectralData& sd);

/// Same construction from directly injected Hermitian modes with
/// <<L2|R2>> = 1 (test hook and textbook-example entry point).
MetastableManifold ems_qubit_from_modes(const Operator& r2, const Operator& l2);

/// Midpoint-propagated EMS candidates Phi^{m*}(seed) at
/// m* = round(sqrt(mu' mu'')) -- the d > 2 approximation.
std::vector<Operator> ems_candidates(const QuantumChannel& ch, const MetastableRegion& region,
                                     const std::vector<Operator>& seeds);

/// sum_v |rho_v>><<P_v|, idempotent and trace preserving on states.
SuperOp mm_projector(const MetastableManifold& mm);

/// (c_1..c_l) with c_i = Tr(L_i^dag rho).
Eigen::VectorXcd metastable_coefficients(const SpectralData& sd, const Operator& rho, int l);

}  // namespace metachan
