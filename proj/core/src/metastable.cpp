#include "metachan/metastable.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "metachan/rng.hpp"

namespace metachan {

namespace {

/// Orthonormal Hermitian spanning set extracted from a list of HS vectors
/// whose span is conjugation-invariant. Candidates (v + S v)/2, (v - S v)/2i
/// are filtered by Gram-Schmidt with a rank threshold.
std::vector<HsVector> hermitian_span(const std::vector<HsVector>& vectors,
                                     std::size_t expected_count) {
    std::vector<HsVector> basis;
    auto push = [&](HsVector cand) {
        for (const auto& b : basis) cand -= b.dot(cand).real() * b;
        if (cand.norm() > 1e-7) basis.push_back(cand.normalized());
    };
    for (const auto& v : vectors) {
        const HsVector sv = hs_adjoint(v);
        push((v + sv) / 2.0);
        push((v - sv) / Complex(0, 2));
        if (basis.size() == expected_count) break;
    }
    return basis;
}

/// Rotate a Hermitian orthonormal basis so exactly one element carries trace
/// (normalized to trace 1) and the rest are traceless.
void pin_trace_direction(std::vector<HsVector>& basis, Eigen::Index d) {
    Eigen::VectorXd traces(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t j = 0; j < basis.size(); ++j)
        traces(static_cast<Eigen::Index>(j)) = devectorize(basis[j]).trace().real();
    const double tnorm2 = traces.squaredNorm();
    if (tnorm2 < 1e-16) return;
    HsVector g = HsVector::Zero(d * d);
    for (std::size_t j = 0; j < basis.size(); ++j)
        g += traces(static_cast<Eigen::Index>(j)) * basis[j];
    basis[0] = g / tnorm2;
    for (std::size_t j = 1; j < basis.size(); ++j) {
        const double tr = devectorize(basis[j]).trace().real();
        basis[j] -= tr * basis[0];
    }
    for (std::size_t a = 1; a < basis.size(); ++a) {
        for (std::size_t b = 1; b < a; ++b)
            basis[a] -= basis[b].dot(basis[a]).real() * basis[b];
        basis[a].normalize();
    }
}

MetastableManifold build_qubit_manifold(Operator r2, Operator l2) {
    // Hermitian representatives with the sign pinned so <<L2|R2>> = 1.
    r2 = ((r2 + r2.adjoint()) / 2.0).eval();
    l2 = ((l2 + l2.adjoint()) / 2.0).eval();
    const double pairing = hs_inner(l2, r2).real();
    if (std::abs(pairing) < 0.5)
        throw NumericalError("ems_qubit: Hermitian representatives lost biorthonormality");
    l2 /= pairing;

    Eigen::SelfAdjointEigenSolver<Operator> es(l2);
    const double c2m = es.eigenvalues()(0);
    const double c2M = es.eigenvalues()(1);
    const double dc = c2M - c2m;
    if (dc < 1e-12) throw PreconditionError("ems_qubit: degenerate L2 spectrum");

    const double h = std::sqrt(hs_inner(l2, l2).real() * hs_inner(r2, r2).real());
    const Operator eye = identity(2);

    MetastableManifold mm;
    mm.h = h;
    mm.c2_max = c2M;
    mm.c2_min = c2m;
    mm.ems = {eye / 2.0 + (c2M / h) * r2, eye / 2.0 + (c2m / h) * r2};
    mm.duals = {(h * l2 - c2m * eye) / dc, (-h * l2 + c2M * eye) / dc};

    double min_eig = 0.0;
    for (const auto& p : mm.duals) {
        Eigen::SelfAdjointEigenSolver<Operator> pe(p, Eigen::EigenvaluesOnly);
        min_eig = std::min(min_eig, pe.eigenvalues().minCoeff());
    }
    mm.dual_min_eigenvalue = min_eig;
    // P_v >= 0 holds only in the strict metastable limit; Cauchy-Schwarz on
    // <<L2|R2>> = 1 forces h >= 1 and the exact negativity is -(h-1)/2 for a
    // traceless-symmetric L2, so the tolerance must scale with h.
    if (min_eig < -(0.75 * (h - 1.0) + 1e-8))
        throw NumericalError("ems_qubit: dual observables more negative than h admits");

    for (const auto& rho : mm.ems) {
        const double purity = (rho * rho).trace().real();
        if (std::abs(purity - 1.0) > 1e-4)
            throw NumericalError("ems_qubit: EMS purity deviates from 1 beyond tolerance");
    }
    for (std::size_t v = 0; v < 2; ++v)
        for (std::size_t u = 0; u < 2; ++u) {
            const double want = v == u ? 1.0 : 0.0;
            if (std::abs(hs_inner(mm.duals[v], mm.ems[u]) - want) > 1e-6)
                throw NumericalError("ems_qubit: <<P_v|rho_u>> != delta_vu");
        }
    return mm;
}

}  // namespace

FixedPointStructure fixed_point_space(const SpectralData& sd, const QuantumChannel& ch,
                                      double eps_unit) {
    const HsVector id_vec = vectorize(identity(sd.d));
    if ((ch.natural() * id_vec - id_vec).cwiseAbs().maxCoeff() > 1e-8)
        throw PreconditionError("fixed_point_space: channel is not unital");

    std::vector<HsVector> fixed;
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (std::abs(sd.eigenvalues(i) - 1.0) <= eps_unit) fixed.push_back(sd.right.col(i));
    if (fixed.empty())
        throw PreconditionError("fixed_point_space: no eigenvalue-1 subspace found");

    std::vector<HsVector> basis = hermitian_span(fixed, fixed.size());
    if (basis.size() != fixed.size())
        throw NumericalError("fixed_point_space: Hermitian basis extraction lost rank");
    pin_trace_direction(basis, sd.d);

    FixedPointStructure out;
    for (const auto& v : basis) {
        const Operator op = devectorize(v);
        for (const auto& m : ch.kraus())
            if (max_abs(commutator(op, m)) > 1e-8)
                throw NumericalError(
                    "fixed_point_space: basis element fails to commute with a Kraus "
                    "operator (non-unital input or spectral misclassification)");
        out.basis.push_back(op);
    }
    return out;
}

FixedPointStructure commutant_projections(const Operator& b, const Operator& c) {
    if (b.rows() != b.cols() || c.rows() != c.cols() || b.rows() != c.rows())
        throw DimensionError("commutant_projections: B and C must be square, equal dims");
    if (!is_hermitian(b, 1e-10) || !is_hermitian(c, 1e-10))
        throw PreconditionError("commutant_projections: B and C must be Hermitian");
    const Eigen::Index d = b.rows();
    const Eigen::Index n = d * d;

    // Joint kernel of the commutator maps ad_B, ad_C on HS space:
    //   vec([X, A]) = (I (x) A^T - A (x) I) vec(X).
    Eigen::MatrixXcd k(2 * n, n);
    k.topRows(n) = kron(identity(d), b.transpose()) - kron(b, identity(d));
    k.bottomRows(n) = kron(identity(d), c.transpose()) - kron(c, identity(d));

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(k, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = 1e-10 * std::max(1.0, sv(0));
    std::vector<HsVector> kernel;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) <= cutoff) kernel.push_back(svd.matrixV().col(i));
    if (kernel.empty())
        throw NumericalError("commutant_projections: empty kernel (commutant must contain I)");

    std::vector<HsVector> herm = hermitian_span(kernel, kernel.size());
    if (herm.size() != kernel.size())
        throw NumericalError("commutant_projections: Hermitian kernel basis lost rank");

    // Minimal projections from a generic Hermitian commutant element; retry
    // with fresh weights if two independent draws disagree on the cluster
    // count (degenerate spectrum of the draw).
    auto project_clusters = [&](std::uint64_t attempt)
        -> std::optional<std::pair<std::vector<Operator>, Operator>> {
        PhiloxStream rng(0x636f6d6d7574616eULL, attempt);
        Operator g = Operator::Zero(d, d);
        for (const auto& hvec : herm)
            g += (2.0 * rng.next_double() - 1.0) * devectorize(hvec);
        Eigen::SelfAdjointEigenSolver<Operator> es(((g + g.adjoint()) / 2.0).eval());
        const Eigen::VectorXd w = es.eigenvalues();
        const double spread = std::max(1.0, w(d - 1) - w(0));

        std::vector<Operator> projections;
        Operator transform(d, d);
        Eigen::Index start = 0, placed = 0;
        for (Eigen::Index i = 1; i <= d; ++i) {
            if (i < d && w(i) - w(i - 1) <= 1e-7 * spread) continue;
            Operator pi = Operator::Zero(d, d);
            for (Eigen::Index j = start; j < i; ++j) {
                pi += es.eigenvectors().col(j) * es.eigenvectors().col(j).adjoint();
                transform.col(placed++) = es.eigenvectors().col(j);
            }
            if (max_abs(commutator(pi, b)) > 1e-8 || max_abs(commutator(pi, c)) > 1e-8)
                return std::nullopt;
            projections.push_back(std::move(pi));
            start = i;
        }
        return std::make_pair(std::move(projections), std::move(transform));
    };

    std::optional<std::pair<std::vector<Operator>, Operator>> result;
    for (std::uint64_t attempt = 0; attempt < 8; ++attempt) {
        auto first = project_clusters(2 * attempt);
        auto second = project_clusters(2 * attempt + 1);
        if (first && second && first->first.size() == second->first.size()) {
            result = std::move(first);
            break;
        }
    }
    if (!result)
        throw NumericalError("commutant_projections: could not stabilize minimal projections");

    FixedPointStructure out;
    pin_trace_direction(herm, d);
    for (const auto& v : herm) out.basis.push_back(devectorize(v));

    std::vector<int> dims;
    for (const auto& pi : result->first)
        dims.push_back(static_cast<int>(std::llround(pi.trace().real())));
    out.projections = std::move(result->first);
    out.block_dims = std::move(dims);
    out.transform = std::move(result->second);
    return out;
}

MetastableManifold ems_qubit(const SpectralData& sd) {
    if (sd.d != 2) throw PreconditionError("ems_qubit: construction is qubit-only");
    if (!sd.diagonalizable) throw PreconditionError("ems_qubit: non-diagonalizable channel");

    int fixed_count = 0;
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (std::abs(sd.eigenvalues(i) - 1.0) <= kEpsUnitDefault) ++fixed_count;
    if (fixed_count != 1)
        throw PreconditionError("ems_qubit: exactly one fixed point required, found " +
                                std::to_string(fixed_count));
    if (max_abs(devectorize(sd.right.col(0)) - identity(2) / 2.0) > 1e-6)
        throw PreconditionError("ems_qubit: fixed point is not I/2 (channel not unital?)");
    const Complex lam2 = sd.eigenvalues(1);
    if (std::abs(lam2.imag()) > 1e-10)
        throw PreconditionError("ems_qubit: metastable eigenvalue is complex");

    return build_qubit_manifold(devectorize(sd.right.col(1)), devectorize(sd.left.col(1)));
}

MetastableManifold ems_qubit_from_modes(const Operator& r2, const Operator& l2) {
    if (r2.rows() != 2 || l2.rows() != 2)
        throw PreconditionError("ems_qubit_from_modes: qubit modes required");
    return build_qubit_manifold(r2, l2);
}

std::vector<Operator> ems_candidates(const QuantumChannel& ch, const MetastableRegion& region,
                                     const std::vector<Operator>& seeds) {
    const long m_star =
        std::max<long>(1, std::llround(std::sqrt(region.mu_prime * region.mu_double_prime)));
    std::vector<Operator> out;
    out.reserve(seeds.size());
    for (const auto& seed : seeds) out.push_back(ch.apply(seed, m_star));
    return out;
}

SuperOp mm_projector(const MetastableManifold& mm) {
    if (mm.ems.empty() || mm.ems.size() != mm.duals.size())
        throw PreconditionError("mm_projector: malformed manifold");
    const Eigen::Index d = mm.ems.front().rows();
    SuperOp p = SuperOp::Zero(d * d, d * d);
    for (std::size_t v = 0; v < mm.ems.size(); ++v)
        p += vectorize(mm.ems[v]) * vectorize(mm.duals[v]).adjoint();
    return p;
}

Eigen::VectorXcd metastable_coefficients(const SpectralData& sd, const Operator& rho, int l) {
    if (std::abs(rho.trace().real() - 1.0) > 1e-8 || std::abs(rho.trace().imag()) > 1e-8)
        throw PreconditionError("metastable_coefficients: state must have unit trace");
    if (l < 1 || l > sd.size())
        throw PreconditionError("metastable_coefficients: index out of range");
    const HsVector rho_vec = vectorize(rho);
    Eigen::VectorXcd c(l);
    for (int i = 0; i < l; ++i) c(i) = sd.left.col(i).dot(rho_vec);
    return c;
}

}  // namespace metachan
