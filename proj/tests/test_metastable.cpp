#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "metachan/metastable.hpp"
#include "metachan/models.hpp"
#include "test_support.hpp"

using namespace metachan;
using test_support::matrix_diff;

namespace {

/// Residual of projecting `target` onto the span of `basis` (HS inner).
double span_residual(const std::vector<Operator>& basis, const Operator& target) {
    HsVector v = vectorize(target);
    for (const auto& b : basis) {
        const HsVector bv = vectorize(b).normalized();
        v -= bv.dot(v) * bv;
    }
    return v.norm();
}

}  // namespace

TEST_CASE("fixed_point_space") {
    SUBCASE("gamma = 0 basis spans the sigma_z projectors") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const FixedPointStructure fps = fixed_point_space(sd, rim.channel);
        REQUIRE(fps.basis.size() == 2);
        CHECK(span_residual(fps.basis, basis_projector(0, 2)) < 1e-8);
        CHECK(span_residual(fps.basis, basis_projector(1, 2)) < 1e-8);
        for (const auto& rho : fps.basis)
            for (const auto& m : rim.channel.kraus())
                CHECK(max_abs(commutator(rho, m)) < 1e-8);
    }

    SUBCASE("gamma = 0.05 has the single fixed point I/2") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const FixedPointStructure fps = fixed_point_space(sd, rim.channel);
        REQUIRE(fps.basis.size() == 1);
        CHECK(matrix_diff(fps.basis[0], identity(2) / 2.0) < 1e-8);
    }

    SUBCASE("identity channel fixes the whole operator space") {
        const QuantumChannel id_ch = QuantumChannel::from_kraus({identity(2)});
        const SpectralData sd = spectral_decompose(id_ch.natural());
        const FixedPointStructure fps = fixed_point_space(sd, id_ch);
        CHECK(fps.basis.size() == 4);
    }

    SUBCASE("basis elements satisfy the channel fixed-point equation") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        for (const auto& rho : fixed_point_space(sd, rim.channel).basis)
            CHECK(matrix_diff(rim.channel.apply(rho, 1), rho) < 1e-8);
    }
}

TEST_CASE("commutant_projections") {
    SUBCASE("B = C = sigma_z gives the two rank-one projectors") {
        const FixedPointStructure fps = commutant_projections(pauli_z(), pauli_z());
        REQUIRE(fps.projections.has_value());
        REQUIRE(fps.projections->size() == 2);
        CHECK(*fps.block_dims == std::vector<int>{1, 1});
        const Operator sum = (*fps.projections)[0] + (*fps.projections)[1];
        CHECK(matrix_diff(sum, identity(2)) < 1e-8);
        for (const auto& pi : *fps.projections) {
            CHECK(matrix_diff(pi * pi, pi) < 1e-8);
            CHECK(std::min(matrix_diff(pi, basis_projector(0, 2)),
                           matrix_diff(pi, basis_projector(1, 2))) < 1e-8);
        }
    }

    SUBCASE("B = sigma_z, C = sigma_x leaves only the identity") {
        const FixedPointStructure fps = commutant_projections(pauli_z(), pauli_x());
        REQUIRE(fps.projections->size() == 1);
        CHECK(matrix_diff((*fps.projections)[0], identity(2)) < 1e-8);
        CHECK(fps.basis.size() == 1);
    }

    SUBCASE("block-diagonal d = 4 example splits into r = 3 blocks") {
        // B = sigma_z (+) sigma_z, C = sigma_x (+) I2. Block 1 is irreducible;
        // block 2 commutes internally and splits into two rank-one pieces.
        Operator b = Operator::Zero(4, 4), c = Operator::Zero(4, 4);
        b.topLeftCorner(2, 2) = pauli_z();
        b.bottomRightCorner(2, 2) = pauli_z();
        c.topLeftCorner(2, 2) = pauli_x();
        c.bottomRightCorner(2, 2) = identity(2);
        const FixedPointStructure fps = commutant_projections(b, c);
        REQUIRE(fps.projections->size() == 3);

        std::vector<int> dims = *fps.block_dims;
        std::sort(dims.begin(), dims.end());
        CHECK(dims == std::vector<int>{1, 1, 2});

        Operator block1 = Operator::Zero(4, 4);
        block1(0, 0) = block1(1, 1) = 1.0;
        bool found_block1 = false, found_e2 = false, found_e3 = false;
        for (const auto& pi : *fps.projections) {
            if (matrix_diff(pi, block1) < 1e-7) found_block1 = true;
            if (matrix_diff(pi, basis_projector(2, 4)) < 1e-7) found_e2 = true;
            if (matrix_diff(pi, basis_projector(3, 4)) < 1e-7) found_e3 = true;
        }
        CHECK(found_block1);
        CHECK(found_e2);
        CHECK(found_e3);
    }

    SUBCASE("random commuting pairs give d rank-one projections in the joint eigenbasis") {
        std::mt19937 gen(41);
        for (const int d : {2, 3, 4}) {
            const auto [b, c] = test_support::random_commuting_pair(d, gen);
            const FixedPointStructure fps = commutant_projections(b, c);
            REQUIRE(fps.projections->size() == static_cast<std::size_t>(d));
            Operator sum = Operator::Zero(d, d);
            for (const auto& pi : *fps.projections) {
                CHECK(std::llround(pi.trace().real()) == 1);
                CHECK(matrix_diff(pi * pi, pi) < 1e-8);
                CHECK(max_abs(commutator(pi, b)) < 1e-8);
                CHECK(max_abs(commutator(pi, c)) < 1e-8);
                sum += pi;
            }
            CHECK(matrix_diff(sum, identity(d)) < 1e-8);
        }
    }

    SUBCASE("transform block-diagonalizes B and C") {
        Operator b = Operator::Zero(4, 4), c = Operator::Zero(4, 4);
        b.topLeftCorner(2, 2) = pauli_z();
        b.bottomRightCorner(2, 2) = pauli_z();
        c.topLeftCorner(2, 2) = pauli_x();
        c.bottomRightCorner(2, 2) = identity(2);
        const FixedPointStructure fps = commutant_projections(b, c);
        REQUIRE(fps.transform.has_value());
        const Operator w = *fps.transform;
        CHECK(is_unitary(w, 1e-8));
        // Off-block entries of W^dag B W and W^dag C W vanish.
        const Operator bb = w.adjoint() * b * w;
        const Operator cc = w.adjoint() * c * w;
        Eigen::Index start = 0;
        for (const int dim : *fps.block_dims) {
            for (Eigen::Index i = start; i < start + dim; ++i)
                for (Eigen::Index j = 0; j < 4; ++j) {
                    if (j >= start && j < start + dim) continue;
                    CHECK(std::abs(bb(i, j)) < 1e-7);
                    CHECK(std::abs(cc(i, j)) < 1e-7);
                }
            start += dim;
        }
    }

    CHECK_THROWS_AS(commutant_projections(pauli_z(), Complex(0, 1) * pauli_z()),
                    PreconditionError);
}

TEST_CASE("ems_qubit") {
    SUBCASE("projector-limit modes reproduce the projector EMSs exactly") {
        const Operator r2 = pauli_z() / 2.0;  // devec((|00>> - |11>>)/2)
        const Operator l2 = pauli_z();        // devec(|00>> - |11>>)
        const MetastableManifold mm = ems_qubit_from_modes(r2, l2);
        CHECK(mm.h == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(mm.c2_max == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(mm.c2_min == doctest::Approx(-1.0).epsilon(1e-12));
        CHECK(matrix_diff(mm.ems[0], basis_projector(0, 2)) < 1e-12);
        CHECK(matrix_diff(mm.ems[1], basis_projector(1, 2)) < 1e-12);
        CHECK(matrix_diff(mm.duals[0], basis_projector(0, 2)) < 1e-12);
        CHECK(matrix_diff(mm.duals[1], basis_projector(1, 2)) < 1e-12);
    }

    SUBCASE("gamma = 0.05 EMSs sit near the sigma_z eigenstates") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const MetastableManifold mm = ems_qubit(spectral_decompose(rim.channel.natural()));
        const double d00 = trace_distance(mm.ems[0], basis_projector(0, 2));
        const double d01 = trace_distance(mm.ems[0], basis_projector(1, 2));
        const double near0 = std::min(d00, d01);
        const double near1 = d00 < d01 ? trace_distance(mm.ems[1], basis_projector(1, 2))
                                       : trace_distance(mm.ems[1], basis_projector(0, 2));
        CHECK(near0 < 0.1);
        CHECK(near1 < 0.1);

        // Purity and dual structure.
        for (const auto& rho : mm.ems)
            CHECK((rho * rho).trace().real() == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(matrix_diff(mm.duals[0] + mm.duals[1], identity(2)) < 1e-8);
        for (std::size_t v = 0; v < 2; ++v)
            for (std::size_t u = 0; u < 2; ++u)
                CHECK(std::abs(hs_inner(mm.duals[v], mm.ems[u]) - (v == u ? 1.0 : 0.0)) < 1e-6);
        // The exact dual negativity is -(h-1)/2 for a traceless symmetric L2.
        CHECK(mm.dual_min_eigenvalue ==
              doctest::Approx(-(mm.h - 1.0) / 2.0).epsilon(1e-6));
    }

    SUBCASE("gauge invariance under R2 -> 2 R2, L2 -> L2/2") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const Operator r2 = devectorize(sd.right.col(1));
        const Operator l2 = devectorize(sd.left.col(1));
        const MetastableManifold a = ems_qubit_from_modes(r2, l2);
        const MetastableManifold b = ems_qubit_from_modes(2.0 * r2, l2 / 2.0);
        for (int i : {0, 1}) {
            CHECK(matrix_diff(a.ems[i], b.ems[i]) < 1e-10);
            CHECK(matrix_diff(a.duals[i], b.duals[i]) < 1e-10);
        }
    }

    SUBCASE("preconditions") {
        const RimChannel rim0 = rim_channel(test_support::rim_spec_sz_sx(0.0));
        CHECK_THROWS_AS(ems_qubit(spectral_decompose(rim0.channel.natural())),
                        PreconditionError);  // two fixed points
    }
}

TEST_CASE("ems_candidates") {
    SUBCASE("gamma = 0 seeds are fixed points and come back unchanged") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
        const MetastableRegion dummy{2, 100.0, 1.0, 100.0};
        const std::vector<Operator> seeds{basis_projector(0, 2), basis_projector(1, 2)};
        const auto out = ems_candidates(rim.channel, dummy, seeds);
        CHECK(matrix_diff(out[0], seeds[0]) < 1e-10);
        CHECK(matrix_diff(out[1], seeds[1]) < 1e-10);
    }

    SUBCASE("gamma = 0.05 candidates agree with the exact qubit construction") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const auto cls = classify_spectrum(sd);
        REQUIRE(cls.status == RegionStatus::Found);
        const MetastableManifold mm = ems_qubit(sd);
        const auto candidates = ems_candidates(
            rim.channel, *cls.region, {basis_projector(0, 2), basis_projector(1, 2)});
        for (const auto& cand : candidates) {
            double best = 1.0;
            for (const auto& rho : mm.ems) best = std::min(best, trace_distance(cand, rho));
            CHECK(best < 0.05);
        }
    }
}

TEST_CASE("mm_projector") {
    SUBCASE("projector-limit manifold gives the dephasing projector") {
        const MetastableManifold mm = ems_qubit_from_modes(pauli_z() / 2.0, pauli_z());
        const SuperOp p = mm_projector(mm);
        SuperOp oracle = SuperOp::Zero(4, 4);
        oracle(0, 0) = oracle(3, 3) = 1.0;  // |00>><<00| + |11>><<11|
        CHECK(matrix_diff(p, oracle) < 1e-12);

        // Applied to |+><+| it returns I/2 (p1 = p2 = 1/2).
        Operator plus(2, 2);
        plus << 0.5, 0.5, 0.5, 0.5;
        CHECK(matrix_diff(devectorize(p * vectorize(plus)), identity(2) / 2.0) < 1e-12);
    }

    SUBCASE("idempotent and fixes each EMS") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const MetastableManifold mm = ems_qubit(spectral_decompose(rim.channel.natural()));
        const SuperOp p = mm_projector(mm);
        CHECK(matrix_diff(p * p, p) < 1e-6);
        for (const auto& rho : mm.ems)
            CHECK((p * vectorize(rho) - vectorize(rho)).cwiseAbs().maxCoeff() < 1e-8);
        // <<I| is a left fixed vector (trace preservation on states).
        const HsVector id_vec = vectorize(identity(2));
        CHECK((p.adjoint() * id_vec - id_vec).cwiseAbs().maxCoeff() < 1e-8);
    }

    SUBCASE("approximation is best inside the metastable window") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const auto cls = classify_spectrum(sd);
        const MetastableManifold mm = ems_qubit(sd);
        const SuperOp p = mm_projector(mm);
        const long m_star =
            std::llround(std::sqrt(cls.region->mu_prime * cls.region->mu_double_prime));
        const long m_late = std::llround(10.0 * cls.region->mu_prime);
        const double err_mid = max_abs(rim.channel.power(m_star) - p);
        const double err_late = max_abs(rim.channel.power(m_late) - p);
        CHECK(err_mid < err_late);
    }
}

TEST_CASE("metastable_coefficients") {
    const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
    const SpectralData sd = spectral_decompose(rim.channel.natural());

    SUBCASE("maximally mixed state loads only the fixed point") {
        const auto c = metastable_coefficients(sd, identity(2) / 2.0, 4);
        CHECK(std::abs(c(0) - 1.0) < 1e-10);
        for (int i = 1; i < 4; ++i) CHECK(std::abs(c(i)) < 1e-10);
    }

    SUBCASE("projector-limit gauge: rho = |0><0| has c2 = c2^max = 1") {
        // In the textbook gauge L2 = sigma_z, R2 = sigma_z/2.
        const Operator l2 = pauli_z();
        const Complex c2 = hs_inner(l2, basis_projector(0, 2));
        CHECK(std::abs(c2 - 1.0) < 1e-12);
        const MetastableManifold mm = ems_qubit_from_modes(pauli_z() / 2.0, l2);
        CHECK(c2.real() == doctest::Approx(mm.c2_max).epsilon(1e-12));

        // The decomposition of the dephasing channel uses a unit-norm gauge;
        // the gauge-invariant product c2 R2 must match sigma_z/2.
        const double s = std::sqrt(0.5);
        const QuantumChannel deph =
            QuantumChannel::from_kraus({s * identity(2), s * pauli_z()});
        const SpectralData dsd = spectral_decompose(deph.natural());
        const auto c = metastable_coefficients(dsd, basis_projector(0, 2), 4);
        CHECK(std::abs(c(0) - 1.0) < 1e-10);
        CHECK(matrix_diff(c(1) * devectorize(dsd.right.col(1)), pauli_z() / 2.0) < 1e-10);
    }

    SUBCASE("full-spectrum completeness reconstructs rho") {
        std::mt19937 gen(42);
        const Operator rho = test_support::random_density(2, gen);
        const auto c = metastable_coefficients(sd, rho, 4);
        Operator rebuilt = Operator::Zero(2, 2);
        for (int i = 0; i < 4; ++i) rebuilt += c(i) * devectorize(sd.right.col(i));
        CHECK(matrix_diff(rebuilt, rho) < 1e-8);

        // Trace resolution: sum_i c_i Tr(R_i) = Tr(rho) = 1.
        Complex total = 0.0;
        for (int i = 0; i < 4; ++i) total += c(i) * devectorize(sd.right.col(i)).trace();
        CHECK(std::abs(total - 1.0) < 1e-8);
    }

    CHECK_THROWS_AS(metastable_coefficients(sd, pauli_x(), 2), PreconditionError);
    CHECK_THROWS_AS(metastable_coefficients(sd, identity(2) / 2.0, 5), PreconditionError);
}
