#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include "metachan/spectral.hpp"
#include "metachan/models.hpp"
#include "test_support.hpp"

using namespace metachan;
using test_support::matrix_diff;

namespace {

/// Eigenvalue-1 multiplicity through an independent route: the rank drop of
/// Phi-hat - I measured by SVD.
int unit_multiplicity_by_svd(const SuperOp& phi_hat) {
    const SuperOp shifted = phi_hat - SuperOp::Identity(phi_hat.rows(), phi_hat.cols());
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(shifted);
    int count = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) < 1e-8) ++count;
    return count;
}

/// Hermiticity-preserving qubit superoperator with spectrum
/// {1, s_z, s e^{+i theta}, s e^{-i theta}} built in the Pauli basis.
SuperOp rotating_pair_superop(double s, double theta, double s_z) {
    const HsVector p0 = vectorize(identity(2)) / std::sqrt(2.0);
    const HsVector px = vectorize(pauli_x()) / std::sqrt(2.0);
    const HsVector py = vectorize(pauli_y()) / std::sqrt(2.0);
    const HsVector pz = vectorize(pauli_z()) / std::sqrt(2.0);
    SuperOp phi = p0 * p0.adjoint() + s_z * pz * pz.adjoint();
    phi += s * std::cos(theta) * (px * px.adjoint() + py * py.adjoint());
    phi += s * std::sin(theta) * (py * px.adjoint() - px * py.adjoint());
    return phi;
}

}  // namespace

TEST_CASE("identity channel decomposes trivially") {
    const SpectralData sd = spectral_decompose(SuperOp::Identity(9, 9));
    CHECK(sd.diagonalizable);
    for (Eigen::Index i = 0; i < 9; ++i)
        CHECK(std::abs(sd.eigenvalues(i) - 1.0) < 1e-12);
    CHECK(matrix_diff(sd.left.adjoint() * sd.right, Eigen::MatrixXcd::Identity(9, 9)) < 1e-12);
}

TEST_CASE("gamma = 0 single-qubit RIM spectrum is {1, 1, cos 2t, cos 2t}") {
    const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
    const SpectralData sd = spectral_decompose(rim.channel.natural());
    const double c2 = std::cos(2.0);
    CHECK(std::abs(sd.eigenvalues(0) - 1.0) < 1e-10);
    CHECK(std::abs(sd.eigenvalues(1) - 1.0) < 1e-10);
    CHECK(std::abs(sd.eigenvalues(2) - c2) < 1e-10);
    CHECK(std::abs(sd.eigenvalues(3) - c2) < 1e-10);
}

TEST_CASE("gamma = 0.05 has exactly one fixed point, cross-checked by SVD rank") {
    const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
    const SpectralData sd = spectral_decompose(rim.channel.natural());

    int fixed = 0;
    for (Eigen::Index i = 0; i < sd.size(); ++i)
        if (std::abs(sd.eigenvalues(i) - 1.0) <= 1e-10) ++fixed;
    CHECK(fixed == 1);
    CHECK(unit_multiplicity_by_svd(rim.channel.natural()) == 1);

    // The metastable eigenvalue is real with |lambda| < 1.
    CHECK(sd.eigenvalues(1).imag() == 0.0);
    CHECK(sd.eigenvalues(1).real() > 0.9);
    CHECK(sd.eigenvalues(1).real() < 1.0 - 1e-10);
}

TEST_CASE("spectral invariants over random RIM channels") {
    std::mt19937 gen(31);
    for (int trial = 0; trial < 8; ++trial) {
        const int d = trial % 2 == 0 ? 2 : 4;
        const RimSpec spec{test_support::random_hermitian_unit(d, gen),
                           test_support::random_hermitian_unit(d, gen),
                           0.5 * std::uniform_real_distribution<double>(0, 1)(gen),
                           M_PI / 2.0, 1.0};
        const SuperOp phi = rim_channel(spec).channel.natural();
        const SpectralData sd = spectral_decompose(phi);
        REQUIRE(sd.diagonalizable);

        // Biorthonormality.
        CHECK(matrix_diff(sd.left.adjoint() * sd.right,
                          Eigen::MatrixXcd::Identity(sd.size(), sd.size())) < 1e-8);
        // Spectral radius within the unit disk.
        CHECK(sd.eigenvalues.cwiseAbs().maxCoeff() <= 1.0 + 1e-8);
        // Reconstruction.
        SuperOp rebuilt = SuperOp::Zero(sd.size(), sd.size());
        for (Eigen::Index i = 0; i < sd.size(); ++i)
            rebuilt += sd.eigenvalues(i) * sd.right.col(i) * sd.left.col(i).adjoint();
        CHECK(matrix_diff(rebuilt, phi) < 1e-8);
        // Decaying modes are traceless.
        for (Eigen::Index i = 0; i < sd.size(); ++i)
            if (std::abs(sd.eigenvalues(i)) < 1.0 - 1e-10)
                CHECK(std::abs(devectorize(sd.right.col(i)).trace()) < 1e-8);
        // Complex eigenvalues close under conjugation.
        for (Eigen::Index i = 0; i < sd.size(); ++i) {
            if (sd.eigenvalues(i).imag() == 0.0) continue;
            bool paired = false;
            for (Eigen::Index j = 0; j < sd.size(); ++j)
                if (std::abs(sd.eigenvalues(j) - std::conj(sd.eigenvalues(i))) < 1e-10)
                    paired = true;
            CHECK(paired);
        }
        // Sorted by decreasing modulus.
        for (Eigen::Index i = 1; i < sd.size(); ++i)
            CHECK(std::abs(sd.eigenvalues(i)) <= std::abs(sd.eigenvalues(i - 1)) + 1e-12);
    }
}

TEST_CASE("classify_spectrum") {
    SUBCASE("gamma = 0: two fixed points, no admissible gap at t = 1") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
        const auto cls = classify_spectrum(spectral_decompose(rim.channel.natural()));
        CHECK(cls.n_unit == 2);
        CHECK(cls.status == RegionStatus::NoAdmissibleGap);
        CHECK_FALSE(cls.region.has_value());
        CHECK(cls.classes[0].kind == PointKind::Fixed);
        CHECK(cls.classes[2].kind == PointKind::Decaying);
    }

    SUBCASE("gamma = 0.05: n = 1, l = 2, wide region") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const auto cls = classify_spectrum(spectral_decompose(rim.channel.natural()));
        REQUIRE(cls.status == RegionStatus::Found);
        CHECK(cls.n_unit == 1);
        CHECK(cls.region->l == 2);
        CHECK(cls.region->mu_prime > 10.0 * cls.region->mu_double_prime);
        CHECK(cls.classes[1].kind == PointKind::Metastable);
    }

    SUBCASE("hand-built diagonal superoperator with closed-form region") {
        SuperOp phi = SuperOp::Zero(4, 4);
        phi.diagonal() << 1.0, 0.999, 0.5, 0.1;
        const auto cls = classify_spectrum(spectral_decompose(phi));
        REQUIRE(cls.status == RegionStatus::Found);
        CHECK(cls.region->l == 2);
        CHECK(cls.region->mu_prime ==
              doctest::Approx(1.0 / std::abs(std::log(0.999))).epsilon(1e-12));
        CHECK(cls.region->mu_double_prime ==
              doctest::Approx(1.0 / std::abs(std::log(0.5))).epsilon(1e-12));
        CHECK(cls.region->gap_ratio ==
              doctest::Approx(std::abs(std::log(0.5)) / std::abs(std::log(0.999)))
                  .epsilon(1e-12));
        CHECK(cls.region->mu_prime == doctest::Approx(999.49983).epsilon(1e-6));
        CHECK(cls.region->mu_double_prime == doctest::Approx(1.4426950).epsilon(1e-6));
        CHECK(cls.region->gap_ratio == doctest::Approx(692.80047).epsilon(1e-6));
    }

    SUBCASE("unitary channel has no decaying eigenvalue") {
        std::mt19937 gen(32);
        const QuantumChannel u =
            QuantumChannel::from_kraus({test_support::random_unitary(2, gen)});
        const auto cls = classify_spectrum(spectral_decompose(u.natural()));
        CHECK(cls.status == RegionStatus::NoDecayingEigenvalue);
        CHECK(cls.n_unit == 4);
    }

    SUBCASE("manual l override bounds") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        CHECK_THROWS_AS(classify_spectrum(sd, 1e-10, 1), PreconditionError);
        CHECK_THROWS_AS(classify_spectrum(sd, 1e-10, 4), PreconditionError);
        const auto cls = classify_spectrum(sd, 1e-10, 3);
        CHECK(cls.region->l == 3);
    }
}

TEST_CASE("propagate") {
    std::mt19937 gen(33);
    const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
    const SpectralData sd = spectral_decompose(rim.channel.natural());

    SUBCASE("m = 0 is the resolution of identity") {
        const Operator rho = test_support::random_density(2, gen);
        CHECK(matrix_diff(propagate(sd, rho, 0), rho) < 1e-10);
    }

    SUBCASE("maximally mixed state is stationary") {
        for (long m : {1, 7, 100})
            CHECK(matrix_diff(propagate(sd, identity(2) / 2.0, m), identity(2) / 2.0) < 1e-10);
    }

    SUBCASE("truncated and full propagation agree at the region midpoint") {
        const auto cls = classify_spectrum(sd);
        REQUIRE(cls.status == RegionStatus::Found);
        const long m_star =
            std::llround(std::sqrt(cls.region->mu_prime * cls.region->mu_double_prime));
        const Operator rho0 = basis_projector(0, 2);
        const Operator full = propagate(sd, rho0, m_star);
        const Operator truncated = propagate(sd, rho0, m_star, cls.region->l);
        CHECK(trace_distance(full, truncated) < 1e-3);
    }

    SUBCASE("propagate equals channel application for m <= 64") {
        const Operator rho = test_support::random_density(2, gen);
        for (long m : {1, 13, 64})
            CHECK(trace_distance(propagate(sd, rho, m), rim.channel.apply(rho, m)) < 1e-8);
    }

    CHECK_THROWS_AS(propagate(sd, identity(2) / 2.0, 1, 9), PreconditionError);
}

TEST_CASE("real_modes") {
    SUBCASE("real metastable eigenvalue passes through with a Hermitian mode") {
        const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.05));
        const SpectralData sd = spectral_decompose(rim.channel.natural());
        const RealModeSet set = real_modes(sd, {1});
        REQUIRE(set.entries.size() == 1);
        CHECK_FALSE(set.entries[0].is_pair);
        const Operator mode = devectorize(set.entries[0].mode1);
        CHECK(matrix_diff(mode, mode.adjoint()) < 1e-8);
        // For real eigenvalues c'_1 = c, c'_2 = 0.
        std::mt19937 gen(34);
        const Operator rho = test_support::random_density(2, gen);
        const auto [c1, c2] = set.entries[0].coefficients(rho, 17);
        CHECK(c2 == 0.0);
        CHECK(c1 == doctest::Approx(sd.left.col(1).dot(vectorize(rho)).real()).epsilon(1e-12));
    }

    SUBCASE("synthetic rotating pair 0.99 e^{+-i pi/8} gives Hermitian real modes") {
        const SuperOp phi = rotating_pair_superop(0.99, M_PI / 8.0, 0.8);
        const SpectralData sd = spectral_decompose(phi);
        // Expect eigenvalues sorted as 1, 0.99 e^{+-i pi/8}, 0.8.
        std::vector<int> pair_idx;
        for (Eigen::Index i = 0; i < 4; ++i)
            if (sd.eigenvalues(i).imag() != 0.0) pair_idx.push_back(static_cast<int>(i));
        REQUIRE(pair_idx.size() == 2);
        const RealModeSet set = real_modes(sd, pair_idx);
        REQUIRE(set.entries.size() == 1);
        CHECK(set.entries[0].is_pair);
        for (const HsVector* mode : {&set.entries[0].mode1, &set.entries[0].mode2}) {
            const Operator op = devectorize(*mode);
            CHECK(matrix_diff(op, op.adjoint()) < 1e-8);
        }
    }

    SUBCASE("real-mode propagation equals complex-mode propagation") {
        const SuperOp phi = rotating_pair_superop(0.99, M_PI / 8.0, 0.8);
        const SpectralData sd = spectral_decompose(phi);
        std::vector<int> pair_idx;
        for (Eigen::Index i = 0; i < 4; ++i)
            if (sd.eigenvalues(i).imag() != 0.0) pair_idx.push_back(static_cast<int>(i));
        const RealModeSet set = real_modes(sd, pair_idx);
        const RealModeEntry& entry = set.entries.front();

        std::mt19937 gen(35);
        const Operator rho = test_support::random_density(2, gen);
        const HsVector rho_vec = vectorize(rho);
        for (long m : {1L, 5L, 20L}) {
            // Complex route: the two conjugate modes only.
            HsVector complex_part = HsVector::Zero(4);
            for (const int i : pair_idx) {
                const Complex c = sd.left.col(i).dot(rho_vec);
                complex_part += c * std::pow(sd.eigenvalues(i), double(m)) * sd.right.col(i);
            }
            // Real route: |lambda|^m (c'_1 R'_1 + c'_2 R'_2).
            const auto [c1, c2] = entry.coefficients(rho, m);
            const double decay = std::pow(std::abs(entry.lambda), double(m));
            const HsVector real_part = decay * (c1 * entry.mode1 + c2 * entry.mode2);
            CHECK((complex_part - real_part).cwiseAbs().maxCoeff() < 1e-10);
        }
    }

    SUBCASE("unpaired complex index set is rejected") {
        const SuperOp phi = rotating_pair_superop(0.99, M_PI / 8.0, 0.8);
        const SpectralData sd = spectral_decompose(phi);
        int one_complex = -1;
        for (Eigen::Index i = 0; i < 4; ++i)
            if (sd.eigenvalues(i).imag() != 0.0) one_complex = static_cast<int>(i);
        CHECK_THROWS_AS(real_modes(sd, {one_complex}), PreconditionError);
    }
}

TEST_CASE("a defective channel is flagged, not fatal") {
    // Classical chain 0 <- 1 <- 2 with an absorbing end embeds as a CPTP
    // channel whose natural representation carries a Jordan block at 0.
    Operator m00 = Operator::Zero(3, 3), m01 = Operator::Zero(3, 3),
             m12 = Operator::Zero(3, 3);
    m00(0, 0) = m01(0, 1) = m12(1, 2) = 1.0;
    const QuantumChannel chain = QuantumChannel::from_kraus({m00, m01, m12});
    const SpectralData sd = spectral_decompose(chain.natural());
    CHECK_FALSE(sd.diagonalizable);
    CHECK(sd.cond_eigvec > 1e8);
    CHECK_THROWS_AS(classify_spectrum(sd), PreconditionError);
    CHECK_THROWS_AS(propagate(sd, identity(3) / 3.0, 5), PreconditionError);
}

TEST_CASE("degenerate real clusters get Hermitian bases (gamma = 0 case)") {
    const RimChannel rim = rim_channel(test_support::rim_spec_sz_sx(0.0));
    const SpectralData sd = spectral_decompose(rim.channel.natural());
    // Both the lambda = 1 pair and the cos(2) pair should devectorize Hermitian.
    for (Eigen::Index i = 0; i < 4; ++i) {
        const Operator op = devectorize(sd.right.col(i));
        CHECK(matrix_diff(op, op.adjoint()) < 1e-8);
    }
    // Trace canonicalization: the first fixed mode is I/2, the second traceless.
    CHECK(matrix_diff(devectorize(sd.right.col(0)), identity(2) / 2.0) < 1e-10);
    CHECK(std::abs(devectorize(sd.right.col(1)).trace()) < 1e-10);
}
