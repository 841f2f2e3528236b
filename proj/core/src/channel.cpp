#include "metachan/channel.hpp"

#include <utility>

namespace metachan {

namespace {

SuperOp natural_from_kraus(const std::vector<Operator>& kraus) {
    const Eigen::Index d = kraus.front().rows();
    SuperOp phi = SuperOp::Zero(d * d, d * d);
    for (const auto& m : kraus) phi += kron(m, m.conjugate());
    return phi;
}

double tp_residual_of(const std::vector<Operator>& kraus) {
    const Eigen::Index d = kraus.front().rows();
    Operator s = Operator::Zero(d, d);
    for (const auto& m : kraus) s += m.adjoint() * m;
    return max_abs(s - identity(d));
}

void check_kraus_dims(const std::vector<Operator>& kraus) {
    if (kraus.empty()) throw DimensionError("channel: empty Kraus list");
    const Eigen::Index d = kraus.front().rows();
    for (const auto& m : kraus) {
        if (m.rows() != d || m.cols() != d)
            throw DimensionError("channel: Kraus operators must share one square dimension");
        if (!is_finite(m)) throw NumericalError("channel: non-finite Kraus entries");
    }
}

}  // namespace

QuantumChannel QuantumChannel::from_kraus(std::vector<Operator> kraus) {
    check_kraus_dims(kraus);
    const double residual = tp_residual_of(kraus);
    if (residual > kTpConstructionTol)
        throw NumericalError("channel: trace-preservation residual " +
                             std::to_string(residual) + " exceeds 1e-8");
    SuperOp nat = natural_from_kraus(kraus);
    const Eigen::Index d = kraus.front().rows();
    return QuantumChannel(d, std::move(kraus), std::move(nat));
}

QuantumChannel QuantumChannel::from_kraus_unchecked(std::vector<Operator> kraus) {
    check_kraus_dims(kraus);
    SuperOp nat = natural_from_kraus(kraus);
    const Eigen::Index d = kraus.front().rows();
    return QuantumChannel(d, std::move(kraus), std::move(nat));
}

QuantumChannel QuantumChannel::from_joint_unitary(const Operator& u, const Operator& ancilla_init,
                                                  Eigen::Index dim_ancilla,
                                                  Eigen::Index dim_system) {
    if (u.rows() != dim_ancilla * dim_system || u.cols() != u.rows())
        throw DimensionError("from_joint_unitary: U must act on ancilla (x) system");
    if (!is_unitary(u, 1e-10)) throw PreconditionError("from_joint_unitary: U is not unitary");
    if (ancilla_init.rows() != dim_ancilla || ancilla_init.cols() != dim_ancilla)
        throw DimensionError("from_joint_unitary: ancilla state dimension mismatch");

    // Pure-state check: largest eigenvalue 1, the rest 0.
    Eigen::SelfAdjointEigenSolver<Operator> es(
        ((ancilla_init + ancilla_init.adjoint()) / 2.0).eval());
    const Eigen::VectorXd w = es.eigenvalues();
    if (std::abs(w(w.size() - 1) - 1.0) > 1e-10 ||
        (w.size() > 1 && std::abs(w(w.size() - 2)) > 1e-10))
        throw PreconditionError("from_joint_unitary: ancilla state must be pure");
    const Eigen::VectorXcd psi = es.eigenvectors().col(w.size() - 1);

    std::vector<Operator> kraus;
    kraus.reserve(dim_ancilla);
    for (Eigen::Index alpha = 0; alpha < dim_ancilla; ++alpha) {
        Operator m = Operator::Zero(dim_system, dim_system);
        for (Eigen::Index a = 0; a < dim_ancilla; ++a)
            m += psi(a) * u.block(alpha * dim_system, a * dim_system, dim_system, dim_system);
        kraus.push_back(std::move(m));
    }
    return from_kraus(std::move(kraus));
}

Operator QuantumChannel::apply(const Operator& rho, long m) const {
    if (rho.rows() != dim_ || rho.cols() != dim_)
        throw DimensionError("apply: state dimension mismatch");
    if (m < 0) throw PreconditionError("apply: negative round count");
    HsVector v = vectorize(rho);
    for (long k = 0; k < m; ++k) v = natural_ * v;
    Operator out = devectorize(v);
    return (out + out.adjoint()) / 2.0;
}

SuperOp QuantumChannel::power(long m) const {
    if (m < 0) throw PreconditionError("power: negative round count");
    SuperOp result = SuperOp::Identity(natural_.rows(), natural_.cols());
    SuperOp base = natural_;
    while (m > 0) {
        if (m & 1) result = (result * base).eval();
        base = (base * base).eval();
        m >>= 1;
    }
    return result;
}

Operator choi_from_natural(const SuperOp& phi_hat, Eigen::Index d) {
    if (phi_hat.rows() != d * d || phi_hat.cols() != d * d)
        throw DimensionError("choi_from_natural: dimension mismatch");
    Operator choi(d * d, d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            for (Eigen::Index k = 0; k < d; ++k)
                for (Eigen::Index l = 0; l < d; ++l)
                    choi(i * d + j, k * d + l) = phi_hat(i * d + k, j * d + l);
    return choi;
}

ValidityReport validate_natural(const SuperOp& phi_hat, Eigen::Index d) {
    ValidityReport report;

    // Trace preservation in HS form: Phi-hat^dag |I>> = |I>>.
    const HsVector id_vec = vectorize(identity(d));
    report.tp_residual = (phi_hat.adjoint() * id_vec - id_vec).cwiseAbs().maxCoeff();
    report.trace_preserving = report.tp_residual < kTpResidualTol;

    const Operator choi = choi_from_natural(phi_hat, d);
    Eigen::SelfAdjointEigenSolver<Operator> es(((choi + choi.adjoint()) / 2.0).eval(),
                                               Eigen::EigenvaluesOnly);
    report.choi_min_eigenvalue = es.eigenvalues().minCoeff();
    report.completely_positive = report.choi_min_eigenvalue > kChoiMinEigTol;

    report.unitality_residual = (phi_hat * id_vec - id_vec).cwiseAbs().maxCoeff();
    report.unital = report.unitality_residual < kTpResidualTol;
    return report;
}

ValidityReport validate(const QuantumChannel& ch) {
    ValidityReport report = validate_natural(ch.natural(), ch.dim());
    // The Kraus-sum residual is the sharper TP diagnostic; report it instead
    // of the HS-form residual when the Kraus set is available.
    Operator s = Operator::Zero(ch.dim(), ch.dim());
    for (const auto& m : ch.kraus()) s += m.adjoint() * m;
    report.tp_residual = max_abs(s - identity(ch.dim()));
    report.trace_preserving = report.tp_residual < kTpResidualTol;
    return report;
}

QuantumChannel compose(const QuantumChannel& a, const QuantumChannel& b) {
    if (a.dim() != b.dim()) throw DimensionError("compose: dimension mismatch");
    std::vector<Operator> kraus;
    kraus.reserve(a.kraus().size() * b.kraus().size());
    for (const auto& ai : a.kraus())
        for (const auto& bj : b.kraus()) kraus.push_back(ai * bj);
    return QuantumChannel::from_kraus(std::move(kraus));
}

}  // namespace metachan
