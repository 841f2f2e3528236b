#include "metachan/hs.hpp"

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace metachan {

namespace {

void require_square(const Operator& a, const char* who) {
    if (a.rows() != a.cols() || a.rows() < 1)
        throw DimensionError(std::string(who) + ": operator must be square and non-empty");
}

void require_same_dim(const Operator& a, const Operator& b, const char* who) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError(std::string(who) + ": dimension mismatch");
}

}  // namespace

Operator identity(Eigen::Index d) { return Operator::Identity(d, d); }

Operator pauli_x() {
    Operator s(2, 2);
    s << 0, 1, 1, 0;
    return s;
}

Operator pauli_y() {
    Operator s(2, 2);
    s << 0, Complex(0, -1), Complex(0, 1), 0;
    return s;
}

Operator pauli_z() {
    Operator s(2, 2);
    s << 1, 0, 0, -1;
    return s;
}

Operator basis_projector(Eigen::Index i, Eigen::Index d) {
    Operator p = Operator::Zero(d, d);
    p(i, i) = 1.0;
    return p;
}

bool is_finite(const Operator& a) { return a.allFinite(); }

bool is_hermitian(const Operator& a, double tol) {
    return a.rows() == a.cols() && max_abs(a - a.adjoint()) <= tol;
}

bool is_psd(const Operator& a, double tol) {
    if (!is_hermitian(a, tol)) return false;
    Eigen::SelfAdjointEigenSolver<Operator> es(((a + a.adjoint()) / 2.0).eval(),
                                               Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() >= -tol;
}

bool is_unitary(const Operator& a, double tol) {
    if (a.rows() != a.cols()) return false;
    return max_abs(a.adjoint() * a - identity(a.rows())) <= tol;
}

HsVector vectorize(const Operator& a) {
    require_square(a, "vectorize");
    const Eigen::Index d = a.rows();
    HsVector v(d * d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) v(i * d + j) = a(i, j);
    return v;
}

Operator devectorize(const HsVector& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
    if (d < 1 || d * d != v.size())
        throw DimensionError("devectorize: length is not a perfect square");
    Operator a(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) a(i, j) = v(i * d + j);
    return a;
}

Complex hs_inner(const Operator& a, const Operator& b) {
    require_same_dim(a, b, "hs_inner");
    return (a.conjugate().array() * b.array()).sum();
}

SuperOp sandwich(const Operator& x, const Operator& y) {
    require_square(x, "sandwich");
    require_same_dim(x, y, "sandwich");
    return kron(x, y.transpose());
}

Operator kron(const Operator& a, const Operator& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

Operator partial_trace(const Operator& rho_tot, Eigen::Index dim_first,
                       Eigen::Index dim_second, Subsystem keep) {
    require_square(rho_tot, "partial_trace");
    if (dim_first < 1 || dim_second < 1 || dim_first * dim_second != rho_tot.rows())
        throw DimensionError("partial_trace: total dimension does not factor as requested");
    if (keep == Subsystem::First) {
        Operator out = Operator::Zero(dim_first, dim_first);
        for (Eigen::Index a = 0; a < dim_first; ++a)
            for (Eigen::Index b = 0; b < dim_first; ++b)
                for (Eigen::Index s = 0; s < dim_second; ++s)
                    out(a, b) += rho_tot(a * dim_second + s, b * dim_second + s);
        return out;
    }
    Operator out = Operator::Zero(dim_second, dim_second);
    for (Eigen::Index s = 0; s < dim_second; ++s)
        for (Eigen::Index t = 0; t < dim_second; ++t)
            for (Eigen::Index a = 0; a < dim_first; ++a)
                out(s, t) += rho_tot(a * dim_second + s, a * dim_second + t);
    return out;
}

Operator matrix_exp(const Operator& a) {
    require_square(a, "matrix_exp");
    if (!is_finite(a)) throw NumericalError("matrix_exp: non-finite input");
    return a.exp();
}

Operator psd_sqrt(const Operator& a, double clamp_tol) {
    require_square(a, "psd_sqrt");
    Eigen::SelfAdjointEigenSolver<Operator> es(((a + a.adjoint()) / 2.0).eval());
    Eigen::VectorXd w = es.eigenvalues();
    for (Eigen::Index i = 0; i < w.size(); ++i) {
        if (w(i) < -clamp_tol)
            throw NumericalError("psd_sqrt: eigenvalue " + std::to_string(w(i)) +
                                 " below clamp tolerance");
        w(i) = std::sqrt(std::max(w(i), 0.0));
    }
    return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

double fidelity(const Operator& rho, const Operator& sigma) {
    require_same_dim(rho, sigma, "fidelity");
    constexpr double state_tol = 1e-8;
    if (!is_psd(rho, state_tol) || !is_psd(sigma, state_tol))
        throw PreconditionError("fidelity: inputs must be PSD");
    if (std::abs(rho.trace().real() - 1.0) > state_tol ||
        std::abs(sigma.trace().real() - 1.0) > state_tol)
        throw PreconditionError("fidelity: inputs must have unit trace");
    const Operator s = psd_sqrt(sigma);
    Eigen::SelfAdjointEigenSolver<Operator> es(((s * rho * s).eval() +
                                                (s * rho * s).eval().adjoint()) /
                                               2.0);
    double f = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
        f += std::sqrt(std::max(es.eigenvalues()(i), 0.0));
    return std::min(f, 1.0);
}

double trace_distance(const Operator& rho, const Operator& sigma) {
    require_same_dim(rho, sigma, "trace_distance");
    Eigen::SelfAdjointEigenSolver<Operator> es(
        ((rho - sigma + (rho - sigma).adjoint()) / 2.0).eval(), Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double max_abs(const Eigen::MatrixXcd& a) {
    return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

Operator commutator(const Operator& a, const Operator& b) { return a * b - b * a; }

HsVector hs_adjoint(const HsVector& v) {
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.size()))));
    if (d * d != v.size()) throw DimensionError("hs_adjoint: length is not a perfect square");
    HsVector out(v.size());
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) out(i * d + j) = std::conj(v(j * d + i));
    return out;
}

}  // namespace metachan
