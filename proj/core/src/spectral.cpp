#include "metachan/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace metachan {

namespace {

constexpr double kClusterTol = 1e-12;  // eigenvalue degeneracy grouping
constexpr double kPairTol = 1e-10;     // conjugate-pair matching

Complex pow_int(Complex lambda, long m) {
    if (m == 0) return Complex(1.0, 0.0);
    return std::pow(lambda, static_cast<double>(m));
}

/// Orthonormalize the given columns in place (modified Gram-Schmidt). A
/// defective cluster hands us nearly parallel columns; normalizing their
/// residuals would manufacture rank and hide the defect, so the columns are
/// restored untouched and false is returned when the span is deficient.
bool orthonormalize_columns(Eigen::MatrixXcd& v, const std::vector<int>& cols) {
    Eigen::MatrixXcd backup(v.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t a = 0; a < cols.size(); ++a)
        backup.col(static_cast<Eigen::Index>(a)) = v.col(cols[a]);
    for (std::size_t a = 0; a < cols.size(); ++a) {
        auto col = v.col(cols[a]);
        for (std::size_t b = 0; b < a; ++b) {
            const auto prev = v.col(cols[b]);
            col -= prev.dot(col) * prev;
        }
        const double residual = col.norm();
        if (residual < 1e-6) {
            for (std::size_t r = 0; r < cols.size(); ++r)
                v.col(cols[r]) = backup.col(static_cast<Eigen::Index>(r));
            return false;
        }
        col /= residual;
    }
    return true;
}

/// Coefficient matrix sigma with S(v_j) = sum_i sigma_ij v_i for orthonormal
/// columns; valid when the span is conjugation-invariant.
Eigen::MatrixXcd conjugation_matrix(const Eigen::MatrixXcd& v, const std::vector<int>& cols,
                                    double* residual) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXcd vc(v.rows(), k), sv(v.rows(), k);
    for (Eigen::Index j = 0; j < k; ++j) {
        vc.col(j) = v.col(cols[j]);
        sv.col(j) = hs_adjoint(v.col(cols[j]));
    }
    Eigen::MatrixXcd sigma = vc.adjoint() * sv;
    *residual = (sv - vc * sigma).cwiseAbs().maxCoeff();
    return sigma;
}

/// Rotate an exactly degenerate real-eigenvalue cluster onto a basis of
/// Hermitian-devectorizing vectors. The antilinear conjugation S restricted
/// to the cluster is v -> sigma conj(v) with sigma symmetric unitary; its +1
/// "eigenvectors" in the real sense span the Hermitian representatives.
bool hermitianize_cluster(Eigen::MatrixXcd& v, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    double residual = 0.0;
    const Eigen::MatrixXcd sigma = conjugation_matrix(v, cols, &residual);
    if (residual > 1e-8) return false;  // span not conjugation-invariant

    if (k == 1) {
        const Complex z = sigma(0, 0);
        if (std::abs(std::abs(z) - 1.0) > 1e-6) return false;
        v.col(cols[0]) *= std::exp(Complex(0, std::arg(z) / 2.0));
        return true;
    }

    // Real form of the antilinear fixed-point equation sigma conj(a) = a.
    Eigen::MatrixXd m(2 * k, 2 * k);
    m.topLeftCorner(k, k) = sigma.real();
    m.topRightCorner(k, k) = sigma.imag();
    m.bottomLeftCorner(k, k) = sigma.imag();
    m.bottomRightCorner(k, k) = -sigma.real();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es((m + m.transpose()) / 2.0);

    Eigen::MatrixXcd herm(v.rows(), k);
    Eigen::Index found = 0;
    for (Eigen::Index i = 0; i < 2 * k && found < k; ++i) {
        const Eigen::Index idx = 2 * k - 1 - i;  // eigenvalues ascend; +1 block sits at the end
        if (es.eigenvalues()(idx) < 0.5) break;
        Eigen::VectorXcd a =
            es.eigenvectors().col(idx).head(k) +
            Complex(0, 1) * es.eigenvectors().col(idx).tail(k);
        Eigen::VectorXcd w = Eigen::VectorXcd::Zero(v.rows());
        for (Eigen::Index j = 0; j < k; ++j) w += a(j) * v.col(cols[j]);
        herm.col(found++) = w;
    }
    if (found != k) return false;

    // Real Gram-Schmidt keeps Hermiticity (HS inner products of Hermitian
    // operators are real).
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < a; ++b)
            herm.col(a) -= herm.col(b).dot(herm.col(a)).real() * herm.col(b);
        const double nrm = herm.col(a).norm();
        if (nrm < 1e-10) return false;
        herm.col(a) /= nrm;
    }
    for (Eigen::Index j = 0; j < k; ++j) v.col(cols[j]) = herm.col(j);
    return true;
}

/// Within the eigenvalue-1 cluster, rotate the basis so the first vector is
/// the trace-carrying direction normalized to trace 1 and the rest are
/// traceless.
void trace_canonicalize(Eigen::MatrixXcd& v, const std::vector<int>& cols) {
    const auto k = static_cast<Eigen::Index>(cols.size());
    Eigen::VectorXcd traces(k);
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(v.rows()))));
    for (Eigen::Index j = 0; j < k; ++j) {
        Complex tr = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) tr += v(i * d + i, cols[j]);
        traces(j) = tr;
    }
    const double tnorm2 = traces.squaredNorm();
    if (tnorm2 < 1e-16) return;  // whole subspace traceless; nothing to pin

    // g = projection of |I>> onto the cluster span; trace(g) = ||t||^2 > 0.
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(v.rows());
    for (Eigen::Index j = 0; j < k; ++j) g += std::conj(traces(j)) * v.col(cols[j]);
    v.col(cols[0]) = g / tnorm2;  // trace exactly 1

    for (Eigen::Index j = 1; j < k; ++j) {
        Complex tr = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) tr += v(i * d + i, cols[j]);
        v.col(cols[j]) -= tr * v.col(cols[0]);
    }
    // Re-orthonormalize the traceless remainder for conditioning.
    if (k > 1) {
        std::vector<int> rest(cols.begin() + 1, cols.end());
        orthonormalize_columns(v, rest);
    }
}

}  // namespace

SpectralData spectral_decompose(const SuperOp& phi_hat) {
    if (phi_hat.rows() != phi_hat.cols() || phi_hat.rows() < 1)
        throw DimensionError("spectral_decompose: superoperator must be square");
    const auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(double(phi_hat.rows()))));
    if (d * d != phi_hat.rows())
        throw DimensionError("spectral_decompose: size is not a perfect square");
    if (!phi_hat.allFinite())
        throw NumericalError("spectral_decompose: non-finite superoperator");

    Eigen::ComplexEigenSolver<SuperOp> solver(phi_hat, true);
    if (solver.info() != Eigen::Success)
        throw NumericalError("spectral_decompose: eigensolver failed");

    const Eigen::Index n = phi_hat.rows();
    Eigen::VectorXcd lam = solver.eigenvalues();
    Eigen::MatrixXcd v = solver.eigenvectors();

    // Sort: |lambda| desc, then Re desc, then Im asc.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double ma = std::abs(lam(a)), mb = std::abs(lam(b));
        if (ma != mb) return ma > mb;
        if (lam(a).real() != lam(b).real()) return lam(a).real() > lam(b).real();
        return lam(a).imag() < lam(b).imag();
    });
    {
        Eigen::VectorXcd lam_sorted(n);
        Eigen::MatrixXcd v_sorted(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            lam_sorted(i) = lam(order[i]);
            v_sorted.col(i) = v.col(order[i]);
        }
        lam = std::move(lam_sorted);
        v = std::move(v_sorted);
    }

    // Snap rounding-level imaginary parts so real eigenvalues are exactly real.
    for (Eigen::Index i = 0; i < n; ++i)
        if (lam(i).imag() != 0.0 && std::abs(lam(i).imag()) <= kClusterTol)
            lam(i) = Complex(lam(i).real(), 0.0);

    // Group exactly degenerate eigenvalues (adjacent after sorting).
    std::vector<std::vector<int>> clusters;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!clusters.empty() &&
            std::abs(lam(i) - lam(clusters.back().back())) <= kClusterTol)
            clusters.back().push_back(static_cast<int>(i));
        else
            clusters.push_back({static_cast<int>(i)});
    }
    std::vector<bool> healthy(clusters.size(), true);
    for (std::size_t ci = 0; ci < clusters.size(); ++ci)
        if (clusters[ci].size() > 1) healthy[ci] = orthonormalize_columns(v, clusters[ci]);

    // Canonicalize: conjugate pairs carry adjoint-related vectors; real
    // clusters get Hermitian representatives. Rank-deficient (defective)
    // clusters are left exactly as the solver produced them.
    std::vector<bool> done(clusters.size(), false);
    for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
        if (done[ci] || !healthy[ci]) continue;
        const Complex lc = lam(clusters[ci][0]);
        if (lc.imag() == 0.0) {
            hermitianize_cluster(v, clusters[ci]);  // best effort
            done[ci] = true;
            continue;
        }
        // Find the conjugate partner cluster.
        std::size_t partner = clusters.size();
        for (std::size_t cj = 0; cj < clusters.size(); ++cj) {
            if (cj == ci || done[cj] || !healthy[cj] ||
                clusters[cj].size() != clusters[ci].size())
                continue;
            if (std::abs(lam(clusters[cj][0]) - std::conj(lc)) <= kPairTol) {
                partner = cj;
                break;
            }
        }
        done[ci] = true;
        if (partner == clusters.size()) continue;  // unpaired; left as the solver gave it
        for (std::size_t j = 0; j < clusters[ci].size(); ++j) {
            v.col(clusters[partner][j]) = hs_adjoint(v.col(clusters[ci][j]));
            lam(clusters[partner][j]) = std::conj(lam(clusters[ci][j]));
        }
        done[partner] = true;
    }

    // Pin the trace convention inside the eigenvalue-1 subspace.
    for (std::size_t ci = 0; ci < clusters.size(); ++ci)
        if (healthy[ci] && std::abs(lam(clusters[ci][0]) - 1.0) <= kEpsUnitDefault)
            trace_canonicalize(v, clusters[ci]);

    SpectralData sd;
    sd.d = d;

    Eigen::BDCSVD<Eigen::MatrixXcd> svd(v);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    sd.cond_eigvec = smin > 0 ? svd.singularValues()(0) / smin
                              : std::numeric_limits<double>::infinity();
    // The canonicalized columns must still satisfy the eigen-equation; a
    // large residual means the solver papered over a Jordan structure.
    const double eig_residual =
        (phi_hat * v - v * lam.asDiagonal()).cwiseAbs().maxCoeff();
    sd.diagonalizable = sd.cond_eigvec <= kDiagCondLimit && eig_residual <= 1e-6;

    sd.eigenvalues = std::move(lam);
    sd.left = v.partialPivLu().inverse().adjoint();
    sd.right = std::move(v);
    return sd;
}

SpectrumClassification classify_spectrum(const SpectralData& sd, double eps_unit,
                                         std::optional<int> l_override) {
    if (!sd.diagonalizable)
        throw PreconditionError("classify_spectrum: channel flagged non-diagonalizable");

    const Eigen::Index n = sd.size();
    SpectrumClassification out;
    out.classes.resize(n);

    int n_unit = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex lam = sd.eigenvalues(i);
        if (std::abs(lam - 1.0) <= eps_unit) {
            out.classes[i] = {PointKind::Fixed, 0.0};
            ++n_unit;
        } else if (std::abs(std::abs(lam) - 1.0) <= eps_unit) {
            out.classes[i] = {PointKind::Rotating, std::arg(lam)};
            ++n_unit;
        } else {
            out.classes[i] = {PointKind::Decaying, std::arg(lam)};
        }
    }
    out.n_unit = n_unit;

    if (n_unit == n) {
        out.status = RegionStatus::NoDecayingEigenvalue;
        return out;
    }

    const auto log_mod = [&](int l_1based) {
        return std::abs(std::log(std::abs(sd.eigenvalues(l_1based - 1))));
    };

    int chosen_l = 0;
    if (l_override) {
        if (*l_override <= n_unit || *l_override >= n)
            throw PreconditionError("classify_spectrum: l override out of range (n < l < d^2)");
        chosen_l = *l_override;
    } else {
        double best = 0.0;
        for (int l = n_unit + 1; l < n; ++l) {
            const double mod_l = std::abs(sd.eigenvalues(l - 1));
            if (mod_l <= 0.5 || mod_l >= 1.0) continue;
            const double ratio = log_mod(l + 1) / log_mod(l);
            if (ratio > best) {
                best = ratio;
                chosen_l = l;
            }
        }
        if (chosen_l == 0 || best <= 1.0) {
            out.status = RegionStatus::NoAdmissibleGap;
            return out;
        }
    }

    MetastableRegion region;
    region.l = chosen_l;
    region.mu_prime = 1.0 / log_mod(chosen_l);
    region.mu_double_prime = 1.0 / log_mod(chosen_l + 1);
    region.gap_ratio = log_mod(chosen_l + 1) / log_mod(chosen_l);
    for (int i = n_unit; i < chosen_l; ++i)
        out.classes[i].kind = PointKind::Metastable;
    out.status = RegionStatus::Found;
    out.region = region;
    return out;
}

Operator propagate(const SpectralData& sd, const Operator& rho, long m,
                   std::optional<int> truncate_to) {
    if (!sd.diagonalizable)
        throw PreconditionError("propagate: channel flagged non-diagonalizable");
    if (m < 0) throw PreconditionError("propagate: negative round count");
    if (rho.rows() != sd.d || rho.cols() != sd.d)
        throw DimensionError("propagate: state dimension mismatch");
    const int cut = truncate_to.value_or(static_cast<int>(sd.size()));
    if (cut < 1 || cut > sd.size())
        throw PreconditionError("propagate: truncation index out of range");

    const HsVector rho_vec = vectorize(rho);
    HsVector out = HsVector::Zero(sd.size());
    for (int i = 0; i < cut; ++i) {
        const Complex c = sd.left.col(i).dot(rho_vec);
        out += c * pow_int(sd.eigenvalues(i), m) * sd.right.col(i);
    }
    Operator result = devectorize(out);
    return (result + result.adjoint()) / 2.0;
}

std::pair<double, double> RealModeEntry::phase_data(const Operator& rho) const {
    const Complex c = left1.dot(vectorize(rho));
    return {std::abs(c), std::arg(c)};
}

std::pair<double, double> RealModeEntry::coefficients(const Operator& rho, long m) const {
    const Complex c = left1.dot(vectorize(rho));
    if (!is_pair) return {c.real(), 0.0};
    const double phi = std::arg(lambda);
    const double delta = std::arg(c);
    return {std::abs(c) * std::cos(m * phi + delta), std::abs(c) * std::sin(m * phi + delta)};
}

RealModeSet real_modes(const SpectralData& sd, const std::vector<int>& indices) {
    RealModeSet set;
    set.d = sd.d;
    std::vector<bool> used(indices.size(), false);
    for (std::size_t a = 0; a < indices.size(); ++a) {
        if (used[a]) continue;
        used[a] = true;
        const int i = indices[a];
        if (i < 0 || i >= sd.size()) throw PreconditionError("real_modes: index out of range");
        const Complex lam = sd.eigenvalues(i);

        if (lam.imag() == 0.0) {
            RealModeEntry entry;
            entry.is_pair = false;
            entry.lambda = lam;
            entry.mode1 = sd.right.col(i);
            entry.left1 = sd.left.col(i);
            entry.index1 = i;
            entry.index2 = -1;
            if (max_abs(devectorize(entry.mode1) - devectorize(entry.mode1).adjoint()) > 1e-8)
                throw NumericalError(
                    "real_modes: real-eigenvalue mode has no Hermitian representative");
            set.entries.push_back(std::move(entry));
            continue;
        }

        // Locate the conjugate partner inside the requested set.
        std::size_t pb = indices.size();
        for (std::size_t b = a + 1; b < indices.size(); ++b) {
            if (used[b]) continue;
            if (std::abs(sd.eigenvalues(indices[b]) - std::conj(lam)) <= 1e-10 &&
                std::abs(std::abs(sd.eigenvalues(indices[b])) - std::abs(lam)) <= 1e-10) {
                pb = b;
                break;
            }
        }
        if (pb == indices.size())
            throw PreconditionError("real_modes: unpaired complex eigenvalue in index set");
        used[pb] = true;

        const int src = lam.imag() > 0 ? i : indices[pb];
        const int prt = lam.imag() > 0 ? indices[pb] : i;
        RealModeEntry entry;
        entry.is_pair = true;
        entry.lambda = sd.eigenvalues(src);
        entry.mode1 = sd.right.col(src) + sd.right.col(prt);
        entry.mode2 = Complex(0, 1) * (sd.right.col(src) - sd.right.col(prt));
        entry.left1 = sd.left.col(src);
        entry.index1 = src;
        entry.index2 = prt;
        for (const HsVector* mode : {&entry.mode1, &entry.mode2})
            if (max_abs(devectorize(*mode) - devectorize(*mode).adjoint()) > 1e-8)
                throw NumericalError("real_modes: combined pair mode is not Hermitian");
        set.entries.push_back(std::move(entry));
    }
    return set;
}

}  // namespace metachan
