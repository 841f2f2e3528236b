#include "metachan/models.hpp"

#include <cmath>

namespace metachan {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

void check_rim_spec(const RimSpec& spec) {
    if (spec.b.rows() != spec.b.cols() || spec.c.rows() != spec.c.cols() ||
        spec.b.rows() != spec.c.rows())
        throw DimensionError("rim_channel: B and C must be square with equal dims");
    if (!is_hermitian(spec.b, 1e-10) || !is_hermitian(spec.c, 1e-10))
        throw PreconditionError("rim_channel: B and C must be Hermitian");
    if (spec.gamma < 0) throw PreconditionError("rim_channel: gamma must be >= 0");
    if (spec.t <= 0) throw PreconditionError("rim_channel: evolution time must be positive");
}

}  // namespace

RimChannel rim_channel(const RimSpec& spec) {
    check_rim_spec(spec);
    const Complex i_unit(0, 1);
    const Operator u0 = matrix_exp(-i_unit * spec.t * (spec.b + spec.gamma * spec.c));
    const Operator u1 = matrix_exp(-i_unit * spec.t * (-spec.b + spec.gamma * spec.c));
    const Complex phase = std::exp(i_unit * spec.delta_phi);
    const Operator m0 = (u0 - phase * u1) / 2.0;
    const Operator m1 = (u0 + phase * u1) / 2.0;

    RimChannel out{QuantumChannel::from_kraus({m0, m1}),
                   ConditionalMaps{spec.b.rows(),
                                   {kron(m0, m0.conjugate()), kron(m1, m1.conjugate())}}};

    // Mixed-unitary identity: M-hat_0 + M-hat_1 = (U-hat_0 + U-hat_1)/2.
    const SuperOp mixed = (kron(u0, u0.conjugate()) + kron(u1, u1.conjugate())) / 2.0;
    if (max_abs(out.channel.natural() - mixed) > 1e-12)
        throw NumericalError("rim_channel: mixed-unitary identity violated");
    return out;
}

Operator rotation(double phi, double theta) {
    const double c = std::cos(theta / 2.0), s = std::sin(theta / 2.0);
    Operator r(2, 2);
    r << Complex(c, 0), -Complex(0, 1) * std::exp(Complex(0, -phi)) * s,
        -Complex(0, 1) * std::exp(Complex(0, phi)) * s, Complex(c, 0);
    return r;
}

Operator spin_op_at(const Operator& single, int site, int k_total) {
    Operator out = Operator::Identity(1, 1);
    for (int k = 0; k < k_total; ++k)
        out = kron(out, k == site ? (single / 2.0).eval() : identity(2));
    return out;
}

double dipolar_coupling_rad_per_ms(const SpinSystem& sys, int j, int k) {
    const Eigen::Vector3d r = sys.sites[k].position_nm - sys.sites[j].position_nm;
    const double r_nm = r.norm();
    if (r_nm <= 0) throw PreconditionError("spin system: coincident spin positions");
    // mu0/(4 pi) * gamma_n^2 * hbar / r^3, converted to rad/ms with r in nm.
    const double gamma_rad_s = kTwoPi * sys.gyromagnetic_mhz_per_t * 1e6;  // rad/s/T
    constexpr double hbar = 1.054571817e-34;                               // J s
    const double d_rad_s = 1e-7 * gamma_rad_s * gamma_rad_s * hbar / std::pow(r_nm * 1e-9, 3);
    return d_rad_s * 1e-3;
}

SpinBathHamiltonians spin_bath_hamiltonians(const SpinSystem& sys, bool include_zeeman) {
    const int k_total = sys.count();
    if (k_total < 1) throw PreconditionError("spin_bath_hamiltonians: at least one spin");
    if (k_total > 5) throw PreconditionError("spin_bath_hamiltonians: dimension cap is K <= 5");
    const Eigen::Index d = sys.dim();

    const std::array<Operator, 3> sigma = {pauli_x(), pauli_y(), pauli_z()};
    Operator b = Operator::Zero(d, d);
    for (int k = 0; k < k_total; ++k)
        for (int q = 0; q < 3; ++q)
            b += kTwoPi * sys.sites[k].hyperfine_khz(q) * spin_op_at(sigma[q], k, k_total);

    Operator c = Operator::Zero(d, d);
    for (int j = 0; j < k_total; ++j) {
        for (int k = j + 1; k < k_total; ++k) {
            const double d_jk = dipolar_coupling_rad_per_ms(sys, j, k);
            const Eigen::Vector3d r_hat =
                (sys.sites[k].position_nm - sys.sites[j].position_nm).normalized();
            for (int q = 0; q < 3; ++q)
                c += d_jk * spin_op_at(sigma[q], j, k_total) * spin_op_at(sigma[q], k, k_total);
            Operator ij_r = Operator::Zero(d, d), ik_r = Operator::Zero(d, d);
            for (int q = 0; q < 3; ++q) {
                ij_r += r_hat(q) * spin_op_at(sigma[q], j, k_total);
                ik_r += r_hat(q) * spin_op_at(sigma[q], k, k_total);
            }
            c -= 3.0 * d_jk * ij_r * ik_r;
        }
    }
    if (include_zeeman) {
        const double omega_l = kTwoPi * sys.larmor_khz;
        for (int k = 0; k < k_total; ++k) c += omega_l * spin_op_at(pauli_z(), k, k_total);
    }
    return {std::move(b), std::move(c)};
}

DdHamiltonians dd_effective_hamiltonians(const SpinSystem& sys, double delta_omega) {
    const int k_total = sys.count();
    if (k_total < 1) throw PreconditionError("dd_effective_hamiltonians: at least one spin");
    const Eigen::Index d = sys.dim();

    DdHamiltonians out;
    out.b = Operator::Zero(d, d);
    out.c = Operator::Zero(d, d);
    for (int k = 0; k < k_total; ++k) {
        const double ax = kTwoPi * sys.sites[k].hyperfine_khz(0);
        const double ay = kTwoPi * sys.sites[k].hyperfine_khz(1);
        const double a_perp = std::hypot(ax, ay);
        if (a_perp == 0.0) {
            out.dropped_spins.push_back(k);
            continue;
        }
        const double xi = std::atan2(ay, ax);
        out.b += (2.0 / kPi) * a_perp *
                 (std::cos(xi) * spin_op_at(pauli_x(), k, k_total) +
                  std::sin(xi) * spin_op_at(pauli_y(), k, k_total));
    }
    for (int k = 0; k < k_total; ++k)
        out.c += delta_omega * spin_op_at(pauli_z(), k, k_total);
    return out;
}

ConditionalMaps dissipative_rim_maps(const RimSpec& spec, const LindbladSpec& diss) {
    check_rim_spec(spec);
    const Eigen::Index dt = spec.b.rows();  // target dim
    const Eigen::Index dj = 2 * dt;         // joint ancilla (x) target dim
    const Complex i_unit(0, 1);

    for (const auto& [jump, rate] : diss.jumps) {
        if (jump.rows() != dt || jump.cols() != dt)
            throw DimensionError("dissipative_rim_maps: jump operators act on the target");
        if (rate < 0) throw PreconditionError("dissipative_rim_maps: negative rate");
    }

    // Vectorized Lindblad generator on the joint space.
    const Operator h = kron(pauli_z(), spec.b) + spec.gamma * kron(identity(2), spec.c);
    SuperOp gen = -i_unit * (kron(h, identity(dj)) - kron(identity(dj), h.transpose()));
    for (const auto& [jump, rate] : diss.jumps) {
        const Operator l = kron(identity(2), jump);
        const Operator ll = l.adjoint() * l;
        gen += rate * (kron(l, l.conjugate()) -
                       0.5 * (kron(ll, identity(dj)) + kron(identity(dj), ll.transpose())));
    }
    const SuperOp evolve = matrix_exp(gen * spec.t);

    // Ancilla cycle: prepare R_{phi1}(pi/2)|0>, evolve, rotate R_{phi2}(pi/2),
    // project onto |alpha> and trace the ancilla. The maps depend on the
    // phases only through delta_phi, so phi1 = 0, phi2 = -delta_phi.
    const Eigen::Vector2cd psi = rotation(0.0, kPi / 2.0).col(0);
    SuperOp prepare = SuperOp::Zero(dj * dj, dt * dt);
    for (Eigen::Index a = 0; a < 2; ++a)
        for (Eigen::Index ap = 0; ap < 2; ++ap)
            for (Eigen::Index s = 0; s < dt; ++s)
                for (Eigen::Index sp = 0; sp < dt; ++sp)
                    prepare((a * dt + s) * dj + (ap * dt + sp), s * dt + sp) =
                        psi(a) * std::conj(psi(ap));

    const Operator r2 = kron(rotation(-spec.delta_phi, kPi / 2.0), identity(dt));
    const SuperOp rotate = kron(r2, r2.conjugate());

    ConditionalMaps out;
    out.dim = dt;
    for (Eigen::Index alpha = 0; alpha < 2; ++alpha) {
        SuperOp project = SuperOp::Zero(dt * dt, dj * dj);
        for (Eigen::Index s = 0; s < dt; ++s)
            for (Eigen::Index sp = 0; sp < dt; ++sp)
                project(s * dt + sp, (alpha * dt + s) * dj + (alpha * dt + sp)) = 1.0;
        out.maps[alpha] = project * rotate * evolve * prepare;
    }
    return out;
}

}  // namespace metachan
