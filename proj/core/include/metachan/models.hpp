#pragma once

// Concrete physical models: Ramsey-interferometry-measurement channels,
// nuclear-spin-bath Hamiltonians, CPMG effective Hamiltonians, and the
// dissipative conditional maps.
//
// Unit convention: frequencies enter configs in kHz and times in ms; internal
// Hamiltonians hold angular frequencies in rad/ms (a 2*pi factor is applied
// on conversion), so omega * t products are dimensionless.

#include <array>
#include <utility>
#include <vector>

#include "metachan/channel.hpp"

namespace metachan {

/// One measurement cycle split by ancilla outcome: completely positive maps
/// E_0, E_1 whose sum is a trace-preserving channel.
struct ConditionalMaps {
    Eigen::Index dim = 0;
    std::array<SuperOp, 2> maps;

    SuperOp sum() const { return maps[0] + maps[1]; }
};

/// Pure-dephasing coupling H = sigma_q^z (x) B + gamma I (x) C probed by a
/// Ramsey cycle of duration t with rotation-phase difference delta_phi.
struct RimSpec {
    Operator b;
    Operator c;
    double gamma = 0.0;
    double delta_phi = 1.5707963267948966;  // pi/2
    double t = 1.0;
};

struct RimChannel {
    QuantumChannel channel;
    ConditionalMaps maps;
};

/// U_alpha = exp(-i t [(-1)^alpha B + gamma C]),
/// M_alpha = [U_0 - (-1)^alpha e^{i delta_phi} U_1] / 2.
RimChannel rim_channel(const RimSpec& spec);

/// Ancilla rotation R_phi(theta) = exp(-i (cos phi sx + sin phi sy) theta/2).
Operator rotation(double phi, double theta);

struct SpinSite {
    Eigen::Vector3d hyperfine_khz = Eigen::Vector3d::Zero();
    Eigen::Vector3d position_nm = Eigen::Vector3d::Zero();
};

struct SpinSystem {
    std::vector<SpinSite> sites;
    double larmor_khz = 0.0;
    double gyromagnetic_mhz_per_t = 10.7084;  // 13C

    int count() const { return static_cast<int>(sites.size()); }
    Eigen::Index dim() const { return Eigen::Index(1) << count(); }
};

/// sigma/2 at one site of a K-spin register (identity elsewhere).
Operator spin_op_at(const Operator& single, int site, int k_total);

/// Dipolar coupling D_jk = mu0 gamma_n^2 hbar / (4 pi r^3) in rad/ms.
double dipolar_coupling_rad_per_ms(const SpinSystem& sys, int j, int k);

struct SpinBathHamiltonians {
    Operator b;  // sum_k A_k . I_k
    Operator c;  // dipolar sum (+ Zeeman when requested)
};

SpinBathHamiltonians spin_bath_hamiltonians(const SpinSystem& sys, bool include_zeeman);

struct DdHamiltonians {
    Operator b;  // (2/pi) sum_k Aperp_k Iperp_k
    Operator c;  // delta_omega sum_k I_k^z
    std::vector<int> dropped_spins;  // sites with vanishing transverse coupling
};

/// First-harmonic rotating-wave effective Hamiltonians for CPMG control;
/// delta_omega in rad/ms.
DdHamiltonians dd_effective_hamiltonians(const SpinSystem& sys, double delta_omega);

struct LindbladSpec {
    std::vector<std::pair<Operator, double>> jumps;  // (L_k, rate in 1/ms)
};

/// Conditional maps of one Ramsey cycle when the target additionally relaxes
/// under the given Lindblad jumps during the evolution window. Gamma = 0
/// reproduces rim_channel's maps.
ConditionalMaps dissipative_rim_maps(const RimSpec& spec, const LindbladSpec& diss);

}  // namespace metachan
