#pragma once

#include <array>
#include <optional>

#include "qtraj/gauss.hpp"
#include "qtraj/ops.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

// --- indistinguishable emission, two qubits ---

// L1 = sqrt(rate)(s-A + s-B)/sqrt(2), L2 = i sqrt(rate)(s-A - s-B)/sqrt(2).
// rate = 2 reproduces the normalization the closed forms are stated in.
ScenarioModel emission_model(double rate, double eta1, double eta2);

// grouped Pauli coordinates with displaced Z (Z* = Z - I per qubit) and the
// paper's Y orientation; B/R normalized by 4 rho(ee,ee)
struct EmissionCoords {
    double Xs, Xd, Ys, Yd, Zs, Zd;
    double XYs, XYd, XZs, XZd, YZs, YZd;
    double rXX, rYY, ZZstar;  // ZZstar = r(ZZ)-r(ZI)-r(IZ)+1 = 4 rho_ee
    std::optional<std::array<double, 9>> B;  // B1..B8, B0; absent when |ZZstar| < 1e-12
    std::optional<std::array<double, 6>> R;  // R1..R6
};

EmissionCoords emission_coords(const Operator& rho);
Operator emission_coords_to_rho(const EmissionCoords& c);

// order: tB3 tB4 tB5 tB6 tB7 tB8 tB0 R1 R2 tR3 tR4 tR5 tR6
using EmissionVars = std::array<double, 13>;
extern const std::array<const char*, 13> kEmissionVarNames;

std::optional<EmissionVars> emission_deterministic_vars(const EmissionCoords& c);

// closed-form propagation of the 13 deterministic variables; rate rescales
// time onto the rate-2 normalization the laws are stated in
EmissionVars emission_closed_form(const EmissionVars& init, double eta1, double eta2, double t,
                                  double rate = 2.0);

// --- dispersive qudit readout through a monitored oscillator ---

// H = sum_k omega_k |k><k| x b†b with omega_k = chi (Q_A)_kk, channels b and
// ib at efficiency eta each (total damping 2 F_b)
ScenarioModel dispersive_model(int d, const std::vector<double>& omegas, double eta, int n_max);

struct DispersiveBlockState {
    double t = 0;
    double eta = 0;
    std::vector<double> omegas;  // per level
    std::vector<double> xi, pi;  // stochastic kernel means per level
    std::vector<double> mu0;     // initial level weights Tr(rho_{0,(k,k)})

    // deterministic kernel parameters shared by the diagonal blocks
    double a() const;
    double s() const;
    double dpar() const;
    // off-diagonal closed relations (complex parameters)
    Complex a_pair(int j, int k) const;
    Complex s_pair(int j, int k) const;
    Complex d_pair(int j, int k) const;
    std::array<Complex, 2> xi_pair(int j, int k) const;   // (xi_jk, pi_jk)
    std::array<Complex, 2> theta_pair(int j, int k) const;
    Complex log_mu_pair_unnormalized(int j, int k) const;
    bool near_singular() const;  // s - 1/2 within 1e-10 of 0
};

DispersiveBlockState dispersive_init(const std::vector<double>& omegas, double eta,
                                     const std::vector<double>& mu0);
void dispersive_step(DispersiveBlockState& st, double dy1, double dy2, double dt);

// normalized level populations from the mu relation and a quadrature over
// the initial cavity Wigner function (shared across levels)
RealVector dispersive_populations(const DispersiveBlockState& st, const InitialWignerHandle& w0,
                                  const GridSpec& grid = {});

// run the filter along a record from the bipartite SME (channels b, ib)
std::vector<RealVector> dispersive_filter_nodrive(const DispersiveBlockState& init,
                                                  const TrajectoryRecord& record,
                                                  const InitialWignerHandle& w0,
                                                  const std::vector<double>& snapshot_times,
                                                  const GridSpec& grid = {});

// --- asymptotic effective QND channels ---

struct EffectiveQnd {
    std::vector<Complex> alpha;  // per-level coherent amplitudes
    // L1(t) = sum_j xi_j |j><j|, L2(t) = sum_j pi_j |j><j|
    Operator L1() const;
    Operator L2() const;
};

EffectiveQnd effective_qnd(const std::vector<Complex>& amplitudes);
// d alpha/dt = (v - i u) + i omega_k alpha - alpha
void effective_qnd_evolve(EffectiveQnd& eq, const std::vector<double>& omegas, double u, double v,
                          double dt);

}  // namespace qtraj
