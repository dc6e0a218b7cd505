#pragma once

#include <optional>
#include <vector>

#include "qtraj/ops.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

// All channels diagonal in one shared basis: L_k = sum_n lambda_k(n) |n><n|.
// Heterodyne pairing appends channels L_{kbar+k} = i L_k.
struct QndModel {
    int levels = 0;
    Eigen::MatrixXd lambda;       // homodyne rows: k x N
    std::vector<double> eta;      // per homodyne row
    bool heterodyne = false;      // add iL_k partners
    std::vector<double> eta_het;  // efficiencies of the iL_k partners

    int n_homodyne() const { return int(lambda.rows()); }
    ScenarioModel to_scenario() const;
};

struct AlphaMode {
    RealVector alpha;     // sum alpha_b = 0, orthogonal to active lambda rows
    double sigma2;        // decay rate of log z is 2 sigma^2
};

// Orthonormal basis of population exponents with deterministic decay,
// lexicographically pivoted for reproducibility; sign fixed so sigma^2 >= 0.
std::vector<AlphaMode> z_alpha_basis(const QndModel& qnd);

struct QndInvariants {
    // index (a,b) flattened a<b; absent when a population sits under the floor
    std::vector<std::optional<double>> phase;      // arg rho(a,b)
    std::vector<std::optional<double>> c_ratio;    // |rho(a,b)|^2/(rho_aa rho_bb)
    std::vector<std::optional<double>> log_z;      // per alpha mode
};

constexpr double kPopulationFloor = 1e-12;

QndInvariants invariants_of(const QndModel& qnd, const Operator& rho,
                            const std::vector<AlphaMode>& modes);

double coherence_decay_rate(const QndModel& qnd, int a, int b);

// Explicit populations from integrated signals (Bayesian-normalized,
// log-space). y has one entry per homodyne channel.
RealVector populations_explicit(const QndModel& qnd, const RealVector& rho0_diag,
                                const RealVector& y, double t);

struct HeterodynePhaseState {
    double gamma;                      // single stochastic phase, number-model reading
    std::vector<RealVector> beta_basis;  // conserved phase combinations, flattened (a<b)
};

// gamma_t = sqrt(eta) y_2(t) for the quantum-number model; also returns the
// conserved beta-combination basis of off-diagonal phases
HeterodynePhaseState heterodyne_phase_state(const QndModel& qnd, const TrajectoryRecord& rec);

// p_t(x) on a uniform grid for continuous position QND monitoring
RealVector position_posterior(const RealVector& p0, const RealVector& grid, double y_t, double t,
                              double eta);

// 3-qubit repetition code
struct RepetitionModel {
    ScenarioModel scenario;
    QndModel qnd;                  // the syndrome channels in the canonical basis
    std::vector<Operator> projectors;  // V0..V3
    Eigen::MatrixXi signatures;        // 4 x n_syndromes eigenvalue table
    std::vector<std::array<int, 2>> subspace_states;  // canonical indices per V_j
};

// n_syndromes = 3 keeps (L1,L2,L3); n_syndromes = 2 omits L2 (qubits 1,3)
RepetitionModel repetition_model(double eta, double gamma_flip, int n_syndromes = 3);

// z = rho(000,000) rho(010,010) / (rho(001,001) rho(100,100))
std::optional<double> repetition_conserved_z(const Operator& rho);

}  // namespace qtraj
