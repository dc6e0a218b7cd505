#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qtraj/ops.hpp"

namespace qtraj {

struct MeasurementChannel {
    Operator L;    // rate folded into the operator scale
    double eta;    // detection efficiency in [0,1]
};

// Optional time-dependent drive H_d(t) = u(t) U + v(t) V.
struct Drive {
    Operator u_coupling;
    Operator v_coupling;
    std::function<double(double)> u;
    std::function<double(double)> v;
};

struct ScenarioModel {
    int dim = 0;
    Operator H;                            // Hermitian, may be zero
    std::vector<MeasurementChannel> channels;
    std::optional<Drive> drive;
    std::vector<int> factor_dims;          // product must equal dim

    void validate() const;
    Operator hamiltonian_at(double t) const;
    int n_channels() const { return static_cast<int>(channels.size()); }
};

struct IntegrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One realization: per-step increments (optional) and state snapshots.
struct TrajectoryRecord {
    uint64_t seed = 0;
    uint64_t traj_index = 0;
    double dt = 0;
    std::vector<double> snapshot_times;
    std::vector<Operator> snapshots;
    // row-major [step][channel]; empty when increments were not stored
    std::vector<double> dw;
    std::vector<double> dy;
    int n_steps = 0;
    int n_channels = 0;
    // integrator diagnostics
    double min_eigenvalue_seen = 0.0;  // before clipping
    long clip_count = 0;

    double dw_at(int step, int k) const { return dw[size_t(step) * n_channels + k]; }
    double dy_at(int step, int k) const { return dy[size_t(step) * n_channels + k]; }
    // compensated sum of dy over steps [0, n) for channel k
    double integrated_y(int k, int n = -1) const;
};

// F_L + Hamiltonian part:   -i[H,rho] + sum_k (L rho L† - ½{L†L, rho})
TangentVector drift(const ScenarioModel& model, const DensityOperator& rho, double t = 0.0);
// G_L(rho) = L rho + rho L† - Tr(L rho + rho L†) rho
TangentVector diffusion(const MeasurementChannel& ch, const DensityOperator& rho);

struct StepResult {
    std::vector<double> dy;
};

// Euler-Maruyama update in place; returns outputs dy_k computed from the
// pre-step state. Hermitize / renormalize / eigen-clip after the update.
StepResult step_ito(const ScenarioModel& model, DensityOperator& rho, double t, double dt,
                    const std::vector<double>& dw,
                    double* min_eig_out = nullptr, long* clip_count = nullptr);

struct SimulateOptions {
    bool store_increments = false;
    int n_threads = 1;
};

std::vector<TrajectoryRecord> simulate(const ScenarioModel& model, const DensityOperator& rho0,
                                       double T, double dt, uint64_t seed, int n_traj,
                                       const std::vector<double>& snapshot_times,
                                       const SimulateOptions& opts = {});

DensityOperator lindblad_propagate(const ScenarioModel& model, const DensityOperator& rho0,
                                   double T, double dt);

// Replays a record through the filter: dw reconstructed from dy and the
// filter's own running state. Bit-identical to the generating pass when
// rho0 matches the record's initial state.
std::vector<Operator> filter_apply(const ScenarioModel& model, const DensityOperator& rho0,
                                   const TrajectoryRecord& record,
                                   const std::vector<double>& snapshot_times);

}  // namespace qtraj
