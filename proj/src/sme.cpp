#include "qtraj/sme.hpp"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <thread>

#include "qtraj/rng.hpp"

namespace qtraj {

void ScenarioModel::validate() const {
    if (dim <= 0) throw std::invalid_argument("ScenarioModel: dim must be positive");
    if (H.size() != 0) {
        if (H.rows() != dim || H.cols() != dim)
            throw std::invalid_argument("ScenarioModel: H dimension mismatch");
        if (!is_hermitian(H)) throw std::invalid_argument("ScenarioModel: H not Hermitian");
    }
    for (const auto& ch : channels) {
        if (ch.L.rows() != dim || ch.L.cols() != dim)
            throw std::invalid_argument("ScenarioModel: channel dimension mismatch");
        if (ch.eta < 0.0 || ch.eta > 1.0)
            throw std::invalid_argument("ScenarioModel: eta outside [0,1]");
    }
    if (!factor_dims.empty()) {
        long prod = 1;
        for (int d : factor_dims) prod *= d;
        if (prod != dim) throw std::invalid_argument("ScenarioModel: factor_dims product != dim");
    }
}

Operator ScenarioModel::hamiltonian_at(double t) const {
    Operator h = (H.size() != 0) ? H : Operator::Zero(dim, dim);
    if (drive) {
        h = h + drive->u(t) * drive->u_coupling + drive->v(t) * drive->v_coupling;
    }
    return h;
}

double TrajectoryRecord::integrated_y(int k, int n) const {
    if (n < 0) n = n_steps;
    double sum = 0.0, comp = 0.0;  // Kahan
    for (int i = 0; i < n; ++i) {
        double term = dy_at(i, k) - comp;
        double next = sum + term;
        comp = (next - sum) - term;
        sum = next;
    }
    return sum;
}

namespace {

struct ChannelWork {
    Operator L, Ldag, LdagL;
    double eta, sqrt_eta;
};

std::vector<ChannelWork> prepare(const ScenarioModel& model) {
    std::vector<ChannelWork> w;
    w.reserve(model.channels.size());
    for (const auto& ch : model.channels)
        w.push_back({ch.L, ch.L.adjoint(), Operator(ch.L.adjoint() * ch.L), ch.eta,
                     std::sqrt(ch.eta)});
    return w;
}

Operator drift_mat(const ScenarioModel& model, const std::vector<ChannelWork>& chans,
                   const Operator& rho, double t) {
    Operator h = model.hamiltonian_at(t);
    Operator out = Complex(0, -1) * (h * rho - rho * h);
    for (const auto& c : chans) {
        Operator lr = c.L * rho;
        out += lr * c.Ldag;
        Operator anti = c.LdagL * rho;
        out -= 0.5 * (anti + anti.adjoint());
    }
    return out;
}

Operator diffusion_mat(const ChannelWork& c, const Operator& rho) {
    Operator t = c.L * rho + rho * c.Ldag;
    return t - t.trace().real() * rho;
}

// hermitize + trace renormalize + clip negative eigenvalues below -1e-10
void repair(Operator& rho, double* min_eig_out, long* clip_count) {
    rho = 0.5 * (rho + rho.adjoint());
    double tr = rho.trace().real();
    if (!(tr > 0.0) || !rho.allFinite())
        throw IntegrationError("state trace collapsed or became non-finite");
    rho /= tr;
    Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
    double mn = es.eigenvalues().minCoeff();
    if (min_eig_out && mn < *min_eig_out) *min_eig_out = mn;
    if (mn < -kNegEigTol) {
        Eigen::SelfAdjointEigenSolver<Operator> full(rho);
        Eigen::VectorXd ev = full.eigenvalues().cwiseMax(0.0);
        rho = full.eigenvectors() * ev.asDiagonal() * full.eigenvectors().adjoint();
        rho /= rho.trace().real();
        if (clip_count) ++(*clip_count);
    }
}

// One Euler-Maruyama step driven by the outputs dy. The noise actually
// applied is dy_k - sqrt(eta_k) m_k dt, the same expression whether dy came
// from fresh noise or from a replayed record, so replays are bit-identical.
void step_from_outputs(const ScenarioModel& model, const std::vector<ChannelWork>& chans,
                       Operator& r, double t, double dt, const std::vector<double>& dy,
                       double* min_eig_out, long* clip_count) {
    Operator upd = drift_mat(model, chans, r, t + 0.5 * dt) * dt;
    for (size_t k = 0; k < chans.size(); ++k) {
        const auto& c = chans[k];
        if (c.eta > 0.0) {
            Operator two_re = c.L * r + r * c.Ldag;
            double m = two_re.trace().real();
            double dw_used = dy[k] - c.sqrt_eta * m * dt;
            upd += (c.sqrt_eta * dw_used) * (two_re - m * r);
        }
    }
    r += upd;
    repair(r, min_eig_out, clip_count);
}

std::vector<double> outputs_from_noise(const std::vector<ChannelWork>& chans, const Operator& r,
                                       double dt, const std::vector<double>& dw) {
    std::vector<double> dy(chans.size());
    for (size_t k = 0; k < chans.size(); ++k) {
        const auto& c = chans[k];
        double m = (c.L * r + r * c.Ldag).trace().real();
        dy[k] = c.sqrt_eta * m * dt + dw[k];
    }
    return dy;
}

}  // namespace

TangentVector drift(const ScenarioModel& model, const DensityOperator& rho, double t) {
    if (rho.dim() != model.dim) throw std::invalid_argument("drift: dimension mismatch");
    auto chans = prepare(model);
    return make_tangent(hermitize(drift_mat(model, chans, rho.mat(), t)));
}

TangentVector diffusion(const MeasurementChannel& ch, const DensityOperator& rho) {
    if (ch.L.rows() != rho.dim()) throw std::invalid_argument("diffusion: dimension mismatch");
    ChannelWork c{ch.L, ch.L.adjoint(), Operator(ch.L.adjoint() * ch.L), ch.eta,
                  std::sqrt(ch.eta)};
    return make_tangent(hermitize(diffusion_mat(c, rho.mat())));
}

StepResult step_ito(const ScenarioModel& model, DensityOperator& rho, double t, double dt,
                    const std::vector<double>& dw, double* min_eig_out, long* clip_count) {
    if (dt <= 0.0) throw std::invalid_argument("step_ito: dt must be positive");
    if (dw.size() != model.channels.size())
        throw std::invalid_argument("step_ito: one dw per channel required");
    auto chans = prepare(model);
    StepResult res;
    res.dy = outputs_from_noise(chans, rho.mat(), dt, dw);
    step_from_outputs(model, chans, rho.mat(), t, dt, res.dy, min_eig_out, clip_count);
    return res;
}

namespace {

TrajectoryRecord run_one(const ScenarioModel& model, const std::vector<ChannelWork>& chans,
                         const DensityOperator& rho0, double T, double dt, uint64_t seed,
                         uint64_t traj_idx, const std::vector<int>& snap_steps,
                         const std::vector<double>& snapshot_times, bool store_increments) {
    const int n_steps = int(std::llround(T / dt));
    const int nch = int(chans.size());
    TrajectoryRecord rec;
    rec.seed = seed;
    rec.traj_index = traj_idx;
    rec.dt = dt;
    rec.n_steps = n_steps;
    rec.n_channels = nch;
    rec.snapshot_times = snapshot_times;
    if (store_increments) {
        rec.dw.resize(size_t(n_steps) * nch);
        rec.dy.resize(size_t(n_steps) * nch);
    }
    Rng rng(seed, traj_idx);
    DensityOperator rho(rho0.mat(), DensityOperator::Unchecked{});
    std::vector<double> dw(nch);
    const double sdt = std::sqrt(dt);
    rec.min_eigenvalue_seen = 1.0;
    for (int s : snap_steps)
        if (s == 0) rec.snapshots.push_back(rho.mat());
    for (int i = 0; i < n_steps; ++i) {
        for (int k = 0; k < nch; ++k) dw[k] = rng.next_gaussian() * sdt;
        std::vector<double> dy = outputs_from_noise(chans, rho.mat(), dt, dw);
        try {
            step_from_outputs(model, chans, rho.mat(), i * dt, dt, dy, &rec.min_eigenvalue_seen,
                              &rec.clip_count);
        } catch (const IntegrationError& e) {
            throw IntegrationError("trajectory " + std::to_string(traj_idx) + " step " +
                                   std::to_string(i) + ": " + e.what());
        }
        if (store_increments)
            for (int k = 0; k < nch; ++k) {
                rec.dw[size_t(i) * nch + k] = dw[k];
                rec.dy[size_t(i) * nch + k] = dy[k];
            }
        for (int s : snap_steps)
            if (s == i + 1) rec.snapshots.push_back(rho.mat());
    }
    return rec;
}

std::vector<int> snapshot_steps(const std::vector<double>& snapshot_times, double dt, double T) {
    std::vector<int> steps;
    for (double ts : snapshot_times) {
        int s = int(std::llround(ts / dt));
        if (std::abs(s * dt - ts) > 1e-9 * std::max(1.0, T))
            throw std::invalid_argument("snapshot time off the step grid");
        steps.push_back(s);
    }
    return steps;
}

}  // namespace

std::vector<TrajectoryRecord> simulate(const ScenarioModel& model, const DensityOperator& rho0,
                                       double T, double dt, uint64_t seed, int n_traj,
                                       const std::vector<double>& snapshot_times,
                                       const SimulateOptions& opts) {
    model.validate();
    if (T < 0.0) throw std::invalid_argument("simulate: negative horizon");
    std::vector<TrajectoryRecord> out(n_traj);
    if (T == 0.0) {
        for (int i = 0; i < n_traj; ++i) {
            out[i].seed = seed;
            out[i].traj_index = i;
            out[i].dt = dt;
            out[i].snapshot_times = snapshot_times;
            out[i].snapshots.assign(snapshot_times.size(), rho0.mat());
        }
        return out;
    }
    const int n_steps = int(std::llround(T / dt));
    if (std::abs(n_steps * dt - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("simulate: dt does not divide T");
    auto chans = prepare(model);
    auto snap_steps = snapshot_steps(snapshot_times, dt, T);
    int nt = std::max(1, opts.n_threads);
    if (nt == 1) {
        for (int i = 0; i < n_traj; ++i)
            out[i] = run_one(model, chans, rho0, T, dt, seed, i, snap_steps, snapshot_times,
                             opts.store_increments);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errs(nt);
    for (int w = 0; w < nt; ++w)
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    int i = next.fetch_add(1);
                    if (i >= n_traj) break;
                    out[i] = run_one(model, chans, rho0, T, dt, seed, i, snap_steps,
                                     snapshot_times, opts.store_increments);
                }
            } catch (...) {
                errs[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
    return out;
}

DensityOperator lindblad_propagate(const ScenarioModel& model, const DensityOperator& rho0,
                                   double T, double dt) {
    model.validate();
    auto chans = prepare(model);
    const int n_steps = int(std::llround(T / dt));
    if (T > 0 && std::abs(n_steps * dt - T) > 1e-9 * std::max(1.0, T))
        throw std::invalid_argument("lindblad_propagate: dt does not divide T");
    Operator rho = rho0.mat();
    for (int i = 0; i < n_steps; ++i) {
        double t = i * dt;
        Operator k1 = drift_mat(model, chans, rho, t);
        Operator k2 = drift_mat(model, chans, Operator(rho + 0.5 * dt * k1), t + 0.5 * dt);
        Operator k3 = drift_mat(model, chans, Operator(rho + 0.5 * dt * k2), t + 0.5 * dt);
        Operator k4 = drift_mat(model, chans, Operator(rho + dt * k3), t + dt);
        rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!rho.allFinite()) throw IntegrationError("lindblad_propagate: non-finite state");
    }
    rho = hermitize(rho);
    rho /= rho.trace().real();
    return DensityOperator(rho, DensityOperator::Unchecked{});
}

std::vector<Operator> filter_apply(const ScenarioModel& model, const DensityOperator& rho0,
                                   const TrajectoryRecord& record,
                                   const std::vector<double>& snapshot_times) {
    model.validate();
    if (record.n_channels != model.n_channels())
        throw std::invalid_argument("filter_apply: channel count mismatch");
    if (record.dy.empty())
        throw std::invalid_argument("filter_apply: record carries no increments");
    auto chans = prepare(model);
    std::vector<int> snap_steps;
    for (double ts : snapshot_times) {
        int s = int(std::llround(ts / record.dt));
        if (s < 0 || s > record.n_steps)
            throw std::invalid_argument("filter_apply: snapshot outside record");
        snap_steps.push_back(s);
    }
    DensityOperator rho(rho0.mat(), DensityOperator::Unchecked{});
    std::vector<Operator> out;
    std::vector<double> dy(record.n_channels);
    double dt = record.dt;
    for (int s : snap_steps)
        if (s == 0) out.push_back(rho.mat());
    double min_eig = 1.0;
    long clips = 0;
    for (int i = 0; i < record.n_steps; ++i) {
        for (int k = 0; k < record.n_channels; ++k) dy[k] = record.dy_at(i, k);
        step_from_outputs(model, chans, rho.mat(), i * dt, dt, dy, &min_eig, &clips);
        for (int s : snap_steps)
            if (s == i + 1) out.push_back(rho.mat());
    }
    return out;
}

}  // namespace qtraj
