#include "qtraj/qnd.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace qtraj {

ScenarioModel QndModel::to_scenario() const {
    ScenarioModel m;
    m.dim = levels;
    m.H = Operator::Zero(levels, levels);
    for (int k = 0; k < n_homodyne(); ++k) {
        Operator L = Operator::Zero(levels, levels);
        for (int n = 0; n < levels; ++n) L(n, n) = lambda(k, n);
        m.channels.push_back({L, eta[k]});
    }
    if (heterodyne) {
        for (int k = 0; k < n_homodyne(); ++k) {
            Operator L = Operator::Zero(levels, levels);
            for (int n = 0; n < levels; ++n) L(n, n) = Complex(0, lambda(k, n));
            m.channels.push_back({L, eta_het[k]});
        }
    }
    return m;
}

std::vector<AlphaMode> z_alpha_basis(const QndModel& qnd) {
    const int N = qnd.levels;
    if (N < 2) throw std::invalid_argument("z_alpha_basis: need at least two levels");
    // constraint rows: all-ones, plus each lambda row with eta > 0
    std::vector<RealVector> rows;
    rows.push_back(RealVector::Ones(N));
    for (int k = 0; k < qnd.n_homodyne(); ++k)
        if (qnd.eta[k] > 0.0) rows.push_back(qnd.lambda.row(k).transpose());
    Eigen::MatrixXd A(rows.size(), N);
    for (size_t r = 0; r < rows.size(); ++r) A.row(r) = rows[r].transpose();

    // null-space projector, then Gram-Schmidt over canonical directions in
    // lexicographic order (deterministic pivoting)
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
    Eigen::VectorXd sv = svd.singularValues();
    double tol = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    int rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv[i] > tol) ++rank;
    Eigen::MatrixXd null_proj =
        Eigen::MatrixXd::Identity(N, N) - svd.matrixV().leftCols(rank) *
                                              svd.matrixV().leftCols(rank).transpose();
    std::vector<RealVector> basis;
    for (int j = 0; j < N; ++j) {
        RealVector v = null_proj.col(j);
        for (const auto& b : basis) v -= b.dot(v) * b;
        if (v.norm() > 1e-9) basis.push_back(v.normalized());
    }
    // per-level total information rate sum_k lambda_k(b)^2 eta_k
    RealVector rate(N);
    for (int b = 0; b < N; ++b) {
        double s = 0.0;
        for (int k = 0; k < qnd.n_homodyne(); ++k)
            s += qnd.lambda(k, b) * qnd.lambda(k, b) * qnd.eta[k];
        rate[b] = s;
    }
    std::vector<AlphaMode> modes;
    for (auto& v : basis) {
        double s2 = v.dot(rate);
        if (s2 < 0) {
            v = -v;
            s2 = -s2;
        } else if (s2 == 0.0) {
            // sign rule for degenerate modes: first nonzero component positive
            for (int i = 0; i < N; ++i) {
                if (std::abs(v[i]) > 1e-12) {
                    if (v[i] < 0) v = -v;
                    break;
                }
            }
        }
        modes.push_back({v, s2});
    }
    return modes;
}

QndInvariants invariants_of(const QndModel& qnd, const Operator& rho,
                            const std::vector<AlphaMode>& modes) {
    const int N = qnd.levels;
    if (rho.rows() != N) throw std::invalid_argument("invariants_of: dimension mismatch");
    QndInvariants inv;
    for (int a = 0; a < N; ++a)
        for (int b = a + 1; b < N; ++b) {
            double pa = rho(a, a).real(), pb = rho(b, b).real();
            if (pa < kPopulationFloor || pb < kPopulationFloor) {
                inv.phase.push_back(std::nullopt);
                inv.c_ratio.push_back(std::nullopt);
                continue;
            }
            Complex off = rho(a, b);
            inv.phase.push_back(std::arg(off));
            inv.c_ratio.push_back(std::norm(off) / (pa * pb));
        }
    for (const auto& mode : modes) {
        bool ok = true;
        double logz = 0.0, comp = 0.0;
        for (int b = 0; b < N; ++b) {
            double p = rho(b, b).real();
            if (std::abs(mode.alpha[b]) < 1e-14) continue;
            if (p < kPopulationFloor) {
                ok = false;
                break;
            }
            double term = mode.alpha[b] * std::log(p) - comp;
            double next = logz + term;
            comp = (next - logz) - term;
            logz = next;
        }
        inv.log_z.push_back(ok ? std::optional<double>(logz) : std::nullopt);
    }
    return inv;
}

double coherence_decay_rate(const QndModel& qnd, int a, int b) {
    double rate = 0.0;
    for (int k = 0; k < qnd.n_homodyne(); ++k) {
        double d = qnd.lambda(k, a) - qnd.lambda(k, b);
        rate += (1.0 - qnd.eta[k]) * d * d;
        if (qnd.heterodyne) rate += (1.0 - qnd.eta_het[k]) * d * d;
    }
    return rate;
}

RealVector populations_explicit(const QndModel& qnd, const RealVector& rho0_diag,
                                const RealVector& y, double t) {
    const int N = qnd.levels;
    if (rho0_diag.size() != N) throw std::invalid_argument("populations_explicit: bad rho0");
    if (y.size() != qnd.n_homodyne())
        throw std::invalid_argument("populations_explicit: one y per homodyne channel");
    if (t < 0) throw std::invalid_argument("populations_explicit: negative time");
    if (rho0_diag.maxCoeff() <= 0.0)
        throw std::invalid_argument("populations_explicit: all-zero initial populations");
    RealVector logp(N);
    for (int b = 0; b < N; ++b) {
        if (rho0_diag[b] <= 0.0) {
            logp[b] = -std::numeric_limits<double>::infinity();
            continue;
        }
        double expo = 0.0;
        for (int k = 0; k < qnd.n_homodyne(); ++k) {
            double lam = qnd.lambda(k, b);
            expo += 2.0 * (lam * std::sqrt(qnd.eta[k]) * y[k] - lam * lam * qnd.eta[k] * t);
        }
        logp[b] = std::log(rho0_diag[b]) + expo;
    }
    double mx = logp.maxCoeff();
    RealVector p = (logp.array() - mx).exp();
    return p / p.sum();
}

HeterodynePhaseState heterodyne_phase_state(const QndModel& qnd, const TrajectoryRecord& rec) {
    if (!qnd.heterodyne)
        throw std::invalid_argument("heterodyne_phase_state: model has no heterodyne pairing");
    const int kbar = qnd.n_homodyne();
    if (rec.n_channels != 2 * kbar)
        throw std::invalid_argument("heterodyne_phase_state: record channel mismatch");
    HeterodynePhaseState st;
    // quantum-number reading: one stochastic phase from the first iL channel
    st.gamma = std::sqrt(qnd.eta_het[0]) * rec.integrated_y(kbar);

    // conserved combinations: sum_{a<b} beta_ab (lambda_k(a)-lambda_k(b)) = 0
    // for every active heterodyne channel
    const int N = qnd.levels;
    const int npairs = N * (N - 1) / 2;
    std::vector<RealVector> rows;
    for (int k = 0; k < kbar; ++k) {
        if (qnd.eta_het[k] <= 0.0) continue;
        RealVector row(npairs);
        int idx = 0;
        for (int a = 0; a < N; ++a)
            for (int b = a + 1; b < N; ++b) row[idx++] = qnd.lambda(k, a) - qnd.lambda(k, b);
        rows.push_back(row);
    }
    Eigen::MatrixXd A(rows.size(), npairs);
    for (size_t r = 0; r < rows.size(); ++r) A.row(r) = rows[r].transpose();
    Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(npairs, npairs);
    if (!rows.empty()) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
        Eigen::VectorXd sv = svd.singularValues();
        double tol = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
        int rank = 0;
        for (int i = 0; i < sv.size(); ++i)
            if (sv[i] > tol) ++rank;
        proj -= svd.matrixV().leftCols(rank) * svd.matrixV().leftCols(rank).transpose();
    }
    for (int j = 0; j < npairs; ++j) {
        RealVector v = proj.col(j);
        for (const auto& b : st.beta_basis) v -= b.dot(v) * b;
        if (v.norm() > 1e-9) st.beta_basis.push_back(v.normalized());
    }
    return st;
}

RealVector position_posterior(const RealVector& p0, const RealVector& grid, double y_t, double t,
                              double eta) {
    if (p0.size() != grid.size())
        throw std::invalid_argument("position_posterior: grid/distribution size mismatch");
    if (t == 0.0) {
        RealVector p = p0;
        return p / p.sum();
    }
    if (t < 0.0) throw std::invalid_argument("position_posterior: negative time");
    // p_t(x) ∝ p0(x) exp(2 sqrt(eta) x y - 2 eta x^2 t)
    //        = p0(x) exp(-(x - gamma)^2 / (2 sigma^2)) up to x-independent factors,
    // sigma = 1/(2 sqrt(eta t)), gamma = y/(2 sqrt(eta) t)
    RealVector logp(p0.size());
    for (Eigen::Index i = 0; i < p0.size(); ++i) {
        double x = grid[i];
        logp[i] = (p0[i] > 0 ? std::log(p0[i]) : -1e300) +
                  2.0 * std::sqrt(eta) * x * y_t - 2.0 * eta * x * x * t;
    }
    double mx = logp.maxCoeff();
    RealVector p = (logp.array() - mx).exp();
    return p / p.sum();
}

RepetitionModel repetition_model(double eta, double gamma_flip, int n_syndromes) {
    if (eta < 0 || eta > 1) throw std::invalid_argument("repetition_model: eta outside [0,1]");
    if (gamma_flip < 0) throw std::invalid_argument("repetition_model: negative flip rate");
    if (n_syndromes != 2 && n_syndromes != 3)
        throw std::invalid_argument("repetition_model: 2 or 3 syndromes");
    RepetitionModel rm;
    Operator L1 = pauli_string("IZZ");  // compares qubits 2,3
    Operator L2 = pauli_string("ZIZ");  // compares qubits 1,3
    Operator L3 = pauli_string("ZZI");  // compares qubits 1,2
    std::vector<Operator> Ls = (n_syndromes == 3) ? std::vector<Operator>{L1, L2, L3}
                                                  : std::vector<Operator>{L1, L3};
    rm.scenario.dim = 8;
    rm.scenario.H = Operator::Zero(8, 8);
    rm.scenario.factor_dims = {2, 2, 2};
    rm.qnd.levels = 8;
    rm.qnd.lambda.resize(Ls.size(), 8);
    for (size_t k = 0; k < Ls.size(); ++k) {
        rm.scenario.channels.push_back({Ls[k], eta});
        rm.qnd.eta.push_back(eta);
        for (int n = 0; n < 8; ++n) rm.qnd.lambda(int(k), n) = Ls[k](n, n).real();
    }
    if (gamma_flip > 0) {
        const char* flips[3] = {"XII", "IXI", "IIX"};
        for (const char* f : flips)
            rm.scenario.channels.push_back({std::sqrt(gamma_flip) * pauli_string(f), 0.0});
    }
    // V0..V3: all-equal, qubit-1 flipped, qubit-2 flipped, qubit-3 flipped
    rm.subspace_states = {{0b000, 0b111}, {0b100, 0b011}, {0b010, 0b101}, {0b001, 0b110}};
    rm.signatures.resize(4, int(Ls.size()));
    for (int v = 0; v < 4; ++v) {
        Operator P = Operator::Zero(8, 8);
        for (int s : rm.subspace_states[v]) P(s, s) = 1.0;
        rm.projectors.push_back(P);
        for (size_t k = 0; k < Ls.size(); ++k)
            rm.signatures(v, int(k)) = int(std::lround(Ls[k](rm.subspace_states[v][0],
                                                             rm.subspace_states[v][0]).real()));
    }
    return rm;
}

std::optional<double> repetition_conserved_z(const Operator& rho) {
    if (rho.rows() != 8) throw std::invalid_argument("repetition_conserved_z: need 3 qubits");
    double p000 = rho(0b000, 0b000).real();
    double p010 = rho(0b010, 0b010).real();
    double p001 = rho(0b001, 0b001).real();
    double p100 = rho(0b100, 0b100).real();
    if (p001 < kPopulationFloor || p100 < kPopulationFloor) return std::nullopt;
    return p000 * p010 / (p001 * p100);
}

}  // namespace qtraj
