#include "qtraj/multi.hpp"

#include <cmath>

namespace qtraj {

namespace {

// paper-orientation Pauli set for the emission coordinates: standard X, Z
// with |0>=ground carrying sigma_z=+1, and Y flipped (the appendix works in
// the excited-first ordering)
Operator pauliY_paper() {
    Operator m(2, 2);
    m << 0, Complex(0, 1), Complex(0, -1), 0;
    return m;
}

Operator two_qubit(const Operator& a, const Operator& b) { return tensor(a, b); }

struct EmissionOps {
    Operator I4, Xs, Xd, Ys, Yd, Zs, Zd, XYs, XYd, XZs, XZd, YZs, YZd, XX, YY, ZZstar;
};

const EmissionOps& emission_ops() {
    static const EmissionOps ops = [] {
        Operator I2 = identity(2);
        Operator X = pauli('X');
        Operator Y = pauliY_paper();
        Operator Z = pauli('Z');
        Operator Zst = Z - I2;  // displaced Z* = Z - I
        EmissionOps o;
        o.I4 = identity(4);
        o.Xs = two_qubit(X, I2) + two_qubit(I2, X);
        o.Xd = two_qubit(X, I2) - two_qubit(I2, X);
        o.Ys = two_qubit(Y, I2) + two_qubit(I2, Y);
        o.Yd = two_qubit(Y, I2) - two_qubit(I2, Y);
        o.Zs = two_qubit(Zst, I2) + two_qubit(I2, Zst);
        o.Zd = two_qubit(Zst, I2) - two_qubit(I2, Zst);
        o.XYs = two_qubit(X, Y) + two_qubit(Y, X);
        o.XYd = two_qubit(X, Y) - two_qubit(Y, X);
        o.XZs = two_qubit(X, Zst) + two_qubit(Zst, X);
        o.XZd = two_qubit(X, Zst) - two_qubit(Zst, X);
        o.YZs = two_qubit(Y, Zst) + two_qubit(Zst, Y);
        o.YZd = two_qubit(Y, Zst) - two_qubit(Zst, Y);
        o.XX = two_qubit(X, X);
        o.YY = two_qubit(Y, Y);
        o.ZZstar = two_qubit(Zst, Zst);  // = r(ZZ)-r(ZI)-r(IZ)+1
        return o;
    }();
    return ops;
}

double tr(const Operator& rho, const Operator& op) { return (op * rho).trace().real(); }

}  // namespace

ScenarioModel emission_model(double rate, double eta1, double eta2) {
    if (rate <= 0) throw std::invalid_argument("emission_model: rate must be positive");
    Operator sm = sigma_minus();
    Operator I2 = identity(2);
    Operator smA = tensor(sm, I2);
    Operator smB = tensor(I2, sm);
    double c = std::sqrt(rate / 2.0);
    ScenarioModel m;
    m.dim = 4;
    m.H = Operator::Zero(4, 4);
    m.factor_dims = {2, 2};
    m.channels.push_back({c * (smA + smB), eta1});
    m.channels.push_back({Complex(0, 1) * c * (smA - smB), eta2});
    return m;
}

EmissionCoords emission_coords(const Operator& rho) {
    if (rho.rows() != 4) throw std::invalid_argument("emission_coords: two-qubit state required");
    const auto& o = emission_ops();
    EmissionCoords c;
    c.Xs = tr(rho, o.Xs);
    c.Xd = tr(rho, o.Xd);
    c.Ys = tr(rho, o.Ys);
    c.Yd = tr(rho, o.Yd);
    c.Zs = tr(rho, o.Zs);
    c.Zd = tr(rho, o.Zd);
    c.XYs = tr(rho, o.XYs);
    c.XYd = tr(rho, o.XYd);
    c.XZs = tr(rho, o.XZs);
    c.XZd = tr(rho, o.XZd);
    c.YZs = tr(rho, o.YZs);
    c.YZd = tr(rho, o.YZd);
    c.rXX = tr(rho, o.XX);
    c.rYY = tr(rho, o.YY);
    c.ZZstar = tr(rho, o.ZZstar);
    if (std::abs(c.ZZstar) >= 1e-12) {
        double g = c.ZZstar;
        c.B = {c.YZd / g, c.XZs / g, c.rYY / g, c.rXX / g, c.XYd / g,
               c.Zs / g,  c.Xs / g,  c.Yd / g,  1.0 / g};
        c.R = {c.XZd / g, c.YZs / g, c.Zd / g, c.XYs / g, c.Xd / g, c.Ys / g};
    }
    return c;
}

Operator emission_coords_to_rho(const EmissionCoords& c) {
    // recover plain Pauli components from the grouped displaced variables,
    // then rebuild rho in the (paper-oriented) Pauli basis
    Operator rho = Operator::Zero(4, 4);
    double rZI = 0.5 * (c.Zs + c.Zd) + 1.0;
    double rIZ = 0.5 * (c.Zs - c.Zd) + 1.0;
    double rZZ = c.ZZstar + rZI + rIZ - 1.0;
    double rXI = 0.5 * (c.Xs + c.Xd), rIX = 0.5 * (c.Xs - c.Xd);
    double rYI = 0.5 * (c.Ys + c.Yd), rIY = 0.5 * (c.Ys - c.Yd);
    double rXY = 0.5 * (c.XYs + c.XYd), rYX = 0.5 * (c.XYs - c.XYd);
    double rXZ = 0.5 * (c.XZs + c.XZd) + rXI;
    double rZX = 0.5 * (c.XZs - c.XZd) + rIX;
    double rYZ = 0.5 * (c.YZs + c.YZd) + rYI;
    double rZY = 0.5 * (c.YZs - c.YZd) + rIY;
    Operator I2 = identity(2);
    Operator X = pauli('X');
    Operator Y = pauliY_paper();
    Operator Z = pauli('Z');
    auto add = [&rho](double v, const Operator& op) { rho += (v / 4.0) * op; };
    add(1.0, two_qubit(I2, I2));
    add(rXI, two_qubit(X, I2));
    add(rIX, two_qubit(I2, X));
    add(rYI, two_qubit(Y, I2));
    add(rIY, two_qubit(I2, Y));
    add(rZI, two_qubit(Z, I2));
    add(rIZ, two_qubit(I2, Z));
    add(rXY, two_qubit(X, Y));
    add(rYX, two_qubit(Y, X));
    add(rXZ, two_qubit(X, Z));
    add(rZX, two_qubit(Z, X));
    add(rYZ, two_qubit(Y, Z));
    add(rZY, two_qubit(Z, Y));
    add(c.rXX, two_qubit(X, X));
    add(c.rYY, two_qubit(Y, Y));
    add(rZZ, two_qubit(Z, Z));
    return rho;
}

const std::array<const char*, 13> kEmissionVarNames = {
    "tB3", "tB4", "tB5", "tB6", "tB7", "tB8", "tB0", "R1", "R2", "tR3", "tR4", "tR5", "tR6"};

std::optional<EmissionVars> emission_deterministic_vars(const EmissionCoords& c) {
    if (!c.B || !c.R) return std::nullopt;
    const auto& B = *c.B;
    const auto& R = *c.R;
    double B1 = B[0], B2 = B[1], B3 = B[2], B4 = B[3], B5 = B[4], B6 = B[5], B7 = B[6],
           B8 = B[7], B0 = B[8];
    double R1 = R[0], R2 = R[1], R3 = R[2], R4 = R[3], R5 = R[4], R6 = R[5];
    EmissionVars v;
    v[0] = B1 * B1 / 4 + B3;                                            // tB3
    v[1] = B2 * B2 / 4 - B4;                                            // tB4
    v[2] = B1 * B2 / 2 + B5;                                            // tB5
    v[3] = (B1 * B1 + B2 * B2) / 4 + B6;                                // tB6
    v[4] = B4 * B2 - B6 * B2 / 2 - B5 * B1 / 2 - B1 * B1 * B2 / 4 - B2 * B2 * B2 / 4 + B7;
    v[5] = -B3 * B1 - B5 * B2 / 2 - B6 * B1 / 2 - B2 * B2 * B1 / 4 - B1 * B1 * B1 / 4 + B8;
    // quadratic weights (B5^2+B6^2)/4: required for the noise to cancel
    v[6] = (B7 * B2 + B8 * B1) / 2 + (B3 * B3 + B4 * B4) / 2 + (B5 * B5 + B6 * B6) / 4 + B0;
    v[7] = R1;
    v[8] = R2;
    v[9] = -R1 * B2 / 2 - R2 * B1 / 2 + R3;                             // tR3
    v[10] = R1 * B1 / 2 - R2 * B2 / 2 + R4;                             // tR4
    v[11] = -R3 * B2 / 2 - R4 * B1 / 2 + R2 * B1 * B2 / 4 + R1 * B2 * B2 / 8 -
            R1 * B1 * B1 / 8 + R5;                                      // tR5
    v[12] = -R3 * B1 / 2 + R4 * B2 / 2 + R1 * B1 * B2 / 4 + R2 * B1 * B1 / 8 -
            R2 * B2 * B2 / 8 + R6;                                      // tR6
    return v;
}

EmissionVars emission_closed_form(const EmissionVars& init, double eta1, double eta2, double t,
                                  double rate) {
    if (t < 0) throw std::invalid_argument("emission_closed_form: negative time");
    double tau = 0.5 * rate * t;  // closed forms stated in rate-2 units
    auto e = [tau](double k) { return std::exp(k * tau); };
    EmissionVars out;
    out[0] = init[0] * e(2) + 0.5 * eta2 * (e(2) - 1);
    out[1] = init[1] * e(2) + 0.5 * eta1 * (e(2) - 1);
    out[2] = init[2] * e(2);
    out[3] = init[3] * e(2) + 0.5 * (eta1 + eta2) * (e(2) - 1);
    out[4] = init[4] * e(3);
    out[5] = init[5] * e(3);
    double C1 = 2 * eta2 * init[0] + 2 * eta1 * init[1] + (eta1 + eta2) * init[3];
    double C2 = eta1 * eta1 + eta2 * eta2 + 0.5 * (eta1 + eta2) * (eta1 + eta2);
    out[6] = init[6] * e(4) + (C1 + C2) * (e(4) - e(2)) / 2 - C2 * (e(4) - 1) / 4;
    out[7] = init[7] * e(1);
    out[8] = init[8] * e(1);
    out[9] = init[9] * e(2);
    out[10] = init[10] * e(2);
    double c5 = 0.25 * (eta2 - eta1);
    out[11] = (init[11] + c5 * init[7]) * e(3) - c5 * init[7] * e(1);
    double c6 = 0.25 * (eta1 - eta2);
    out[12] = (init[12] + c6 * init[8]) * e(3) - c6 * init[8] * e(1);
    return out;
}

// --- dispersive readout ---

ScenarioModel dispersive_model(int d, const std::vector<double>& omegas, double eta, int n_max) {
    if (d < 2) throw std::invalid_argument("dispersive_model: qudit needs d >= 2");
    if (int(omegas.size()) != d)
        throw std::invalid_argument("dispersive_model: one shift per level");
    if (n_max < 2) throw std::invalid_argument("dispersive_model: n_max too small");
    ScenarioModel m;
    int nc = n_max + 1;
    m.dim = d * nc;
    m.factor_dims = {d, nc};
    Operator b = annihilation(n_max);
    Operator Nc = b.adjoint() * b;
    Operator Hq = Operator::Zero(d, d);
    for (int k = 0; k < d; ++k) Hq(k, k) = omegas[k];
    m.H = tensor(Hq, Nc);
    Operator Id = identity(d);
    m.channels.push_back({tensor(Id, b), eta});
    m.channels.push_back({Complex(0, 1) * tensor(Id, b), eta});
    return m;
}

// the diagonal blocks carry exactly the n_th = 0 fluorescence kernel, so the
// deterministic parameters reuse that code path bit for bit
double DispersiveBlockState::a() const { return fluorescence_sector_params(eta, 0.0, t).a; }

double DispersiveBlockState::s() const { return fluorescence_sector_params(eta, 0.0, t).s; }

double DispersiveBlockState::dpar() const { return fluorescence_sector_params(eta, 0.0, t).d; }

bool DispersiveBlockState::near_singular() const { return std::abs(s() - 0.5) < 1e-10; }

Complex DispersiveBlockState::a_pair(int j, int k) const {
    Complex iw(0, omegas[j] - omegas[k]);
    Complex rate = 1.0 + 0.5 * iw;
    Complex num = (2.0 + iw) * std::exp(-rate * t);
    Complex den = (2.0 - eta + 0.5 * iw) + (eta + 0.5 * iw) * std::exp(-(2.0 + iw) * t);
    return num / den;
}

Complex DispersiveBlockState::s_pair(int j, int k) const {
    Complex iw(0, omegas[j] - omegas[k]);
    return 0.5 * (1.0 - a_pair(j, k) * std::exp(-(1.0 + 0.5 * iw) * t));
}

Complex DispersiveBlockState::d_pair(int j, int k) const {
    Complex iw(0, omegas[j] - omegas[k]);
    Complex rate = 1.0 + 0.5 * iw;
    return a_pair(j, k) * (2.0 * eta + iw) / (2.0 + iw) *
           (std::exp(-rate * t) - std::exp(rate * t));
}

std::array<Complex, 2> DispersiveBlockState::xi_pair(int j, int k) const {
    double w = 0.5 * (omegas[j] - omegas[k]) * t;
    Complex phase = std::exp(Complex(0, -w));
    Eigen::Matrix2cd m1, m2, rp, rm;
    m1 << 1, Complex(0, 1), Complex(0, -1), 1;
    m2 << 1, Complex(0, -1), Complex(0, 1), 1;
    rp << std::cos(w), -std::sin(w), std::sin(w), std::cos(w);
    rm << std::cos(w), std::sin(w), -std::sin(w), std::cos(w);
    Eigen::Vector2cd vk(xi[k], pi[k]), vj(xi[j], pi[j]);
    Eigen::Vector2cd out = (a_pair(j, k) / (2.0 * a())) * phase * (m1 * rp * vk + m2 * rm * vj);
    return {out[0], out[1]};
}

std::array<Complex, 2> DispersiveBlockState::theta_pair(int j, int k) const {
    Complex iw(0, omegas[j] - omegas[k]);
    Complex f = -4.0 * std::exp((1.0 + 0.5 * iw) * t);
    auto xp = xi_pair(j, k);
    return {f * xp[0], f * xp[1]};
}

Complex DispersiveBlockState::log_mu_pair_unnormalized(int j, int k) const {
    Complex iw(0, omegas[j] - omegas[k]);
    auto xp = xi_pair(j, k);
    Complex spair = s_pair(j, k);
    return std::log(a_pair(j, k)) + (1.0 + 0.5 * iw) * t +
           (xp[0] * xp[0] + xp[1] * xp[1]) / (spair - 0.5);
}

DispersiveBlockState dispersive_init(const std::vector<double>& omegas, double eta,
                                     const std::vector<double>& mu0) {
    if (omegas.size() != mu0.size())
        throw std::invalid_argument("dispersive_init: omegas and mu0 sizes differ");
    DispersiveBlockState st;
    st.eta = eta;
    st.omegas = omegas;
    st.mu0 = mu0;
    st.xi.assign(omegas.size(), 0.0);
    st.pi.assign(omegas.size(), 0.0);
    return st;
}

void dispersive_step(DispersiveBlockState& st, double dy1, double dy2, double dt) {
    if (dt <= 0) throw std::invalid_argument("dispersive_step: dt must be positive");
    double at = st.a();
    double coef = -0.5 * at * std::exp(-st.t) * std::sqrt(st.eta);
    for (size_t k = 0; k < st.xi.size(); ++k) {
        double xi = st.xi[k], pi = st.pi[k];
        double dxi = coef * (dy1 - 2 * std::sqrt(st.eta) * xi * dt) +
                     (-xi - st.omegas[k] * pi) * dt;
        double dpi = coef * (dy2 - 2 * std::sqrt(st.eta) * pi * dt) +
                     (-pi + st.omegas[k] * xi) * dt;
        st.xi[k] += dxi;
        st.pi[k] += dpi;
        if (!std::isfinite(st.xi[k]) || !std::isfinite(st.pi[k]))
            throw IntegrationError("dispersive_step: non-finite kernel state");
    }
    st.t += dt;
}

RealVector dispersive_populations(const DispersiveBlockState& st, const InitialWignerHandle& w0,
                                  const GridSpec& grid) {
    const int d = int(st.omegas.size());
    double s = st.s();
    if (st.near_singular() && st.t > 0)
        throw IntegrationError("dispersive_populations: s - 1/2 singular");
    double at = st.a();
    double dp = st.dpar();
    RealVector logp(d);
    for (int k = 0; k < d; ++k) {
        if (st.mu0[k] <= 0.0) {
            logp[k] = -std::numeric_limits<double>::infinity();
            continue;
        }
        double logmu = std::log(st.mu0[k]) + std::log(at) + st.t +
                       (st.xi[k] * st.xi[k] + st.pi[k] * st.pi[k]) / (s - 0.5);
        double th = -4 * std::exp(st.t) * st.xi[k];
        double ze = -4 * std::exp(st.t) * st.pi[k];
        Eigen::Matrix2d Z = dp * Eigen::Matrix2d::Identity();
        WeightedMoments wm = reweighted_initial_moments(w0, Z, Eigen::Vector2d(th, ze), grid,
                                                        st.omegas[k] * st.t);
        logp[k] = logmu + wm.logmass;
    }
    double mx = logp.maxCoeff();
    RealVector p = (logp.array() - mx).exp();
    double total = p.sum();
    if (!(total > 0)) throw IntegrationError("dispersive_populations: weights vanished");
    return p / total;
}

std::vector<RealVector> dispersive_filter_nodrive(const DispersiveBlockState& init,
                                                  const TrajectoryRecord& record,
                                                  const InitialWignerHandle& w0,
                                                  const std::vector<double>& snapshot_times,
                                                  const GridSpec& grid) {
    if (record.n_channels < 2)
        throw std::invalid_argument("dispersive_filter_nodrive: need the two monitored outputs");
    DispersiveBlockState st = init;
    std::vector<int> steps;
    for (double ts : snapshot_times) {
        int s = int(std::llround(ts / record.dt));
        if (s < 0 || s > record.n_steps)
            throw std::invalid_argument("dispersive_filter_nodrive: snapshot outside record");
        steps.push_back(s);
    }
    std::vector<RealVector> out;
    for (int s : steps)
        if (s == 0) out.push_back(dispersive_populations(st, w0, grid));
    for (int i = 0; i < record.n_steps; ++i) {
        dispersive_step(st, record.dy_at(i, 0), record.dy_at(i, 1), record.dt);
        for (int s : steps)
            if (s == i + 1) out.push_back(dispersive_populations(st, w0, grid));
    }
    return out;
}

Operator EffectiveQnd::L1() const {
    int d = int(alpha.size());
    Operator m = Operator::Zero(d, d);
    for (int j = 0; j < d; ++j) m(j, j) = alpha[j].real();
    return m;
}

Operator EffectiveQnd::L2() const {
    int d = int(alpha.size());
    Operator m = Operator::Zero(d, d);
    for (int j = 0; j < d; ++j) m(j, j) = alpha[j].imag();
    return m;
}

EffectiveQnd effective_qnd(const std::vector<Complex>& amplitudes) {
    for (Complex a : amplitudes)
        if (!std::isfinite(a.real()) || !std::isfinite(a.imag()))
            throw std::invalid_argument("effective_qnd: non-finite amplitude");
    return EffectiveQnd{amplitudes};
}

void effective_qnd_evolve(EffectiveQnd& eq, const std::vector<double>& omegas, double u, double v,
                          double dt) {
    if (omegas.size() != eq.alpha.size())
        throw std::invalid_argument("effective_qnd_evolve: shift count mismatch");
    // RK4 on the linear amplitude ODE
    auto rate = [&](Complex a, int k) {
        return Complex(v, -u) + Complex(0, omegas[k]) * a - a;
    };
    for (size_t k = 0; k < eq.alpha.size(); ++k) {
        Complex a = eq.alpha[k];
        Complex k1 = rate(a, int(k));
        Complex k2 = rate(a + 0.5 * dt * k1, int(k));
        Complex k3 = rate(a + 0.5 * dt * k2, int(k));
        Complex k4 = rate(a + dt * k3, int(k));
        eq.alpha[k] = a + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
}

}  // namespace qtraj
