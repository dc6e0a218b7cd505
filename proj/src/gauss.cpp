#include "qtraj/gauss.hpp"

#include <cmath>
#include <stdexcept>

namespace qtraj {

SectorParams fluorescence_sector_params(double eta, double n_th, double t) {
    if (eta < 0 || eta > 1) throw std::invalid_argument("fluorescence params: eta outside [0,1]");
    if (n_th < 0) throw std::invalid_argument("fluorescence params: negative n_th");
    if (t < 0) throw std::invalid_argument("fluorescence params: negative time");
    if (eta == 0.0) {
        // ds/dt = -2s + (1+2 n_th), a' = -(1 + ...)a with s-feedback off
        return {std::exp(-t), 0.5 * (1 + 2 * n_th) * (1 - std::exp(-2 * t)), 0.0};
    }
    double kappa = std::sqrt(1.0 + 4.0 * eta * n_th);
    double em = std::exp(-kappa * t);
    double den = (kappa + 1 - eta) + (kappa - 1 + eta) * em * em;
    double a = 2 * kappa * em / den;
    double r = (kappa - 1 + eta) / (kappa + 1 - eta);
    double s = -(1 - eta) / (2 * eta) +
               (kappa / (2 * eta)) * (1 - r * em * em) / (1 + r * em * em);
    double d = 2 * eta * (em * em - 1) / den;
    return {a, s, d};
}

std::array<double, 3> fluorescence_params(double eta, double n_th, double t) {
    if (eta <= 0.0)
        throw std::invalid_argument("fluorescence_params: eta=0 leaves no filter, use Lindblad");
    SectorParams p = fluorescence_sector_params(eta, n_th, t);
    return {p.a, p.s, p.d};
}

FluorescenceKernelState fluorescence_init(double eta1, double eta2, double n_th) {
    FluorescenceKernelState st;
    st.eta1 = eta1;
    st.eta2 = eta2;
    st.n_th = n_th;
    return st;
}

void fluorescence_step(FluorescenceKernelState& st, double dy1, double dy2, double u, double v,
                       double dt) {
    if (dt <= 0) throw std::invalid_argument("fluorescence_step: dt must be positive");
    SectorParams px = st.x_params();
    SectorParams pp = st.p_params();
    // the monitored record for L2 = i a has mean -2 sqrt(eta) <P>; the kernel
    // equations are written for the opposite orientation
    double dy2k = -dy2;
    double dxi = std::sqrt(st.eta1) * (px.s - 0.5) * dy1 +
                 (v - st.xi - 2 * st.eta1 * (px.s - 0.5) * st.xi) * dt;
    double dth = 2 * std::sqrt(st.eta1) * px.a * dy1 - 4 * st.eta1 * px.a * st.xi * dt;
    double dpi = std::sqrt(st.eta2) * (pp.s - 0.5) * dy2k +
                 (-u - st.pi - 2 * st.eta2 * (pp.s - 0.5) * st.pi) * dt;
    double dph = 2 * std::sqrt(st.eta2) * pp.a * dy2k - 4 * st.eta2 * pp.a * st.pi * dt;
    st.xi += dxi;
    st.theta += dth;
    st.pi += dpi;
    st.phi += dph;
    st.t += dt;
    if (!std::isfinite(st.xi) || !std::isfinite(st.theta) || !std::isfinite(st.pi) ||
        !std::isfinite(st.phi))
        throw IntegrationError("fluorescence_step: non-finite kernel state");
}

InitialWignerHandle wigner_coherent(Complex alpha) {
    double x0 = alpha.real(), p0 = alpha.imag();
    InitialWignerHandle h;
    h.center_x = x0;
    h.center_p = p0;
    h.std_x = h.std_p = 0.5;
    h.w0 = [x0, p0](double x, double p) {
        return (2.0 / M_PI) * std::exp(-2 * ((x - x0) * (x - x0) + (p - p0) * (p - p0)));
    };
    return h;
}

InitialWignerHandle wigner_thermal(double n_bar) {
    if (n_bar < 0) throw std::invalid_argument("wigner_thermal: negative occupation");
    double var = 0.25 * (1 + 2 * n_bar);
    InitialWignerHandle h;
    h.std_x = h.std_p = std::sqrt(var);
    h.w0 = [var](double x, double p) {
        return std::exp(-(x * x + p * p) / (2 * var)) / (2 * M_PI * var);
    };
    return h;
}

InitialWignerHandle wigner_fock(int n) {
    if (n < 0) throw std::invalid_argument("wigner_fock: negative level");
    InitialWignerHandle h;
    h.std_x = h.std_p = std::sqrt(0.25 * (1 + 2 * n));
    h.w0 = [n](double x, double p) {
        double r2 = 4 * (x * x + p * p);
        // Laguerre L_n via recurrence
        double lm1 = 0.0, l = 1.0;
        for (int k = 1; k <= n; ++k) {
            double next = ((2 * k - 1 - r2) * l - (k - 1) * lm1) / k;
            lm1 = l;
            l = next;
        }
        double sign = (n % 2 == 0) ? 1.0 : -1.0;
        return (2.0 / M_PI) * sign * l * std::exp(-r2 / 2);
    };
    return h;
}

InitialWignerHandle wigner_cat(Complex alpha) {
    double ax = alpha.real(), ap = alpha.imag();
    double norm = 2.0 * (1.0 + std::exp(-2.0 * std::norm(alpha)));
    InitialWignerHandle h;
    h.center_x = 0;
    h.center_p = 0;
    h.std_x = std::sqrt(0.25 + ax * ax);
    h.std_p = std::sqrt(0.25 + ap * ap);
    h.w0 = [ax, ap, norm](double x, double p) {
        double g1 = std::exp(-2 * ((x - ax) * (x - ax) + (p - ap) * (p - ap)));
        double g2 = std::exp(-2 * ((x + ax) * (x + ax) + (p + ap) * (p + ap)));
        double cross = 2 * std::exp(-2 * (x * x + p * p)) * std::cos(4 * (x * ap - p * ax));
        return (2.0 / M_PI) * (g1 + g2 + cross) / norm;
    };
    return h;
}

double wigner_from_rho(const Operator& rho, double x, double p) {
    int n_max = int(rho.rows()) - 1;
    Operator d = displacement_op(n_max, Complex(x, p));
    Operator par = parity_op(n_max);
    return (2.0 / M_PI) * (par * d.adjoint() * rho * d).trace().real();
}

// first and second moments of
//   w(q0) = W0(q0) exp(q0^T Z q0 + lin^T R(rot) q0)
// computed in log space on a 6-sigma grid around the initial state
WeightedMoments reweighted_initial_moments(const InitialWignerHandle& w0,
                                           const Eigen::Matrix2d& Z, const Eigen::Vector2d& lin,
                                           const GridSpec& grid, double rot) {
    const int n = grid.points;
    double lx = w0.center_x - grid.span_sigmas * w0.std_x;
    double hx = w0.center_x + grid.span_sigmas * w0.std_x;
    double lp = w0.center_p - grid.span_sigmas * w0.std_p;
    double hp = w0.center_p + grid.span_sigmas * w0.std_p;
    double ddx = (hx - lx) / (n - 1), ddp = (hp - lp) / (n - 1);
    double cr = std::cos(rot), sr = std::sin(rot);
    auto expo = [&](double x0, double p0) {
        double xr = cr * x0 - sr * p0, pr = sr * x0 + cr * p0;
        return Z(0, 0) * x0 * x0 + Z(1, 1) * p0 * p0 + 2 * Z(0, 1) * x0 * p0 + lin[0] * xr +
               lin[1] * pr;
    };
    double mx = -1e300;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double e = expo(lx + i * ddx, lp + j * ddp);
            if (e > mx) mx = e;
        }
    double s = 0, sx = 0, sp = 0, sxx = 0, spp = 0, sxp = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double x0 = lx + i * ddx, p0 = lp + j * ddp;
            double w = w0.w0(x0, p0) * std::exp(expo(x0, p0) - mx);
            s += w;
            sx += w * x0;
            sp += w * p0;
            sxx += w * x0 * x0;
            spp += w * p0 * p0;
            sxp += w * x0 * p0;
        }
    if (!(s > 0) || !std::isfinite(s))
        throw IntegrationError("moments: reweighted kernel mass vanished");
    WeightedMoments out;
    out.ex = sx / s;
    out.ep = sp / s;
    out.vx = sxx / s - out.ex * out.ex;
    out.vp = spp / s - out.ep * out.ep;
    out.cxp = sxp / s - out.ex * out.ep;
    out.logmass = std::log(s * ddx * ddp) + mx;
    return out;
}

Moments fluorescence_moments(const FluorescenceKernelState& st, const InitialWignerHandle& w0,
                             const GridSpec& grid) {
    SectorParams px = st.x_params();
    SectorParams pp = st.p_params();
    Eigen::Matrix2d Z = Eigen::Matrix2d::Zero();
    Z(0, 0) = px.d;
    Z(1, 1) = pp.d;
    WeightedMoments wm =
        reweighted_initial_moments(w0, Z, Eigen::Vector2d(st.theta, st.phi), grid);
    Moments m;
    m.mean_x = px.a * wm.ex + st.xi;
    m.mean_p = pp.a * wm.ep + st.pi;
    m.var_x = px.a * px.a * wm.vx + px.s / 2;
    m.var_p = pp.a * pp.a * wm.vp + pp.s / 2;
    m.log_weight = wm.logmass;
    return m;
}

XpKernelState xp_init(double gamma_x, double gamma_p, double gamma_l, double eta_x, double eta_p,
                      double delta, double n_th) {
    XpKernelState st;
    st.gamma_x = gamma_x;
    st.gamma_p = gamma_p;
    st.gamma_l = gamma_l;
    st.eta_x = eta_x;
    st.eta_p = eta_p;
    st.delta = delta;
    st.n_th = n_th;
    return st;
}

namespace {

Eigen::Matrix2d xp_M(const XpKernelState& st, double t) {
    double c = std::cos(st.delta * t), s = std::sin(st.delta * t);
    double ex = st.eta_x * st.gamma_x, ep = st.eta_p * st.gamma_p;
    Eigen::Matrix2d m;
    m << ex * c * c + ep * s * s, (ex - ep) * s * c, (ex - ep) * s * c, ep * c * c + ex * s * s;
    return m;
}

Eigen::Matrix2d xp_N(const XpKernelState& st, double t) {
    double c = std::cos(st.delta * t), s = std::sin(st.delta * t);
    Eigen::Matrix2d m;
    m << st.gamma_p * c * c + st.gamma_x * s * s, (st.gamma_p - st.gamma_x) * s * c,
        (st.gamma_p - st.gamma_x) * s * c, st.gamma_x * c * c + st.gamma_p * s * s;
    return m;
}

}  // namespace

void xp_step(XpKernelState& st, double dy1, double dy2, double u, double v, double dt) {
    if (dt <= 0) throw std::invalid_argument("xp_step: dt must be positive");
    const double gl = st.gamma_l, nth = st.n_th;
    auto dS = [&](const Eigen::Matrix2d& S, double t) -> Eigen::Matrix2d {
        return -gl * S + 0.5 * (1 + 2 * nth) * gl * Eigen::Matrix2d::Identity() -
               2.0 * S * xp_M(st, t) * S + 0.5 * xp_N(st, t);
    };
    auto dV = [&](const Eigen::Matrix2d& S, const Eigen::Vector2d& x, double t) -> Eigen::Vector2d {
        return -0.5 * gl * x - 2.0 * S * xp_M(st, t) * x;
    };
    double t = st.t;
    // RK4 on the deterministic block (S, A, R, Z)
    Eigen::Matrix2d k1S = dS(st.S, t);
    Eigen::Vector2d k1A = dV(st.S, st.A, t), k1R = dV(st.S, st.R, t);
    Eigen::Matrix2d S2 = st.S + 0.5 * dt * k1S;
    Eigen::Matrix2d k2S = dS(S2, t + 0.5 * dt);
    Eigen::Vector2d k2A = dV(S2, st.A + 0.5 * dt * k1A, t + 0.5 * dt);
    Eigen::Vector2d k2R = dV(S2, st.R + 0.5 * dt * k1R, t + 0.5 * dt);
    Eigen::Matrix2d S3 = st.S + 0.5 * dt * k2S;
    Eigen::Matrix2d k3S = dS(S3, t + 0.5 * dt);
    Eigen::Vector2d k3A = dV(S3, st.A + 0.5 * dt * k2A, t + 0.5 * dt);
    Eigen::Vector2d k3R = dV(S3, st.R + 0.5 * dt * k2R, t + 0.5 * dt);
    Eigen::Matrix2d S4 = st.S + dt * k3S;
    Eigen::Matrix2d k4S = dS(S4, t + dt);
    Eigen::Vector2d k4A = dV(S4, st.A + dt * k3A, t + dt);
    Eigen::Vector2d k4R = dV(S4, st.R + dt * k3R, t + dt);
    auto zrate = [&](const Eigen::Vector2d& A, const Eigen::Vector2d& R,
                     double tt) -> Eigen::Matrix2d {
        Eigen::Matrix2d AR;
        AR.col(0) = A;
        AR.col(1) = R;
        return -2.0 * AR.transpose() * xp_M(st, tt) * AR;
    };
    Eigen::Matrix2d k1Z = zrate(st.A, st.R, t);
    Eigen::Matrix2d k2Z = zrate(st.A + 0.5 * dt * k1A, st.R + 0.5 * dt * k1R, t + 0.5 * dt);
    Eigen::Matrix2d k3Z = zrate(st.A + 0.5 * dt * k2A, st.R + 0.5 * dt * k2R, t + 0.5 * dt);
    Eigen::Matrix2d k4Z = zrate(st.A + dt * k3A, st.R + dt * k3R, t + dt);

    // Euler-Maruyama on the stochastic pair, coefficients at the left endpoint
    double c = std::cos(st.delta * t), s = std::sin(st.delta * t);
    double rx = std::sqrt(st.eta_x * st.gamma_x), rp = std::sqrt(st.eta_p * st.gamma_p);
    Eigen::Vector2d mix(rx * c * dy1 - rp * s * dy2, rx * s * dy1 + rp * c * dy2);
    Eigen::Matrix2d M = xp_M(st, t);
    Eigen::Vector2d dTheta =
        (-0.5 * gl * st.Theta + Eigen::Vector2d(v, -u) - 2.0 * st.S * M * st.Theta) * dt +
        st.S * mix;
    Eigen::Vector2d dLambda =
        (0.5 * gl * st.Lambda + 2.0 * M * st.S * st.Lambda - 4.0 * M * st.Theta) * dt + 2.0 * mix;

    st.S += (dt / 6.0) * (k1S + 2 * k2S + 2 * k3S + k4S);
    st.A += (dt / 6.0) * (k1A + 2 * k2A + 2 * k3A + k4A);
    st.R += (dt / 6.0) * (k1R + 2 * k2R + 2 * k3R + k4R);
    st.Z += (dt / 6.0) * (k1Z + 2 * k2Z + 2 * k3Z + k4Z);
    st.Theta += dTheta;
    st.Lambda += dLambda;
    st.t += dt;
    if (!st.S.allFinite() || !st.Theta.allFinite() || !st.Lambda.allFinite())
        throw IntegrationError("xp_step: non-finite kernel state");
}

namespace {

// scalar Riccati s' = -2 E s^2 - gl s + C, s(0)=0, plus the linear a and the
// quadrature z it drives
void riccati_sector(double E, double C, double gl, double t, double& s, double& a, double& z) {
    if (E > 0) {
        double k = std::sqrt(gl * gl / 4 + 2 * E * C);
        double em = std::exp(-2 * k * t);
        double den = (k + gl / 2) + (k - gl / 2) * em;
        s = C * (1 - em) / den;
        a = 2 * k * std::exp(-k * t) / den;
        z = 2 * E * (em - 1) / den;
    } else {
        s = (gl > 0) ? C / gl * (1 - std::exp(-gl * t)) : C * t;
        a = std::exp(-gl * t / 2);
        z = 0.0;
    }
}

}  // namespace

XpClosedForm xp_closed_form(double gamma_x, double gamma_p, double gamma_l, double eta_x,
                            double eta_p, double n_th, double t) {
    XpClosedForm out;
    double C1 = 0.5 * (gamma_l * (1 + 2 * n_th) + gamma_p);
    double C2 = 0.5 * (gamma_l * (1 + 2 * n_th) + gamma_x);
    riccati_sector(eta_x * gamma_x, C1, gamma_l, t, out.s1, out.a1, out.z1);
    riccati_sector(eta_p * gamma_p, C2, gamma_l, t, out.s2, out.r2, out.z2);
    return out;
}

Moments xp_moments(const XpKernelState& st, const InitialWignerHandle& w0, const GridSpec& grid) {
    // kernel: exp(-J^T S^-1 J + q0^T Z q0 + Lambda^T (A R) q0),
    // J = q - (A R) q0 - Theta; the q-Gaussian has covariance S/2
    Eigen::Matrix2d AR;
    AR.col(0) = st.A;
    AR.col(1) = st.R;
    Eigen::Vector2d lin = AR.transpose() * st.Lambda;
    WeightedMoments wm = reweighted_initial_moments(w0, st.Z, lin, grid);
    Eigen::Vector2d eq0(wm.ex, wm.ep);
    Eigen::Matrix2d cov0;
    cov0 << wm.vx, wm.cxp, wm.cxp, wm.vp;
    Eigen::Vector2d mean = AR * eq0 + st.Theta;
    Eigen::Matrix2d cov = AR * cov0 * AR.transpose() + 0.5 * st.S;
    Moments m;
    m.mean_x = mean[0];
    m.mean_p = mean[1];
    m.var_x = cov(0, 0);
    m.var_p = cov(1, 1);
    m.log_weight = wm.logmass;
    return m;
}

ScenarioModel sme_oscillator_model(OscillatorKind kind, const OscillatorParams& p, int n_max,
                                   const Eigen::VectorXcd& rho0_diag_check) {
    if (n_max < 2) throw std::invalid_argument("sme_oscillator_model: n_max too small");
    if (rho0_diag_check.size() == n_max + 1) {
        double tail = std::norm(rho0_diag_check[n_max]) + std::norm(rho0_diag_check[n_max - 1]);
        if (tail > 1e-8) {
            int suggestion = n_max;
            // grow until a coherent-tail heuristic puts the weight below 1e-8
            while (suggestion < 4 * n_max) suggestion += 4;
            throw std::invalid_argument(
                "sme_oscillator_model: initial state keeps " + std::to_string(tail) +
                " in the top two Fock levels; raise n_max (try " + std::to_string(suggestion) +
                ")");
        }
    }
    ScenarioModel m;
    m.dim = n_max + 1;
    m.H = Operator::Zero(m.dim, m.dim);
    Operator a = annihilation(n_max);
    if (kind == OscillatorKind::Fluorescence) {
        m.channels.push_back({a, p.eta1});
        m.channels.push_back({Complex(0, 1) * a, p.eta2});
        if (p.n_th > 0) {
            m.channels.push_back({std::sqrt(2 * p.n_th) * a, 0.0});
            m.channels.push_back({std::sqrt(2 * p.n_th) * a.adjoint(), 0.0});
        }
    } else {
        if (p.delta != 0)
            m.H = p.delta * (a.adjoint() * a).eval();
        if (p.gamma_x > 0) m.channels.push_back({std::sqrt(p.gamma_x) * position_op(n_max), p.eta_x});
        if (p.gamma_p > 0) m.channels.push_back({std::sqrt(p.gamma_p) * momentum_op(n_max), p.eta_p});
        if (p.gamma_l > 0) {
            m.channels.push_back({std::sqrt(p.gamma_l * (1 + p.n_th)) * a, 0.0});
            if (p.n_th > 0)
                m.channels.push_back({std::sqrt(p.gamma_l * p.n_th) * a.adjoint(), 0.0});
        }
    }
    return m;
}

}  // namespace qtraj
