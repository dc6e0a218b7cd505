#pragma once

#include <array>
#include <functional>

#include "qtraj/ops.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

// deterministic kernel parameters of one quadrature sector
struct SectorParams {
    double a, s, d;
};

// closed forms; eta = 0 means the sector is unmonitored (affine limit)
SectorParams fluorescence_sector_params(double eta, double n_th, double t);

// spec surface: throws at eta = 0 (the filter is undefined, use Lindblad)
std::array<double, 3> fluorescence_params(double eta, double n_th, double t);

// Gaussian kernel filter for fluorescence monitoring of L1=a, L2=ia at
// Gamma1=Gamma2=1. Records follow the SME convention (dy_k from channels
// a and ia); the p-sector consumes -dy2 internally.
struct FluorescenceKernelState {
    double t = 0;
    double xi = 0, theta = 0;  // x sector
    double pi = 0, phi = 0;    // p sector
    double eta1 = 0, eta2 = 0;
    double n_th = 0;

    SectorParams x_params() const { return fluorescence_sector_params(eta1, n_th, t); }
    SectorParams p_params() const { return fluorescence_sector_params(eta2, n_th, t); }
};

FluorescenceKernelState fluorescence_init(double eta1, double eta2, double n_th);
void fluorescence_step(FluorescenceKernelState& st, double dy1, double dy2, double u, double v,
                       double dt);

// initial Wigner functions
struct InitialWignerHandle {
    std::function<double(double, double)> w0;
    double center_x = 0, center_p = 0;
    double std_x = 0.5, std_p = 0.5;  // window scale
};

InitialWignerHandle wigner_coherent(Complex alpha);
InitialWignerHandle wigner_thermal(double n_bar);
InitialWignerHandle wigner_fock(int n);
InitialWignerHandle wigner_cat(Complex alpha);
// quadrature oracle from a truncated-Fock density matrix
double wigner_from_rho(const Operator& rho, double x, double p);

struct GridSpec {
    int points = 201;
    double span_sigmas = 6.0;
};

struct Moments {
    double mean_x, mean_p, var_x, var_p;
    double log_weight;  // log of the unnormalized kernel mass
};

struct WeightedMoments {
    double ex, ep, vx, vp, cxp, logmass;
};

// moments of W0 reweighted by exp(q0^T Z q0 + lin^T R(rot) q0); shared by the
// kernel-moment extractors and the dispersive population reconstruction
WeightedMoments reweighted_initial_moments(const InitialWignerHandle& w0,
                                           const Eigen::Matrix2d& Z, const Eigen::Vector2d& lin,
                                           const GridSpec& grid, double rot = 0.0);

Moments fluorescence_moments(const FluorescenceKernelState& st, const InitialWignerHandle& w0,
                             const GridSpec& grid = {});

// Simultaneous X/P monitoring (Prop.-7 family). S, Z symmetric 2x2; A, R
// kernel columns; Theta, Lambda the stochastic pair.
struct XpKernelState {
    double t = 0;
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d Z = Eigen::Matrix2d::Zero();
    Eigen::Vector2d A{1, 0}, R{0, 1};
    Eigen::Vector2d Theta = Eigen::Vector2d::Zero();
    Eigen::Vector2d Lambda = Eigen::Vector2d::Zero();
    double gamma_x = 0, gamma_p = 0, gamma_l = 0;
    double eta_x = 0, eta_p = 0, delta = 0, n_th = 0;
};

XpKernelState xp_init(double gamma_x, double gamma_p, double gamma_l, double eta_x, double eta_p,
                      double delta, double n_th);
// RK4 on the deterministic block, Euler-Maruyama on (Theta, Lambda)
void xp_step(XpKernelState& st, double dy1, double dy2, double u, double v, double dt);

// corrected closed forms for the Delta=0 diagonal case
struct XpClosedForm {
    double s1, s2, z1, z2, a1, r2;
};
XpClosedForm xp_closed_form(double gamma_x, double gamma_p, double gamma_l, double eta_x,
                            double eta_p, double n_th, double t);

Moments xp_moments(const XpKernelState& st, const InitialWignerHandle& w0,
                   const GridSpec& grid = {});

enum class OscillatorKind { Fluorescence, XP };

struct OscillatorParams {
    // fluorescence: eta1, eta2, n_th (Gamma1=Gamma2=1)
    double eta1 = 0, eta2 = 0, n_th = 0;
    // xp: rates and efficiencies
    double gamma_x = 0, gamma_p = 0, gamma_l = 0, eta_x = 0, eta_p = 0, delta = 0;
};

// truncated-Fock ScenarioModel matching the kernel filters; throws with a
// suggested n_max when rho0 leaks into the top two levels beyond 1e-8
ScenarioModel sme_oscillator_model(OscillatorKind kind, const OscillatorParams& p, int n_max,
                                   const Eigen::VectorXcd& rho0_diag_check);

}  // namespace qtraj
