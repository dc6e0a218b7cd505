#include "qtraj/scenarios.hpp"

#include <cmath>

namespace qtraj {

QutritScenario qutrit_scenario(QutritVariant v, double eta, double omega_rabi) {
    QutritScenario sc;
    sc.qnd.levels = 3;
    if (v == QutritVariant::Two) {
        sc.qnd.lambda.resize(2, 3);
        sc.qnd.lambda << 0, 1, 1.8, 0, 1, 0.2;
        sc.qnd.eta = {eta, eta};
    } else {
        sc.qnd.lambda.resize(1, 3);
        sc.qnd.lambda << 0, 1, 1.8;
        sc.qnd.eta = {eta};
    }
    sc.model = sc.qnd.to_scenario();
    if (v == QutritVariant::Rabi) {
        Operator H = Operator::Zero(3, 3);
        H(0, 1) = omega_rabi;
        H(1, 0) = omega_rabi;
        sc.model.H = H;
    }
    Eigen::VectorXcd psi(3);
    psi << std::sqrt(0.3), std::sqrt(0.55), std::sqrt(0.15);
    sc.rho0 = DensityOperator(psi * psi.adjoint());
    return sc;
}

RepetitionScenario repetition_scenario(int n_syndromes, double eta, double gamma_flip) {
    RepetitionScenario sc{repetition_model(eta, gamma_flip, n_syndromes),
                          DensityOperator(Operator::Identity(8, 8) / 8.0)};
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(8);
    psi[0b000] = std::sqrt(0.5);
    psi[0b111] = std::sqrt(0.3);
    psi[0b100] = std::sqrt(0.08);
    psi[0b010] = std::sqrt(0.05) * std::exp(Complex(0, M_PI / 5));
    psi[0b001] = std::sqrt(0.04);
    psi[0b011] = std::sqrt(0.03);
    sc.rho0 = DensityOperator(psi * psi.adjoint());
    return sc;
}

OscillatorScenario oscillator_scenario(OscillatorPanel panel, int n_max) {
    OscillatorScenario sc;
    sc.n_max = n_max;
    sc.cat_alpha = 2.0;
    Eigen::VectorXcd psi = cat_state(n_max, sc.cat_alpha);
    sc.params.eta1 = 0.8;
    sc.params.eta2 = (panel == OscillatorPanel::HomodyneCat ||
                      panel == OscillatorPanel::HomodyneThermalCat)
                         ? 0.0
                         : 0.0;
    sc.params.n_th = (panel == OscillatorPanel::HomodyneThermalCat) ? 2.3 : 0.0;
    sc.model = sme_oscillator_model(OscillatorKind::Fluorescence, sc.params, n_max, psi);
    if (panel == OscillatorPanel::HomodyneCat) {
        // coherent drive H = u (a + a†)
        Drive d;
        d.u_coupling = annihilation(n_max) + creation(n_max);
        d.v_coupling = Complex(0, -1) * (annihilation(n_max) - creation(n_max));
        d.u = [](double) { return 0.5; };
        d.v = [](double) { return 0.0; };
        sc.model.drive = d;
    }
    if (panel == OscillatorPanel::KerrCat) {
        Operator a = annihilation(n_max);
        Operator aad = a * a.adjoint();
        sc.model.H = hermitize(aad * aad);
    }
    sc.rho0 = DensityOperator(psi * psi.adjoint());
    return sc;
}

EmissionScenario emission_scenario(double eta1, double eta2) {
    EmissionScenario sc;
    sc.rate = 2.0;
    sc.eta1 = eta1;
    sc.eta2 = eta2;
    sc.model = emission_model(sc.rate, eta1, eta2);
    // fixed full-rank state with weight on the doubly-excited level so the
    // normalized coordinates stay well-conditioned over the run
    Eigen::VectorXcd psi(4);
    psi << std::sqrt(0.15) * std::exp(Complex(0, 0.3)), std::sqrt(0.2),
        std::sqrt(0.25) * std::exp(Complex(0, -0.7)), std::sqrt(0.4);
    Operator rho = 0.85 * (psi * psi.adjoint()).eval() + 0.15 * Operator::Identity(4, 4) / 4.0;
    sc.rho0 = DensityOperator(rho);
    return sc;
}

DispersiveScenario dispersive_scenario(int n_max, double eta) {
    DispersiveScenario sc;
    sc.n_max = n_max;
    sc.eta = eta;
    sc.omegas = {2.0, -2.0};
    sc.alpha0 = 0.8;
    sc.qudit_pops = {0.4, 0.6};
    sc.model = dispersive_model(2, sc.omegas, eta, n_max);
    Eigen::VectorXcd qudit(2);
    qudit << std::sqrt(0.4), std::sqrt(0.6);
    Eigen::VectorXcd cav = coherent_state(n_max, sc.alpha0);
    Eigen::VectorXcd psi(2 * (n_max + 1));
    psi << qudit[0] * cav, qudit[1] * cav;
    sc.rho0 = DensityOperator(psi * psi.adjoint());
    return sc;
}

}  // namespace qtraj
