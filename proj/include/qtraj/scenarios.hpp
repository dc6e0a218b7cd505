#pragma once

#include "qtraj/multi.hpp"
#include "qtraj/qnd.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

// Qutrit QND population measurement, lambda1 = (0, 1, 1.8) at eta = 0.8.
enum class QutritVariant { Single, Two, Rabi };

struct QutritScenario {
    ScenarioModel model;
    QndModel qnd;
    DensityOperator rho0;
};

QutritScenario qutrit_scenario(QutritVariant v, double eta = 0.8, double omega_rabi = 1.35);

// 3-qubit repetition code ensembles; initial state puts 0.5 on |000>, 0.3 on
// |111>, the rest spread over single-flip states.
struct RepetitionScenario {
    RepetitionModel rep;
    DensityOperator rho0;
};

RepetitionScenario repetition_scenario(int n_syndromes, double eta = 0.8,
                                       double gamma_flip = 0.0);

// Fluorescence oscillator scenarios behind the third figure family.
enum class OscillatorPanel { HomodyneCat, HomodyneThermalCat, KerrCat };

struct OscillatorScenario {
    ScenarioModel model;
    DensityOperator rho0;
    OscillatorParams params;
    int n_max;
    Complex cat_alpha;
};

OscillatorScenario oscillator_scenario(OscillatorPanel panel, int n_max = 22);

struct EmissionScenario {
    ScenarioModel model;
    DensityOperator rho0;
    double rate, eta1, eta2;
};

// mixed full-rank two-qubit state with excited-excited weight, rate-2 units
EmissionScenario emission_scenario(double eta1 = 0.65, double eta2 = 0.4);

struct DispersiveScenario {
    ScenarioModel model;
    DensityOperator rho0;
    std::vector<double> omegas;
    double eta;
    Complex alpha0;       // initial cavity coherent amplitude
    std::vector<double> qudit_pops;
    int n_max;
};

DispersiveScenario dispersive_scenario(int n_max = 15, double eta = 0.8);

}  // namespace qtraj
