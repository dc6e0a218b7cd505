#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "qtraj/lierank.hpp"
#include "qtraj/scenarios.hpp"

namespace qtraj {

struct CheckRow {
    std::string name;
    double value = 0;
    double tolerance = 0;
    bool pass = false;
    std::string note;
};

struct CheckReport {
    std::string kind;
    std::vector<CheckRow> rows;

    bool passed() const;
    void add(const std::string& name, double value, double tol, bool less_equal = true,
             const std::string& note = "");
    void add_flag(const std::string& name, bool ok, const std::string& note = "");
    nlohmann::json to_json() const;
};

struct RunControls {
    double dt = 1e-5;
    double T = 0.3;
    int n_traj = 4;
    uint64_t seed = 1;
    int n_threads = 1;
};

// --- invariant check drivers (shared by the CLI and the acceptance suite) ---

// phase/coherence/z laws along trajectories, Prop-5 filter equivalence and
// order insensitivity, plus the dt -> dt/4 refinement factors
CheckReport qnd_check(const QutritScenario& sc, const RunControls& rc);

// repetition-code laws: intra-subspace conservation, cross-subspace decay
// rate, 2-syndrome z conservation + 3-syndrome negative control
CheckReport repetition_check(double eta, const RunControls& rc);

// closed-form Riccati residuals, initial conditions, same-record moments vs
// the truncated-Fock SME, deterministic-parameter seed independence, and the
// n_th = 0 corollary reduction
CheckReport gauss_check(const RunControls& rc);

// 13-variable emission suite across seeds, with stochastic/deterministic
// separation and refinement factors
CheckReport emission_check(const EmissionScenario& sc, const RunControls& rc);

// drive-free dispersive filter vs the full bipartite SME along one record
CheckReport dispersive_check(const DispersiveScenario& sc, const RunControls& rc);

// all finite-dimensional manifold-dimension claims
CheckReport rank_check(int n_threads = 1);

// figure-family ensembles: emits CSV + summary JSON under out_dir when
// non-empty, returns the confinement certification
CheckReport figures_check(const std::string& out_dir, const RunControls& rc);

// CSV writing with 17 significant digits
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

}  // namespace qtraj
