#pragma once

#include <string>
#include <vector>

#include "qtraj/fields.hpp"
#include "qtraj/ops.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

struct RankResult {
    int rank = 0;
    std::vector<double> singular_values;
    bool ambiguous = false;  // no 10x spectral gap at the threshold
};

// SVD rank of stacked vectorized field evaluations; threshold relative to
// the largest singular value, with a required 10x gap between the last
// retained and first discarded value.
RankResult rank_at(const std::vector<FieldPtr>& fields, const DensityOperator& rho,
                   double sv_threshold = 1e-7);

struct GeneratorInfo {
    FieldPtr field;
    std::string lineage;
    int depth = 0;
};

struct LieAlgebraReport {
    std::vector<GeneratorInfo> generators;
    std::vector<DensityOperator> sample_points;
    std::vector<std::vector<double>> singular_values;  // per point, final family
    std::vector<int> rank_per_point;
    int manifold_dim = 0;  // max over points
    bool converged = true;
    bool heuristic = false;  // oscillator-model sampling restrictions applied
    int max_depth_used = 0;
};

struct RankOptions {
    int n_points = 5;
    int max_depth = 6;
    double sv_threshold = 1e-7;
    uint64_t seed = 12345;
    // damp Fock tails so top levels carry <= 1e-8 population when the model
    // declares an oscillator factor (heuristic mode)
    bool oscillator_tail_damping = false;
};

// Prop-style reachability closure: start from the monitored-noise fields
// {G_{L_k} : eta_k > 0}, bracket repeatedly with the total drift and with
// each other, admit candidates that raise the evaluation rank anywhere.
LieAlgebraReport manifold_dimension(const ScenarioModel& model, const RankOptions& opts = {});

// interior full-rank sample state (min eigenvalue >= 0.02)
DensityOperator random_interior_state(int dim, Rng& rng, double min_eig = 0.02);

struct SpreadStats {
    std::vector<std::string> names;
    std::vector<double> stddev;
    std::vector<double> mean;
};

// per-coordinate ensemble standard deviation of a coordinate map over
// snapshots taken at one fixed time
SpreadStats confinement_diagnostic(
    const std::vector<Operator>& snapshots,
    const std::vector<std::pair<std::string, std::function<double(const Operator&)>>>& coords);

}  // namespace qtraj
