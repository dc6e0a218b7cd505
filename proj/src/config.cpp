#include "qtraj/config.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

namespace qtraj {

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

const std::set<std::string> kScenarios{"qutrit-qnd", "repetition", "fluorescence",
                                       "xp",         "emission",   "dispersive",
                                       "custom"};

}  // namespace

ScenarioConfig ScenarioConfig::parse(const nlohmann::json& doc) {
    reject_unknown(doc, {"scenario", "params", "T", "dt", "n_traj", "seed", "threads",
                         "snapshot_times", "out_dir"},
                   "top level");
    ScenarioConfig cfg;
    cfg.scenario = doc.at("scenario").get<std::string>();
    if (!kScenarios.count(cfg.scenario))
        throw std::invalid_argument("config: unknown scenario '" + cfg.scenario + "'");
    if (doc.contains("params")) cfg.params = doc["params"];
    cfg.T = doc.value("T", cfg.T);
    cfg.dt = doc.value("dt", cfg.dt);
    cfg.n_traj = doc.value("n_traj", cfg.n_traj);
    cfg.seed = doc.value("seed", cfg.seed);
    cfg.n_threads = doc.value("threads", cfg.n_threads);
    cfg.out_dir = doc.value("out_dir", cfg.out_dir);
    if (doc.contains("snapshot_times"))
        cfg.snapshot_times = doc["snapshot_times"].get<std::vector<double>>();
    if (cfg.T < 0) throw std::invalid_argument("config: negative T");
    if (cfg.dt <= 0) throw std::invalid_argument("config: dt must be positive");
    if (cfg.n_traj < 1) throw std::invalid_argument("config: n_traj must be positive");
    if (cfg.snapshot_times.empty()) cfg.snapshot_times = {cfg.T};
    for (double t : cfg.snapshot_times)
        if (t < 0 || t > cfg.T) throw std::invalid_argument("config: snapshot outside [0,T]");
    return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("config: cannot open " + path);
    nlohmann::json doc = nlohmann::json::parse(f);
    return parse(doc);
}

nlohmann::json ScenarioConfig::to_json() const {
    return {{"scenario", scenario}, {"params", params},   {"T", T},
            {"dt", dt},             {"n_traj", n_traj},   {"seed", seed},
            {"threads", n_threads}, {"snapshot_times", snapshot_times},
            {"out_dir", out_dir}};
}

ScenarioConfig::Built ScenarioConfig::build() const {
    Built b;
    auto pop_coord = [](int i, const std::string& name) {
        return std::pair<std::string, std::function<double(const Operator&)>>(
            name, [i](const Operator& r) { return r(i, i).real(); });
    };
    if (scenario == "qutrit-qnd") {
        reject_unknown(params, {"variant", "eta", "omega", "max_depth"}, "qutrit-qnd params");
        std::string variant = params.value("variant", "single");
        double eta = params.value("eta", 0.8);
        double omega = params.value("omega", 1.35);
        if (eta < 0 || eta > 1) throw std::invalid_argument("config: eta outside [0,1]");
        QutritVariant v = variant == "single" ? QutritVariant::Single
                          : variant == "two" ? QutritVariant::Two
                          : variant == "rabi"
                              ? QutritVariant::Rabi
                              : throw std::invalid_argument("config: unknown qutrit variant");
        QutritScenario sc = qutrit_scenario(v, eta, omega);
        b.model = sc.model;
        b.rho0 = sc.rho0;
        b.observables = {pop_coord(0, "rho00"), pop_coord(1, "rho11"),
                         {"re_rho01", [](const Operator& r) { return r(0, 1).real(); }},
                         {"re_rho12", [](const Operator& r) { return r(1, 2).real(); }}};
    } else if (scenario == "repetition") {
        reject_unknown(params, {"eta", "gamma_flip", "n_syndromes", "max_depth"},
                       "repetition params");
        double eta = params.value("eta", 0.8);
        double gamma = params.value("gamma_flip", 0.0);
        int ns = params.value("n_syndromes", 3);
        RepetitionScenario sc = repetition_scenario(ns, eta, gamma);
        b.model = sc.rep.scenario;
        b.rho0 = sc.rho0;
        for (int v = 0; v < 4; ++v) {
            Operator P = sc.rep.projectors[v];
            b.observables.push_back({"pV" + std::to_string(v), [P](const Operator& r) {
                                         return (P * r).trace().real();
                                     }});
        }
    } else if (scenario == "fluorescence") {
        reject_unknown(params, {"eta1", "eta2", "n_th", "n_max", "state", "alpha", "panel"},
                       "fluorescence params");
        if (params.contains("panel")) {
            std::string panel = params["panel"].get<std::string>();
            OscillatorPanel p = panel == "homodyne_cat" ? OscillatorPanel::HomodyneCat
                                : panel == "thermal_cat" ? OscillatorPanel::HomodyneThermalCat
                                : panel == "kerr_cat"
                                    ? OscillatorPanel::KerrCat
                                    : throw std::invalid_argument("config: unknown panel");
            OscillatorScenario sc = oscillator_scenario(p);
            b.model = sc.model;
            b.rho0 = sc.rho0;
            int n_max = sc.n_max;
            Operator X = position_op(n_max), P = momentum_op(n_max), N = number_op(n_max),
                     Par = parity_op(n_max);
            b.observables = {
                {"mean_x", [X](const Operator& r) { return (X * r).trace().real(); }},
                {"mean_p", [P](const Operator& r) { return (P * r).trace().real(); }},
                {"mean_n", [N](const Operator& r) { return (N * r).trace().real(); }},
                {"parity", [Par](const Operator& r) { return (Par * r).trace().real(); }}};
        } else {
            double eta1 = params.value("eta1", 0.8);
            double eta2 = params.value("eta2", 0.8);
            double n_th = params.value("n_th", 0.0);
            int n_max = params.value("n_max", 20);
            double alpha = params.value("alpha", 1.0);
            OscillatorParams op;
            op.eta1 = eta1;
            op.eta2 = eta2;
            op.n_th = n_th;
            std::string state = params.value("state", "coherent");
            Eigen::VectorXcd psi = state == "cat" ? cat_state(n_max, alpha)
                                                  : coherent_state(n_max, alpha);
            b.model = sme_oscillator_model(OscillatorKind::Fluorescence, op, n_max, psi);
            b.rho0 = DensityOperator(psi * psi.adjoint());
            Operator X = position_op(n_max), P = momentum_op(n_max);
            b.observables = {
                {"mean_x", [X](const Operator& r) { return (X * r).trace().real(); }},
                {"mean_p", [P](const Operator& r) { return (P * r).trace().real(); }}};
        }
    } else if (scenario == "xp") {
        reject_unknown(params,
                       {"gamma_x", "gamma_p", "gamma_l", "eta_x", "eta_p", "delta", "n_th",
                        "n_max", "alpha"},
                       "xp params");
        OscillatorParams op;
        op.gamma_x = params.value("gamma_x", 1.0);
        op.gamma_p = params.value("gamma_p", 1.0);
        op.gamma_l = params.value("gamma_l", 1.0);
        op.eta_x = params.value("eta_x", 0.8);
        op.eta_p = params.value("eta_p", 0.8);
        op.delta = params.value("delta", 0.0);
        op.n_th = params.value("n_th", 0.0);
        int n_max = params.value("n_max", 20);
        double alpha = params.value("alpha", 1.0);
        Eigen::VectorXcd psi = coherent_state(n_max, alpha);
        b.model = sme_oscillator_model(OscillatorKind::XP, op, n_max, psi);
        b.rho0 = DensityOperator(psi * psi.adjoint());
        Operator X = position_op(n_max), P = momentum_op(n_max);
        b.observables = {
            {"mean_x", [X](const Operator& r) { return (X * r).trace().real(); }},
            {"mean_p", [P](const Operator& r) { return (P * r).trace().real(); }}};
    } else if (scenario == "emission") {
        reject_unknown(params, {"rate", "eta1", "eta2", "max_depth"}, "emission params");
        EmissionScenario sc =
            emission_scenario(params.value("eta1", 0.65), params.value("eta2", 0.4));
        b.model = emission_model(params.value("rate", 2.0), sc.eta1, sc.eta2);
        b.rho0 = sc.rho0;
        b.observables = {
            {"B1",
             [](const Operator& r) {
                 auto c = emission_coords(r);
                 return c.B ? (*c.B)[0] : 0.0;
             }},
            {"B2",
             [](const Operator& r) {
                 auto c = emission_coords(r);
                 return c.B ? (*c.B)[1] : 0.0;
             }},
            {"R1", [](const Operator& r) {
                 auto c = emission_coords(r);
                 return c.R ? (*c.R)[0] : 0.0;
             }}};
    } else if (scenario == "dispersive") {
        reject_unknown(params, {"eta", "n_max", "max_depth"}, "dispersive params");
        DispersiveScenario sc =
            dispersive_scenario(params.value("n_max", 15), params.value("eta", 0.8));
        b.model = sc.model;
        b.rho0 = sc.rho0;
        int nc = sc.n_max + 1;
        for (int k = 0; k < 2; ++k)
            b.observables.push_back(
                {"qudit_p" + std::to_string(k), [k, nc](const Operator& r) {
                     return r.block(k * nc, k * nc, nc, nc).trace().real();
                 }});
    } else {
        throw std::invalid_argument("config: scenario '" + scenario +
                                    "' has no generic builder (use the check subcommands)");
    }
    b.model.validate();
    return b;
}

int run_simulate(const ScenarioConfig& cfg) {
    auto t0 = std::chrono::steady_clock::now();
    ScenarioConfig::Built b = cfg.build();
    SimulateOptions opts;
    opts.n_threads = cfg.n_threads;
    auto recs = simulate(b.model, b.rho0, cfg.T, cfg.dt, cfg.seed, cfg.n_traj,
                         cfg.snapshot_times, opts);
    std::filesystem::create_directories(cfg.out_dir);

    std::vector<std::string> header{"traj_id", "t"};
    for (const auto& [n, f] : b.observables) header.push_back(n);
    std::vector<std::vector<double>> rows;
    for (const auto& r : recs)
        for (size_t si = 0; si < cfg.snapshot_times.size(); ++si) {
            std::vector<double> row{double(r.traj_index), cfg.snapshot_times[si]};
            for (const auto& [n, f] : b.observables) row.push_back(f(r.snapshots[si]));
            rows.push_back(std::move(row));
        }
    write_csv(cfg.out_dir + "/trajectories.csv", header, rows);

    std::vector<Operator> finals;
    for (const auto& r : recs) finals.push_back(r.snapshots.back());
    nlohmann::json spread = nlohmann::json::array();
    if (recs.size() >= 50) {
        SpreadStats st = confinement_diagnostic(finals, b.observables);
        for (size_t i = 0; i < st.names.size(); ++i)
            spread.push_back(
                {{"coord", st.names[i]}, {"mean", st.mean[i]}, {"std", st.stddev[i]}});
    }
    double worst_min_eig = 1.0;
    long clips = 0;
    for (const auto& r : recs) {
        worst_min_eig = std::min(worst_min_eig, r.min_eigenvalue_seen);
        clips += r.clip_count;
    }
    auto t1 = std::chrono::steady_clock::now();
    nlohmann::json summary;
    summary["config"] = cfg.to_json();
    summary["wall_seconds"] = std::chrono::duration<double>(t1 - t0).count();
    summary["invariant_spread"] = spread;
    summary["min_eigenvalue_seen"] = worst_min_eig;
    summary["eigen_clips"] = clips;
    std::ofstream f(cfg.out_dir + "/summary.json");
    f << summary.dump(2) << "\n";
    return 0;
}

int run_rank(const ScenarioConfig& cfg) {
    ScenarioConfig::Built b = cfg.build();
    RankOptions opts;
    opts.seed = cfg.seed;
    if (cfg.params.contains("max_depth")) opts.max_depth = cfg.params["max_depth"].get<int>();
    if (!b.model.factor_dims.empty() && b.model.factor_dims.back() > 4)
        opts.oscillator_tail_damping = true;
    LieAlgebraReport r = manifold_dimension(b.model, opts);
    nlohmann::json out;
    out["manifold_dim"] = r.manifold_dim;
    out["converged"] = r.converged;
    out["heuristic"] = r.heuristic;
    out["rank_per_point"] = r.rank_per_point;
    out["generators"] = nlohmann::json::array();
    for (const auto& g : r.generators)
        out["generators"].push_back({{"lineage", g.lineage}, {"depth", g.depth}});
    out["singular_values"] = r.singular_values;
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream f(cfg.out_dir + "/rank.json");
    f << out.dump(2) << "\n";
    printf("M = %d (converged=%s)\n", r.manifold_dim, r.converged ? "true" : "false");
    return 0;
}

}  // namespace qtraj
