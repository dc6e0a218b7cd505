#include "qtraj/lierank.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "qtraj/rng.hpp"

namespace qtraj {

namespace {

RealVector eval_vec(const FieldPtr& f, const DensityOperator& rho) {
    return eval(f, rho).vec;
}

RankResult rank_of_matrix(const Eigen::MatrixXd& m, double sv_threshold) {
    RankResult res;
    if (m.cols() == 0) return res;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    Eigen::VectorXd sv = svd.singularValues();
    res.singular_values.assign(sv.data(), sv.data() + sv.size());
    double top = sv.size() ? sv[0] : 0.0;
    if (top <= 0.0) return res;
    int r = 0;
    while (r < sv.size() && sv[r] > sv_threshold * top) ++r;
    res.rank = r;
    if (r > 0 && r < sv.size() && sv[r] > 0.0 && sv[r - 1] / sv[r] < 10.0) res.ambiguous = true;
    return res;
}

}  // namespace

RankResult rank_at(const std::vector<FieldPtr>& fields, const DensityOperator& rho,
                   double sv_threshold) {
    if (fields.empty()) throw std::invalid_argument("rank_at: nonempty field list required");
    const int tdim = int(rho.dim() * rho.dim() - 1);
    Eigen::MatrixXd m(tdim, fields.size());
    for (size_t c = 0; c < fields.size(); ++c) m.col(c) = eval_vec(fields[c], rho);
    return rank_of_matrix(m, sv_threshold);
}

DensityOperator random_interior_state(int dim, Rng& rng, double min_eig) {
    for (int attempt = 0; attempt < 256; ++attempt) {
        Operator g(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.next_gaussian(), rng.next_gaussian());
        Operator rho = g * g.adjoint() + 0.3 * double(dim) * Operator::Identity(dim, dim);
        rho /= rho.trace().real();
        Eigen::SelfAdjointEigenSolver<Operator> es(rho, Eigen::EigenvaluesOnly);
        if (es.eigenvalues().minCoeff() >= min_eig)
            return DensityOperator(rho, DensityOperator::Unchecked{});
    }
    throw std::runtime_error("random_interior_state: sampling failed");
}

namespace {

DensityOperator damped_oscillator_state(const ScenarioModel& model, Rng& rng) {
    // random full-rank state with Fock tails damped on the oscillator factor
    // (last factor by builder convention); exactness claims do not cover the
    // truncated commutator, so callers mark these reports heuristic
    int dim = model.dim;
    Operator g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = Complex(rng.next_gaussian(), rng.next_gaussian());
    Operator rho = g * g.adjoint();
    int nosc = model.factor_dims.empty() ? dim : model.factor_dims.back();
    int nrest = dim / nosc;
    Eigen::VectorXd damp(dim);
    for (int r = 0; r < nrest; ++r)
        for (int n = 0; n < nosc; ++n) damp[r * nosc + n] = std::exp(-1.5 * n);
    rho = damp.asDiagonal() * rho * damp.asDiagonal();
    rho = hermitize(rho);
    rho /= rho.trace().real();
    return DensityOperator(rho, DensityOperator::Unchecked{});
}

struct PointData {
    DensityOperator rho;
    Eigen::MatrixXd columns;
    int count = 0;
    int rank = 0;
};

void append_column(PointData& pd, const RealVector& v) {
    if (pd.columns.cols() == pd.count)
        pd.columns.conservativeResize(Eigen::NoChange, pd.count + 8);
    pd.columns.col(pd.count++) = v;
}

}  // namespace

LieAlgebraReport manifold_dimension(const ScenarioModel& model, const RankOptions& opts) {
    model.validate();
    if (opts.n_points < 3) throw std::invalid_argument("manifold_dimension: n_points >= 3");
    if (opts.max_depth < 1) throw std::invalid_argument("manifold_dimension: max_depth >= 1");

    LieAlgebraReport rep;
    rep.max_depth_used = opts.max_depth;
    rep.heuristic = opts.oscillator_tail_damping;
    const int tdim = model.dim * model.dim - 1;

    Rng rng(opts.seed, 0);
    std::vector<PointData> pts;
    auto sample_point = [&] {
        return opts.oscillator_tail_damping ? damped_oscillator_state(model, rng)
                                            : random_interior_state(model.dim, rng);
    };
    for (int p = 0; p < opts.n_points; ++p) {
        pts.push_back({sample_point(), Eigen::MatrixXd(tdim, 8), 0, 0});
        rep.sample_points.push_back(pts.back().rho);
    }

    FieldPtr drift = drift_field(model);

    // evaluates a candidate everywhere; returns whether it raised the SVD
    // rank at any point, resampling once when the gap rule flags ambiguity
    auto raises_somewhere = [&](const FieldPtr& f, std::vector<RealVector>& vals) {
        vals.clear();
        bool raises = false, ambiguous = false;
        for (auto& pd : pts) {
            RealVector v = eval_vec(f, pd.rho);
            Eigen::MatrixXd with(tdim, pd.count + 1);
            if (pd.count > 0) with.leftCols(pd.count) = pd.columns.leftCols(pd.count);
            with.col(pd.count) = v;
            RankResult after = rank_of_matrix(with, opts.sv_threshold);
            if (after.ambiguous) ambiguous = true;
            if (after.rank > pd.rank) raises = true;
            vals.push_back(std::move(v));
        }
        if (ambiguous && !raises) {
            DensityOperator extra = sample_point();
            PointData pd{extra, Eigen::MatrixXd(tdim, 8), 0, 0};
            for (const auto& gi : rep.generators) append_column(pd, eval_vec(gi.field, extra));
            Eigen::MatrixXd with(tdim, pd.count + 1);
            with.leftCols(pd.count) = pd.columns.leftCols(pd.count);
            with.col(pd.count) = eval_vec(f, extra);
            if (rank_of_matrix(with, opts.sv_threshold).rank >
                rank_of_matrix(pd.columns.leftCols(pd.count), opts.sv_threshold).rank)
                raises = true;
        }
        return raises;
    };

    auto add_to_family = [&](const FieldPtr& f, const std::string& lineage, int depth,
                             const std::vector<RealVector>& vals) {
        for (size_t p = 0; p < pts.size(); ++p) {
            append_column(pts[p], vals[p]);
            pts[p].rank =
                rank_of_matrix(pts[p].columns.leftCols(pts[p].count), opts.sv_threshold).rank;
        }
        rep.generators.push_back({f, lineage, depth});
    };

    // all monitored-noise fields enter the bracketing family, dependent or not
    for (size_t k = 0; k < model.channels.size(); ++k) {
        if (model.channels[k].eta <= 0.0) continue;
        FieldPtr g = Field::g(model.channels[k].L);
        std::vector<RealVector> vals;
        vals.reserve(pts.size());
        for (auto& pd : pts) vals.push_back(eval_vec(g, pd.rho));
        add_to_family(g, "G[L" + std::to_string(k + 1) + "]", 0, vals);
    }
    if (rep.generators.empty())
        throw std::invalid_argument("manifold_dimension: no monitored channel");

    bool truncated = false;
    std::vector<RealVector> vals;
    size_t head = 0;
    while (head < rep.generators.size()) {
        const GeneratorInfo gi = rep.generators[head];
        const size_t self = head;
        ++head;
        if (gi.depth + 1 <= opts.max_depth) {
            FieldPtr cand = Field::bracket(drift, gi.field);
            if (raises_somewhere(cand, vals))
                add_to_family(cand, "[drift," + gi.lineage + "]", gi.depth + 1, vals);
        } else {
            truncated = true;
        }
        for (size_t other = 0; other < self; ++other) {
            const GeneratorInfo& gj = rep.generators[other];
            int d = 1 + std::max(gi.depth, gj.depth);
            if (d > opts.max_depth) {
                truncated = true;
                continue;
            }
            FieldPtr cand = Field::bracket(gi.field, gj.field);
            if (raises_somewhere(cand, vals))
                add_to_family(cand, "[" + gi.lineage + "," + gj.lineage + "]", d, vals);
        }
    }
    rep.converged = !truncated;

    for (auto& pd : pts) {
        RankResult r = rank_of_matrix(pd.columns.leftCols(pd.count), opts.sv_threshold);
        rep.rank_per_point.push_back(r.rank);
        rep.singular_values.push_back(r.singular_values);
        rep.manifold_dim = std::max(rep.manifold_dim, r.rank);
    }
    return rep;
}

SpreadStats confinement_diagnostic(
    const std::vector<Operator>& snapshots,
    const std::vector<std::pair<std::string, std::function<double(const Operator&)>>>& coords) {
    if (snapshots.size() < 50)
        throw std::invalid_argument("confinement_diagnostic: need at least 50 snapshots");
    SpreadStats st;
    for (const auto& [name, fn] : coords) {
        double mean = 0.0;
        for (const auto& s : snapshots) mean += fn(s);
        mean /= double(snapshots.size());
        double var = 0.0;
        for (const auto& s : snapshots) {
            double d = fn(s) - mean;
            var += d * d;
        }
        var /= double(snapshots.size() - 1);
        st.names.push_back(name);
        st.mean.push_back(mean);
        st.stddev.push_back(std::sqrt(var));
    }
    return st;
}

}  // namespace qtraj
