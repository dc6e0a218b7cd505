#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qtraj/ops.hpp"
#include "qtraj/sme.hpp"

namespace qtraj {

// Symbolic state-space vector fields:
//   Ham(H)        rho -> -i[H, rho]
//   F(L)          rho -> L rho L† - ½{L†L, rho}
//   G(L)          rho -> L rho + rho L† - Tr(L rho + rho L†) rho
//   D(L, eta)     Stratonovich correction of the G(L) noise term
//   Sandwich(A,B) rho -> A rho B† + B rho A† - Tr(A rho B† + B rho A†) rho
//   Bracket(f, g) rho -> Df(rho)[g(rho)] - Dg(rho)[f(rho)]
//   Sum           weighted sum
// Evaluation and directional derivatives are exact: brackets differentiate
// through nested first-order dual numbers, one nesting level per bracket
// level, rather than finite differences.
class Field;
using FieldPtr = std::shared_ptr<const Field>;

class Field {
public:
    enum class Kind { Ham, F, G, D, Sandwich, Bracket, Sum };

    Kind kind;
    Operator A, B;       // operator payloads
    double eta = 0.0;    // D only
    FieldPtr left, right;  // Bracket children
    std::vector<std::pair<double, FieldPtr>> terms;  // Sum
    int bracket_depth = 0;
    std::string label;

    static FieldPtr ham(const Operator& h);
    static FieldPtr f(const Operator& l);
    static FieldPtr g(const Operator& l);
    static FieldPtr strat(const Operator& l, double eta);
    static FieldPtr sandwich(const Operator& a, const Operator& b);
    static FieldPtr bracket(FieldPtr f, FieldPtr g);
    static FieldPtr sum(std::vector<std::pair<double, FieldPtr>> terms);
};

constexpr int kMaxBracketDepth = 6;

// D_L(rho) evaluated directly from its closed expression
TangentVector strat_correction(const MeasurementChannel& ch, const DensityOperator& rho);

// recursive evaluation; interior (full-rank) rho expected when brackets present
TangentVector eval(const FieldPtr& expr, const DensityOperator& rho);

// exact forward-mode derivative of expr at rho along sigma
TangentVector directional_derivative(const FieldPtr& expr, const DensityOperator& rho,
                                     const Operator& sigma);

// total drift of a model as a field expression: Ham + sum_k F_k (+ D_k for
// monitored channels). Time-independent part only; drives excluded.
FieldPtr drift_field(const ScenarioModel& model);

enum class BracketKind { GG, DriftGSame, DriftGCross };

// Closed-form right-hand side of the commutator identities. The DriftG
// results omit the unspecified c1(rho) G_{[Lj,Lk]} + c2(rho) G_{Lj} part;
// equality against the generic bracket holds modulo that span.
struct ClosedFormBracket {
    FieldPtr expr;
    std::vector<FieldPtr> modulo;  // fields spanned by the omitted terms
};

ClosedFormBracket bracket_closed_form(BracketKind kind, const Operator& lj, const Operator& lk,
                                      double eta_j);

}  // namespace qtraj
