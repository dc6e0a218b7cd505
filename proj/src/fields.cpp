#include "qtraj/fields.hpp"

#include <cmath>
#include <stdexcept>

namespace qtraj {

namespace {

// ---- nested first-order dual numbers over complex scalars ----

template <class T>
struct Dual {
    T v{};
    T d{};
    Dual() = default;
    Dual(T v_, T d_) : v(std::move(v_)), d(std::move(d_)) {}
};

template <class T>
struct Depth {
    static constexpr int value = 0;
};
template <class T>
struct Depth<Dual<T>> {
    static constexpr int value = 1 + Depth<T>::value;
};

template <class T>
Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}
template <class T>
Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}
template <class T>
Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.v * b.d + a.d * b.v};
}
template <class T>
Dual<T>& operator+=(Dual<T>& a, const Dual<T>& b) {
    a.v += b.v;
    a.d += b.d;
    return a;
}

inline Complex conj_s(const Complex& z) { return std::conj(z); }
template <class T>
Dual<T> conj_s(const Dual<T>& x) {
    return {conj_s(x.v), conj_s(x.d)};
}

inline Complex real_s(const Complex& z) { return Complex(z.real(), 0.0); }
template <class T>
Dual<T> real_s(const Dual<T>& x) {
    return {real_s(x.v), real_s(x.d)};
}

template <class T>
T from_complex(const Complex& c) {
    if constexpr (Depth<T>::value == 0) {
        return c;
    } else {
        T out;
        out.v = from_complex<decltype(out.v)>(c);
        return out;
    }
}

// ---- dense square matrices over a generic scalar ----

template <class T>
struct GMat {
    int n = 0;
    std::vector<T> a;

    GMat() = default;
    explicit GMat(int n_) : n(n_), a(size_t(n_) * n_) {}
    T& at(int i, int j) { return a[size_t(i) * n + j]; }
    const T& at(int i, int j) const { return a[size_t(i) * n + j]; }
};

template <class T>
GMat<T> from_operator(const Operator& m) {
    GMat<T> out(int(m.rows()));
    for (int i = 0; i < out.n; ++i)
        for (int j = 0; j < out.n; ++j) out.at(i, j) = from_complex<T>(m(i, j));
    return out;
}

template <class T>
GMat<T> mul(const GMat<T>& x, const GMat<T>& y) {
    GMat<T> out(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int k = 0; k < x.n; ++k) {
            const T& xv = x.at(i, k);
            for (int j = 0; j < x.n; ++j) out.at(i, j) += xv * y.at(k, j);
        }
    return out;
}

template <class T>
GMat<T> adjoint(const GMat<T>& x) {
    GMat<T> out(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) out.at(i, j) = conj_s(x.at(j, i));
    return out;
}

template <class T>
GMat<T> add(const GMat<T>& x, const GMat<T>& y) {
    GMat<T> out(x.n);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] + y.a[i];
    return out;
}

template <class T>
GMat<T> sub(const GMat<T>& x, const GMat<T>& y) {
    GMat<T> out(x.n);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] - y.a[i];
    return out;
}

template <class T>
GMat<T> scale(const T& c, const GMat<T>& x) {
    GMat<T> out(x.n);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = c * x.a[i];
    return out;
}

template <class T>
T trace(const GMat<T>& x) {
    T t{};
    for (int i = 0; i < x.n; ++i) t += x.at(i, i);
    return t;
}

template <class T>
GMat<Dual<T>> lift(const GMat<T>& value, const GMat<T>& direction) {
    GMat<Dual<T>> out(value.n);
    for (size_t i = 0; i < value.a.size(); ++i) out.a[i] = Dual<T>(value.a[i], direction.a[i]);
    return out;
}

template <class T>
GMat<T> dual_part(const GMat<Dual<T>>& x) {
    GMat<T> out(x.n);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i].d;
    return out;
}

// G_L(rho) over generic scalars
template <class T>
GMat<T> g_field(const GMat<T>& l, const GMat<T>& ldag, const GMat<T>& rho) {
    GMat<T> two_re = add(mul(l, rho), mul(rho, ldag));
    T m = real_s(trace(two_re));
    return sub(two_re, scale(m, rho));
}

template <class T>
GMat<T> eval_impl(const Field& e, const GMat<T>& rho);

template <class T>
GMat<T> eval_sum(const Field& e, const GMat<T>& rho) {
    GMat<T> acc(rho.n);
    for (const auto& [w, f] : e.terms) {
        GMat<T> part = eval_impl(*f, rho);
        for (size_t i = 0; i < acc.a.size(); ++i) acc.a[i] += from_complex<T>(Complex(w, 0)) * part.a[i];
    }
    return acc;
}

template <class T>
GMat<T> eval_impl(const Field& e, const GMat<T>& rho) {
    switch (e.kind) {
        case Field::Kind::Ham: {
            auto h = from_operator<T>(e.A);
            GMat<T> comm = sub(mul(h, rho), mul(rho, h));
            return scale(from_complex<T>(Complex(0, -1)), comm);
        }
        case Field::Kind::F: {
            auto l = from_operator<T>(e.A);
            auto ldag = adjoint(l);
            GMat<T> lr = mul(l, rho);
            GMat<T> out = mul(lr, ldag);
            GMat<T> anti = mul(mul(ldag, l), rho);
            GMat<T> anti2 = add(anti, adjoint(anti));
            for (size_t i = 0; i < out.a.size(); ++i)
                out.a[i] = out.a[i] - from_complex<T>(Complex(0.5, 0)) * anti2.a[i];
            return out;
        }
        case Field::Kind::G: {
            auto l = from_operator<T>(e.A);
            return g_field(l, adjoint(l), rho);
        }
        case Field::Kind::D: {
            auto l = from_operator<T>(e.A);
            auto ldag = adjoint(l);
            GMat<T> g = g_field(l, ldag, rho);
            GMat<T> lg2 = add(mul(l, g), mul(g, ldag));
            T m1 = real_s(trace(lg2));
            T m2 = real_s(trace(add(mul(l, rho), mul(rho, ldag))));
            GMat<T> out = sub(sub(lg2, scale(m1, rho)), scale(m2, g));
            return scale(from_complex<T>(Complex(-0.5 * e.eta, 0)), out);
        }
        case Field::Kind::Sandwich: {
            auto a = from_operator<T>(e.A);
            auto b = from_operator<T>(e.B);
            GMat<T> t = add(mul(mul(a, rho), adjoint(b)), mul(mul(b, rho), adjoint(a)));
            T m = real_s(trace(t));
            return sub(t, scale(m, rho));
        }
        case Field::Kind::Sum:
            return eval_sum(e, rho);
        case Field::Kind::Bracket: {
            if constexpr (Depth<T>::value >= kMaxBracketDepth) {
                throw std::runtime_error("fields: bracket depth exceeds supported maximum");
            } else {
                GMat<T> fr = eval_impl(*e.left, rho);
                GMat<T> gr = eval_impl(*e.right, rho);
                GMat<Dual<T>> at_g = lift(rho, gr);
                GMat<T> df_along_g = dual_part(eval_impl(*e.left, at_g));
                GMat<Dual<T>> at_f = lift(rho, fr);
                GMat<T> dg_along_f = dual_part(eval_impl(*e.right, at_f));
                return sub(df_along_g, dg_along_f);
            }
        }
    }
    throw std::logic_error("fields: unknown node kind");
}

Operator to_operator(const GMat<Complex>& m) {
    Operator out(m.n, m.n);
    for (int i = 0; i < m.n; ++i)
        for (int j = 0; j < m.n; ++j) out(i, j) = m.at(i, j);
    return out;
}

int depth_of(const FieldPtr& f) { return f ? f->bracket_depth : 0; }

}  // namespace

FieldPtr Field::ham(const Operator& h) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::Ham;
    e->A = h;
    e->label = "Ham";
    return e;
}

FieldPtr Field::f(const Operator& l) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::F;
    e->A = l;
    e->label = "F";
    return e;
}

FieldPtr Field::g(const Operator& l) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::G;
    e->A = l;
    e->label = "G";
    return e;
}

FieldPtr Field::strat(const Operator& l, double eta) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::D;
    e->A = l;
    e->eta = eta;
    e->label = "D";
    return e;
}

FieldPtr Field::sandwich(const Operator& a, const Operator& b) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::Sandwich;
    e->A = a;
    e->B = b;
    e->label = "S";
    return e;
}

FieldPtr Field::bracket(FieldPtr f, FieldPtr g) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::Bracket;
    e->bracket_depth = 1 + std::max(depth_of(f), depth_of(g));
    e->label = "[" + f->label + "," + g->label + "]";
    e->left = std::move(f);
    e->right = std::move(g);
    return e;
}

FieldPtr Field::sum(std::vector<std::pair<double, FieldPtr>> terms) {
    auto e = std::make_shared<Field>();
    e->kind = Kind::Sum;
    int d = 0;
    for (auto& [w, f] : terms) d = std::max(d, depth_of(f));
    e->bracket_depth = d;
    e->label = "Sum";
    e->terms = std::move(terms);
    return e;
}

TangentVector strat_correction(const MeasurementChannel& ch, const DensityOperator& rho) {
    if (ch.L.rows() != rho.dim())
        throw std::invalid_argument("strat_correction: dimension mismatch");
    return eval(Field::strat(ch.L, ch.eta), rho);
}

TangentVector eval(const FieldPtr& expr, const DensityOperator& rho) {
    if (expr->bracket_depth > kMaxBracketDepth)
        throw std::runtime_error("fields: expression exceeds maximum bracket depth");
    auto r = from_operator<Complex>(rho.mat());
    return make_tangent(hermitize(to_operator(eval_impl(*expr, r))));
}

TangentVector directional_derivative(const FieldPtr& expr, const DensityOperator& rho,
                                     const Operator& sigma) {
    if (expr->bracket_depth + 1 > kMaxBracketDepth)
        throw std::runtime_error("fields: expression exceeds maximum bracket depth");
    auto r = from_operator<Complex>(rho.mat());
    auto s = from_operator<Complex>(sigma);
    auto lifted = lift(r, s);
    return make_tangent(hermitize(to_operator(dual_part(eval_impl(*expr, lifted)))));
}

FieldPtr drift_field(const ScenarioModel& model) {
    std::vector<std::pair<double, FieldPtr>> terms;
    if (model.H.size() != 0 && model.H.cwiseAbs().maxCoeff() > 0)
        terms.emplace_back(1.0, Field::ham(model.H));
    for (const auto& ch : model.channels) {
        terms.emplace_back(1.0, Field::f(ch.L));
        if (ch.eta > 0.0) terms.emplace_back(1.0, Field::strat(ch.L, ch.eta));
    }
    return Field::sum(std::move(terms));
}

ClosedFormBracket bracket_closed_form(BracketKind kind, const Operator& lj, const Operator& lk,
                                      double eta_j) {
    Operator ljdag = lj.adjoint();
    switch (kind) {
        case BracketKind::GG: {
            Operator comm = lj * lk - lk * lj;
            return {Field::g(comm), {}};
        }
        case BracketKind::DriftGSame: {
            Operator lprime = 0.5 * (lj * (ljdag * lj) - (ljdag * lj) * lj);
            return {Field::g(lprime), {Field::g(lj)}};
        }
        case BracketKind::DriftGCross: {
            Operator comm = lj * lk - lk * lj;
            Operator lprime = 0.5 * (lk * (ljdag * lj) - (ljdag * lj) * lk);
            Operator sym = (ljdag + lj) * lj;
            Operator ldprime = 0.5 * (lk * sym - sym * lk);
            std::vector<std::pair<double, FieldPtr>> terms;
            terms.emplace_back(1.0 - eta_j, Field::sandwich(comm, lj));
            terms.emplace_back(1.0 - eta_j, Field::g(lprime));
            terms.emplace_back(eta_j, Field::g(ldprime));
            return {Field::sum(std::move(terms)), {Field::g(comm), Field::g(lj)}};
        }
    }
    throw std::invalid_argument("bracket_closed_form: unsupported kind");
}

}  // namespace qtraj
