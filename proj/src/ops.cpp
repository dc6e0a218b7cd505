#include "qtraj/ops.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

namespace qtraj {

DensityOperator::DensityOperator(Operator rho) : mat_(std::move(rho)) {
    validate();
}

void DensityOperator::validate() const {
    if (mat_.rows() != mat_.cols() || mat_.rows() == 0)
        throw std::invalid_argument("DensityOperator: square matrix required");
    if (!mat_.allFinite())
        throw std::invalid_argument("DensityOperator: non-finite entries");
    if ((mat_ - mat_.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
        throw std::invalid_argument("DensityOperator: not Hermitian within 1e-12");
    if (std::abs(mat_.trace() - Complex(1.0, 0.0)) > kTraceTol)
        throw std::invalid_argument("DensityOperator: trace differs from 1");
    if (min_eigenvalue() < -kNegEigTol)
        throw std::invalid_argument("DensityOperator: negative eigenvalue beyond tolerance");
}

double DensityOperator::min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Operator> es(mat_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

const std::vector<Operator>& hermitian_traceless_basis(int dim) {
    static std::mutex mu;
    static std::map<int, std::vector<Operator>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(dim);
    if (it != cache.end()) return it->second;
    if (dim < 2) throw std::invalid_argument("hermitian basis needs dim >= 2");
    std::vector<Operator> basis;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (int j = 0; j < dim; ++j)
        for (int k = j + 1; k < dim; ++k) {
            Operator m = Operator::Zero(dim, dim);
            m(j, k) = inv_sqrt2;
            m(k, j) = inv_sqrt2;
            basis.push_back(m);
        }
    for (int j = 0; j < dim; ++j)
        for (int k = j + 1; k < dim; ++k) {
            Operator m = Operator::Zero(dim, dim);
            m(j, k) = Complex(0, -inv_sqrt2);
            m(k, j) = Complex(0, inv_sqrt2);
            basis.push_back(m);
        }
    for (int l = 1; l < dim; ++l) {
        Operator m = Operator::Zero(dim, dim);
        const double norm = 1.0 / std::sqrt(double(l) * (l + 1));
        for (int mdx = 0; mdx < l; ++mdx) m(mdx, mdx) = norm;
        m(l, l) = -double(l) * norm;
        basis.push_back(m);
    }
    return cache.emplace(dim, std::move(basis)).first->second;
}

RealVector vectorize_tangent(const Operator& a) {
    const int dim = static_cast<int>(a.rows());
    const auto& basis = hermitian_traceless_basis(dim);
    RealVector v(basis.size());
    for (size_t i = 0; i < basis.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = (basis[i].adjoint() * a).trace().real();
    return v;
}

Operator tangent_from_coords(const RealVector& vec, int dim) {
    const auto& basis = hermitian_traceless_basis(dim);
    if (vec.size() != static_cast<Eigen::Index>(basis.size()))
        throw std::invalid_argument("tangent_from_coords: wrong coordinate count");
    Operator m = Operator::Zero(dim, dim);
    for (size_t i = 0; i < basis.size(); ++i)
        m += vec[static_cast<Eigen::Index>(i)] * basis[i];
    return m;
}

TangentVector make_tangent(const Operator& a) {
    if ((a - a.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
        throw std::invalid_argument("TangentVector: not Hermitian");
    if (std::abs(a.trace()) > kHermTol * a.rows())
        throw std::invalid_argument("TangentVector: not traceless");
    return TangentVector{a, vectorize_tangent(a)};
}

Operator identity(int dim) { return Operator::Identity(dim, dim); }

Operator annihilation(int n_max) {
    if (n_max < 0) throw std::invalid_argument("annihilation: n_max must be >= 0");
    Operator a = Operator::Zero(n_max + 1, n_max + 1);
    for (int n = 0; n < n_max; ++n) a(n, n + 1) = std::sqrt(double(n + 1));
    return a;
}

Operator creation(int n_max) { return annihilation(n_max).adjoint(); }

Operator number_op(int n_max) {
    Operator n = Operator::Zero(n_max + 1, n_max + 1);
    for (int k = 0; k <= n_max; ++k) n(k, k) = double(k);
    return n;
}

Operator position_op(int n_max) {
    Operator a = annihilation(n_max);
    return 0.5 * (a + a.adjoint());
}

Operator momentum_op(int n_max) {
    Operator a = annihilation(n_max);
    return (a - a.adjoint()) / Complex(0, 2);
}

Operator parity_op(int n_max) {
    Operator p = Operator::Zero(n_max + 1, n_max + 1);
    for (int k = 0; k <= n_max; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
    return p;
}

Operator displacement_op(int n_max, Complex alpha) {
    Operator a = annihilation(n_max);
    Operator g = alpha * a.adjoint() - std::conj(alpha) * a;
    return g.exp();
}

Operator pauli(char label) {
    Operator m(2, 2);
    switch (label) {
        case 'I': m << 1, 0, 0, 1; break;
        case 'X': m << 0, 1, 1, 0; break;
        case 'Y': m << 0, Complex(0, -1), Complex(0, 1), 0; break;
        case 'Z': m << 1, 0, 0, -1; break;
        default: throw std::invalid_argument(std::string("pauli: unknown label ") + label);
    }
    return m;
}

Operator pauli_string(const std::string& spec) {
    if (spec.empty()) throw std::invalid_argument("pauli_string: empty spec");
    Operator m = pauli(spec[0]);
    for (size_t i = 1; i < spec.size(); ++i) m = tensor(m, pauli(spec[i]));
    return m;
}

Operator sigma_minus() {
    Operator m(2, 2);
    m << 0, 1, 0, 0;  // |0><1|, |0>=ground
    return m;
}

Operator tensor(const Operator& a, const Operator& b) {
    Operator out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

static const char kPauliLabels[] = "IXYZ";

RealVector pauli_coords(const DensityOperator& rho) {
    if (rho.dim() != 4) throw std::invalid_argument("pauli_coords: two-qubit state required");
    RealVector r(16);
    int idx = 0;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
            r[idx++] = (tensor(pauli(kPauliLabels[j]), pauli(kPauliLabels[k])) * rho.mat())
                           .trace().real();
    return r;
}

Operator pauli_coords_to_rho(const RealVector& r) {
    if (r.size() != 16) throw std::invalid_argument("pauli_coords_to_rho: need 16 coords");
    Operator rho = Operator::Zero(4, 4);
    int idx = 0;
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k)
            rho += r[idx++] * tensor(pauli(kPauliLabels[j]), pauli(kPauliLabels[k])) / 4.0;
    return rho;
}

Complex expectation(const DensityOperator& rho, const Operator& a) {
    if (a.rows() != rho.dim() || a.cols() != rho.dim())
        throw std::invalid_argument("expectation: dimension mismatch");
    return (a * rho.mat()).trace();
}

bool is_hermitian(const Operator& a, double tol) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

Operator hermitize(const Operator& a) { return 0.5 * (a + a.adjoint()); }

Eigen::VectorXcd fock_state(int n_max, int n) {
    if (n < 0 || n > n_max) throw std::invalid_argument("fock_state: level out of range");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(n_max + 1);
    v[n] = 1.0;
    return v;
}

Eigen::VectorXcd coherent_state(int n_max, Complex alpha) {
    Eigen::VectorXcd v(n_max + 1);
    // log-space amplitudes to survive large n
    double lognorm = -0.5 * std::norm(alpha);
    Complex logalpha = (std::abs(alpha) > 0) ? std::log(alpha) : Complex(0, 0);
    double lgamma_acc = 0.0;
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) lgamma_acc += std::log(double(n));
        if (std::abs(alpha) == 0.0) {
            v[n] = (n == 0) ? 1.0 : 0.0;
        } else {
            Complex logamp = lognorm + double(n) * logalpha - 0.5 * lgamma_acc;
            v[n] = std::exp(logamp);
        }
    }
    v.normalize();  // absorbs truncation loss
    return v;
}

Eigen::VectorXcd cat_state(int n_max, Complex alpha) {
    Eigen::VectorXcd v = coherent_state(n_max, alpha) + coherent_state(n_max, -alpha);
    v.normalize();
    return v;
}

}  // namespace qtraj
