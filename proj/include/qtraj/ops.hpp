#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace qtraj {

using Complex = std::complex<double>;
using Operator = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

constexpr double kHermTol = 1e-12;
constexpr double kTraceTol = 1e-12;
constexpr double kNegEigTol = 1e-10;

// Hermitian, unit-trace, positive-semidefinite (up to tolerated numerical
// negativity) state. Construction validates; mutating hot paths use the
// unchecked tag and re-validate at checkpoints.
class DensityOperator {
public:
    struct Unchecked {};

    explicit DensityOperator(Operator rho);
    DensityOperator(Operator rho, Unchecked) : mat_(std::move(rho)) {}

    const Operator& mat() const { return mat_; }
    Operator& mat() { return mat_; }
    Eigen::Index dim() const { return mat_.rows(); }

    // throws std::invalid_argument when invariants fail
    void validate() const;
    double min_eigenvalue() const;

private:
    Operator mat_;
};

// Hermitian traceless direction in state space, with coordinates in the
// fixed orthonormal Hermitian-traceless basis of matching dimension.
struct TangentVector {
    Operator op;
    RealVector vec;
};

// Fixed generalized Gell-Mann basis: symmetric pairs, antisymmetric pairs,
// then diagonal, lexicographic within each group. Orthonormal under the
// Hilbert-Schmidt inner product. Cached per dimension.
const std::vector<Operator>& hermitian_traceless_basis(int dim);

TangentVector make_tangent(const Operator& herm_traceless);
Operator tangent_from_coords(const RealVector& vec, int dim);
RealVector vectorize_tangent(const Operator& herm_traceless);

// standard constructors
Operator identity(int dim);
Operator annihilation(int n_max);   // (n_max+1) x (n_max+1)
Operator creation(int n_max);
Operator number_op(int n_max);
Operator position_op(int n_max);    // X = (a + a†)/2
Operator momentum_op(int n_max);    // P = (a - a†)/(2i)
Operator parity_op(int n_max);      // (-1)^{a†a}
Operator displacement_op(int n_max, Complex alpha);  // exp(alpha a† - conj(alpha) a)

Operator pauli(char label);                    // I, X, Y, Z
Operator pauli_string(const std::string& spec);
Operator sigma_minus();                        // |g><e| with |0>=ground
Operator tensor(const Operator& a, const Operator& b);

// r(jk) = Tr(rho sigma_j x sigma_k) for two qubits, order II,IX,...,ZZ
RealVector pauli_coords(const DensityOperator& rho);
Operator pauli_coords_to_rho(const RealVector& r);

Complex expectation(const DensityOperator& rho, const Operator& a);

// helpers
bool is_hermitian(const Operator& a, double tol = kHermTol);
Operator hermitize(const Operator& a);

// Fock-space states (column vectors)
Eigen::VectorXcd fock_state(int n_max, int n);
Eigen::VectorXcd coherent_state(int n_max, Complex alpha);
Eigen::VectorXcd cat_state(int n_max, Complex alpha);  // even cat

}  // namespace qtraj
