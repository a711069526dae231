#pragma once

// Lifted-system hierarchy: Kronecker-sum lifts of the mode matrices, and
// their restriction to the symmetric tensor subspace.
//
// The level-i lifted operator acts on (R^n)^{tensor i} and has dimension n^i,
// but every trajectory power x(t)^{tensor i} lives in the symmetric subspace
// of dimension C(n+i-1, i). All downstream computation (semidefinite
// feasibility, indicator evaluation, simulation) happens in orthonormal
// coordinates on that subspace, which is what keeps high levels tractable:
// at n = 2, i = 14 the full space has dimension 16384, the reduced one 15.

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "switchmargin/common.hpp"
#include "switchmargin/linalg.hpp"

namespace switchmargin {

inline constexpr int kDefaultReducedDimCap = 5000;
inline constexpr int kMaxFullLiftDim = 2048;  // largest n^i we materialize densely

// Nominal dynamics A plus scalar perturbation direction A0: A(t) = A + Delta(t) A0.
// Construction does not require A Hurwitz; algorithms that need it check it.
struct SwitchedLinearSystem {
    int n = 0;
    Mat a;
    Mat a0;

    SwitchedLinearSystem() = default;
    SwitchedLinearSystem(Mat a_in, Mat a0_in) : a(std::move(a_in)), a0(std::move(a0_in)) {
        require_square(a, "SwitchedLinearSystem: A");
        require_square(a0, "SwitchedLinearSystem: A0");
        require(a.rows() == a0.rows(), "SwitchedLinearSystem: A and A0 must share dimensions");
        require_finite(a, "SwitchedLinearSystem: A");
        require_finite(a0, "SwitchedLinearSystem: A0");
        n = static_cast<int>(a.rows());
    }

    Mat mode(double delta) const { return a + delta * a0; }
};

// Orthonormal embedding of the symmetric subspace of (R^n)^{tensor i}.
//
// Basis elements are indexed by sorted index tuples (equivalently occupation
// vectors) in lexicographic order; each basis vector is the normalized sum of
// the distinct permutations of its tuple, so the embedding E has orthonormal
// rows and E * x^{tensor i} has a closed form used by lift_vector.
struct SymmetricBasis {
    int n = 0;
    int degree = 0;
    int dim = 0;
    std::vector<std::vector<int>> multi_indices;  // sorted tuples over {0..n-1}
    Vec weights;                                  // sqrt of multinomial count per tuple

    // Occupation vector (count of each base index) for basis element b.
    std::vector<int> occupation(int b) const {
        std::vector<int> occ(n, 0);
        for (int idx : multi_indices[b]) ++occ[idx];
        return occ;
    }

    // Dense dim x n^degree embedding matrix. Only for moderate full dimensions.
    Mat embedding_matrix() const {
        double full_dim_d = std::pow(static_cast<double>(n), degree);
        if (full_dim_d > kMaxFullLiftDim)
            throw CapExceededError("SymmetricBasis: full space dimension " +
                                   std::to_string(full_dim_d) + " exceeds dense cap " +
                                   std::to_string(kMaxFullLiftDim));
        const Eigen::Index full_dim = static_cast<Eigen::Index>(full_dim_d);
        Mat e = Mat::Zero(dim, full_dim);
        for (int b = 0; b < dim; ++b) {
            std::vector<int> tuple = multi_indices[b];
            const double coeff = 1.0 / weights(b);  // 1/sqrt(multiplicity)
            do {
                Eigen::Index flat = 0;
                for (int idx : tuple) flat = flat * n + idx;
                e(b, flat) = coeff;
            } while (std::next_permutation(tuple.begin(), tuple.end()));
        }
        return e;
    }

    // E * (x^{tensor degree}) without materializing the full tensor power:
    // component b equals weight_b * prod_k x_k^{occ_k}.
    Vec lift_vector(const Vec& x) const {
        require(x.size() == n, "lift_vector: state has wrong dimension");
        Vec out(dim);
        for (int b = 0; b < dim; ++b) {
            double prod = 1.0;
            for (int idx : multi_indices[b]) prod *= x(idx);
            out(b) = weights(b) * prod;
        }
        return out;
    }
};

namespace detail {

// Multinomial coefficient i! / prod(occ_k!), exact in double for all sizes
// this library reaches (values below 2^53).
inline double multinomial(int degree, const std::vector<int>& occ) {
    double result = 1.0;
    int remaining = degree;
    for (int count : occ) {
        // multiply C(remaining, count) one factor at a time
        for (int j = 1; j <= count; ++j) {
            result *= static_cast<double>(remaining - count + j) / static_cast<double>(j);
        }
        remaining -= count;
    }
    return std::round(result);
}

inline double binomial(int top, int bottom) {
    double result = 1.0;
    for (int j = 1; j <= bottom; ++j)
        result *= static_cast<double>(top - bottom + j) / static_cast<double>(j);
    return std::round(result);
}

}  // namespace detail

// Basis of the degree-i symmetric subspace over R^n, tuples in lex order.
inline SymmetricBasis symmetric_basis(int n, int i, int dim_cap = kDefaultReducedDimCap) {
    require(n >= 1, "symmetric_basis: n must be >= 1");
    require(i >= 1, "symmetric_basis: degree must be >= 1");
    const double dim_d = detail::binomial(n + i - 1, std::min(i, n - 1));
    if (dim_d > static_cast<double>(dim_cap))
        throw CapExceededError("symmetric_basis: reduced dimension " + std::to_string(dim_d) +
                               " exceeds cap " + std::to_string(dim_cap));

    SymmetricBasis basis;
    basis.n = n;
    basis.degree = i;
    basis.dim = static_cast<int>(dim_d);
    basis.multi_indices.reserve(basis.dim);

    std::vector<int> tuple(i, 0);
    while (true) {
        basis.multi_indices.push_back(tuple);
        int pos = i - 1;
        while (pos >= 0 && tuple[pos] == n - 1) --pos;
        if (pos < 0) break;
        const int next = tuple[pos] + 1;
        for (int j = pos; j < i; ++j) tuple[j] = next;
    }
    require(static_cast<int>(basis.multi_indices.size()) == basis.dim,
            "symmetric_basis: enumeration mismatch");

    basis.weights.resize(basis.dim);
    for (int b = 0; b < basis.dim; ++b) {
        std::vector<int> occ(n, 0);
        for (int idx : basis.multi_indices[b]) ++occ[idx];
        basis.weights(b) = std::sqrt(detail::multinomial(i, occ));
    }
    return basis;
}

// Closed-form lifted operator: sum over j of I_{n^j} kron m kron I_{n^{i-1-j}}.
inline Mat lift_operator_full(const Mat& m, int i) {
    require_square(m, "lift_operator_full");
    require(i >= 1, "lift_operator_full: level must be >= 1");
    const int n = static_cast<int>(m.rows());
    const double full_dim = std::pow(static_cast<double>(n), i);
    if (full_dim > kMaxFullLiftDim)
        throw CapExceededError("lift_operator_full: dimension n^i exceeds dense cap");
    Mat out = Mat::Zero(static_cast<Eigen::Index>(full_dim), static_cast<Eigen::Index>(full_dim));
    for (int j = 0; j < i; ++j) {
        const Eigen::Index left = static_cast<Eigen::Index>(std::pow(n, j));
        const Eigen::Index right = static_cast<Eigen::Index>(std::pow(n, i - 1 - j));
        out += kron(kron(Mat::Identity(left, left), m), Mat::Identity(right, right));
    }
    return out;
}

// Same operator built by the level recursion: L_i = I_n kron L_{i-1} + m kron I_{n^{i-1}}.
inline Mat lift_operator_recursive(const Mat& m, int i) {
    require_square(m, "lift_operator_recursive");
    require(i >= 1, "lift_operator_recursive: level must be >= 1");
    const int n = static_cast<int>(m.rows());
    if (std::pow(static_cast<double>(n), i) > kMaxFullLiftDim)
        throw CapExceededError("lift_operator_recursive: dimension n^i exceeds dense cap");
    Mat level = m;
    Eigen::Index prev_dim = n;
    for (int k = 2; k <= i; ++k) {
        level = kron(Mat::Identity(n, n), level) + kron(m, Mat::Identity(prev_dim, prev_dim));
        prev_dim *= n;
    }
    return level;
}

// Restriction E * m_full * E^T of a full-space operator to the symmetric
// subspace. Errors if m_full does not leave the subspace invariant, which
// signals an input that is not a lifted operator.
inline Mat reduce(const Mat& m_full, const SymmetricBasis& basis) {
    const Mat e = basis.embedding_matrix();
    require(m_full.rows() == e.cols() && m_full.cols() == e.cols(),
            "reduce: operator dimension does not match basis");
    const Mat met = m_full * e.transpose();
    const Mat defect = met - e.transpose() * (e * met);
    if (defect.norm() > 1e-8)
        throw NumericalError("reduce: operator does not preserve the symmetric subspace "
                             "(defect " +
                             std::to_string(defect.norm()) + ")");
    return e * met;
}

// Reduced lifted operator built directly in occupation coordinates.
//
// In the orthonormal symmetric basis the Kronecker-sum lift of m has the
// classical raising/lowering matrix elements: column beta contributes
// sum_k beta_k m_kk on the diagonal and m_kl * sqrt(beta_l (beta_k + 1)) at
// the row obtained by moving one unit from l to k. This avoids ever forming
// the n^i x n^i operator and agrees with reduce(lift_operator_full(...))
// wherever both are computable (cross-checked in the tests).
inline Mat reduced_lift_operator(const Mat& m, const SymmetricBasis& basis) {
    require_square(m, "reduced_lift_operator");
    require(m.rows() == basis.n, "reduced_lift_operator: matrix dimension must match basis");
    std::map<std::vector<int>, int> index_of;
    std::vector<std::vector<int>> occupations(basis.dim);
    for (int b = 0; b < basis.dim; ++b) {
        occupations[b] = basis.occupation(b);
        index_of[occupations[b]] = b;
    }

    Mat out = Mat::Zero(basis.dim, basis.dim);
    const int n = basis.n;
    for (int col = 0; col < basis.dim; ++col) {
        const std::vector<int>& beta = occupations[col];
        double diag = 0.0;
        for (int k = 0; k < n; ++k) diag += beta[k] * m(k, k);
        out(col, col) = diag;
        for (int l = 0; l < n; ++l) {
            if (beta[l] == 0) continue;
            for (int k = 0; k < n; ++k) {
                if (k == l || m(k, l) == 0.0) continue;
                std::vector<int> alpha = beta;
                --alpha[l];
                ++alpha[k];
                const int row = index_of.at(alpha);
                out(row, col) += m(k, l) * std::sqrt(static_cast<double>(beta[l]) *
                                                     static_cast<double>(beta[k] + 1));
            }
        }
    }
    return out;
}

// Level i of the hierarchy in reduced coordinates: cal_a and cal_a0 are the
// restrictions of the lifts of A and A0. Linearity of the lift means the
// reduced operator of A + delta A0 is cal_a + delta cal_a0, so every sweep
// over delta reuses one construction.
struct HierarchyLevel {
    int level = 0;
    SymmetricBasis basis;
    Mat cal_a;
    Mat cal_a0;

    Mat reduced_mode(double delta) const { return cal_a + delta * cal_a0; }
};

inline HierarchyLevel build_level(const SwitchedLinearSystem& sys, int i,
                                  int dim_cap = kDefaultReducedDimCap) {
    require(i >= 1, "build_level: level must be >= 1");
    HierarchyLevel level;
    level.level = i;
    level.basis = symmetric_basis(sys.n, i, dim_cap);
    level.cal_a = reduced_lift_operator(sys.a, level.basis);
    level.cal_a0 = reduced_lift_operator(sys.a0, level.basis);
    return level;
}

// Reduced coordinates of the tensor power of a state.
inline Vec lift_state(const Vec& x, const SymmetricBasis& basis) {
    return basis.lift_vector(x);
}

}  // namespace switchmargin
