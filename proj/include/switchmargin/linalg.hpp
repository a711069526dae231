#pragma once

// Dense real linear-algebra kernels shared by the whole library: Kronecker
// products and powers, the matrix exponential, nonsymmetric spectra, and the
// definiteness / Hurwitz tests used by the certificate machinery.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <string>

#include "switchmargin/common.hpp"

namespace switchmargin {

inline constexpr double kDefaultDefinitenessTol = 1e-9;
inline constexpr double kDefaultHurwitzTol = 1e-9;

// Full eigenvalue list of a square real matrix.
struct Spectrum {
    Eigen::VectorXcd eigenvalues;

    double max_real_part() const { return eigenvalues.real().maxCoeff(); }
    double spectral_radius() const { return eigenvalues.cwiseAbs().maxCoeff(); }
};

// Kronecker product, dimensions (a.rows*b.rows) x (a.cols*b.cols).
inline Mat kron(const Mat& a, const Mat& b) {
    require_finite(a, "kron: a");
    require_finite(b, "kron: b");
    Mat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

// i-th Kronecker power, defined recursively as m otimes (power i-1 of m).
inline Mat kron_power(const Mat& m, int i) {
    require(i >= 1, "kron_power: power must be >= 1, got " + std::to_string(i));
    require_finite(m, "kron_power: m");
    Mat out = m;
    for (int k = 2; k <= i; ++k) out = kron(m, out);
    return out;
}

// Matrix exponential e^{m*t} by scaling-and-squaring with the diagonal Padé
// approximant of order 13 (Higham's coefficients, norm-based scaling).
// Relative accuracy ~1e-13 for well-conditioned inputs.
inline Mat expm(const Mat& m, double t = 1.0) {
    require_square(m, "expm");
    require_finite(m, "expm");
    if (!std::isfinite(t)) throw DimensionError("expm: t must be finite");

    const Eigen::Index n = m.rows();
    Mat a = m * t;

    const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm
    int squarings = 0;
    const double theta13 = 5.371920351148152;  // Padé-13 switch point
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        a /= std::pow(2.0, squarings);
    }

    static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                               1187353796428800.0,  129060195264000.0,   10559470521600.0,
                               670442572800.0,      33522128640.0,       1323241920.0,
                               40840800.0,          960960.0,            16380.0,
                               182.0,               1.0};

    const Mat ident = Mat::Identity(n, n);
    const Mat a2 = a * a;
    const Mat a4 = a2 * a2;
    const Mat a6 = a4 * a2;

    const Mat u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                       b[3] * a2 + b[1] * ident);
    const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                  b[0] * ident;

    Mat r = (v - u).partialPivLu().solve(v + u);
    for (int k = 0; k < squarings; ++k) r = r * r;

    if (!r.allFinite()) throw NumericalError("expm: result overflowed");
    return r;
}

// Full nonsymmetric spectrum via the dense Schur-based solver.
inline Spectrum eigenvalues(const Mat& m) {
    require_square(m, "eigenvalues");
    require_finite(m, "eigenvalues");
    Eigen::EigenSolver<Mat> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericalError("eigenvalues: QR iteration did not converge");
    return Spectrum{solver.eigenvalues()};
}

// Eigenvalues of a symmetric matrix, ascending.
inline Vec symmetric_eigenvalues(const Mat& m) {
    require_square(m, "symmetric_eigenvalues");
    Eigen::SelfAdjointEigenSolver<Mat> solver(m, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalError("symmetric_eigenvalues: QL iteration did not converge");
    return solver.eigenvalues();
}

// True iff every eigenvalue has real part < -tol.
inline bool is_hurwitz(const Mat& m, double tol = kDefaultHurwitzTol) {
    return eigenvalues(m).max_real_part() < -tol;
}

// True iff the symmetrized matrix (m + m^T)/2 has max eigenvalue <= tol.
inline bool is_negative_semidefinite(const Mat& m, double tol = kDefaultDefinitenessTol) {
    require_square(m, "is_negative_semidefinite");
    const Mat sym = 0.5 * (m + m.transpose());
    return symmetric_eigenvalues(sym).maxCoeff() <= tol;
}

// True iff the symmetrized matrix has min eigenvalue > tol.
inline bool is_positive_definite(const Mat& m, double tol = kDefaultDefinitenessTol) {
    require_square(m, "is_positive_definite");
    const Mat sym = 0.5 * (m + m.transpose());
    return symmetric_eigenvalues(sym).minCoeff() > tol;
}

}  // namespace switchmargin
