#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nodal/error.hpp"

namespace nodal {

using Vector = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
};

/// Square sparse matrix in compressed row storage.
///
/// Rows carry sorted, unique column indices and the pattern is structurally
/// symmetric. Instances are immutable once built.
class SparseOperator {
public:
    SparseOperator() = default;
    SparseOperator(std::size_t n, std::vector<std::size_t> row_offsets,
                   std::vector<std::size_t> columns, std::vector<double> values);

    /// Duplicate entries are summed.
    static SparseOperator from_triplets(std::size_t n, std::vector<Triplet> entries);
    static SparseOperator diagonal(std::span<const double> d);

    std::size_t dimension() const noexcept { return n_; }
    std::size_t nonzeros() const noexcept { return values_.size(); }

    void apply(std::span<const double> x, std::span<double> y) const;
    Vector apply(std::span<const double> x) const;

    double at(std::size_t i, std::size_t j) const;
    Vector diagonal_entries() const;

    /// A + s I
    SparseOperator shifted(double s) const;
    /// A - diag(d)
    SparseOperator minus_diagonal(std::span<const double> d) const;

    double inf_norm() const;
    /// Lower bound on the spectrum from Gershgorin discs.
    double gershgorin_lower() const;
    /// max |A - A^T| entrywise.
    double asymmetry() const;

    const std::vector<std::size_t>& row_offsets() const noexcept { return row_offsets_; }
    const std::vector<std::size_t>& columns() const noexcept { return columns_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> columns_;
    std::vector<double> values_;
};

struct CgReport {
    Vector x;
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Conjugate gradients on an SPD operator given as a callable
/// `apply(std::span<const double> in, std::span<double> out)`.
///
/// Stops when ||b - A x|| <= tol ||b||. Only scalar recurrences enter the
/// update, so when `apply` commutes exactly with a permutation P and both
/// b and x0 are P-invariant (or P-odd), every iterate keeps that property.
template <class Apply>
CgReport conjugate_gradient(Apply&& apply, std::span<const double> b, double tol, int max_iter,
                            std::span<const double> x0 = {}) {
    const std::size_t n = b.size();
    CgReport out;
    out.x.assign(n, 0.0);
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        return out;
    }
    Vector r(b.begin(), b.end());
    Vector ap(n);
    if (!x0.empty()) {
        std::copy(x0.begin(), x0.end(), out.x.begin());
        apply(std::span<const double>(out.x), std::span<double>(ap));
        for (std::size_t i = 0; i < n; ++i) r[i] -= ap[i];
    }
    double rr = dot(r, r);
    out.relative_residual = std::sqrt(rr) / bnorm;
    if (out.relative_residual <= tol) return out;
    Vector p = r;
    for (int it = 1; it <= max_iter; ++it) {
        apply(std::span<const double>(p), std::span<double>(ap));
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) {
            throw SolverError("conjugate gradient: operator not positive definite",
                              std::sqrt(rr) / bnorm);
        }
        const double alpha = rr / pap;
        axpy(alpha, p, out.x);
        axpy(-alpha, ap, r);
        const double rr_new = dot(r, r);
        out.iterations = it;
        out.relative_residual = std::sqrt(rr_new) / bnorm;
        if (out.relative_residual <= tol) return out;
        const double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    throw SolverError("conjugate gradient: iteration budget exhausted (relative residual " +
                          std::to_string(out.relative_residual) + ")",
                      out.relative_residual);
}

CgReport cg_solve(const SparseOperator& a, std::span<const double> b, double tol, int max_iter);

struct EigenPair {
    double value = 0.0;
    Vector vector;  ///< unit l2 norm
};

/// The k algebraically smallest eigenpairs of a symmetric operator, ascending.
///
/// Shift-invert Lanczos below the Gershgorin bound with explicit deflation:
/// each run converges the extreme Ritz pair of the operator restricted to the
/// complement of the pairs already locked, so repeated eigenvalues are found
/// with their full multiplicity.
std::vector<EigenPair> smallest_eigs(const SparseOperator& a, int k, double eig_tol = 1e-9);

struct NegativeCount {
    int negatives = 0;
    int zeros_flagged = 0;
    double zero_band = 0.0;
    /// Every eigenvalue computed, ascending; the last one exceeds the band
    /// unless the whole spectrum was exhausted.
    std::vector<double> eigenvalues;
};

double default_zero_band(const SparseOperator& a);

/// Counts eigenvalues below -zero_band and flags those within the band.
NegativeCount count_negative_eigs(const SparseOperator& a, std::optional<double> zero_band = {},
                                  double eig_tol = 1e-9);

/// Direct factorization of a symmetric (possibly indefinite) sparse matrix.
class SymmetricSolver {
public:
    explicit SymmetricSolver(const SparseOperator& a);
    ~SymmetricSolver();
    SymmetricSolver(SymmetricSolver&&) noexcept;
    SymmetricSolver& operator=(SymmetricSolver&&) noexcept;

    /// False when the factorization hit a zero pivot.
    bool ok() const noexcept;
    /// Smallest |pivot| / largest |pivot| of the factorization; small values
    /// indicate a nearly singular matrix.
    double pivot_ratio() const noexcept;
    Vector solve(std::span<const double> b) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace nodal
