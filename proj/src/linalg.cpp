#include "nodal/linalg.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace nodal {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

SparseOperator::SparseOperator(std::size_t n, std::vector<std::size_t> row_offsets,
                               std::vector<std::size_t> columns, std::vector<double> values)
    : n_(n),
      row_offsets_(std::move(row_offsets)),
      columns_(std::move(columns)),
      values_(std::move(values)) {
    if (row_offsets_.size() != n_ + 1 || row_offsets_.front() != 0 ||
        row_offsets_.back() != columns_.size() || columns_.size() != values_.size()) {
        throw PreconditionError("SparseOperator: inconsistent CSR arrays");
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (columns_[k] >= n_) throw PreconditionError("SparseOperator: column out of range");
            if (k > row_offsets_[i] && columns_[k] <= columns_[k - 1]) {
                throw PreconditionError("SparseOperator: row columns not sorted/unique");
            }
            if (!std::isfinite(values_[k])) throw PreconditionError("SparseOperator: non-finite entry");
        }
    }
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            const std::size_t j = columns_[k];
            auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[j]);
            auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[j + 1]);
            if (!std::binary_search(first, last, i)) {
                throw PreconditionError("SparseOperator: pattern not structurally symmetric");
            }
        }
    }
}

SparseOperator SparseOperator::from_triplets(std::size_t n, std::vector<Triplet> entries) {
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    std::vector<std::size_t> offsets(n + 1, 0);
    std::vector<std::size_t> cols;
    std::vector<double> vals;
    cols.reserve(entries.size());
    vals.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size(); ++k) {
        const auto& e = entries[k];
        if (e.row >= n || e.col >= n) throw PreconditionError("from_triplets: index out of range");
        if (!cols.empty() && k > 0 && entries[k - 1].row == e.row && entries[k - 1].col == e.col) {
            vals.back() += e.value;
            continue;
        }
        cols.push_back(e.col);
        vals.push_back(e.value);
        ++offsets[e.row + 1];
    }
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    return SparseOperator(n, std::move(offsets), std::move(cols), std::move(vals));
}

SparseOperator SparseOperator::diagonal(std::span<const double> d) {
    std::vector<std::size_t> offsets(d.size() + 1);
    std::iota(offsets.begin(), offsets.end(), std::size_t{0});
    std::vector<std::size_t> cols(d.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
    return SparseOperator(d.size(), std::move(offsets), std::move(cols), Vector(d.begin(), d.end()));
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            s += values_[k] * x[columns_[k]];
        }
        y[i] = s;
    }
}

Vector SparseOperator::apply(std::span<const double> x) const {
    Vector y(n_);
    apply(x, y);
    return y;
}

double SparseOperator::at(std::size_t i, std::size_t j) const {
    auto first = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i]);
    auto last = columns_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values_[static_cast<std::size_t>(it - columns_.begin())];
}

Vector SparseOperator::diagonal_entries() const {
    Vector d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
}

SparseOperator SparseOperator::shifted(double s) const {
    Vector d(n_, -s);
    return minus_diagonal(d);
}

SparseOperator SparseOperator::minus_diagonal(std::span<const double> d) const {
    if (d.size() != n_) throw PreconditionError("minus_diagonal: size mismatch");
    std::vector<Triplet> t;
    t.reserve(values_.size() + n_);
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            t.push_back({i, columns_[k], values_[k]});
        }
        t.push_back({i, i, -d[i]});
    }
    return from_triplets(n_, std::move(t));
}

double SparseOperator::inf_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        double s = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) s += std::abs(values_[k]);
        m = std::max(m, s);
    }
    return m;
}

double SparseOperator::gershgorin_lower() const {
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
        double diag = 0.0;
        double off = 0.0;
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            if (columns_[k] == i) {
                diag = values_[k];
            } else {
                off += std::abs(values_[k]);
            }
        }
        lo = std::min(lo, diag - off);
    }
    return n_ == 0 ? 0.0 : lo;
}

double SparseOperator::asymmetry() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t k = row_offsets_[i]; k < row_offsets_[i + 1]; ++k) {
            m = std::max(m, std::abs(values_[k] - at(columns_[k], i)));
        }
    }
    return m;
}

CgReport cg_solve(const SparseOperator& a, std::span<const double> b, double tol, int max_iter) {
    if (!(tol > 0.0)) throw PreconditionError("cg_solve: tol must be positive");
    if (b.size() != a.dimension()) throw PreconditionError("cg_solve: size mismatch");
    return conjugate_gradient([&a](std::span<const double> x, std::span<double> y) { a.apply(x, y); },
                              b, tol, max_iter);
}

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

SpMat to_eigen(const SparseOperator& a, double shift = 0.0) {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(a.nonzeros() + a.dimension());
    const auto& off = a.row_offsets();
    const auto& col = a.columns();
    const auto& val = a.values();
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        for (std::size_t k = off[i]; k < off[i + 1]; ++k) {
            t.emplace_back(static_cast<int>(i), static_cast<int>(col[k]), val[k]);
        }
        if (shift != 0.0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), -shift);
    }
    const auto n = static_cast<int>(a.dimension());
    SpMat m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

void orthogonalize(std::span<double> w, const std::vector<Vector>& basis) {
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) axpy(-dot(q, w), q, w);
    }
}

/// Produces eigenpairs of a symmetric operator one at a time in ascending
/// order, locking each converged pair before starting the next run.
class DeflatedLanczos {
public:
    DeflatedLanczos(const SparseOperator& a, double tol, std::uint64_t seed)
        : a_(a), tol_(tol), rng_(seed) {
        const double lo = a.gershgorin_lower();
        shift_ = lo - std::max(1.0, 1e-2 * std::abs(lo));
        llt_.compute(to_eigen(a, shift_));
        if (llt_.info() != Eigen::Success) {
            throw SolverError("eigensolver: shifted factorization failed", 0.0);
        }
    }

    std::optional<EigenPair> next() {
        const std::size_t n = a_.dimension();
        if (locked_.size() >= n) return std::nullopt;
        Vector q = random_start();
        for (int restart = 0; restart <= kMaxRestarts; ++restart) {
            auto result = run(q);
            if (result) {
                locked_.push_back(result->vector);
                return result;
            }
        }
        throw SolverError("eigensolver: Lanczos did not converge", last_residual_);
    }

private:
    static constexpr int kMaxKrylov = 300;
    static constexpr int kMaxRestarts = 12;

    Vector random_start() {
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        Vector q(a_.dimension());
        for (int attempt = 0; attempt < 8; ++attempt) {
            for (double& v : q) v = dist(rng_);
            orthogonalize(q, locked_);
            const double nq = norm2(q);
            if (nq > 1e-8) {
                for (double& v : q) v /= nq;
                return q;
            }
        }
        throw SolverError("eigensolver: cannot build start vector", 0.0);
    }

    Vector solve_shifted(std::span<const double> x) const {
        Eigen::Map<const Eigen::VectorXd> b(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::VectorXd y = llt_.solve(b);
        return Vector(y.data(), y.data() + y.size());
    }

    /// One Lanczos run from q. Returns the converged extreme pair, or nullopt
    /// after replacing q with the best Ritz vector for a restart.
    std::optional<EigenPair> run(Vector& q) {
        const std::size_t n = a_.dimension();
        const std::size_t avail = n - locked_.size();
        const int max_m = static_cast<int>(std::min<std::size_t>(avail, kMaxKrylov));
        std::vector<Vector> basis{q};
        std::vector<double> alpha;
        std::vector<double> beta;
        Vector best;
        for (int m = 1; m <= max_m; ++m) {
            Vector w = solve_shifted(basis.back());
            orthogonalize(w, locked_);
            const double a = dot(basis.back(), w);
            alpha.push_back(a);
            orthogonalize(w, basis);
            const double b = norm2(w);
            const bool breakdown = b <= 1e-12 * std::max(1.0, std::abs(a));
            const bool last = m == max_m;
            if (m % 4 == 0 || breakdown || last || m < 4) {
                Eigen::VectorXd diag(m);
                Eigen::VectorXd sub(std::max(m - 1, 1));
                for (int i = 0; i < m; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
                for (int i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
                if (m == 1) {
                    Eigen::MatrixXd t(1, 1);
                    t(0, 0) = diag(0);
                    tri.compute(t);
                } else {
                    tri.computeFromTridiagonal(diag, sub.head(m - 1));
                }
                const Eigen::VectorXd y = tri.eigenvectors().col(m - 1);
                const double theta = tri.eigenvalues()(m - 1);
                const double estimate = b * std::abs(y(m - 1));
                if (estimate <= 1e-4 * std::abs(theta) || breakdown || last) {
                    Vector v(n, 0.0);
                    for (int i = 0; i < m; ++i) axpy(y(i), basis[static_cast<std::size_t>(i)], v);
                    orthogonalize(v, locked_);
                    const double nv = norm2(v);
                    for (double& x : v) x /= nv;
                    Vector av = a_.apply(v);
                    const double mu = dot(v, av);
                    axpy(-mu, v, av);
                    last_residual_ = norm2(av);
                    if (last_residual_ <= tol_ * std::max(1.0, std::abs(mu)) ||
                        (breakdown && static_cast<std::size_t>(m) == avail)) {
                        return EigenPair{mu, std::move(v)};
                    }
                    best = std::move(v);
                }
            }
            if (breakdown || last) break;
            beta.push_back(b);
            for (double& x : w) x /= b;
            basis.push_back(std::move(w));
        }
        if (best.empty()) {
            q = random_start();
        } else {
            q = std::move(best);
        }
        return std::nullopt;
    }

    const SparseOperator& a_;
    double tol_;
    double shift_ = 0.0;
    double last_residual_ = 0.0;
    std::mt19937_64 rng_;
    Eigen::SimplicialLLT<SpMat> llt_;
    std::vector<Vector> locked_;
};

constexpr std::uint64_t kEigenSeed = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::vector<EigenPair> smallest_eigs(const SparseOperator& a, int k, double eig_tol) {
    if (k < 1 || static_cast<std::size_t>(k) > a.dimension()) {
        throw PreconditionError("smallest_eigs: need 1 <= k <= dimension");
    }
    DeflatedLanczos lanczos(a, eig_tol, kEigenSeed);
    std::vector<EigenPair> out;
    while (static_cast<int>(out.size()) < k) {
        auto p = lanczos.next();
        if (!p) break;
        out.push_back(std::move(*p));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const EigenPair& x, const EigenPair& y) { return x.value < y.value; });
    return out;
}

double default_zero_band(const SparseOperator& a) { return 1e-7 * a.inf_norm(); }

NegativeCount count_negative_eigs(const SparseOperator& a, std::optional<double> zero_band,
                                  double eig_tol) {
    NegativeCount out;
    out.zero_band = zero_band.value_or(default_zero_band(a));
    if (a.dimension() == 0) return out;
    DeflatedLanczos lanczos(a, eig_tol, kEigenSeed);
    while (auto p = lanczos.next()) {
        out.eigenvalues.push_back(p->value);
        if (p->value < -out.zero_band) {
            ++out.negatives;
        } else if (p->value <= out.zero_band) {
            ++out.zeros_flagged;
        } else {
            break;
        }
    }
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
    return out;
}

struct SymmetricSolver::Impl {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    std::optional<Eigen::SparseLU<SpMat>> lu;
    bool ok = false;
    double pivot_ratio = 0.0;
};

SymmetricSolver::SymmetricSolver(const SparseOperator& a) : impl_(std::make_unique<Impl>()) {
    SpMat m = to_eigen(a);
    impl_->ldlt.compute(m);
    if (impl_->ldlt.info() == Eigen::Success) {
        const Eigen::VectorXd d = impl_->ldlt.vectorD();
        const double dmax = d.cwiseAbs().maxCoeff();
        const double dmin = d.cwiseAbs().minCoeff();
        impl_->pivot_ratio = dmax > 0.0 ? dmin / dmax : 0.0;
        impl_->ok = std::isfinite(impl_->pivot_ratio) && impl_->pivot_ratio > 1e-14;
    }
    if (!impl_->ok) {
        // fall back to pivoted LU
        impl_->lu.emplace();
        impl_->lu->analyzePattern(m);
        impl_->lu->factorize(m);
        impl_->ok = impl_->lu->info() == Eigen::Success;
        if (impl_->ok) {
            const double logdet = impl_->lu->logAbsDeterminant();
            impl_->ok = std::isfinite(logdet);
        }
    }
}

SymmetricSolver::~SymmetricSolver() = default;
SymmetricSolver::SymmetricSolver(SymmetricSolver&&) noexcept = default;
SymmetricSolver& SymmetricSolver::operator=(SymmetricSolver&&) noexcept = default;

bool SymmetricSolver::ok() const noexcept { return impl_->ok; }
double SymmetricSolver::pivot_ratio() const noexcept { return impl_->pivot_ratio; }

Vector SymmetricSolver::solve(std::span<const double> b) const {
    Eigen::Map<const Eigen::VectorXd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
    Eigen::VectorXd x = impl_->lu ? Eigen::VectorXd(impl_->lu->solve(rhs))
                                  : Eigen::VectorXd(impl_->ldlt.solve(rhs));
    return Vector(x.data(), x.data() + x.size());
}

}  // namespace nodal
