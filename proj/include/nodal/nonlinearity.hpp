#pragma once

#include <limits>
#include <optional>
#include <string>
#include <variant>

namespace nodal {

/// f(s) = |s|^{p-1} s with 0 < p < 1. Positive on (0, inf); no positive zero.
struct SublinearPower {
    double p;
};

/// f(s) = lambda (s - |s|^{p-1} s) with p > 1. Bistable, positive zero s_f = 1.
struct AllenCahn {
    double lambda;
    double p;
};

/// Below this |s| the sublinear power has no usable derivative.
inline constexpr double kDerivFloor = 1e-12;

/// One member of the two supported nonlinearity families, optionally
/// truncated outside [-s_f, s_f].
class Nonlinearity {
public:
    using Family = std::variant<SublinearPower, AllenCahn>;

    static Nonlinearity power(double p);
    static Nonlinearity allen_cahn(double lambda, double p = 3.0, bool truncated = false);

    const Family& family() const noexcept { return family_; }
    bool truncated() const noexcept { return truncated_; }
    bool is_allen_cahn() const noexcept { return std::holds_alternative<AllenCahn>(family_); }
    /// The family is C^1 on the whole real line.
    bool is_c1() const noexcept { return is_allen_cahn(); }
    /// Positive zero of f, when one exists.
    std::optional<double> s_f() const;
    /// lambda for Allen-Cahn.
    double lambda() const;
    double p() const;

    /// Same family with truncation switched on or off. Throws
    /// PreconditionError when truncating a family without s_f.
    Nonlinearity with_truncation(bool on) const;

    double f(double s) const;
    /// Antiderivative with F(0) = 0.
    double F(double s) const;
    /// F(a) - F(b) evaluated without cancellation when a and b are close.
    double F_diff(double a, double b) const;
    /// Throws NotC1Error for the sublinear power when |s| < kDerivFloor.
    double fprime(double s) const;

    std::string describe() const;

private:
    Nonlinearity(Family fam, bool truncated);

    Family family_;
    bool truncated_ = false;
};

/// Smallest kappa >= 0 (plus margin) making s -> f(s) + kappa s strictly
/// increasing on [-bound, bound]. Default margin is 1e-3 (1 + kappa_raw).
double kappa_for(const Nonlinearity& spec, double bound, std::optional<double> margin = std::nullopt);

struct AssumptionReport {
    bool a1 = false;  ///< odd and continuous
    bool a2 = false;  ///< f(s)/s strictly decreasing on (0, inf)
    bool a3 = false;  ///< lim_{s->0} f(s)/s > lambda_1
    bool a3prime = false;  ///< lim_{s->0+} f(s)/s > lambda_2
    bool a4 = false;  ///< lim_{s->inf} f(s)/s < lambda_1
    double limit_at_zero = 0.0;  ///< may be +inf
    double limit_at_infinity = 0.0;  ///< may be -inf
    double lambda1h = 0.0;
    double lambda2h = 0.0;
};

AssumptionReport check_assumptions(const Nonlinearity& spec, double lambda1h, double lambda2h);

}  // namespace nodal
