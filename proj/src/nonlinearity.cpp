#include "nodal/nonlinearity.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "nodal/error.hpp"

namespace nodal {

namespace {

/// |s|^e for the exponents that occur in practice, exact for small integers.
double abs_pow(double a, double e) {
    if (e == 2.0) return a * a;
    if (e == 1.0) return a;
    if (e == 4.0) return (a * a) * (a * a);
    return std::pow(a, e);
}

}  // namespace

Nonlinearity::Nonlinearity(Family fam, bool truncated) : family_(fam), truncated_(truncated) {}

Nonlinearity Nonlinearity::power(double p) {
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("sublinear power: need 0 < p < 1");
    return Nonlinearity(SublinearPower{p}, false);
}

Nonlinearity Nonlinearity::allen_cahn(double lambda, double p, bool truncated) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw PreconditionError("allen-cahn: need lambda > 0");
    }
    if (!(p > 1.0) || !std::isfinite(p)) throw PreconditionError("allen-cahn: need p > 1");
    return Nonlinearity(AllenCahn{lambda, p}, truncated);
}

std::optional<double> Nonlinearity::s_f() const {
    if (is_allen_cahn()) return 1.0;
    return std::nullopt;
}

double Nonlinearity::lambda() const {
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) return ac->lambda;
    throw PreconditionError("lambda() is only defined for the Allen-Cahn family");
}

double Nonlinearity::p() const {
    return std::visit([](const auto& fam) { return fam.p; }, family_);
}

Nonlinearity Nonlinearity::with_truncation(bool on) const {
    if (on && !s_f()) throw PreconditionError("truncation needs a family with a positive zero s_f");
    return Nonlinearity(family_, on);
}

double Nonlinearity::f(double s) const {
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) {
        if (truncated_ && std::abs(s) > 1.0) return 0.0;
        return ac->lambda * (s - abs_pow(std::abs(s), ac->p - 1.0) * s);
    }
    const auto& pw = std::get<SublinearPower>(family_);
    if (s == 0.0) return 0.0;
    return std::pow(std::abs(s), pw.p - 1.0) * s;
}

double Nonlinearity::F(double s) const {
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) {
        double a = std::abs(s);
        if (truncated_ && a > 1.0) a = 1.0;
        return ac->lambda * (0.5 * a * a - abs_pow(a, ac->p + 1.0) / (ac->p + 1.0));
    }
    const auto& pw = std::get<SublinearPower>(family_);
    return std::pow(std::abs(s), pw.p + 1.0) / (pw.p + 1.0);
}

namespace {

// a^q - b^q for a, b >= 0
double pow_diff(double a, double b, double q) {
    if (a == b) return 0.0;
    if (q == 2.0) return (a - b) * (a + b);
    if (q == 4.0) return (a - b) * (a + b) * (a * a + b * b);
    if (b == 0.0) return std::pow(a, q);
    if (a == 0.0) return -std::pow(b, q);
    return std::pow(b, q) * std::expm1(q * std::log1p((a - b) / b));
}

}  // namespace

double Nonlinearity::F_diff(double a, double b) const {
    double x = std::abs(a);
    double y = std::abs(b);
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) {
        if (truncated_) {
            x = std::min(x, 1.0);
            y = std::min(y, 1.0);
        }
        return ac->lambda * (0.5 * pow_diff(x, y, 2.0) - pow_diff(x, y, ac->p + 1.0) / (ac->p + 1.0));
    }
    const auto& pw = std::get<SublinearPower>(family_);
    return pow_diff(x, y, pw.p + 1.0) / (pw.p + 1.0);
}

double Nonlinearity::fprime(double s) const {
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) {
        if (truncated_ && std::abs(s) > 1.0) return 0.0;
        return ac->lambda * (1.0 - ac->p * abs_pow(std::abs(s), ac->p - 1.0));
    }
    const auto& pw = std::get<SublinearPower>(family_);
    if (std::abs(s) < kDerivFloor) {
        throw NotC1Error("sublinear power: derivative is singular at 0 (f is not C^1)");
    }
    return pw.p * std::pow(std::abs(s), pw.p - 1.0);
}

std::string Nonlinearity::describe() const {
    std::ostringstream os;
    if (const auto* ac = std::get_if<AllenCahn>(&family_)) {
        os << "allen_cahn(lambda=" << ac->lambda << ", p=" << ac->p << (truncated_ ? ", truncated" : "")
           << ")";
    } else {
        os << "power(p=" << std::get<SublinearPower>(family_).p << ")";
    }
    return os.str();
}

double kappa_for(const Nonlinearity& spec, double bound, std::optional<double> margin) {
    if (!(bound > 0.0)) throw PreconditionError("kappa_for: bound must be positive");
    double kappa_raw = 0.0;
    if (const auto* ac = std::get_if<AllenCahn>(&spec.family())) {
        // f' is even and decreasing in |s|; with truncation it vanishes past s_f
        const double reach = spec.truncated() ? std::min(bound, 1.0) : bound;
        const double min_fp = ac->lambda * (1.0 - ac->p * std::pow(reach, ac->p - 1.0));
        kappa_raw = std::max(0.0, -min_fp);
    }
    return kappa_raw + margin.value_or(1e-3 * (1.0 + kappa_raw));
}

AssumptionReport check_assumptions(const Nonlinearity& spec, double lambda1h, double lambda2h) {
    AssumptionReport r;
    r.lambda1h = lambda1h;
    r.lambda2h = lambda2h;

    // (A1), (A2) sampled on a log grid
    r.a1 = true;
    r.a2 = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int k = -40; k <= 40; ++k) {
        const double s = std::pow(10.0, k / 10.0);
        if (spec.f(-s) != -spec.f(s)) r.a1 = false;
        const double q = spec.f(s) / s;
        if (!(q < prev)) r.a2 = false;
        prev = q;
    }

    if (spec.is_allen_cahn()) {
        r.limit_at_zero = spec.lambda();
        r.limit_at_infinity = spec.truncated() ? 0.0 : -std::numeric_limits<double>::infinity();
    } else {
        r.limit_at_zero = std::numeric_limits<double>::infinity();
        r.limit_at_infinity = 0.0;
    }
    r.a3 = r.limit_at_zero > lambda1h;
    r.a3prime = r.limit_at_zero > lambda2h;
    r.a4 = r.limit_at_infinity < lambda1h;
    return r;
}

}  // namespace nodal
