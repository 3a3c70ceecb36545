#include "rankpower/asymptotics.hpp"
#include "rankpower/errors.hpp"
#include "rankpower/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

namespace rankpower::asym {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Monotone cubic (Fritsch-Carlson) through strictly increasing knots.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y)
        : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        if (n < 2 || y_.size() != n)
            throw InvalidArgument("interpolation needs >= 2 matching knots");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1]))
                throw InvalidArgument("interpolation knots must be strictly increasing");
        std::vector<double> delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i)
            delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
        slope_.resize(n);
        slope_[0] = delta[0];
        slope_[n - 1] = delta[n - 2];
        for (std::size_t i = 1; i + 1 < n; ++i)
            slope_[i] = (delta[i - 1] * delta[i] <= 0.0)
                            ? 0.0
                            : 0.5 * (delta[i - 1] + delta[i]);
        // Limit tangents so the interpolant preserves monotonicity.
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (delta[i] == 0.0) {
                slope_[i] = slope_[i + 1] = 0.0;
                continue;
            }
            double a = slope_[i] / delta[i];
            double b = slope_[i + 1] / delta[i];
            double s = a * a + b * b;
            if (s > 9.0) {
                double tau = 3.0 / std::sqrt(s);
                slope_[i] = tau * a * delta[i];
                slope_[i + 1] = tau * b * delta[i];
            }
        }
    }

    double operator()(double x) const {
        const std::size_t n = x_.size();
        if (x <= x_[0]) return y_[0] + slope_[0] * (x - x_[0]);
        if (x >= x_[n - 1]) return y_[n - 1] + slope_[n - 1] * (x - x_[n - 1]);
        std::size_t i = static_cast<std::size_t>(
            std::upper_bound(x_.begin(), x_.end(), x) - x_.begin() - 1);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] +
               h11 * h * slope_[i + 1];
    }

private:
    std::vector<double> x_, y_, slope_;
};

void require_in_domain(const PowerExpansion& e, double c, const char* who) {
    if (!(c >= e.c_min && c <= e.c_max))
        throw InvalidArgument(std::string(who) + ": c outside the declared domain");
}

double expansion_at(const PowerExpansion& e, double c, double size) {
    return e.p0(c) + e.p1(c) / std::sqrt(size) + e.p2(c) / size;
}

// Derivative of p0 by central difference with the stencil clipped to the
// declared domain (quadratic fit through three points).
double p0_derivative(const PowerExpansion& e, double c) {
    double h = 1e-6 * std::max(1.0, std::fabs(c));
    double lo = std::max(e.c_min, c - h);
    double hi = std::min(e.c_max, c + h);
    if (!(hi > lo)) throw ZeroDerivative("degenerate derivative stencil");
    double mid = 0.5 * (lo + hi);
    double f_lo = e.p0(lo), f_mid = e.p0(mid), f_hi = e.p0(hi);
    if (!std::isfinite(f_lo) || !std::isfinite(f_mid) || !std::isfinite(f_hi))
        throw NonFinite("p0 not finite on derivative stencil");
    // Quadratic through (lo,f_lo),(mid,f_mid),(hi,f_hi), differentiated at c.
    double d1 = (f_mid - f_lo) / (mid - lo);
    double d2 = (f_hi - f_mid) / (hi - mid);
    double second = (d2 - d1) / (hi - lo) * 2.0;
    return d1 + second * (c - 0.5 * (lo + mid));
}

} // namespace

PowerExpansion GaussianLocalPower::expansion() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InvalidArgument("GaussianLocalPower alpha must lie in (0,1)");
    if (!(efficacy > 0.0))
        throw InvalidArgument("GaussianLocalPower efficacy must be > 0");
    const double z = math::normal_quantile(1.0 - alpha);
    const double e = efficacy;
    PowerExpansion out;
    out.p0 = [e, z](double c) { return math::normal_cdf(e * c - z); };
    out.p1 = [](double) { return 0.0; };
    out.p2 = [](double) { return 0.0; };
    out.c_min = 0.0;
    out.c_max = std::numeric_limits<double>::infinity();
    return out;
}

PowerExpansion tabulated_expansion(const std::vector<double>& c,
                                   const std::vector<double>& p0,
                                   const std::vector<double>& p1,
                                   const std::vector<double>& p2) {
    if (c.size() < 2 || p0.size() != c.size() || p1.size() != c.size() ||
        p2.size() != c.size())
        throw LengthMismatch("tabulated expansion columns must align");
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(p0[i] > 0.0 && p0[i] < 1.0))
            throw InvalidArgument("tabulated p0 values must lie in (0,1)");
        if (i > 0 && !(p0[i] > p0[i - 1]))
            throw InvalidArgument("tabulated p0 must be strictly increasing");
    }
    auto i0 = std::make_shared<MonotoneCubic>(c, p0);
    auto i1 = std::make_shared<MonotoneCubic>(c, p1);
    auto i2 = std::make_shared<MonotoneCubic>(c, p2);
    PowerExpansion out;
    out.p0 = [i0](double x) { return (*i0)(x); };
    out.p1 = [i1](double x) { return (*i1)(x); };
    out.p2 = [i2](double x) { return (*i2)(x); };
    out.c_min = c.front();
    out.c_max = c.back();
    return out;
}

double are(const PowerExpansion& A, const PowerExpansion& B, double c) {
    if (!(c > 0.0)) throw InvalidArgument("are requires c > 0");
    require_in_domain(A, c, "are");
    const double target = A.p0(c);
    if (!std::isfinite(target)) throw NonFinite("a0(c) not finite");

    double s_lo = 1e-4, s_hi = 1e4; // sqrt(E) search range
    s_lo = std::max(s_lo, B.c_min / c);
    s_hi = std::min(s_hi, B.c_max / c);
    if (!(s_hi > s_lo)) throw NoSolution("ARE search interval empty");
    auto g = [&](double s) { return B.p0(c * s) - target; };
    double g_lo = g(s_lo), g_hi = g(s_hi);
    if (g_lo == 0.0) return s_lo * s_lo;
    if (g_hi == 0.0) return s_hi * s_hi;
    if ((g_lo < 0.0) == (g_hi < 0.0))
        throw NoSolution("b0 never attains a0(c) on the search interval");
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (s_lo + s_hi);
        if (s_hi - s_lo <= 1e-15 * std::max(1.0, mid)) break;
        double gm = g(mid);
        if (gm == 0.0) return mid * mid;
        if ((gm < 0.0) == (g_lo < 0.0)) {
            s_lo = mid;
            g_lo = gm;
        } else {
            s_hi = mid;
        }
    }
    double s = 0.5 * (s_lo + s_hi);
    return s * s;
}

double matched_size_continuous(const PowerExpansion& A, const PowerExpansion& B,
                               double c, double n) {
    if (!(c > 0.0 && n > 0.0))
        throw InvalidArgument("matched_size_continuous requires c > 0, n > 0");
    require_in_domain(A, c, "matched_size_continuous");
    const double target = expansion_at(A, c, n);
    auto pi_B = [&](double k) {
        double c_prime = c * std::sqrt(k / n);
        return expansion_at(B, c_prime, k);
    };
    // k range keeps c' = c sqrt(k/n) inside B's declared domain.
    double k_lo = std::max(1e-8, n * (B.c_min / c) * (B.c_min / c));
    double k_hi = std::isinf(B.c_max) ? 64.0 * n : n * (B.c_max / c) * (B.c_max / c);
    k_lo = std::max(k_lo, n / 64.0);
    k_hi = std::min(k_hi, 64.0 * n);
    double f_lo = pi_B(k_lo) - target;
    double f_hi = pi_B(k_hi) - target;
    if (f_lo == 0.0) return k_lo;
    if (f_hi == 0.0) return k_hi;
    if ((f_lo < 0.0) == (f_hi < 0.0))
        throw NoSolution("expansion of B never matches the target power");
    double mid = 0.5 * (k_lo + k_hi);
    for (int it = 0; it < 400; ++it) {
        mid = 0.5 * (k_lo + k_hi);
        double fm = pi_B(mid) - target;
        if (std::fabs(fm) <= 1e-10 || k_hi - k_lo <= 1e-9 * std::max(1.0, mid)) break;
        if ((fm < 0.0) == (f_lo < 0.0)) {
            k_lo = mid;
            f_lo = fm;
        } else {
            k_hi = mid;
        }
    }
    return mid;
}

DeficiencyFit deficiency_curve(const PowerExpansion& A, const PowerExpansion& B,
                               double c, const std::vector<double>& n_grid) {
    if (!(c > 0.0)) throw InvalidArgument("deficiency_curve requires c > 0");
    require_in_domain(A, c, "deficiency_curve");
    double efficiency = are(A, B, c);
    if (std::fabs(efficiency - 1.0) > 1e-6)
        throw InvalidArgument("deficiency is defined for ARE = 1 (within 1e-6)");

    DeficiencyFit fit;
    fit.n_grid = n_grid;
    fit.d_values.assign(n_grid.size(), kNaN);
    fit.usable.assign(n_grid.size(), false);

    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const double n = n_grid[i];
        if (!(n > 0.0)) continue;
        try {
            fit.d_values[i] = matched_size_continuous(A, B, c, n) - n;
            fit.usable[i] = true;
        } catch (const NoSolution&) {
            // left unusable
        }
    }

    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (!fit.usable[i]) continue;
        xs.push_back(std::sqrt(n_grid[i]));
        ys.push_back(fit.d_values[i]);
    }
    if (xs.size() < 3)
        throw DegenerateFit("deficiency fit needs >= 3 usable grid points");
    math::LineFit line = math::fit_line(xs, ys);
    fit.h1 = line.slope;
    fit.h2 = line.intercept;
    fit.residual_norm = line.residual_norm;
    return fit;
}

double deficiency_leading_coeff(const PowerExpansion& A, const PowerExpansion& B,
                                double c) {
    if (!(c > 0.0)) throw InvalidArgument("deficiency_leading_coeff requires c > 0");
    require_in_domain(A, c, "deficiency_leading_coeff");
    double efficiency = are(A, B, c);
    if (std::fabs(efficiency - 1.0) > 1e-6)
        throw InvalidArgument("deficiency is defined for ARE = 1 (within 1e-6)");
    double db0 = p0_derivative(B, c);
    if (std::fabs(db0) < 1e-12)
        throw ZeroDerivative("b0'(c) vanishes at the requested c");
    return 2.0 * (A.p1(c) - B.p1(c)) / (c * db0);
}

double numeric_derivative(const std::function<double(double)>& f, double x,
                          int order) {
    if (order == 1) {
        double h = 1e-6 * std::max(1.0, std::fabs(x));
        double f1 = f(x + h), f0 = f(x - h);
        if (!std::isfinite(f1) || !std::isfinite(f0))
            throw NonFinite("function not finite on derivative stencil");
        return (f1 - f0) / (2.0 * h);
    }
    if (order == 2) {
        double h = 1e-4 * std::max(1.0, std::fabs(x));
        double f1 = f(x + h), f0 = f(x), fm = f(x - h);
        if (!std::isfinite(f1) || !std::isfinite(f0) || !std::isfinite(fm))
            throw NonFinite("function not finite on derivative stencil");
        return (f1 - 2.0 * f0 + fm) / (h * h);
    }
    throw InvalidArgument("numeric_derivative supports order 1 or 2");
}

} // namespace rankpower::asym
