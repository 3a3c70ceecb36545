#include "rankpower/math.hpp"
#include "rankpower/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rankpower::math {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

// Rational initial guess for the normal quantile (Acklam's coefficients),
// refined below.
double normal_quantile_guess(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    double q = p - 0.5;
    double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

double betacf(double a, double b, double x) {
    const int max_iter = 400;
    const double eps = 3.0e-16;
    const double fpmin = 1.0e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) return h;
    }
    throw QuadratureFailure("incomplete beta continued fraction did not converge");
}

struct SimpsonCtx {
    const std::function<double(double)>* f;
    int max_depth;
};

double adaptive_simpson_rec(const SimpsonCtx& ctx, double a, double b, double fa,
                            double fm, double fb, double whole, double tol,
                            int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = (*ctx.f)(lm), frm = (*ctx.f)(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    if (depth >= ctx.max_depth)
        throw QuadratureFailure("adaptive Simpson depth limit reached");
    return adaptive_simpson_rec(ctx, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           adaptive_simpson_rec(ctx, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

// Exact CDF of a sum of n Uniform(0,1) at x (Irwin-Hall), stable only for
// small n.
double irwin_hall_cdf(double x, int n) {
    if (x <= 0.0) return 0.0;
    if (x >= n) return 1.0;
    // sum_{k<=floor(x)} (-1)^k C(n,k) (x-k)^n / n!
    double s = 0.0;
    int kmax = static_cast<int>(std::floor(x));
    for (int k = 0; k <= kmax; ++k) {
        double term = std::exp(log_choose(n, k) + n * std::log(x - k) - log_factorial(n));
        s += (k % 2 == 0) ? term : -term;
    }
    return std::clamp(s, 0.0, 1.0);
}

} // namespace

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidArgument("normal_quantile requires p in (0,1)");
    if (p > 0.5) return -normal_quantile(1.0 - p); // exact for p in [0.5, 1)
    double x = normal_quantile_guess(p);
    // Halley refinement on F(x) - p = 0.
    for (int it = 0; it < 3; ++it) {
        double e = normal_cdf(x) - p;
        double d = normal_pdf(x);
        if (d <= 0.0) break;
        double u = e / d;
        x -= u / (1.0 + 0.5 * u * x);
    }
    return x;
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
    double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double student_t_cdf(double x, double nu) {
    if (nu <= 0.0) throw InvalidArgument("student_t_cdf requires nu > 0");
    if (x == 0.0) return 0.5;
    double ib = incomplete_beta(0.5 * nu, 0.5, nu / (nu + x * x));
    return x > 0.0 ? 1.0 - 0.5 * ib : 0.5 * ib;
}

double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidArgument("student_t_quantile requires p in (0,1)");
    if (p == 0.5) return 0.0;
    // Bracket then bisect; the CDF is strictly increasing.
    double lo = -1.0, hi = 1.0;
    while (student_t_cdf(lo, nu) > p) lo *= 2.0;
    while (student_t_cdf(hi, nu) < p) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(lo)); ++it) {
        double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, nu) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double uniform_sum_cdf(double s, int n) {
    if (n < 1) throw InvalidArgument("uniform_sum_cdf requires n >= 1");
    if (s <= -n) return 0.0;
    if (s >= n) return 1.0;
    if (n <= 25) {
        // Sum of n U(-1,1) = 2*IrwinHall(n) - n.
        return irwin_hall_cdf(0.5 * (s + n), n);
    }
    // Gil-Pelaez inversion with cf (sin t / t)^n; the integrand is damped
    // like exp(-n t^2 / 6), so truncation at t_max is safe.
    double t_max = std::min(std::numbers::pi, std::sqrt(6.0 * 60.0 / n) * 1.5);
    auto integrand = [&](double t) -> double {
        if (t == 0.0) return s;
        double base = std::sin(t) / t;
        double cf = std::pow(std::fabs(base), n);
        if ((base < 0.0) && (n % 2 != 0)) cf = -cf;
        return std::sin(t * s) * cf / t;
    };
    double integral = integrate_adaptive(integrand, 0.0, t_max, 1e-12);
    return std::clamp(0.5 + integral / std::numbers::pi, 0.0, 1.0);
}

double uniform_sum_quantile(double p, int n) {
    if (!(p > 0.0 && p < 1.0))
        throw InvalidArgument("uniform_sum_quantile requires p in (0,1)");
    double lo = -static_cast<double>(n), hi = static_cast<double>(n);
    for (int it = 0; it < 200 && hi - lo > 1e-12 * n; ++it) {
        double mid = 0.5 * (lo + hi);
        (uniform_sum_cdf(mid, n) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double integrate_adaptive(const std::function<double(double)>& f, double a,
                          double b, double tol, int max_depth) {
    if (a == b) return 0.0;
    SimpsonCtx ctx{&f, max_depth};
    double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    if (!std::isfinite(fa) || !std::isfinite(fb) || !std::isfinite(fm))
        throw NonFinite("integrand not finite on initial stencil");
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_rec(ctx, a, b, fa, fm, fb, whole, tol, 0);
}

double log_factorial(int n) {
    if (n < 0) throw InvalidArgument("log_factorial requires n >= 0");
    return std::lgamma(static_cast<double>(n) + 1.0);
}

double log_choose(int n, int k) {
    if (k < 0 || k > n) return -std::numeric_limits<double>::infinity();
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

std::uint64_t choose_saturated(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    const std::uint64_t cap = std::numeric_limits<std::uint64_t>::max();
    std::uint64_t result = 1;
    for (int i = 1; i <= k; ++i) {
        std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
        // result * num / i is integral at every step; guard the product.
        if (result > cap / num) return cap;
        result = result * num / static_cast<std::uint64_t>(i);
    }
    return result;
}

std::vector<double> isotonic_fit(const std::vector<double>& y,
                                 const std::vector<double>& w) {
    const std::size_t n = y.size();
    std::vector<double> weights = w.empty() ? std::vector<double>(n, 1.0) : w;
    if (weights.size() != n)
        throw LengthMismatch("isotonic_fit weight length mismatch");
    // Pool adjacent violators.
    std::vector<double> level_value, level_weight;
    std::vector<std::size_t> level_count;
    level_value.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        level_value.push_back(y[i]);
        level_weight.push_back(weights[i]);
        level_count.push_back(1);
        while (level_value.size() >= 2 &&
               level_value[level_value.size() - 2] > level_value.back()) {
            double wsum = level_weight[level_weight.size() - 2] + level_weight.back();
            double v = (level_value[level_value.size() - 2] *
                            level_weight[level_weight.size() - 2] +
                        level_value.back() * level_weight.back()) /
                       wsum;
            std::size_t c = level_count[level_count.size() - 2] + level_count.back();
            level_value.pop_back();
            level_weight.pop_back();
            level_count.pop_back();
            level_value.back() = v;
            level_weight.back() = wsum;
            level_count.back() = c;
        }
    }
    std::vector<double> fitted;
    fitted.reserve(n);
    for (std::size_t l = 0; l < level_value.size(); ++l)
        fitted.insert(fitted.end(), level_count[l], level_value[l]);
    return fitted;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw DegenerateFit("fit_line needs >= 2 points");
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    double det = n * sxx - sx * sx;
    if (std::fabs(det) < 1e-30) throw DegenerateFit("fit_line collinear inputs");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / det;
    fit.intercept = (sy - fit.slope * sx) / n;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - fit.slope * x[i] - fit.intercept;
        ss += r * r;
    }
    fit.residual_norm = std::sqrt(ss);
    return fit;
}

} // namespace rankpower::math
