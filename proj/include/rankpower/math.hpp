#pragma once

#include <cstdint>
#include <functional>
#include <vector>

// Scalar special functions and numeric utilities used across the library.
// Accuracy contracts:
//   normal_cdf / normal_quantile: absolute error <= 1e-10 on (1e-300, 1-1e-16)
//   student_t_cdf: absolute error <= 1e-10 (regularized incomplete beta)
//   integrate_adaptive: absolute error <= requested tolerance or throws

namespace rankpower::math {

double normal_pdf(double x);
double normal_cdf(double x);
// Inverse of normal_cdf. Valid for p in (0, 1); refined to near machine
// precision by Halley iterations on erfc.
double normal_quantile(double p);

// Regularized incomplete beta I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);

// Student t distribution with nu degrees of freedom.
double student_t_cdf(double x, double nu);
double student_t_quantile(double p, double nu);

// CDF and upper quantile of the sum of n independent Uniform(-1,1)
// variables. Exact piecewise-polynomial form for small n, characteristic
// function inversion otherwise.
double uniform_sum_cdf(double s, int n);
double uniform_sum_quantile(double p, int n);

// Adaptive Simpson on [a, b]; throws QuadratureFailure if the tolerance
// cannot be met within the depth limit.
double integrate_adaptive(const std::function<double(double)>& f,
                          double a, double b, double tol, int max_depth = 48);

// log Gamma wrappers for counting.
double log_factorial(int n);
double log_choose(int n, int k);

// Exact C(n, k) saturating at 2^64-1.
std::uint64_t choose_saturated(int n, int k);

// Pool-adjacent-violators: least-squares nondecreasing fit of y (optionally
// weighted). Returns the fitted values.
std::vector<double> isotonic_fit(const std::vector<double>& y,
                                 const std::vector<double>& w = {});

// Least-squares fit y ~ b0*x + b1; returns {b0, b1, residual_norm}.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_norm = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Compensated (Kahan) accumulation.
class KahanSum {
public:
    void add(double v) {
        double y = v - c_;
        double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0;
    double c_ = 0.0;
};

} // namespace rankpower::math
