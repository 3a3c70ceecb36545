#pragma once

#include <functional>
#include <string>
#include <vector>

// Efficiency and deficiency calculus on power expansions
//
//   pi_n(K(c,n)) = p0(c) + p1(c) n^{-1/2} + p2(c) n^{-1} + o(n^{-1}).
//
// The asymptotic relative efficiency E(A,B) solves a0(c) = b0(c E^{1/2});
// when E = 1 the deficiency d_n = k_n - n is extracted by matching the full
// expansions with k treated as continuous, and fitted as h1 sqrt(n) + h2.

namespace rankpower::asym {

struct PowerExpansion {
    std::function<double(double)> p0; // strictly increasing, values in (0,1)
    std::function<double(double)> p1;
    std::function<double(double)> p2;
    double c_min = 0.0; // declared domain of the coefficient functions
    double c_max = 0.0;
};

// First-order Gaussian local power model: p0(c) = Phi(e c - z_alpha),
// p1 = p2 = 0. Unbounded domain.
struct GaussianLocalPower {
    double efficacy = 1.0;
    double alpha = 0.05;
    PowerExpansion expansion() const;
};

// Coefficient functions tabulated on knots, interpolated by a monotone
// (Fritsch-Carlson) cubic. Knots must be strictly increasing in c; p0
// values must be strictly increasing and inside (0,1).
PowerExpansion tabulated_expansion(const std::vector<double>& c,
                                   const std::vector<double>& p0,
                                   const std::vector<double>& p1,
                                   const std::vector<double>& p2);

// Solves a0(c) = b0(c E^{1/2}) for E by bisection over E in [1e-8, 1e8].
double are(const PowerExpansion& A, const PowerExpansion& B, double c);

struct DeficiencyFit {
    std::vector<double> n_grid;
    std::vector<double> d_values; // NaN where the match had no solution
    std::vector<bool> usable;
    double h1 = 0.0;
    double h2 = 0.0;
    double residual_norm = 0.0;
};

// Solves pi_{n,A}(K(c,n)) = pi_{k,B}(K(c(k/n)^{1/2}, k)) for continuous k
// at a single n (tolerance 1e-10 in power). Throws NoSolution when the
// bracket never crosses.
double matched_size_continuous(const PowerExpansion& A, const PowerExpansion& B,
                               double c, double n);

// Runs the match at every n in the grid, records d_n = k - n, and fits
// d_n ~ h1 sqrt(n) + h2 by least squares. Requires ARE(A,B;c) = 1 within
// 1e-6; per-point NoSolution is recorded, not fatal; DegenerateFit when
// fewer than 3 grid points are usable.
DeficiencyFit deficiency_curve(const PowerExpansion& A, const PowerExpansion& B,
                               double c, const std::vector<double>& n_grid);

// Closed first-order coefficient h1 = 2 (a1(c) - b1(c)) / (c b0'(c)).
double deficiency_leading_coeff(const PowerExpansion& A, const PowerExpansion& B,
                                double c);

// Central difference of order 1 or 2; step 1e-6 max(1,|x|) for order 1 and
// 1e-4 max(1,|x|) for order 2.
double numeric_derivative(const std::function<double(double)>& f, double x,
                          int order);

} // namespace rankpower::asym
