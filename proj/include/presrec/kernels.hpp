#pragma once

#include <array>
#include <functional>
#include <vector>

#include "presrec/grid.hpp"

namespace presrec {

// Geometry constants for R^n.
double unit_ball_volume(int n);   // pi^{n/2} / Gamma(n/2 + 1)
double unit_sphere_area(int n);   // n * unit_ball_volume(n)

// Fundamental solution of -Laplace: n=2 -log|x|/(2 pi), n>=3 |x|^{2-n}/(n(n-2)a(n)).
double newtonian_potential(int n, const std::array<double, 3>& x);

// grad Phi(y) = -y / (omega_n |y|^n)
std::array<double, 3> newtonian_gradient(int n, const std::array<double, 3>& y);

// Omega_ij(y) = delta_ij - n y_i y_j / |y|^2. Degree-0 homogeneous, symmetric,
// trace-free, zero mean on the unit sphere. Hess Phi = -Omega/(omega_n |y|^n).
double cz_kernel(int n, int i, int j, const std::array<double, 3>& y);

// Average of G over the unit sphere S^{n-1}. n=2: periodic trapezoid (512),
// n=3: Gauss-Legendre x trapezoid product rule (48 x 96).
double sphere_mean(int n, const std::function<double(const std::array<double, 3>&)>& G);

// k-point Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre_rule(int k, std::vector<double>& nodes, std::vector<double>& weights);

// Radial C^inf bump supported on |x| < eps, unit mass. Normalization from a
// high-order 1D radial quadrature, cached per construction.
struct Mollifier {
    int dim;
    double eps;
    double norm_const;  // so that integral of rho_eps over R^n is 1

    Mollifier(int n, double eps_);
    double operator()(const std::array<double, 3>& x) const;
};

// C^inf cutoff: 1 on the inner box, 0 outside the outer box, built per axis
// from the exp(-1/t) transition. Carries analytic gradient and Hessian.
// The transition bands are centered in the inner/outer gaps; width_fraction
// scales their width relative to the gap (must lie in (0,1]).
struct Cutoff {
    int dim;
    // per-axis rise band [r0,r1] and fall band [f0,f1]; eta=1 on [r1,f0]
    std::array<double, 3> r0{}, r1{}, f0{}, f1{};

    Cutoff(const GridSpec& g, const Window& inner, const Window& outer,
           double width_fraction = 0.5);

    double value(const std::array<double, 3>& x) const;
    std::array<double, 3> gradient(const std::array<double, 3>& x) const;
    void hessian(const std::array<double, 3>& x, double* out) const;  // dim*dim row-major
    double laplacian(const std::array<double, 3>& x) const;

    ScalarField sample(const GridSpec& g) const;
    ScalarField sample_laplacian(const GridSpec& g) const;
};

// Derivatives in y of  G(y) = eta(y) * Phi(x - y), for y != x:
//   dG_i    = eta_i Phi - eta r_i/(omega |r|^n)                      (r = y - x)
//   ddG_ij  = eta_ij Phi - (eta_i r_j + eta_j r_i)/(omega |r|^n)
//             - eta Omega_ij(r)/(omega |r|^n)
std::array<double, 3> eta_phi_gradient(int n, const std::array<double, 3>& x,
                                       const std::array<double, 3>& y, const Cutoff& eta);
void eta_phi_hessian(int n, const std::array<double, 3>& x, const std::array<double, 3>& y,
                     const Cutoff& eta, double* out);

}  // namespace presrec
