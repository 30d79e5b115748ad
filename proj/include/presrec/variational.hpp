#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "presrec/elasticity.hpp"
#include "presrec/grid.hpp"

namespace presrec {

// Smooth vector field with analytic jacobian, for variations and flows.
// Bump-built fields are supported in the ball B(center, radius); the rigid
// generator has radius = infinity and is exempt from support checks.
struct TestField {
    int dim = 2;
    bool divergence_free = false;
    std::function<std::array<double, 3>(const std::array<double, 3>&)> value;
    std::function<Mat(const std::array<double, 3>&)> grad;  // (grad v)^i_j = d v^i / d y_j
    std::array<double, 3> center{0.0, 0.0, 0.0};
    double radius = 0.0;
};

// Divergence-free bump: 2D the rotated gradient of a scalar bump, 3D the
// curl of a bump potential, so div v = 0 holds exactly (the mixed second
// derivatives are mirrored, making the cancellation exact in floating
// point). `seed` draws the affine modulation of the profile.
TestField divfree_bump(int dim, const std::array<double, 3>& center, double radius,
                       std::uint64_t seed);

// Radial bump aligned with (y - center): compactly supported but NOT
// divergence free, for the nonzero-variation checks.
TestField radial_bump_field(int dim, const std::array<double, 3>& center, double radius,
                            double amp);

// Rigid rotation generator (-y2, y1) about the origin (about x3 in 3D).
TestField rotation_generator(int dim);

struct FlowResult {
    std::array<double, 3> y{};
    Mat jac;  // grad_y phi_t
};

// Integrate dphi/dt = v(phi), phi_0 = y0, with the classical four-stage
// one-step scheme on the pair (phi, grad phi). dt <= 0 picks the default
// |t|/64. For divergence-free v the exact flow keeps det grad phi = 1; the
// integrator tracks it to fourth order in dt.
FlowResult flow_map(const TestField& v, double t, const std::array<double, 3>& y0,
                    double dt = 0.0);

// w = phi_t o u. Analytic deformations compose (value, jacobian, and the
// reverse-flow inverse, exact to integrator accuracy); discrete ones have
// their samples advected. The perturbation vanishes outside supp v, so
// supp(w - u) stays interior whenever the support ball of v does.
Deformation incompressible_perturb(const Deformation& u, const TestField& v, double t,
                                   double dt = 0.0);

// Trapezoid quadrature of the stored energy density over the grid box.
double total_energy(const Deformation& u, const Material& m, const GridSpec& g);

// integral of DL(grad u) : grad(v o u) over the grid box; vanishes at a
// minimizer for divergence-free v.
double first_variation(const Deformation& u, const TestField& v, const Material& m,
                       const GridSpec& g);

// | integral DL(grad u):grad(v o u) dx  -  integral q div v dy |, the
// second quadrature over the grid of q (which lives on the deformed
// domain). For divergence-free v the second term is exactly zero and the
// residual reduces to |first_variation|.
double pressure_identity_residual(const Deformation& u, const ScalarField& q,
                                  const TestField& v, const Material& m, const GridSpec& g);

// | integral (DL(grad u) - p cof grad u) : grad phi dx |, the weak form of
// the pressure-coupled equilibrium system. p must live on g itself.
double el_weak_residual(const Deformation& u, const ScalarField& p, const TestField& phi,
                        const Material& m, const GridSpec& g);

// L2 norm over the window of the row-wise divergence of cof grad u, which
// vanishes identically for smooth maps.
double piola_check(const Deformation& u, const GridSpec& g, const Window& w);

}  // namespace presrec
