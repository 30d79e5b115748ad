#pragma once

#include <array>
#include <functional>

#include "presrec/grid.hpp"

namespace presrec {

// Dense n x n matrix in a fixed 3x3 slab, row major, n in {2, 3}. The
// inactive slots stay zero so norms and products can run over the full slab.
struct Mat {
    int n = 3;
    std::array<double, 9> v{};

    Mat() = default;
    explicit Mat(int dim) : n(dim) {}
    double& at(int i, int j) { return v[i * 3 + j]; }
    double at(int i, int j) const { return v[i * 3 + j]; }
    static Mat identity(int dim);
};

Mat matmul(const Mat& x, const Mat& y);
Mat transpose(const Mat& x);
double frobenius2(const Mat& x);  // |X|^2, sum of squared entries
double det(const Mat& x);

// Signed-minor cofactor: P^t cof(P) = det(P) Id. 2D: [[d,-c],[-b,a]].
Mat cofactor(const Mat& p);

// Inverse through the cofactor; throws when |det| is below 1e-14.
Mat inverse(const Mat& p);

struct Material {
    double mu1 = 1.0;     // > 0
    double mu2 = 1.0;     // >= 0
    double lambda0 = 1.0; // > 0, ellipticity constant
    void validate() const;
};

// Stored energy (mu1/2)(|P|^2 - n) + (mu2/2)(|cof P|^2 - n). In 2D the
// cofactor term repeats |P|^2, so only the constants differ by dimension;
// the -n offsets never reach any derivative.
double mr_energy(const Mat& p, const Material& m);

// Energy derivative DL = mu1 P + mu2 D(|cof P|^2 / 2), the second block
// assembled from the minor expansion of the cofactor.
Mat mr_stress(const Mat& p, const Material& m);

// Both sides of max(|L|, |(DL)^t P|_F) <= C (1 + |P|^2 + |cof P|^2).
struct GrowthReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;  // rhs - lhs
    bool ok = false;
};
GrowthReport growth_check(const Mat& p, const Material& m, double C);

// A deformation of the flat domain: either sampled map values on a grid or
// closed forms. Closed-form maps may carry an inverse; without one,
// inversion falls back to Newton on the map itself.
struct Deformation {
    int dim = 2;
    bool analytic = false;
    VectorField samples;  // discrete branch: map values at nodes
    std::function<std::array<double, 3>(const std::array<double, 3>&)> map;
    std::function<Mat(const std::array<double, 3>&)> jacobian;
    std::function<std::array<double, 3>(const std::array<double, 3>&)> inverse;
};

Deformation identity_map(int dim);
// x1 += gamma x2, volume preserving, inverse subtracts the same shear.
Deformation shear_map(int dim, double gamma);
// Rigid rotation about the origin (about the x3 axis in 3D).
Deformation rotation_map(int dim, double angle);
// Rotation of the first two coordinates about `center` by the radius
// dependent angle amp*exp(-|x-c|^2/width^2). Radii are preserved, so the
// inverse rotates back by the same angle and det grad u = 1 exactly.
Deformation twist_map(int dim, double amp, double width,
                      const std::array<double, 3>& center);

// Jacobian at a physical point: closed form when analytic, interpolated
// finite differences otherwise (the discrete branch differentiates the
// whole sample grid per call; fine for spot checks, not for hot loops).
Mat deformation_jacobian(const Deformation& u, const std::array<double, 3>& x);

// Map value at a physical point (interpolated on the discrete branch).
std::array<double, 3> deformation_value(const Deformation& u, const std::array<double, 3>& x);

// Pull a point back through the deformation: closed-form inverse when
// present, else Newton iteration to 1e-12 (max 50 steps) seeded at y.
std::array<double, 3> deformation_inverse(const Deformation& u, const std::array<double, 3>& y);

// sigma = (DL(grad u))^t grad u at every node of g. Discrete deformations
// must be sampled on g itself.
TensorField cauchy_green_strain(const Deformation& u, const Material& m, const GridSpec& g);

// sigma~ = sigma o u^{-1} on the nodes of `target`: each target node is
// pulled back through the inverse and sigma is interpolated there, so the
// target box must land inside the sigma grid under u^{-1}.
TensorField pushforward(const TensorField& sigma, const Deformation& u, const GridSpec& target);

struct AdmissibilityReport {
    double max_det_err = 0.0;  // sup |det grad u - 1| over nodes
    double grad_norm_r = 0.0;  // || |grad u| ||_r
    double cof_norm_r = 0.0;   // || |cof grad u| ||_r
    bool ok = false;
};

// Volume preservation |det grad u - 1| <= tol at every node of g, plus
// finiteness of the r-norms that place u in the cofactor energy class.
AdmissibilityReport validate_admissible(const Deformation& u, const GridSpec& g, double r,
                                        double tol);

}  // namespace presrec
