#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "presrec/grid.hpp"
#include "presrec/kernels.hpp"

namespace presrec {

// How cells near the truncation ball are treated, where the kernel varies
// fastest. cell_average integrates the kernel exactly over each near cell,
// carries the kernel's first moment against a difference gradient of g (so
// the kernel-weighted centroid offset does not leave an O(h) bias; without
// this, odd kernels converge only linearly), and restores the analytically
// integrated first-order content of every cell the truncation radius
// excludes, singular cell included; the result is then independent of
// delta_seq by construction. point_sample keeps the raw truncated node sums
// driven by delta_seq plus Richardson extrapolation.
enum class NearCellRule { cell_average, point_sample };

// Principal-value quadrature controls. delta_seq entries are truncation radii
// in units of the (isotropic) grid spacing, strictly decreasing, min >= 1.
struct PvConfig {
    std::vector<double> delta_seq{4.0, 2.0, 1.0};
    bool extrapolate = true;
    NearCellRule near_cell_rule = NearCellRule::cell_average;
    int near_table_range = 6;  // cell-averaged kernel for offsets |m|_inf <= range
    int threads = 1;
    std::vector<double>* delta_trace = nullptr;  // optional: L2 of the result per delta
};

// Discrete convolution with the unit-mass radial bump at scale eps. The node
// stencil weights are renormalized to sum to one, so constants are preserved
// exactly; near the boundary the stencil is clipped and renormalized locally.
ScalarField mollify_field(const ScalarField& f, double eps);
TensorField mollify_field(const TensorField& f, double eps);

// x -> integral of Phi(x - y) g(y) dy by node sums; cells near the diagonal
// use exact-in-quadrature cell averages of Phi so the integrable singularity
// costs O(h^2) and not O(1). Result lives on the eval sub-grid.
ScalarField convolve_potential(const ScalarField& g, const Window& eval, int threads = 1);

// T0 g(x) = pv integral of K((x-y)/|x-y|)/|x-y|^n g(y) dy for a degree-0
// kernel with zero sphere mean (checked, tolerance 1e-8). Strategy: skip the
// singular cell, subtract g(x) inside the largest ball around x that fits in
// the support box (the mean-zero property makes that free), cell-average the
// kernel near the origin, truncate at each delta in cfg and extrapolate.
ScalarField pv_convolve(const std::function<double(const std::array<double, 3>&)>& K,
                        const ScalarField& g, const Window& eval, const PvConfig& cfg = {});

// Periodized Fourier multiplier on a zero-padded copy of f. pad_factor >= 1
// scales each axis before the transform; the multiplier sees physical
// frequencies xi. DC and Nyquist planes are zeroed. Real in, real out.
ScalarField apply_fourier_multiplier(
    const ScalarField& f, double pad_factor,
    const std::function<std::complex<double>(const std::array<double, 3>&)>& mult);

struct RieszConfig {
    double pad_factor = 2.0;  // >= 1; 1 means plain periodization
    int threads = 1;
};

// R_j via the spectral symbol -i xi_j/|xi| on the padded grid (default path).
ScalarField riesz_transform(int j, const ScalarField& f, const RieszConfig& cfg = {});

// R_j via pv_convolve with kernel c_n y_j/|y|^{n+1}; cross-validation path.
ScalarField riesz_transform_pv(int j, const ScalarField& f, const Window& eval,
                               const PvConfig& cfg = {});

// Riesz normalization Gamma((n+1)/2)/pi^{(n+1)/2}: 1/(2 pi) in 2d, 1/pi^2 in 3d.
double riesz_constant(int n);

}  // namespace presrec
