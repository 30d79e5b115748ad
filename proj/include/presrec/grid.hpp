#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace presrec {

// Uniform vertex-centered Cartesian grid, dim 2 or 3.
// Node (i0,i1[,i2]) sits at origin[a] + i_a*spacing[a].
// Flat storage is row-major with the LAST axis fastest.
struct GridSpec {
    int dim = 2;
    std::array<int, 3> shape{1, 1, 1};      // unused trailing axes hold 1
    std::array<double, 3> spacing{1, 1, 1};
    std::array<double, 3> origin{0, 0, 0};

    void validate() const;  // throws std::invalid_argument on bad shape/spacing

    std::size_t size() const {
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(shape[a]);
        return n;
    }
    std::size_t index(int i0, int i1, int i2 = 0) const {
        if (dim == 2) return static_cast<std::size_t>(i0) * shape[1] + i1;
        return (static_cast<std::size_t>(i0) * shape[1] + i1) * static_cast<std::size_t>(shape[2]) + i2;
    }
    double coord(int axis, int i) const { return origin[axis] + spacing[axis] * i; }
    std::array<double, 3> point(int i0, int i1, int i2 = 0) const {
        return {coord(0, i0), coord(1, i1), dim == 3 ? coord(2, i2) : 0.0};
    }
    bool same_layout(const GridSpec& o) const;
};

// Half-open index box [lo, hi) per axis. Used for the nested evaluation
// windows: every window we accept sits >= `margin` cells inside the grid.
struct Window {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> hi{1, 1, 1};

    int extent(int a) const { return hi[a] - lo[a]; }
    std::size_t count(int dim) const {
        std::size_t n = 1;
        for (int a = 0; a < dim; ++a) n *= static_cast<std::size_t>(extent(a));
        return n;
    }
    bool contains(int dim, const std::array<int, 3>& idx) const {
        for (int a = 0; a < dim; ++a)
            if (idx[a] < lo[a] || idx[a] >= hi[a]) return false;
        return true;
    }
    void validate(const GridSpec& g, int margin = 2) const;  // throws
};

// Central sub-box covering `fraction` of each axis (rounded to nodes).
Window central_window(const GridSpec& g, double fraction);

// Grid restricted to a window: shape = extents, origin shifted. Spacing kept.
GridSpec subgrid(const GridSpec& g, const Window& w);

struct ScalarField {
    GridSpec spec;
    std::vector<double> data;  // data[node]

    ScalarField() = default;
    explicit ScalarField(const GridSpec& s);
    double& at(int i0, int i1, int i2 = 0) { return data[spec.index(i0, i1, i2)]; }
    double at(int i0, int i1, int i2 = 0) const { return data[spec.index(i0, i1, i2)]; }
    void check_finite(const char* who) const;  // throws on NaN/Inf with flat index
};

// Components interleaved per node: data[node*dim + c].
struct VectorField {
    GridSpec spec;
    std::vector<double> data;

    VectorField() = default;
    explicit VectorField(const GridSpec& s);
    double& at(int i0, int i1, int i2, int c) { return data[spec.index(i0, i1, i2) * spec.dim + c]; }
    double at(int i0, int i1, int i2, int c) const { return data[spec.index(i0, i1, i2) * spec.dim + c]; }
    void check_finite(const char* who) const;
};

// Tensor f = (f^i_j), i = row. data[node*dim*dim + i*dim + j].
struct TensorField {
    GridSpec spec;
    std::vector<double> data;

    TensorField() = default;
    explicit TensorField(const GridSpec& s);
    double& at(int i0, int i1, int i2, int r, int c) {
        return data[(spec.index(i0, i1, i2) * spec.dim + r) * spec.dim + c];
    }
    double at(int i0, int i1, int i2, int r, int c) const {
        return data[(spec.index(i0, i1, i2) * spec.dim + r) * spec.dim + c];
    }
    void check_finite(const char* who) const;
};

// Centered second-order differences inside, one-sided second-order rows
// (-3/2, 2, -1/2)/h at the two boundary nodes. Exact on affine data.
VectorField gradient_fd(const ScalarField& f);

// Row-wise divergence (div F)^i = sum_j d_j F^i_j.
VectorField divergence_fd(const TensorField& F);

// Jacobian (grad u)^i_j = d_j u^i, same stencils.
TensorField jacobian_fd(const VectorField& u);

// Scalar divergence of a vector field, same stencils.
ScalarField divergence_fd(const VectorField& v);

// Composite trapezoid over the window (product weights, 1/2 on window faces).
// Deterministic compensated summation.
double integrate(const ScalarField& f, const Window& w);

// (integral of |f|^r)^(1/r), r >= 1, trapezoid weights as in integrate().
double lr_norm(const ScalarField& f, double r, const Window& w);

double oscillation(const ScalarField& f, const Window& w);  // max - min

// Multilinear interpolation at a physical point (must lie inside the grid box
// up to a half-spacing slack; clamped to the boundary cell beyond that).
double interpolate(const ScalarField& f, const std::array<double, 3>& x);
std::array<double, 3> interpolate(const VectorField& f, const std::array<double, 3>& x);
void interpolate(const TensorField& f, const std::array<double, 3>& x, double* out);

// Deterministic static partition of [0,n) over nthreads (<=1 runs inline).
// Bodies must write disjoint outputs.
void parallel_for(std::size_t n, int nthreads, const std::function<void(std::size_t)>& body);

// Kahan-compensated accumulator for deterministic reductions.
struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    double value() const { return s; }
};

}  // namespace presrec
