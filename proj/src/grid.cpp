#include "presrec/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace presrec {

void GridSpec::validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("GridSpec: dim must be 2 or 3");
    for (int a = 0; a < dim; ++a) {
        if (shape[a] < 1)
            throw std::invalid_argument("GridSpec: axis " + std::to_string(a) +
                                        " needs >= 1 sample, got " + std::to_string(shape[a]));
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a]))
            throw std::invalid_argument("GridSpec: nonpositive spacing on axis " + std::to_string(a));
        if (!std::isfinite(origin[a]))
            throw std::invalid_argument("GridSpec: non-finite origin on axis " + std::to_string(a));
    }
    for (int a = dim; a < 3; ++a)
        if (shape[a] != 1) throw std::invalid_argument("GridSpec: trailing axis shape must be 1");
}

bool GridSpec::same_layout(const GridSpec& o) const {
    if (dim != o.dim) return false;
    for (int a = 0; a < dim; ++a) {
        if (shape[a] != o.shape[a]) return false;
        if (spacing[a] != o.spacing[a]) return false;
        if (origin[a] != o.origin[a]) return false;
    }
    return true;
}

void Window::validate(const GridSpec& g, int margin) const {
    for (int a = 0; a < g.dim; ++a) {
        if (lo[a] >= hi[a])
            throw std::invalid_argument("Window: lo >= hi on axis " + std::to_string(a));
        if (lo[a] < margin || hi[a] > g.shape[a] - margin)
            throw std::invalid_argument("Window: not interior (axis " + std::to_string(a) +
                                        " range [" + std::to_string(lo[a]) + "," + std::to_string(hi[a]) +
                                        ") on " + std::to_string(g.shape[a]) + " nodes, margin " +
                                        std::to_string(margin) + ")");
    }
}

Window central_window(const GridSpec& g, double fraction) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw std::invalid_argument("central_window: fraction must lie in (0,1]");
    Window w;
    for (int a = 0; a < g.dim; ++a) {
        int n = g.shape[a];
        int len = std::max(2, static_cast<int>(std::lround(fraction * n)));
        int lo = (n - len) / 2;
        w.lo[a] = lo;
        w.hi[a] = lo + len;
    }
    for (int a = g.dim; a < 3; ++a) { w.lo[a] = 0; w.hi[a] = 1; }
    return w;
}

GridSpec subgrid(const GridSpec& g, const Window& w) {
    GridSpec s;
    s.dim = g.dim;
    for (int a = 0; a < g.dim; ++a) {
        s.shape[a] = w.extent(a);
        s.spacing[a] = g.spacing[a];
        s.origin[a] = g.coord(a, w.lo[a]);
    }
    for (int a = g.dim; a < 3; ++a) { s.shape[a] = 1; s.spacing[a] = 1; s.origin[a] = 0; }
    s.validate();
    return s;
}

ScalarField::ScalarField(const GridSpec& s) : spec(s) {
    spec.validate();
    data.assign(spec.size(), 0.0);
}
VectorField::VectorField(const GridSpec& s) : spec(s) {
    spec.validate();
    data.assign(spec.size() * spec.dim, 0.0);
}
TensorField::TensorField(const GridSpec& s) : spec(s) {
    spec.validate();
    data.assign(spec.size() * spec.dim * spec.dim, 0.0);
}

namespace {

void check_finite_impl(const std::vector<double>& v, const char* who) {
    for (std::size_t k = 0; k < v.size(); ++k)
        if (!std::isfinite(v[k]))
            throw std::invalid_argument(std::string(who) + ": non-finite sample at flat index " +
                                        std::to_string(k));
}

}  // namespace

void ScalarField::check_finite(const char* who) const { check_finite_impl(data, who); }
void VectorField::check_finite(const char* who) const { check_finite_impl(data, who); }
void TensorField::check_finite(const char* who) const { check_finite_impl(data, who); }

namespace {

// d/dx along `axis` of one interleaved component. nc = values per node,
// comp = which one. Second order everywhere, one-sided at the two ends.
void axis_derivative(const GridSpec& g, const std::vector<double>& in, int nc, int comp,
                     int axis, std::vector<double>& out, int out_nc, int out_comp) {
    const int n0 = g.shape[0], n1 = g.shape[1], n2 = (g.dim == 3) ? g.shape[2] : 1;
    const double h = g.spacing[axis];
    const int m = g.shape[axis];
    if (m < 4)
        throw std::invalid_argument("difference stencil needs >= 4 samples on axis " +
                                    std::to_string(axis) + ", got " + std::to_string(m));
    const std::size_t stride_axis = [&] {
        if (axis == 0) return static_cast<std::size_t>(n1) * n2;
        if (axis == 1) return static_cast<std::size_t>(n2);
        return std::size_t{1};
    }();

    auto val = [&](std::size_t node) { return in[node * nc + comp]; };

    for (int i0 = 0; i0 < n0; ++i0)
        for (int i1 = 0; i1 < n1; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::size_t node = (static_cast<std::size_t>(i0) * n1 + i1) * n2 + i2;
                const int ia = (axis == 0) ? i0 : (axis == 1) ? i1 : i2;
                double d;
                if (ia == 0) {
                    d = (-1.5 * val(node) + 2.0 * val(node + stride_axis) -
                         0.5 * val(node + 2 * stride_axis)) / h;
                } else if (ia == m - 1) {
                    d = (1.5 * val(node) - 2.0 * val(node - stride_axis) +
                         0.5 * val(node - 2 * stride_axis)) / h;
                } else {
                    d = (val(node + stride_axis) - val(node - stride_axis)) / (2.0 * h);
                }
                out[node * out_nc + out_comp] = d;
            }
}

}  // namespace

VectorField gradient_fd(const ScalarField& f) {
    f.spec.validate();
    f.check_finite("gradient_fd");
    VectorField g(f.spec);
    for (int a = 0; a < f.spec.dim; ++a)
        axis_derivative(f.spec, f.data, 1, 0, a, g.data, f.spec.dim, a);
    return g;
}

VectorField divergence_fd(const TensorField& F) {
    F.spec.validate();
    F.check_finite("divergence_fd");
    const int d = F.spec.dim;
    VectorField out(F.spec);
    std::vector<double> tmp(F.spec.size());
    for (int r = 0; r < d; ++r) {
        std::fill(tmp.begin(), tmp.end(), 0.0);
        for (int c = 0; c < d; ++c) {
            std::vector<double> dc(F.spec.size());
            axis_derivative(F.spec, F.data, d * d, r * d + c, c, dc, 1, 0);
            for (std::size_t k = 0; k < tmp.size(); ++k) tmp[k] += dc[k];
        }
        for (std::size_t k = 0; k < tmp.size(); ++k) out.data[k * d + r] = tmp[k];
    }
    return out;
}

TensorField jacobian_fd(const VectorField& u) {
    u.spec.validate();
    u.check_finite("jacobian_fd");
    const int d = u.spec.dim;
    TensorField out(u.spec);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c)
            axis_derivative(u.spec, u.data, d, r, c, out.data, d * d, r * d + c);
    return out;
}

ScalarField divergence_fd(const VectorField& v) {
    v.spec.validate();
    v.check_finite("divergence_fd");
    const int d = v.spec.dim;
    ScalarField out(v.spec);
    std::vector<double> dc(v.spec.size());
    for (int c = 0; c < d; ++c) {
        axis_derivative(v.spec, v.data, d, c, c, dc, 1, 0);
        for (std::size_t k = 0; k < dc.size(); ++k) out.data[k] += dc[k];
    }
    return out;
}

namespace {

double trap_weight(int i, int lo, int hi) {  // hi exclusive
    return (i == lo || i == hi - 1) ? 0.5 : 1.0;
}

}  // namespace

double integrate(const ScalarField& f, const Window& w) {
    w.validate(f.spec, 0);
    const GridSpec& g = f.spec;
    const int n2lo = (g.dim == 3) ? w.lo[2] : 0, n2hi = (g.dim == 3) ? w.hi[2] : 1;
    double cell = 1.0;
    for (int a = 0; a < g.dim; ++a) cell *= g.spacing[a];
    KahanSum acc;
    for (int i0 = w.lo[0]; i0 < w.hi[0]; ++i0) {
        const double w0 = trap_weight(i0, w.lo[0], w.hi[0]);
        for (int i1 = w.lo[1]; i1 < w.hi[1]; ++i1) {
            const double w01 = w0 * trap_weight(i1, w.lo[1], w.hi[1]);
            for (int i2 = n2lo; i2 < n2hi; ++i2) {
                double wt = w01;
                if (g.dim == 3) wt *= trap_weight(i2, w.lo[2], w.hi[2]);
                acc.add(wt * f.at(i0, i1, i2));
            }
        }
    }
    return acc.value() * cell;
}

double lr_norm(const ScalarField& f, double r, const Window& w) {
    if (!(r >= 1.0)) throw std::invalid_argument("lr_norm: r must be >= 1");
    w.validate(f.spec, 0);
    const GridSpec& g = f.spec;
    const int n2lo = (g.dim == 3) ? w.lo[2] : 0, n2hi = (g.dim == 3) ? w.hi[2] : 1;
    double cell = 1.0;
    for (int a = 0; a < g.dim; ++a) cell *= g.spacing[a];
    KahanSum acc;
    for (int i0 = w.lo[0]; i0 < w.hi[0]; ++i0) {
        const double w0 = trap_weight(i0, w.lo[0], w.hi[0]);
        for (int i1 = w.lo[1]; i1 < w.hi[1]; ++i1) {
            const double w01 = w0 * trap_weight(i1, w.lo[1], w.hi[1]);
            for (int i2 = n2lo; i2 < n2hi; ++i2) {
                double wt = w01;
                if (g.dim == 3) wt *= trap_weight(i2, w.lo[2], w.hi[2]);
                acc.add(wt * std::pow(std::abs(f.at(i0, i1, i2)), r));
            }
        }
    }
    return std::pow(acc.value() * cell, 1.0 / r);
}

double oscillation(const ScalarField& f, const Window& w) {
    w.validate(f.spec, 0);
    const GridSpec& g = f.spec;
    const int n2lo = (g.dim == 3) ? w.lo[2] : 0, n2hi = (g.dim == 3) ? w.hi[2] : 1;
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    for (int i0 = w.lo[0]; i0 < w.hi[0]; ++i0)
        for (int i1 = w.lo[1]; i1 < w.hi[1]; ++i1)
            for (int i2 = n2lo; i2 < n2hi; ++i2) {
                const double v = f.at(i0, i1, i2);
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
    return mx - mn;
}

namespace {

// Base cell + barycentric weights for multilinear interpolation.
struct CellPos {
    int i[3];
    double t[3];
};

CellPos locate(const GridSpec& g, const std::array<double, 3>& x) {
    CellPos p{};
    for (int a = 0; a < g.dim; ++a) {
        const double s = (x[a] - g.origin[a]) / g.spacing[a];
        const double slack = 0.5;
        if (s < -slack || s > g.shape[a] - 1 + slack)
            throw std::invalid_argument("interpolate: point outside grid on axis " + std::to_string(a));
        double sc = std::clamp(s, 0.0, static_cast<double>(g.shape[a] - 1));
        int i = std::min(static_cast<int>(sc), g.shape[a] - 2);
        p.i[a] = i;
        p.t[a] = sc - i;
    }
    return p;
}

}  // namespace

double interpolate(const ScalarField& f, const std::array<double, 3>& x) {
    const GridSpec& g = f.spec;
    CellPos p = locate(g, x);
    if (g.dim == 2) {
        const double t0 = p.t[0], t1 = p.t[1];
        return (1 - t0) * (1 - t1) * f.at(p.i[0], p.i[1]) + (1 - t0) * t1 * f.at(p.i[0], p.i[1] + 1) +
               t0 * (1 - t1) * f.at(p.i[0] + 1, p.i[1]) + t0 * t1 * f.at(p.i[0] + 1, p.i[1] + 1);
    }
    double acc = 0.0;
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1)
            for (int b2 = 0; b2 < 2; ++b2) {
                const double wt = (b0 ? p.t[0] : 1 - p.t[0]) * (b1 ? p.t[1] : 1 - p.t[1]) *
                                  (b2 ? p.t[2] : 1 - p.t[2]);
                acc += wt * f.at(p.i[0] + b0, p.i[1] + b1, p.i[2] + b2);
            }
    return acc;
}

std::array<double, 3> interpolate(const VectorField& f, const std::array<double, 3>& x) {
    const GridSpec& g = f.spec;
    CellPos p = locate(g, x);
    std::array<double, 3> out{0, 0, 0};
    const int b2max = (g.dim == 3) ? 2 : 1;
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1)
            for (int b2 = 0; b2 < b2max; ++b2) {
                double wt = (b0 ? p.t[0] : 1 - p.t[0]) * (b1 ? p.t[1] : 1 - p.t[1]);
                if (g.dim == 3) wt *= (b2 ? p.t[2] : 1 - p.t[2]);
                for (int c = 0; c < g.dim; ++c)
                    out[c] += wt * f.at(p.i[0] + b0, p.i[1] + b1, p.i[2] + b2, c);
            }
    return out;
}

void interpolate(const TensorField& f, const std::array<double, 3>& x, double* out) {
    const GridSpec& g = f.spec;
    CellPos p = locate(g, x);
    const int d = g.dim;
    for (int k = 0; k < d * d; ++k) out[k] = 0.0;
    const int b2max = (g.dim == 3) ? 2 : 1;
    for (int b0 = 0; b0 < 2; ++b0)
        for (int b1 = 0; b1 < 2; ++b1)
            for (int b2 = 0; b2 < b2max; ++b2) {
                double wt = (b0 ? p.t[0] : 1 - p.t[0]) * (b1 ? p.t[1] : 1 - p.t[1]);
                if (g.dim == 3) wt *= (b2 ? p.t[2] : 1 - p.t[2]);
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        out[r * d + c] += wt * f.at(p.i[0] + b0, p.i[1] + b1, p.i[2] + b2, r, c);
            }
}

void parallel_for(std::size_t n, int nthreads, const std::function<void(std::size_t)>& body) {
    if (n == 0) return;
    if (nthreads <= 1 || n == 1) {
        for (std::size_t k = 0; k < n; ++k) body(k);
        return;
    }
    const std::size_t nt = std::min<std::size_t>(nthreads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::vector<std::exception_ptr> errs(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t b = t * n / nt, e = (t + 1) * n / nt;
            try {
                for (std::size_t k = b; k < e; ++k) body(k);
            } catch (...) {
                errs[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& ep : errs)
        if (ep) std::rethrow_exception(ep);
}

}  // namespace presrec
