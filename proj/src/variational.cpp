#include "presrec/variational.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

namespace presrec {

namespace {

void require_dim(int n, const char* who) {
    if (n != 2 && n != 3)
        throw std::invalid_argument(std::string(who) + ": dim must be 2 or 3");
}

// Radial profile (1 - s)^8 of s = |x-c|^2/rho^2, modulated by an affine
// factor. Seven continuous derivatives at the support edge keep the
// trapezoid quadratures of these fields far below the test tolerances.
struct BumpScalar {
    int dim = 2;
    std::array<double, 3> c{};
    double rho = 1.0;
    double amp = 1.0;
    std::array<double, 3> beta{};

    // val, gradient g[3], hessian H (row major 3x3, mirrored exactly)
    void eval(const std::array<double, 3>& x, double& val, double* g, double* H) const {
        val = 0.0;
        for (int a = 0; a < 9; ++a) H[a] = 0.0;
        for (int a = 0; a < 3; ++a) g[a] = 0.0;
        double d[3] = {0.0, 0.0, 0.0};
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
            d[a] = x[a] - c[a];
            s += d[a] * d[a];
        }
        s /= rho * rho;
        if (s >= 1.0) return;
        const double o = 1.0 - s;
        const double o2 = o * o, o3 = o2 * o;
        const double B = o3 * o3 * o2;       // (1-s)^8
        const double Bp = -8.0 * o3 * o3 * o;  // d/ds
        const double Bpp = 56.0 * o3 * o3;
        double P = 1.0;
        double Pa[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
            P += beta[a] * d[a] / rho;
            Pa[a] = beta[a] / rho;
        }
        double sa[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) sa[a] = 2.0 * d[a] / (rho * rho);
        val = amp * B * P;
        for (int a = 0; a < dim; ++a) g[a] = amp * (Bp * sa[a] * P + B * Pa[a]);
        for (int a = 0; a < dim; ++a)
            for (int b = a; b < dim; ++b) {
                double h = Bpp * sa[a] * sa[b] * P + Bp * (sa[a] * Pa[b] + sa[b] * Pa[a]);
                if (a == b) h += Bp * 2.0 / (rho * rho) * P;
                H[a * 3 + b] = amp * h;
                H[b * 3 + a] = H[a * 3 + b];  // exact mirror
            }
    }
};

}  // namespace

TestField divfree_bump(int dim, const std::array<double, 3>& center, double radius,
                       std::uint64_t seed) {
    require_dim(dim, "divfree_bump");
    if (!(radius > 0.0)) throw std::invalid_argument("divfree_bump: radius must be > 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(-1.0, 1.0);

    TestField v;
    v.dim = dim;
    v.divergence_free = true;
    v.center = center;
    v.radius = radius;

    if (dim == 2) {
        BumpScalar psi{2, center, radius, 0.5 + 0.5 * std::abs(U(rng)), {U(rng), U(rng), 0.0}};
        v.value = [psi](const std::array<double, 3>& y) {
            double val, g[3], H[9];
            psi.eval(y, val, g, H);
            return std::array<double, 3>{-g[1], g[0], 0.0};
        };
        v.grad = [psi](const std::array<double, 3>& y) {
            double val, g[3], H[9];
            psi.eval(y, val, g, H);
            Mat m(2);
            m.at(0, 0) = -H[1 * 3 + 0];
            m.at(0, 1) = -H[1 * 3 + 1];
            m.at(1, 0) = H[0 * 3 + 0];
            m.at(1, 1) = H[0 * 3 + 1];
            return m;
        };
        return v;
    }

    std::array<BumpScalar, 3> psi;
    for (int k = 0; k < 3; ++k)
        psi[k] = BumpScalar{3, center, radius, U(rng), {U(rng), U(rng), U(rng)}};
    v.value = [psi](const std::array<double, 3>& y) {
        double val, g[3][3], H[9];
        for (int k = 0; k < 3; ++k) psi[k].eval(y, val, g[k], H);
        // curl of the potential (g[k] holds grad Psi_k)
        return std::array<double, 3>{g[2][1] - g[1][2], g[0][2] - g[2][0], g[1][0] - g[0][1]};
    };
    v.grad = [psi](const std::array<double, 3>& y) {
        double val, g[3], H[3][9];
        for (int k = 0; k < 3; ++k) psi[k].eval(y, val, g, H[k]);
        Mat m(3);
        for (int j = 0; j < 3; ++j) {
            m.at(0, j) = H[2][1 * 3 + j] - H[1][2 * 3 + j];
            m.at(1, j) = H[0][2 * 3 + j] - H[2][0 * 3 + j];
            m.at(2, j) = H[1][0 * 3 + j] - H[0][1 * 3 + j];
        }
        return m;
    };
    return v;
}

TestField radial_bump_field(int dim, const std::array<double, 3>& center, double radius,
                            double amp) {
    require_dim(dim, "radial_bump_field");
    if (!(radius > 0.0)) throw std::invalid_argument("radial_bump_field: radius must be > 0");
    TestField v;
    v.dim = dim;
    v.divergence_free = false;
    v.center = center;
    v.radius = radius;
    BumpScalar b{dim, center, radius, amp, {0.0, 0.0, 0.0}};
    v.value = [b, dim](const std::array<double, 3>& y) {
        double val, g[3], H[9];
        b.eval(y, val, g, H);
        std::array<double, 3> out{0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) out[a] = (y[a] - b.c[a]) * val;
        return out;
    };
    v.grad = [b, dim](const std::array<double, 3>& y) {
        double val, g[3], H[9];
        b.eval(y, val, g, H);
        Mat m(dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                m.at(i, j) = (i == j ? val : 0.0) + (y[i] - b.c[i]) * g[j];
        return m;
    };
    return v;
}

TestField rotation_generator(int dim) {
    require_dim(dim, "rotation_generator");
    TestField v;
    v.dim = dim;
    v.divergence_free = true;
    v.radius = std::numeric_limits<double>::infinity();
    v.value = [](const std::array<double, 3>& y) {
        return std::array<double, 3>{-y[1], y[0], 0.0};
    };
    v.grad = [dim](const std::array<double, 3>&) {
        Mat m(dim);
        m.at(0, 1) = -1.0;
        m.at(1, 0) = 1.0;
        return m;
    };
    return v;
}

namespace {

void rk4_step(const TestField& v, double h, std::array<double, 3>& y, Mat& J) {
    const int d = v.dim;
    auto axpy = [d](const std::array<double, 3>& a, double t, const std::array<double, 3>& b) {
        std::array<double, 3> r = a;
        for (int i = 0; i < d; ++i) r[i] += t * b[i];
        return r;
    };
    auto maxpy = [](const Mat& a, double t, const Mat& b) {
        Mat r = a;
        for (int i = 0; i < 9; ++i) r.v[i] += t * b.v[i];
        return r;
    };
    const std::array<double, 3> k1 = v.value(y);
    const Mat K1 = matmul(v.grad(y), J);
    const std::array<double, 3> y2 = axpy(y, 0.5 * h, k1);
    const std::array<double, 3> k2 = v.value(y2);
    const Mat K2 = matmul(v.grad(y2), maxpy(J, 0.5 * h, K1));
    const std::array<double, 3> y3 = axpy(y, 0.5 * h, k2);
    const std::array<double, 3> k3 = v.value(y3);
    const Mat K3 = matmul(v.grad(y3), maxpy(J, 0.5 * h, K2));
    const std::array<double, 3> y4 = axpy(y, h, k3);
    const std::array<double, 3> k4 = v.value(y4);
    const Mat K4 = matmul(v.grad(y4), maxpy(J, h, K3));
    for (int i = 0; i < d; ++i)
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    for (int i = 0; i < 9; ++i)
        J.v[i] += h / 6.0 * (K1.v[i] + 2.0 * K2.v[i] + 2.0 * K3.v[i] + K4.v[i]);
}

}  // namespace

FlowResult flow_map(const TestField& v, double t, const std::array<double, 3>& y0, double dt) {
    require_dim(v.dim, "flow_map");
    if (!v.value || !v.grad) throw std::invalid_argument("flow_map: field needs value and grad");
    FlowResult r;
    r.y = y0;
    r.jac = Mat::identity(v.dim);
    if (t == 0.0) return r;
    int n = 64;
    if (dt > 0.0) n = std::max(1, static_cast<int>(std::ceil(std::abs(t) / dt)));
    const double step = t / n;
    for (int i = 0; i < n; ++i) rk4_step(v, step, r.y, r.jac);
    return r;
}

Deformation incompressible_perturb(const Deformation& u, const TestField& v, double t,
                                   double dt) {
    if (u.dim != v.dim) throw std::invalid_argument("incompressible_perturb: dim mismatch");
    Deformation w;
    w.dim = u.dim;
    if (u.analytic) {
        if (!u.map || !u.jacobian)
            throw std::invalid_argument("incompressible_perturb: map and jacobian required");
        w.analytic = true;
        auto umap = u.map;
        auto ujac = u.jacobian;
        w.map = [v, t, dt, umap](const std::array<double, 3>& x) {
            return flow_map(v, t, umap(x), dt).y;
        };
        w.jacobian = [v, t, dt, umap, ujac](const std::array<double, 3>& x) {
            const FlowResult f = flow_map(v, t, umap(x), dt);
            return matmul(f.jac, ujac(x));
        };
        if (u.inverse) {
            auto uinv = u.inverse;
            w.inverse = [v, t, dt, uinv](const std::array<double, 3>& y) {
                return uinv(flow_map(v, -t, y, dt).y);
            };
        }
        return w;
    }
    w.analytic = false;
    w.samples = VectorField(u.samples.spec);
    const GridSpec& s = u.samples.spec;
    const int d = s.dim;
    for (std::size_t node = 0; node < s.size(); ++node) {
        std::array<double, 3> y{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) y[a] = u.samples.data[node * d + a];
        const FlowResult f = flow_map(v, t, y, dt);
        for (int a = 0; a < d; ++a) w.samples.data[node * d + a] = f.y[a];
    }
    return w;
}

namespace {

Window full_window(const GridSpec& g) {
    Window w;
    for (int a = 0; a < 3; ++a) {
        w.lo[a] = 0;
        w.hi[a] = std::max(1, g.shape[a]);
    }
    return w;
}

// Per-node jacobian of u on g, as a fetch closure. Discrete deformations
// are differentiated once up front and must live on g.
std::function<Mat(std::size_t, const std::array<double, 3>&)> jacobian_fetch(
    const Deformation& u, const GridSpec& g, std::optional<TensorField>& storage,
    const char* who) {
    const int d = g.dim;
    if (u.analytic) {
        if (!u.jacobian) throw std::invalid_argument(std::string(who) + ": jacobian required");
        auto uj = u.jacobian;
        return [uj](std::size_t, const std::array<double, 3>& x) { return uj(x); };
    }
    if (!u.samples.spec.same_layout(g))
        throw std::invalid_argument(std::string(who) +
                                    ": discrete deformation lives on a different grid");
    storage.emplace(jacobian_fd(u.samples));
    const TensorField* jf = &*storage;
    return [jf, d](std::size_t node, const std::array<double, 3>&) {
        Mat p(d);
        for (int r = 0; r < d; ++r)
            for (int c = 0; c < d; ++c) p.at(r, c) = jf->data[(node * d + r) * d + c];
        return p;
    };
}

std::function<std::array<double, 3>(std::size_t, const std::array<double, 3>&)> value_fetch(
    const Deformation& u, const GridSpec& g, const char* who) {
    const int d = g.dim;
    if (u.analytic) {
        if (!u.map) throw std::invalid_argument(std::string(who) + ": map required");
        auto um = u.map;
        return [um](std::size_t, const std::array<double, 3>& x) { return um(x); };
    }
    if (!u.samples.spec.same_layout(g))
        throw std::invalid_argument(std::string(who) +
                                    ": discrete deformation lives on a different grid");
    const VectorField* s = &u.samples;
    return [s, d](std::size_t node, const std::array<double, 3>&) {
        std::array<double, 3> y{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) y[a] = s->data[node * d + a];
        return y;
    };
}

template <typename Density>
double quadrature_over(const GridSpec& g, Density&& density) {
    ScalarField f(g);
    const int n2 = g.dim == 3 ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::size_t node = g.index(i0, i1, i2);
                f.data[node] = density(node, g.point(i0, i1, i2));
            }
    return integrate(f, full_window(g));
}

}  // namespace

double total_energy(const Deformation& u, const Material& m, const GridSpec& g) {
    g.validate();
    m.validate();
    if (u.dim != g.dim) throw std::invalid_argument("total_energy: dim mismatch");
    std::optional<TensorField> jf;
    auto jac = jacobian_fetch(u, g, jf, "total_energy");
    return quadrature_over(g, [&](std::size_t node, const std::array<double, 3>& x) {
        return mr_energy(jac(node, x), m);
    });
}

double first_variation(const Deformation& u, const TestField& v, const Material& m,
                       const GridSpec& g) {
    g.validate();
    m.validate();
    if (u.dim != g.dim || v.dim != g.dim)
        throw std::invalid_argument("first_variation: dim mismatch");
    if (!v.grad) throw std::invalid_argument("first_variation: v needs an analytic grad");
    std::optional<TensorField> jf;
    auto jac = jacobian_fetch(u, g, jf, "first_variation");
    auto val = value_fetch(u, g, "first_variation");
    return quadrature_over(g, [&](std::size_t node, const std::array<double, 3>& x) {
        const Mat p = jac(node, x);
        const Mat dl = mr_stress(p, m);
        const Mat gv = matmul(v.grad(val(node, x)), p);  // grad(v o u) by the chain rule
        double s = 0.0;
        for (int i = 0; i < 9; ++i) s += dl.v[i] * gv.v[i];
        return s;
    });
}

double pressure_identity_residual(const Deformation& u, const ScalarField& q,
                                  const TestField& v, const Material& m, const GridSpec& g) {
    q.spec.validate();
    q.check_finite("pressure_identity_residual");
    const double lhs = first_variation(u, v, m, g);
    const GridSpec& qs = q.spec;
    if (qs.dim != v.dim)
        throw std::invalid_argument("pressure_identity_residual: dim mismatch");
    const double rhs = quadrature_over(qs, [&](std::size_t node, const std::array<double, 3>& y) {
        const Mat gv = v.grad(y);
        double tr = 0.0;
        for (int i = 0; i < qs.dim; ++i) tr += gv.at(i, i);
        return q.data[node] * tr;
    });
    return std::abs(lhs - rhs);
}

double el_weak_residual(const Deformation& u, const ScalarField& p, const TestField& phi,
                        const Material& m, const GridSpec& g) {
    g.validate();
    m.validate();
    p.check_finite("el_weak_residual");
    if (u.dim != g.dim || phi.dim != g.dim)
        throw std::invalid_argument("el_weak_residual: dim mismatch");
    if (!p.spec.same_layout(g))
        throw std::invalid_argument("el_weak_residual: p must live on the quadrature grid");
    std::optional<TensorField> jf;
    auto jac = jacobian_fetch(u, g, jf, "el_weak_residual");
    const double r = quadrature_over(g, [&](std::size_t node, const std::array<double, 3>& x) {
        const Mat pm = jac(node, x);
        const Mat dl = mr_stress(pm, m);
        const Mat cf = cofactor(pm);
        const Mat gphi = phi.grad(x);
        const double pv = p.data[node];
        double s = 0.0;
        for (int i = 0; i < 9; ++i) s += (dl.v[i] - pv * cf.v[i]) * gphi.v[i];
        return s;
    });
    return std::abs(r);
}

double piola_check(const Deformation& u, const GridSpec& g, const Window& w) {
    g.validate();
    w.validate(g, 0);
    if (u.dim != g.dim) throw std::invalid_argument("piola_check: dim mismatch");
    const int d = g.dim;
    std::optional<TensorField> jf;
    auto jac = jacobian_fetch(u, g, jf, "piola_check");
    TensorField cof_field(g);
    const int n2 = d == 3 ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::size_t node = g.index(i0, i1, i2);
                const Mat cf = cofactor(jac(node, g.point(i0, i1, i2)));
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c)
                        cof_field.data[(node * d + r) * d + c] = cf.at(r, c);
            }
    const VectorField dv = divergence_fd(cof_field);
    ScalarField mag(g);
    for (std::size_t node = 0; node < g.size(); ++node) {
        double s = 0.0;
        for (int a = 0; a < d; ++a) s += dv.data[node * d + a] * dv.data[node * d + a];
        mag.data[node] = std::sqrt(s);
    }
    return lr_norm(mag, 2.0, w);
}

}  // namespace presrec
