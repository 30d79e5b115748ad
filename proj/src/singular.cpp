#include "presrec/singular.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

namespace presrec {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW plan creation/destruction is not thread safe; execution on distinct
// plans is.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

double iso_spacing(const GridSpec& g, const char* who) {
    const double h = g.spacing[0];
    for (int a = 1; a < g.dim; ++a)
        if (std::abs(g.spacing[a] - h) > 1e-12 * h)
            throw std::invalid_argument(std::string(who) + ": requires isotropic grid spacing");
    return h;
}

// Tensor Gauss-Legendre average of F over the unit cube centered at the
// integer offset m. F must be smooth on the cell.
double cell_average(int n, const std::array<int, 3>& m, int pts,
                    const std::function<double(const std::array<double, 3>&)>& F) {
    std::vector<double> x, w;
    gauss_legendre_rule(pts, x, w);
    KahanSum acc;
    if (n == 2) {
        for (int a = 0; a < pts; ++a)
            for (int b = 0; b < pts; ++b)
                acc.add(w[a] * w[b] * F({m[0] + 0.5 * x[a], m[1] + 0.5 * x[b], 0.0}));
        return acc.value() / 4.0;
    }
    for (int a = 0; a < pts; ++a)
        for (int b = 0; b < pts; ++b)
            for (int c = 0; c < pts; ++c)
                acc.add(w[a] * w[b] * w[c] *
                        F({m[0] + 0.5 * x[a], m[1] + 0.5 * x[b], m[2] + 0.5 * x[c]}));
    return acc.value() / 8.0;
}

// Integral over the unit cube centered at the origin of K(u)u_a/|u|^n,
// which is integrable of degree 1-n. Cone decomposition over the boundary:
// a cone over a face patch dA at p contributes (p.n) f(p) dA since
// t^{n-1} f(tp) = f(p) for this homogeneity, and p.n = 1/2 on every face.
double singular_cell_first_moment(int n, int a,
                                  const std::function<double(const std::array<double, 3>&)>& K) {
    std::vector<double> x, w;
    gauss_legendre_rule(32, x, w);
    KahanSum acc;
    auto add_point = [&](const std::array<double, 3>& p, double dA) {
        const double r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
        const double rn = n == 2 ? r2 : r2 * std::sqrt(r2);
        acc.add(0.5 * dA * K(p) * p[a] / rn);
    };
    for (int d = 0; d < n; ++d)
        for (int s = -1; s <= 1; s += 2) {
            if (n == 2) {
                const int o = 1 - d;
                for (size_t i = 0; i < x.size(); ++i) {
                    std::array<double, 3> p{0.0, 0.0, 0.0};
                    p[d] = 0.5 * s;
                    p[o] = 0.5 * x[i];
                    add_point(p, 0.5 * w[i]);
                }
            } else {
                const int o1 = (d + 1) % 3, o2 = (d + 2) % 3;
                for (size_t i = 0; i < x.size(); ++i)
                    for (size_t j = 0; j < x.size(); ++j) {
                        std::array<double, 3> p{0.0, 0.0, 0.0};
                        p[d] = 0.5 * s;
                        p[o1] = 0.5 * x[i];
                        p[o2] = 0.5 * x[j];
                        add_point(p, 0.25 * w[i] * w[j]);
                    }
            }
        }
    return acc.value();
}

// Average over the unit cube centered at the origin of log|u| (n=2) or of
// 1/|u| (n=3). Cone decomposition moves the integral to the cube boundary:
// for a cone over a face patch dA at p, integrating t^{n-1} f(t|p|) over
// t in (0,1) leaves a smooth face integral. For log: (log|p|)/2 - 1/4 per
// unit of (p.n) dA; for 1/r: 1/(2|p|).
double singular_cell_radial_average(int n) {
    std::vector<double> x, w;
    gauss_legendre_rule(64, x, w);
    if (n == 2) {
        KahanSum acc;
        for (size_t i = 0; i < x.size(); ++i) {
            const double t = 0.5 * x[i];
            const double r = std::hypot(0.5, t);
            acc.add((0.5 * w[i]) * 0.5 * (0.5 * std::log(r * r) - 0.25));
        }
        return 4.0 * acc.value();
    }
    KahanSum acc;
    for (size_t i = 0; i < x.size(); ++i)
        for (size_t j = 0; j < x.size(); ++j) {
            const double s = 0.5 * x[i], t = 0.5 * x[j];
            const double r = std::sqrt(s * s + t * t + 0.25);
            acc.add((0.25 * w[i] * w[j]) * 0.5 / (2.0 * r));
        }
    return 6.0 * acc.value();
}

struct IndexBox {
    int lo[3] = {0, 0, 0};
    int hi[3] = {0, 0, 0};  // half-open
    bool empty = true;
};

IndexBox support_box(const ScalarField& g) {
    IndexBox b;
    const auto& s = g.spec;
    const int n2 = s.dim == 3 ? s.shape[2] : 1;
    for (int a = 0; a < 3; ++a) {
        b.lo[a] = std::numeric_limits<int>::max();
        b.hi[a] = std::numeric_limits<int>::min();
    }
    std::size_t k = 0;
    for (int i0 = 0; i0 < s.shape[0]; ++i0)
        for (int i1 = 0; i1 < s.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2, ++k)
                if (g.data[k] != 0.0) {
                    b.empty = false;
                    const int idx[3] = {i0, i1, i2};
                    for (int a = 0; a < 3; ++a) {
                        b.lo[a] = std::min(b.lo[a], idx[a]);
                        b.hi[a] = std::max(b.hi[a], idx[a] + 1);
                    }
                }
    if (b.empty)
        for (int a = 0; a < 3; ++a) b.lo[a] = b.hi[a] = 0;
    return b;
}

void mollify_core(const GridSpec& g, const double* in, int nc, double eps, double* out) {
    g.validate();
    if (!(eps > 0)) throw std::invalid_argument("mollify_field: eps must be positive");
    const int n = g.dim;
    const Mollifier rho(n, eps);
    double cellvol = 1.0;
    int R[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
        cellvol *= g.spacing[a];
        R[a] = static_cast<int>(std::ceil(eps / g.spacing[a]));
    }
    struct Off {
        int m[3];
        double w;
    };
    std::vector<Off> st;
    for (int m0 = -R[0]; m0 <= R[0]; ++m0)
        for (int m1 = -R[1]; m1 <= R[1]; ++m1)
            for (int m2 = (n == 3 ? -R[2] : 0); m2 <= (n == 3 ? R[2] : 0); ++m2) {
                const double wv =
                    rho({m0 * g.spacing[0], m1 * g.spacing[1], m2 * g.spacing[2]}) * cellvol;
                if (wv > 0.0) st.push_back({{m0, m1, m2}, wv});
            }
    const int n2 = n == 3 ? g.shape[2] : 1;
    std::size_t node = 0;
    std::vector<double> acc(nc);
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2, ++node) {
                std::fill(acc.begin(), acc.end(), 0.0);
                double ws = 0.0;
                for (const Off& o : st) {
                    const int j0 = i0 + o.m[0], j1 = i1 + o.m[1], j2 = i2 + o.m[2];
                    if (j0 < 0 || j0 >= g.shape[0] || j1 < 0 || j1 >= g.shape[1] || j2 < 0 ||
                        j2 >= n2)
                        continue;  // clipped at the boundary, renormalized below
                    ws += o.w;
                    const std::size_t jn = g.index(j0, j1, j2);
                    for (int c = 0; c < nc; ++c) acc[c] += o.w * in[jn * nc + c];
                }
                for (int c = 0; c < nc; ++c) out[node * nc + c] = acc[c] / ws;
            }
}

}  // namespace

ScalarField mollify_field(const ScalarField& f, double eps) {
    ScalarField out(f.spec);
    mollify_core(f.spec, f.data.data(), 1, eps, out.data.data());
    return out;
}

TensorField mollify_field(const TensorField& f, double eps) {
    TensorField out(f.spec);
    mollify_core(f.spec, f.data.data(), f.spec.dim * f.spec.dim, eps, out.data.data());
    return out;
}

ScalarField convolve_potential(const ScalarField& g, const Window& eval, int threads) {
    g.spec.validate();
    g.check_finite("convolve_potential");
    eval.validate(g.spec, 0);
    const int n = g.spec.dim;
    const double h = iso_spacing(g.spec, "convolve_potential");
    const double cellvol = std::pow(h, n);

    const IndexBox box = support_box(g);
    ScalarField out(subgrid(g.spec, eval));
    if (box.empty) return out;

    // Cell averages of the radial factor near the diagonal; the m = 0 entry
    // absorbs the integrable singularity.
    const int R = 3, W = 2 * R + 1;
    const int pts = n == 2 ? 12 : 8;
    const int tsize = n == 2 ? W * W : W * W * W;
    std::vector<double> tbl(tsize);
    for (int m0 = -R; m0 <= R; ++m0)
        for (int m1 = -R; m1 <= R; ++m1)
            for (int m2 = (n == 3 ? -R : 0); m2 <= (n == 3 ? R : 0); ++m2) {
                const int ti = n == 2 ? (m0 + R) * W + (m1 + R)
                                      : ((m0 + R) * W + (m1 + R)) * W + (m2 + R);
                if (m0 == 0 && m1 == 0 && m2 == 0) {
                    tbl[ti] = singular_cell_radial_average(n);
                    continue;
                }
                tbl[ti] = cell_average(n, {m0, m1, m2}, pts,
                                       [n](const std::array<double, 3>& u) {
                                           const double r2 =
                                               u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                                           return n == 2 ? 0.5 * std::log(r2)
                                                         : 1.0 / std::sqrt(r2);
                                       });
            }
    // radial average -> potential average: n=2 Phi = -(log h + A)/(2 pi),
    // n=3 Phi = B/(4 pi h)
    const double logh = std::log(h);

    const GridSpec es = out.spec;
    const int en2 = n == 3 ? es.shape[2] : 1;
    parallel_for(es.size(), threads, [&](std::size_t t) {
        int e2 = static_cast<int>(t % en2);
        std::size_t r = t / en2;
        int e1 = static_cast<int>(r % es.shape[1]);
        int e0 = static_cast<int>(r / es.shape[1]);
        const int xi[3] = {e0 + eval.lo[0], e1 + eval.lo[1], n == 3 ? e2 + eval.lo[2] : 0};
        KahanSum acc;
        for (int y0 = box.lo[0]; y0 < box.hi[0]; ++y0)
            for (int y1 = box.lo[1]; y1 < box.hi[1]; ++y1)
                for (int y2 = box.lo[2]; y2 < box.hi[2]; ++y2) {
                    const double gv = g.data[g.spec.index(y0, y1, y2)];
                    if (gv == 0.0) continue;
                    const int m0 = xi[0] - y0, m1 = xi[1] - y1, m2 = xi[2] - y2;
                    double phi;
                    if (std::abs(m0) <= R && std::abs(m1) <= R && std::abs(m2) <= R) {
                        const int ti = n == 2 ? (m0 + R) * W + (m1 + R)
                                              : ((m0 + R) * W + (m1 + R)) * W + (m2 + R);
                        phi = n == 2 ? -(logh + tbl[ti]) / (2.0 * kPi)
                                     : tbl[ti] / (4.0 * kPi * h);
                    } else {
                        const double r2 =
                            (double(m0) * m0 + double(m1) * m1 + double(m2) * m2) * h * h;
                        phi = n == 2 ? -0.25 * std::log(r2) / kPi
                                     : 1.0 / (4.0 * kPi * std::sqrt(r2));
                    }
                    acc.add(phi * gv);
                }
        out.data[t] = acc.value() * cellvol;
    });
    return out;
}

ScalarField pv_convolve(const std::function<double(const std::array<double, 3>&)>& K,
                        const ScalarField& g, const Window& eval, const PvConfig& cfg) {
    g.spec.validate();
    g.check_finite("pv_convolve");
    eval.validate(g.spec, 0);
    const int n = g.spec.dim;
    const double h = iso_spacing(g.spec, "pv_convolve");

    const double mz = sphere_mean(n, K);
    if (std::abs(mz) > 1e-8)
        throw std::invalid_argument("pv_convolve: kernel sphere mean " + std::to_string(mz) +
                                    " exceeds 1e-8; not a pv kernel");
    // First sphere moments decide the point-sample truncation bias order:
    // even kernels cancel the linear term, odd ones do not.
    int order = 2;
    for (int a = 0; a < n; ++a) {
        const double m1 =
            sphere_mean(n, [&](const std::array<double, 3>& u) { return K(u) * u[a]; });
        if (std::abs(m1) > 1e-8) order = 1;
    }

    const auto& deltas = cfg.delta_seq;
    if (deltas.empty() || deltas.size() > 8)
        throw std::invalid_argument("pv_convolve: delta_seq must hold 1..8 radii");
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        if (deltas[k] < 1.0 - 1e-12)
            throw std::invalid_argument("pv_convolve: truncation radius below grid spacing");
        if (k > 0 && !(deltas[k] < deltas[k - 1]))
            throw std::invalid_argument("pv_convolve: delta_seq must decrease strictly");
    }
    const std::size_t nd = deltas.size();
    std::vector<double> d2(nd);
    for (std::size_t k = 0; k < nd; ++k) d2[k] = deltas[k] * deltas[k] - 1e-9;

    const IndexBox box = support_box(g);
    ScalarField out(subgrid(g.spec, eval));
    std::vector<ScalarField> per_delta;
    if (cfg.delta_trace)
        for (std::size_t k = 0; k < nd; ++k) per_delta.emplace_back(out.spec);
    if (box.empty) {
        if (cfg.delta_trace) cfg.delta_trace->assign(nd, 0.0);
        return out;
    }

    const bool averaged = cfg.near_cell_rule == NearCellRule::cell_average;
    const int R = std::max(1, cfg.near_table_range);
    const int W = 2 * R + 1;
    const int pts = n == 2 ? 12 : 8;
    const int tsize = n == 2 ? W * W : W * W * W;
    std::vector<double> tbl(tsize, 0.0);
    // First moments of the kernel against the offset from the cell's own
    // node, mom[ti*n+a] = avg of K(u^)/|u|^n (m_a - u_a) over cell m. Paired
    // with a gradient of g they remove the centroid-offset bias that holds
    // odd kernels at first order. mom0 is the same quantity for the cell at
    // the origin, where the integral is taken directly (degree 1-n is
    // absolutely integrable, so the truncation limit exists cell by cell).
    std::vector<double> mom;
    double mom0[3] = {0.0, 0.0, 0.0};
    auto point_value = [&](int m0, int m1, int m2) {
        const double m2i = double(m0) * m0 + double(m1) * m1 + double(m2) * m2;
        const double rn = n == 2 ? m2i : m2i * std::sqrt(m2i);
        return K({double(m0), double(m1), double(m2)}) / rn;
    };
    if (averaged) {
        mom.assign(static_cast<std::size_t>(tsize) * n, 0.0);
        for (int a = 0; a < n; ++a) mom0[a] = -singular_cell_first_moment(n, a, K);
    }
    for (int m0 = -R; m0 <= R; ++m0)
        for (int m1 = -R; m1 <= R; ++m1)
            for (int m2 = (n == 3 ? -R : 0); m2 <= (n == 3 ? R : 0); ++m2) {
                if (m0 == 0 && m1 == 0 && m2 == 0) continue;  // handled via mom0
                const int ti = n == 2 ? (m0 + R) * W + (m1 + R)
                                      : ((m0 + R) * W + (m1 + R)) * W + (m2 + R);
                if (!averaged) {
                    tbl[ti] = point_value(m0, m1, m2);
                    continue;
                }
                auto kval = [&](const std::array<double, 3>& u) {
                    const double r2 = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                    const double rn = n == 2 ? r2 : r2 * std::sqrt(r2);
                    return K(u) / rn;
                };
                tbl[ti] = cell_average(n, {m0, m1, m2}, pts, kval);
                for (int a = 0; a < n; ++a) {
                    const double ma = a == 0 ? m0 : (a == 1 ? m1 : m2);
                    mom[static_cast<std::size_t>(ti) * n + a] =
                        cell_average(n, {m0, m1, m2}, pts,
                                     [&](const std::array<double, 3>& u) {
                                         return kval(u) * (ma - u[a]);
                                     });
                }
            }
    std::optional<VectorField> grad;
    if (averaged) grad.emplace(gradient_fd(g));

    const GridSpec es = out.spec;
    const int en2 = n == 3 ? es.shape[2] : 1;
    parallel_for(es.size(), cfg.threads, [&](std::size_t t) {
        int e2 = static_cast<int>(t % en2);
        std::size_t rr = t / en2;
        int e1 = static_cast<int>(rr % es.shape[1]);
        int e0 = static_cast<int>(rr / es.shape[1]);
        const int xi[3] = {e0 + eval.lo[0], e1 + eval.lo[1], n == 3 ? e2 + eval.lo[2] : 0};
        const double gx = g.data[g.spec.index(xi[0], xi[1], xi[2])];

        // Subtracting g(x) inside a ball costs nothing by the zero sphere
        // mean; the largest lattice ball around x inside the support box
        // keeps the loop domain a single box.
        int rsub = std::numeric_limits<int>::max();
        for (int a = 0; a < n; ++a)
            rsub = std::min({rsub, xi[a] - box.lo[a], box.hi[a] - 1 - xi[a]});
        const double rsub2 = rsub < 0 ? -1.0 : double(rsub) * rsub + 1e-9;

        double val;
        if (averaged) {
            // Every cell enters once with its exact kernel average plus the
            // first-moment term; nothing is left truncated, so the delta
            // sequence plays no role on this path.
            KahanSum s;
            for (int y0 = box.lo[0]; y0 < box.hi[0]; ++y0)
                for (int y1 = box.lo[1]; y1 < box.hi[1]; ++y1)
                    for (int y2 = box.lo[2]; y2 < box.hi[2]; ++y2) {
                        const int m0 = xi[0] - y0, m1 = xi[1] - y1, m2 = xi[2] - y2;
                        const double m2i = double(m0) * m0 + double(m1) * m1 + double(m2) * m2;
                        if (m2i == 0.0) continue;
                        const std::size_t yi = g.spec.index(y0, y1, y2);
                        double gv = g.data[yi];
                        if (m2i <= rsub2) gv -= gx;
                        if (std::abs(m0) <= R && std::abs(m1) <= R && std::abs(m2) <= R) {
                            const int ti = n == 2 ? (m0 + R) * W + (m1 + R)
                                                  : ((m0 + R) * W + (m1 + R)) * W + (m2 + R);
                            s.add(tbl[ti] * gv);
                            double mc = 0.0;
                            for (int a = 0; a < n; ++a)
                                mc += grad->data[yi * n + a] *
                                      mom[static_cast<std::size_t>(ti) * n + a];
                            s.add(h * mc);
                        } else {
                            s.add(point_value(m0, m1, m2) * gv);
                        }
                    }
            // first-order content of the cell at x itself
            double mc = 0.0;
            const std::size_t xidx = g.spec.index(xi[0], xi[1], xi[2]);
            for (int a = 0; a < n; ++a) mc += grad->data[xidx * n + a] * mom0[a];
            s.add(h * mc);
            val = s.value();
            if (cfg.delta_trace)
                for (std::size_t k = 0; k < nd; ++k) per_delta[k].data[t] = val;
        } else {
            KahanSum sums[8];
            for (int y0 = box.lo[0]; y0 < box.hi[0]; ++y0)
                for (int y1 = box.lo[1]; y1 < box.hi[1]; ++y1)
                    for (int y2 = box.lo[2]; y2 < box.hi[2]; ++y2) {
                        const int m0 = xi[0] - y0, m1 = xi[1] - y1, m2 = xi[2] - y2;
                        const double m2i = double(m0) * m0 + double(m1) * m1 + double(m2) * m2;
                        if (m2i == 0.0) continue;
                        double kv;
                        if (std::abs(m0) <= R && std::abs(m1) <= R && std::abs(m2) <= R) {
                            const int ti = n == 2 ? (m0 + R) * W + (m1 + R)
                                                  : ((m0 + R) * W + (m1 + R)) * W + (m2 + R);
                            kv = tbl[ti];
                        } else {
                            kv = point_value(m0, m1, m2);
                        }
                        double gv = g.data[g.spec.index(y0, y1, y2)];
                        if (m2i <= rsub2) gv -= gx;
                        const double c = kv * gv;
                        for (std::size_t k = 0; k < nd; ++k)
                            if (m2i >= d2[k]) sums[k].add(c);
                    }

            if (!cfg.extrapolate || nd == 1) {
                val = sums[nd - 1].value();
            } else {
                // Richardson from the two smallest radii at the detected order
                const double ta = sums[nd - 2].value();
                const double tb = sums[nd - 1].value();
                const double ratio = deltas[nd - 2] / deltas[nd - 1];
                val = tb + (tb - ta) / (std::pow(ratio, order) - 1.0);
            }
            if (cfg.delta_trace)
                for (std::size_t k = 0; k < nd; ++k) per_delta[k].data[t] = sums[k].value();
        }
        out.data[t] = val;
    });

    if (cfg.delta_trace) {
        cfg.delta_trace->resize(nd);
        Window full;
        for (int a = 0; a < 3; ++a) {
            full.lo[a] = 0;
            full.hi[a] = std::max(1, es.shape[a]);
        }
        for (std::size_t k = 0; k < nd; ++k)
            (*cfg.delta_trace)[k] = lr_norm(per_delta[k], 2.0, full);
    }
    return out;
}

ScalarField apply_fourier_multiplier(
    const ScalarField& f, double pad_factor,
    const std::function<std::complex<double>(const std::array<double, 3>&)>& mult) {
    f.spec.validate();
    f.check_finite("apply_fourier_multiplier");
    if (!(pad_factor >= 1.0))
        throw std::invalid_argument("apply_fourier_multiplier: pad_factor must be >= 1");
    const int n = f.spec.dim;
    int P[3] = {1, 1, 1};
    for (int a = 0; a < n; ++a) {
        P[a] = std::max(f.spec.shape[a],
                        static_cast<int>(std::ceil(f.spec.shape[a] * pad_factor)));
        if (P[a] % 2) ++P[a];  // even sizes so the Nyquist plane is unambiguous
    }
    const int C = P[n - 1] / 2 + 1;
    std::size_t real_total = 1, spec_total = 1;
    for (int a = 0; a < n; ++a) real_total *= static_cast<std::size_t>(P[a]);
    for (int a = 0; a < n - 1; ++a) spec_total *= static_cast<std::size_t>(P[a]);
    spec_total *= static_cast<std::size_t>(C);

    double* re = fftw_alloc_real(real_total);
    fftw_complex* sp = fftw_alloc_complex(spec_total);
    if (!re || !sp) {
        if (re) fftw_free(re);
        if (sp) fftw_free(sp);
        throw std::bad_alloc();
    }
    fftw_plan fwd, bwd;
    {
        std::lock_guard<std::mutex> lk(fftw_mutex());
        fwd = fftw_plan_dft_r2c(n, P, re, sp, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r(n, P, sp, re, FFTW_ESTIMATE);
    }
    std::memset(re, 0, real_total * sizeof(double));
    const int n2 = n == 3 ? f.spec.shape[2] : 1;
    for (int i0 = 0; i0 < f.spec.shape[0]; ++i0)
        for (int i1 = 0; i1 < f.spec.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                std::size_t dst = static_cast<std::size_t>(i0);
                dst = n == 2 ? dst * P[1] + i1 : (dst * P[1] + i1) * P[2] + i2;
                re[dst] = f.data[f.spec.index(i0, i1, i2)];
            }
    fftw_execute(fwd);

    // physical frequencies; DC and any Nyquist plane are zeroed
    std::size_t s = 0;
    const int S1 = n == 2 ? C : P[1];
    const int S2 = n == 2 ? 1 : C;
    for (int k0 = 0; k0 < P[0]; ++k0)
        for (int k1 = 0; k1 < S1; ++k1)
            for (int k2 = 0; k2 < S2; ++k2, ++s) {
                const int ks[3] = {k0 > P[0] / 2 ? k0 - P[0] : k0,
                                   n == 2 ? k1 : (k1 > P[1] / 2 ? k1 - P[1] : k1),
                                   n == 2 ? 0 : k2};
                bool nyq = (k0 == P[0] / 2) || (n == 3 && k1 == P[1] / 2) ||
                           ((n == 2 ? k1 : k2) == P[n - 1] / 2);
                bool dc = true;
                std::array<double, 3> xi{0.0, 0.0, 0.0};
                for (int a = 0; a < n; ++a) {
                    if (ks[a] != 0) dc = false;
                    xi[a] = 2.0 * kPi * ks[a] / (P[a] * f.spec.spacing[a]);
                }
                std::complex<double> m(0.0, 0.0);
                if (!nyq && !dc) m = mult(xi);
                const std::complex<double> v(sp[s][0], sp[s][1]);
                const std::complex<double> r = v * m;
                sp[s][0] = r.real();
                sp[s][1] = r.imag();
            }

    fftw_execute(bwd);
    ScalarField out(f.spec);
    const double scale = 1.0 / static_cast<double>(real_total);
    for (int i0 = 0; i0 < f.spec.shape[0]; ++i0)
        for (int i1 = 0; i1 < f.spec.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                std::size_t src = static_cast<std::size_t>(i0);
                src = n == 2 ? src * P[1] + i1 : (src * P[1] + i1) * P[2] + i2;
                out.data[f.spec.index(i0, i1, i2)] = re[src] * scale;
            }
    {
        std::lock_guard<std::mutex> lk(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(re);
    fftw_free(sp);
    return out;
}

double riesz_constant(int n) {
    return std::tgamma((n + 1) / 2.0) / std::pow(kPi, (n + 1) / 2.0);
}

ScalarField riesz_transform(int j, const ScalarField& f, const RieszConfig& cfg) {
    if (j < 0 || j >= f.spec.dim) throw std::invalid_argument("riesz_transform: bad axis");
    return apply_fourier_multiplier(
        f, cfg.pad_factor, [j](const std::array<double, 3>& xi) {
            const double norm = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
            return std::complex<double>(0.0, -xi[j] / norm);
        });
}

ScalarField riesz_transform_pv(int j, const ScalarField& f, const Window& eval,
                               const PvConfig& cfg) {
    if (j < 0 || j >= f.spec.dim) throw std::invalid_argument("riesz_transform_pv: bad axis");
    const int n = f.spec.dim;
    const double c = riesz_constant(n);
    return pv_convolve(
        [j, c](const std::array<double, 3>& u) {
            const double r = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
            return c * u[j] / r;
        },
        f, eval, cfg);
}

}  // namespace presrec
