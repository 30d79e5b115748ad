#include "presrec/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace presrec {

namespace {

constexpr double kPi = std::numbers::pi;

double norm_n(int n, const std::array<double, 3>& x) {
    double s = 0;
    for (int a = 0; a < n; ++a) s += x[a] * x[a];
    return std::sqrt(s);
}

}  // namespace

double unit_ball_volume(int n) { return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0); }

double unit_sphere_area(int n) { return n * unit_ball_volume(n); }

double newtonian_potential(int n, const std::array<double, 3>& x) {
    const double r = norm_n(n, x);
    if (r == 0.0) throw std::domain_error("newtonian_potential: evaluated at the singularity");
    if (n == 2) return -std::log(r) / (2.0 * kPi);
    return std::pow(r, 2 - n) / (n * (n - 2) * unit_ball_volume(n));
}

std::array<double, 3> newtonian_gradient(int n, const std::array<double, 3>& y) {
    const double r = norm_n(n, y);
    if (r == 0.0) throw std::domain_error("newtonian_gradient: evaluated at the singularity");
    const double scale = -1.0 / (unit_sphere_area(n) * std::pow(r, n));
    std::array<double, 3> g{0, 0, 0};
    for (int a = 0; a < n; ++a) g[a] = scale * y[a];
    return g;
}

void gauss_legendre_rule(int k, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(k);
    weights.resize(k);
    for (int m = 0; m < k; ++m) {
        // Newton on Legendre P_k from the Chebyshev initial guess
        double x = std::cos(kPi * (m + 0.75) / (k + 0.5));
        auto eval = [&](double t, double& dp) {
            double p0 = 1.0, p1 = t;
            for (int j = 2; j <= k; ++j) {
                double p2 = ((2 * j - 1) * t * p1 - (j - 1) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = k * (t * p1 - p0) / (t * t - 1.0);
            return p1;
        };
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p = eval(x, dp);
            double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        eval(x, dp);
        nodes[m] = x;
        weights[m] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

double cz_kernel(int n, int i, int j, const std::array<double, 3>& y) {
    const double r2 = [&] {
        double s = 0;
        for (int a = 0; a < n; ++a) s += y[a] * y[a];
        return s;
    }();
    if (r2 == 0.0) throw std::domain_error("cz_kernel: evaluated at the singularity");
    return (i == j ? 1.0 : 0.0) - n * y[i] * y[j] / r2;
}

double sphere_mean(int n, const std::function<double(const std::array<double, 3>&)>& G) {
    if (n == 2) {
        const int m = 512;
        KahanSum acc;
        for (int k = 0; k < m; ++k) {
            const double t = 2.0 * kPi * k / m;
            acc.add(G({std::cos(t), std::sin(t), 0.0}));
        }
        return acc.value() / m;
    }
    if (n != 3) throw std::invalid_argument("sphere_mean: dim must be 2 or 3");
    // Gauss-Legendre in cos(polar), trapezoid in azimuth; average = integral/(4 pi)
    const int nm = 48, nt = 96;
    static thread_local std::vector<double> nodes, weights;
    if (nodes.empty()) gauss_legendre_rule(nm, nodes, weights);
    KahanSum acc;
    for (int k = 0; k < nm; ++k) {
        const double mu = nodes[k];  // cos(polar)
        const double s = std::sqrt(std::max(0.0, 1.0 - mu * mu));
        KahanSum ring;
        for (int t = 0; t < nt; ++t) {
            const double phi = 2.0 * kPi * t / nt;
            ring.add(G({s * std::cos(phi), s * std::sin(phi), mu}));
        }
        acc.add(weights[k] * ring.value() * (2.0 * kPi / nt));
    }
    return acc.value() / (4.0 * kPi);
}

// ---------------- mollifier ----------------

namespace {

// integral over r in (0,1) of r^{n-1} exp(-1/(1-r^2)), composite Gauss-Legendre
double radial_bump_integral(int n) {
    // 8-point GL on 512 panels; the integrand is smooth and vanishes to all
    // orders at r=1, so this is far beyond the 1e-8 contract
    static const double gx[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                 0.9602898564975363};
    static const double gw[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                 0.1012285362903763};
    const int panels = 512;
    KahanSum acc;
    for (int p = 0; p < panels; ++p) {
        const double a = static_cast<double>(p) / panels, b = static_cast<double>(p + 1) / panels;
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int k = 0; k < 4; ++k)
            for (int sgn = -1; sgn <= 1; sgn += 2) {
                const double r = mid + sgn * half * gx[k];
                const double u = 1.0 - r * r;
                if (u <= 0) continue;
                acc.add(half * gw[k] * std::pow(r, n - 1) * std::exp(-1.0 / u));
            }
    }
    return acc.value();
}

}  // namespace

Mollifier::Mollifier(int n, double eps_) : dim(n), eps(eps_) {
    if (n != 2 && n != 3) throw std::invalid_argument("Mollifier: dim must be 2 or 3");
    if (!(eps > 0.0) || eps >= 1.0) throw std::invalid_argument("Mollifier: eps must lie in (0,1)");
    const double mass_unit = unit_sphere_area(n) * radial_bump_integral(n);
    norm_const = 1.0 / (mass_unit * std::pow(eps, n));
}

double Mollifier::operator()(const std::array<double, 3>& x) const {
    double r2 = 0;
    for (int a = 0; a < dim; ++a) r2 += x[a] * x[a];
    const double u2 = r2 / (eps * eps);
    if (u2 >= 1.0) return 0.0;
    return norm_const * std::exp(-1.0 / (1.0 - u2));
}

// ---------------- cutoff ----------------

namespace {

double bump_g(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double bump_dg(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }
double bump_ddg(double t) {
    return t > 0.0 ? std::exp(-1.0 / t) * (1.0 / (t * t * t * t) - 2.0 / (t * t * t)) : 0.0;
}

// s rises 0 -> 1 across [0,1], C^inf, flat at both ends
void smooth_step(double t, double& s, double& ds, double& dds) {
    if (t <= 0.0) { s = 0; ds = 0; dds = 0; return; }
    if (t >= 1.0) { s = 1; ds = 0; dds = 0; return; }
    const double a = bump_g(t), b = bump_g(1.0 - t);
    const double da = bump_dg(t), db = bump_dg(1.0 - t);   // db = g'(1-t), d/dt g(1-t) = -db
    const double dda = bump_ddg(t), ddb = bump_ddg(1.0 - t);
    const double D = a + b;
    const double N = da * b + a * db;        // numerator of s'
    const double Np = dda * b - a * ddb;     // d/dt N
    const double Dp = da - db;               // d/dt D
    s = a / D;
    ds = N / (D * D);
    dds = Np / (D * D) - 2.0 * N * Dp / (D * D * D);
}

// one-axis trapezoid profile: rise across [r0,r1], 1 between, fall across [f0,f1]
void axis_profile(double x, double r0, double r1, double f0, double f1, double& p, double& dp,
                  double& ddp) {
    double su, dsu, ddsu, sv, dsv, ddsv;
    const double wu = r1 - r0, wv = f1 - f0;
    smooth_step((x - r0) / wu, su, dsu, ddsu);
    smooth_step((f1 - x) / wv, sv, dsv, ddsv);
    dsu /= wu;
    ddsu /= wu * wu;
    dsv = -dsv / wv;
    ddsv /= wv * wv;
    p = su * sv;
    dp = dsu * sv + su * dsv;
    ddp = ddsu * sv + 2.0 * dsu * dsv + su * ddsv;
}

}  // namespace

Cutoff::Cutoff(const GridSpec& g, const Window& inner, const Window& outer, double width_fraction)
    : dim(g.dim) {
    if (!(width_fraction > 0.0) || width_fraction > 1.0)
        throw std::invalid_argument("Cutoff: width_fraction must lie in (0,1]");
    inner.validate(g);
    outer.validate(g);
    for (int a = 0; a < dim; ++a) {
        if (inner.lo[a] <= outer.lo[a] || inner.hi[a] >= outer.hi[a])
            throw std::invalid_argument("Cutoff: inner window must be strictly inside outer");
        const double wlo = g.coord(a, inner.lo[a]), whi = g.coord(a, inner.hi[a] - 1);
        const double vlo = g.coord(a, outer.lo[a]), vhi = g.coord(a, outer.hi[a] - 1);
        const double gap_lo = wlo - vlo, gap_hi = vhi - whi;
        const double mid_lo = 0.5 * (vlo + wlo), mid_hi = 0.5 * (whi + vhi);
        r0[a] = mid_lo - 0.5 * width_fraction * gap_lo;
        r1[a] = mid_lo + 0.5 * width_fraction * gap_lo;
        f0[a] = mid_hi - 0.5 * width_fraction * gap_hi;
        f1[a] = mid_hi + 0.5 * width_fraction * gap_hi;
    }
}

double Cutoff::value(const std::array<double, 3>& x) const {
    double v = 1.0;
    for (int a = 0; a < dim; ++a) {
        double p, dp, ddp;
        axis_profile(x[a], r0[a], r1[a], f0[a], f1[a], p, dp, ddp);
        v *= p;
    }
    return v;
}

std::array<double, 3> Cutoff::gradient(const std::array<double, 3>& x) const {
    double p[3], dp[3], ddp;
    for (int a = 0; a < dim; ++a) axis_profile(x[a], r0[a], r1[a], f0[a], f1[a], p[a], dp[a], ddp);
    std::array<double, 3> out{0, 0, 0};
    for (int a = 0; a < dim; ++a) {
        double v = dp[a];
        for (int b = 0; b < dim; ++b)
            if (b != a) v *= p[b];
        out[a] = v;
    }
    return out;
}

void Cutoff::hessian(const std::array<double, 3>& x, double* out) const {
    double p[3], dp[3], ddp[3];
    for (int a = 0; a < dim; ++a) axis_profile(x[a], r0[a], r1[a], f0[a], f1[a], p[a], dp[a], ddp[a]);
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b) {
            double v;
            if (a == b) {
                v = ddp[a];
                for (int c = 0; c < dim; ++c)
                    if (c != a) v *= p[c];
            } else {
                v = dp[a] * dp[b];
                for (int c = 0; c < dim; ++c)
                    if (c != a && c != b) v *= p[c];
            }
            out[a * dim + b] = v;
        }
}

double Cutoff::laplacian(const std::array<double, 3>& x) const {
    double h[9];
    hessian(x, h);
    double tr = 0;
    for (int a = 0; a < dim; ++a) tr += h[a * dim + a];
    return tr;
}

ScalarField Cutoff::sample(const GridSpec& g) const {
    ScalarField out(g);
    const int n2 = (g.dim == 3) ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) out.at(i0, i1, i2) = value(g.point(i0, i1, i2));
    return out;
}

ScalarField Cutoff::sample_laplacian(const GridSpec& g) const {
    ScalarField out(g);
    const int n2 = (g.dim == 3) ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) out.at(i0, i1, i2) = laplacian(g.point(i0, i1, i2));
    return out;
}

// ---------------- eta * Phi derivatives ----------------

std::array<double, 3> eta_phi_gradient(int n, const std::array<double, 3>& x,
                                       const std::array<double, 3>& y, const Cutoff& eta) {
    std::array<double, 3> r{y[0] - x[0], y[1] - x[1], y[2] - x[2]};
    const double rn = norm_n(n, r);
    if (rn == 0.0) throw std::domain_error("eta_phi_gradient: y == x");
    const double phi = newtonian_potential(n, r);
    const double ev = eta.value(y);
    const std::array<double, 3> eg = eta.gradient(y);
    const double scale = 1.0 / (unit_sphere_area(n) * std::pow(rn, n));
    std::array<double, 3> out{0, 0, 0};
    for (int a = 0; a < n; ++a) out[a] = eg[a] * phi - ev * r[a] * scale;
    return out;
}

void eta_phi_hessian(int n, const std::array<double, 3>& x, const std::array<double, 3>& y,
                     const Cutoff& eta, double* out) {
    std::array<double, 3> r{y[0] - x[0], y[1] - x[1], y[2] - x[2]};
    const double rn = norm_n(n, r);
    if (rn == 0.0) throw std::domain_error("eta_phi_hessian: y == x");
    const double phi = newtonian_potential(n, r);
    const double ev = eta.value(y);
    const std::array<double, 3> eg = eta.gradient(y);
    double eh[9];
    eta.hessian(y, eh);
    const double scale = 1.0 / (unit_sphere_area(n) * std::pow(rn, n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out[i * n + j] = eh[i * n + j] * phi - (eg[i] * r[j] + eg[j] * r[i]) * scale -
                             ev * cz_kernel(n, i, j, r) * scale;
}

}  // namespace presrec
