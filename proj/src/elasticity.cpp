#include "presrec/elasticity.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

namespace presrec {

namespace {

void require_dim(int n, const char* who) {
    if (n != 2 && n != 3)
        throw std::invalid_argument(std::string(who) + ": dim must be 2 or 3, got " +
                                    std::to_string(n));
}

// Levi-Civita symbol for indices in 0..2.
constexpr int eps3(int i, int j, int k) { return (i - j) * (j - k) * (k - i) / 2; }

}  // namespace

Mat Mat::identity(int dim) {
    require_dim(dim, "Mat::identity");
    Mat m(dim);
    for (int i = 0; i < dim; ++i) m.at(i, i) = 1.0;
    return m;
}

Mat matmul(const Mat& x, const Mat& y) {
    if (x.n != y.n) throw std::invalid_argument("matmul: dimension mismatch");
    Mat out(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) {
            double s = 0.0;
            for (int k = 0; k < x.n; ++k) s += x.at(i, k) * y.at(k, j);
            out.at(i, j) = s;
        }
    return out;
}

Mat transpose(const Mat& x) {
    Mat out(x.n);
    for (int i = 0; i < x.n; ++i)
        for (int j = 0; j < x.n; ++j) out.at(i, j) = x.at(j, i);
    return out;
}

double frobenius2(const Mat& x) {
    double s = 0.0;
    for (double e : x.v) s += e * e;
    return s;
}

double det(const Mat& x) {
    require_dim(x.n, "det");
    if (x.n == 2) return x.at(0, 0) * x.at(1, 1) - x.at(0, 1) * x.at(1, 0);
    return x.at(0, 0) * (x.at(1, 1) * x.at(2, 2) - x.at(1, 2) * x.at(2, 1)) -
           x.at(0, 1) * (x.at(1, 0) * x.at(2, 2) - x.at(1, 2) * x.at(2, 0)) +
           x.at(0, 2) * (x.at(1, 0) * x.at(2, 1) - x.at(1, 1) * x.at(2, 0));
}

Mat cofactor(const Mat& p) {
    require_dim(p.n, "cofactor");
    Mat q(p.n);
    if (p.n == 2) {
        q.at(0, 0) = p.at(1, 1);
        q.at(0, 1) = -p.at(1, 0);
        q.at(1, 0) = -p.at(0, 1);
        q.at(1, 1) = p.at(0, 0);
        return q;
    }
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
            const int j1 = (j + 1) % 3, j2 = (j + 2) % 3;
            // (i,j) cofactor = det of the complementary 2x2 block, sign
            // absorbed by the cyclic index choice
            q.at(i, j) = p.at(i1, j1) * p.at(i2, j2) - p.at(i1, j2) * p.at(i2, j1);
        }
    return q;
}

Mat inverse(const Mat& p) {
    const double d = det(p);
    if (std::abs(d) < 1e-14) throw std::runtime_error("inverse: matrix is singular");
    Mat q = transpose(cofactor(p));
    for (double& e : q.v) e /= d;
    return q;
}

void Material::validate() const {
    if (!(mu1 > 0.0)) throw std::invalid_argument("Material: mu1 must be > 0");
    if (!(mu2 >= 0.0)) throw std::invalid_argument("Material: mu2 must be >= 0");
    if (!(lambda0 > 0.0)) throw std::invalid_argument("Material: lambda0 must be > 0");
}

double mr_energy(const Mat& p, const Material& m) {
    require_dim(p.n, "mr_energy");
    m.validate();
    const double off = static_cast<double>(p.n);
    return 0.5 * m.mu1 * (frobenius2(p) - off) + 0.5 * m.mu2 * (frobenius2(cofactor(p)) - off);
}

Mat mr_stress(const Mat& p, const Material& m) {
    require_dim(p.n, "mr_stress");
    m.validate();
    Mat out(p.n);
    if (p.n == 2) {
        // |cof P|^2 = |P|^2 in 2D, so both blocks differentiate to P
        for (int i = 0; i < 9; ++i) out.v[i] = (m.mu1 + m.mu2) * p.v[i];
        return out;
    }
    const Mat q = cofactor(p);
    // D(|cof P|^2/2)_ab = sum q_ij eps_iac eps_jbd p_cd, from the minor
    // expansion q_ij = (1/2) eps_iuv eps_jst p_us p_vt
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    if (q.at(i, j) == 0.0) continue;
                    for (int c = 0; c < 3; ++c) {
                        const int e1 = eps3(i, a, c);
                        if (e1 == 0) continue;
                        for (int d = 0; d < 3; ++d) {
                            const int e2 = eps3(j, b, d);
                            if (e2 == 0) continue;
                            s += q.at(i, j) * e1 * e2 * p.at(c, d);
                        }
                    }
                }
            out.at(a, b) = m.mu1 * p.at(a, b) + m.mu2 * s;
        }
    return out;
}

GrowthReport growth_check(const Mat& p, const Material& m, double C) {
    GrowthReport r;
    const double L = mr_energy(p, m);
    const Mat strain = matmul(transpose(mr_stress(p, m)), p);
    r.lhs = std::max(std::abs(L), std::sqrt(frobenius2(strain)));
    r.rhs = C * (1.0 + frobenius2(p) + frobenius2(cofactor(p)));
    r.margin = r.rhs - r.lhs;
    r.ok = r.margin >= 0.0;
    return r;
}

Deformation identity_map(int dim) {
    require_dim(dim, "identity_map");
    Deformation u;
    u.dim = dim;
    u.analytic = true;
    u.map = [](const std::array<double, 3>& x) { return x; };
    u.jacobian = [dim](const std::array<double, 3>&) { return Mat::identity(dim); };
    u.inverse = [](const std::array<double, 3>& y) { return y; };
    return u;
}

Deformation shear_map(int dim, double gamma) {
    require_dim(dim, "shear_map");
    Deformation u;
    u.dim = dim;
    u.analytic = true;
    u.map = [gamma](const std::array<double, 3>& x) {
        return std::array<double, 3>{x[0] + gamma * x[1], x[1], x[2]};
    };
    u.jacobian = [dim, gamma](const std::array<double, 3>&) {
        Mat j = Mat::identity(dim);
        j.at(0, 1) = gamma;
        return j;
    };
    u.inverse = [gamma](const std::array<double, 3>& y) {
        return std::array<double, 3>{y[0] - gamma * y[1], y[1], y[2]};
    };
    return u;
}

Deformation rotation_map(int dim, double angle) {
    require_dim(dim, "rotation_map");
    Deformation u;
    u.dim = dim;
    u.analytic = true;
    const double c = std::cos(angle), s = std::sin(angle);
    u.map = [c, s](const std::array<double, 3>& x) {
        return std::array<double, 3>{c * x[0] - s * x[1], s * x[0] + c * x[1], x[2]};
    };
    u.jacobian = [dim, c, s](const std::array<double, 3>&) {
        Mat j = Mat::identity(dim);
        j.at(0, 0) = c;
        j.at(0, 1) = -s;
        j.at(1, 0) = s;
        j.at(1, 1) = c;
        return j;
    };
    u.inverse = [c, s](const std::array<double, 3>& y) {
        return std::array<double, 3>{c * y[0] + s * y[1], -s * y[0] + c * y[1], y[2]};
    };
    return u;
}

Deformation twist_map(int dim, double amp, double width, const std::array<double, 3>& center) {
    require_dim(dim, "twist_map");
    if (!(width > 0.0)) throw std::invalid_argument("twist_map: width must be > 0");
    Deformation u;
    u.dim = dim;
    u.analytic = true;
    const double w2 = width * width;
    auto theta = [amp, w2](double r2) { return amp * std::exp(-r2 / w2); };
    u.map = [center, theta](const std::array<double, 3>& x) {
        const double d0 = x[0] - center[0], d1 = x[1] - center[1];
        const double t = theta(d0 * d0 + d1 * d1);
        const double c = std::cos(t), s = std::sin(t);
        return std::array<double, 3>{center[0] + c * d0 - s * d1, center[1] + s * d0 + c * d1,
                                     x[2]};
    };
    u.jacobian = [dim, center, theta, w2](const std::array<double, 3>& x) {
        const double d0 = x[0] - center[0], d1 = x[1] - center[1];
        const double t = theta(d0 * d0 + d1 * d1);
        const double c = std::cos(t), s = std::sin(t);
        // dtheta/dx = -2 theta (x - c)/w^2; J = R + R' (x-c) otimes dtheta/dx
        const double g0 = -2.0 * t * d0 / w2, g1 = -2.0 * t * d1 / w2;
        const double rp0 = -s * d0 - c * d1;  // R'(x-c)
        const double rp1 = c * d0 - s * d1;
        Mat j = Mat::identity(dim);
        j.at(0, 0) = c + rp0 * g0;
        j.at(0, 1) = -s + rp0 * g1;
        j.at(1, 0) = s + rp1 * g0;
        j.at(1, 1) = c + rp1 * g1;
        return j;
    };
    u.inverse = [center, theta](const std::array<double, 3>& y) {
        const double d0 = y[0] - center[0], d1 = y[1] - center[1];
        // the twist preserves |x - c|, so the angle can be read off y
        const double t = theta(d0 * d0 + d1 * d1);
        const double c = std::cos(t), s = std::sin(t);
        return std::array<double, 3>{center[0] + c * d0 + s * d1, center[1] - s * d0 + c * d1,
                                     y[2]};
    };
    return u;
}

namespace {

Mat interpolated_jacobian(const TensorField& jf, const std::array<double, 3>& x) {
    Mat j(jf.spec.dim);
    double buf[9];
    interpolate(jf, x, buf);
    for (int r = 0; r < jf.spec.dim; ++r)
        for (int c = 0; c < jf.spec.dim; ++c) j.at(r, c) = buf[r * jf.spec.dim + c];
    return j;
}

std::array<double, 3> newton_invert(const std::array<double, 3>& y, int dim,
                                    const std::function<std::array<double, 3>(
                                        const std::array<double, 3>&)>& value,
                                    const std::function<Mat(const std::array<double, 3>&)>& jac) {
    std::array<double, 3> x = y;
    for (int it = 0; it < 50; ++it) {
        const std::array<double, 3> fx = value(x);
        double r[3] = {fx[0] - y[0], fx[1] - y[1], dim == 3 ? fx[2] - y[2] : 0.0};
        double rmax = 0.0;
        for (int a = 0; a < dim; ++a) rmax = std::max(rmax, std::abs(r[a]));
        if (rmax <= 1e-12) return x;
        const Mat ji = inverse(jac(x));
        for (int a = 0; a < dim; ++a) {
            double s = 0.0;
            for (int b = 0; b < dim; ++b) s += ji.at(a, b) * r[b];
            x[a] -= s;
        }
    }
    throw std::runtime_error("deformation inverse: Newton stalled at (" + std::to_string(y[0]) +
                             ", " + std::to_string(y[1]) + ", " + std::to_string(y[2]) + ")");
}

}  // namespace

Mat deformation_jacobian(const Deformation& u, const std::array<double, 3>& x) {
    if (u.analytic) {
        if (!u.jacobian) throw std::invalid_argument("deformation_jacobian: no closed form set");
        return u.jacobian(x);
    }
    return interpolated_jacobian(jacobian_fd(u.samples), x);
}

std::array<double, 3> deformation_value(const Deformation& u, const std::array<double, 3>& x) {
    if (u.analytic) {
        if (!u.map) throw std::invalid_argument("deformation_value: no map set");
        return u.map(x);
    }
    return interpolate(u.samples, x);
}

std::array<double, 3> deformation_inverse(const Deformation& u, const std::array<double, 3>& y) {
    if (u.inverse) return u.inverse(y);
    if (u.analytic) {
        if (!u.map || !u.jacobian)
            throw std::invalid_argument("deformation_inverse: map and jacobian required");
        return newton_invert(y, u.dim, u.map, u.jacobian);
    }
    const TensorField jf = jacobian_fd(u.samples);
    return newton_invert(
        y, u.dim, [&](const std::array<double, 3>& x) { return interpolate(u.samples, x); },
        [&](const std::array<double, 3>& x) { return interpolated_jacobian(jf, x); });
}

TensorField cauchy_green_strain(const Deformation& u, const Material& m, const GridSpec& g) {
    g.validate();
    m.validate();
    if (u.dim != g.dim) throw std::invalid_argument("cauchy_green_strain: dim mismatch");
    const int d = g.dim;
    std::optional<TensorField> jf;
    if (!u.analytic) {
        if (!u.samples.spec.same_layout(g))
            throw std::invalid_argument(
                "cauchy_green_strain: discrete deformation lives on a different grid");
        jf.emplace(jacobian_fd(u.samples));
    }
    TensorField sig(g);
    const int n2 = d == 3 ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::size_t node = g.index(i0, i1, i2);
                Mat p(d);
                if (jf) {
                    for (int r = 0; r < d; ++r)
                        for (int c = 0; c < d; ++c)
                            p.at(r, c) = jf->data[(node * d + r) * d + c];
                } else {
                    p = u.jacobian(g.point(i0, i1, i2));
                }
                const Mat s = matmul(transpose(mr_stress(p, m)), p);
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) sig.data[(node * d + r) * d + c] = s.at(r, c);
            }
    return sig;
}

TensorField pushforward(const TensorField& sigma, const Deformation& u, const GridSpec& target) {
    sigma.spec.validate();
    target.validate();
    sigma.check_finite("pushforward");
    if (sigma.spec.dim != target.dim || u.dim != target.dim)
        throw std::invalid_argument("pushforward: dim mismatch");
    const int d = target.dim;

    // one differentiation pass when Newton will need jacobians of samples
    std::optional<TensorField> jf;
    if (!u.inverse && !u.analytic) jf.emplace(jacobian_fd(u.samples));
    auto invert = [&](const std::array<double, 3>& y) {
        if (u.inverse) return u.inverse(y);
        if (u.analytic) return newton_invert(y, d, u.map, u.jacobian);
        return newton_invert(
            y, d, [&](const std::array<double, 3>& x) { return interpolate(u.samples, x); },
            [&](const std::array<double, 3>& x) { return interpolated_jacobian(*jf, x); });
    };

    TensorField out(target);
    const int n2 = d == 3 ? target.shape[2] : 1;
    for (int i0 = 0; i0 < target.shape[0]; ++i0)
        for (int i1 = 0; i1 < target.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::array<double, 3> x = invert(target.point(i0, i1, i2));
                interpolate(sigma, x, &out.data[target.index(i0, i1, i2) * d * d]);
            }
    return out;
}

AdmissibilityReport validate_admissible(const Deformation& u, const GridSpec& g, double r,
                                        double tol) {
    g.validate();
    if (u.dim != g.dim) throw std::invalid_argument("validate_admissible: dim mismatch");
    if (!(r >= 1.0)) throw std::invalid_argument("validate_admissible: r must be >= 1");
    const int d = g.dim;
    std::optional<TensorField> jf;
    if (!u.analytic) {
        if (!u.samples.spec.same_layout(g))
            throw std::invalid_argument(
                "validate_admissible: discrete deformation lives on a different grid");
        jf.emplace(jacobian_fd(u.samples));
    }

    ScalarField gn(g), cn(g);
    AdmissibilityReport rep;
    const int n2 = d == 3 ? g.shape[2] : 1;
    for (int i0 = 0; i0 < g.shape[0]; ++i0)
        for (int i1 = 0; i1 < g.shape[1]; ++i1)
            for (int i2 = 0; i2 < n2; ++i2) {
                const std::size_t node = g.index(i0, i1, i2);
                Mat p(d);
                if (jf) {
                    for (int rr = 0; rr < d; ++rr)
                        for (int cc = 0; cc < d; ++cc)
                            p.at(rr, cc) = jf->data[(node * d + rr) * d + cc];
                } else {
                    p = u.jacobian(g.point(i0, i1, i2));
                }
                rep.max_det_err = std::max(rep.max_det_err, std::abs(det(p) - 1.0));
                gn.data[node] = std::sqrt(frobenius2(p));
                cn.data[node] = std::sqrt(frobenius2(cofactor(p)));
            }
    Window full;
    for (int a = 0; a < 3; ++a) {
        full.lo[a] = 0;
        full.hi[a] = std::max(1, g.shape[a]);
    }
    rep.grad_norm_r = lr_norm(gn, r, full);
    rep.cof_norm_r = lr_norm(cn, r, full);
    rep.ok = rep.max_det_err <= tol && std::isfinite(rep.grad_norm_r) &&
             std::isfinite(rep.cof_norm_r);
    return rep;
}

}  // namespace presrec
