#include "evolveq/moments.hpp"

#include <algorithm>
#include <cmath>

#include "evolveq/errors.hpp"
#include "evolveq/expm.hpp"
#include "evolveq/quadrature.hpp"

namespace evolveq {

namespace {

constexpr double max_piece_norm = 0.125;
constexpr int taylor_terms = 16;
constexpr int max_doublings = 200;

double norm1(const Matrix& c) { return c.rows() == 0 ? 0.0 : c.cwiseAbs().colwise().sum().maxCoeff(); }

// Taylor coefficients w_k = C^k z / k!.
Matrix taylor_coefficients(const Matrix& c, const Vector& z)
{
    Matrix w(z.size(), taylor_terms + 1);
    w.col(0) = z;
    for (int k = 1; k <= taylor_terms; ++k) {
        w.col(k) = c * w.col(k - 1) / k;
    }
    return w;
}

Vector evaluate(const Matrix& w, double s)
{
    Vector out = w.col(taylor_terms);
    for (int k = taylor_terms - 1; k >= 0; --k) {
        out = out * s + w.col(k);
    }
    return out;
}

}  // namespace

Matrix cross_moment(const Matrix& c1, const Vector& z1, const Matrix& c2, const Vector& z2, double d)
{
    if (c1.rows() != z1.size() || c2.rows() != z2.size() || c1.rows() != c1.cols() || c2.rows() != c2.cols()) {
        throw Error(ErrorKind::argument, "moment generator and state dimensions differ");
    }
    if (d < 0.0 || !std::isfinite(d)) {
        throw Error(ErrorKind::argument, "moment interval length must be finite and non-negative");
    }
    if (d == 0.0) {
        return Matrix::Zero(z1.size(), z2.size());
    }
    const double scale = d * std::max(norm1(c1), norm1(c2));
    int doublings = 0;
    if (scale > max_piece_norm) {
        doublings = static_cast<int>(std::ceil(std::log2(scale / max_piece_norm)));
    }
    if (doublings > max_doublings) {
        throw Error(ErrorKind::numerical_range, "moment generator norm too large");
    }
    const double h = std::ldexp(d, -doublings);

    const Matrix w1 = taylor_coefficients(c1, z1);
    const Matrix w2 = taylor_coefficients(c2, z2);
    Matrix s = quadrature::integrate_gauss4(0.0, h, 2, [&](double t) -> Matrix {
        return evaluate(w1, t) * evaluate(w2, t).transpose();
    });
    if (doublings == 0) {
        return s;
    }
    Matrix e1 = expm(h * c1);
    Matrix e2 = expm(h * c2);
    for (int i = 0; i < doublings; ++i) {
        s += e1 * s * e2.transpose();
        if (i + 1 < doublings) {
            e1 = e1 * e1;
            e2 = e2 * e2;
        }
    }
    if (!s.allFinite()) {
        throw Error(ErrorKind::numerical_range, "moment integral overflowed");
    }
    return s;
}

Matrix second_moment(const Matrix& c, const Vector& z, double d) { return cross_moment(c, z, c, z, d); }

}  // namespace evolveq
