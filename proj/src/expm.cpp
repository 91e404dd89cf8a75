#include "evolveq/expm.hpp"

#include <array>
#include <cmath>

#include "evolveq/errors.hpp"

namespace evolveq {

namespace {

constexpr std::array<double, 14> pade13{64764752532480000.0,
                                        32382376266240000.0,
                                        7771770303897600.0,
                                        1187353796428800.0,
                                        129060195264000.0,
                                        10559470521600.0,
                                        670442572800.0,
                                        33522128640.0,
                                        1323241920.0,
                                        40840800.0,
                                        960960.0,
                                        16380.0,
                                        182.0,
                                        1.0};

// Largest 1-norm for which the degree-13 approximant is accurate to unit roundoff.
constexpr double theta13 = 5.371920351148152;

}  // namespace

Matrix expm(const Matrix& a)
{
    if (a.rows() != a.cols()) {
        throw Error(ErrorKind::argument, "expm needs a square matrix");
    }
    if (!a.allFinite()) {
        throw Error(ErrorKind::numerical_range, "expm argument has non-finite entries");
    }
    const Eigen::Index n = a.rows();
    if (n == 0) {
        return a;
    }
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    if (norm1 == 0.0) {
        return Matrix::Identity(n, n);
    }
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
    }
    if (squarings > 1000) {
        throw Error(ErrorKind::numerical_range, "expm argument norm too large");
    }
    const Matrix scaled = a * std::ldexp(1.0, -squarings);

    const Matrix ident = Matrix::Identity(n, n);
    const Matrix a2 = scaled * scaled;
    const Matrix a4 = a2 * a2;
    const Matrix a6 = a4 * a2;
    const auto& b = pade13;

    const Matrix u_inner = a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident;
    const Matrix u = scaled * u_inner;
    const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident;

    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    if (!r.allFinite()) {
        throw Error(ErrorKind::numerical_range, "matrix exponential overflowed");
    }
    return r;
}

double phi1(double z) noexcept
{
    if (z == 0.0) {
        return 1.0;
    }
    return std::expm1(z) / z;
}

}  // namespace evolveq
