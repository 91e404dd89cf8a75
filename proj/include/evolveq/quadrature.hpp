#pragma once

#include <array>
#include <type_traits>

namespace evolveq::quadrature {

// 4-point Gauss–Legendre rule on [-1, 1]; exact for polynomials of degree ≤ 7.
inline constexpr std::array<double, 4> gauss4_nodes{
    -0.86113631159405257522, -0.33998104358485626480, 0.33998104358485626480, 0.86113631159405257522};
inline constexpr std::array<double, 4> gauss4_weights{
    0.34785484513745385737, 0.65214515486254614263, 0.65214515486254614263, 0.34785484513745385737};

/// Composite 4-point Gauss–Legendre integral of f over [a, b] with `panels`
/// equal panels. Works for any f whose result supports `+` and scalar `*`
/// (double, Eigen vectors and matrices).
template <class F>
auto integrate_gauss4(double a, double b, int panels, F&& f)
{
    const double width = (b - a) / panels;
    const double half = 0.5 * width;
    using Result = std::decay_t<decltype(f(a))>;
    Result total{};
    bool first = true;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * width;
        for (std::size_t q = 0; q < gauss4_nodes.size(); ++q) {
            const double w = half * gauss4_weights[q];
            if (first) {
                total = w * f(mid + half * gauss4_nodes[q]);
                first = false;
            } else {
                total += w * f(mid + half * gauss4_nodes[q]);
            }
        }
    }
    return total;
}

/// Panel count the form and load averaging use per slab.
inline constexpr int slab_panels = 4;

}  // namespace evolveq::quadrature
