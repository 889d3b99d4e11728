#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace bouss {

// Quadrature on the reference triangle {λ0+λ1+λ2=1, λ≥0}; weights carry the
// reference measure, i.e. they sum to the reference area 1/2.
struct QuadratureRule {
    std::vector<std::array<double, 3>> points;  // barycentric coordinates
    std::vector<double> weights;
    int degree = 0;

    int size() const { return static_cast<int>(points.size()); }
};

// Symmetric 7-point rule, exact for polynomials of degree 5.
inline QuadratureRule triangle_rule_degree5() {
    QuadratureRule q;
    q.degree = 5;
    const double s15 = std::sqrt(15.0);
    const double b1 = (6.0 + s15) / 21.0, w1 = (155.0 + s15) / 2400.0;
    const double b2 = (6.0 - s15) / 21.0, w2 = (155.0 - s15) / 2400.0;
    q.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    q.weights.push_back(9.0 / 80.0);
    const double a1 = 1.0 - 2.0 * b1;
    const double a2 = 1.0 - 2.0 * b2;
    for (int r = 0; r < 3; ++r) {
        std::array<double, 3> p1{b1, b1, b1}, p2{b2, b2, b2};
        p1[r] = a1;
        p2[r] = a2;
        q.points.push_back(p1);
        q.weights.push_back(w1);
        q.points.push_back(p2);
        q.weights.push_back(w2);
    }
    return q;
}

}  // namespace bouss
