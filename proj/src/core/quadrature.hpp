#pragma once

#include "core/mesh.hpp"

#include <array>
#include <span>
#include <vector>

namespace wgs::poly {

using mesh::Vertex2;

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// n-point rule, exact for polynomials of degree 2n - 1.
GaussLegendre gauss_legendre(int n);

struct QuadratureRule {
    std::vector<Vertex2> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return points.size(); }
    double measure() const;
};

/// A rule on a segment; `params` holds the arclength parameter t in [-1, 1]
/// (t = -1 at `a`, t = +1 at `b`).
struct EdgeQuadrature {
    QuadratureRule rule;
    std::vector<double> params;
    Vertex2 a, b;
    double length = 0.0;
};

using Triangle = std::array<int, 3>;

/// Triangulates a CCW simple polygon. Convex polygons are fanned from the
/// centroid (index polygon.size() refers to it); others are ear-clipped.
std::vector<Triangle> triangulate(std::span<const Vertex2> polygon, bool convex);

/// Collapsed-coordinate Gauss rule of exactness degree >= q on a triangle.
QuadratureRule triangle_quadrature(Vertex2 a, Vertex2 b, Vertex2 c, int q);

/// Rule exact for P_q over a simple polygon.
QuadratureRule cell_quadrature(std::span<const Vertex2> polygon, bool convex, int q);
QuadratureRule cell_quadrature(const mesh::PolyMesh& mesh, int cell, int q);

/// Gauss-Legendre with ceil((q + 1) / 2) points mapped to segment a-b.
EdgeQuadrature edge_quadrature(Vertex2 a, Vertex2 b, int q);

} // namespace wgs::poly
