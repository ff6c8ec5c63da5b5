#include "core/quadrature.hpp"

#include "core/error.hpp"

#include <cmath>
#include <list>
#include <numbers>
#include <numeric>
#include <utility>

namespace wgs::poly {

using mesh::cross;
using mesh::dot;

double QuadratureRule::measure() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }

namespace {

// Legendre P_n(x) and its derivative via the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double x)
{
    double p0 = 1.0, p1 = x;
    for (int j = 2; j <= n; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
    }
    return {p1, n * (x * p1 - p0) / (x * x - 1.0)};
}

} // namespace

GaussLegendre gauss_legendre(int n)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "Gauss-Legendre needs at least one point");
    GaussLegendre gl;
    gl.nodes.resize(n);
    gl.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        for (int iter = 0; iter < 100; ++iter) {
            const auto [p, dp] = legendre_with_derivative(n, x);
            const double dx = p / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double dp = legendre_with_derivative(n, x).second;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        gl.nodes[i] = -x;
        gl.nodes[n - 1 - i] = x;
        gl.weights[i] = w;
        gl.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) gl.nodes[n / 2] = 0.0;
    return gl;
}

namespace {

bool point_in_triangle(Vertex2 p, Vertex2 a, Vertex2 b, Vertex2 c)
{
    // Closed triangle test: points on the boundary count as inside.
    const double tol = mesh::kGeomTol;
    return cross(b - a, p - a) >= -tol && cross(c - b, p - b) >= -tol && cross(a - c, p - c) >= -tol;
}

std::vector<Triangle> ear_clip(std::span<const Vertex2> polygon)
{
    std::list<int> ring(polygon.size());
    std::iota(ring.begin(), ring.end(), 0);
    std::vector<Triangle> tris;
    auto next = [&](std::list<int>::iterator it) { return ++it == ring.end() ? ring.begin() : it; };
    auto prev = [&](std::list<int>::iterator it) { return it == ring.begin() ? std::prev(ring.end()) : std::prev(it); };

    auto it = ring.begin();
    std::size_t stalled = 0;
    while (ring.size() > 3) {
        const int ip = *prev(it);
        const int ic = *it;
        const int in = *next(it);
        const Vertex2 a = polygon[ip], b = polygon[ic], c = polygon[in];
        bool ear = cross(b - a, c - b) > mesh::kGeomTol;
        if (ear) {
            for (int v : ring) {
                if (v == ip || v == ic || v == in) continue;
                const Vertex2 p = polygon[v];
                // Vertices coinciding with the ear's corners belong to other parts of the boundary.
                if (point_in_triangle(p, a, b, c)) {
                    ear = false;
                    break;
                }
            }
        }
        if (ear) {
            tris.push_back({ip, ic, in});
            it = ring.erase(it);
            if (it == ring.end()) it = ring.begin();
            stalled = 0;
        } else {
            it = next(it);
            if (++stalled > 2 * ring.size()) {
                throw Error(ErrorCode::DegenerateCell, "ear clipping failed; polygon is not simple");
            }
        }
    }
    auto a = ring.begin();
    const int i0 = *a++;
    const int i1 = *a++;
    const int i2 = *a;
    if (cross(polygon[i1] - polygon[i0], polygon[i2] - polygon[i1]) <= mesh::kGeomTol) {
        throw Error(ErrorCode::DegenerateCell, "ear clipping left a degenerate triangle");
    }
    tris.push_back({i0, i1, i2});
    return tris;
}

} // namespace

std::vector<Triangle> triangulate(std::span<const Vertex2> polygon, bool convex)
{
    const int n = static_cast<int>(polygon.size());
    if (n < 3) throw Error(ErrorCode::DegenerateCell, "cannot triangulate fewer than 3 vertices");
    if (!convex) return ear_clip(polygon);
    std::vector<Triangle> tris;
    tris.reserve(n);
    for (int i = 0; i < n; ++i) tris.push_back({n, i, (i + 1) % n});
    return tris;
}

QuadratureRule triangle_quadrature(Vertex2 a, Vertex2 b, Vertex2 c, int q)
{
    if (q < 0) throw Error(ErrorCode::InvalidArgument, "negative quadrature degree");
    const double area2 = cross(b - a, c - a);
    if (!(area2 > 0.0)) throw Error(ErrorCode::DegenerateCell, "triangle with non-positive area");
    const auto gu = gauss_legendre((q + 2) / 2);
    const auto gv = gauss_legendre((q + 3) / 2);
    QuadratureRule rule;
    rule.degree = q;
    rule.points.reserve(gu.nodes.size() * gv.nodes.size());
    rule.weights.reserve(gu.nodes.size() * gv.nodes.size());
    for (std::size_t j = 0; j < gv.nodes.size(); ++j) {
        const double v = 0.5 * (gv.nodes[j] + 1.0);
        for (std::size_t i = 0; i < gu.nodes.size(); ++i) {
            const double u = 0.5 * (gu.nodes[i] + 1.0);
            const double xi = u * (1.0 - v);
            rule.points.push_back(a + xi * (b - a) + v * (c - a));
            rule.weights.push_back(0.25 * gu.weights[i] * gv.weights[j] * area2 * (1.0 - v));
        }
    }
    return rule;
}

QuadratureRule cell_quadrature(std::span<const Vertex2> polygon, bool convex, int q)
{
    const auto tris = triangulate(polygon, convex);
    std::vector<Vertex2> pts(polygon.begin(), polygon.end());
    if (convex) pts.push_back(mesh::cell_geometry(polygon).centroid);
    QuadratureRule rule;
    rule.degree = q;
    for (const auto& t : tris) {
        auto sub = triangle_quadrature(pts[t[0]], pts[t[1]], pts[t[2]], q);
        rule.points.insert(rule.points.end(), sub.points.begin(), sub.points.end());
        rule.weights.insert(rule.weights.end(), sub.weights.begin(), sub.weights.end());
    }
    return rule;
}

QuadratureRule cell_quadrature(const mesh::PolyMesh& mesh, int cell, int q)
{
    return cell_quadrature(mesh.polygon(cell), mesh.cells[cell].convex, q);
}

EdgeQuadrature edge_quadrature(Vertex2 a, Vertex2 b, int q)
{
    if (q < 0) throw Error(ErrorCode::InvalidArgument, "negative quadrature degree");
    const auto gl = gauss_legendre((q + 2) / 2);
    EdgeQuadrature eq;
    eq.a = a;
    eq.b = b;
    eq.length = mesh::norm(b - a);
    eq.rule.degree = q;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double t = gl.nodes[i];
        eq.params.push_back(t);
        eq.rule.points.push_back(a + 0.5 * (t + 1.0) * (b - a));
        eq.rule.weights.push_back(0.5 * eq.length * gl.weights[i]);
    }
    return eq;
}

} // namespace wgs::poly
