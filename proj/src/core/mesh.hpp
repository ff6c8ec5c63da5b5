#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wgs::mesh {

/// Geometric tolerance for coordinates in the unit square.
inline constexpr double kGeomTol = 1e-12;

struct Vertex2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vertex2 operator+(Vertex2 a, Vertex2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vertex2 operator-(Vertex2 a, Vertex2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vertex2 operator*(double s, Vertex2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vertex2 a, Vertex2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vertex2 a, Vertex2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vertex2 a);

/// A polygonal cell. Vertices are stored counter-clockwise; edge_ids[i] joins
/// vertex_ids[i] and vertex_ids[(i + 1) % N]. Collinear consecutive edges are
/// allowed and each counts toward N.
struct Cell {
    std::vector<int> vertex_ids;
    std::vector<int> edge_ids;
    double area = 0.0;
    Vertex2 centroid;
    double diameter = 0.0;
    bool convex = true;

    int n_edges() const { return static_cast<int>(vertex_ids.size()); }
};

/// A mesh edge. vertex_ids is the global orientation (lower id first); the
/// outward unit normal is stored per adjacent cell.
struct Edge {
    std::array<int, 2> vertex_ids{-1, -1};
    std::array<int, 2> cell_ids{-1, -1};
    std::array<Vertex2, 2> normals{};
    bool boundary = true;
    double length = 0.0;

    int n_cells() const { return cell_ids[1] >= 0 ? 2 : (cell_ids[0] >= 0 ? 1 : 0); }
    /// Slot (0 or 1) of `cell` in cell_ids, or -1.
    int slot_of(int cell) const;
};

enum class Family { Triangle, NonconvexL, Custom };

const char* to_string(Family family);
Family family_from_string(const std::string& name);

struct PolyMesh {
    std::vector<Vertex2> vertices;
    std::vector<Cell> cells;
    std::vector<Edge> edges;
    double h = 0.0;
    Family family = Family::Custom;
    int subdivisions = 0;
    int level = -1;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_edges() const { return static_cast<int>(edges.size()); }
    int n_boundary_edges() const;

    std::vector<Vertex2> polygon(int cell) const;
};

struct CellGeometry {
    double area = 0.0;
    Vertex2 centroid;
    double diameter = 0.0;
};

/// Area (shoelace), centroid and diameter of a CCW simple polygon.
/// Throws DegenerateCell when the signed area is <= 1e-14.
CellGeometry cell_geometry(std::span<const Vertex2> polygon);

/// False iff some cross product of consecutive edge vectors is below -kGeomTol.
bool is_convex(std::span<const Vertex2> polygon);

/// n x n squares, each split along the (0,0)-(1,1) diagonal into two triangles.
PolyMesh build_uniform_triangle_mesh(int n);

/// n x n squares, each split into an L-shaped hexagon with a reflex vertex at
/// the square's center and a small square in the upper-right quarter.
/// Conformity is restored by inserting collinear midpoints on neighbor sides.
PolyMesh build_nonconvex_L_mesh(int n);

PolyMesh build_mesh(Family family, int n);

/// Builds topology (edges, normals) and geometry from CCW polygons.
PolyMesh from_polygons(std::vector<Vertex2> vertices, const std::vector<std::vector<int>>& cells,
                       Family family = Family::Custom, int subdivisions = 0);

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

ValidationReport validate(const PolyMesh& mesh);

// Text format (see README): VERTICES <n> / x y lines / CELLS <m> / count ids...
void write_text(std::ostream& out, const PolyMesh& mesh);
PolyMesh read_text(std::istream& in);
void save(const std::string& path, const PolyMesh& mesh);
PolyMesh load(const std::string& path);

} // namespace wgs::mesh
