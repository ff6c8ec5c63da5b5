#include "core/export.hpp"

#include "core/error.hpp"

#include <fstream>

namespace wgs::io {

Eigen::MatrixX3d centroid_values(const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
                                 const assembly::SolveResult& result)
{
    const int np = poly::dim_Pm(elements.k - 1);
    Eigen::MatrixX3d out(mesh.n_cells(), 3);
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const auto& el = elements.elements[c];
        const mesh::Vertex2 x = mesh.cells[c].centroid;
        const std::span<const mesh::Vertex2> at(&x, 1);
        out.block(c, 0, 1, 2) = el.eval_velocity(result.u.local(mesh, c), at);
        out(c, 2) = el.eval_basis(at).leftCols(np).row(0).dot(result.pressure.segment(c * np, np));
    }
    return out;
}

void write_vtk(std::ostream& out, const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
               const assembly::SolveResult& result)
{
    const auto values = centroid_values(mesh, elements, result);
    out.precision(12);
    out << "# vtk DataFile Version 3.0\n"
        << "weak Galerkin Stokes solution, k = " << elements.k << "\n"
        << "ASCII\nDATASET POLYDATA\n";
    out << "POINTS " << mesh.n_vertices() << " double\n";
    for (const auto& v : mesh.vertices) out << v.x << ' ' << v.y << " 0\n";
    long size = 0;
    for (const auto& cell : mesh.cells) size += cell.n_edges() + 1;
    out << "POLYGONS " << mesh.n_cells() << ' ' << size << '\n';
    for (const auto& cell : mesh.cells) {
        out << cell.n_edges();
        for (int v : cell.vertex_ids) out << ' ' << v;
        out << '\n';
    }
    out << "CELL_DATA " << mesh.n_cells() << '\n';
    out << "VECTORS u0 double\n";
    for (int c = 0; c < mesh.n_cells(); ++c) out << values(c, 0) << ' ' << values(c, 1) << " 0\n";
    out << "SCALARS p double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < mesh.n_cells(); ++c) out << values(c, 2) << '\n';
}

void write_vtk(const std::string& path, const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
               const assembly::SolveResult& result)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_vtk(out, mesh, elements, result);
    if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

} // namespace wgs::io
