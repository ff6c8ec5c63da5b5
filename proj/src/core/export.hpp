#pragma once

#include "core/assembly.hpp"

#include <ostream>
#include <string>

namespace wgs::io {

/// Legacy VTK polydata: the mesh polygons with u_0 and p_h at the cell
/// centroids as cell data.
void write_vtk(std::ostream& out, const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
               const assembly::SolveResult& result);
void write_vtk(const std::string& path, const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
               const assembly::SolveResult& result);

/// u_0 (two columns) and p_h at each cell centroid.
Eigen::MatrixX3d centroid_values(const mesh::PolyMesh& mesh, const weak::ElementSet& elements,
                                 const assembly::SolveResult& result);

} // namespace wgs::io
