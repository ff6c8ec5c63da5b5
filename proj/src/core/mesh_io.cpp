#include "core/error.hpp"
#include "core/mesh.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

namespace wgs::mesh {

namespace {

// Next non-empty, non-comment line.
bool next_line(std::istream& in, std::string& line, int& line_no)
{
    while (std::getline(in, line)) {
        ++line_no;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        return true;
    }
    return false;
}

[[noreturn]] void parse_error(int line_no, const std::string& what)
{
    throw Error(ErrorCode::Io, "mesh text line " + std::to_string(line_no) + ": " + what);
}

int read_header(std::istream& in, const std::string& keyword, int& line_no)
{
    std::string line;
    if (!next_line(in, line, line_no)) parse_error(line_no, "expected " + keyword);
    std::istringstream ls(line);
    std::string word;
    long count = -1;
    if (!(ls >> word >> count) || word != keyword || count < 0) parse_error(line_no, "expected '" + keyword + " <count>'");
    return static_cast<int>(count);
}

} // namespace

void write_text(std::ostream& out, const PolyMesh& mesh)
{
    out << "# wgstokes polygonal mesh\n";
    out << "# family " << to_string(mesh.family) << " subdivisions " << mesh.subdivisions << "\n";
    out << "VERTICES " << mesh.n_vertices() << "\n";
    out << std::setprecision(17);
    for (const auto& v : mesh.vertices) out << v.x << " " << v.y << "\n";
    out << "CELLS " << mesh.n_cells() << "\n";
    for (const auto& c : mesh.cells) {
        out << c.vertex_ids.size();
        for (int v : c.vertex_ids) out << " " << v;
        out << "\n";
    }
}

PolyMesh read_text(std::istream& in)
{
    int line_no = 0;
    std::string line;
    const int nv = read_header(in, "VERTICES", line_no);
    std::vector<Vertex2> vertices(nv);
    for (int i = 0; i < nv; ++i) {
        if (!next_line(in, line, line_no)) parse_error(line_no, "unexpected end of vertex list");
        std::istringstream ls(line);
        if (!(ls >> vertices[i].x >> vertices[i].y)) parse_error(line_no, "expected 'x y'");
    }
    const int nc = read_header(in, "CELLS", line_no);
    std::vector<std::vector<int>> cells(nc);
    for (int i = 0; i < nc; ++i) {
        if (!next_line(in, line, line_no)) parse_error(line_no, "unexpected end of cell list");
        std::istringstream ls(line);
        int count = 0;
        if (!(ls >> count) || count < 3) parse_error(line_no, "expected vertex count >= 3");
        cells[i].resize(count);
        for (int j = 0; j < count; ++j) {
            if (!(ls >> cells[i][j])) parse_error(line_no, "expected " + std::to_string(count) + " vertex ids");
        }
    }
    return from_polygons(std::move(vertices), cells, Family::Custom, 0);
}

void save(const std::string& path, const PolyMesh& mesh)
{
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_text(out, mesh);
    if (!out) throw Error(ErrorCode::Io, "failed writing '" + path + "'");
}

PolyMesh load(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
    return read_text(in);
}

} // namespace wgs::mesh
