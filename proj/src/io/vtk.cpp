#include "wcip/io.hpp"

#include <fstream>
#include <iomanip>

namespace wcip {

namespace {

void write_field(std::ostream& out, const VtkField& f, Index count) {
  if (f.components != 1 && f.components != 3) throw ContractError("VTK field '" + f.name + "' must have 1 or 3 components");
  if (f.values.size() != f.components * count)
    throw ContractError("VTK field '" + f.name + "' has " + std::to_string(f.values.size()) + " values, expected " +
                        std::to_string(f.components * count));
  if (f.components == 1) {
    out << "SCALARS " << f.name << " double 1\nLOOKUP_TABLE default\n";
    for (Index i = 0; i < count; ++i) out << f.values(i) << '\n';
  } else {
    out << "VECTORS " << f.name << " double\n";
    for (Index i = 0; i < count; ++i)
      out << f.values(3 * i) << ' ' << f.values(3 * i + 1) << ' ' << f.values(3 * i + 2) << '\n';
  }
}

}  // namespace

void write_vtk(const std::filesystem::path& path, const TetraMesh& mesh, const std::vector<VtkField>& point_data,
               const std::vector<VtkField>& cell_data) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  const Index nv = mesh.vertex_count(), nt = mesh.tet_count();
  out << "# vtk DataFile Version 3.0\nwcip\nASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << nv << " double\n";
  for (const Vec3& x : mesh.vertices) out << x(0) << ' ' << x(1) << ' ' << x(2) << '\n';
  out << "CELLS " << nt << ' ' << 5 * nt << '\n';
  for (const Tet& t : mesh.tets) out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
  out << "CELL_TYPES " << nt << '\n';
  for (Index k = 0; k < nt; ++k) out << "10\n";
  if (!point_data.empty()) {
    out << "POINT_DATA " << nv << '\n';
    for (const VtkField& f : point_data) write_field(out, f, nv);
  }
  if (!cell_data.empty()) {
    out << "CELL_DATA " << nt << '\n';
    for (const VtkField& f : cell_data) write_field(out, f, nt);
  }
  if (!out) throw Error("failed writing " + path.string());
}

Eigen::VectorXd magnitude(const VectorField& field) {
  if (field.size() % 3 != 0) throw ContractError("vector field length is not a multiple of 3");
  return field.reshaped(3, field.size() / 3).colwise().norm().transpose();
}

}  // namespace wcip
