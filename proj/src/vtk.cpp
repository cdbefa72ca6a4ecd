#include "cardiograph/vtk.hpp"

#include <fstream>
#include <limits>

#include "cardiograph/errors.hpp"

namespace cardiograph {

void write_vtk(const Geometry& g,
               const std::vector<std::pair<std::string, std::vector<double>>>& fields,
               const std::string& path) {
  if (!g.structured()) raise(errc::Unsupported, "VTK export needs a structured grid");
  if (fields.empty()) raise(errc::EmptyList, "no fields to write");
  for (const auto& [name, values] : fields) {
    if (name.empty() || name.find(' ') != std::string::npos)
      raise(errc::ConfigError, "field name '" + name + "' is empty or contains spaces");
    if (values.size() != g.node_count())
      raise(errc::ShapeMismatch, "field '" + name + "' length differs from node count");
  }

  std::ofstream out(path);
  if (!out) raise(errc::IoError, "cannot open '" + path + "' for writing");
  out.precision(std::numeric_limits<double>::max_digits10);

  const int nz = g.dims.size() > 2 ? g.dims[2] : 1;
  const double hz = g.spacing.size() > 2 ? g.spacing[2] : 1.0;
  out << "# vtk DataFile Version 3.0\n";
  out << "cardiograph fields\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  out << "DIMENSIONS " << g.dims[0] << ' ' << g.dims[1] << ' ' << nz << '\n';
  out << "ORIGIN 0 0 0\n";
  out << "SPACING " << g.spacing[0] << ' ' << g.spacing[1] << ' ' << hz << '\n';
  out << "POINT_DATA " << g.node_count() << '\n';
  for (const auto& [name, values] : fields) {
    out << "SCALARS " << name << " double 1\n";
    out << "LOOKUP_TABLE default\n";
    for (std::size_t i = 0; i < values.size(); ++i)
      out << values[i] << (i + 1 == values.size() ? '\n' : ' ');
  }
  if (!out) raise(errc::IoError, "failed while writing '" + path + "'");
}

}  // namespace cardiograph
