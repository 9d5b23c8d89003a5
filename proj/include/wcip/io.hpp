#pragma once

#include "wcip/objective.hpp"

#include <filesystem>
#include <string>

namespace wcip {

inline constexpr std::uint32_t kObservationFileVersion = 1;

/// Binary observation file. Header: "WCIP", u32 version, u64 node count,
/// u64 n_steps, f64 dt, f64 noise level, u64 seed, per node (u64 id, 3 x f64
/// coordinates), mask bitmap (LSB first), u32 CRC32 of all preceding bytes.
/// Payload: little-endian f64, step-major, then node, then component.
struct ObservationFile {
  std::vector<std::uint64_t> node_ids;
  std::vector<Vec3> coords;
  std::vector<char> mask;
  Index n_steps = 0;
  double dt = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  Eigen::MatrixXd values;  // 3 * nodes x n_steps
};

std::string encode_observation_file(const ObservationFile& file);
ObservationFile decode_observation_file(const std::string& bytes);

void write_observation_file(const std::filesystem::path& path, const ObservationFile& file);
ObservationFile read_observation_file(const std::filesystem::path& path);

ObservationFile to_observation_file(const HybridDomain& domain, const ObservationSet& obs);

/// Rebuilds the set on `domain`; nodes must be top boundary grid nodes at the
/// recorded coordinates.
ObservationSet to_observation_set(const HybridDomain& domain, const ObservationFile& file, double zeta_fraction = 0.1);

/// Legacy ASCII VTK unstructured grid (tetrahedra, cell type 10).
struct VtkField {
  std::string name;
  Eigen::VectorXd values;
  int components = 1;  // 1 or 3 (node-major)
};

void write_vtk(const std::filesystem::path& path, const TetraMesh& mesh, const std::vector<VtkField>& point_data = {},
               const std::vector<VtkField>& cell_data = {});

/// Node-major vector field to per-node magnitudes.
Eigen::VectorXd magnitude(const VectorField& field);

}  // namespace wcip
