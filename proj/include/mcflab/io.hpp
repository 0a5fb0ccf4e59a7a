#pragma once

#include <cstddef>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcflab/grid.hpp"

namespace mcflab {

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Sidecar header of a field dump. `dims` is slowest-first.
struct FieldHeader {
  std::string kind = "field";
  std::vector<std::size_t> dims;
  std::vector<double> spacing;
  double t0 = 0.0;
  double dt = 0.0;
  int n = 0;
  std::string experiment;
};

struct Field {
  FieldHeader header;
  std::vector<double> data;
};

/// Writes `<base>.bin` (little-endian float64, row-major) and `<base>.json`.
void dump_field(const Field& field, const std::filesystem::path& base);
/// Reads both files back; throws on missing, truncated or inconsistent data.
Field load_field(const std::filesystem::path& base);

/// A graph flow as a field of shape (M+1, N+1[, N+1]).
Field flow_field(const GraphFlow& gf, const std::string& experiment = "");
GraphFlow field_flow(const Field& field);

void dump_flow(const GraphFlow& gf, const std::filesystem::path& base, const std::string& experiment = "");
GraphFlow load_flow(const std::filesystem::path& base);

}  // namespace mcflab
