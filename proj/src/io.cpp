#include "mcflab/io.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

namespace mcflab {

namespace {

constexpr int kSchema = 1;

std::filesystem::path with_suffix(std::filesystem::path base, const char* ext) {
  base += ext;
  return base;
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int k = 0; k < 8; ++k) r |= ((v >> (8 * k)) & 0xffu) << (8 * (7 - k));
  return r;
}

std::size_t element_count(const std::vector<std::size_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

}  // namespace

void dump_field(const Field& field, const std::filesystem::path& base) {
  const auto& h = field.header;
  if (h.dims.empty() || element_count(h.dims) != field.data.size()) {
    throw IoError("field shape does not match its data (" + std::to_string(field.data.size()) + " values)");
  }
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  {
    std::ofstream out(with_suffix(base, ".bin"), std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + with_suffix(base, ".bin").string());
    for (double v : field.data) {
      const std::uint64_t bits = to_le(std::bit_cast<std::uint64_t>(v));
      out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
    }
    if (!out) throw IoError("write failed for " + with_suffix(base, ".bin").string());
  }
  nlohmann::json j;
  j["schema"] = kSchema;
  j["kind"] = h.kind;
  j["dims"] = h.dims;
  j["spacing"] = h.spacing;
  j["t0"] = h.t0;
  j["dt"] = h.dt;
  j["n"] = h.n;
  j["experiment"] = h.experiment;
  j["dtype"] = "float64-le";
  std::ofstream meta(with_suffix(base, ".json"), std::ios::trunc);
  if (!meta) throw IoError("cannot open " + with_suffix(base, ".json").string());
  meta << j.dump(2) << '\n';
}

Field load_field(const std::filesystem::path& base) {
  const auto meta_path = with_suffix(base, ".json");
  const auto bin_path = with_suffix(base, ".bin");
  std::ifstream meta(meta_path);
  if (!meta) throw IoError("missing header " + meta_path.string());
  Field f;
  try {
    const auto j = nlohmann::json::parse(meta);
    if (j.at("schema").get<int>() != kSchema) throw IoError("unsupported dump schema");
    if (j.at("dtype").get<std::string>() != "float64-le") throw IoError("unsupported dump dtype");
    f.header.kind = j.at("kind").get<std::string>();
    f.header.dims = j.at("dims").get<std::vector<std::size_t>>();
    f.header.spacing = j.at("spacing").get<std::vector<double>>();
    f.header.t0 = j.at("t0").get<double>();
    f.header.dt = j.at("dt").get<double>();
    f.header.n = j.at("n").get<int>();
    f.header.experiment = j.at("experiment").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed header " + meta_path.string() + ": " + e.what());
  }
  if (f.header.dims.empty()) throw IoError("header declares no dimensions");
  const std::size_t count = element_count(f.header.dims);
  std::error_code ec;
  const auto bytes = std::filesystem::file_size(bin_path, ec);
  if (ec) throw IoError("missing data " + bin_path.string());
  if (bytes != count * sizeof(double)) {
    throw IoError("data size " + std::to_string(bytes) + " bytes does not match the declared shape (" +
                  std::to_string(count * sizeof(double)) + " bytes)");
  }
  std::ifstream in(bin_path, std::ios::binary);
  std::vector<double> data(count);
  for (double& v : data) {
    std::uint64_t bits = 0;
    if (!in.read(reinterpret_cast<char*>(&bits), sizeof bits)) throw IoError("truncated data " + bin_path.string());
    v = std::bit_cast<double>(to_le(bits));
  }
  f.data = std::move(data);
  return f;
}

Field flow_field(const GraphFlow& gf, const std::string& experiment) {
  const auto& g = gf.grid;
  Field f;
  f.header.kind = "graph";
  f.header.dims.push_back(g.time_levels());
  for (int a = 0; a < g.axes(); ++a) f.header.dims.push_back(static_cast<std::size_t>(g.per_axis()));
  f.header.spacing.assign(static_cast<std::size_t>(g.axes()), g.hx);
  f.header.t0 = g.t0;
  f.header.dt = g.dt;
  f.header.n = g.n;
  f.header.experiment = experiment;
  f.data = gf.f;
  return f;
}

GraphFlow field_flow(const Field& field) {
  const auto& h = field.header;
  if (h.kind != "graph") throw IoError("dump is a '" + h.kind + "', not a graph flow");
  if (h.n < 2 || h.n > 3 || static_cast<int>(h.dims.size()) != h.n || h.dims[0] < 2) {
    throw IoError("graph dump has an inconsistent shape");
  }
  const int N = static_cast<int>(h.dims[1]) - 1;
  for (std::size_t a = 1; a < h.dims.size(); ++a) {
    if (static_cast<int>(h.dims[a]) - 1 != N) throw IoError("graph dump axes differ in length");
  }
  const int M = static_cast<int>(h.dims[0]) - 1;
  SpaceTimeGrid g = build_grid(h.n, N, M, h.t0, h.t0 + M * h.dt);
  // keep the stored step so the reconstructed grid is bit-identical
  g.dt = h.dt;
  return make_flow(g, field.data);
}

void dump_flow(const GraphFlow& gf, const std::filesystem::path& base, const std::string& experiment) {
  dump_field(flow_field(gf, experiment), base);
}

GraphFlow load_flow(const std::filesystem::path& base) { return field_flow(load_field(base)); }

}  // namespace mcflab
