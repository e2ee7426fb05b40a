#include "rieszstab/io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "rieszstab/errors.hpp"

namespace rieszstab {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("missing field \"") + key + "\"");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw IoError(std::string("field \"") + key + "\": " + e.what());
  }
}

void check_header(const json& j, const std::string& format) {
  if (!j.is_object()) throw IoError("expected a JSON object");
  if (field<std::string>(j, "format") != format) throw IoError("expected format " + format);
  const int v = field<int>(j, "version");
  if (v != kFormatVersion) throw IoError("unsupported " + format + " version " + std::to_string(v));
}

Point point_from(const json& j, const char* key, int dim) {
  const auto v = field<std::vector<double>>(j, key);
  if (static_cast<int>(v.size()) != dim) throw IoError(std::string("field \"") + key + "\" needs " + std::to_string(dim) + " entries");
  Point p{};
  for (int d = 0; d < dim; ++d) p[d] = v[d];
  return p;
}

std::vector<double> point_to(const Point& p, int dim) { return {p.begin(), p.begin() + dim}; }

ordered_json grid_to_json(const SphereGrid& g) {
  ordered_json j;
  j["dim"] = g.dim();
  switch (g.kind()) {
    case GridKind::Circle:
      j["kind"] = "circle";
      j["resolution"] = g.resolution();
      break;
    case GridKind::GaussProduct:
      j["kind"] = "gauss-product";
      j["resolution"] = g.resolution();
      break;
    case GridKind::Custom: {
      j["kind"] = "custom";
      ordered_json nodes = ordered_json::array();
      for (const Point& x : g.nodes()) nodes.push_back(point_to(x, g.dim()));
      j["nodes"] = nodes;
      j["weights"] = g.weights();
      break;
    }
  }
  return j;
}

std::shared_ptr<const SphereGrid> grid_from_json(const json& j) {
  const int dim = field<int>(j, "dim");
  const auto kind = field<std::string>(j, "kind");
  try {
    if (kind == "circle" || kind == "gauss-product") {
      if ((kind == "circle") != (dim == 2)) throw IoError("grid kind " + kind + " does not match dim " + std::to_string(dim));
      return SphereGrid::make(dim, field<int>(j, "resolution"));
    }
    if (kind == "custom") {
      std::vector<Point> nodes;
      for (const auto& x : field<json>(j, "nodes")) {
        json wrap{{"x", x}};
        nodes.push_back(point_from(wrap, "x", dim));
      }
      return SphereGrid::custom(dim, std::move(nodes), field<std::vector<double>>(j, "weights"));
    }
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(std::string("invalid grid: ") + e.what());
  }
  throw IoError("unknown grid kind " + kind);
}

}  // namespace

std::string base64_encode(const std::string& bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw IoError("base64 payload length is not a multiple of 4");
  std::string out(3 * text.size() / 4 + 1, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw IoError("invalid base64 payload");
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') ++pad;
  if (text.size() > 1 && text[text.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

std::string git_blob_hash(const std::string& text) {
  const std::string blob = "blob " + std::to_string(text.size()) + std::string(1, '\0') + text;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) throw Error("SHA-1 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

std::string seal_report(ordered_json report) {
  report.erase("content_hash");
  report["content_hash"] = git_blob_hash(report.dump());
  return report.dump(2) + "\n";
}

ordered_json voxel_set_to_json(const VoxelSet& v) {
  const Lattice& l = v.lattice();
  std::string bits((v.occupancy().size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < v.occupancy().size(); ++i)
    if (v.occupied(i)) bits[i / 8] = static_cast<char>(bits[i / 8] | (1 << (i % 8)));
  ordered_json j;
  j["format"] = "rieszstab.voxelset";
  j["version"] = kFormatVersion;
  j["dim"] = l.dim;
  j["origin"] = point_to(l.origin, l.dim);
  j["spacing"] = l.h;
  j["dims"] = std::vector<int>(l.dims.begin(), l.dims.begin() + l.dim);
  j["occupancy"] = base64_encode(bits);
  return j;
}

VoxelSet voxel_set_from_json(const json& j) {
  check_header(j, "rieszstab.voxelset");
  Lattice l;
  l.dim = field<int>(j, "dim");
  if (l.dim != 2 && l.dim != 3) throw IoError("dim must be 2 or 3");
  l.origin = point_from(j, "origin", l.dim);
  l.h = field<double>(j, "spacing");
  if (!(l.h > 0.0)) throw IoError("spacing must be positive");
  const auto dims = field<std::vector<int>>(j, "dims");
  if (static_cast<int>(dims.size()) != l.dim) throw IoError("dims needs one entry per axis");
  for (int d = 0; d < l.dim; ++d) {
    if (dims[d] <= 0) throw IoError("dims must be positive");
    l.dims[d] = dims[d];
  }
  const std::string bits = base64_decode(field<std::string>(j, "occupancy"));
  if (bits.size() != (l.size() + 7) / 8) throw IoError("occupancy payload does not match dims");
  std::vector<std::uint8_t> occ(l.size());
  for (std::size_t i = 0; i < occ.size(); ++i) occ[i] = (static_cast<unsigned char>(bits[i / 8]) >> (i % 8)) & 1u;
  return VoxelSet(l, std::move(occ));
}

ordered_json graph_set_to_json(const GraphSet& e) {
  ordered_json j;
  j["format"] = "rieszstab.graphset";
  j["version"] = kFormatVersion;
  j["grid"] = grid_to_json(e.grid());
  j["center"] = point_to(e.center(), e.dim());
  if (e.has_subcells()) {
    ordered_json cells = ordered_json::array();
    for (const GraphCell& c : e.cells()) cells.push_back(ordered_json::array({c.node, c.weight, c.u}));
    j["cells"] = cells;
  } else {
    j["u"] = e.node_values();
  }
  return j;
}

GraphSet graph_set_from_json(const json& j) {
  check_header(j, "rieszstab.graphset");
  auto grid = grid_from_json(field<json>(j, "grid"));
  const Point c = point_from(j, "center", grid->dim());
  try {
    if (j.contains("u")) return GraphSet(grid, field<std::vector<double>>(j, "u"), c);
    std::vector<GraphCell> cells;
    for (const auto& t : field<json>(j, "cells")) {
      if (!t.is_array() || t.size() != 3) throw IoError("cells must be [node, weight, u] triples");
      cells.push_back({t[0].get<std::size_t>(), t[1].get<double>(), t[2].get<double>()});
    }
    return GraphSet::from_cells(grid, std::move(cells), c);
  } catch (const IoError&) {
    throw;
  } catch (const json::exception& e) {
    throw IoError(std::string("invalid graph set: ") + e.what());
  } catch (const Error& e) {
    throw IoError(std::string("invalid graph set: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(source + ": " + e.what());
  }
}

VoxelSet load_voxel_set(const std::string& path) {
  try {
    return voxel_set_from_json(parse_json(read_text_file(path), path));
  } catch (const IoError& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw IoError(path + ": " + what);
  }
}

void save_voxel_set(const VoxelSet& v, const std::string& path) { write_text_file(path, voxel_set_to_json(v).dump() + "\n"); }

}  // namespace rieszstab
