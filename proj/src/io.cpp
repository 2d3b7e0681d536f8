#include "cmms/io.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cmms {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

const json& need(const json& j, const char* key, const std::string& ctx) {
  const auto it = j.find(key);
  if (it == j.end()) fail(ctx + ": missing field '" + key + "'");
  return *it;
}

double need_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) fail(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int need_int(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_integer()) fail(ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::string elem_ctx(const char* array, std::size_t idx) {
  return std::string(array) + "[" + std::to_string(idx) + "]";
}

void dump_canonical(const json& j, std::string& out) {
  switch (j.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map keeps keys sorted
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        dump_canonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      bool first = true;
      for (const json& v : j) {
        if (!first) out += ',';
        first = false;
        dump_canonical(v, out);
      }
      out += ']';
      break;
    }
    case json::value_t::string:
      out += j.dump();
      break;
    case json::value_t::boolean:
      out += j.get<bool>() ? "true" : "false";
      break;
    case json::value_t::number_integer:
      out += std::to_string(j.get<std::int64_t>());
      break;
    case json::value_t::number_unsigned:
      out += std::to_string(j.get<std::uint64_t>());
      break;
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (std::isfinite(v))
        out += format_double(v);
      else
        out += "\"" + format_double(v) + "\"";
      break;
    }
    default:
      out += "null";
      break;
  }
}

ScalarField field_from_json(const json& j, const std::string& ctx) {
  const json* arr = &j;
  if (j.is_object()) arr = &need(j, "values", ctx);
  if (!arr->is_array()) fail(ctx + ": expected an array of values");
  ScalarField f(arr->size());
  for (std::size_t i = 0; i < arr->size(); ++i) {
    const json& v = (*arr)[i];
    if (!v.is_number()) fail(ctx + ": values[" + std::to_string(i) + "] must be a number");
    f[i] = v.get<double>();
  }
  return f;
}

ScalarField field_from_csv(const std::string& text, const std::string& ctx) {
  std::vector<double> vals;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    const std::string tok = line.substr(a, b - a + 1);
    try {
      std::size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument("trailing characters");
      vals.push_back(v);
    } catch (const std::exception&) {
      fail(ctx + ": line " + std::to_string(lineno) + ": '" + tok + "' is not a number");
    }
  }
  return ScalarField(std::move(vals));
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string canonical_dump(const nlohmann::json& j) {
  std::string out;
  dump_canonical(j, out);
  out += '\n';
  return out;
}

nlohmann::json space_to_json(const DiscreteMMS& space) {
  json nodes = json::array();
  for (int i = 0; i < space.n; ++i) {
    json nd{{"id", i}, {"measure", space.measure[i]}, {"dim_loc", space.dim_loc[i]}};
    if (space.has_coords()) nd["coords"] = {space.coords[i][0], space.coords[i][1]};
    if (space.has_fv_data()) nd["cell_volume"] = space.cell_volume[i];
    nodes.push_back(std::move(nd));
  }
  json edges = json::array();
  for (const Edge& e : space.edges) {
    json ed{{"i", e.i}, {"j", e.j}, {"length", e.length}};
    if (e.sigma >= 0.0) ed["sigma"] = e.sigma;
    edges.push_back(std::move(ed));
  }
  json j{{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
  if (space.grid) j["grid"] = {{"nx", space.grid->nx}, {"ny", space.grid->ny}};
  if (!space.boundary.empty()) j["boundary"] = space.boundary;
  return j;
}

DiscreteMMS space_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail("space json: top level must be an object");
  const json& nodes = need(j, "nodes", "space json");
  const json& edges = need(j, "edges", "space json");
  if (!nodes.is_array() || nodes.empty()) fail("space json: 'nodes' must be a non-empty array");
  if (!edges.is_array()) fail("space json: 'edges' must be an array");

  DiscreteMMS s;
  s.n = static_cast<int>(nodes.size());
  const bool with_coords = nodes[0].contains("coords");
  const bool with_vol = nodes[0].contains("cell_volume");
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    const std::string ctx = elem_ctx("nodes", k);
    const json& nd = nodes[k];
    if (!nd.is_object()) fail(ctx + ": must be an object");
    if (need_int(nd, "id", ctx) != static_cast<int>(k))
      fail(ctx + ": ids must run 0.." + std::to_string(s.n - 1) + " in order");
    s.measure.push_back(need_number(nd, "measure", ctx));
    s.dim_loc.push_back(need_int(nd, "dim_loc", ctx));
    if (nd.contains("coords") != with_coords || nd.contains("cell_volume") != with_vol)
      fail(ctx + ": optional fields must be present on all nodes or none");
    if (with_coords) {
      const json& c = nd["coords"];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        fail(ctx + ": 'coords' must be [x, y]");
      s.coords.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    if (with_vol) s.cell_volume.push_back(need_number(nd, "cell_volume", ctx));
  }
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string ctx = elem_ctx("edges", k);
    const json& ed = edges[k];
    if (!ed.is_object()) fail(ctx + ": must be an object");
    Edge e;
    e.i = need_int(ed, "i", ctx);
    e.j = need_int(ed, "j", ctx);
    e.length = need_number(ed, "length", ctx);
    if (ed.contains("sigma")) e.sigma = need_number(ed, "sigma", ctx);
    s.edges.push_back(e);
  }
  if (j.contains("grid")) {
    const json& g = j["grid"];
    s.grid = GridShape{need_int(g, "nx", "space json: grid"), need_int(g, "ny", "space json: grid")};
  }
  if (j.contains("boundary")) {
    const json& b = j["boundary"];
    if (!b.is_array()) fail("space json: 'boundary' must be an array of node ids");
    for (std::size_t k = 0; k < b.size(); ++k) {
      if (!b[k].is_number_integer()) fail(elem_ctx("boundary", k) + ": must be an integer id");
      const int id = b[k].get<int>();
      if (id < 0 || id >= s.n) fail(elem_ctx("boundary", k) + ": id out of range");
      s.boundary.push_back(id);
    }
  }
  s.finalize();
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot open '" + path + "' for writing");
  out << content;
  if (!out) fail("write to '" + path + "' failed");
}

DiscreteMMS load_space(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    fail("space json '" + path + "': " + e.what());
  }
  try {
    return space_from_json(j);
  } catch (const std::invalid_argument& e) {
    fail(std::string(e.what()) + " (in '" + path + "')");
  }
}

void save_space(const DiscreteMMS& space, const std::string& path) {
  write_text(path, canonical_dump(space_to_json(space)));
}

ScalarField load_field(const std::string& path, std::size_t expect_n) {
  const std::string text = read_text(path);
  std::size_t first = text.find_first_not_of(" \t\r\n");
  ScalarField f(std::size_t{0});
  if (first != std::string::npos && (text[first] == '[' || text[first] == '{')) {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      fail("field '" + path + "': " + e.what());
    }
    f = field_from_json(j, "field '" + path + "'");
  } else {
    f = field_from_csv(text, "field '" + path + "'");
  }
  if (expect_n != 0 && f.size() != expect_n)
    fail("field '" + path + "': has " + std::to_string(f.size()) + " values, space has " +
         std::to_string(expect_n) + " nodes");
  return f;
}

void save_field(const ScalarField& f, const std::string& path) {
  json arr = json::array();
  for (double v : f) arr.push_back(v);
  write_text(path, canonical_dump(arr));
}

void save_distances_csv(const std::string& path,
                        const std::vector<std::tuple<int, int, double>>& rows) {
  std::string out = "src,dst,value\n";
  for (const auto& [s, d, v] : rows)
    out += std::to_string(s) + "," + std::to_string(d) + "," + format_double(v) + "\n";
  write_text(path, out);
}

}  // namespace cmms
