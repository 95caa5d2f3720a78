#include "shapelab/io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace shapelab {

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end())
    throw Error(std::string("missing field '") + name + "'");
  return *it;
}

double require_number(const json& j, const char* name) {
  const json& f = require_field(j, name);
  if (!f.is_number())
    throw Error(std::string("field '") + name + "' must be a number");
  return f.get<double>();
}

json grid_spec_to_json(const GridSpec& spec) {
  json j;
  j["dimension"] = spec.dim;
  j["cells_per_axis"] = spec.cells;
  j["spacing"] = spec.h;
  json o = json::array();
  for (int a = 0; a < spec.dim; ++a) o.push_back(spec.origin[a]);
  j["origin"] = o;
  return j;
}

GridSpec grid_spec_from_json(const json& j) {
  const int dim = static_cast<int>(require_number(j, "dimension"));
  const int cells = static_cast<int>(require_number(j, "cells_per_axis"));
  const double h = require_number(j, "spacing");
  const json& o = require_field(j, "origin");
  if (!o.is_array() || static_cast<int>(o.size()) != dim)
    throw Error("field 'origin' must be an array of length 'dimension'");
  Point origin{0, 0, 0};
  for (int a = 0; a < dim; ++a) origin[a] = o[a].get<double>();
  return GridSpec(dim, cells, h, origin);
}

json domain_to_json(const GridDomain& dom) {
  json j = grid_spec_to_json(dom.spec);
  j["format"] = "shapelab-domain";
  j["version"] = 1;
  const int n = dom.spec.cells;
  const std::int64_t rows = dom.spec.cell_count() / n;
  json rle = json::array();
  for (std::int64_t r = 0; r < rows; ++r) {
    json row = json::array();
    int run = 0;
    bool current = false;  // runs start with an unoccupied count
    for (int c = 0; c < n; ++c) {
      const bool occ = dom.mask[r * n + c] != 0;
      if (occ == current) {
        ++run;
      } else {
        row.push_back(run);
        current = occ;
        run = 1;
      }
    }
    row.push_back(run);
    rle.push_back(std::move(row));
  }
  j["mask_rle"] = std::move(rle);
  return j;
}

GridDomain domain_from_json(const json& j) {
  if (require_field(j, "format").get<std::string>() != "shapelab-domain")
    throw Error("field 'format' must be 'shapelab-domain'");
  if (static_cast<int>(require_number(j, "version")) != 1)
    throw Error("field 'version' must be 1");
  GridDomain dom(grid_spec_from_json(j));
  const json& rle = require_field(j, "mask_rle");
  const int n = dom.spec.cells;
  const std::int64_t rows = dom.spec.cell_count() / n;
  if (!rle.is_array() || static_cast<std::int64_t>(rle.size()) != rows)
    throw Error("field 'mask_rle' has the wrong number of rows");
  for (std::int64_t r = 0; r < rows; ++r) {
    const json& row = rle[r];
    if (!row.is_array()) throw Error("field 'mask_rle' rows must be arrays");
    int c = 0;
    bool current = false;
    for (const auto& runj : row) {
      const int run = runj.get<int>();
      if (run < 0 || c + run > n)
        throw Error("field 'mask_rle' runs exceed the row length");
      if (current)
        for (int i = 0; i < run; ++i) dom.mask[r * n + c + i] = 1;
      c += run;
      current = !current;
    }
    if (c != n) throw Error("field 'mask_rle' rows must sum to cells_per_axis");
  }
  return dom;
}

json star_to_json(const StarBoundary& b) {
  json j;
  j["format"] = "shapelab-star";
  j["version"] = 1;
  j["R"] = b.base_radius;
  j["center"] = json::array({b.center[0], b.center[1]});
  j["cos"] = b.cos_coeff;
  j["sin"] = b.sin_coeff;
  return j;
}

StarBoundary star_from_json(const json& j) {
  if (require_field(j, "format").get<std::string>() != "shapelab-star")
    throw Error("field 'format' must be 'shapelab-star'");
  if (static_cast<int>(require_number(j, "version")) != 1)
    throw Error("field 'version' must be 1");
  StarBoundary b;
  b.base_radius = require_number(j, "R");
  const json& c = require_field(j, "center");
  if (!c.is_array() || c.size() != 2)
    throw Error("field 'center' must be an array of length 2");
  b.center = {c[0].get<double>(), c[1].get<double>(), 0.0};
  b.cos_coeff = require_field(j, "cos").get<std::vector<double>>();
  b.sin_coeff = require_field(j, "sin").get<std::vector<double>>();
  if (b.cos_coeff.empty()) throw Error("field 'cos' must be non-empty");
  return b;
}

json field_to_json(const ScalarField& f, const GridDomain& dom) {
  if (!(f.spec == dom.spec))
    throw SpecMismatchError("field and domain live on different grids");
  json j = grid_spec_to_json(dom.spec);
  j["format"] = "shapelab-field";
  j["version"] = 1;
  json values = json::array();
  for_each_occupied(dom, [&](const CellIndex&, std::int64_t id) {
    values.push_back(f.values[id]);
  });
  j["values"] = std::move(values);
  return j;
}

ScalarField field_from_json(const json& j, const GridDomain& dom) {
  if (require_field(j, "format").get<std::string>() != "shapelab-field")
    throw Error("field 'format' must be 'shapelab-field'");
  if (static_cast<int>(require_number(j, "version")) != 1)
    throw Error("field 'version' must be 1");
  if (!(grid_spec_from_json(j) == dom.spec))
    throw SpecMismatchError("field grid does not match the domain grid");
  const json& values = require_field(j, "values");
  if (static_cast<std::int64_t>(values.size()) != dom.occupied_count())
    throw Error("field 'values' length does not match the occupied cells");
  ScalarField f(dom.spec);
  std::size_t k = 0;
  for_each_occupied(dom, [&](const CellIndex&, std::int64_t id) {
    f.values[id] = values[k++].get<double>();
  });
  return f;
}

void save_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << j.dump(1) << "\n";
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid JSON in '" + path.string() + "': " + e.what());
  }
  return j;
}

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid JSON document: ") + e.what());
  }
}

}  // namespace

std::string domain_to_text(const GridDomain& dom) {
  return domain_to_json(dom).dump(1) + "\n";
}

GridDomain domain_from_text(const std::string& text) {
  return domain_from_json(parse_text(text));
}

std::string star_to_text(const StarBoundary& b) {
  return star_to_json(b).dump(1) + "\n";
}

StarBoundary star_from_text(const std::string& text) {
  return star_from_json(parse_text(text));
}

std::string field_to_text(const ScalarField& f, const GridDomain& dom) {
  return field_to_json(f, dom).dump(1) + "\n";
}

ScalarField field_from_text(const std::string& text, const GridDomain& dom) {
  return field_from_json(parse_text(text), dom);
}

void save_domain(const std::filesystem::path& path, const GridDomain& dom) {
  save_json(path, domain_to_json(dom));
}

GridDomain load_domain(const std::filesystem::path& path) {
  return domain_from_json(load_json(path));
}

void save_star(const std::filesystem::path& path, const StarBoundary& b) {
  save_json(path, star_to_json(b));
}

StarBoundary star_from_file(const std::filesystem::path& path) {
  return star_from_json(load_json(path));
}

bool file_is_star(const std::filesystem::path& path) {
  const json j = load_json(path);
  auto it = j.find("format");
  return it != j.end() && it->is_string() &&
         it->get<std::string>() == "shapelab-star";
}

GridDomain load_domain_any(const std::filesystem::path& path,
                           const GridSpec& spec) {
  const json j = load_json(path);
  auto it = j.find("format");
  if (it == j.end() || !it->is_string())
    throw Error("missing field 'format'");
  const std::string fmt = it->get<std::string>();
  if (fmt == "shapelab-domain") return domain_from_json(j);
  if (fmt == "shapelab-star") return rasterize_star(star_from_json(j), spec);
  throw Error("field 'format' has unknown value '" + fmt + "'");
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return std::string(buf);
}

}  // namespace shapelab
