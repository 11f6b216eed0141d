#include "carnotkit/json_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace carnotkit {

Json poly_to_json(const Poly& p) {
  Json arr = Json::array();
  for (const auto& [e, c] : p.terms()) {
    Json term;
    term["coeff"] = format_rat(c);
    term["exps"] = e;
    arr.push_back(std::move(term));
  }
  return arr;
}

Poly poly_from_json(const Json& j, int dim) {
  if (!j.is_array()) throw ParseError("polynomial must be an array of terms");
  Poly p(dim);
  for (const auto& term : j) {
    if (!term.is_object() || !term.contains("coeff") || !term.contains("exps"))
      throw ParseError("polynomial term must carry \"coeff\" and \"exps\"");
    if (!term["coeff"].is_string()) throw ParseError("coefficient must be an exact rational string");
    Rat c;
    try {
      c = parse_rat(term["coeff"].get<std::string>());
    } catch (const Error& e) {
      throw ParseError(e.what());
    }
    const Json& exps = term["exps"];
    if (!exps.is_array() || static_cast<int>(exps.size()) != dim)
      throw ParseError("term exponent list must have one entry per variable");
    Mono e(dim);
    for (int i = 0; i < dim; ++i) {
      if (!exps[i].is_number_integer() || exps[i].get<int>() < 0)
        throw ParseError("exponents must be nonnegative integers");
      e[i] = exps[i].get<int>();
    }
    p.add_term(e, c);
  }
  return p;
}

Json field_to_json(const VectorField& x) {
  Json arr = Json::array();
  for (const auto& c : x.comp) arr.push_back(poly_to_json(c));
  return arr;
}

VectorField field_from_json(const Json& j, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ParseError("vector field must list one polynomial per coordinate");
  std::vector<Poly> comp;
  comp.reserve(dim);
  for (const auto& c : j) comp.push_back(poly_from_json(c, dim));
  return VectorField{std::move(comp)};
}

ChartFile chart_from_json(const Json& j) {
  if (!j.is_object()) throw ParseError("chart file must be a JSON object");
  for (const auto& key : {"dim", "ranks", "frame"})
    if (!j.contains(key)) throw ParseError(std::string("chart file is missing \"") + key + "\"");
  if (!j["dim"].is_number_integer()) throw ParseError("\"dim\" must be an integer");
  int dim = j["dim"].get<int>();
  if (dim < 1 || dim > 12) throw ParseError("\"dim\" must be between 1 and 12");
  if (!j["ranks"].is_array()) throw ParseError("\"ranks\" must be an array");
  std::vector<int> ranks;
  for (const auto& r : j["ranks"]) {
    if (!r.is_number_integer()) throw ParseError("ranks must be integers");
    ranks.push_back(r.get<int>());
  }
  if (!j["frame"].is_array() || static_cast<int>(j["frame"].size()) != dim)
    throw ParseError("\"frame\" must list one field per dimension");
  std::vector<VectorField> frame;
  for (const auto& f : j["frame"]) frame.push_back(field_from_json(f, dim));
  std::vector<int> normal;
  if (j.contains("normal_vars")) {
    if (!j["normal_vars"].is_array()) throw ParseError("\"normal_vars\" must be an array");
    for (const auto& v : j["normal_vars"]) {
      if (!v.is_number_integer()) throw ParseError("normal variable indices must be integers");
      int idx = v.get<int>();
      if (idx < 1 || idx > dim) throw ParseError("normal variable indices are 1-based coordinates");
      normal.push_back(idx - 1);
    }
  }
  ChartFile out{FilteredChart(dim, std::move(ranks), std::move(frame), std::move(normal)), {}};
  if (j.contains("fields")) {
    if (!j["fields"].is_object()) throw ParseError("\"fields\" must map names to vector fields");
    for (const auto& [name, fj] : j["fields"].items())
      out.fields.emplace(name, field_from_json(fj, dim));
  }
  return out;
}

ChartFile load_chart_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open chart file: " + path);
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ParseError("chart file is not valid JSON: " + std::string(e.what()));
  }
  try {
    return chart_from_json(j);
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    // Structural chart errors (bad ranks, frame shapes) are file problems.
    throw ParseError(e.what());
  }
}

Json chart_to_json(const FilteredChart& chart) {
  Json j;
  j["dim"] = chart.dim();
  j["ranks"] = chart.ranks();
  Json frame = Json::array();
  for (const auto& f : chart.frame()) frame.push_back(field_to_json(f));
  j["frame"] = std::move(frame);
  if (chart.marked()) {
    Json normal = Json::array();
    for (int v : chart.normal_vars()) normal.push_back(v + 1);
    j["normal_vars"] = std::move(normal);
  }
  return j;
}

Json report_to_json(const ValidationReport& rep) {
  Json j;
  j["pass"] = rep.pass();
  Json v = Json::array();
  for (const auto& viol : rep.violations) {
    Json item;
    item["where"] = viol.where;
    item["message"] = viol.message;
    v.push_back(std::move(item));
  }
  j["violations"] = std::move(v);
  return j;
}

namespace {

void dump_rec(const Json& j, std::string& out, int indent, int depth) {
  auto pad = [&](int d) { out.append(static_cast<size_t>(d) * indent, ' '); };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, val] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        out += Json(key).dump();
        out += ": ";
        dump_rec(val, out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& val : j) {
        if (!first) out += ",\n";
        first = false;
        pad(depth + 1);
        dump_rec(val, out, indent, depth + 1);
      }
      out += "\n";
      pad(depth);
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.17g", j.get<double>());
      out += buf;
      return;
    }
    default:
      out += j.dump();
      return;
  }
}

}  // namespace

std::string dump_deterministic(const Json& j, int indent) {
  std::string out;
  dump_rec(j, out, indent, 0);
  out += "\n";
  return out;
}

}  // namespace carnotkit
