#pragma once

#include <map>
#include <string>

#include "json.hpp"

#include "carnotkit/chart.hpp"
#include "carnotkit/report.hpp"

namespace carnotkit {

using Json = nlohmann::ordered_json;

/// Malformed input (file shape, JSON syntax, bad literals). Maps to the
/// usage/parse exit code in the CLI, unlike Error which maps to a report.
struct ParseError : Error {
  using Error::Error;
};

/// Polynomials serialize as arrays of {"coeff": "p/q", "exps": [e1..en]}.
Json poly_to_json(const Poly& p);
Poly poly_from_json(const Json& j, int dim);

Json field_to_json(const VectorField& x);
VectorField field_from_json(const Json& j, int dim);

/// Chart file: {"dim", "ranks", "frame", "normal_vars"?, "fields"?}.
struct ChartFile {
  FilteredChart chart;
  std::map<std::string, VectorField> fields;
};
ChartFile chart_from_json(const Json& j);
ChartFile load_chart_file(const std::string& path);
Json chart_to_json(const FilteredChart& chart);

Json report_to_json(const ValidationReport& rep);

/// Deterministic serialization: insertion-ordered keys, rationals as exact
/// strings, floats rendered with 17 significant digits.
std::string dump_deterministic(const Json& j, int indent = 2);

}  // namespace carnotkit
