#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "carnotkit/coords.hpp"
#include "carnotkit/deform.hpp"
#include "carnotkit/groupoid.hpp"
#include "carnotkit/json_io.hpp"
#include "carnotkit/log.hpp"
#include "carnotkit/nilpotent.hpp"

using namespace carnotkit;

namespace {

RatVec parse_rat_list(const std::string& s, int expect = -1) {
  RatVec out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(parse_rat(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(parse_rat(cur));
  if (expect >= 0 && static_cast<int>(out.size()) != expect)
    throw ParseError("expected " + std::to_string(expect) + " comma-separated rationals, got \"" + s + "\"");
  return out;
}

std::vector<double> parse_real_list(const std::string& s, int expect) {
  std::vector<double> out;
  std::string cur;
  auto flush = [&]() {
    if (cur.empty()) return;
    if (cur.find('/') != std::string::npos) {
      out.push_back(to_double(parse_rat(cur)));
    } else {
      char* end = nullptr;
      double v = std::strtod(cur.c_str(), &end);
      if (end == cur.c_str() || *end != '\0') throw ParseError("malformed number: " + cur);
      out.push_back(v);
    }
    cur.clear();
  };
  for (char c : s) {
    if (c == ',') flush();
    else if (!std::isspace(static_cast<unsigned char>(c))) cur += c;
  }
  flush();
  if (static_cast<int>(out.size()) != expect)
    throw ParseError("expected " + std::to_string(expect) + " comma-separated numbers, got \"" + s + "\"");
  return out;
}

Json rat_vec_json(const RatVec& v) {
  Json arr = Json::array();
  for (const auto& x : v) arr.push_back(format_rat(x));
  return arr;
}

Json double_vec_json(const std::vector<double>& v) {
  Json arr = Json::array();
  for (double x : v) arr.push_back(x);
  return arr;
}

VectorField resolve_field(const ChartFile& file, const std::string& name) {
  auto it = file.fields.find(name);
  if (it != file.fields.end()) return it->second;
  if (name == "model")
    return model_euler_field(file.chart.weights(), file.chart.normal_vars());
  throw ParseError("unknown field \"" + name + "\" (not defined in the chart file)");
}

void emit(const Json& j) { std::cout << dump_deterministic(j); }

int require_pass(const ValidationReport& rep, Json j) {
  emit(j);
  return rep.pass() ? 0 : 1;
}

Json element_json(const TGElement& g) {
  Json j;
  j["lambda"] = format_rat(g.lambda);
  if (g.zero_fiber()) {
    j["point"] = rat_vec_json(g.m);
    j["xi"] = rat_vec_json(g.xi);
  } else {
    j["target"] = rat_vec_json(g.p);
    j["source"] = rat_vec_json(g.q);
  }
  return j;
}

int run_validate(const std::string& path) {
  ChartFile file = load_chart_file(path);
  log_info("loaded chart of dimension " + std::to_string(file.chart.dim()) + ", step " +
           std::to_string(file.chart.step()));
  const auto& rep = file.chart.validate();
  Json j;
  j["pass"] = rep.pass();
  j["dim"] = file.chart.dim();
  j["step"] = file.chart.step();
  j["ranks"] = file.chart.ranks();
  j["weights"] = file.chart.weights();
  if (file.chart.marked()) {
    Json nv = Json::array();
    for (int v : file.chart.normal_vars()) nv.push_back(v + 1);
    j["normal_vars"] = std::move(nv);
  }
  j["violations"] = report_to_json(rep)["violations"];
  return require_pass(rep, std::move(j));
}

int run_osculate(const std::string& path, const std::string& point) {
  ChartFile file = load_chart_file(path);
  RatVec v = point.empty() ? RatVec(file.chart.dim(), Rat(0)) : parse_rat_list(point, file.chart.dim());
  auto l = osculating_algebra(file.chart, v);
  Json j;
  j["point"] = rat_vec_json(v);
  j["weights"] = l.weights();
  Json brackets = Json::array();
  for (int a = 0; a < l.dim(); ++a)
    for (int b = a + 1; b < l.dim(); ++b) {
      auto coeffs = l.bracket_of_basis(a, b);
      if (coeffs.empty()) continue;
      Json item;
      item["a"] = a + 1;
      item["b"] = b + 1;
      Json cj;
      for (const auto& [c, val] : coeffs) cj[std::to_string(c + 1)] = format_rat(val);
      item["coeffs"] = std::move(cj);
      brackets.push_back(std::move(item));
    }
  j["brackets"] = std::move(brackets);
  emit(j);
  return 0;
}

int run_privileged(const std::string& path, const std::string& point) {
  ChartFile file = load_chart_file(path);
  RatVec v = point.empty() ? RatVec(file.chart.dim(), Rat(0)) : parse_rat_list(point, file.chart.dim());
  auto coords = privileged_coordinates(file.chart, v);
  Json j;
  j["point"] = rat_vec_json(v);
  j["weights"] = file.chart.weights();
  Json cj = Json::array();
  for (const auto& c : coords) cj.push_back(poly_to_json(c));
  j["coordinates"] = std::move(cj);
  j["verified"] = true;
  emit(j);
  return 0;
}

int run_carnot(const std::string& path, const std::string& point, const std::string& coords_file) {
  ChartFile file = load_chart_file(path);
  RatVec v = point.empty() ? RatVec(file.chart.dim(), Rat(0)) : parse_rat_list(point, file.chart.dim());
  std::vector<Poly> coords;
  if (coords_file.empty()) {
    coords = privileged_coordinates(file.chart, v);
  } else {
    std::ifstream in(coords_file);
    if (!in) throw ParseError("cannot open coordinates file: " + coords_file);
    Json cj;
    try {
      in >> cj;
    } catch (const std::exception& e) {
      throw ParseError("coordinates file is not valid JSON: " + std::string(e.what()));
    }
    if (!cj.is_array()) throw ParseError("coordinates file must be an array of polynomials");
    for (const auto& item : cj) coords.push_back(poly_from_json(item, file.chart.dim()));
  }
  auto res = is_carnot(file.chart, v, coords);
  Json j;
  j["point"] = rat_vec_json(v);
  Json cj = Json::array();
  for (const auto& c : coords) cj.push_back(poly_to_json(c));
  j["coordinates"] = std::move(cj);
  j["carnot"] = res.carnot;
  if (res.carnot) {
    j["witness_index"] = nullptr;
    j["witness"] = nullptr;
  } else {
    j["witness_index"] = res.witness_index + 1;
    j["witness"] = poly_to_json(res.witness);
  }
  emit(j);
  return 0;
}

int run_euler_check(const std::string& path, const std::string& field, int cap) {
  ChartFile file = load_chart_file(path);
  VectorField e = resolve_field(file, field);
  if (cap <= 0) cap = file.chart.step();
  auto rep = euler_like_check(file.chart, e, cap);
  Json j;
  j["field"] = field;
  j["cap"] = cap;
  j["pass"] = rep.pass();
  j["violations"] = report_to_json(rep)["violations"];
  return require_pass(rep, std::move(j));
}

int run_tube(const std::string& path, const std::string& field, std::vector<std::string> starts,
             const std::string& samples_file, double lambda_target, double step, double tol,
             double bounds, std::optional<double> rescale) {
  ChartFile file = load_chart_file(path);
  VectorField e = resolve_field(file, field);
  log_info("building the deformation-space translation field for \"" + field + "\"");
  TField tf = TField::build(file.chart, e);
  log_debug("translation field built; lambda T = C + E verified");

  std::vector<std::vector<double>> points;
  if (!samples_file.empty()) {
    std::ifstream in(samples_file);
    if (!in) throw ParseError("cannot open samples file: " + samples_file);
    Json sj;
    try {
      in >> sj;
    } catch (const std::exception& ex) {
      throw ParseError("samples file is not valid JSON: " + std::string(ex.what()));
    }
    if (!sj.is_array()) throw ParseError("samples file must be an array of coordinate arrays");
    for (const auto& item : sj) {
      if (!item.is_array() || static_cast<int>(item.size()) != file.chart.dim())
        throw ParseError("each sample must list one value per coordinate");
      std::vector<double> pt;
      for (const auto& x : item) pt.push_back(x.get<double>());
      points.push_back(std::move(pt));
    }
  }
  for (const auto& s : starts) points.push_back(parse_real_list(s, file.chart.dim()));
  if (points.empty()) throw ParseError("no start points given (use --start or --samples)");

  IntegrateOptions opts;
  opts.step = step;
  opts.tol = tol;
  opts.bounds = bounds;
  opts.rescale = rescale;

  Json j;
  j["field"] = field;
  j["lambda_target"] = lambda_target;
  Json rows = Json::array();
  bool any_exit = false;
  for (const auto& pt : points) {
    DeformPoint start{0.0, pt};
    auto res = integrate_tube(tf, start, lambda_target, opts);
    Json row;
    row["start"] = double_vec_json(pt);
    row["endpoint"] = double_vec_json(res.endpoint.coords);
    row["manifold_point"] = double_vec_json(res.manifold_point);
    row["self_check_error"] = res.self_check_error;
    row["self_check_ok"] = res.self_check_ok;
    row["domain_exit"] = res.domain_exit;
    row["step_underflow"] = res.step_underflow;
    any_exit = any_exit || res.domain_exit || res.step_underflow;
    rows.push_back(std::move(row));
  }
  j["endpoints"] = std::move(rows);
  emit(j);
  return any_exit ? 1 : 0;
}

int run_tube_verify(const std::string& path, const std::string& field, int samples, double tol) {
  ChartFile file = load_chart_file(path);
  VectorField e = resolve_field(file, field);
  TubeTolerances tolerances;
  tolerances.differential = tol;
  tolerances.scaling = tol;
  auto rep = verify_tube(file.chart, e, samples, tolerances);
  Json j;
  j["field"] = field;
  j["samples"] = samples;
  j["tolerance"] = tol;
  j["pass"] = rep.report.pass();
  j["differential_residual"] = rep.differential_residual;
  j["scaling_residual"] = rep.scaling_residual;
  j["brackets_exact"] = rep.brackets_exact;
  j["translation_identity_exact"] = rep.translation_identity_exact;
  j["violations"] = report_to_json(rep.report)["violations"];
  return require_pass(rep.report, std::move(j));
}

int run_tg_compose(const std::string& path, const std::string& level, const std::string& left,
                   const std::string& right, const std::string& point) {
  ChartFile file = load_chart_file(path);
  TangentGroupoid tg(file.chart);
  Rat lam = parse_rat(level);
  TGElement g = TGElement::fiber({}, {});
  TGElement h = g;
  if (lam == 0) {
    if (point.empty()) throw ParseError("zero-level composition needs --point");
    RatVec m = parse_rat_list(point, file.chart.dim());
    g = TGElement::fiber(m, parse_rat_list(left, file.chart.dim()));
    h = TGElement::fiber(m, parse_rat_list(right, file.chart.dim()));
  } else {
    auto parse_arrow = [&](const std::string& s) {
      auto sep = s.find(';');
      if (sep == std::string::npos) throw ParseError("arrows are written \"p1,..,pn;q1,..,qn\"");
      return TGElement::arrow(lam, parse_rat_list(s.substr(0, sep), file.chart.dim()),
                              parse_rat_list(s.substr(sep + 1), file.chart.dim()));
    };
    g = parse_arrow(left);
    h = parse_arrow(right);
  }
  TGElement composed = tg.compose(g, h);
  Json j;
  j["left"] = element_json(g);
  j["right"] = element_json(h);
  j["result"] = element_json(composed);
  emit(j);
  return 0;
}

int run_tg_converge(const std::string& path, const std::string& point, const std::string& xi,
                    const std::string& eta, const std::string& lambdas, double bounds) {
  ChartFile file = load_chart_file(path);
  log_info("building the doubled chart and fiber transport");
  TangentGroupoid tg(file.chart);
  int n = file.chart.dim();
  RatVec m = point.empty() ? RatVec(n, Rat(0)) : parse_rat_list(point, n);
  GroupElement x = parse_rat_list(xi, n);
  GroupElement y = parse_rat_list(eta, n);
  std::vector<Rat> seq = lambdas.empty() ? default_lambda_sequence() : parse_rat_list(lambdas);
  auto rep = tg.convergence_test(m, x, y, seq, bounds);

  Json j;
  j["point"] = rat_vec_json(m);
  j["xi"] = rat_vec_json(x);
  j["eta"] = rat_vec_json(y);
  Json table = Json::array();
  for (const auto& cp : rep.points) {
    Json row;
    row["lambda"] = format_rat(cp.lambda);
    row["error"] = cp.error;
    row["error_exact"] = format_rat(cp.error_exact);
    row["domain_exit"] = cp.domain_exit;
    table.push_back(std::move(row));
  }
  j["table"] = std::move(table);
  j["exact_zero"] = rep.exact_zero;
  if (rep.fitted_order)
    j["fitted_order"] = *rep.fitted_order;
  else
    j["fitted_order"] = nullptr;
  emit(j);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carnotkit: computations on polynomial charts of filtered manifolds"};
  app.require_subcommand(1);
  app.fallthrough();
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress logs on standard error");

  std::string chart_path, point, coords_file, field = "model", level, left, right;
  std::string xi, eta, lambdas, samples_file;
  std::vector<std::string> starts;
  int cap = 0, samples = 20;
  double lambda_target = 1.0, step = 1e-3, tol = 1e-6, tube_tol = 1e-9, bounds = 1e6;
  double rescale_value = 0.0;
  bool have_rescale = false;

  auto* validate = app.add_subcommand("validate", "check the Lie filtration axioms of a chart");
  validate->add_option("chart", chart_path)->required();

  auto* osculate = app.add_subcommand("osculate", "structure constants of the osculating algebra");
  osculate->add_option("chart", chart_path)->required();
  osculate->add_option("--point", point, "rational point, comma separated");

  auto* privileged = app.add_subcommand("privileged", "privileged coordinates at a point");
  privileged->add_option("chart", chart_path)->required();
  privileged->add_option("--point", point);

  auto* carnot = app.add_subcommand("carnot-check", "test coordinates for the Carnot property");
  carnot->add_option("chart", chart_path)->required();
  carnot->add_option("--point", point);
  carnot->add_option("--coords-file", coords_file, "JSON array of coordinate polynomials");

  auto* euler = app.add_subcommand("euler-check", "test a field for the Euler-like property");
  euler->add_option("chart", chart_path)->required();
  euler->add_option("--field", field, "named field from the chart file, or \"model\"");
  euler->add_option("--cap", cap, "top weight to test (default: the step)");

  auto* tube = app.add_subcommand("tube", "integrate the tubular flow from zero-fiber points");
  tube->add_option("chart", chart_path)->required();
  tube->add_option("--field", field);
  tube->add_option("--start", starts, "fiber coordinates, comma separated (repeatable)");
  tube->add_option("--samples", samples_file, "JSON file with an array of coordinate arrays");
  tube->add_option("--lambda-target", lambda_target);
  tube->add_option("--step", step);
  tube->add_option("--tol", tube_tol);
  tube->add_option("--bounds", bounds);
  tube->add_option("--rescale", rescale_value)->each([&](const std::string&) { have_rescale = true; });

  auto* tverify = app.add_subcommand("tube-verify", "verify the tubular map properties");
  tverify->add_option("chart", chart_path)->required();
  tverify->add_option("--field", field);
  tverify->add_option("--samples", samples, "number of scaling-relation samples");
  tverify->add_option("--tol", tol);

  auto* compose = app.add_subcommand("tg-compose", "compose two tangent-groupoid elements");
  compose->add_option("chart", chart_path)->required();
  compose->add_option("--level", level)->required();
  compose->add_option("--left", left)->required();
  compose->add_option("--right", right)->required();
  compose->add_option("--point", point);

  auto* converge = app.add_subcommand("tg-converge", "zoomed pair composition against the group law");
  converge->add_option("chart", chart_path)->required();
  converge->add_option("--point", point);
  converge->add_option("--xi", xi)->required();
  converge->add_option("--eta", eta)->required();
  converge->add_option("--lambdas", lambdas, "rational levels, comma separated");
  converge->add_option("--bounds", bounds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_log_quiet(quiet);

  try {
    if (validate->parsed()) return run_validate(chart_path);
    if (osculate->parsed()) return run_osculate(chart_path, point);
    if (privileged->parsed()) return run_privileged(chart_path, point);
    if (carnot->parsed()) return run_carnot(chart_path, point, coords_file);
    if (euler->parsed()) return run_euler_check(chart_path, field, cap);
    if (tube->parsed())
      return run_tube(chart_path, field, starts, samples_file, lambda_target, step, tube_tol, bounds,
                      have_rescale ? std::optional<double>(rescale_value) : std::nullopt);
    if (tverify->parsed()) return run_tube_verify(chart_path, field, samples, tol);
    if (compose->parsed()) return run_tg_compose(chart_path, level, left, right, point);
    if (converge->parsed()) return run_tg_converge(chart_path, point, xi, eta, lambdas, bounds);
  } catch (const ParseError& e) {
    Json j;
    j["error"] = e.what();
    emit(j);
    log_error(e.what());
    return 2;
  } catch (const Error& e) {
    Json j;
    j["error"] = e.what();
    emit(j);
    log_error(e.what());
    return 1;
  }
  return 2;
}
