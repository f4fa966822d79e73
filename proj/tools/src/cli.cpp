#include "rdot_cli/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "rdot/blahut_arimoto.hpp"
#include "rdot/capacity_ot.hpp"
#include "rdot/exact_ot.hpp"
#include "rdot/fixtures.hpp"
#include "rdot/quantizer.hpp"
#include "rdot/sinkhorn.hpp"
#include "rdot/sinkhorn_rd.hpp"
#include "rdot_cli/problem.hpp"

#ifndef RDOT_VERSION
#define RDOT_VERSION "unknown"
#endif

namespace rdot::cli {

namespace {

using json = nlohmann::ordered_json;

const double kLn2 = std::log(2.0);

/// A failure that is not the caller's fault: the solver did not deliver.
struct SolverError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Output {
  std::string path;
  std::string format = "csv";
};

struct Input {
  std::string path;
  std::string fixture;
};

std::string num(double v) { return fmt::format("{}", v); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + '"';
}

std::string csv_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_field(fields[i]);
  }
  return line + "\r\n";
}

json header(const char* command) {
  return json{{"tool", "rdot"}, {"version", version()}, {"command", command}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void emit(const Output& o, const std::string& content, std::ostream& out) {
  if (o.path.empty() || o.path == "-") {
    out << content;
    return;
  }
  std::ofstream f(o.path, std::ios::binary);
  if (!f) throw std::invalid_argument("out: cannot write '" + o.path + "'");
  f << content;
}

Problem resolve(const Input& in) {
  if (!in.fixture.empty() && !in.path.empty()) {
    throw ProblemError("input: give either a problem file or --fixture");
  }
  if (!in.fixture.empty()) return load_fixture(in.fixture);
  if (in.path.empty()) {
    throw ProblemError("input: a problem file or --fixture is required");
  }
  return load_problem(in.path);
}

const SourceProblem& need_source(const Problem& p) {
  if (!p.source) throw ProblemError("kind: this command needs a source");
  return *p.source;
}

const ChannelProblem& need_channel(const Problem& p) {
  if (!p.channel) throw ProblemError("kind: this command needs a channel");
  return *p.channel;
}

std::vector<double> as_vector(std::span<const double> s) {
  return {s.begin(), s.end()};
}

// ---------------------------------------------------------------- rd

struct RdArgs {
  Input input;
  Output output;
  std::string method = "both";
  std::string lambdas = "0.01:100:20";
  double ba_tol = BaOptions{}.tol;
  double outer_tol = SinkhornRdOptions{}.outer_tol;
};

json rd_point_json(const RDPoint& p) {
  return json{{"lambda", p.lambda},
              {"rate_nats", p.rate_nats},
              {"rate_bits", p.rate_nats / kLn2},
              {"distortion", p.distortion},
              {"converged", p.converged}};
}

int cmd_rd(const RdArgs& a, std::ostream& out, std::ostream& err) {
  const Problem problem = resolve(a.input);
  const SourceProblem& sp = need_source(problem);
  const DistortionMatrix d = sp.distortion_matrix();
  auto lambdas = parse_grid(a.lambdas);
  std::sort(lambdas.begin(), lambdas.end());

  const bool use_ba = a.method != "sinkhorn";
  const bool use_srd = a.method != "ba";
  BaOptions ba_opts;
  ba_opts.tol = a.ba_tol;
  SinkhornRdOptions srd_opts;
  srd_opts.outer_tol = a.outer_tol;

  json ba_points = json::array();
  json srd_points = json::array();
  json deltas = json::array();
  std::string csv = csv_row({"lambda", "rate_nats", "rate_bits", "distortion",
                             "method", "converged"});
  auto row = [&](const RDPoint& p, const char* method) {
    csv += csv_row({num(p.lambda), num(p.rate_nats), num(p.rate_nats / kLn2),
                    num(p.distortion), method, p.converged ? "true" : "false"});
  };
  bool converged = true;
  double max_dr = 0.0;
  double max_dd = 0.0;
  for (double lambda : lambdas) {
    RDPoint bp;
    RDPoint sp_point;
    if (use_ba) {
      const BaRdResult r = ba_rd(sp.source, d, lambda, ba_opts);
      bp = r.point;
      json j = rd_point_json(bp);
      j["iterations"] = r.iterations;
      j["fixed_point_residual"] = r.fixed_point_residual;
      ba_points.push_back(std::move(j));
      row(bp, "ba");
      converged = converged && bp.converged;
    }
    if (use_srd) {
      const SinkhornRdResult r = sinkhorn_rd_point(sp.source, d, lambda, srd_opts);
      sp_point = r.point;
      json j = rd_point_json(sp_point);
      j["outer_iterations"] = r.outer_iterations;
      j["stop"] = to_string(r.stop);
      j["gradient_norm"] = r.outer_gradient_norm;
      srd_points.push_back(std::move(j));
      row(sp_point, "sinkhorn");
      converged = converged && sp_point.converged;
    }
    if (use_ba && use_srd) {
      const double dr = std::abs(bp.rate_nats - sp_point.rate_nats);
      const double dd = std::abs(bp.distortion - sp_point.distortion);
      max_dr = std::max(max_dr, dr);
      max_dd = std::max(max_dd, dd);
      deltas.push_back(json{{"lambda", lambda},
                            {"abs_delta_rate_nats", dr},
                            {"abs_delta_distortion", dd}});
      csv += csv_row({num(lambda), num(dr), num(dr / kLn2), num(dd),
                      "abs_diff", "true"});
    }
  }

  if (a.output.format == "json") {
    json j = header("rd");
    const SinkhornRdOptions& so = srd_opts;
    j["parameters"] = json{
        {"problem", describe(problem)},
        {"method", a.method},
        {"grid", a.lambdas},
        {"lambdas", lambdas},
        {"ba", {{"tol", ba_opts.tol}, {"max_iter", ba_opts.max_iter}}},
        {"sinkhorn",
         {{"outer_tol", so.outer_tol},
          {"outer_max_iter", so.outer_max_iter},
          {"relative_change_tol", so.relative_change_tol},
          {"inner_tol", so.inner.tol},
          {"inner_max_iter", so.inner.max_iter},
          {"newton", so.inner.newton},
          {"curvature", so.curvature}}}};
    json curves = json::object();
    if (use_ba) curves["ba"] = std::move(ba_points);
    if (use_srd) curves["sinkhorn"] = std::move(srd_points);
    j["curves"] = std::move(curves);
    if (use_ba && use_srd) {
      j["comparison"] = json{{"points", std::move(deltas)},
                             {"max_abs_delta_rate_nats", max_dr},
                             {"max_abs_delta_distortion", max_dd}};
    }
    j["converged"] = converged;
    emit(a.output, dump(j), out);
  } else {
    emit(a.output, csv, out);
  }
  if (use_ba && use_srd) {
    err << fmt::format("max |dR| = {:.3e} nats, max |dD| = {:.3e}\n", max_dr,
                       max_dd);
  }
  if (!converged) {
    err << "warning: some points did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------- quantize

struct QuantizeArgs {
  Input input;
  Output output;
  std::string levels = "1:8";
  std::string method = "all";
  int restarts = LloydOptions{}.restarts;
  std::uint64_t seed = LloydOptions{}.seed;
};

int cmd_quantize(const QuantizeArgs& a, std::ostream& out, std::ostream& err) {
  const Problem problem = resolve(a.input);
  const SourceProblem& sp = need_source(problem);
  if (!sp.source.has_atoms()) {
    throw ProblemError("atoms: quantization needs atom locations");
  }
  if (a.restarts < 1) throw ProblemError("restarts: must be >= 1");
  const auto levels = parse_levels(a.levels);
  LloydOptions opts;
  opts.restarts = a.restarts;
  opts.seed = a.seed;

  std::vector<std::string> methods;
  if (a.method == "all") {
    methods = {"lloyd", "emd", "exact"};
  } else {
    methods = {a.method};
  }

  std::string csv = csv_row({"levels", "method", "distortion"});
  json results = json::array();
  json agreement = json::array();
  bool converged = true;
  for (std::size_t m : levels) {
    std::map<std::string, double> by_method;
    for (const auto& method : methods) {
      Quantizer q = method == "lloyd" ? lloyd_max(sp.source, m, opts)
                    : method == "emd" ? extremal_emd_quantizer(sp.source, m, opts)
                                      : kmeans_1d_exact(sp.source, m);
      by_method[method] = q.distortion;
      converged = converged && q.converged;
      csv += csv_row({std::to_string(m), method, num(q.distortion)});
      results.push_back(json{{"levels", m},
                             {"method", method},
                             {"distortion", q.distortion},
                             {"codebook", q.codebook},
                             {"weights", as_vector(q.induced_q.weights())},
                             {"iterations", q.iterations},
                             {"converged", q.converged}});
    }
    if (methods.size() == 3) {
      agreement.push_back(
          json{{"levels", m},
               {"lloyd_minus_exact", by_method["lloyd"] - by_method["exact"]},
               {"emd_minus_exact", by_method["emd"] - by_method["exact"]}});
    }
  }

  if (a.output.format == "json") {
    json j = header("quantize");
    j["parameters"] = json{{"problem", describe(problem)},
                           {"levels", levels},
                           {"method", a.method},
                           {"restarts", a.restarts},
                           {"seed", a.seed},
                           {"tol", opts.tol},
                           {"max_iter", opts.max_iter}};
    j["results"] = std::move(results);
    if (methods.size() == 3) j["agreement"] = std::move(agreement);
    j["converged"] = converged;
    emit(a.output, dump(j), out);
  } else {
    emit(a.output, csv, out);
  }
  if (!converged) {
    err << "warning: some quantizers did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------- capacity

struct CapacityArgs {
  Input input;
  Output output;
  std::string method = "both";
};

int cmd_capacity(const CapacityArgs& a, std::ostream& out, std::ostream& err) {
  const Problem problem = resolve(a.input);
  const Matrix& channel = need_channel(problem).channel;
  const bool use_ba = a.method != "ot";
  const bool use_ot = a.method != "ba";

  std::string csv = csv_row({"method", "capacity_nats", "capacity_bits",
                             "converged", "experimental", "discrepancy_nats"});
  json results = json::object();
  const CapacityOptions ba_opts;
  const CapacityOtOptions ot_opts;
  bool converged = true;
  if (use_ba) {
    const CapacityResult r = ba_capacity(channel, ba_opts);
    converged = converged && r.converged;
    csv += csv_row({"ba", num(r.capacity_nats), num(r.capacity_nats / kLn2),
                    r.converged ? "true" : "false", "false", ""});
    results["ba"] = json{{"capacity_nats", r.capacity_nats},
                   {"capacity_bits", r.capacity_nats / kLn2},
                   {"input_dist", as_vector(r.input_dist.weights())},
                   {"iterations", r.iterations},
                   {"bound_gap", r.bound_gap},
                   {"converged", r.converged}};
  }
  if (use_ot) {
    const CapacityOtResult r = capacity_via_ot(channel, ot_opts);
    converged = converged && r.converged;
    csv += csv_row({"ot", num(r.value_nats), num(r.value_nats / kLn2),
                    r.converged ? "true" : "false", "true",
                    num(r.discrepancy)});
    results["ot"] = json{{"experimental", CapacityOtResult::experimental},
                   {"value_nats", r.value_nats},
                   {"value_bits", r.value_nats / kLn2},
                   {"input_dist", as_vector(r.input_dist.weights())},
                   {"output_dist", as_vector(r.output_dist.weights())},
                   {"ba_reference", r.ba_reference},
                   {"discrepancy", r.discrepancy},
                   {"iterations", r.iterations},
                   {"gradient_norm", r.gradient_norm},
                   {"converged", r.converged}};
    err << fmt::format(
        "experimental: 2*S_1/2 = {:.6f} nats vs Arimoto {:.6f} "
        "(discrepancy {:+.6f})\n",
        r.value_nats, r.ba_reference, r.discrepancy);
  }

  if (a.output.format == "json") {
    json params{{"problem", describe(problem)},
                {"method", a.method},
                {"ba", {{"tol", ba_opts.tol}, {"max_iter", ba_opts.max_iter}}}};
    if (use_ot) {
      params["ot"] = json{{"outer_tol", ot_opts.outer_tol},
                          {"outer_max_iter", ot_opts.outer_max_iter},
                          {"fd_step", ot_opts.fd_step},
                          {"inner_tol", ot_opts.inner.tol},
                          {"inner_max_iter", ot_opts.inner.max_iter}};
    }
    json report = header("capacity");
    report["parameters"] = std::move(params);
    if (use_ba) report["ba"] = std::move(results["ba"]);
    if (use_ot) report["ot"] = std::move(results["ot"]);
    report["converged"] = converged;
    emit(a.output, dump(report), out);
  } else {
    emit(a.output, csv, out);
  }
  if (!converged) {
    err << "warning: solver did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

// ---------------------------------------------------------------- ot

struct OtArgs {
  std::vector<std::string> inputs;
  Output output;
  std::string eps = "exact";
  std::string eps_sweep;
  std::string cost = "auto";
  double tol = SinkhornOptions{}.tol;
};

int cmd_ot(const OtArgs& a, std::ostream& out, std::ostream& err) {
  if (a.inputs.size() != 2) {
    throw ProblemError("input: ot needs two source files (mu, nu)");
  }
  const Problem pa = load_problem(a.inputs[0]);
  const Problem pb = load_problem(a.inputs[1]);
  const DiscreteDistribution& mu = need_source(pa).source;
  const DiscreteDistribution& nu = need_source(pb).source;

  std::string cost_kind = a.cost;
  if (cost_kind == "auto") {
    cost_kind = mu.has_atoms() && nu.has_atoms() ? "squared" : "hamming";
  }
  const DistortionMatrix d = [&] {
    if (cost_kind == "squared") {
      if (!mu.has_atoms() || !nu.has_atoms()) {
        throw ProblemError("atoms: squared cost needs atoms on both sides");
      }
      return squared_error_matrix(mu.atoms(), nu.atoms());
    }
    return hamming_matrix(mu.size(), nu.size());
  }();

  std::vector<double> eps_list;
  bool exact = false;
  if (!a.eps_sweep.empty()) {
    eps_list = parse_grid(a.eps_sweep);
    std::sort(eps_list.rbegin(), eps_list.rend());
  } else if (a.eps == "exact") {
    exact = true;
  } else {
    try {
      std::size_t used = 0;
      eps_list = {std::stod(a.eps, &used)};
      if (used != a.eps.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ProblemError("eps: expected a positive number or 'exact'");
    }
    if (!(eps_list[0] > 0.0)) throw ProblemError("eps: must be positive");
  }

  std::string csv = csv_row({"eps", "cost", "kl", "objective"});
  json results = json::array();
  json coupling;
  bool converged = true;
  auto matrix_json = [](const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  if (exact) {
    const EmdResult r = emd(mu, nu, d);
    const double kl = kl_to_product(r.coupling, mu.weights(), nu.weights());
    csv += csv_row({"0", num(r.cost), num(kl), num(r.cost)});
    results.push_back(json{{"eps", 0.0},
                           {"cost", r.cost},
                           {"kl", kl},
                           {"objective", r.cost},
                           {"dual_infeasibility", dual_infeasibility(r, d)},
                           {"slackness_violation", slackness_violation(r, d)},
                           {"converged", true}});
    coupling = matrix_json(r.coupling);
  } else {
    SinkhornOptions opts;
    opts.tol = a.tol;
    const auto sweep = sinkhorn_eps_sweep(mu, nu, d, eps_list, opts);
    for (const SinkhornResult& r : sweep) {
      converged = converged && r.converged;
      csv += csv_row({num(r.eps), num(r.transport_cost), num(r.kl_term),
                      num(r.objective)});
      results.push_back(json{{"eps", r.eps},
                             {"cost", r.transport_cost},
                             {"kl", r.kl_term},
                             {"objective", r.objective},
                             {"iterations", r.iterations},
                             {"marginal_error", r.marginal_error},
                             {"converged", r.converged}});
    }
    if (sweep.size() == 1) coupling = matrix_json(sweep[0].coupling.matrix());
  }

  if (a.output.format == "json") {
    json j = header("ot");
    j["parameters"] = json{{"mu", describe(pa)},
                           {"nu", describe(pb)},
                           {"cost", cost_kind},
                           {"eps", exact ? json("exact") : json(eps_list)},
                           {"tol", a.tol}};
    j["results"] = std::move(results);
    if (!coupling.is_null()) j["coupling"] = std::move(coupling);
    j["converged"] = converged;
    emit(a.output, dump(j), out);
  } else {
    emit(a.output, csv, out);
  }
  if (!converged) {
    err << "warning: Sinkhorn did not converge\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

void add_input(CLI::App* cmd, Input& in) {
  cmd->add_option("problem", in.path, "Problem file (JSON)");
  cmd->add_option("--fixture", in.fixture, "Built-in problem")
      ->check(CLI::IsMember(fixture_names()));
}

void add_output(CLI::App* cmd, Output& o) {
  cmd->add_option("-o,--out", o.path, "Output file (default: stdout)");
  cmd->add_option("-f,--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
}

}  // namespace

const char* version() { return RDOT_VERSION; }

std::vector<double> parse_grid(const std::string& text) {
  auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw ProblemError("grid: cannot parse '" + s + "' in '" + text + "'");
    }
  };
  std::vector<double> out;
  if (std::count(text.begin(), text.end(), ':') == 2) {
    const auto c1 = text.find(':');
    const auto c2 = text.find(':', c1 + 1);
    const double lo = number(text.substr(0, c1));
    const double hi = number(text.substr(c1 + 1, c2 - c1 - 1));
    const double count = number(text.substr(c2 + 1));
    if (count < 1 || count != std::floor(count) || !(lo > 0.0) || hi < lo) {
      throw ProblemError("grid: expected min:max:count with 0 < min <= max");
    }
    out = fixtures::log_spaced(lo, hi, static_cast<std::size_t>(count));
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(item));
  }
  if (out.empty()) throw ProblemError("grid: empty");
  for (double v : out) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ProblemError("grid: values must be positive and finite");
    }
  }
  return out;
}

std::vector<std::size_t> parse_levels(const std::string& text) {
  auto integer = [&](const std::string& s) -> std::size_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ProblemError("levels: expected M or lo:hi, got '" + text + "'");
    }
    const auto v = std::stoul(s);
    if (v < 1) throw ProblemError("levels: must be >= 1");
    return v;
  };
  const auto colon = text.find(':');
  if (colon == std::string::npos) return {integer(text)};
  const std::size_t lo = integer(text.substr(0, colon));
  const std::size_t hi = integer(text.substr(colon + 1));
  if (hi < lo) throw ProblemError("levels: hi < lo");
  std::vector<std::size_t> out;
  for (std::size_t m = lo; m <= hi; ++m) out.push_back(m);
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Rate-distortion, optimal transport and quantizer solvers",
               "rdot"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  RdArgs rd;
  auto* rd_cmd = app.add_subcommand("rd", "Rate-distortion curve");
  add_input(rd_cmd, rd.input);
  add_output(rd_cmd, rd.output);
  rd_cmd->add_option("-m,--method", rd.method)
      ->check(CLI::IsMember({"ba", "sinkhorn", "both"}))
      ->capture_default_str();
  rd_cmd->add_option("-l,--lambdas", rd.lambdas,
                     "min:max:count (log-spaced) or a comma list")
      ->capture_default_str();
  rd_cmd->add_option("--ba-tol", rd.ba_tol)->capture_default_str();
  rd_cmd->add_option("--outer-tol", rd.outer_tol)->capture_default_str();

  QuantizeArgs qa;
  auto* q_cmd = app.add_subcommand("quantize", "Scalar quantizer design");
  add_input(q_cmd, qa.input);
  add_output(q_cmd, qa.output);
  q_cmd->add_option("-M,--levels", qa.levels, "M or lo:hi")
      ->capture_default_str();
  q_cmd->add_option("-m,--method", qa.method)
      ->check(CLI::IsMember({"lloyd", "emd", "exact", "all"}))
      ->capture_default_str();
  q_cmd->add_option("-r,--restarts", qa.restarts)->capture_default_str();
  q_cmd->add_option("--seed", qa.seed)->capture_default_str();

  CapacityArgs ca;
  auto* c_cmd = app.add_subcommand("capacity", "Channel capacity");
  add_input(c_cmd, ca.input);
  add_output(c_cmd, ca.output);
  c_cmd->add_option("-m,--method", ca.method)
      ->check(CLI::IsMember({"ba", "ot", "both"}))
      ->capture_default_str();

  OtArgs oa;
  auto* o_cmd = app.add_subcommand("ot", "Optimal transport between sources");
  o_cmd->add_option("problems", oa.inputs, "Two source files: mu nu")
      ->expected(2);
  add_output(o_cmd, oa.output);
  o_cmd->add_option("-e,--eps", oa.eps, "Regularization, or 'exact'")
      ->capture_default_str();
  o_cmd->add_option("--eps-sweep", oa.eps_sweep,
                    "Sweep: comma list or min:max:count");
  o_cmd->add_option("--cost", oa.cost)
      ->check(CLI::IsMember({"auto", "squared", "hamming"}))
      ->capture_default_str();
  o_cmd->add_option("--tol", oa.tol)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  try {
    if (*rd_cmd) return cmd_rd(rd, out, err);
    if (*q_cmd) return cmd_quantize(qa, out, err);
    if (*c_cmd) return cmd_capacity(ca, out, err);
    if (*o_cmd) return cmd_ot(oa, out, err);
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    err << "solver error: " << e.what() << "\n";
    return kExitNotConverged;
  }
  return kExitInputError;
}

}  // namespace rdot::cli
