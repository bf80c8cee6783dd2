#include "impdiff_cli/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

#include "impdiff/errors.hpp"
#include "impdiff/registry/methods.hpp"

namespace impdiff::cli {
namespace {

using registry::Method;
using registry::ProblemSpec;
using json = nlohmann::ordered_json;

struct Resolved {
  ProblemSpec spec;
  std::vector<double> x;
  std::vector<double> alpha;
};

ProblemSpec lookup_or_usage(const std::string& name, const registry::Overrides& overrides) {
  try {
    return registry::lookup(name, overrides);
  } catch (const NotFoundError& e) {
    throw UsageError(e.what());
  } catch (const StructuralError& e) {
    throw UsageError(e.what());
  }
}

Method method_or_usage(const std::string& name, registry::ProblemKind kind) {
  const auto m = registry::parse_method(name);
  if (!m) {
    throw UsageError("unknown method '" + name +
                     "'; expected trace, ift-forward, ift-reverse, adjoint, forward-sens or fd");
  }
  if (!registry::is_available(kind, *m)) {
    std::string avail;
    for (Method a : registry::available_methods(kind)) {
      if (!avail.empty()) avail += ", ";
      avail += registry::to_string(a);
    }
    throw UsageError("method '" + name + "' is not available for " +
                     std::string(registry::to_string(kind)) + " problems (available: " + avail +
                     ")");
  }
  return *m;
}

Resolved resolve(const Selection& sel) {
  Resolved r{lookup_or_usage(sel.problem, sel.overrides), {}, {}};
  r.x = sel.x.value_or(r.spec.default_x);
  if (r.x.size() != r.spec.dims.input) {
    throw UsageError(sel.problem + " takes " + std::to_string(r.spec.dims.input) +
                     " input(s) in --x, got " + std::to_string(r.x.size()));
  }
  const std::size_t n = r.spec.dims.output;
  if (sel.alpha) {
    if (sel.random_alpha) throw UsageError("--alpha and --random-alpha are exclusive");
    if (sel.alpha->size() != n) {
      throw UsageError(sel.problem + " needs " + std::to_string(n) + " component(s) in --alpha");
    }
    r.alpha = *sel.alpha;
  } else if (sel.random_alpha) {
    r.alpha = seeded_directions(sel.seed, n);
  } else {
    r.alpha.assign(n, 1.0);
  }
  return r;
}

RunReport run_method(const Resolved& r, Method method, const registry::SolveOptions& opts) {
  RunReport rep;
  rep.problem = r.spec.name;
  rep.method = std::string(registry::to_string(method));
  rep.x = r.x;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto g = registry::gradient(r.spec, method, r.x, r.alpha, opts);
    rep.gradient = std::move(g.gradient);
    rep.value = std::move(g.value);
    rep.solver_iterations = g.iterations;
    if (g.warning) {
      rep.status = Status::warning;
      rep.message = *g.warning;
    }
  } catch (const Error& e) {
    rep.status = Status::error;
    rep.message = e.what();
  }
  rep.wall_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return rep;
}

std::string join(const std::vector<double>& v, const char* sep = ", ") {
  std::ostringstream os;
  os << std::setprecision(12);
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? sep : "") << v[i];
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << v;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

constexpr const char* kReportCsvHeader =
    "problem,method,x,value,gradient,fd_gradient,max_rel_err,solver_iterations,wall_time_ns,"
    "status,message";

void write_csv_row(std::ostream& out, const RunReport& r) {
  std::ostringstream err;
  if (r.max_rel_err) err << std::setprecision(17) << *r.max_rel_err;
  out << csv_field(r.problem) << ',' << csv_field(r.method) << ',' << join(r.x, ";") << ','
      << join(r.value, ";") << ',' << join(r.gradient, ";") << ','
      << (r.fd_gradient ? join(*r.fd_gradient, ";") : "") << ',' << err.str() << ','
      << r.solver_iterations << ',' << r.wall_time_ns << ',' << to_string(r.status) << ','
      << csv_field(r.message) << '\n';
}

void write_table(std::ostream& out, const RunReport& r, std::optional<double> tol) {
  auto row = [&out](const char* key, const std::string& v) {
    out << std::left << std::setw(19) << key << v << '\n';
  };
  row("problem", r.problem);
  row("method", r.method);
  row("x", join(r.x));
  row("value", join(r.value));
  row("gradient", join(r.gradient));
  if (r.fd_gradient) row("fd_gradient", join(*r.fd_gradient));
  if (r.max_rel_err) {
    row("max_rel_err", sci(*r.max_rel_err) + (tol ? "  (tol " + sci(*tol) + ")" : ""));
  }
  row("solver_iterations", std::to_string(r.solver_iterations));
  row("wall_time_ns", std::to_string(r.wall_time_ns));
  row("status", std::string(to_string(r.status)) + (r.message.empty() ? "" : ": " + r.message));
}

std::int64_t median(std::vector<std::int64_t> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

}  // namespace

std::vector<double> seeded_directions(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(n);
  for (double& e : v) e = 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0;
  return v;
}

RunReport run_gradcheck(const GradcheckOptions& opts) {
  const Resolved r = resolve(opts.selection);
  const Method method = method_or_usage(opts.method, r.spec.kind);
  registry::SolveOptions solve_opts;
  if (opts.h) {
    if (!(*opts.h > 0.0)) throw UsageError("--h must be positive");
    solve_opts.fd_step = *opts.h;
  }
  RunReport rep = run_method(r, method, solve_opts);
  if (rep.status == Status::error) return rep;
  try {
    auto fd = registry::gradient(r.spec, Method::fd, r.x, r.alpha, solve_opts).gradient;
    rep.max_rel_err = registry::relative_deviation(rep.gradient, fd);
    rep.fd_gradient = std::move(fd);
  } catch (const Error& e) {
    rep.status = Status::error;
    rep.message = std::string("finite-difference oracle failed: ") + e.what();
  }
  return rep;
}

CompareResult run_compare(const CompareOptions& opts) {
  if (opts.methods.size() < 2) throw UsageError("compare needs at least two methods");
  const Resolved r = resolve(opts.selection);
  std::vector<Method> methods;
  for (const auto& name : opts.methods) methods.push_back(method_or_usage(name, r.spec.kind));

  CompareResult res;
  for (Method m : methods) res.reports.push_back(run_method(r, m, {}));
  const std::size_t n = methods.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  res.deviation.assign(n, std::vector<double>(n, 0.0));
  res.tolerance.assign(n, std::vector<double>(n, 0.0));
  res.pass = true;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      res.tolerance[a][b] =
          opts.tol.value_or(registry::agreement_tolerance(r.spec.kind, methods[a], methods[b]));
      const bool failed = res.reports[a].status == Status::error ||
                          res.reports[b].status == Status::error;
      res.deviation[a][b] =
          failed ? nan
                 : registry::relative_deviation(res.reports[a].gradient, res.reports[b].gradient);
      if (!(res.deviation[a][b] <= res.tolerance[a][b])) res.pass = false;
    }
  }
  if (r.spec.kind == registry::ProblemKind::difference) {
    try {
      res.bridge_gap = registry::difference_bridge_gap(r.spec, r.x, r.alpha);
      if (!(*res.bridge_gap <= kBridgeTolerance)) res.pass = false;
    } catch (const Error&) {
      res.bridge_gap = nan;
      res.pass = false;
    }
  }
  return res;
}

std::vector<BenchRow> run_bench(const BenchOptions& opts) {
  if (opts.methods.empty()) throw UsageError("bench needs at least one method");
  if (opts.input_dims.empty()) throw UsageError("bench needs at least one --input-dim");
  if (opts.reps == 0) throw UsageError("--reps must be at least 1");
  const auto info = registry::enumerate();
  const auto it = std::find_if(info.begin(), info.end(),
                               [&](const registry::ProblemInfo& p) { return p.name == opts.problem; });
  if (it == info.end()) {
    lookup_or_usage(opts.problem, {});  // throws with the list of names
    throw UsageError("unknown problem " + opts.problem);
  }
  const auto& keys = it->override_keys;
  if (std::find(keys.begin(), keys.end(), "input_dim") == keys.end()) {
    throw UsageError(opts.problem + " does not support dimension overrides; try ode-linear-nd");
  }
  std::vector<std::size_t> dims = opts.input_dims;
  std::sort(dims.begin(), dims.end());
  dims.erase(std::unique(dims.begin(), dims.end()), dims.end());

  std::vector<BenchRow> rows;
  for (const auto& name : opts.methods) {
    const Method method = method_or_usage(name, it->kind);
    const std::size_t first = rows.size();
    for (std::size_t in : dims) {
      registry::Overrides o;
      o.state_dim = opts.state_dim;
      o.input_dim = in;
      const ProblemSpec spec = lookup_or_usage(opts.problem, o);
      const auto alpha = seeded_directions(opts.seed, spec.dims.output);
      std::vector<std::int64_t> times;
      for (std::size_t rep = 0; rep < opts.reps; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        registry::gradient(spec, method, spec.default_x, alpha);
        times.push_back(std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count());
      }
      rows.push_back({name, in, median(times), 0.0});
    }
    const double lo = static_cast<double>(std::max<std::int64_t>(rows[first].median_ns, 1));
    const double ratio = static_cast<double>(rows.back().median_ns) / lo;
    for (std::size_t k = first; k < rows.size(); ++k) rows[k].growth_ratio = ratio;
  }
  return rows;
}

int cmd_list(const ListOptions& opts, std::ostream& out, std::ostream& err) {
  std::optional<registry::ProblemKind> kind;
  if (opts.kind) {
    kind = registry::parse_kind(*opts.kind);
    if (!kind) {
      err << "error: unknown kind '" << *opts.kind
          << "'; expected algebraic, difference, optimization, constrained_optimization, ode "
             "or dae\n";
      return exit_usage;
    }
  }
  std::vector<registry::ProblemInfo> rows;
  for (auto& p : registry::enumerate()) {
    if (!kind || p.kind == *kind) rows.push_back(std::move(p));
  }
  switch (opts.format) {
    case Format::json: {
      json arr = json::array();
      for (const auto& p : rows) {
        arr.push_back({{"name", p.name},
                       {"kind", std::string(registry::to_string(p.kind))},
                       {"description", p.description},
                       {"overrides", p.override_keys}});
      }
      out << arr.dump(2) << '\n';
      break;
    }
    case Format::csv:
      out << "name,kind,description\n";
      for (const auto& p : rows) {
        out << p.name << ',' << registry::to_string(p.kind) << ',' << csv_field(p.description)
            << '\n';
      }
      break;
    case Format::table:
      for (const auto& p : rows) {
        out << std::left << std::setw(22) << p.name << std::setw(26) << registry::to_string(p.kind)
            << p.description << '\n';
      }
      break;
  }
  return exit_pass;
}

int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err) {
  RunReport rep;
  double tol = 0.0;
  try {
    rep = run_gradcheck(opts);
    tol = opts.tol.value_or(
        registry::gradcheck_tolerance(registry::lookup(rep.problem, opts.selection.overrides).kind));
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  int code = exit_pass;
  if (rep.status == Status::error) {
    code = exit_solver_failure;
  } else if (!(*rep.max_rel_err <= tol)) {
    code = exit_numeric_failure;
    rep.status = Status::error;
    rep.message = "max_rel_err " + sci(*rep.max_rel_err) + " exceeds tolerance " + sci(tol);
  }
  switch (opts.format) {
    case Format::json: out << to_json(rep).dump(2) << '\n'; break;
    case Format::csv: out << kReportCsvHeader << '\n'; write_csv_row(out, rep); break;
    case Format::table: write_table(out, rep, tol); break;
  }
  return code;
}

int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err) {
  CompareResult res;
  try {
    res = run_compare(opts);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  }
  const bool any_error = std::any_of(res.reports.begin(), res.reports.end(),
                                     [](const RunReport& r) { return r.status == Status::error; });
  const int code = any_error ? exit_solver_failure : res.pass ? exit_pass : exit_numeric_failure;
  std::vector<std::string> names;
  for (const auto& r : res.reports) names.push_back(r.method);

  switch (opts.format) {
    case Format::json: {
      json j;
      j["problem"] = opts.selection.problem;
      j["reports"] = json::array();
      for (const auto& r : res.reports) j["reports"].push_back(to_json(r));
      j["methods"] = names;
      j["deviation"] = res.deviation;  // NaN serializes as null
      j["tolerance"] = res.tolerance;
      if (res.bridge_gap) {
        j["bridge"] = {{"max_gap", *res.bridge_gap},
                       {"tolerance", kBridgeTolerance},
                       {"pass", *res.bridge_gap <= kBridgeTolerance}};
      } else {
        j["bridge"] = nullptr;
      }
      j["pass"] = res.pass && !any_error;
      out << j.dump(2) << '\n';
      break;
    }
    case Format::csv:
      out << "method_a,method_b,deviation,tolerance,pass\n";
      for (std::size_t a = 0; a < names.size(); ++a) {
        for (std::size_t b = a + 1; b < names.size(); ++b) {
          out << names[a] << ',' << names[b] << ',' << std::setprecision(17) << res.deviation[a][b]
              << ',' << res.tolerance[a][b] << ','
              << (res.deviation[a][b] <= res.tolerance[a][b] ? "true" : "false") << '\n';
        }
      }
      break;
    case Format::table: {
      for (const auto& r : res.reports) {
        out << std::left << std::setw(14) << r.method << join(r.gradient) << "  ["
            << to_string(r.status) << (r.message.empty() ? "" : ": " + r.message) << "]\n";
      }
      out << "\npairwise max relative deviation (tolerance)\n";
      for (std::size_t a = 0; a < names.size(); ++a) {
        for (std::size_t b = a + 1; b < names.size(); ++b) {
          const bool ok = res.deviation[a][b] <= res.tolerance[a][b];
          out << "  " << std::left << std::setw(30) << (names[a] + " vs " + names[b])
              << sci(res.deviation[a][b]) << "  (" << sci(res.tolerance[a][b]) << ")  "
              << (ok ? "ok" : "FAIL") << '\n';
        }
      }
      if (res.bridge_gap) {
        out << "  " << std::left << std::setw(30) << "gamma = alpha - lambda" << sci(*res.bridge_gap)
            << "  (" << sci(kBridgeTolerance) << ")  "
            << (*res.bridge_gap <= kBridgeTolerance ? "ok" : "FAIL") << '\n';
      }
      out << (code == exit_pass ? "pass" : "fail") << '\n';
      break;
    }
  }
  return code;
}

int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err) {
  std::vector<BenchRow> rows;
  try {
    rows = run_bench(opts);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const Error& e) {
    err << "error: solver failure during bench: " << e.what() << '\n';
    return exit_solver_failure;
  }
  switch (opts.format) {
    case Format::json: {
      json arr = json::array();
      for (const auto& r : rows) {
        arr.push_back({{"method", r.method},
                       {"input_dim", r.input_dim},
                       {"median_ns", r.median_ns},
                       {"growth_ratio", r.growth_ratio}});
      }
      json j;
      j["problem"] = opts.problem;
      j["state_dim"] = opts.state_dim ? json(*opts.state_dim) : json(nullptr);
      j["reps"] = opts.reps;
      j["rows"] = arr;
      out << j.dump(2) << '\n';
      break;
    }
    case Format::csv:
      out << "method,input_dim,median_ns,growth_ratio\n";
      for (const auto& r : rows) {
        out << r.method << ',' << r.input_dim << ',' << r.median_ns << ',' << std::setprecision(6)
            << r.growth_ratio << '\n';
      }
      break;
    case Format::table:
      out << std::left << std::setw(14) << "method" << std::right << std::setw(10) << "input_dim"
          << std::setw(16) << "median_ns" << std::setw(14) << "growth_ratio" << '\n';
      for (const auto& r : rows) {
        out << std::left << std::setw(14) << r.method << std::right << std::setw(10) << r.input_dim
            << std::setw(16) << r.median_ns << std::setw(14) << std::fixed << std::setprecision(2)
            << r.growth_ratio << std::defaultfloat << '\n';
      }
      break;
  }
  return exit_pass;
}

}  // namespace impdiff::cli
