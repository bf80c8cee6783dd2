#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "impdiff_cli/commands.hpp"

namespace {

using impdiff::cli::Format;

void add_format(CLI::App* cmd, Format& format, bool with_csv = true) {
  std::map<std::string, Format> names{{"table", Format::table}, {"json", Format::json}};
  if (with_csv) names.emplace("csv", Format::csv);
  cmd->add_option("--format", format, "Output format")
      ->transform(CLI::CheckedTransformer(names, CLI::ignore_case));
}

void add_selection(CLI::App* cmd, impdiff::cli::Selection& sel) {
  cmd->add_option("--problem", sel.problem, "Registry problem name")->required();
  cmd->add_option("--x", sel.x, "Input point, comma-separated (default: the problem's)")
      ->delimiter(',');
  cmd->add_option("--alpha", sel.alpha, "Output cotangent, comma-separated (default: ones)")
      ->delimiter(',');
  cmd->add_flag("--random-alpha", sel.random_alpha, "Draw alpha from the seeded generator");
  cmd->add_option("--seed", sel.seed, "Seed for randomized directions (std::mt19937_64)");
  cmd->add_option("--steps", sel.overrides.steps, "Step-count override (difference problems)");
  cmd->add_option("--state-dim", sel.overrides.state_dim, "State dimension override");
  cmd->add_option("--input-dim", sel.overrides.input_dim, "Input dimension override");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Derivatives of implicit functions: gradient checks, method comparisons, benchmarks"};
  app.require_subcommand(1);

  impdiff::cli::ListOptions list;
  auto* list_cmd = app.add_subcommand("list", "List registry problems");
  list_cmd->add_option("--kind", list.kind,
                       "Only problems of this kind (algebraic, difference, optimization, "
                       "constrained_optimization, ode, dae)");
  add_format(list_cmd, list.format);

  impdiff::cli::GradcheckOptions grad;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check one method against finite differences");
  grad_cmd->set_help_flag("--help", "Print this help message and exit");  // frees --h
  add_selection(grad_cmd, grad.selection);
  grad_cmd->add_option("--method", grad.method,
                       "trace, ift-forward, ift-reverse, adjoint, forward-sens or fd")
      ->required();
  grad_cmd->add_option("--h", grad.h, "Relative finite-difference step (default 1e-6)");
  grad_cmd->add_option("--tol", grad.tol, "Pass threshold on max_rel_err");
  add_format(grad_cmd, grad.format);

  impdiff::cli::CompareOptions cmp;
  auto* cmp_cmd = app.add_subcommand("compare", "Pairwise agreement of two or more methods");
  add_selection(cmp_cmd, cmp.selection);
  cmp_cmd->add_option("--methods", cmp.methods, "Comma-separated method names")
      ->delimiter(',')
      ->required();
  cmp_cmd->add_option("--tol", cmp.tol, "Replace every pairwise tolerance");
  add_format(cmp_cmd, cmp.format);

  impdiff::cli::BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Median wall time per method and input dimension");
  bench_cmd->add_option("--problem", bench.problem, "Problem accepting dimension overrides")
      ->required();
  bench_cmd->add_option("--methods", bench.methods, "Comma-separated method names")
      ->delimiter(',')
      ->required();
  bench_cmd->add_option("--state-dim", bench.state_dim, "State dimension N");
  bench_cmd->add_option("--input-dim", bench.input_dims, "Comma-separated input dimensions")
      ->delimiter(',')
      ->required();
  bench_cmd->add_option("--reps", bench.reps, "Repetitions per cell; the median is reported");
  bench_cmd->add_option("--seed", bench.seed, "Seed for the output cotangent");
  add_format(bench_cmd, bench.format);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return impdiff::cli::exit_usage;
  }

  if (list_cmd->parsed()) return impdiff::cli::cmd_list(list, std::cout, std::cerr);
  if (grad_cmd->parsed()) return impdiff::cli::cmd_gradcheck(grad, std::cout, std::cerr);
  if (cmp_cmd->parsed()) return impdiff::cli::cmd_compare(cmp, std::cout, std::cerr);
  return impdiff::cli::cmd_bench(bench, std::cout, std::cerr);
}
