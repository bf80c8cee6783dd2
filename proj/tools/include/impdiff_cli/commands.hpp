#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "impdiff/registry/registry.hpp"
#include "impdiff_cli/report.hpp"

namespace impdiff::cli {

/// Bad flags, unknown problems or methods, a method unavailable for the
/// problem kind. Maps to exit_usage.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Format { table, json, csv };

/// Problem, point, and cotangent selection shared by gradcheck and compare.
struct Selection {
  std::string problem;
  std::optional<std::vector<double>> x;  ///< default_x when absent
  registry::Overrides overrides;
  std::optional<std::vector<double>> alpha;  ///< all ones when absent
  bool random_alpha = false;                 ///< draw α from `seed` instead
  std::uint64_t seed = 0;
};

/// α drawn from std::mt19937_64 seeded with `seed`: each component is
/// 2·u - 1 with u = (draw >> 11)·2⁻⁵³, so the values are identical on every
/// platform.
std::vector<double> seeded_directions(std::uint64_t seed, std::size_t n);

struct ListOptions {
  std::optional<std::string> kind;
  Format format = Format::table;
};

struct GradcheckOptions {
  Selection selection;
  std::string method;
  std::optional<double> h;    ///< FD step, relative; default 1e-6
  std::optional<double> tol;  ///< default per problem kind
  Format format = Format::table;
};

struct CompareOptions {
  Selection selection;
  std::vector<std::string> methods;
  std::optional<double> tol;  ///< overrides every pairwise tolerance
  Format format = Format::table;
};

struct CompareResult {
  std::vector<RunReport> reports;
  std::vector<std::vector<double>> deviation;  ///< NaN where a method failed
  std::vector<std::vector<double>> tolerance;
  std::optional<double> bridge_gap;  ///< difference problems: max |γ_i - (α - λ_i)|
  bool pass = false;
};

struct BenchOptions {
  std::string problem;
  std::vector<std::string> methods;
  std::optional<std::size_t> state_dim;
  std::vector<std::size_t> input_dims;
  std::size_t reps = 3;
  std::uint64_t seed = 0;
  Format format = Format::table;
};

struct BenchRow {
  std::string method;
  std::size_t input_dim = 0;
  std::int64_t median_ns = 0;
  /// median_ns(largest I) / median_ns(smallest I) for this method
  double growth_ratio = 0.0;
};

inline constexpr double kBridgeTolerance = 1e-12;

/// Throw UsageError on bad input; solver failures land in the report status.
RunReport run_gradcheck(const GradcheckOptions& opts);
CompareResult run_compare(const CompareOptions& opts);
std::vector<BenchRow> run_bench(const BenchOptions& opts);

/// Print in the requested format and return the exit code.
int cmd_list(const ListOptions& opts, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& opts, std::ostream& out, std::ostream& err);
int cmd_compare(const CompareOptions& opts, std::ostream& out, std::ostream& err);
int cmd_bench(const BenchOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace impdiff::cli
