#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace impdiff::cli {

enum class Status { ok, warning, error };

std::string_view to_string(Status s);
std::optional<Status> parse_status(std::string_view text);

/// Process exit codes. Stable contract.
enum ExitCode : int {
  exit_pass = 0,
  exit_numeric_failure = 1,
  exit_usage = 2,
  exit_solver_failure = 3,
};

struct RunReport {
  std::string problem;
  std::string method;
  std::vector<double> x;
  std::vector<double> value;
  std::vector<double> gradient;
  std::optional<std::vector<double>> fd_gradient;
  std::optional<double> max_rel_err;  ///< present iff fd_gradient is
  std::uint64_t solver_iterations = 0;
  std::int64_t wall_time_ns = 0;
  Status status = Status::ok;
  std::string message;

  bool operator==(const RunReport&) const = default;
};

/// Fixed key order; null for absent optionals.
nlohmann::ordered_json to_json(const RunReport& r);
/// Throws nlohmann::json exceptions on a schema mismatch.
RunReport report_from_json(const nlohmann::json& j);

}  // namespace impdiff::cli
