#include "impdiff_cli/report.hpp"

#include <stdexcept>

namespace impdiff::cli {

std::string_view to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::warning: return "warning";
    case Status::error: return "error";
  }
  return "error";
}

std::optional<Status> parse_status(std::string_view text) {
  for (Status s : {Status::ok, Status::warning, Status::error}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

nlohmann::ordered_json to_json(const RunReport& r) {
  nlohmann::ordered_json j;
  j["problem"] = r.problem;
  j["method"] = r.method;
  j["x"] = r.x;
  j["value"] = r.value;
  j["gradient"] = r.gradient;
  j["fd_gradient"] = r.fd_gradient ? nlohmann::ordered_json(*r.fd_gradient) : nullptr;
  j["max_rel_err"] = r.max_rel_err ? nlohmann::ordered_json(*r.max_rel_err) : nullptr;
  j["solver_iterations"] = r.solver_iterations;
  j["wall_time_ns"] = r.wall_time_ns;
  j["status"] = std::string(to_string(r.status));
  j["message"] = r.message;
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  RunReport r;
  j.at("problem").get_to(r.problem);
  j.at("method").get_to(r.method);
  j.at("x").get_to(r.x);
  j.at("value").get_to(r.value);
  j.at("gradient").get_to(r.gradient);
  if (!j.at("fd_gradient").is_null()) r.fd_gradient = j.at("fd_gradient").get<std::vector<double>>();
  if (!j.at("max_rel_err").is_null()) r.max_rel_err = j.at("max_rel_err").get<double>();
  j.at("solver_iterations").get_to(r.solver_iterations);
  j.at("wall_time_ns").get_to(r.wall_time_ns);
  const auto status = parse_status(j.at("status").get<std::string>());
  if (!status) throw std::invalid_argument("unknown status " + j.at("status").dump());
  r.status = *status;
  j.at("message").get_to(r.message);
  if (r.fd_gradient.has_value() != r.max_rel_err.has_value()) {
    throw std::invalid_argument("max_rel_err must be present exactly when fd_gradient is");
  }
  return r;
}

}  // namespace impdiff::cli
