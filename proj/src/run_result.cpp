#include <nysadmm/run_result.hpp>

#include <cmath>
#include <limits>

namespace nysadmm::io {

namespace {

using nlohmann::json;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& vs) {
  json arr = json::array();
  for (double v : vs) arr.push_back(number(v));
  return arr;
}

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::vector<double> read_numbers(const json& j) {
  std::vector<double> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(read_number(v));
  return out;
}

std::optional<double> read_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

json to_json(const RunResult& r) {
  json j;
  j["problem"] = r.problem;
  j["solution"] = numbers(r.solution);
  j["objective"] = number(r.objective);
  j["kkt"] = r.kkt ? number(*r.kkt) : json(nullptr);
  j["primal_residual"] = number(r.primal_residual);
  j["dual_residual"] = number(r.dual_residual);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["pcg_iterations"] = r.pcg_iterations;
  j["primal_residual_history"] = numbers(r.primal_residual_history);
  j["dual_residual_history"] = numbers(r.dual_residual_history);
  j["subproblem_tol_history"] = numbers(r.subproblem_tol_history);
  j["total_matvecs"] = r.total_matvecs;
  j["sketch_matvecs"] = r.sketch_matvecs;
  j["sketch_size"] = r.sketch_size;
  j["empirical_condition_number"] = number(r.empirical_condition_number);
  j["svm_bias"] = r.svm_bias ? number(*r.svm_bias) : json(nullptr);
  j["wall_time_ms"] = number(r.wall_time_ms);
  j["seed"] = r.seed;
  j["label_mapping"] = r.label_mapping;
  j["config"] = r.config;
  return j;
}

RunResult run_result_from_json(const json& j) {
  RunResult r;
  r.problem = j.at("problem").get<std::string>();
  r.solution = read_numbers(j.at("solution"));
  r.objective = read_number(j.at("objective"));
  r.kkt = read_optional(j, "kkt");
  r.primal_residual = read_number(j.at("primal_residual"));
  r.dual_residual = read_number(j.at("dual_residual"));
  r.iterations = j.at("iterations").get<std::int64_t>();
  r.converged = j.at("converged").get<bool>();
  r.pcg_iterations = j.at("pcg_iterations").get<std::vector<std::int64_t>>();
  r.primal_residual_history = read_numbers(j.at("primal_residual_history"));
  r.dual_residual_history = read_numbers(j.at("dual_residual_history"));
  r.subproblem_tol_history = read_numbers(j.at("subproblem_tol_history"));
  r.total_matvecs = j.at("total_matvecs").get<std::int64_t>();
  r.sketch_matvecs = j.at("sketch_matvecs").get<std::int64_t>();
  r.sketch_size = j.at("sketch_size").get<std::int64_t>();
  r.empirical_condition_number = read_number(j.at("empirical_condition_number"));
  r.svm_bias = read_optional(j, "svm_bias");
  r.wall_time_ms = read_number(j.at("wall_time_ms"));
  r.seed = j.at("seed").get<std::uint64_t>();
  r.label_mapping = j.at("label_mapping").get<std::string>();
  r.config = j.at("config");
  return r;
}

}  // namespace nysadmm::io
