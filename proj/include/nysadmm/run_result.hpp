#pragma once

#include <nysadmm/types.hpp>

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nysadmm::io {

/// Machine-readable record of one CLI solve. Serializes to a single JSON
/// document; non-finite numbers are written as null and read back as NaN.
struct RunResult {
  std::string problem;
  std::vector<double> solution;
  double objective = 0.0;
  std::optional<double> kkt;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::int64_t iterations = 0;
  bool converged = false;
  std::vector<std::int64_t> pcg_iterations;
  std::vector<double> primal_residual_history;
  std::vector<double> dual_residual_history;
  std::vector<double> subproblem_tol_history;
  std::int64_t total_matvecs = 0;
  std::int64_t sketch_matvecs = 0;
  std::int64_t sketch_size = 0;
  double empirical_condition_number = 1.0;
  std::optional<double> svm_bias;
  double wall_time_ms = 0.0;
  std::uint64_t seed = 0;
  std::string label_mapping = "none";
  nlohmann::json config = nlohmann::json::object();

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

nlohmann::json to_json(const RunResult& r);
RunResult run_result_from_json(const nlohmann::json& j);

}  // namespace nysadmm::io
