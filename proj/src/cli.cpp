#include <nysadmm/bench.hpp>
#include <nysadmm/cli.hpp>
#include <nysadmm/io.hpp>
#include <nysadmm/nysadmm.hpp>
#include <nysadmm/run_result.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

namespace nysadmm {

namespace {

using nlohmann::json;

struct Options {
  std::string data;
  std::string format;  // empty: infer from extension
  Index label_column = 0;
  Index n_features = 0;
  double gamma = 1.0;
  double ridge = 0.0;
  double rho = 1.0;
  Index sketch_size = 50;
  bool adaptive = false;
  double adaptive_tol = 10.0;
  double tol_abs = 1e-4;
  double tol_rel = 1e-3;
  Index max_iters = 500;
  std::uint64_t seed = 0;
  std::string output;
  Index random_features = 0;
  double bandwidth = 1.0;
  double svm_c = 1.0;
  std::string schedule = "geomean";
  double beta = 2.0;
  std::string stopping = "residual";
  Index refresh = -1;
  // bench
  Index dim = 200;
  double condition = 1e6;
  double pcg_tol = 1e-8;
};

class UsageError : public Error {
public:
  using Error::Error;
};

void add_shared(CLI::App& cmd, Options& o) {
  cmd.add_option("--data", o.data, "Dataset path")->check(CLI::ExistingFile);
  cmd.add_option("--format", o.format, "Dataset format (default: from extension)")
      ->check(CLI::IsMember({"libsvm", "csv"}));
  cmd.add_option("--label-column", o.label_column, "CSV label column (0-based)");
  cmd.add_option("--n-features", o.n_features, "LIBSVM feature count override");
  cmd.add_option("--rho", o.rho, "ADMM penalty rho")->check(CLI::PositiveNumber);
  cmd.add_option("--sketch-size", o.sketch_size, "Nystrom sketch size")->check(CLI::PositiveNumber);
  cmd.add_option("--seed", o.seed, "Random seed");
  cmd.add_option("--output", o.output, "Write the result as JSON to this path");
}

void add_solver(CLI::App& cmd, Options& o) {
  add_shared(cmd, o);
  cmd.add_option("--gamma", o.gamma, "l1 regularization weight")->check(CLI::NonNegativeNumber);
  cmd.add_flag("--adaptive", o.adaptive, "Grow the sketch adaptively");
  cmd.add_option("--adaptive-tol", o.adaptive_tol, "Empirical condition number target");
  cmd.add_option("--tol-abs", o.tol_abs, "Absolute ADMM tolerance")->check(CLI::PositiveNumber);
  cmd.add_option("--tol-rel", o.tol_rel, "Relative ADMM tolerance")->check(CLI::PositiveNumber);
  cmd.add_option("--max-iters", o.max_iters, "ADMM iteration limit")->check(CLI::PositiveNumber);
  cmd.add_option("--random-features", o.random_features, "Map features through N random Fourier features")
      ->check(CLI::PositiveNumber);
  cmd.add_option("--bandwidth", o.bandwidth, "RBF kernel bandwidth")->check(CLI::PositiveNumber);
  cmd.add_option("--svm-c", o.svm_c, "SVM box bound C")->check(CLI::PositiveNumber);
  cmd.add_option("--schedule", o.schedule, "Subproblem tolerance schedule")
      ->check(CLI::IsMember({"geomean", "power"}));
  cmd.add_option("--beta", o.beta, "Exponent of the power schedule")->check(CLI::PositiveNumber);
  cmd.add_option("--stopping", o.stopping, "Stopping rule")->check(CLI::IsMember({"residual", "relchange"}));
  cmd.add_option("--refresh", o.refresh, "Hessian refresh interval (0 = never)")
      ->check(CLI::NonNegativeNumber);
  cmd.add_option("--ridge", o.ridge, "Ridge weight (lasso becomes elastic net)")
      ->check(CLI::NonNegativeNumber);
}

bool given(const CLI::App& cmd, const char* flag) { return cmd.count(flag) > 0; }

void check_combinations(const CLI::App& cmd, const std::string& name, const Options& o) {
  if (name != "bench" && !given(cmd, "--data")) throw UsageError("--data is required");
  if (name == "bench") return;
  if (name != "svm" && given(cmd, "--svm-c")) throw UsageError("--svm-c only applies to svm");
  if (name != "lasso" && given(cmd, "--ridge")) throw UsageError("--ridge only applies to lasso");
  if (name == "svm" && given(cmd, "--gamma")) throw UsageError("--gamma does not apply to svm");
  if (name != "svm" && given(cmd, "--bandwidth") && !given(cmd, "--random-features"))
    throw UsageError("--bandwidth requires --random-features");
  if (given(cmd, "--adaptive-tol") && !given(cmd, "--adaptive"))
    throw UsageError("--adaptive-tol requires --adaptive");
  if (given(cmd, "--beta") && o.schedule != "power")
    throw UsageError("--beta requires --schedule power");
}

io::Dataset load(const Options& o) {
  std::string fmt = o.format;
  if (fmt.empty()) fmt = std::filesystem::path(o.data).extension() == ".csv" ? "csv" : "libsvm";
  if (fmt == "csv") return io::read_csv(o.data, o.label_column);
  return io::read_libsvm(o.data, o.n_features > 0 ? std::optional<Index>(o.n_features) : std::nullopt);
}

bool labels_in(const VectorXd& b, double lo, double hi) {
  return ((b.array() == lo) || (b.array() == hi)).all();
}

AdmmConfig<double> admm_config(const Options& o) {
  AdmmConfig<double> cfg;
  cfg.rho = o.rho;
  cfg.eps_abs = o.tol_abs;
  cfg.eps_rel = o.tol_rel;
  cfg.max_admm_iters = o.max_iters;
  cfg.sketch_size = o.sketch_size;
  cfg.adaptive = o.adaptive;
  cfg.adaptive_tol = o.adaptive_tol;
  cfg.seed = o.seed;
  if (o.refresh >= 0) cfg.hessian_refresh_interval = o.refresh;
  cfg.schedule.kind = o.schedule == "power" ? ScheduleKind::power_decay : ScheduleKind::geometric_mean;
  cfg.schedule.beta = o.beta;
  cfg.stopping = o.stopping == "relchange" ? StoppingMode::relative_change : StoppingMode::residual;
  return cfg;
}

json config_echo(const Options& o, const std::string& name) {
  json c;
  c["command"] = name;
  c["data"] = o.data;
  c["rho"] = o.rho;
  c["sketch_size"] = o.sketch_size;
  c["adaptive"] = o.adaptive;
  c["adaptive_tol"] = o.adaptive_tol;
  c["tol_abs"] = o.tol_abs;
  c["tol_rel"] = o.tol_rel;
  c["max_iters"] = o.max_iters;
  c["schedule"] = o.schedule;
  c["beta"] = o.beta;
  c["stopping"] = o.stopping;
  c["random_features"] = o.random_features;
  c["bandwidth"] = o.bandwidth;
  if (name == "svm")
    c["svm_c"] = o.svm_c;
  else
    c["gamma"] = o.gamma;
  if (name == "lasso") c["ridge"] = o.ridge;
  return c;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

int run_solver(const Options& o, const std::string& name) {
  io::Dataset data = load(o);
  MatrixXd a = std::move(data.features);
  VectorXd b = std::move(data.labels);
  const KernelConfig<double> kernel{KernelKind::rbf, o.bandwidth};
  if (o.random_features > 0) a = random_features<double>(a, o.random_features, kernel, o.seed);

  io::RunResult result;
  result.problem = name;
  result.seed = o.seed;
  result.config = config_echo(o, name);
  const AdmmConfig<double> cfg = admm_config(o);

  SolveReport<double> rep;
  if (name == "lasso") {
    rep = solve(elastic_net_spec(ElasticNetProblem<double>{a, b, o.gamma, o.ridge}), cfg);
  } else if (name == "logistic") {
    if (labels_in(b, -1.0, 1.0) && !labels_in(b, 0.0, 1.0)) {
      b = (b.array() + 1.0) / 2.0;
      result.label_mapping = "pm1_to_01";
    } else if (!labels_in(b, 0.0, 1.0)) {
      throw ValidationError("logistic labels must be in {0,1} or {-1,+1}");
    }
    rep = solve(logistic_spec(LogisticProblem<double>{a, b, o.gamma}), cfg);
  } else {
    if (labels_in(b, 0.0, 1.0) && !labels_in(b, -1.0, 1.0)) {
      b = 2.0 * b.array() - 1.0;
      result.label_mapping = "01_to_pm1";
    } else if (!labels_in(b, -1.0, 1.0)) {
      throw ValidationError("svm labels must be in {-1,+1} or {0,1}");
    }
    const MatrixXd k = o.random_features > 0 ? MatrixXd(a * a.transpose()) : kernel_matrix<double>(a, kernel);
    rep = solve(svm_spec(SvmProblem<double>{k, b, o.svm_c}), cfg);
    result.svm_bias = svm_bias<double>(k, b, rep.solution, o.svm_c);
  }

  result.solution.assign(rep.solution.data(), rep.solution.data() + rep.solution.size());
  result.objective = rep.objective;
  result.kkt = rep.kkt;
  result.primal_residual = rep.primal_residual;
  result.dual_residual = rep.dual_residual;
  result.iterations = rep.iterations;
  result.converged = rep.converged;
  result.pcg_iterations.assign(rep.state.pcg_iteration_counts.begin(), rep.state.pcg_iteration_counts.end());
  result.primal_residual_history = rep.state.primal_residual_history;
  result.dual_residual_history = rep.state.dual_residual_history;
  result.subproblem_tol_history = rep.state.subproblem_tol_history;
  result.total_matvecs = rep.total_matvecs;
  result.sketch_matvecs = rep.sketch_matvecs;
  result.sketch_size = rep.sketch_size_used;
  result.empirical_condition_number = rep.empirical_condition_number;
  result.wall_time_ms = rep.wall_time_ms;

  std::cout << name << ": " << (rep.converged ? "converged" : "iteration limit reached") << " after "
            << rep.iterations << " iterations, objective " << rep.objective;
  if (rep.kkt) std::cout << ", kkt " << *rep.kkt;
  std::cout << '\n';
  if (!o.output.empty()) write_json(o.output, io::to_json(result));
  return rep.converged ? 0 : 2;
}

int run_bench_command(const Options& o) {
  std::unique_ptr<SymmetricPsdOperator<double>> h;
  std::string source;
  if (!o.data.empty()) {
    io::Dataset data = load(o);
    h = std::make_unique<SymmetricPsdOperator<double>>(gram_operator<double>(data.features));
    source = o.data;
  } else {
    auto m = std::make_shared<const MatrixXd>(synthetic_psd<double>(o.dim, o.condition, o.rho, o.seed));
    h = std::make_unique<SymmetricPsdOperator<double>>(
        o.dim, [m](const VectorXd& v) { return VectorXd(*m * v); },
        [m](const MatrixXd& x) { return MatrixXd(*m * x); });
    source = "synthetic";
  }
  const auto rep = run_bench<double>(*h, o.rho, o.sketch_size, o.pcg_tol, 100000, o.seed + 1);

  json j;
  j["problem"] = "bench";
  j["source"] = source;
  j["dim"] = rep.dim;
  j["condition"] = o.condition;
  j["rho"] = o.rho;
  j["sketch_size"] = rep.sketch_size;
  j["tol"] = o.pcg_tol;
  j["seed"] = o.seed;
  j["empirical_condition_number"] = rep.empirical_condition_number;
  j["pcg_iterations"] = rep.preconditioned.iterations;
  j["pcg_converged"] = rep.preconditioned.converged;
  j["cg_iterations"] = rep.plain.iterations;
  j["cg_converged"] = rep.plain.converged;

  std::cout << "bench: dim " << rep.dim << ", sketch " << rep.sketch_size << ", nystrom-pcg "
            << rep.preconditioned.iterations << " iterations, cg " << rep.plain.iterations << " iterations\n";
  if (!o.output.empty()) write_json(o.output, j);
  return rep.preconditioned.converged && rep.plain.converged ? 0 : 2;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("NYSADMM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Composite convex optimization with Nystrom-preconditioned ADMM", "nysadmm"};
  app.require_subcommand(1);

  Options o;
  CLI::App* lasso = app.add_subcommand("lasso", "Lasso / elastic net");
  CLI::App* logistic = app.add_subcommand("logistic", "l1-regularized logistic regression");
  CLI::App* svm = app.add_subcommand("svm", "Kernel SVM (dual)");
  CLI::App* bench = app.add_subcommand("bench", "Nystrom PCG vs plain CG iteration counts");
  for (CLI::App* cmd : {lasso, logistic, svm}) add_solver(*cmd, o);
  add_shared(*bench, o);
  bench->add_option("--dim", o.dim, "Synthetic problem dimension")->check(CLI::Range(Index(2), Index(1) << 20));
  bench->add_option("--condition", o.condition, "Condition number of H + rho I")->check(CLI::Range(1.0 + 1e-9, 1e300));
  bench->add_option("--tol", o.pcg_tol, "Residual tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? 0 : 1;
  }

  apply_thread_cap();
  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  try {
    check_combinations(*cmd, name, o);
    if (name == "bench") return run_bench_command(o);
    return run_solver(o, name);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << cmd->help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nysadmm
