// Command-line front end: instance validation, LP solves, exact benchmarks,
// simulations with ratio reports, fixed reproduction cases and CSV
// aggregation.
//
// Exit codes: 0 success, 1 invalid input, 2 cap exceeded, 3 internal error.

#include <CLI11.hpp>

#include <fstream>
#include <limits>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "stochmatch/benchmarks.hpp"
#include "stochmatch/cases.hpp"
#include "stochmatch/harness.hpp"
#include "stochmatch/io.hpp"
#include "stochmatch/lp.hpp"
#include "stochmatch/lp_builders.hpp"
#include "stochmatch/online.hpp"

namespace sm = stochmatch;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw sm::ValidationError("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sm::StochasticGraph load(const std::string& path) {
  sm::StochasticGraph g = sm::parse_instance(read_file(path));
  const auto report = sm::validate_graph(g);
  if (!report.ok()) {
    std::string msg = path + ": invalid instance";
    for (const auto& issue : report.issues) msg += "\n  " + issue;
    throw sm::ValidationError(msg);
  }
  return g;
}

std::string instance_id(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos) name.resize(dot);
  return name;
}

sm::ArrivalOrder parse_order(const sm::StochasticGraph& g, const std::string& text) {
  std::vector<std::size_t> seq;
  std::stringstream ss(text);
  for (std::string name; std::getline(ss, name, ',');) {
    const auto v = g.online_index(name);
    if (!v) throw sm::ValidationError("--perm: unknown online vertex '" + name + "'");
    seq.push_back(*v);
  }
  return sm::ArrivalOrder::permutation(seq, g.num_online());
}

void print_lp_result(const sm::LinearProgram& lp, const sm::LpSolution& sol, const std::string& format) {
  if (format == "json") {
    sm::Json j = {{"status", sm::to_string(sol.status)}, {"objective", sol.objective_value},
                  {"max_violation", sol.max_violation}};
    if (sol.status == sm::LpStatus::optimal) {
      sm::Json values = sm::Json::object();
      for (const auto& [name, value] : sol.assignment(lp)) {
        if (value != 0.0) values[name] = value;
      }
      j["values"] = values;
    }
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::cout << "status," << sm::to_string(sol.status) << "\nobjective," << sm::fmt(sol.objective_value)
            << "\nvariables," << lp.num_variables() << "\nrows," << lp.num_rows() << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Stochastic matching with probing and commitment"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed and --format may follow the subcommand
  std::uint64_t seed = 0;
  std::string format = "csv";
  app.add_option("--seed", seed, "Seed for every random draw")->capture_default_str();
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // validate
  auto* validate = app.add_subcommand("validate", "Check an instance file");
  std::string validate_path;
  validate->add_option("instance", validate_path)->required();

  // solve-lp
  auto* solve = app.add_subcommand("solve-lp", "Solve one of the LP relaxations");
  std::string solve_path, which_lp = "config", dump_path;
  solve->add_option("instance", solve_path)->required();
  solve->add_option("--which", which_lp)
      ->check(CLI::IsMember({"config", "std-unit", "std", "dp", "dp-non"}))
      ->capture_default_str();
  solve->add_option("--dump", dump_path, "Write the LP in CPLEX-LP format ('-' for stdout)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "Exact offline benchmark values");
  std::string bench_path, which_bench = "committal";
  std::size_t bench_trials = 100000, bench_threads = 1;
  bench->add_option("instance", bench_path)->required();
  bench->add_option("--which", which_bench)
      ->check(CLI::IsMember({"committal", "noncommittal", "relaxed"}))
      ->capture_default_str();
  bench->add_option("--trials", bench_trials, "Monte Carlo trials for the relaxed run")->capture_default_str();
  bench->add_option("--threads", bench_threads)->capture_default_str();

  // simulate
  auto* sim = app.add_subcommand("simulate", "Evaluate an online algorithm and report its ratio");
  std::string sim_path, alg = "greedy-dp", order = "rom", perm, mode = "auto", sim_bench = "committal",
                        dump_runs, sim_id, pass_rule = "printed";
  std::size_t trials = 10000, threads = 1;
  sim->add_option("instance", sim_path)->required();
  sim->add_option("--alg", alg)->check(CLI::IsMember({"rom-lp", "greedy-dp", "greedy-probe"}))->capture_default_str();
  sim->add_option("--order", order)->check(CLI::IsMember({"rom", "explicit", "worst", "Y"}))->capture_default_str();
  sim->add_option("--perm", perm, "Arrival order for --order explicit, e.g. v2,v1,v3");
  sim->add_option("--mode", mode, "exact, mc, or auto (exact when small enough)")
      ->check(CLI::IsMember({"auto", "exact", "mc"}))
      ->capture_default_str();
  sim->add_option("--benchmark", sim_bench)
      ->check(CLI::IsMember({"committal", "noncommittal", "lp-config", "lp-dp", "lp-dp-non", "lp-std-unit", "lp-std"}))
      ->capture_default_str();
  sim->add_option("--trials", trials)->capture_default_str();
  sim->add_option("--threads", threads)->capture_default_str();
  sim->add_option("--pass-rule", pass_rule, "When rom-lp skips early arrivals")
      ->check(CLI::IsMember({"printed", "analysis"}))
      ->capture_default_str();
  sim->add_option("--dump-runs", dump_runs, "Write every run as a JSON line to this file");
  sim->add_option("--instance-id", sim_id, "Row label (default: file name)");

  // reproduce
  auto* repro = app.add_subcommand("reproduce", "Replay a fixed worked example");
  std::string case_name;
  std::vector<std::string> all_cases = sm::cases::case_names();
  for (const char* alias : {"propA1", "example41", "footnote1"}) all_cases.push_back(alias);
  repro->add_option("--case", case_name)->required()->check(CLI::IsMember(all_cases));

  // report
  auto* report = app.add_subcommand("report", "Aggregate simulate CSV rows");
  std::vector<std::string> csv_paths;
  report->add_option("files", csv_paths)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*validate) {
    const sm::StochasticGraph g = sm::parse_instance(read_file(validate_path));
    const auto r = sm::validate_graph(g);
    if (r.ok()) {
      std::cout << "ok: " << g.num_offline() << " offline, " << g.num_online() << " online, " << g.num_edges()
                << " edges\n";
      return 0;
    }
    for (const auto& issue : r.issues) std::cerr << issue << '\n';
    return 1;
  }

  if (*solve) {
    const sm::StochasticGraph g = load(solve_path);
    sm::LinearProgram lp;
    if (which_lp == "config") lp = sm::build_lp_config(g).lp;
    if (which_lp == "std-unit") lp = sm::build_lp_std_unit(g);
    if (which_lp == "std") lp = sm::build_lp_std(g);
    if (which_lp == "dp") lp = sm::build_lp_dp(g);
    if (which_lp == "dp-non") lp = sm::build_lp_dp_non(g);
    if (dump_path == "-") {
      sm::write_cplex_lp(lp, std::cout);
    } else if (!dump_path.empty()) {
      std::ofstream out(dump_path);
      if (!out) throw sm::ValidationError("cannot write '" + dump_path + "'");
      sm::write_cplex_lp(lp, out);
    }
    const sm::LpSolution sol = sm::solve_lp(lp);
    print_lp_result(lp, sol, format);
    return sol.status == sm::LpStatus::optimal ? 0 : 3;
  }

  if (*bench) {
    const sm::StochasticGraph g = load(bench_path);
    if (which_bench == "relaxed") {
      const sm::ConfigLp config = sm::build_lp_config(g);
      const sm::LpSolution sol = sm::solve_lp(config.lp);
      if (sol.status != sm::LpStatus::optimal) throw sm::InternalError("configuration LP not optimal");
      const auto values = sm::parallel_trials(
          bench_trials, seed, bench_threads, [] { return 0; },
          [&](int, std::size_t, sm::Rng& rng) {
            double w = 0.0;
            for (sm::EdgeId e : sm::relaxed_benchmark_run(g, config, sol, rng).edges) w += g.edge(e).w;
            return w;
          });
      const sm::Estimate est = sm::summarize(values);
      std::cout << "benchmark,value,stderr,trials,lp_config\nrelaxed," << sm::fmt(est.mean) << ','
                << sm::fmt(est.stderr_) << ',' << est.trials << ',' << sm::fmt(sol.objective_value) << '\n';
      return 0;
    }
    const double value = which_bench == "committal" ? sm::committal_opt(g) : sm::noncommittal_opt(g);
    if (format == "json") {
      std::cout << sm::Json{{"benchmark", which_bench}, {"value", value}}.dump() << '\n';
    } else {
      std::cout << "benchmark,value\n" << which_bench << ',' << sm::fmt(value) << '\n';
    }
    return 0;
  }

  if (*sim) {
    const sm::StochasticGraph g = load(sim_path);
    sm::RatioReport r;
    r.instance_id = sim_id.empty() ? instance_id(sim_path) : sim_id;
    r.algorithm = sm::parse_algorithm(alg);
    r.order_model = sm::parse_order_model(order);
    r.benchmark = sm::parse_benchmark(sim_bench);
    const sm::PassRule rule = pass_rule == "analysis" ? sm::PassRule::analysis : sm::PassRule::as_printed;
    std::optional<sm::ArrivalOrder> explicit_order;
    if (r.order_model == sm::OrderModel::explicit_order) {
      if (perm.empty()) throw sm::ValidationError("--order explicit needs --perm");
      explicit_order = parse_order(g, perm);
    }
    const bool small = g.num_online() <= sm::kMaxExactOnline || r.order_model == sm::OrderModel::explicit_order;
    const bool exact = mode == "exact" || (mode == "auto" && small) || r.order_model == sm::OrderModel::worst;
    if (exact && !dump_runs.empty()) throw sm::ValidationError("--dump-runs needs Monte Carlo mode");
    if (exact) {
      r.value = sm::exact_expected_value(r.algorithm, g, r.order_model, explicit_order, rule);
    } else {
      sm::MonteCarloOptions opt;
      opt.trials = trials;
      opt.seed = seed;
      opt.threads = threads;
      opt.rule = rule;
      opt.order = explicit_order;
      std::vector<std::string> lines;
      std::mutex lines_mutex;
      if (!dump_runs.empty()) {
        lines.resize(trials);
        opt.on_run = [&](std::size_t i, const sm::RunRecord& rec) {
          std::string line = sm::run_to_json(g, rec).dump();
          std::lock_guard<std::mutex> lock(lines_mutex);
          lines[i] = std::move(line);
        };
      }
      const sm::Estimate est = sm::monte_carlo(r.algorithm, g, r.order_model, opt);
      r.value = est.mean;
      r.stderr_ = est.stderr_;
      r.trials = est.trials;
      if (!dump_runs.empty()) {
        std::ofstream out(dump_runs);
        if (!out) throw sm::ValidationError("cannot write '" + dump_runs + "'");
        for (const auto& line : lines) out << line << '\n';
      }
    }
    r.benchmark_value = sm::benchmark_value(g, r.benchmark);
    r.threshold = sm::ratio_threshold(r.algorithm, r.order_model, g.num_online());
    sm::finalize(r);
    if (format == "json") {
      std::cout << sm::to_json(r).dump() << '\n';
    } else {
      std::cout << sm::kCsvHeader << '\n' << sm::to_csv_row(r) << '\n';
    }
    return 0;
  }

  if (*repro) {
    return sm::cases::run_case(case_name, std::cout, seed) ? 0 : 3;
  }

  if (*report) {
    struct Group {
      std::size_t rows = 0, passed = 0;
      double min_ratio = std::numeric_limits<double>::infinity();
      double sum_ratio = 0.0;
    };
    std::map<std::string, Group> groups;
    for (const auto& path : csv_paths) {
      std::stringstream ss(read_file(path));
      std::string line;
      while (std::getline(ss, line)) {
        if (line.empty() || line.rfind("instance_id,", 0) == 0) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
        if (f.size() != 11) throw sm::ValidationError(path + ": expected 11 columns in '" + line + "'");
        Group& grp = groups[f[1] + "," + f[2] + "," + f[6]];
        const double ratio = std::stod(f[8]);
        ++grp.rows;
        grp.passed += f[10] == "true";
        grp.min_ratio = std::min(grp.min_ratio, ratio);
        grp.sum_ratio += ratio;
      }
    }
    std::cout << "algorithm,order_model,benchmark,rows,passed,min_ratio,mean_ratio\n";
    bool all = true;
    for (const auto& [key, grp] : groups) {
      std::cout << key << ',' << grp.rows << ',' << grp.passed << ',' << sm::fmt(grp.min_ratio) << ','
                << sm::fmt(grp.sum_ratio / static_cast<double>(grp.rows)) << '\n';
      all = all && grp.passed == grp.rows;
    }
    std::cout << "# " << (all ? "all rows pass" : "some rows fail") << '\n';
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const sm::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const sm::CapExceeded& e) {
    std::cerr << "cap exceeded: " << e.what() << '\n';
    return 2;
  } catch (const sm::InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  }
}
