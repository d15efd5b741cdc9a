#include "smpec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <iostream>
#include <limits>
#include <mutex>
#include <sstream>

namespace smpec {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

// runs `count` tasks indexed 0..count-1 over `jobs` workers, results merged
// by index for determinism
template <typename F>
void parallel_for(int count, int jobs, F&& body) {
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::future<void>> workers;
  workers.reserve(jobs);
  for (int w = 0; w < jobs; ++w) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
    }));
  }
  for (auto& f : workers) f.get();
}

std::ostream& open_sink(const std::string& path, std::ofstream& file) {
  if (path.empty()) return std::cout;
  file.open(path);
  if (!file) throw std::invalid_argument("cannot open output file: " + path);
  return file;
}

}  // namespace

void ExperimentSpec::validate() const {
  if (runs < 1) throw std::invalid_argument("ExperimentSpec: runs >= 1 required");
  if (validation_samples < 2) throw std::invalid_argument("ExperimentSpec: validation_samples >= 2 required");
  if (jobs < 1) throw std::invalid_argument("ExperimentSpec: jobs >= 1 required");
  if (solver_id != "zsol-convex" && solver_id != "zsol-nonconvex" && solver_id != "zsol-acc" && solver_id != "saa")
    throw std::invalid_argument("ExperimentSpec: unknown solver id '" + solver_id + "'");
  schedule.validate();
  make_problem(problem_id, problem_params);  // throws on unknown ids/params
}

std::vector<double> validation_draws(long count, std::uint64_t seed) {
  std::vector<double> omegas(count);
  Rng rng(seed);
  for (double& w : omegas) w = rng.uniform();
  return omegas;
}

double estimate_value(const SmpecProblem& problem, const Vec& x, const std::vector<double>& omegas) {
  double sum = 0;
  if (problem.implicit_value) {
    for (double w : omegas) sum += problem.implicit_value(x, w);
  } else {
    for (double w : omegas) sum += problem.upper_value(x, problem.exact_lower(x, w), w);
  }
  return sum / double(omegas.size());
}

PairedGap estimate_gap(const SmpecProblem& problem, const Vec& x, const Vec& x_ref,
                       const std::vector<double>& omegas) {
  auto value_at = [&](const Vec& z, double w) {
    return problem.implicit_value ? problem.implicit_value(z, w)
                                  : problem.upper_value(z, problem.exact_lower(z, w), w);
  };
  double mean = 0, m2 = 0;
  long n = 0;
  for (double w : omegas) {
    const double d = value_at(x, w) - value_at(x_ref, w);
    ++n;
    const double delta = d - mean;
    mean += delta / double(n);
    m2 += delta * (d - mean);
  }
  const double se = n > 1 ? std::sqrt(m2 / double(n - 1) / double(n)) : kNaN;
  return {mean, se};
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const SmpecProblem problem = make_problem(spec.problem_id, spec.problem_params);
  const std::vector<double> val = validation_draws(spec.validation_samples, spec.validation_seed);

  ExperimentResult result;
  result.f_star_estimate = problem.optimum ? estimate_value(problem, problem.optimum->x_star, val) : kNaN;
  result.rows.resize(spec.runs);

  std::string first_error;
  std::mutex error_mutex;
  parallel_for(spec.runs, spec.jobs, [&](int i) {
    RunRow& row = result.rows[i];
    row.seed = spec.base_seed + static_cast<std::uint64_t>(i);
    try {
      if (spec.solver_id == "saa") {
        SaaConfig cfg;
        cfg.k_samples = spec.saa_samples;
        const SaaResult saa = saa_solve(problem, cfg, row.seed);
        row.x = saa.x_hat;
        row.lower_solves = saa.lower_solves;
        row.wall_time = saa.wall_time;
      } else {
        RunTrace trace;
        if (spec.solver_id == "zsol-convex") {
          trace = run_convex(problem, spec.schedule, spec.lower_mode, row.seed);
        } else if (spec.solver_id == "zsol-nonconvex") {
          trace = run_nonconvex(problem, spec.schedule, spec.lower_mode, row.seed);
        } else {
          trace = run_accelerated(problem, spec.schedule, row.seed);
        }
        row.x = trace.result;
        row.upper_projections = trace.upper_projections;
        row.upper_samples = trace.upper_samples;
        row.lower_solves = trace.lower_solves;
        row.lower_projections = trace.lower_projections;
        row.lower_samples = trace.lower_samples;
        row.wall_time = trace.wall_time;
      }
      row.value = estimate_value(problem, row.x, val);
      row.gap = std::isnan(result.f_star_estimate) ? kNaN : row.value - result.f_star_estimate;
      row.residual = kNaN;
      if (spec.compute_residual && problem.exact_lower) {
        const double beta = 1.0 / spec.schedule.gamma0;
        row.residual =
            residual_norm(problem, row.x, spec.schedule.eta0, beta, 2000, row.seed + 0x9e3779b9ull).value;
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (first_error.empty())
        first_error = "run with seed " + std::to_string(row.seed) + " failed: " + e.what();
    }
  });
  if (!first_error.empty()) throw std::runtime_error(first_error);

  std::vector<double> gaps, values;
  for (const RunRow& r : result.rows) {
    values.push_back(r.value);
    if (!std::isnan(r.gap)) gaps.push_back(r.gap);
  }
  if (values.size() >= 2) result.value_ci = confidence_interval(values);
  else result.value_ci = {values.empty() ? kNaN : values[0], kNaN};
  if (gaps.size() >= 2) result.gap_ci = confidence_interval(gaps);
  else result.gap_ci = {gaps.empty() ? kNaN : gaps[0], kNaN};
  return result;
}

std::string csv_field(const std::string& raw) {
  if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
  std::string out = "\"";
  for (char c : raw) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

int cmd_run(const ExperimentSpec& spec) {
  try {
    spec.validate();
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  try {
    const ExperimentResult res = run_experiment(spec);
    std::ofstream file;
    std::ostream& out = open_sink(spec.out_path, file);
    out << "seed,value,gap,residual,upper_projections,upper_samples,lower_solves,"
           "lower_projections,lower_samples,wall_time\n";
    for (const RunRow& r : res.rows) {
      out << r.seed << ',' << fmt(r.value) << ',' << fmt(r.gap) << ',' << fmt(r.residual) << ','
          << r.upper_projections << ',' << r.upper_samples << ',' << r.lower_solves << ','
          << r.lower_projections << ',' << r.lower_samples << ',' << fmt(r.wall_time) << '\n';
    }
    out << "summary," << fmt(res.value_ci.mean) << ',' << fmt(res.gap_ci.mean) << ",nan,,,,,,"
        << '\n';
    out << "ci95_half_width," << fmt(res.value_ci.half_width_95) << ','
        << fmt(res.gap_ci.half_width_95) << ",nan,,,,,," << '\n';
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_trajectory(const ExperimentSpec& spec, long log_every) {
  try {
    spec.validate();
    if (log_every < 1) throw std::invalid_argument("log_every >= 1 required");
    if (spec.solver_id == "saa") throw std::invalid_argument("trajectory: SAA has no iterate schedule");
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  try {
    const SmpecProblem problem = make_problem(spec.problem_id, spec.problem_params);
    const std::vector<double> val = validation_draws(spec.validation_samples, spec.validation_seed);
    RunOptions opts;
    opts.store_iterates = true;
    RunTrace trace;
    if (spec.solver_id == "zsol-convex") {
      trace = run_convex(problem, spec.schedule, spec.lower_mode, spec.base_seed, opts);
    } else if (spec.solver_id == "zsol-nonconvex") {
      trace = run_nonconvex(problem, spec.schedule, spec.lower_mode, spec.base_seed, opts);
    } else {
      trace = run_accelerated(problem, spec.schedule, spec.base_seed, opts);
    }

    const bool has_ref = problem.optimum.has_value();
    std::ofstream file;
    std::ostream& out = open_sink(spec.out_path, file);
    out << "k,gap_estimate,stderr,eta_k,gamma_k\n";
    const long n = static_cast<long>(trace.iterates.size());
    for (long k = 0; k < n; k += log_every) {
      const ScheduleEval e = schedule_eval(spec.schedule, k);
      double gap, se;
      if (has_ref) {
        const PairedGap pg = estimate_gap(problem, trace.iterates[k], problem.optimum->x_star, val);
        gap = pg.gap;
        se = pg.stderr_of_gap;
      } else {
        gap = estimate_value(problem, trace.iterates[k], val);
        se = kNaN;
      }
      out << k << ',' << fmt(gap) << ',' << fmt(se) << ',' << fmt(e.eta_k) << ',' << fmt(e.gamma_k)
          << '\n';
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

struct TableRow {
  std::string label;
  std::vector<std::pair<std::string, double>> cells;
};

void emit_table(std::ostream& out, const std::string& name, const std::vector<TableRow>& rows) {
  if (rows.empty()) return;
  // CSV block
  out << "table," << name << "\n";
  out << "setting";
  for (const auto& [key, value] : rows.front().cells) out << ',' << csv_field(key);
  out << '\n';
  for (const TableRow& r : rows) {
    out << csv_field(r.label);
    for (const auto& [key, value] : r.cells) out << ',' << fmt(value);
    out << '\n';
  }
  // aligned text rendering
  out << '\n';
  std::size_t w0 = 8;
  for (const TableRow& r : rows) w0 = std::max(w0, r.label.size());
  out << std::string(w0 - 7, ' ') << "setting";
  for (const auto& [key, value] : rows.front().cells) {
    out << "  " << key;
  }
  out << '\n';
  for (const TableRow& r : rows) {
    out << std::string(w0 - r.label.size(), ' ') << r.label;
    for (const auto& [key, value] : r.cells) {
      std::ostringstream cell;
      cell.precision(3);
      cell << std::scientific << value;
      std::string s = std::isnan(value) ? "--" : cell.str();
      out << "  " << std::string(key.size() > s.size() ? key.size() - s.size() : 0, ' ') << s;
    }
    out << '\n';
  }
  out << '\n';
}

Schedule paper_convex_schedule(long K) {
  Schedule s;
  s.gamma0 = 1;
  s.a = 0.5;
  s.eta0 = 1;
  s.b = 0.5;
  s.K = K;
  return s;
}

Schedule paper_accel_schedule(long K) {
  Schedule s;
  s.gamma0 = 0.5;
  s.a = 1.0;
  s.eta0 = 1.0;
  s.b = 1.0;
  s.delta = 0.01;
  s.K = K;
  return s;
}

Schedule paper_nonconvex_schedule(long K) {
  Schedule s;
  s.gamma0 = 1e-3;
  s.eta0 = 1e-2;
  s.K = K;
  return s;
}

ExperimentSpec base_spec(const std::string& problem, const std::string& solver, const Schedule& sched,
                         int runs, int jobs) {
  ExperimentSpec spec;
  spec.problem_id = problem;
  spec.solver_id = solver;
  spec.schedule = sched;
  spec.runs = runs;
  spec.base_seed = 1;
  spec.jobs = jobs;
  return spec;
}

}  // namespace

int cmd_table(const std::string& name, const std::string& scale, const std::string& out_path, int jobs) {
  const bool full = scale == "full";
  if (!full && scale != "desk") {
    std::cerr << "configuration error: scale must be 'full' or 'desk'\n";
    return 2;
  }
  try {
    std::ofstream file;
    std::ostream& out = open_sink(out_path, file);
    std::vector<TableRow> rows;

    if (name == "time") {
      // two-stage Cournot: unaccelerated vs accelerated
      const std::vector<int> sizes = full ? std::vector<int>{10, 20, 100, 1000} : std::vector<int>{10, 100};
      const int runs = full ? 20 : 5;
      for (int N : sizes) {
        for (double b : {1.0, 0.5}) {
          for (double c : {0.05, 0.1}) {
            ExperimentSpec s = base_spec("cournot2s", "zsol-convex", paper_convex_schedule(1000), runs, jobs);
            s.problem_params = {{"N", double(N)}, {"b", b}, {"c", c}};
            const ExperimentResult r1 = run_experiment(s);
            s.solver_id = "zsol-acc";
            s.schedule = paper_accel_schedule(1000);
            const ExperimentResult r2 = run_experiment(s);
            double t1 = 0, t2 = 0;
            for (const RunRow& r : r1.rows) t1 += r.wall_time;
            for (const RunRow& r : r2.rows) t2 += r.wall_time;
            std::ostringstream label;
            label << "N=" << N << " b=" << b << " c=" << c;
            rows.push_back({label.str(),
                            {{"gap_cnvx", r1.gap_ci.mean},
                             {"time_cnvx", t1 / runs},
                             {"gap_acc", r2.gap_ci.mean},
                             {"time_acc", t2 / runs}}});
          }
        }
      }
    } else if (name == "time2") {
      // single-stage Cournot with the variance-reduced inexact lower level,
      // against the SAA gradient baseline
      const std::vector<int> sizes = full ? std::vector<int>{100, 1000, 10000} : std::vector<int>{100};
      const int runs = full ? 20 : 5;
      for (int N : sizes) {
        for (double b : {0.01, 0.02}) {
          for (double c : {3.0, 5.0}) {
            Schedule sched = paper_convex_schedule(1000);
            sched.alpha = 0.1 * (c + b) / ((c + b * (N + 1)) * (c + b * (N + 1)));
            ExperimentSpec s = base_spec("cournot1s", "zsol-convex", sched, runs, jobs);
            s.problem_params = {{"N", double(N)}, {"b", b}, {"c", c}};
            s.lower_mode = LowerMode::inexact;
            const ExperimentResult r1 = run_experiment(s);
            s.solver_id = "saa";
            const ExperimentResult r2 = run_experiment(s);
            double t1 = 0, t2 = 0;
            for (const RunRow& r : r1.rows) t1 += r.wall_time;
            for (const RunRow& r : r2.rows) t2 += r.wall_time;
            std::ostringstream label;
            label << "N=" << N << " b=" << b << " c=" << c;
            rows.push_back({label.str(),
                            {{"gap_zsol", r1.gap_ci.mean},
                             {"time_zsol", t1 / runs},
                             {"gap_saa", r2.gap_ci.mean},
                             {"time_saa", t2 / runs}}});
          }
        }
      }
    } else if (name == "time3") {
      const long K = full ? 10000 : 2000;
      const int runs = full ? 20 : 5;
      for (double a : {1.0, 5.0, 10.0}) {
        for (double cd : {1.0, 2.0, 3.0}) {
          ExperimentSpec s = base_spec("bard", "zsol-nonconvex", paper_nonconvex_schedule(K), runs, jobs);
          s.problem_params = {{"a", a}, {"b", 0.0}, {"c", cd}, {"d", cd}};
          const ExperimentResult r = run_experiment(s);
          std::ostringstream label;
          label << "(a,b)=(" << a << ",0) (c,d)=(" << cd << "," << cd << ")";
          rows.push_back({label.str(), {{"f(x_R)", r.value_ci.mean}, {"ci95", r.value_ci.half_width_95}}});
        }
      }
    } else if (name == "p0") {
      const int runs = full ? 20 : 5;
      struct Entry {
        std::string id;
        std::map<std::string, double> params;
        std::string label;
        long desk_K;  // the iterative-VI problems get shorter desk runs
      };
      std::vector<Entry> entries = {{"p1", {{"gamma", 1.0}}, "Problem 1 gamma=1.0", 100},
                                    {"p1", {{"gamma", 1.1}}, "Problem 1 gamma=1.1", 100},
                                    {"p1", {{"gamma", 1.3}}, "Problem 1 gamma=1.3", 100},
                                    {"p2", {}, "Problem 2", 2000},
                                    {"p3", {}, "Problem 3", 2000},
                                    {"p4", {}, "Problem 4", 2000},
                                    {"p5", {{"variant", 1}}, "Problem 5 v1", 50},
                                    {"p5", {{"variant", 2}}, "Problem 5 v2", 50},
                                    {"p5", {{"variant", 3}}, "Problem 5 v3", 50}};
      for (const Entry& e : entries) {
        Schedule sched = paper_nonconvex_schedule(full ? 10000 : e.desk_K);
        if (e.id == "p1") sched.gamma0 = 1e-2;  // larger domain scale
        ExperimentSpec s = base_spec(e.id, "zsol-nonconvex", sched, runs, jobs);
        s.problem_params = e.params;
        if (e.id == "p1" || e.id == "p5") s.validation_samples = 2000;
        const ExperimentResult r = run_experiment(s);
        const SmpecProblem prob = make_problem(e.id, e.params);
        double mean_x = 0;
        for (const RunRow& row : r.rows) mean_x += row.x[0];
        mean_x /= double(r.rows.size());
        rows.push_back({e.label,
                        {{"f", r.value_ci.mean},
                         {"x1", mean_x},
                         {"f_lit", prob.optimum ? prob.optimum->f_star : kNaN}}});
      }
    } else if (name == "ci") {
      const int runs = 20;
      const std::vector<int> sizes = full ? std::vector<int>{5, 10, 100} : std::vector<int>{2, 5};
      for (int N : sizes) {
        Schedule sched = paper_nonconvex_schedule(full ? 5000 : 1000);
        sched.gamma0 = 1e-2;
        ExperimentSpec s = base_spec("hd2", "zsol-nonconvex", sched, runs, jobs);
        s.problem_params = {{"N", double(N)}};
        s.validation_samples = 20000;
        const ExperimentResult r = run_experiment(s);
        std::ostringstream label;
        label << "hd2 N=" << N;
        rows.push_back({label.str(), {{"f", r.value_ci.mean}, {"ci95", r.value_ci.half_width_95}}});
      }
    } else {
      std::cerr << "configuration error: unknown table '" << name << "'\n";
      return 2;
    }
    emit_table(out, name, rows);
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_oracle(const std::string& problem_id, const std::map<std::string, double>& params, int resolution,
               long mc_samples, const std::string& out_path) {
  try {
    const SmpecProblem problem = make_problem(problem_id, params);
    const AnalyticOptimum opt = grid_oracle(problem, resolution, mc_samples);
    std::ofstream file;
    std::ostream& out = open_sink(out_path, file);
    out << "problem,f_star";
    for (int i = 0; i < problem.dim_x; ++i) out << ",x" << i + 1;
    out << "\n" << csv_field(problem_id) << ',' << fmt(opt.f_star);
    for (int i = 0; i < problem.dim_x; ++i) out << ',' << fmt(opt.x_star[i]);
    out << '\n';
    if (problem.optimum) {
      out << "reference," << fmt(problem.optimum->f_star);
      for (int i = 0; i < problem.dim_x; ++i) out << ',' << fmt(problem.optimum->x_star[i]);
      out << '\n';
    }
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace smpec
