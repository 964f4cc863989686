#include "rbreg/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <string_view>
#include <thread>

#include "rbreg/errors.hpp"
#include "rbreg/gibbs.hpp"
#include "rbreg/io.hpp"

namespace rbreg::bench {

namespace fs = std::filesystem;

namespace {

struct EstimatorInfo {
  Estimator id;
  const char* key;
  const char* column;
};

constexpr EstimatorInfo kEstimators[] = {
    {Estimator::bayes, "bayes", "Bayes"},        {Estimator::lasso_ls, "lasso-ls", "LAS_LS"},
    {Estimator::lasso_lad, "lasso-lad", "LAS_LAD"}, {Estimator::ridge_ls, "ridge-ls", "RID_LS"},
    {Estimator::ridge_lad, "ridge-lad", "RID_LAD"}, {Estimator::ls, "ls", "LS"},
    {Estimator::lad, "lad", "LAD"},
};

const EstimatorInfo& info(Estimator e) {
  for (const auto& i : kEstimators)
    if (i.id == e) return i;
  throw ConfigError("unknown estimator");
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string theta_prior_key(sim::ThetaPrior t) {
  return t == sim::ThetaPrior::theta2_exponential ? "theta2-exp" : "theta-exp";
}

}  // namespace

std::string estimator_key(Estimator e) { return info(e).key; }

Estimator parse_estimator(const std::string& key) {
  for (const auto& i : kEstimators)
    if (key == i.key) return i.id;
  throw ConfigError("unknown estimator '" + key +
                    "' (expected bayes, ls, lad, lasso-ls, lasso-lad, ridge-ls, ridge-lad)");
}

void ExperimentPlan::validate() const {
  if (n_list.empty()) throw ConfigError("plan needs at least one n");
  if (kappa_list.empty()) throw ConfigError("plan needs at least one kappa");
  if (replications < 1) throw ConfigError("plan needs at least one replication");
  if (estimators.empty()) throw ConfigError("plan needs at least one estimator");
  if (workers < 1) throw ConfigError("plan needs at least one worker");
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0))
    throw ConfigError("burn-in fraction must lie in [0, 1)");
  const bool has_bayes = std::find(estimators.begin(), estimators.end(), Estimator::bayes) != estimators.end();
  if (has_bayes && gibbs_iterations.empty()) throw ConfigError("bayes estimator needs gibbs iterations");
  for (int it : gibbs_iterations)
    if (it < 2) throw ConfigError("gibbs iterations must be at least 2");
  cv.validate();
  for (auto n : n_list)
    for (double k : kappa_list) {
      sim::SimDesign d = sim::SimDesign::standard(n, k, RngStream());
      d.validate();
    }
}

std::vector<std::string> ExperimentPlan::columns() const {
  std::vector<std::string> cols;
  for (const auto& i : kEstimators) {
    if (std::find(estimators.begin(), estimators.end(), i.id) == estimators.end()) continue;
    if (i.id == Estimator::bayes) {
      std::vector<int> its = gibbs_iterations;
      std::sort(its.begin(), its.end());
      its.erase(std::unique(its.begin(), its.end()), its.end());
      for (int it : its) cols.push_back("Bayes_" + std::to_string(it));
    } else {
      cols.emplace_back(i.column);
    }
  }
  return cols;
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  ExperimentPlan plan;
  try {
    if (j.contains("n")) plan.n_list = j.at("n").get<std::vector<Eigen::Index>>();
    if (j.contains("kappa")) plan.kappa_list = j.at("kappa").get<std::vector<double>>();
    plan.replications = j.value("replications", plan.replications);
    if (j.contains("gibbs_iterations")) plan.gibbs_iterations = j.at("gibbs_iterations").get<std::vector<int>>();
    if (j.contains("estimators")) {
      plan.estimators.clear();
      for (const auto& e : j.at("estimators")) plan.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    plan.master_seed = j.value("seed", plan.master_seed);
    plan.workers = j.value("workers", plan.workers);
    plan.burn_in_fraction = j.value("burn_in_fraction", plan.burn_in_fraction);
    if (j.contains("cv")) {
      const auto& c = j.at("cv");
      plan.cv.folds = c.value("folds", plan.cv.folds);
      plan.cv.grid_size = c.value("grid_size", plan.cv.grid_size);
      plan.cv.min_ratio = c.value("min_ratio", plan.cv.min_ratio);
    }
    if (j.contains("theta_prior")) {
      const auto t = j.at("theta_prior").get<std::string>();
      if (t == "theta2-exp") plan.theta_prior = sim::ThetaPrior::theta2_exponential;
      else if (t == "theta-exp") plan.theta_prior = sim::ThetaPrior::theta_exponential;
      else throw ConfigError("theta_prior must be theta2-exp or theta-exp");
    }
    if (j.contains("frozen_theta") && !j.at("frozen_theta").is_null())
      plan.frozen_theta = j.at("frozen_theta").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed plan document: ") + e.what());
  }
  plan.validate();
  return plan;
}

nlohmann::json ExperimentPlan::to_json() const {
  nlohmann::json j;
  j["n"] = n_list;
  j["kappa"] = kappa_list;
  j["replications"] = replications;
  j["gibbs_iterations"] = gibbs_iterations;
  std::vector<std::string> keys;
  for (auto e : estimators) keys.push_back(estimator_key(e));
  j["estimators"] = keys;
  j["seed"] = master_seed;
  j["workers"] = workers;
  j["burn_in_fraction"] = burn_in_fraction;
  j["cv"] = {{"folds", cv.folds}, {"grid_size", cv.grid_size}, {"min_ratio", cv.min_ratio}};
  j["theta_prior"] = theta_prior_key(theta_prior);
  j["frozen_theta"] = frozen_theta ? nlohmann::json(*frozen_theta) : nlohmann::json(nullptr);
  return j;
}

const MedianCell* BenchmarkResult::find(Eigen::Index n, double kappa, const std::string& column) const {
  for (const auto& c : medians)
    if (c.n == n && c.kappa == kappa && c.column == column) return &c;
  return nullptr;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::vector<MedianCell> reduce_medians(const std::vector<BenchmarkRecord>& records) {
  struct Acc {
    std::vector<double> errors, seconds;
    int failures = 0;
  };
  std::map<std::tuple<Eigen::Index, double, std::string>, Acc> cells;
  for (const auto& r : records) {
    auto& a = cells[{r.n, r.kappa, r.column}];
    if (r.success) {
      a.errors.push_back(r.l2_error);
      a.seconds.push_back(r.seconds);
    } else {
      ++a.failures;
    }
  }
  std::vector<MedianCell> out;
  for (auto& [key, a] : cells) {
    MedianCell c;
    c.n = std::get<0>(key);
    c.kappa = std::get<1>(key);
    c.column = std::get<2>(key);
    c.successes = static_cast<int>(a.errors.size());
    c.failures = a.failures;
    c.median_error = median(a.errors);
    c.median_seconds = median(a.seconds);
    out.push_back(c);
  }
  return out;
}

std::uint64_t dataset_hash(const Dataset& data) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>((data.X.size() + data.Y.size()) * 8 + 16));
  auto put = [&bytes](double v) {
    const auto u = std::bit_cast<std::uint64_t>(v);
    for (int k = 0; k < 8; ++k) bytes.push_back(static_cast<char>((u >> (8 * k)) & 0xffu));
  };
  for (Eigen::Index i = 0; i < data.X.size(); ++i) put(data.X.data()[i]);
  for (Eigen::Index i = 0; i < data.Y.size(); ++i) put(data.Y[i]);
  return fnv1a(bytes);
}

namespace {

struct Task {
  Eigen::Index n;
  double kappa;
  int replication;
};

RngStream cell_stream(const ExperimentPlan& plan, const Task& t) {
  return RngStream(plan.master_seed, 0)
      .derive({static_cast<std::uint64_t>(t.n), std::bit_cast<std::uint64_t>(t.kappa),
               static_cast<std::uint64_t>(t.replication)});
}

sim::SimDesign cell_design(const ExperimentPlan& plan, const Task& t) {
  sim::SimDesign design = sim::SimDesign::standard(t.n, t.kappa, cell_stream(plan, t));
  design.theta_prior = plan.theta_prior;
  design.frozen_theta = plan.frozen_theta;
  return design;
}

struct FitOutcome {
  Eigen::VectorXd beta;
  double lambda = std::numeric_limits<double>::quiet_NaN();
};

FitOutcome fit_one(const Dataset& data, const std::string& column, const ExperimentPlan& plan,
                   const Task& t, const RngStream& base) {
  using freq::Loss;
  using freq::Penalty;
  const std::uint64_t tag = fnv1a(column);
  RngStream rng = base.derive({tag});
  FitOutcome out;
  if (column.rfind("Bayes_", 0) == 0) {
    const int iterations = std::stoi(column.substr(6));
    GibbsConfig config = GibbsConfig::with_iterations(iterations, rng.seed(), rng.stream());
    config.burn_in = static_cast<int>(std::floor(plan.burn_in_fraction * iterations));
    const auto hyper = PriorHyperparams::scaled(t.n, t.kappa);
    out.beta = gibbs::run_chain(data, hyper, config).mean_beta();
    return out;
  }
  if (column == "LS") {
    out.beta = freq::fit_ls(data);
    return out;
  }
  if (column == "LAD") {
    out.beta = freq::fit_lad(data);
    return out;
  }
  freq::PenaltySpec spec;
  spec.loss = column.ends_with("_LS") ? Loss::squared : Loss::absolute;
  spec.penalty = column.starts_with("LAS") ? Penalty::l1 : Penalty::l2;
  const auto cv = freq::cross_validate(data, spec, plan.cv, rng);
  out.beta = cv.beta;
  out.lambda = cv.lambda;
  return out;
}

std::vector<BenchmarkRecord> run_task(const ExperimentPlan& plan, const Task& t,
                                      const std::vector<std::string>& columns) {
  const Dataset data = sim::generate_dataset(cell_design(plan, t));
  const std::uint64_t hash = dataset_hash(data);
  const RngStream fit_base = cell_stream(plan, t).derive({0xf17ULL});

  std::vector<BenchmarkRecord> out;
  for (const auto& column : columns) {
    BenchmarkRecord rec;
    rec.n = t.n;
    rec.kappa = t.kappa;
    rec.p = data.p();
    rec.column = column;
    rec.replication = t.replication;
    rec.dataset_hash = hash;
    rec.lambda = std::numeric_limits<double>::quiet_NaN();
    const auto start = std::chrono::steady_clock::now();
    try {
      const FitOutcome fit = fit_one(data, column, plan, t, fit_base);
      rec.l2_error = l2_error(fit.beta, data.truth->beta);
      rec.lambda = fit.lambda;
      rec.success = std::isfinite(rec.l2_error);
      if (!rec.success) rec.message = "non-finite estimate";
    } catch (const std::exception& e) {
      rec.success = false;
      rec.message = e.what();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace

Dataset replication_dataset(const ExperimentPlan& plan, Eigen::Index n, double kappa, int replication) {
  return sim::generate_dataset(cell_design(plan, Task{n, kappa, replication}));
}

BenchmarkResult run_benchmark(const ExperimentPlan& plan, const ProgressFn& progress) {
  plan.validate();
  const auto columns = plan.columns();
  std::vector<Task> tasks;
  for (auto n : plan.n_list)
    for (double k : plan.kappa_list)
      for (int r = 0; r < plan.replications; ++r) tasks.push_back({n, k, r});

  std::vector<std::vector<BenchmarkRecord>> slots(tasks.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      slots[i] = run_task(plan, tasks[i], columns);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(finished, tasks.size());
      }
    }
  };
  const int n_workers = std::min<int>(plan.workers, static_cast<int>(tasks.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }

  BenchmarkResult result;
  for (auto& s : slots)
    for (auto& r : s) result.records.push_back(std::move(r));
  result.medians = reduce_medians(result.records);
  return result;
}

ContrastResult consistency_contrast(double kappa, const std::vector<Eigen::Index>& n_list,
                                    int replications, std::uint64_t seed, int workers,
                                    int gibbs_iterations, const ProgressFn& progress) {
  if (n_list.size() < 2) throw PreconditionError("consistency contrast needs at least two n values");
  for (std::size_t k = 1; k < n_list.size(); ++k)
    if (!(n_list[k] > n_list[k - 1])) throw PreconditionError("n list must be strictly increasing");

  ExperimentPlan plan;
  plan.n_list = n_list;
  plan.kappa_list = {kappa};
  plan.replications = replications;
  plan.gibbs_iterations = {gibbs_iterations};
  plan.estimators = {Estimator::bayes, Estimator::ls};
  plan.master_seed = seed;
  plan.workers = workers;

  ContrastResult out;
  out.kappa = kappa;
  out.raw = run_benchmark(plan, progress);
  const std::string bayes_col = "Bayes_" + std::to_string(gibbs_iterations);
  for (auto n : n_list) {
    const auto* ls = out.raw.find(n, kappa, "LS");
    const auto* bayes = out.raw.find(n, kappa, bayes_col);
    out.rows.push_back({n, ls ? ls->median_error : std::numeric_limits<double>::quiet_NaN(),
                        bayes ? bayes->median_error : std::numeric_limits<double>::quiet_NaN()});
  }
  out.ls_relative_change =
      std::abs(out.rows.back().ls_median - out.rows.front().ls_median) / out.rows.front().ls_median;
  out.bayes_strictly_decreasing = true;
  for (std::size_t k = 1; k < out.rows.size(); ++k)
    if (!(out.rows[k].bayes_median < out.rows[k - 1].bayes_median)) out.bayes_strictly_decreasing = false;
  return out;
}

std::string format_table(const BenchmarkResult& result, const ExperimentPlan& plan, bool times) {
  const auto columns = plan.columns();
  std::vector<Eigen::Index> ns = plan.n_list;
  std::vector<double> kappas = plan.kappa_list;
  std::sort(ns.begin(), ns.end());
  std::sort(kappas.begin(), kappas.end());

  std::ostringstream os;
  const int width = 12;
  for (auto n : ns) {
    os << "n=" << n << '\n';
    os << std::left << std::setw(8) << "kappa";
    for (const auto& c : columns) os << std::right << std::setw(width) << c;
    os << '\n';
    for (double k : kappas) {
      std::ostringstream label;
      label << k;
      os << std::left << std::setw(8) << label.str();
      for (const auto& c : columns) {
        const auto* cell = result.find(n, k, c);
        std::ostringstream v;
        if (!cell || cell->successes == 0) v << "NA";
        else if (times) v << std::fixed << std::setprecision(3) << cell->median_seconds / 60.0;
        else v << std::fixed << std::setprecision(3) << cell->median_error;
        os << std::right << std::setw(width) << v.str();
      }
      os << '\n';
    }
    os << '\n';
  }
  return os.str();
}

namespace {

std::ofstream open_report(const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write report file: " + path.string());
  return os;
}

void write_wide_csv(const fs::path& path, const BenchmarkResult& result, const ExperimentPlan& plan,
                    bool times) {
  auto os = open_report(path);
  const auto columns = plan.columns();
  os << "n,kappa";
  for (const auto& c : columns) os << ',' << c;
  os << '\n';
  for (auto n : plan.n_list)
    for (double k : plan.kappa_list) {
      os << n << ',' << io::format_double(k);
      for (const auto& c : columns) {
        const auto* cell = result.find(n, k, c);
        os << ',';
        if (cell && cell->successes > 0)
          os << io::format_double(times ? cell->median_seconds / 60.0 : cell->median_error);
      }
      os << '\n';
    }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace

void emit_report(const BenchmarkResult& result, const ExperimentPlan& plan, const fs::path& out_dir) {
  if (result.records.empty()) throw PreconditionError("cannot report an empty benchmark");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());

  write_wide_csv(out_dir / "medians.csv", result, plan, false);
  write_wide_csv(out_dir / "times.csv", result, plan, true);

  {
    auto os = open_report(out_dir / "records.csv");
    os << "n,kappa,p,estimator,replication,l2_error,seconds,success,lambda,dataset_hash,message\n";
    for (const auto& r : result.records) {
      std::string msg = r.message;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << r.n << ',' << io::format_double(r.kappa) << ',' << r.p << ',' << r.column << ','
         << r.replication << ',' << io::format_double(r.l2_error) << ',' << io::format_double(r.seconds)
         << ',' << (r.success ? 1 : 0) << ',' << (std::isnan(r.lambda) ? "" : io::format_double(r.lambda))
         << ',' << r.dataset_hash << ',' << msg << '\n';
    }
    if (!os) throw IoError("failed writing records.csv");
  }
  {
    auto os = open_report(out_dir / "table1.txt");
    os << "Median squared l2 error |beta_hat - beta|^2\n\n" << format_table(result, plan, false);
  }
  {
    auto os = open_report(out_dir / "table2.txt");
    os << "Median computation time (minutes); penalized fits include cross-validation\n\n"
       << format_table(result, plan, true);
  }

  nlohmann::json meta;
  meta["plan"] = plan.to_json();
  meta["seed"] = plan.master_seed;
  meta["records"] = result.records.size();
  nlohmann::json failures = nlohmann::json::object();
  int total_failures = 0;
  for (const auto& c : result.medians) {
    failures[c.column] = failures.value(c.column, 0) + c.failures;
    total_failures += c.failures;
  }
  meta["failures"] = failures;
  meta["total_failures"] = total_failures;
  meta["versions"] = {
      {"rbreg", "0.1.0"},
      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION)},
      {"compiler", __VERSION__},
  };
  meta["timing"] = "wall-clock per fit, excluding data generation; penalized fits include cross-validation";
  io::write_json(out_dir / "metadata.json", meta);
}

}  // namespace rbreg::bench
