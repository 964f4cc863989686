#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbreg/baselines.hpp"
#include "rbreg/simulate.hpp"

namespace rbreg::bench {

enum class Estimator { bayes, ls, lad, lasso_ls, lasso_lad, ridge_ls, ridge_lad };

// Plan/CLI key: bayes, ls, lad, lasso-ls, lasso-lad, ridge-ls, ridge-lad.
std::string estimator_key(Estimator e);
Estimator parse_estimator(const std::string& key);

struct ExperimentPlan {
  std::vector<Eigen::Index> n_list{500};
  std::vector<double> kappa_list{0.1, 0.3, 0.5};
  int replications = 1;
  // One Bayes column per entry ("Bayes_500", "Bayes_1000", ...).
  std::vector<int> gibbs_iterations{1000};
  std::vector<Estimator> estimators{Estimator::bayes, Estimator::ls, Estimator::lad};
  std::uint64_t master_seed = 1;
  int workers = 1;
  freq::CvConfig cv;
  double burn_in_fraction = 0.5;
  sim::ThetaPrior theta_prior = sim::ThetaPrior::theta2_exponential;
  std::optional<double> frozen_theta;

  void validate() const;
  // Table columns in display order: Bayes_*, LAS_LS, LAS_LAD, RID_LS, RID_LAD, LS, LAD.
  std::vector<std::string> columns() const;

  static ExperimentPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct BenchmarkRecord {
  Eigen::Index n = 0;
  double kappa = 0.0;
  Eigen::Index p = 0;
  std::string column;
  int replication = 0;
  double l2_error = 0.0;
  double seconds = 0.0;
  bool success = false;
  std::string message;
  std::uint64_t dataset_hash = 0;
  // Cross-validated lambda for penalized fits; NaN otherwise.
  double lambda = 0.0;
};

struct MedianCell {
  Eigen::Index n = 0;
  double kappa = 0.0;
  std::string column;
  double median_error = 0.0;
  double median_seconds = 0.0;
  int successes = 0;
  int failures = 0;
};

struct BenchmarkResult {
  std::vector<BenchmarkRecord> records;
  std::vector<MedianCell> medians;

  const MedianCell* find(Eigen::Index n, double kappa, const std::string& column) const;
};

double median(std::vector<double> values);

// Medians of successful records per (n, kappa, column), sorted by key, so the
// result does not depend on record order.
std::vector<MedianCell> reduce_medians(const std::vector<BenchmarkRecord>& records);

std::uint64_t dataset_hash(const Dataset& data);

// The dataset run_benchmark generates for cell (n, kappa, replication).
Dataset replication_dataset(const ExperimentPlan& plan, Eigen::Index n, double kappa, int replication);

// Called after each finished replication with (done, total).
using ProgressFn = std::function<void(std::size_t, std::size_t)>;

// One simulated dataset per (n, kappa, replication) shared by every
// estimator; each replication draws from its own derived stream, so the
// output does not depend on the worker count.
BenchmarkResult run_benchmark(const ExperimentPlan& plan, const ProgressFn& progress = {});

struct ContrastRow {
  Eigen::Index n;
  double ls_median;
  double bayes_median;
};

struct ContrastResult {
  double kappa = 0.0;
  std::vector<ContrastRow> rows;
  // |LS(last) - LS(first)| / LS(first).
  double ls_relative_change = 0.0;
  bool bayes_strictly_decreasing = false;
  BenchmarkResult raw;
};

// LS versus Bayes medians across an increasing list of n at fixed kappa.
ContrastResult consistency_contrast(double kappa, const std::vector<Eigen::Index>& n_list,
                                    int replications, std::uint64_t seed = 1, int workers = 1,
                                    int gibbs_iterations = 1000, const ProgressFn& progress = {});

// Writes medians.csv, times.csv, records.csv, table1.txt (errors), table2.txt
// (minutes) and metadata.json into out_dir.
void emit_report(const BenchmarkResult& result, const ExperimentPlan& plan,
                 const std::filesystem::path& out_dir);

// Aligned text layout: one block per n, rows kappa, columns as in the plan.
std::string format_table(const BenchmarkResult& result, const ExperimentPlan& plan, bool times);

}  // namespace rbreg::bench
