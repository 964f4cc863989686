#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbreg/bench.hpp"
#include "rbreg/checkpoint.hpp"
#include "rbreg/distributions.hpp"
#include "rbreg/errors.hpp"
#include "rbreg/geweke.hpp"
#include "rbreg/gibbs.hpp"
#include "rbreg/io.hpp"
#include "rbreg/simulate.hpp"

namespace fs = std::filesystem;
using namespace rbreg;

namespace {

// Every flag can also come from RB_<FLAG>, e.g. --burn-in from RB_BURN_IN.
CLI::Option* env(CLI::Option* opt) {
  std::string name = opt->get_name(false, true);
  name.erase(0, name.find_first_not_of('-'));
  std::string var = "RB_";
  for (char c : name) var += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return opt->envname(var);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

Dataset load_data(const fs::path& path) {
  return path.extension() == ".bin" ? io::read_dataset_binary(path) : io::read_dataset_csv(path);
}

sim::ThetaPrior parse_theta_prior(const std::string& s) {
  if (s == "theta2-exp") return sim::ThetaPrior::theta2_exponential;
  if (s == "theta-exp") return sim::ThetaPrior::theta_exponential;
  throw ConfigError("theta prior must be theta2-exp or theta-exp");
}

void print_progress(std::size_t done, std::size_t total) {
  std::cerr << "\r" << done << "/" << total << " replications" << std::flush;
  if (done == total) std::cerr << '\n';
}

struct MomentCheck {
  std::string name;
  double mean_z;
  double var_z;
};

// Sample mean and variance against closed forms, each as a z-score using the
// empirical fourth moment for the variance standard error.
MomentCheck moments(const std::string& name, const std::function<double()>& draw, long count,
                    double mean, double var) {
  std::vector<double> xs(static_cast<std::size_t>(count));
  for (auto& x : xs) x = draw();
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(count);
  double m2 = 0, m4 = 0;
  for (double x : xs) {
    const double d = (x - m) * (x - m);
    m2 += d;
    m4 += d * d;
  }
  m2 /= static_cast<double>(count - 1);
  m4 /= static_cast<double>(count);
  const double n = static_cast<double>(count);
  return {name, (m - mean) / std::sqrt(var / n), (m2 - var) / std::sqrt(std::max(m4 - m2 * m2, 1e-300) / n)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double inverse_gaussian_cdf(double x, double a, double b) {
  const double s = std::sqrt(a / x);
  const double tail = std::exp(2.0 * a / b + std::log(normal_cdf(-s * (x / b + 1.0))));
  return normal_cdf(s * (x / b - 1.0)) + tail;
}

int run_validate(long cycles, long samples, std::uint64_t seed) {
  bool ok = true;
  RngStream rng(seed, 7);
  const long n = samples;
  std::vector<MomentCheck> checks;
  checks.push_back(moments("gamma(2.5, 1.5)", [&] { return dist::sample_gamma(2.5, 1.5, rng); }, n,
                           2.5 / 1.5, 2.5 / (1.5 * 1.5)));
  checks.push_back(moments("gamma(0.3, 2)", [&] { return dist::sample_gamma(0.3, 2.0, rng); }, n, 0.15,
                           0.3 / 4.0));
  checks.push_back(moments("inv-gamma(6, 5)", [&] { return dist::sample_inverse_gamma(6.0, 5.0, rng); }, n,
                           1.0, 25.0 / (25.0 * 4.0)));
  checks.push_back(moments("beta(2, 3)", [&] { return dist::sample_beta(2.0, 3.0, rng); }, n, 0.4,
                           6.0 / (25.0 * 6.0)));
  checks.push_back(moments("laplace(2)", [&] { return dist::sample_laplace(2.0, rng); }, n, 0.0, 0.5));
  checks.push_back(moments("inv-gaussian(3, 0.7)",
                           [&] { return dist::sample_inverse_gaussian({3.0, 0.7}, rng); }, n, 0.7,
                           0.343 / 3.0));
  checks.push_back(moments("inv-gaussian(0.5, 4)",
                           [&] { return dist::sample_inverse_gaussian({0.5, 4.0}, rng); }, n, 4.0,
                           64.0 / 0.5));
  for (const auto& c : checks) {
    const bool pass = std::abs(c.mean_z) < 4.0 && std::abs(c.var_z) < 4.0;
    ok = ok && pass;
    std::cout << (pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(24) << c.name
              << " mean z=" << std::setprecision(3) << c.mean_z << " var z=" << c.var_z << '\n';
  }

  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = dist::sample_inverse_gaussian({1.5, 2.0}, rng);
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = inverse_gaussian_cdf(xs[i], 1.5, 2.0);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  const double crit = 1.628 / std::sqrt(static_cast<double>(n));
  const bool ks_ok = d < crit;
  ok = ok && ks_ok;
  std::cout << (ks_ok ? "[PASS] " : "[FAIL] ") << "inverse-gaussian KS D=" << d << " (critical " << crit
            << ")\n";

  gibbs::GewekeConfig gc;
  gc.cycles = cycles;
  gc.seed = seed;
  const auto g = gibbs::geweke_joint_test(gc);
  for (std::size_t k = 0; k < g.names.size(); ++k)
    std::cout << "       geweke " << std::left << std::setw(10) << g.names[k] << " z=" << g.z_scores[k] << '\n';
  const bool g_ok = g.max_abs_z() < 4.0;
  ok = ok && g_ok;
  std::cout << (g_ok ? "[PASS] " : "[FAIL] ") << "geweke joint test max|z|=" << g.max_abs_z() << '\n';
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian robust regression with Laplace errors: sampler, baselines and benchmarks"};
  app.require_subcommand(1);

  auto* simulate = app.add_subcommand("simulate", "write a simulated dataset and its truth");
  Eigen::Index sim_n = 500;
  double sim_kappa = 0.3;
  std::uint64_t sim_seed = 1;
  fs::path sim_out;
  std::string sim_theta = "theta2-exp";
  env(simulate->add_option("--n", sim_n, "observations")->capture_default_str());
  env(simulate->add_option("--kappa", sim_kappa, "p / n")->capture_default_str());
  env(simulate->add_option("--seed", sim_seed)->capture_default_str());
  env(simulate->add_option("--theta-prior", sim_theta, "theta2-exp or theta-exp")->capture_default_str());
  env(simulate->add_option("--out", sim_out, "output directory")->required());

  auto* fit_bayes = app.add_subcommand("fit-bayes", "run the Gibbs sampler on a dataset");
  fs::path fb_data, fb_out;
  int fb_iters = 1000, fb_thin = 1;
  std::optional<int> fb_burn;
  std::uint64_t fb_seed = 1;
  std::optional<double> fb_kappa;
  std::optional<fs::path> fb_checkpoint, fb_resume;
  int fb_checkpoint_every = 0;
  env(fit_bayes->add_option("--data", fb_data, "dataset CSV (or .bin)")->required());
  env(fit_bayes->add_option("--iters", fb_iters)->capture_default_str());
  env(fit_bayes->add_option("--burn-in", fb_burn, "defaults to half of --iters"));
  env(fit_bayes->add_option("--thin", fb_thin)->capture_default_str());
  env(fit_bayes->add_option("--seed", fb_seed)->capture_default_str());
  env(fit_bayes->add_option("--kappa", fb_kappa, "kappa for the scaled prior; defaults to p / n"));
  env(fit_bayes->add_option("--checkpoint", fb_checkpoint, "checkpoint file"));
  env(fit_bayes->add_option("--checkpoint-every", fb_checkpoint_every)->capture_default_str());
  env(fit_bayes->add_option("--resume", fb_resume, "resume from this checkpoint"));
  env(fit_bayes->add_option("--out", fb_out, "output directory")->required());

  auto* fit_freq = app.add_subcommand("fit-freq", "fit a frequentist baseline");
  fs::path ff_data, ff_out;
  std::string ff_estimator;
  std::optional<double> ff_lambda;
  bool ff_cv = false;
  std::uint64_t ff_seed = 1;
  env(fit_freq->add_option("--data", ff_data)->required());
  env(fit_freq->add_option("--estimator", ff_estimator)
          ->required()
          ->check(CLI::IsMember({"ls", "lad", "lasso-ls", "lasso-lad", "ridge-ls", "ridge-lad"})));
  auto* lambda_opt = env(fit_freq->add_option("--lambda", ff_lambda));
  auto* cv_opt = env(fit_freq->add_flag("--cv", ff_cv, "choose lambda by 5-fold cross-validation"));
  lambda_opt->excludes(cv_opt);
  env(fit_freq->add_option("--seed", ff_seed, "fold assignment seed")->capture_default_str());
  env(fit_freq->add_option("--out", ff_out, "estimate CSV path or directory")->required());

  auto* benchmark = app.add_subcommand("benchmark", "run an experiment plan");
  fs::path bm_plan, bm_out;
  std::optional<int> bm_workers;
  std::optional<std::uint64_t> bm_seed;
  env(benchmark->add_option("--plan", bm_plan, "JSON plan")->required());
  env(benchmark->add_option("--workers", bm_workers));
  env(benchmark->add_option("--seed", bm_seed, "overrides the plan seed"));
  env(benchmark->add_option("--out", bm_out)->required());

  auto* contrast = app.add_subcommand("contrast", "LS versus Bayes error as n grows");
  double ct_kappa = 0.3;
  std::vector<Eigen::Index> ct_n{200, 800};
  int ct_reps = 50, ct_workers = 1, ct_iters = 1000;
  std::uint64_t ct_seed = 1;
  std::optional<fs::path> ct_out;
  env(contrast->add_option("--kappa", ct_kappa)->capture_default_str());
  env(contrast->add_option("--n-list", ct_n)->delimiter(',')->capture_default_str());
  env(contrast->add_option("--reps", ct_reps)->capture_default_str());
  env(contrast->add_option("--iters", ct_iters)->capture_default_str());
  env(contrast->add_option("--workers", ct_workers)->capture_default_str());
  env(contrast->add_option("--seed", ct_seed)->capture_default_str());
  env(contrast->add_option("--out", ct_out));

  auto* validate = app.add_subcommand("validate", "Geweke joint test and sampler moment checks");
  long v_cycles = 100000, v_samples = 200000;
  std::uint64_t v_seed = 20240917;
  env(validate->add_option("--cycles", v_cycles)->capture_default_str());
  env(validate->add_option("--samples", v_samples)->capture_default_str());
  env(validate->add_option("--seed", v_seed)->capture_default_str());

  CLI11_PARSE(app, argc, argv);

  try {
    if (*simulate) {
      auto design = sim::SimDesign::standard(sim_n, sim_kappa, RngStream(sim_seed, 0));
      design.theta_prior = parse_theta_prior(sim_theta);
      const Dataset data = sim::generate_dataset(design);
      ensure_dir(sim_out);
      io::write_dataset_csv(sim_out / "data.csv", data);
      io::write_json(sim_out / "truth.json", io::truth_to_json(*data.truth));
      std::cout << "wrote n=" << data.n() << " p=" << data.p() << " to " << sim_out << '\n';
    } else if (*fit_bayes) {
      const Dataset data = load_data(fb_data);
      const double kappa = fb_kappa.value_or(static_cast<double>(data.p()) / static_cast<double>(data.n()));
      const auto hyper = PriorHyperparams::scaled(data.n(), kappa);
      ensure_dir(fb_out);
      gibbs::ChainOptions options;
      options.checkpoint_path = fb_checkpoint;
      options.checkpoint_every = fb_checkpoint_every;
      GibbsConfig config;
      PosteriorDraws draws;
      if (fb_resume) {
        const auto ck = gibbs::load_checkpoint(*fb_resume);
        config = ck.config;
        draws = gibbs::resume_chain(data, ck.hyper, ck, options);
      } else {
        config = GibbsConfig::with_iterations(fb_iters, fb_seed, 0);
        if (fb_burn) config.burn_in = *fb_burn;
        config.thinning = fb_thin;
        draws = gibbs::run_chain(data, hyper, config, options);
      }
      io::write_json(fb_out / "posterior_summary.json", io::posterior_summary(draws, config, hyper));
      io::write_draws_csv(fb_out / "draws.csv", draws);
      io::write_estimate_csv(fb_out / "estimate.csv", draws.mean_beta());
      std::cout << "retained " << draws.size() << " draws; wrote " << fb_out << '\n';
    } else if (*fit_freq) {
      const Dataset data = load_data(ff_data);
      const auto est = bench::parse_estimator(ff_estimator);
      Eigen::VectorXd beta;
      if (est == bench::Estimator::ls) {
        beta = freq::fit_ls(data);
      } else if (est == bench::Estimator::lad) {
        beta = freq::fit_lad(data);
      } else {
        freq::PenaltySpec spec;
        spec.loss = (est == bench::Estimator::lasso_ls || est == bench::Estimator::ridge_ls)
                        ? freq::Loss::squared
                        : freq::Loss::absolute;
        spec.penalty = (est == bench::Estimator::lasso_ls || est == bench::Estimator::lasso_lad)
                           ? freq::Penalty::l1
                           : freq::Penalty::l2;
        if (ff_lambda) {
          spec.lambda = *ff_lambda;
          beta = freq::fit_penalized(data, spec);
        } else if (ff_cv) {
          RngStream rng(ff_seed, 0);
          const auto cv = freq::cross_validate(data, spec, freq::CvConfig{}, rng);
          beta = cv.beta;
          std::cout << "lambda=" << io::format_double(cv.lambda) << '\n';
        } else {
          throw ConfigError("penalized estimators need --lambda or --cv");
        }
      }
      fs::path target = ff_out;
      if (fs::is_directory(ff_out) || !ff_out.has_extension()) {
        ensure_dir(ff_out);
        target = ff_out / "estimate.csv";
      }
      io::write_estimate_csv(target, beta);
      std::cout << "wrote " << target << '\n';
    } else if (*benchmark) {
      auto plan = bench::ExperimentPlan::from_json(io::read_json(bm_plan));
      if (bm_workers) plan.workers = *bm_workers;
      if (bm_seed) plan.master_seed = *bm_seed;
      plan.validate();
      const auto result = bench::run_benchmark(plan, print_progress);
      bench::emit_report(result, plan, bm_out);
      std::cout << bench::format_table(result, plan, false);
    } else if (*contrast) {
      const auto r = bench::consistency_contrast(ct_kappa, ct_n, ct_reps, ct_seed, ct_workers, ct_iters,
                                                 print_progress);
      std::cout << std::left << std::setw(8) << "n" << std::setw(14) << "LS" << "Bayes\n";
      for (const auto& row : r.rows)
        std::cout << std::setw(8) << row.n << std::setw(14) << row.ls_median << row.bayes_median << '\n';
      std::cout << "LS relative change " << r.ls_relative_change << "; Bayes strictly decreasing: "
                << (r.bayes_strictly_decreasing ? "yes" : "no") << '\n';
      if (ct_out) {
        bench::ExperimentPlan plan;
        plan.n_list = ct_n;
        plan.kappa_list = {ct_kappa};
        plan.replications = ct_reps;
        plan.gibbs_iterations = {ct_iters};
        plan.estimators = {bench::Estimator::bayes, bench::Estimator::ls};
        plan.master_seed = ct_seed;
        plan.workers = ct_workers;
        bench::emit_report(r.raw, plan, *ct_out);
      }
    } else if (*validate) {
      return run_validate(v_cycles, v_samples, v_seed);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
