#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "rbreg/checkpoint.hpp"
#include "rbreg/errors.hpp"
#include "rbreg/gibbs.hpp"
#include "rbreg/io.hpp"
#include "rbreg/simulate.hpp"

using namespace rbreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("rbreg_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

Dataset small_dataset(std::uint64_t seed = 1) {
  return sim::generate_dataset(sim::SimDesign::standard(60, 0.2, RngStream(seed, 0)));
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("double formatting round-trips exactly") {
  std::mt19937_64 gen(1);
  std::uniform_int_distribution<std::uint64_t> bits;
  for (int i = 0; i < 20000; ++i) {
    const double v = std::bit_cast<double>(bits(gen));
    if (!std::isfinite(v)) continue;
    REQUIRE(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(io::parse_double("1e-300") == 1e-300);
  CHECK(io::parse_double(" 2.5") == 2.5);
  CHECK_THROWS_AS(io::parse_double("abc"), IoError);
  CHECK_THROWS_AS(io::parse_double("1.5x"), IoError);
}

TEST_CASE("dataset csv round trip") {
  TempDir dir;
  const Dataset d = small_dataset();
  io::write_dataset_csv(dir.path / "d.csv", d);
  std::ifstream is(dir.path / "d.csv");
  std::string header;
  std::getline(is, header);
  CHECK(header.rfind("y,x1,x2,", 0) == 0);
  const Dataset back = io::read_dataset_csv(dir.path / "d.csv");
  CHECK(back.X == d.X);
  CHECK(back.Y == d.Y);
  CHECK_FALSE(back.truth.has_value());
}

TEST_CASE("malformed csv reports the row") {
  TempDir dir;
  write_text(dir.path / "bad.csv", "y,x1\n1,2\n3\n");
  try {
    io::read_dataset_csv(dir.path / "bad.csv");
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  write_text(dir.path / "bad2.csv", "y,x1\n1,zz\n");
  CHECK_THROWS_AS(io::read_dataset_csv(dir.path / "bad2.csv"), IoError);
  write_text(dir.path / "bad3.csv", "a,b\n1,2\n");
  CHECK_THROWS_AS(io::read_dataset_csv(dir.path / "bad3.csv"), IoError);
  CHECK_THROWS_AS(io::read_dataset_csv(dir.path / "missing.csv"), IoError);
}

TEST_CASE("binary matrix and dataset round trip") {
  TempDir dir;
  Eigen::MatrixXd m(3, 2);
  m << 1, -0.0, 1e-310, 4, std::numeric_limits<double>::max(), -7.25;
  io::write_matrix_binary(dir.path / "m.bin", m);
  CHECK(io::read_matrix_binary(dir.path / "m.bin") == m);

  const Dataset d = small_dataset(2);
  io::write_dataset_binary(dir.path / "d.bin", d);
  const Dataset back = io::read_dataset_binary(dir.path / "d.bin");
  CHECK(back.X == d.X);
  CHECK(back.Y == d.Y);

  write_text(dir.path / "junk.bin", "NOTAMATRIXFILE......");
  CHECK_THROWS_AS(io::read_matrix_binary(dir.path / "junk.bin"), IoError);
}

TEST_CASE("truth json round trip") {
  const Dataset d = small_dataset(3);
  const Truth back = io::truth_from_json(io::truth_to_json(*d.truth));
  CHECK(back.beta == d.truth->beta);
  CHECK(back.theta == d.truth->theta);
  CHECK(back.labels == d.truth->labels);
  CHECK(back.phi_frac == d.truth->phi_frac);
  CHECK_THROWS_AS(io::truth_from_json(nlohmann::json{{"beta", "x"}}), IoError);
}

TEST_CASE("state binary encoding is bit exact") {
  const Dataset d = small_dataset(4);
  GibbsState s = gibbs::initial_state(d, PriorHyperparams::scaled(d.n(), 0.2));
  s.beta[0] = -0.0;
  s.sigma2[1] = 5e-324;
  std::stringstream ss;
  write_state(ss, s);
  const GibbsState back = read_state(ss);
  CHECK(back == s);
  CHECK(std::signbit(back.beta[0]));
}

TEST_CASE("posterior summary and draw log") {
  TempDir dir;
  const Dataset d = small_dataset(5);
  const auto hyper = PriorHyperparams::scaled(d.n(), 0.2);
  auto config = GibbsConfig::with_iterations(40, 9, 0);
  config.thinning = 3;
  gibbs::ChainOptions opt;
  opt.draw_log_path = dir.path / "draws.csv";
  const auto draws = gibbs::run_chain(d, hyper, config, opt);
  REQUIRE(draws.size() == 6u);

  const auto j = io::posterior_summary(draws, config, hyper);
  CHECK(j.at("retained_draws") == 6);
  CHECK(j.at("posterior_mean").at("beta").size() == static_cast<std::size_t>(d.p()));
  CHECK(j.at("beta_quantiles").size() == 3u);
  CHECK(j.at("inclusion_frequency").size() == static_cast<std::size_t>(d.p()));
  CHECK(j.at("config").at("burn_in") == 20);

  std::ifstream is(*opt.draw_log_path);
  std::string line;
  int rows = -1;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 6);

  io::write_draws_csv(dir.path / "d2.csv", draws);
  io::write_estimate_csv(dir.path / "est.csv", draws.mean_beta());
  std::ifstream est(dir.path / "est.csv");
  std::getline(est, line);
  CHECK(line == "beta");
  std::getline(est, line);
  CHECK(io::parse_double(line) == draws.mean_beta()[0]);
}

TEST_CASE("checkpoint resume is bit identical to an uninterrupted run") {
  TempDir dir;
  const Dataset d = small_dataset(6);
  const auto hyper = PriorHyperparams::scaled(d.n(), 0.2);
  const auto config = GibbsConfig::with_iterations(50, 77, 1);

  const auto full = gibbs::run_chain(d, hyper, config);

  gibbs::ChainOptions opt;
  opt.checkpoint_path = dir.path / "chain.ckpt";
  opt.checkpoint_every = 15;
  gibbs::run_chain(d, hyper, config, opt);
  const auto ck = gibbs::load_checkpoint(*opt.checkpoint_path);
  CHECK(ck.completed_iterations == 45);
  CHECK(ck.retained.size() == 20u);
  CHECK(ck.config.seed == 77u);

  gibbs::ChainOptions resume_opt;
  resume_opt.draw_log_path = dir.path / "resumed.csv";
  const auto resumed = gibbs::resume_chain(d, hyper, ck, resume_opt);
  REQUIRE(resumed.size() == full.size());
  for (std::size_t k = 0; k < full.size(); ++k) CHECK(resumed.states[k] == full.states[k]);

  // Resuming from an early checkpoint, before burn-in ends.
  gibbs::ChainOptions early;
  early.checkpoint_path = dir.path / "early.ckpt";
  early.checkpoint_every = 10;
  auto short_config = config;
  short_config.total_iterations = 11;
  short_config.burn_in = 5;
  gibbs::run_chain(d, hyper, short_config, early);
  auto ck_early = gibbs::load_checkpoint(*early.checkpoint_path);
  CHECK(ck_early.completed_iterations == 10);
  ck_early.config = config;
  ck_early.retained.clear();
  const auto from_early = gibbs::resume_chain(d, hyper, ck_early);
  CHECK(from_early.states.back() == full.states.back());
}

TEST_CASE("checkpoint validation") {
  TempDir dir;
  write_text(dir.path / "x.ckpt", "RBCHKPT");
  CHECK_THROWS_AS(gibbs::load_checkpoint(dir.path / "x.ckpt"), IoError);
  write_text(dir.path / "y.ckpt", std::string("RBCHKPT\0", 8) + std::string("\x09\0\0\0", 4));
  CHECK_THROWS_AS(gibbs::load_checkpoint(dir.path / "y.ckpt"), IoError);
  CHECK_THROWS_AS(gibbs::load_checkpoint(dir.path / "none.ckpt"), IoError);

  const Dataset d = small_dataset(7);
  const Dataset other = sim::generate_dataset(sim::SimDesign::standard(80, 0.2, RngStream(1, 0)));
  gibbs::ChainOptions opt;
  opt.checkpoint_path = dir.path / "c.ckpt";
  opt.checkpoint_every = 5;
  const auto hyper = PriorHyperparams::scaled(d.n(), 0.2);
  gibbs::run_chain(d, hyper, GibbsConfig::with_iterations(10, 1, 0), opt);
  const auto ck = gibbs::load_checkpoint(*opt.checkpoint_path);
  CHECK_THROWS_AS(gibbs::resume_chain(other, hyper, ck), DimensionError);
}
