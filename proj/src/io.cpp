#include "rbreg/io.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "rbreg/errors.hpp"

namespace rbreg::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw IoError("failed to format number");
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw IoError("not a number: '" + std::string(text) + "'");
  return v;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, mode | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  return os;
}

}  // namespace

void write_dataset_csv(const fs::path& path, const Dataset& data) {
  auto os = open_out(path);
  os << 'y';
  for (Eigen::Index j = 1; j <= data.p(); ++j) os << ",x" << j;
  os << '\n';
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    os << format_double(data.Y[i]);
    for (Eigen::Index j = 0; j < data.p(); ++j) os << ',' << format_double(data.X(i, j));
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

Dataset read_dataset_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open dataset: " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw IoError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "y")
    throw IoError(path.string() + ": header must be y,x1,...,xp");
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "x" + std::to_string(j))
      throw IoError(path.string() + ": unexpected header column '" + std::string(header[j]) + "'");
  const std::size_t p = header.size() - 1;

  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != p + 1)
      throw IoError(path.string() + ": row " + std::to_string(rows + 2) + " has " +
                    std::to_string(fields.size()) + " fields, expected " + std::to_string(p + 1));
    try {
      for (auto f : fields) values.push_back(parse_double(f));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": row " + std::to_string(rows + 2) + ": " + e.what());
    }
    ++rows;
  }
  Dataset d;
  d.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(p));
  d.Y.resize(static_cast<Eigen::Index>(rows));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    d.Y[ii] = values[i * (p + 1)];
    for (std::size_t j = 0; j < p; ++j) d.X(ii, static_cast<Eigen::Index>(j)) = values[i * (p + 1) + j + 1];
  }
  return d;
}

namespace {
constexpr char kMatrixMagic[8] = {'R', 'B', 'M', 'A', 'T', 'R', 'I', 'X'};
constexpr std::uint32_t kMatrixVersion = 1;
}  // namespace

void write_matrix_binary(const fs::path& path, const Eigen::MatrixXd& m) {
  auto os = open_out(path, std::ios::binary);
  os.write(kMatrixMagic, sizeof kMatrixMagic);
  binary::put_u32(os, kMatrixVersion);
  binary::put_u64(os, static_cast<std::uint64_t>(m.rows()));
  binary::put_u64(os, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) binary::put_f64(os, m(i, j));
  if (!os) throw IoError("failed writing " + path.string());
}

Eigen::MatrixXd read_matrix_binary(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open matrix file: " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMatrixMagic, sizeof magic) != 0)
    throw IoError(path.string() + ": not a binary matrix container");
  const std::uint32_t version = binary::get_u32(is);
  if (version != kMatrixVersion)
    throw IoError(path.string() + ": unsupported matrix container version " + std::to_string(version));
  const std::uint64_t rows = binary::get_u64(is);
  const std::uint64_t cols = binary::get_u64(is);
  if (rows > (1ull << 31) || cols > (1ull << 31) || (cols > 0 && rows > (1ull << 34) / cols))
    throw IoError(path.string() + ": matrix dimensions are implausible");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = binary::get_f64(is);
  return m;
}

void write_dataset_binary(const fs::path& path, const Dataset& data) {
  Eigen::MatrixXd m(data.n(), data.p() + 1);
  m.col(0) = data.Y;
  m.rightCols(data.p()) = data.X;
  write_matrix_binary(path, m);
}

Dataset read_dataset_binary(const fs::path& path) {
  const Eigen::MatrixXd m = read_matrix_binary(path);
  if (m.cols() < 2) throw IoError(path.string() + ": dataset matrix needs at least two columns");
  Dataset d;
  d.Y = m.col(0);
  d.X = m.rightCols(m.cols() - 1);
  return d;
}

nlohmann::json truth_to_json(const Truth& t) {
  nlohmann::json j;
  j["beta"] = std::vector<double>(t.beta.data(), t.beta.data() + t.beta.size());
  j["theta"] = t.theta;
  std::vector<int> labels;
  labels.reserve(t.labels.size());
  for (Component c : t.labels) labels.push_back(static_cast<int>(c));
  j["labels"] = labels;
  j["phi_frac"] = t.phi_frac;
  j["delta1_sq"] = t.delta1_sq;
  j["delta2_sq"] = t.delta2_sq;
  return j;
}

Truth truth_from_json(const nlohmann::json& j) {
  Truth t;
  try {
    const auto beta = j.at("beta").get<std::vector<double>>();
    t.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    t.theta = j.at("theta").get<double>();
    if (j.contains("labels")) {
      for (int v : j.at("labels").get<std::vector<int>>()) {
        if (v != 1 && v != 2) throw IoError("truth labels must be 1 or 2");
        t.labels.push_back(static_cast<Component>(v));
      }
    }
    t.phi_frac = j.value("phi_frac", 0.0);
    t.delta1_sq = j.value("delta1_sq", 0.0);
    t.delta2_sq = j.value("delta2_sq", 0.0);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed truth document: ") + e.what());
  }
  return t;
}

void write_draws_csv(const fs::path& path, const PosteriorDraws& draws) {
  auto os = open_out(path);
  const Eigen::Index p = draws.states.empty() ? 0 : draws.states.front().beta.size();
  os << "draw,theta2,delta1_sq,delta2_sq,phi_frac,n_large";
  for (Eigen::Index j = 1; j <= p; ++j) os << ",beta" << j;
  os << '\n';
  for (std::size_t d = 0; d < draws.states.size(); ++d) {
    const auto& s = draws.states[d];
    os << d + 1 << ',' << format_double(s.theta2) << ',' << format_double(s.delta1_sq) << ','
       << format_double(s.delta2_sq) << ',' << format_double(s.phi_frac) << ',' << s.large_count();
    for (Eigen::Index j = 0; j < p; ++j) os << ',' << format_double(s.beta[j]);
    os << '\n';
  }
  if (!os) throw IoError("failed writing " + path.string());
}

namespace {
std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
}  // namespace

nlohmann::json posterior_summary(const PosteriorDraws& draws, const GibbsConfig& config,
                                 const PriorHyperparams& hyper,
                                 const std::vector<double>& quantile_probs) {
  nlohmann::json j;
  j["retained_draws"] = draws.size();
  j["posterior_mean"] = {
      {"beta", to_std(draws.mean_beta())},       {"theta2", draws.mean_theta2()},
      {"delta1_sq", draws.mean_delta1_sq()},     {"delta2_sq", draws.mean_delta2_sq()},
      {"phi_frac", draws.mean_phi_frac()},
  };
  const Eigen::MatrixXd q = draws.beta_quantiles(quantile_probs);
  nlohmann::json quantiles = nlohmann::json::array();
  for (std::size_t k = 0; k < quantile_probs.size(); ++k)
    quantiles.push_back({{"prob", quantile_probs[k]},
                         {"beta", to_std(q.col(static_cast<Eigen::Index>(k)))}});
  j["beta_quantiles"] = quantiles;
  j["inclusion_frequency"] = to_std(draws.inclusion_frequency());
  j["config"] = {
      {"total_iterations", config.total_iterations},
      {"burn_in", config.burn_in},
      {"thinning", config.thinning},
      {"seed", config.seed},
      {"stream", config.stream},
      {"theta_shape", config.theta_shape == ThetaShapeRule::joint ? "joint" : "half-n"},
  };
  j["hyperparameters"] = {
      {"alpha1", hyper.alpha1},       {"gamma1", hyper.gamma1},
      {"alpha2", hyper.alpha2},       {"gamma2", hyper.gamma2},
      {"alpha_phi", hyper.alpha_phi}, {"gamma_phi", hyper.gamma_phi},
      {"theta2_rate", hyper.theta2_rate},
  };
  return j;
}

void write_estimate_csv(const fs::path& path, const Eigen::VectorXd& beta) {
  auto os = open_out(path);
  os << "beta\n";
  for (Eigen::Index j = 0; j < beta.size(); ++j) os << format_double(beta[j]) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open JSON document: " + path.string());
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace rbreg::io
