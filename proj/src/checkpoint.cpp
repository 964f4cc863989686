#include "rbreg/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "binary_io.hpp"
#include "rbreg/errors.hpp"

namespace rbreg {

namespace {

constexpr char kMagic[8] = {'R', 'B', 'C', 'H', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kMaxLength = std::uint64_t{1} << 32;

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  binary::put_u64(os, static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) binary::put_f64(os, v[i]);
}

Eigen::VectorXd get_vector(std::istream& is) {
  const std::uint64_t len = binary::get_u64(is);
  if (len > kMaxLength) throw IoError("vector length in binary stream is implausible");
  Eigen::VectorXd v(static_cast<Eigen::Index>(len));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = binary::get_f64(is);
  return v;
}

}  // namespace

void write_state(std::ostream& os, const GibbsState& s) {
  put_vector(os, s.beta);
  binary::put_u64(os, s.labels.size());
  for (Component c : s.labels) os.put(static_cast<char>(c));
  put_vector(os, s.sigma2);
  binary::put_f64(os, s.theta2);
  binary::put_f64(os, s.delta1_sq);
  binary::put_f64(os, s.delta2_sq);
  binary::put_f64(os, s.phi_frac);
}

GibbsState read_state(std::istream& is) {
  GibbsState s;
  s.beta = get_vector(is);
  const std::uint64_t n_labels = binary::get_u64(is);
  if (n_labels != static_cast<std::uint64_t>(s.beta.size()))
    throw IoError("label count does not match beta length");
  s.labels.resize(n_labels);
  for (auto& c : s.labels) {
    const int raw = is.get();
    if (raw != 1 && raw != 2) throw IoError("invalid mixture label in binary stream");
    c = static_cast<Component>(raw);
  }
  s.sigma2 = get_vector(is);
  s.theta2 = binary::get_f64(is);
  s.delta1_sq = binary::get_f64(is);
  s.delta2_sq = binary::get_f64(is);
  s.phi_frac = binary::get_f64(is);
  return s;
}

namespace gibbs {

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& cp) {
  // Write to a sibling file first so a crash never leaves a torn checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open checkpoint for writing: " + tmp.string());
    os.write(kMagic, sizeof kMagic);
    binary::put_u32(os, Checkpoint::kVersion);

    const auto& c = cp.config;
    binary::put_u64(os, static_cast<std::uint64_t>(c.total_iterations));
    binary::put_u64(os, static_cast<std::uint64_t>(c.burn_in));
    binary::put_u64(os, static_cast<std::uint64_t>(c.thinning));
    binary::put_u64(os, c.seed);
    binary::put_u64(os, c.stream);
    binary::put_u32(os, static_cast<std::uint32_t>(c.theta_shape));

    const auto& h = cp.hyper;
    for (double v : {h.alpha1, h.gamma1, h.alpha2, h.gamma2, h.alpha_phi, h.gamma_phi, h.theta2_rate})
      binary::put_f64(os, v);

    binary::put_u64(os, static_cast<std::uint64_t>(cp.completed_iterations));
    binary::put_string(os, cp.rng_state);
    write_state(os, cp.state);
    binary::put_u64(os, cp.retained.size());
    for (const auto& s : cp.retained) write_state(os, s);
    if (!os) throw IoError("failed writing checkpoint: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw IoError("not a chain checkpoint: " + path.string());
  const std::uint32_t version = binary::get_u32(is);
  if (version != Checkpoint::kVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint cp;
  auto& c = cp.config;
  c.total_iterations = static_cast<int>(binary::get_u64(is));
  c.burn_in = static_cast<int>(binary::get_u64(is));
  c.thinning = static_cast<int>(binary::get_u64(is));
  c.seed = binary::get_u64(is);
  c.stream = binary::get_u64(is);
  const std::uint32_t rule = binary::get_u32(is);
  if (rule > 1) throw IoError("invalid theta-shape rule in checkpoint");
  c.theta_shape = static_cast<ThetaShapeRule>(rule);

  auto& h = cp.hyper;
  for (double* v : {&h.alpha1, &h.gamma1, &h.alpha2, &h.gamma2, &h.alpha_phi, &h.gamma_phi,
                    &h.theta2_rate})
    *v = binary::get_f64(is);

  cp.completed_iterations = static_cast<int>(binary::get_u64(is));
  cp.rng_state = binary::get_string(is);
  cp.state = read_state(is);
  const std::uint64_t kept = binary::get_u64(is);
  if (kept > static_cast<std::uint64_t>(c.total_iterations))
    throw IoError("retained-draw count in checkpoint is implausible");
  cp.retained.reserve(kept);
  for (std::uint64_t k = 0; k < kept; ++k) cp.retained.push_back(read_state(is));
  return cp;
}

}  // namespace gibbs
}  // namespace rbreg
