#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "rbreg/model.hpp"

namespace rbreg::io {

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Dataset CSV: header `y,x1,...,xp`, one observation per row.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_csv(const std::filesystem::path& path);

// Binary matrix container: magic "RBMATRIX", u32 version, u64 rows, u64 cols,
// then rows*cols little-endian doubles in column-major order.
void write_matrix_binary(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_binary(const std::filesystem::path& path);

// Dataset as one binary matrix [Y | X].
void write_dataset_binary(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset_binary(const std::filesystem::path& path);

// Truth sidecar: {"beta": [...], "theta": t, "labels": [1|2,...], "phi_frac", "delta1_sq", "delta2_sq"}.
nlohmann::json truth_to_json(const Truth& truth);
Truth truth_from_json(const nlohmann::json& j);

// One CSV row per retained draw: theta2, delta1_sq, delta2_sq, phi_frac, n_large, beta1..betap.
void write_draws_csv(const std::filesystem::path& path, const PosteriorDraws& draws);

// Posterior means, quantiles and inclusion frequencies with a config echo.
nlohmann::json posterior_summary(const PosteriorDraws& draws, const GibbsConfig& config,
                                 const PriorHyperparams& hyper,
                                 const std::vector<double>& quantile_probs = {0.025, 0.5, 0.975});

// Single-column estimate file: header `beta`, one coefficient per line.
void write_estimate_csv(const std::filesystem::path& path, const Eigen::VectorXd& beta);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace rbreg::io
