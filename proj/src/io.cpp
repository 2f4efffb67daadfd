#include "glsure/io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <vector>

#include "glsure/errors.hpp"

namespace glsure::io {

namespace {

bool parse_row(const std::string& line, std::vector<double>& row) {
  row.clear();
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t pos = 0;
    double value = 0;
    try {
      value = std::stod(cell, &pos);
    } catch (const std::exception&) {
      return false;
    }
    while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) {
      ++pos;
    }
    if (pos != cell.size()) return false;
    row.push_back(value);
  }
  return !row.empty();
}

bool blank(const std::string& line) {
  for (char c : line) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

Eigen::MatrixXd read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank(line)) continue;
    std::vector<double> row;
    if (!parse_row(line, row)) {
      if (first_content) {  // header
        first_content = false;
        continue;
      }
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": cannot parse CSV row");
    }
    first_content = false;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": inconsistent column count");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no numeric rows");
  Eigen::MatrixXd out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return out;
}

Eigen::VectorXd read_csv_vector(const std::string& path) {
  const Eigen::MatrixXd m = read_csv_matrix(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw IoError(path + ": expected a single row or column");
}

void write_csv(const std::string& path, const Eigen::MatrixXd& matrix) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      if (j) out << ',';
      out << matrix(i, j);
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

BlockPartition partition_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw IoError("partition: expected an array of arrays");
  std::vector<std::vector<int>> blocks;
  for (const auto& jb : j) {
    if (!jb.is_array()) throw IoError("partition: expected an array of arrays");
    std::vector<int> block;
    for (const auto& idx : jb) {
      if (!idx.is_number_integer()) {
        throw IoError("partition: indices must be integers");
      }
      block.push_back(idx.get<int>());
    }
    blocks.push_back(std::move(block));
  }
  try {
    return BlockPartition(std::move(blocks));
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("partition: ") + e.what());
  }
}

BlockPartition read_partition_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return partition_from_json(j);
}

nlohmann::json partition_to_json(const BlockPartition& partition) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& block : partition.blocks()) j.push_back(block);
  return j;
}

GroupLassoProblem read_problem_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  for (const char* key : {"lambda", "partition", "x_path", "y_path"}) {
    if (!j.contains(key)) {
      throw IoError(path + ": missing key '" + key + "'");
    }
  }
  BlockPartition partition = partition_from_json(j["partition"]);
  const Eigen::MatrixXd X = read_csv_matrix(j["x_path"].get<std::string>());
  const Eigen::VectorXd y = read_csv_vector(j["y_path"].get<std::string>());
  try {
    return GroupLassoProblem(y, X, std::move(partition),
                             j["lambda"].get<double>());
  } catch (const std::invalid_argument& e) {
    throw IoError(path + ": " + e.what());
  }
}

namespace {

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    j.push_back(std::move(row));
  }
  return j;
}

}  // namespace

nlohmann::json solution_to_json(const GroupLassoSolution& solution) {
  return {{"beta", vector_to_json(solution.beta)},
          {"support_blocks", solution.support.active},
          {"support_size", solution.support.size},
          {"kkt_residual", solution.kkt_residual},
          {"objective", solution.objective},
          {"iterations", solution.iterations},
          {"purification_steps", solution.purification_steps}};
}

nlohmann::json report_to_json(const SensitivityReport& report,
                              bool include_jacobian) {
  nlohmann::json j{
      {"support_blocks", report.support.active},
      {"support_size", report.support.size},
      {"dof", report.dof},
      {"sure", report.sure},
      {"sigma", report.sigma},
      {"mu_hat", vector_to_json(report.mu_hat)},
      {"system_residual", report.system_residual},
      {"reliability",
       {{"u_norm", report.reliability.u_norm},
        {"bound", report.reliability.bound}}},
      {"degeneracy_flags",
       {{"images_independent", report.flags.images_independent},
        {"min_singular_value", report.flags.min_singular_value},
        {"condition_number", report.flags.condition_number},
        {"ill_conditioned", report.flags.ill_conditioned},
        {"near_tie", report.flags.near_tie},
        {"warning", report.flags.warning()}}}};
  if (include_jacobian) j["jacobian"] = matrix_to_json(report.jacobian);
  return j;
}

nlohmann::json mc_report_to_json(const McReport& report) {
  return {{"lambda", report.lambda},
          {"replicates", report.replicates},
          {"included", report.included},
          {"degenerate_count", report.degenerate_count},
          {"purified_count", report.purified_count},
          {"dof_formula_mean", report.dof_formula_mean},
          {"dof_formula_se", report.dof_formula_se},
          {"dof_covariance_mean", report.dof_covariance_mean},
          {"dof_covariance_se", report.dof_covariance_se},
          {"sure_mean", report.sure_mean},
          {"sure_se", report.sure_se},
          {"se_true_mean", report.se_true_mean},
          {"se_true_se", report.se_true_se},
          {"u_norm_sq_mean", report.u_norm_sq_mean},
          {"reliability_lhs", report.reliability_lhs},
          {"reliability_bound", report.reliability_bound},
          {"n", report.n},
          {"sigma", report.sigma},
          {"mu0_sqnorm", report.mu0_sqnorm},
          {"seed", report.seed}};
}

nlohmann::json selection_to_json(const LambdaSelection& selection) {
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& point : selection.curve) {
    curve.push_back({{"lambda", point.lambda},
                     {"sure", point.sure_value},
                     {"dof", point.dof},
                     {"degenerate", point.degenerate}});
  }
  return {{"best_lambda", selection.best_lambda},
          {"best_index", selection.best_index},
          {"curve", std::move(curve)}};
}

nlohmann::json fd_result_to_json(const FdResult& result) {
  return {{"divergence", result.divergence},
          {"support_stable", result.support_stable()},
          {"unstable_coordinates", result.unstable_coordinates}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace glsure::io
