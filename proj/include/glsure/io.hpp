#pragma once

#include <string>

#include <Eigen/Core>

#include "json.hpp"

#include "glsure/block.hpp"
#include "glsure/harness.hpp"
#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

namespace glsure::io {

// CSV: comma-separated doubles, one matrix row per line; a non-numeric first
// line is treated as a header and skipped. Vectors accept a single column or
// a single row. All failures raise IoError.
Eigen::MatrixXd read_csv_matrix(const std::string& path);
Eigen::VectorXd read_csv_vector(const std::string& path);
void write_csv(const std::string& path, const Eigen::MatrixXd& matrix);

// Partition: JSON array of integer arrays, e.g. [[0,1],[2,3,4]].
BlockPartition read_partition_json(const std::string& path);
nlohmann::json partition_to_json(const BlockPartition& partition);
BlockPartition partition_from_json(const nlohmann::json& j);

// Problem descriptor: {"lambda": .., "partition": [[..]], "x_path": ..,
// "y_path": ..}; paths are resolved as given.
GroupLassoProblem read_problem_json(const std::string& path);

nlohmann::json solution_to_json(const GroupLassoSolution& solution);
nlohmann::json report_to_json(const SensitivityReport& report,
                              bool include_jacobian = true);
nlohmann::json mc_report_to_json(const McReport& report);
nlohmann::json selection_to_json(const LambdaSelection& selection);
nlohmann::json fd_result_to_json(const FdResult& result);

void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace glsure::io
