#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <Eigen/Dense>

#include "glsure/errors.hpp"
#include "glsure/io.hpp"
#include "glsure/rng.hpp"
#include "glsure/sensitivity.hpp"
#include "glsure/solver.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("glsure_io_test_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("csv matrix round trip is exact") {
  TempDir dir;
  glsure::NormalSampler rng(601);
  const Eigen::MatrixXd m = rng.matrix(5, 7);
  glsure::io::write_csv(dir.file("m.csv"), m);
  const Eigen::MatrixXd back = glsure::io::read_csv_matrix(dir.file("m.csv"));
  CHECK((m - back).norm() == 0.0);
}

TEST_CASE("csv header, vectors and errors") {
  TempDir dir;
  {
    std::ofstream out(dir.file("h.csv"));
    out << "a,b,c\n1,2,3\n4,5,6\n";
  }
  const Eigen::MatrixXd m = glsure::io::read_csv_matrix(dir.file("h.csv"));
  CHECK(m.rows() == 2);
  CHECK(m(1, 2) == 6.0);

  {
    std::ofstream out(dir.file("col.csv"));
    out << "1\n2\n3\n";
  }
  const Eigen::VectorXd col = glsure::io::read_csv_vector(dir.file("col.csv"));
  CHECK(col.size() == 3);

  {
    std::ofstream out(dir.file("row.csv"));
    out << "1,2,3,4\n";
  }
  const Eigen::VectorXd row = glsure::io::read_csv_vector(dir.file("row.csv"));
  CHECK(row.size() == 4);

  {
    std::ofstream out(dir.file("bad.csv"));
    out << "1,2\n3,oops\n";
  }
  CHECK_THROWS_AS(glsure::io::read_csv_matrix(dir.file("bad.csv")),
                  glsure::IoError);
  {
    std::ofstream out(dir.file("ragged.csv"));
    out << "1,2\n3\n";
  }
  CHECK_THROWS_AS(glsure::io::read_csv_matrix(dir.file("ragged.csv")),
                  glsure::IoError);
  CHECK_THROWS_AS(glsure::io::read_csv_matrix(dir.file("missing.csv")),
                  glsure::IoError);
  {
    std::ofstream out(dir.file("mat.csv"));
    out << "1,2\n3,4\n";
  }
  CHECK_THROWS_AS(glsure::io::read_csv_vector(dir.file("mat.csv")),
                  glsure::IoError);
}

TEST_CASE("partition json round trip and validation") {
  TempDir dir;
  const glsure::BlockPartition part({{0, 1}, {2, 3, 4}});
  glsure::io::write_json(dir.file("p.json"),
                         glsure::io::partition_to_json(part));
  const auto back = glsure::io::read_partition_json(dir.file("p.json"));
  CHECK(back == part);

  {
    std::ofstream out(dir.file("overlap.json"));
    out << "[[0,1],[1,2]]";
  }
  CHECK_THROWS_AS(glsure::io::read_partition_json(dir.file("overlap.json")),
                  glsure::IoError);
  {
    std::ofstream out(dir.file("notjson.json"));
    out << "{{{";
  }
  CHECK_THROWS_AS(glsure::io::read_partition_json(dir.file("notjson.json")),
                  glsure::IoError);
}

TEST_CASE("problem descriptor round trip drives a solve") {
  TempDir dir;
  glsure::NormalSampler rng(603);
  const Eigen::MatrixXd X = rng.matrix(5, 4);
  const Eigen::VectorXd y = rng.vector(5);
  glsure::io::write_csv(dir.file("x.csv"), X);
  glsure::io::write_csv(dir.file("y.csv"), y);
  nlohmann::json desc{{"lambda", 0.4},
                      {"partition", nlohmann::json::array({{0, 1}, {2, 3}})},
                      {"x_path", dir.file("x.csv")},
                      {"y_path", dir.file("y.csv")}};
  glsure::io::write_json(dir.file("problem.json"), desc);

  const auto problem = glsure::io::read_problem_json(dir.file("problem.json"));
  CHECK(problem.lambda == 0.4);
  CHECK(problem.n() == 5);
  CHECK(problem.p() == 4);
  const auto solution = glsure::solve(problem);
  CHECK(solution.kkt_residual <= 1e-8);

  nlohmann::json missing{{"lambda", 0.4}};
  glsure::io::write_json(dir.file("missing.json"), missing);
  CHECK_THROWS_AS(glsure::io::read_problem_json(dir.file("missing.json")),
                  glsure::IoError);
}

TEST_CASE("solution and report serialization carry the required fields") {
  glsure::NormalSampler rng(605);
  const auto part = glsure::BlockPartition::contiguous({2, 2});
  const Eigen::VectorXd y = 2.0 * rng.vector(4);
  const auto problem =
      glsure::GroupLassoProblem::identity_design(y, part, 0.5);
  const auto solution = glsure::solve(problem);
  const auto sj = glsure::io::solution_to_json(solution);
  for (const char* key : {"beta", "support_blocks", "kkt_residual", "objective",
                          "purification_steps"}) {
    CHECK(sj.contains(key));
  }

  const auto report = glsure::analyze(problem, solution, 0.5, 1.0);
  const auto rj = glsure::io::report_to_json(report);
  for (const char* key : {"support_blocks", "dof", "sure", "mu_hat",
                          "jacobian", "reliability", "degeneracy_flags",
                          "system_residual"}) {
    CHECK(rj.contains(key));
  }
  CHECK(rj["degeneracy_flags"].contains("images_independent"));
  CHECK(rj["degeneracy_flags"].contains("condition_number"));
  CHECK(rj["reliability"].contains("u_norm"));
  CHECK(rj["reliability"].contains("bound"));

  const auto without = glsure::io::report_to_json(report, false);
  CHECK(!without.contains("jacobian"));
}
