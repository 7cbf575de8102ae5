#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mesp/instance.hpp"
#include "mesp/relaxations.hpp"
#include "mesp/solvers.hpp"

namespace mesp {

enum class OutputFormat { Table, Csv, Json };

struct RunSpec {
  std::optional<MatrixFile> instance_file;
  std::optional<SyntheticSpec> synthetic;
  std::vector<int> s_list;
  std::vector<Method> methods;
  SolverConfig solver;
  OutputFormat format = OutputFormat::Table;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> optima;
  int workers = 0;  // 0: hardware concurrency

  void validate(int d) const;
};

struct BoundRow {
  std::string method;
  int s = 0;
  double lb = 0.0;
  std::optional<double> gap;
  double conv = 0.0;
  double time_s = 0.0;
  int iters = 0;
  std::optional<std::string> error;  // not exported; set when the solve failed
};

/// Instance described by the spec with s = s_list.front(); loading is not
/// timed.
Instance load_run_instance(const RunSpec& spec);

/// One row per (method, s), ordered by method list then s list. Failures are
/// reported in-row.
std::vector<BoundRow> run_bound(const Instance& base, const std::vector<int>& s_list,
                                const std::vector<Method>& methods, const SolverConfig& cfg,
                                const std::map<int, double>& optima = {}, int workers = 0);

enum class VerifyStatus { Pass, Fail, Logged };

struct VerifyLine {
  int s = 0;
  std::string relation;
  double lhs = 0.0;
  double rhs = 0.0;
  VerifyStatus status = VerifyStatus::Pass;
};

struct VerifyReport {
  std::vector<BoundRow> rows;
  std::vector<VerifyLine> lines;
  std::optional<double> opt;  // brute-force optimum of the last s, when enumerable

  bool any_fail() const;
};

inline constexpr double kDominanceTol = 1e-3;
inline constexpr double kValidityTol = 1e-6;

/// Solves all nine methods for every s and checks the hierarchy, dominance,
/// invariance and integrality-gap relations.
VerifyReport run_verify(const Instance& base, const std::vector<int>& s_list,
                        const SolverConfig& cfg, double tol = kDominanceTol, int workers = 0);

std::string_view to_string(VerifyStatus status);

inline constexpr const char* kCsvHeader = "method,s,lb,gap,conv,time_s,iters";

void write_csv(std::ostream& out, const std::vector<BoundRow>& rows);
void write_json(std::ostream& out, const std::vector<BoundRow>& rows);
void write_table(std::ostream& out, const std::vector<BoundRow>& rows);
std::vector<BoundRow> read_csv(std::istream& in);

/// Writes rows in the given format to a file. Throws IoError.
void export_rows(const std::vector<BoundRow>& rows, OutputFormat format,
                 const std::filesystem::path& path);

void write_verify(std::ostream& out, const VerifyReport& report, OutputFormat format);

}  // namespace mesp
