#include "mesp/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mesp/error.hpp"

namespace mesp {

void RunSpec::validate(int d) const {
  if (methods.empty()) throw MespError(ErrorCode::BadArgument, "method list is empty");
  if (s_list.empty()) throw MespError(ErrorCode::BadArgument, "s list is empty");
  for (int s : s_list) {
    if (s < 1 || s > d) {
      throw MespError(ErrorCode::OutOfRange,
                      "s = " + std::to_string(s) + " outside [1, " + std::to_string(d) + "]");
    }
  }
  solver.validate();
}

Instance load_run_instance(const RunSpec& spec) {
  if (spec.s_list.empty()) throw MespError(ErrorCode::BadArgument, "s list is empty");
  if (spec.instance_file.has_value() == spec.synthetic.has_value()) {
    throw MespError(ErrorCode::BadArgument, "give exactly one of an instance file or a synthetic spec");
  }
  const int s0 = spec.s_list.front();
  if (spec.instance_file) return load_instance(*spec.instance_file, s0);
  return synthetic_instance(*spec.synthetic, s0);
}

namespace {

BoundRow error_row(Method m, int s, const std::string& what) {
  BoundRow row;
  row.method = std::string(method_name(m));
  row.s = s;
  row.lb = std::numeric_limits<double>::quiet_NaN();
  row.conv = std::numeric_limits<double>::quiet_NaN();
  row.error = what;
  return row;
}

BoundRow solve_row(const Instance& base, Method m, int s, const SolverConfig& cfg,
                   const std::map<int, double>& optima) {
  try {
    std::optional<double> opt;
    if (auto it = optima.find(s); it != optima.end()) opt = it->second;
    const Instance inst = base.with_s(s).with_known_opt(opt);
    const BoundReport rep = solve_bound(inst, m, cfg);
    BoundRow row;
    row.method = std::string(method_name(m));
    row.s = s;
    row.lb = rep.lower_bound;
    row.gap = rep.gap;
    row.conv = rep.conv_metric;
    row.time_s = rep.wall_time_s;
    row.iters = rep.iterations;
    if (!std::isfinite(row.lb)) row.error = "non-finite bound";
    return row;
  } catch (const std::exception& e) {
    return error_row(m, s, e.what());
  }
}

}  // namespace

std::vector<BoundRow> run_bound(const Instance& base, const std::vector<int>& s_list,
                                const std::vector<Method>& methods, const SolverConfig& cfg,
                                const std::map<int, double>& optima, int workers) {
  struct Task {
    Method m;
    int s;
  };
  std::vector<Task> tasks;
  for (Method m : methods) {
    for (int s : s_list) tasks.push_back({m, s});
  }
  std::vector<BoundRow> rows(tasks.size());

  int n = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
  n = std::clamp(n, 1, std::max<int>(1, static_cast<int>(tasks.size())));
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      rows[i] = solve_row(base, tasks[i].m, tasks[i].s, cfg, optima);
    }
  };
  if (n == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

bool VerifyReport::any_fail() const {
  return std::any_of(lines.begin(), lines.end(),
                     [](const VerifyLine& l) { return l.status == VerifyStatus::Fail; });
}

std::string_view to_string(VerifyStatus status) {
  switch (status) {
    case VerifyStatus::Pass: return "PASS";
    case VerifyStatus::Fail: return "FAIL";
    case VerifyStatus::Logged: return "LOGGED";
  }
  return "?";
}

VerifyReport run_verify(const Instance& base, const std::vector<int>& s_list,
                        const SolverConfig& cfg, double tol, int workers) {
  const std::vector<Method> methods(kAllMethods.begin(), kAllMethods.end());
  VerifyReport rep;
  rep.rows = run_bound(base, s_list, methods, cfg, {}, workers);

  for (int s : s_list) {
    std::map<std::string, const BoundRow*> by;
    for (const BoundRow& r : rep.rows) {
      if (r.s == s) by[r.method] = &r;
    }
    const auto lb = [&](const char* m) {
      const BoundRow* r = by.at(m);
      return r->error ? std::numeric_limits<double>::quiet_NaN() : r->lb;
    };
    const auto ge = [&](std::string rel, double lhs, double rhs, double slack) {
      const bool ok = std::isfinite(lhs) && std::isfinite(rhs) && lhs >= rhs - slack;
      rep.lines.push_back({s, std::move(rel), lhs, rhs, ok ? VerifyStatus::Pass : VerifyStatus::Fail});
    };

    ge("linx-d >= linx-g", lb("linx-d"), lb("linx-g"), tol);
    ge("linx-g >= linx-o", lb("linx-g"), lb("linx-o"), tol);
    ge("linx-o >= linx", lb("linx-o"), lb("linx"), tol);
    const bool has_complement = s < base.d();
    if (has_complement) {
      ge("linx-o >= (gamma + gamma-c)/2", lb("linx-o"), 0.5 * (lb("gamma") + lb("gamma-c")), tol);
      ge("linx-d >= (gamma-g + gamma-c-g)/2", lb("linx-d"),
         0.5 * (lb("gamma-g") + lb("gamma-c-g")), tol);
      const double half = 0.5 * (lb("gamma-g") + lb("gamma-c-g"));
      rep.lines.push_back({s, "linx-g vs (gamma-g + gamma-c-g)/2", lb("linx-g"), half,
                           VerifyStatus::Logged});
    }
    {
      const double a = lb("gamma-g"), b = lb("gamma");
      const bool ok = std::isfinite(a) && std::isfinite(b) && std::abs(a - b) <= tol;
      rep.lines.push_back({s, "|gamma-g - gamma| <= tol", a, b,
                           ok ? VerifyStatus::Pass : VerifyStatus::Fail});
    }

    if (log_binomial(base.d(), s) <= std::log(kMaxEnumeration)) {
      const double opt = brute_force_opt(base.with_s(s)).opt_value;
      rep.opt = opt;
      if (has_complement) {
        ge("linx-o >= opt - gap(d,s)", lb("linx-o"), opt - integrality_gap_constant(base.d(), s),
           tol);
      }
      for (Method m : kAllMethods) {
        const std::string name(method_name(m));
        ge("opt >= lb(" + name + ")", opt, lb(name.c_str()), kValidityTol);
      }
    }
    for (Method m : kAllMethods) {
      const BoundRow* r = by.at(std::string(method_name(m)));
      if (r->error) {
        rep.lines.push_back({s, std::string(method_name(m)) + " failed: " + *r->error, 0, 0,
                             VerifyStatus::Fail});
      }
    }
  }
  return rep;
}

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

nlohmann::json num_json(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

double parse_num(const std::string& field, int lineno) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || *end != '\0') {
    throw MespError(ErrorCode::ParseError,
                    "csv line " + std::to_string(lineno) + ": bad number '" + field + "'");
  }
  return v;
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << kCsvHeader << '\n';
  for (const BoundRow& r : rows) {
    out << r.method << ',' << r.s << ',' << num(r.lb) << ',' << (r.gap ? num(*r.gap) : "") << ','
        << num(r.conv) << ',' << num(r.time_s) << ',' << r.iters << '\n';
  }
}

void write_json(std::ostream& out, const std::vector<BoundRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const BoundRow& r : rows) {
    arr.push_back({{"method", r.method},
                   {"s", r.s},
                   {"lb", num_json(r.lb)},
                   {"gap", r.gap ? num_json(*r.gap) : nlohmann::json(nullptr)},
                   {"conv", num_json(r.conv)},
                   {"time_s", num_json(r.time_s)},
                   {"iters", r.iters}});
  }
  out << arr.dump(2) << '\n';
}

void write_table(std::ostream& out, const std::vector<BoundRow>& rows) {
  out << std::left << std::setw(11) << "method" << std::right << std::setw(5) << "s"
      << std::setw(14) << "lb" << std::setw(10) << "gap" << std::setw(11) << "conv"
      << std::setw(9) << "time_s" << std::setw(7) << "iters" << '\n';
  for (const BoundRow& r : rows) {
    out << std::left << std::setw(11) << r.method << std::right << std::setw(5) << r.s;
    if (r.error) {
      out << "  error: " << *r.error << '\n';
      continue;
    }
    out << std::fixed << std::setprecision(6) << std::setw(14) << r.lb << std::setprecision(3)
        << std::setw(10);
    if (r.gap) {
      out << *r.gap;
    } else {
      out << "-";
    }
    out << std::scientific << std::setprecision(2) << std::setw(11) << r.conv << std::fixed
        << std::setprecision(3) << std::setw(9) << r.time_s << std::setw(7) << r.iters << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

std::vector<BoundRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw MespError(ErrorCode::ParseError, "csv header must be '" + std::string(kCsvHeader) + "'");
  }
  std::vector<BoundRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 7) {
      throw MespError(ErrorCode::ParseError, "csv line " + std::to_string(lineno) + ": expected 7 fields");
    }
    BoundRow r;
    r.method = f[0];
    r.s = static_cast<int>(parse_num(f[1], lineno));
    r.lb = parse_num(f[2], lineno);
    if (!f[3].empty()) r.gap = parse_num(f[3], lineno);
    r.conv = parse_num(f[4], lineno);
    r.time_s = parse_num(f[5], lineno);
    r.iters = static_cast<int>(parse_num(f[6], lineno));
    rows.push_back(std::move(r));
  }
  return rows;
}

void export_rows(const std::vector<BoundRow>& rows, OutputFormat format,
                 const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MespError(ErrorCode::IoError, "cannot write " + path.string());
  switch (format) {
    case OutputFormat::Csv: write_csv(out, rows); break;
    case OutputFormat::Json: write_json(out, rows); break;
    case OutputFormat::Table: write_table(out, rows); break;
  }
  if (!out) throw MespError(ErrorCode::IoError, "write failed: " + path.string());
}

void write_verify(std::ostream& out, const VerifyReport& report, OutputFormat format) {
  if (format == OutputFormat::Json) {
    nlohmann::json lines = nlohmann::json::array();
    for (const VerifyLine& l : report.lines) {
      lines.push_back({{"s", l.s},
                       {"relation", l.relation},
                       {"lhs", num_json(l.lhs)},
                       {"rhs", num_json(l.rhs)},
                       {"status", std::string(to_string(l.status))}});
    }
    out << lines.dump(2) << '\n';
    return;
  }
  if (format == OutputFormat::Csv) {
    out << "s,relation,lhs,rhs,status\n";
    for (const VerifyLine& l : report.lines) {
      out << l.s << ",\"" << l.relation << "\"," << num(l.lhs) << ',' << num(l.rhs) << ','
          << to_string(l.status) << '\n';
    }
    return;
  }
  for (const VerifyLine& l : report.lines) {
    out << std::left << std::setw(7) << to_string(l.status) << "s=" << std::setw(4) << l.s
        << std::setw(38) << l.relation << std::right << std::fixed << std::setprecision(6)
        << std::setw(14) << l.lhs << std::setw(14) << l.rhs << '\n';
    out.unsetf(std::ios::floatfield);
  }
}

}  // namespace mesp
