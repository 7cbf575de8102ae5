// Command-line front end: `bound` prints certified lower bounds per (method, s),
// `verify` checks the relations between the relaxations on one instance.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mesp/bench.hpp"
#include "mesp/error.hpp"

using namespace mesp;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

int to_int(const std::string& t) {
  std::size_t used = 0;
  const int v = std::stoi(t, &used);
  if (used != t.size()) throw MespError(ErrorCode::BadArgument, "not an integer: " + t);
  return v;
}

// "2,5,10-12" -> {2, 5, 10, 11, 12}
std::vector<int> parse_s_list(const std::string& text) {
  std::vector<int> out;
  for (const std::string& part : split(text, ',')) {
    const auto dash = part.find('-', 1);
    if (dash == std::string::npos) {
      out.push_back(to_int(part));
    } else {
      const int a = to_int(part.substr(0, dash));
      const int b = to_int(part.substr(dash + 1));
      for (int s = a; s <= b; ++s) out.push_back(s);
    }
  }
  return out;
}

std::vector<Method> parse_methods(const std::string& text) {
  if (text == "all") return {kStandardMethods.begin(), kStandardMethods.end()};
  std::vector<Method> out;
  for (const std::string& name : split(text, ',')) {
    const auto m = parse_method(name);
    if (!m) throw MespError(ErrorCode::BadArgument, "unknown method '" + name + "'");
    out.push_back(*m);
  }
  return out;
}

SyntheticSpec parse_synthetic(const std::string& text) {
  const auto parts = split(text, ',');
  if (parts.size() < 2 || parts.size() > 3) {
    throw MespError(ErrorCode::BadArgument, "--synthetic expects d,seed[,cond]");
  }
  SyntheticSpec spec;
  spec.d = to_int(parts[0]);
  spec.seed = static_cast<std::uint64_t>(std::stoull(parts[1]));
  if (parts.size() == 3) spec.condition = std::stod(parts[2]);
  return spec;
}

OutputFormat parse_format(const std::string& text) {
  if (text == "table") return OutputFormat::Table;
  if (text == "csv") return OutputFormat::Csv;
  if (text == "json") return OutputFormat::Json;
  throw MespError(ErrorCode::BadArgument, "format must be table, csv or json");
}

struct Options {
  std::string instance;
  std::string synthetic;
  std::string s_list;
  std::string methods = "all";
  int max_iters = 1000;
  double tol = 1e-6;
  std::string format = "table";
  std::string out;
  std::string optima;
  std::uint64_t seed = 0;
  int workers = 0;
};

void add_common(CLI::App* cmd, Options& o) {
  auto* inst = cmd->add_option("--instance", o.instance, "covariance matrix file");
  auto* syn = cmd->add_option("--synthetic", o.synthetic, "random instance: d,seed[,cond]");
  inst->excludes(syn);
  cmd->add_option("--s", o.s_list, "subset sizes, e.g. 2,4,6-8")->required();
  cmd->add_option("--max-iters", o.max_iters, "iteration cap per solve");
  cmd->add_option("--tol", o.tol, "convergence threshold");
  cmd->add_option("--format", o.format, "table, csv or json");
  cmd->add_option("--out", o.out, "write output to this file");
  cmd->add_option("--seed", o.seed, "solver seed");
  cmd->add_option("--workers", o.workers, "worker threads (0: one per core)");
}

RunSpec make_spec(const Options& o) {
  RunSpec spec;
  if (!o.instance.empty()) spec.instance_file = MatrixFile{o.instance, MatrixFormat::Auto};
  if (!o.synthetic.empty()) spec.synthetic = parse_synthetic(o.synthetic);
  spec.s_list = parse_s_list(o.s_list);
  spec.methods = parse_methods(o.methods);
  spec.solver.max_iters = o.max_iters;
  spec.solver.polish_iters = o.max_iters;
  spec.solver.tol_conv = o.tol;
  spec.solver.seed = o.seed;
  spec.format = parse_format(o.format);
  if (!o.out.empty()) spec.out = o.out;
  if (!o.optima.empty()) spec.optima = o.optima;
  spec.workers = o.workers;
  return spec;
}

void emit(const std::function<void(std::ostream&)>& write, const std::optional<std::filesystem::path>& path) {
  if (!path) {
    write(std::cout);
    return;
  }
  std::ofstream out(*path, std::ios::binary);
  if (!out) throw MespError(ErrorCode::IoError, "cannot write " + path->string());
  write(out);
}

int run_bound_cmd(const Options& o) {
  const RunSpec spec = make_spec(o);
  const Instance base = load_run_instance(spec);
  spec.validate(base.d());
  std::map<int, double> optima;
  if (spec.optima) optima = load_optima(*spec.optima);
  const auto rows = run_bound(base, spec.s_list, spec.methods, spec.solver, optima, spec.workers);
  emit(
      [&](std::ostream& os) {
        switch (spec.format) {
          case OutputFormat::Table: write_table(os, rows); break;
          case OutputFormat::Csv: write_csv(os, rows); break;
          case OutputFormat::Json: write_json(os, rows); break;
        }
      },
      spec.out);
  bool failed = false;
  for (const BoundRow& r : rows) {
    if (r.error) {
      std::cerr << r.method << " s=" << r.s << ": " << *r.error << '\n';
      failed = true;
    }
  }
  return failed ? 1 : 0;
}

int run_verify_cmd(const Options& o) {
  const RunSpec spec = make_spec(o);
  const Instance base = load_run_instance(spec);
  spec.validate(base.d());
  const VerifyReport rep = run_verify(base, spec.s_list, spec.solver, kDominanceTol, spec.workers);
  emit([&](std::ostream& os) { write_verify(os, rep, spec.format); }, spec.out);
  return rep.any_fail() ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lower bounds for maximum-entropy sampling"};
  app.require_subcommand(1);

  Options bound_opts, verify_opts;
  auto* bound = app.add_subcommand("bound", "certified lower bounds per method and s");
  add_common(bound, bound_opts);
  bound->add_option("--methods", bound_opts.methods,
                    "comma list of gamma, gamma-c, gamma-star, linx, linx-o, linx-g, linx-d "
                    "(also gamma-g, gamma-c-g), or all");
  bound->add_option("--optima", bound_opts.optima, "CSV with header s,opt");

  auto* verify = app.add_subcommand("verify", "check dominance relations between relaxations");
  add_common(verify, verify_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (bound->parsed()) return run_bound_cmd(bound_opts);
    return run_verify_cmd(verify_opts);
  } catch (const MespError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
