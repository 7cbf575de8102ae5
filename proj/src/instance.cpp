#include "mesp/instance.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "mesp/error.hpp"
#include "mesp/spectral.hpp"

namespace mesp {

namespace {

double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

void check_s(int s, int rank) {
  if (s < 1 || s > rank) {
    throw MespError(ErrorCode::OutOfRange, "subset size s = " + std::to_string(s) +
                                               " outside [1, rank(C) = " +
                                               std::to_string(rank) + "]");
  }
}

}  // namespace

Instance Instance::from_matrix(const MatrixXd& c, int s, std::optional<double> known_opt) {
  if (c.rows() != c.cols() || c.rows() == 0) {
    throw MespError(ErrorCode::DimensionMismatch, "covariance must be square and nonempty");
  }
  const SortedSpectrum sp = sorted_eigenvalues(c);
  const int rank = numerical_rank(sp.values);

  Instance inst;
  inst.c_ = 0.5 * (c + c.transpose());
  Eigen::LLT<MatrixXd> llt(inst.c_);
  if (rank == c.rows() && llt.info() == Eigen::Success) {
    // C = L L^T, so V = L^T satisfies C = V^T V.
    inst.v_ = llt.matrixU();
  } else {
    inst.v_ = sp.values.cwiseSqrt().asDiagonal() * sp.vectors.transpose();
  }
  inst.s_ = s;
  inst.known_opt_ = known_opt;
  inst.finalize();
  return inst;
}

Instance Instance::from_factor(const MatrixXd& c, const MatrixXd& v, int s,
                               std::optional<double> known_opt) {
  if (c.rows() != c.cols() || v.rows() != c.rows() || v.cols() != c.cols()) {
    throw MespError(ErrorCode::DimensionMismatch, "factor and covariance sizes differ");
  }
  Instance inst;
  inst.c_ = c;
  inst.v_ = v;
  inst.s_ = s;
  inst.known_opt_ = known_opt;
  inst.finalize();
  return inst;
}

void Instance::finalize() {
  const double scale = std::max(max_abs(c_), std::numeric_limits<double>::min());
  if (max_abs(v_.transpose() * v_ - c_) > tol::kFactor * scale) {
    throw MespError(ErrorCode::BadSpec, "factor does not reproduce C = V^T V");
  }
  const SortedSpectrum sp = sorted_eigenvalues(c_);
  rank_ = numerical_rank(sp.values);
  check_s(s_, rank_);

  if (rank_ == d()) {
    Eigen::PartialPivLU<MatrixXd> lu(v_.transpose());
    w_ = lu.solve(MatrixXd::Identity(d(), d()));
    Eigen::LLT<MatrixXd> llt(c_);
    if (llt.info() == Eigen::Success) {
      logdet_c_ = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    } else {
      logdet_c_ = sp.values.array().log().sum();
    }
  } else {
    w_.resize(0, 0);
    logdet_c_ = -std::numeric_limits<double>::infinity();
  }
}

const MatrixXd& Instance::W() const {
  if (!full_rank()) {
    throw MespError(ErrorCode::SingularC, "complementary factor needs a full-rank C");
  }
  return w_;
}

Instance Instance::with_s(int s) const {
  check_s(s, rank_);
  Instance copy = *this;
  copy.s_ = s;
  return copy;
}

Instance Instance::with_known_opt(std::optional<double> opt) const {
  Instance copy = *this;
  copy.known_opt_ = opt;
  return copy;
}

Instance Instance::with_bound_offset(double offset) const {
  Instance copy = *this;
  copy.bound_offset_ = offset;
  return copy;
}

// ---------------------------------------------------------------------------
// File formats

namespace {

std::vector<std::vector<double>> read_rows(const std::filesystem::path& path, bool csv) {
  std::ifstream in(path);
  if (!in) throw MespError(ErrorCode::IoError, "cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (csv) {
      for (char& ch : line) {
        if (ch == ',' || ch == ';') ch = ' ';
      }
    }
    std::istringstream ss(line);
    std::vector<double> row;
    std::string tok;
    while (ss >> tok) {
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0') {
        throw MespError(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno) +
                                                   ": not a number: '" + tok + "'");
      }
      row.push_back(v);
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw MespError(ErrorCode::ParseError, path.string() + ": empty file");
  return rows;
}

bool is_lower_triangle(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2) return false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != i + 1) return false;
  }
  return true;
}

bool is_integer_header(const std::vector<std::vector<double>>& rows) {
  if (rows.size() < 2 || rows[0].size() != 1) return false;
  const double h = rows[0][0];
  return h == std::floor(h) && h >= 1 && static_cast<std::size_t>(h) == rows.size() - 1;
}

MatrixXd dense_from_rows(const std::vector<std::vector<double>>& rows, std::size_t first,
                         const std::filesystem::path& path) {
  const std::size_t d = rows.size() - first;
  MatrixXd m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    const auto& r = rows[first + i];
    if (r.size() != d) {
      throw MespError(ErrorCode::DimensionMismatch,
                      path.string() + ": row " + std::to_string(i + 1) + " has " +
                          std::to_string(r.size()) + " entries, expected " + std::to_string(d));
    }
    for (std::size_t j = 0; j < d; ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = r[j];
    }
  }
  return m;
}

MatrixXd lower_from_rows(const std::vector<std::vector<double>>& rows,
                         const std::filesystem::path& path) {
  const auto d = static_cast<Eigen::Index>(rows.size());
  MatrixXd m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto& r = rows[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(r.size()) != i + 1) {
      throw MespError(ErrorCode::DimensionMismatch,
                      path.string() + ": lower-triangle row " + std::to_string(i + 1) +
                          " has " + std::to_string(r.size()) + " entries");
    }
    for (Eigen::Index j = 0; j <= i; ++j) {
      m(i, j) = r[static_cast<std::size_t>(j)];
      m(j, i) = r[static_cast<std::size_t>(j)];
    }
  }
  return m;
}

}  // namespace

MatrixXd read_matrix(const MatrixFile& file) {
  MatrixFormat fmt = file.format;
  if (fmt == MatrixFormat::Auto && file.path.extension() == ".csv") fmt = MatrixFormat::Csv;

  const auto rows = read_rows(file.path, fmt == MatrixFormat::Csv);
  const std::size_t first = is_integer_header(rows) ? 1 : 0;

  MatrixXd m;
  if (fmt == MatrixFormat::LowerTriangleText ||
      (fmt == MatrixFormat::Auto && first == 0 && is_lower_triangle(rows))) {
    m = lower_from_rows(rows, file.path);
  } else {
    m = dense_from_rows(rows, first, file.path);
  }

  const double scale = std::max(1.0, max_abs(m));
  const double asym = max_abs(m - m.transpose());
  if (asym > tol::kLoadSymmetry * scale) {
    throw MespError(ErrorCode::NonSymmetric,
                    file.path.string() + ": asymmetry " + std::to_string(asym));
  }
  return 0.5 * (m + m.transpose());
}

void write_matrix(const std::filesystem::path& path, const MatrixXd& c, MatrixFormat format) {
  std::ofstream out(path);
  if (!out) throw MespError(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  const Eigen::Index d = c.rows();
  const char* sep = format == MatrixFormat::Csv ? "," : " ";
  if (format == MatrixFormat::DenseText || format == MatrixFormat::Auto) out << d << '\n';
  for (Eigen::Index i = 0; i < d; ++i) {
    const Eigen::Index cols = format == MatrixFormat::LowerTriangleText ? i + 1 : d;
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (j > 0) out << sep;
      out << c(i, j);
    }
    out << '\n';
  }
  if (!out) throw MespError(ErrorCode::IoError, "write failed: " + path.string());
}

Instance load_instance(const MatrixFile& file, int s, std::optional<double> known_opt) {
  const MatrixXd c = read_matrix(file);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(c, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw MespError(ErrorCode::EigFailure, "load_instance");
  const double lmin = es.eigenvalues()(0);
  const double norm2 = es.eigenvalues().cwiseAbs().maxCoeff();
  if (lmin < -tol::kPsdGate * norm2) {
    throw MespError(ErrorCode::NonPSD,
                    file.path.string() + ": smallest eigenvalue " + std::to_string(lmin));
  }
  // Clip tiny negative eigenvalues so the factorization sees a PSD matrix.
  MatrixXd psd = c;
  if (lmin < 0.0) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> full(c);
    const VectorXd lam = full.eigenvalues().cwiseMax(0.0);
    psd = full.eigenvectors() * lam.asDiagonal() * full.eigenvectors().transpose();
    psd = 0.5 * (psd + psd.transpose()).eval();
  }
  return Instance::from_matrix(psd, s, known_opt);
}

std::map<int, double> load_optima(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MespError(ErrorCode::IoError, "cannot open " + path.string());
  std::map<int, double> out;
  std::string line;
  bool header = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      if (line != "s,opt") {
        throw MespError(ErrorCode::ParseError, path.string() + ": expected header 's,opt'");
      }
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw MespError(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno));
    }
    try {
      std::size_t used = 0;
      const int s = std::stoi(line.substr(0, comma), &used);
      const double opt = std::stod(line.substr(comma + 1));
      out[s] = opt;
    } catch (const std::exception&) {
      throw MespError(ErrorCode::ParseError, path.string() + ":" + std::to_string(lineno));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generated instances

Instance synthetic_instance(const SyntheticSpec& spec, int s) {
  if (spec.d < 1) throw MespError(ErrorCode::BadSpec, "synthetic: d must be positive");
  VectorXd lam(spec.d);
  if (!spec.spectrum.empty()) {
    if (static_cast<int>(spec.spectrum.size()) != spec.d) {
      throw MespError(ErrorCode::BadSpec, "synthetic: spectrum length differs from d");
    }
    for (int i = 0; i < spec.d; ++i) lam(i) = spec.spectrum[static_cast<std::size_t>(i)];
  } else {
    if (!(spec.condition >= 1.0)) {
      throw MespError(ErrorCode::BadSpec, "synthetic: condition number must be >= 1");
    }
    for (int i = 0; i < spec.d; ++i) {
      const double t = spec.d == 1 ? 0.0 : static_cast<double>(i) / (spec.d - 1);
      lam(i) = std::pow(spec.condition, -t);
    }
  }
  if (!(lam.minCoeff() > 0.0)) {
    throw MespError(ErrorCode::BadSpec, "synthetic: eigenvalues must be positive");
  }

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd g(spec.d, spec.d);
  for (int j = 0; j < spec.d; ++j) {
    for (int i = 0; i < spec.d; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<MatrixXd> qr(g);
  const MatrixXd q = qr.householderQ();
  MatrixXd c = q * lam.asDiagonal() * q.transpose();
  c = 0.5 * (c + c.transpose()).eval();
  return Instance::from_matrix(c, s);
}

Instance example_4x4() {
  MatrixXd v = MatrixXd::Identity(4, 4);
  v(0, 1) = 1.0;
  MatrixXd c = MatrixXd::Identity(4, 4);
  c(0, 1) = c(1, 0) = 1.0;
  c(1, 1) = 2.0;
  return Instance::from_factor(c, v, 2);
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

BruteForceResult brute_force_opt(const Instance& inst) {
  const int d = inst.d();
  const int s = inst.s();
  if (log_binomial(d, s) > std::log(kMaxEnumeration) + 1e-9) {
    throw MespError(ErrorCode::TooLarge, "binom(" + std::to_string(d) + ", " +
                                             std::to_string(s) + ") exceeds 1e6 subsets");
  }

  BruteForceResult best{std::numeric_limits<double>::infinity(), VectorXd::Zero(d), 0};
  std::vector<int> idx(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) idx[static_cast<std::size_t>(i)] = i;

  MatrixXd sub(s, s);
  const double scale = inst.C().diagonal().cwiseAbs().maxCoeff();
  while (true) {
    for (int a = 0; a < s; ++a) {
      for (int b = 0; b < s; ++b) {
        sub(a, b) = inst.C()(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
      }
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sub, Eigen::EigenvaluesOnly);
    const VectorXd& ev = es.eigenvalues();
    if (es.info() != Eigen::Success || !(ev(0) > tol::kRank * std::max(scale, 1e-300))) {
      ++best.singular_subsets;
    } else {
      const double value = -ev.array().log().sum();
      if (value < best.opt_value) {
        best.opt_value = value;
        best.argmin.setZero();
        for (int i : idx) best.argmin(i) = 1.0;
      }
    }

    // Next combination in lexicographic order.
    int pos = s - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == d - s + pos) --pos;
    if (pos < 0) break;
    ++idx[static_cast<std::size_t>(pos)];
    for (int i = pos + 1; i < s; ++i) {
      idx[static_cast<std::size_t>(i)] = idx[static_cast<std::size_t>(i - 1)] + 1;
    }
  }
  return best;
}

}  // namespace mesp
