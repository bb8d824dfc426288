#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdvtau/airy.hpp"
#include "kdvtau/npoint.hpp"
#include "kdvtau/periods.hpp"

namespace kdvtau {

using Json = nlohmann::json;

/// A malformed file or value: wrong syntax, wrong shape, unreadable path.
/// Distinct from TruncationError (data too shallow) and from the numeric
/// pipeline's own failures so the driver can map each to its exit code.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// ---- rationals -------------------------------------------------------------

/// Parse "p/q" or "p" (base 10, optional sign).
inline Rat parse_rat(const std::string& s) {
  Rat r;
  try {
    r = Rat(s);
  } catch (const std::invalid_argument&) {
    throw IoError("bad rational \"" + s + "\"");
  }
  if (r.get_den() == 0) throw IoError("zero denominator in \"" + s + "\"");
  r.canonicalize();
  return r;
}

inline std::string rat_str(const Rat& r) { return r.get_str(); }

/// Rational list from a JSON array of "p/q" strings (integer literals accepted).
inline std::vector<Rat> rat_list(const Json& j, const std::string& what) {
  if (!j.is_array()) throw IoError(what + " must be an array of rationals");
  std::vector<Rat> v;
  v.reserve(j.size());
  for (const auto& e : j) {
    if (e.is_string())
      v.push_back(parse_rat(e.get<std::string>()));
    else if (e.is_number_integer())
      v.push_back(Rat(e.get<long>()));
    else
      throw IoError(what + ": entries must be \"p/q\" strings or integers");
  }
  return v;
}

inline Json rat_list_json(const std::vector<Rat>& v) {
  Json j = Json::array();
  for (const Rat& r : v) j.push_back(r.get_str());
  return j;
}

// ---- complex numbers and Eigen blocks ([re, im] convention) ----------------

inline Json cx_json(Cx z) { return Json::array({z.real(), z.imag()}); }

inline Cx cx_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw IoError("complex values must be [re, im] pairs");
  return Cx(j[0].get<double>(), j[1].get<double>());
}

inline Json cxvec_json(const Eigen::VectorXcd& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(cx_json(v(i)));
  return j;
}

inline Eigen::VectorXcd cxvec_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("complex vectors must be arrays of [re, im] pairs");
  Eigen::VectorXcd v(Eigen::Index(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cx_from_json(j[size_t(i)]);
  return v;
}

inline Json cxmat_json(const Eigen::MatrixXcd& m) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) j.push_back(cxvec_json(m.row(i).transpose()));
  return j;
}

inline Eigen::MatrixXcd cxmat_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw IoError("complex matrices must be arrays of rows");
  Eigen::Index rows = Eigen::Index(j.size());
  Eigen::VectorXcd r0 = cxvec_from_json(j[0]);
  Eigen::MatrixXcd m(rows, r0.size());
  m.row(0) = r0.transpose();
  for (Eigen::Index i = 1; i < rows; ++i) {
    Eigen::VectorXcd ri = cxvec_from_json(j[size_t(i)]);
    if (ri.size() != r0.size()) throw IoError("ragged complex matrix");
    m.row(i) = ri.transpose();
  }
  return m;
}

inline Json intvec_json(const Eigen::VectorXi& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

inline Eigen::VectorXi intvec_from_json(const Json& j) {
  if (!j.is_array()) throw IoError("integer vectors must be arrays");
  Eigen::VectorXi v(Eigen::Index(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!j[size_t(i)].is_number_integer()) throw IoError("integer vectors must hold integers");
    v(i) = j[size_t(i)].get<int>();
  }
  return v;
}

// ---- initial-data / matrix-polynomial files --------------------------------

/// One parsed input file.  Series files carry {"a", "b", "c"} and optionally
/// "depth"; matrix-polynomial files additionally carry the genus "g", with the
/// same lists read as the polynomial coefficients (a_i multiplies z^{g-i}, and
/// so on — the series coefficients verbatim).
struct DataFile {
  InitialData data;
  std::optional<int> g;
};

inline DataFile data_from_json(const Json& j) {
  if (!j.is_object()) throw IoError("expected a JSON object with keys a, b, c");
  for (const char* k : {"a", "b", "c"})
    if (!j.contains(k)) throw IoError(std::string("missing key \"") + k + "\"");
  DataFile f;
  f.data.a = rat_list(j.at("a"), "a");
  f.data.b = rat_list(j.at("b"), "b");
  f.data.c = rat_list(j.at("c"), "c");
  if (j.contains("depth")) {
    if (!j.at("depth").is_number_integer() || j.at("depth").get<int>() < 1)
      throw IoError("depth must be a positive integer");
    f.data.depth = j.at("depth").get<int>();
  }
  if (j.contains("g")) {
    if (!j.at("g").is_number_integer() || j.at("g").get<int>() < 1)
      throw IoError("g must be a positive integer");
    f.g = j.at("g").get<int>();
  }
  return f;
}

inline Json data_json(const DataFile& f) {
  Json j;
  j["a"] = rat_list_json(f.data.a);
  j["b"] = rat_list_json(f.data.b);
  j["c"] = rat_list_json(f.data.c);
  if (f.data.depth) j["depth"] = *f.data.depth;
  if (f.g) j["g"] = *f.g;
  return j;
}

inline DataFile load_data_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw IoError(path + ": " + e.what());
  }
  try {
    return data_from_json(j);
  } catch (const IoError& e) {
    throw IoError(path + ": " + e.what());
  }
}

// ---- curve / period reports -------------------------------------------------

inline Json curve_json(const SpectralCurve& c) {
  Json j;
  j["g"] = c.g;
  Json q = Json::array();
  for (const Cx& v : c.q) q.push_back(cx_json(v));
  j["q"] = q;
  Json e = Json::array();
  for (const Cx& v : c.branch_points) e.push_back(cx_json(v));
  j["branch_points"] = e;
  return j;
}

inline SpectralCurve curve_from_json(const Json& j) {
  SpectralCurve c;
  if (!j.is_object() || !j.contains("g") || !j.contains("q"))
    throw IoError("curve objects need keys g and q");
  c.g = j.at("g").get<int>();
  for (const auto& e : j.at("q")) c.q.push_back(cx_from_json(e));
  if (j.contains("branch_points"))
    for (const auto& e : j.at("branch_points")) c.branch_points.push_back(cx_from_json(e));
  return c;
}

inline Json period_data_json(const PeriodData& pd) {
  Json j;
  j["g"] = pd.g;
  j["K"] = pd.K;
  j["alpha"] = cxmat_json(pd.alpha);
  j["B"] = cxmat_json(pd.B);
  Json v = Json::array(), ve = Json::array();
  for (const auto& x : pd.V) v.push_back(cxvec_json(x));
  for (const auto& x : pd.V_exp) ve.push_back(cxvec_json(x));
  j["V"] = v;
  j["V_exp"] = ve;
  j["qreg"] = cxmat_json(pd.qreg);
  j["varpi"] = cxvec_json(pd.varpi);
  j["cond_a"] = pd.cond_a;
  return j;
}

inline PeriodData period_data_from_json(const Json& j) {
  PeriodData pd;
  try {
    pd.g = j.at("g").get<int>();
    pd.K = j.at("K").get<int>();
    pd.alpha = cxmat_from_json(j.at("alpha"));
    pd.B = cxmat_from_json(j.at("B"));
    for (const auto& x : j.at("V")) pd.V.push_back(cxvec_from_json(x));
    for (const auto& x : j.at("V_exp")) pd.V_exp.push_back(cxvec_from_json(x));
    pd.qreg = cxmat_from_json(j.at("qreg"));
    pd.varpi = cxvec_from_json(j.at("varpi"));
    pd.cond_a = j.at("cond_a").get<double>();
  } catch (const Json::exception& e) {
    throw IoError(std::string("bad period data: ") + e.what());
  }
  return pd;
}

inline Json divisor_data_json(const DivisorData& dd) {
  Json j;
  Json z = Json::array(), w = Json::array();
  for (const Cx& v : dd.z) z.push_back(cx_json(v));
  for (const Cx& v : dd.w) w.push_back(cx_json(v));
  j["z"] = z;
  j["w"] = w;
  j["aj"] = cxvec_json(dd.aj);
  j["u0_raw"] = cxvec_json(dd.u0_raw);
  j["u0"] = cxvec_json(dd.u0);
  j["lattice_m"] = intvec_json(dd.lattice_m);
  j["lattice_n"] = intvec_json(dd.lattice_n);
  return j;
}

inline DivisorData divisor_data_from_json(const Json& j) {
  DivisorData dd;
  try {
    for (const auto& e : j.at("z")) dd.z.push_back(cx_from_json(e));
    for (const auto& e : j.at("w")) dd.w.push_back(cx_from_json(e));
    dd.aj = cxvec_from_json(j.at("aj"));
    dd.u0_raw = cxvec_from_json(j.at("u0_raw"));
    dd.u0 = cxvec_from_json(j.at("u0"));
    dd.lattice_m = intvec_from_json(j.at("lattice_m"));
    dd.lattice_n = intvec_from_json(j.at("lattice_n"));
  } catch (const Json::exception& e) {
    throw IoError(std::string("bad divisor data: ") + e.what());
  }
  return dd;
}

// ---- CSV --------------------------------------------------------------------

inline std::string tkey_csv(const TKey& k) {
  std::string s;
  for (size_t i = 0; i < k.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(k[i]);
  }
  return s;
}

inline TKey tkey_from_csv(const std::string& s) {
  TKey k;
  size_t pos = 0;
  while (pos <= s.size()) {
    size_t next = s.find(';', pos);
    if (next == std::string::npos) next = s.size();
    try {
      k.push_back(std::stoi(s.substr(pos, next - pos)));
    } catch (const std::exception&) {
      throw IoError("bad multi-index \"" + s + "\"");
    }
    pos = next + 1;
  }
  return k;
}

/// Taylor rows of an m-truncated log-tau expansion: one row per sorted index
/// with 2*sum(k) + N <= m and N >= 2, zero coefficients included, so the row
/// set depends only on m.  Exact output — byte-identical across runs.
inline void write_taucoeffs_csv(std::ostream& os, const TruncatedTPoly<Rat>& f) {
  os << "index,numerator,denominator\n";
  for (int n = 2; n <= f.m; ++n)
    for (const auto& k : sorted_tuples(n, (f.m - n) / 2)) {
      Rat c = f.coeff(k);
      os << tkey_csv(k) << ',' << c.get_num().get_str() << ',' << c.get_den().get_str() << '\n';
    }
}

/// Parse rows written by write_taucoeffs_csv back into a truncation.
inline TruncatedTPoly<Rat> taucoeffs_from_csv(std::istream& in, int m) {
  TruncatedTPoly<Rat> f(m);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,", 0) != 0)
    throw IoError("missing taucoeffs CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    size_t c1 = line.find(',');
    size_t c2 = c1 == std::string::npos ? c1 : line.find(',', c1 + 1);
    if (c2 == std::string::npos) throw IoError("bad CSV row \"" + line + "\"");
    TKey k = tkey_from_csv(line.substr(0, c1));
    Rat num = parse_rat(line.substr(c1 + 1, c2 - c1 - 1));
    Rat den = parse_rat(line.substr(c2 + 1));
    if (den == 0) throw IoError("zero denominator in \"" + line + "\"");
    f.add_term(k, num / den);
  }
  return f;
}

inline std::string double_csv(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

inline std::string cx_csv(Cx z) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.12g%+.12gi", z.real(), z.imag());
  return buf;
}

/// One row per truncation depth n: root counts of the (3n+1)-truncation split
/// into the exceptional real root, the inner circle, and the outer circle, the
/// two cluster radii with their ratio, and the full root list for plotting.
inline void write_branch_stats_csv(std::ostream& os, int nmax) {
  os << "n,real_root,real_count,inner_count,outer_count,inner_radius,outer_radius,"
        "radius_ratio,roots\n";
  for (int n = 1; n <= nmax; ++n) {
    BranchStats st = branch_stats(n);
    os << n << ',' << cx_csv(st.real_root) << ',' << st.real_count << ',' << st.inner_count
       << ',' << st.outer_count << ',' << double_csv(st.inner_radius) << ','
       << double_csv(st.outer_radius) << ',' << double_csv(st.outer_radius / st.inner_radius)
       << ',';
    for (size_t i = 0; i < st.roots.size(); ++i) os << (i ? ";" : "") << cx_csv(st.roots[i]);
    os << '\n';
  }
}

}  // namespace kdvtau
