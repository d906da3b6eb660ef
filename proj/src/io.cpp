#include "mvmatern/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mvmatern/errors.hpp"

namespace mvm {
namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

double parse_double(const std::string& s, const std::string& where) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  while (p < e && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  if (ec != std::errc() || p != e)
    fail(errc::io, where + ": not a number: '" + s + "'");
  return v;
}

long parse_int(const std::string& s, const std::string& where) {
  long v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  while (p < e && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
  if (ec != std::errc() || p != e)
    fail(errc::io, where + ": not an integer: '" + s + "'");
  return v;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

}  // namespace

std::vector<int> Dataset::counts() const {
  std::vector<int> c((std::size_t)p(), 0);
  for (int i = 0; i < n(); ++i) ++c[(std::size_t)var(i)];
  return c;
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open dataset file: " + path);

  std::string line;
  if (!std::getline(in, line)) fail(errc::io, path + ": empty file");
  auto header = split_csv(line);
  for (auto& h : header) h = trim(h);
  int d = 0;
  if (header.size() == 3 && header[0] == "x1")
    d = 1;
  else if (header.size() == 4 && header[0] == "x1" && header[1] == "x2")
    d = 2;
  if (d == 0 || header[header.size() - 2] != "var" || header.back() != "value")
    fail(errc::io, path + ": header must be x1[,x2],var,value");

  std::vector<Eigen::VectorXd> locs;
  std::vector<int> vars;
  std::vector<double> vals;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if ((int)fields.size() != d + 2)
      fail(errc::io, where + ": expected " + std::to_string(d + 2) +
                            " fields, got " + std::to_string(fields.size()));
    Eigen::VectorXd x(d);
    for (int c = 0; c < d; ++c) x(c) = parse_double(fields[(std::size_t)c], where);
    const long v = parse_int(fields[(std::size_t)d], where);
    const double y = parse_double(fields[(std::size_t)d + 1], where);
    if (v < 0) fail(errc::io, where + ": var index must be nonnegative");
    if (!x.allFinite() || !std::isfinite(y))
      fail(errc::io, where + ": non-finite value");
    locs.push_back(std::move(x));
    vars.push_back((int)v);
    vals.push_back(y);
  }
  if (locs.empty()) fail(errc::io, path + ": no data rows");

  Dataset ds;
  const int n = (int)locs.size();
  ds.locations.resize(n, d);
  ds.var.resize(n);
  ds.value.resize(n);
  for (int i = 0; i < n; ++i) {
    ds.locations.row(i) = locs[(std::size_t)i].transpose();
    ds.var(i) = vars[(std::size_t)i];
    ds.value(i) = vals[(std::size_t)i];
  }
  const auto c = ds.counts();
  for (int k = 0; k < (int)c.size(); ++k)
    if (c[(std::size_t)k] == 0)
      fail(errc::io, path + ": variable " + std::to_string(k) +
                            " has no rows (indices must be dense from 0)");
  return ds;
}

void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot write dataset file: " + path);
  const int d = ds.dim();
  out << (d == 1 ? "x1,var,value\n" : "x1,x2,var,value\n");
  for (int i = 0; i < ds.n(); ++i) {
    for (int c = 0; c < d; ++c) out << fmt17(ds.locations(i, c)) << ",";
    out << ds.var(i) << "," << fmt17(ds.value(i)) << "\n";
  }
  if (!out) fail(errc::io, "failed writing dataset file: " + path);
}

std::string model_to_string(const ModelSpec& m) {
  std::ostringstream os;
  const int p = m.p();
  os << "variant = " << variant_name(m.variant) << "\n";
  os << "d = " << m.dim << "\n";
  os << "p = " << p << "\n";
  for (int j = 0; j < p; ++j) {
    const auto& pr = m.processes[(std::size_t)j];
    const std::string sj = std::to_string(j + 1);
    os << "nu." << sj << " = " << fmt17(pr.nu) << "\n";
    os << "a." << sj << " = " << fmt17(pr.a) << "\n";
    os << "sigma." << sj << sj << " = " << fmt17(pr.sigma) << "\n";
    os << "nugget." << sj << " = " << fmt17(pr.nugget) << "\n";
  }
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      const std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
      os << "re_sigma." << jk << " = " << fmt17(m.cross.re(j, k)) << "\n";
      os << "im_sigma." << jk << " = " << fmt17(m.cross.im(j, k)) << "\n";
    }
  const auto vec = [&](const Eigen::VectorXd& v) {
    std::string s;
    for (int i = 0; i < v.size(); ++i) {
      if (i) s += " ";
      s += fmt17(v(i));
    }
    return s;
  };
  os << "theta_star_im = " << vec(m.geometry.theta_star_im) << "\n";
  os << "theta_star_phi = " << vec(m.geometry.theta_star_phi) << "\n";
  if (m.variant == Variant::MMG) {
    if (!m.mmg) fail(errc::model, "MMG variant missing per-pair parameters");
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k) {
        const std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
        os << "mmg_nu." << jk << " = " << fmt17(m.mmg->nu(j, k)) << "\n";
        os << "mmg_a." << jk << " = " << fmt17(m.mmg->a(j, k)) << "\n";
      }
  }
  return os.str();
}

void write_model(const std::string& path, const ModelSpec& m) {
  std::ofstream out(path);
  if (!out) fail(errc::io, "cannot write model file: " + path);
  out << model_to_string(m);
  if (!out) fail(errc::io, "failed writing model file: " + path);
}

ModelSpec model_from_string(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      fail(errc::io, "model config line " + std::to_string(lineno) +
                            ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty()) fail(errc::io, "model config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) fail(errc::io, "model config: duplicate key '" + key + "'");
    kv[key] = val;
  }

  const auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) fail(errc::io, "model config: missing required key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  ModelSpec m;
  m.variant = variant_from_name(take("variant"));
  m.dim = (int)parse_int(take("d"), "d");
  const int p = (int)parse_int(take("p"), "p");
  if (p < 1) fail(errc::io, "model config: p must be >= 1");
  m.processes.resize((std::size_t)p);
  for (int j = 0; j < p; ++j) {
    auto& pr = m.processes[(std::size_t)j];
    const std::string sj = std::to_string(j + 1);
    pr.nu = parse_double(take("nu." + sj), "nu." + sj);
    pr.a = parse_double(take("a." + sj), "a." + sj);
    pr.sigma = parse_double(take("sigma." + sj + sj), "sigma." + sj + sj);
    pr.nugget = parse_double(take("nugget." + sj), "nugget." + sj);
  }
  m.cross.re = Eigen::MatrixXd::Zero(p, p);
  m.cross.im = Eigen::MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) m.cross.re(j, j) = m.processes[(std::size_t)j].sigma;
  for (int j = 0; j < p; ++j)
    for (int k = j + 1; k < p; ++k) {
      const std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
      const double re = parse_double(take("re_sigma." + jk), "re_sigma." + jk);
      const double im = parse_double(take("im_sigma." + jk), "im_sigma." + jk);
      m.cross.re(j, k) = m.cross.re(k, j) = re;
      m.cross.im(j, k) = im;
      m.cross.im(k, j) = -im;
    }
  const auto vec = [&](const std::string& key) {
    std::istringstream vs(take(key));
    std::vector<double> comp;
    std::string tok;
    while (vs >> tok) comp.push_back(parse_double(tok, key));
    if ((int)comp.size() != m.dim)
      fail(errc::io, "model config: " + key + " needs " +
                            std::to_string(m.dim) + " components");
    Eigen::VectorXd v(m.dim);
    for (int i = 0; i < m.dim; ++i) v(i) = comp[(std::size_t)i];
    return v;
  };
  m.geometry.theta_star_im = vec("theta_star_im");
  m.geometry.theta_star_phi = vec("theta_star_phi");
  if (m.variant == Variant::MMG) {
    MmgExtras ex;
    ex.nu = Eigen::MatrixXd::Zero(p, p);
    ex.a = Eigen::MatrixXd::Zero(p, p);
    for (int j = 0; j < p; ++j) {
      ex.nu(j, j) = m.processes[(std::size_t)j].nu;
      ex.a(j, j) = m.processes[(std::size_t)j].a;
    }
    for (int j = 0; j < p; ++j)
      for (int k = j + 1; k < p; ++k) {
        const std::string jk = std::to_string(j + 1) + std::to_string(k + 1);
        ex.nu(j, k) = ex.nu(k, j) = parse_double(take("mmg_nu." + jk), "mmg_nu." + jk);
        ex.a(j, k) = ex.a(k, j) = parse_double(take("mmg_a." + jk), "mmg_a." + jk);
      }
    m.mmg = std::move(ex);
  }
  if (!kv.empty())
    fail(errc::io, "model config: unknown key '" + kv.begin()->first + "'");
  require_valid(m);
  return m;
}

ModelSpec read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(errc::io, "cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_string(ss.str());
}

void require_compatible(const ModelSpec& m, const Dataset& ds) {
  if (ds.dim() != m.dim)
    fail(errc::model, "dataset dimension " + std::to_string(ds.dim()) +
                         " does not match model dimension " + std::to_string(m.dim));
  if (ds.p() > m.p())
    fail(errc::model, "dataset references variable " + std::to_string(ds.p() - 1) +
                         " but the model has " + std::to_string(m.p()) + " processes");
  // duplicate (location, var) pairs make Γ singular unless that variable
  // carries measurement noise
  std::vector<std::pair<std::vector<double>, int>> keys;
  keys.reserve((std::size_t)ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    std::vector<double> loc(ds.locations.row(i).begin(), ds.locations.row(i).end());
    keys.emplace_back(std::move(loc), ds.var(i));
  }
  std::sort(keys.begin(), keys.end());
  for (std::size_t i = 1; i < keys.size(); ++i) {
    if (keys[i] == keys[i - 1] &&
        !(m.processes[(std::size_t)keys[i].second].nugget > 0.0))
      fail(errc::model,
           "duplicate observations of variable " + std::to_string(keys[i].second) +
               " at one location need a positive nugget");
  }
}

Eigen::MatrixXd cov_matrix_obs(const CovFunction& cf, const Dataset& ds,
                               bool add_nugget) {
  std::vector<Eigen::VectorXd> locs;
  locs.reserve((std::size_t)ds.n());
  std::vector<int> vars((std::size_t)ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    locs.push_back(ds.locations.row(i).transpose());
    vars[(std::size_t)i] = ds.var(i);
  }
  return cov_matrix(cf, locs, vars, add_nugget);
}

}  // namespace mvm
