#include "mvmatern/predict.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <thread>

#include <Eigen/Cholesky>

#include "mvmatern/errors.hpp"
#include "mvmatern/rng.hpp"

namespace mvm {

namespace {

// Cholesky with the same escalating diagonal ridge the likelihood uses.
std::optional<Eigen::LLT<Eigen::MatrixXd>> factor_gram(
    const Eigen::MatrixXd& G) {
  const double tr = G.trace();
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() == Eigen::Success) return llt;
  for (double rel = 1e-12; rel <= 1e-8 * 1.0000001; rel *= 10.0) {
    Eigen::MatrixXd Gr = G;
    Gr.diagonal().array() += rel * tr;
    llt.compute(Gr);
    if (llt.info() == Eigen::Success) return llt;
  }
  return std::nullopt;
}

std::vector<double> variable_means(const Dataset& ds, int p) {
  std::vector<double> mu((std::size_t)p, 0.0);
  std::vector<int> cnt((std::size_t)p, 0);
  for (int i = 0; i < ds.n(); ++i) {
    mu[(std::size_t)ds.var(i)] += ds.value(i);
    ++cnt[(std::size_t)ds.var(i)];
  }
  for (int v = 0; v < p; ++v)
    if (cnt[(std::size_t)v] > 0) mu[(std::size_t)v] /= cnt[(std::size_t)v];
  return mu;
}

// rows a target of variable tv may condition on under the mode
std::vector<int> conditioning_rows(const Dataset& ds, PredictMode mode,
                                   int tv) {
  std::vector<int> idx;
  idx.reserve((std::size_t)ds.n());
  for (int i = 0; i < ds.n(); ++i) {
    const int v = ds.var(i);
    const bool keep = mode == PredictMode::both ||
                      (mode == PredictMode::univariate && v == tv) ||
                      (mode == PredictMode::other && v != tv);
    if (keep) idx.push_back(i);
  }
  return idx;
}

// per-axis extent of the lags the backend must resolve
double span_needed(const Dataset& obs, const std::vector<PredictTarget>& ts) {
  const int d = obs.n() > 0 ? obs.dim()
                            : (ts.empty() ? 1 : (int)ts.front().location.size());
  double span = 0.0;
  for (int ax = 0; ax < d; ++ax) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (int i = 0; i < obs.n(); ++i) {
      lo = std::min(lo, obs.locations(i, ax));
      hi = std::max(hi, obs.locations(i, ax));
    }
    for (const auto& t : ts) {
      lo = std::min(lo, t.location(ax));
      hi = std::max(hi, t.location(ax));
    }
    if (hi > lo) span = std::max(span, hi - lo);
  }
  return span;
}

CovFunction build_backend(const ModelSpec& m, bool auto_grid, FFTGrid grid,
                          bool use_closed_form, double span) {
  if (use_closed_form && m.dim == 1) return CovFunction::closed_form(m);
  if (auto_grid) {
    grid = default_grid(m);
    grid.half_width = std::max(grid.half_width, 1.25 * span);
  }
  return CovFunction::fft_grid(m, grid);
}

// cokriging against a prebuilt backend; obs is the training data
std::vector<Prediction> cokrige_with(const CovFunction& cf, const Dataset& obs,
                                     const std::vector<PredictTarget>& targets,
                                     PredictMode mode, bool include_nugget,
                                     bool zero_mean) {
  const ModelSpec& m = cf.model();
  const int p = m.p();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(m.dim);
  std::vector<double> mu((std::size_t)p, 0.0);
  if (!zero_mean && obs.n() > 0) mu = variable_means(obs, p);

  std::vector<Prediction> out(targets.size());

  // targets sharing a conditioning subset solve against one factorization
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t q = 0; q < targets.size(); ++q)
    groups[mode == PredictMode::both ? -1 : targets[q].var].push_back(q);

  for (const auto& [key, members] : groups) {
    const std::vector<int> idx =
        obs.n() > 0 ? conditioning_rows(obs, mode, key < 0 ? 0 : key)
                    : std::vector<int>{};
    if (idx.empty()) {
      for (std::size_t q : members) {
        const int tv = targets[q].var;
        out[q].mean = mu[(std::size_t)tv];
        out[q].variance =
            cf.eval(tv, tv, zero) +
            (include_nugget ? m.processes[(std::size_t)tv].nugget : 0.0);
      }
      continue;
    }

    const int ns = (int)idx.size();
    std::vector<Eigen::VectorXd> locs((std::size_t)ns);
    std::vector<int> vars((std::size_t)ns);
    Eigen::VectorXd z(ns);
    for (int i = 0; i < ns; ++i) {
      locs[(std::size_t)i] = obs.locations.row(idx[(std::size_t)i]).transpose();
      vars[(std::size_t)i] = obs.var(idx[(std::size_t)i]);
      z(i) = obs.value(idx[(std::size_t)i]) -
             mu[(std::size_t)vars[(std::size_t)i]];
    }
    const Eigen::MatrixXd G = cov_matrix(cf, locs, vars, true);
    const auto llt = factor_gram(G);
    if (!llt)
      fail(errc::numeric,
           "cokrige: observation covariance factorization failed even with a "
           "1e-8*trace ridge");

    Eigen::MatrixXd K(ns, (int)members.size());
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto& t = targets[members[c]];
      for (int i = 0; i < ns; ++i)
        K(i, (int)c) = cf.eval(vars[(std::size_t)i], t.var,
                               locs[(std::size_t)i] - t.location);
    }
    const Eigen::VectorXd w = llt->solve(z);
    const Eigen::MatrixXd W = llt->solve(K);
    for (std::size_t c = 0; c < members.size(); ++c) {
      const auto& t = targets[members[c]];
      const double ctt =
          cf.eval(t.var, t.var, zero) +
          (include_nugget ? m.processes[(std::size_t)t.var].nugget : 0.0);
      out[members[c]].mean = K.col((int)c).dot(w) + mu[(std::size_t)t.var];
      out[members[c]].variance = ctt - K.col((int)c).dot(W.col((int)c));
    }
  }
  return out;
}

Dataset take_rows(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.locations.resize((int)rows.size(), ds.dim());
  out.var.resize((int)rows.size());
  out.value.resize((int)rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.locations.row((int)i) = ds.locations.row(rows[i]);
    out.var((int)i) = ds.var(rows[i]);
    out.value((int)i) = ds.value(rows[i]);
  }
  return out;
}

}  // namespace

const char* predict_mode_name(PredictMode mode) {
  switch (mode) {
    case PredictMode::both:
      return "both";
    case PredictMode::univariate:
      return "univariate";
    default:
      return "other";
  }
}

PredictMode predict_mode_from_name(const std::string& name) {
  if (name == "both") return PredictMode::both;
  if (name == "univariate") return PredictMode::univariate;
  if (name == "other") return PredictMode::other;
  fail(errc::args,
       "unknown prediction mode '" + name + "' (both|univariate|other)");
}

std::vector<Prediction> cokrige(const PredictionRequest& req) {
  require_valid(req.model);
  if (req.observed.n() > 0) require_compatible(req.model, req.observed);
  for (const auto& t : req.targets) {
    if (t.var < 0 || t.var >= req.model.p())
      fail(errc::args, "cokrige: target variable index out of range");
    if ((int)t.location.size() != req.model.dim)
      fail(errc::args, "cokrige: target location arity does not match d");
  }
  if (req.targets.empty()) return {};
  const CovFunction cf =
      build_backend(req.model, req.auto_grid, req.grid, req.use_closed_form,
                    span_needed(req.observed, req.targets));
  return cokrige_with(cf, req.observed, req.targets, req.mode,
                      req.include_nugget, req.zero_mean);
}

CvResult cross_validate(const Dataset& ds, const ModelSpec& model,
                        const CvConfig& cfg) {
  require_valid(model);
  require_compatible(model, ds);
  if (cfg.folds < 0) fail(errc::args, "cross_validate: folds must be >= 0");
  if (cfg.modes.empty()) fail(errc::args, "cross_validate: no modes requested");
  const int p = model.p();

  // seeded per-variable partitions; fold = position after a Fisher-Yates
  // shuffle, reduced modulo the fold count, so blocks differ by at most one
  std::vector<std::vector<int>> rows_of((std::size_t)p);
  for (int i = 0; i < ds.n(); ++i)
    rows_of[(std::size_t)ds.var(i)].push_back(i);
  std::vector<int> folds_of((std::size_t)p, 0);
  std::vector<int> fold(ds.n() ? (std::size_t)ds.n() : 1, 0);
  for (int v = 0; v < p; ++v) {
    auto& rows = rows_of[(std::size_t)v];
    const int nv = (int)rows.size();
    if (nv == 0) continue;
    const int fv = cfg.folds == 0 ? nv : cfg.folds;
    if (fv < 2)
      fail(errc::args, "cross_validate: needs at least 2 folds per variable");
    if (fv > nv)
      fail(errc::args, "cross_validate: variable " + std::to_string(v) +
                           " has " + std::to_string(nv) + " rows for " +
                           std::to_string(fv) + " folds (empty fold)");
    folds_of[(std::size_t)v] = fv;
    Rng rng(derive_seed(cfg.seed, (std::uint64_t)v));
    for (int i = nv - 1; i > 0; --i)
      std::swap(rows[(std::size_t)i],
                rows[(std::size_t)rng.below((std::uint64_t)i + 1)]);
    for (int i = 0; i < nv; ++i) fold[(std::size_t)rows[(std::size_t)i]] = i % fv;
  }

  const CovFunction cf = build_backend(model, cfg.auto_grid, cfg.grid,
                                       cfg.use_closed_form, span_needed(ds, {}));

  struct Task {
    int var = 0;
    std::size_t mode_pos = 0;
    int fold = -1;  // -1: fold-independent (the "other" mode)
    double sse = 0.0;
    int n = 0;
  };
  std::vector<Task> tasks;
  for (int v = 0; v < p; ++v) {
    if (rows_of[(std::size_t)v].empty()) continue;
    for (std::size_t mp = 0; mp < cfg.modes.size(); ++mp) {
      if (cfg.modes[mp] == PredictMode::other) {
        tasks.push_back({v, mp, -1, 0.0, 0});
      } else {
        for (int f = 0; f < folds_of[(std::size_t)v]; ++f)
          tasks.push_back({v, mp, f, 0.0, 0});
      }
    }
  }

  auto run_task = [&](Task& tk) {
    std::vector<int> hold, train;
    for (int i = 0; i < ds.n(); ++i) {
      const bool held = ds.var(i) == tk.var &&
                        (tk.fold < 0 || fold[(std::size_t)i] == tk.fold);
      (held ? hold : train).push_back(i);
    }
    std::vector<PredictTarget> targets;
    targets.reserve(hold.size());
    for (int i : hold)
      targets.push_back({ds.locations.row(i).transpose(), tk.var});
    const Dataset tr = take_rows(ds, train);
    const auto preds = cokrige_with(cf, tr, targets, cfg.modes[tk.mode_pos],
                                    cfg.include_nugget, cfg.zero_mean);
    for (std::size_t q = 0; q < preds.size(); ++q) {
      const double e = preds[q].mean - ds.value(hold[q]);
      tk.sse += e * e;
    }
    tk.n = (int)hold.size();
  };

  int nthreads = cfg.threads == 0
                     ? std::max(1u, std::thread::hardware_concurrency())
                     : cfg.threads;
  nthreads = std::min<int>(nthreads, (int)tasks.size());
  if (nthreads <= 1) {
    for (auto& tk : tasks) run_task(tk);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex err_mu;
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        try {
          run_task(tasks[i]);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  CvResult res;
  res.baseline.assign((std::size_t)p, 0.0);
  for (int v = 0; v < p; ++v) {
    const auto& rows = rows_of[(std::size_t)v];
    if (rows.empty()) continue;
    double ss = 0.0;
    for (int i : rows) ss += ds.value(i) * ds.value(i);
    res.baseline[(std::size_t)v] = std::sqrt(ss / (double)rows.size());
    for (std::size_t mp = 0; mp < cfg.modes.size(); ++mp) {
      CvCell cell;
      cell.var = v;
      cell.mode = cfg.modes[mp];
      for (const auto& tk : tasks)
        if (tk.var == v && tk.mode_pos == mp) {
          cell.rmse += tk.sse;
          cell.n_predicted += tk.n;
        }
      cell.rmse = cell.n_predicted > 0
                      ? std::sqrt(cell.rmse / (double)cell.n_predicted)
                      : 0.0;
      res.cells.push_back(cell);
    }
  }
  return res;
}

}  // namespace mvm
