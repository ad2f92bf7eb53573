#include "ergo/schemes.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "ergo/parallel.hpp"
#include "ergo/ratefit.hpp"

namespace ergo {

SchemeKind scheme_kind_by_id(const std::string& id) {
  if (id == "explicit_em" || id == "em") return SchemeKind::explicit_em;
  if (id == "split_step") return SchemeKind::split_step;
  if (id == "weak2") return SchemeKind::weak2;
  throw std::invalid_argument("unknown scheme id: " + id);
}

std::string scheme_id(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::explicit_em: return "explicit_em";
    case SchemeKind::split_step: return "split_step";
    case SchemeKind::weak2: return "weak2";
  }
  return "?";
}

SchemeConfig SchemeConfig::by_id(const std::string& id) {
  SchemeConfig cfg;
  cfg.kind = scheme_kind_by_id(id);
  cfg.weak_order = (cfg.kind == SchemeKind::weak2) ? 2 : 1;
  return cfg;
}

NoiseModel default_noise_for(SchemeKind kind) {
  NoiseModel m;
  m.kind = (kind == SchemeKind::weak2) ? NoiseKind::three_point : NoiseKind::gaussian;
  return m;
}

namespace {

inline void ensure_finite(const SmallVec& inc) {
  if (!inc.all_finite()) throw std::runtime_error("state blow-up");
}

// g(x) * eta, with g d x m and eta in R^m
inline SmallVec diffusion_kick(const SmallMat& g, const SmallVec& eta) {
  SmallVec out(g.rows);
  for (int i = 0; i < g.rows; ++i) {
    double s = 0;
    for (int k = 0; k < g.cols; ++k) s += g(i, k) * eta[k];
    out[i] = s;
  }
  return out;
}

SmallMat jacobian_or_fd(const SdeProblem& problem, const TorusPoint& x) {
  if (problem.has_drift_jacobian()) return problem.drift_jacobian(x);
  return field_jacobian(problem.drift_field(), x);
}

// sum_{j,l} a_{jl} d_j d_l f_i by central second differences, step 1e-4
SmallVec covariance_contracted_hessian(const SdeProblem& problem, const TorusPoint& x,
                                       const SmallMat& a) {
  constexpr double h = 1e-4;
  const int d = problem.d;
  SmallVec out(d);
  const SmallVec f0 = problem.drift(x);
  for (int j = 0; j < d; ++j) {
    for (int l = j; l < d; ++l) {
      const double w = (l == j) ? a(j, j) : 2.0 * a(j, l);
      if (w == 0.0) continue;
      SmallVec second(d);
      if (l == j) {
        SmallVec xp = x.c, xm = x.c;
        xp[j] += h;
        xm[j] -= h;
        const SmallVec fp = problem.drift(wrap(xp));
        const SmallVec fm = problem.drift(wrap(xm));
        for (int i = 0; i < d; ++i) second[i] = (fp[i] - 2.0 * f0[i] + fm[i]) / (h * h);
      } else {
        SmallVec xpp = x.c, xpm = x.c, xmp = x.c, xmm = x.c;
        xpp[j] += h; xpp[l] += h;
        xpm[j] += h; xpm[l] -= h;
        xmp[j] -= h; xmp[l] += h;
        xmm[j] -= h; xmm[l] -= h;
        const SmallVec fpp = problem.drift(wrap(xpp));
        const SmallVec fpm = problem.drift(wrap(xpm));
        const SmallVec fmp = problem.drift(wrap(xmp));
        const SmallVec fmm = problem.drift(wrap(xmm));
        for (int i = 0; i < d; ++i)
          second[i] = (fpp[i] - fpm[i] - fmp[i] + fmm[i]) / (4.0 * h * h);
      }
      for (int i = 0; i < d; ++i) out[i] += w * second[i];
    }
  }
  return out;
}

}  // namespace

SmallVec em_increment(const SdeProblem& problem, const TorusPoint& x, double delta,
                      const SmallVec& eta) {
  const SmallVec f = problem.drift(x);
  const SmallMat g = problem.diffusion(x);
  SmallVec inc = f * delta + diffusion_kick(g, eta) * std::sqrt(delta);
  ensure_finite(inc);
  return inc;
}

TorusPoint em_step(const SdeProblem& problem, const TorusPoint& x, double delta,
                   const SmallVec& eta) {
  return wrap(x.c + em_increment(problem, x, delta, eta));
}

SmallVec split_step_increment(const SdeProblem& problem, const TorusPoint& x, double delta,
                              const SmallVec& eta, const SchemeConfig& cfg) {
  if (delta * problem.lipschitz_bound > 0.5)
    throw std::invalid_argument("split-step requires delta * lipschitz_bound <= 0.5");

  // Fixed point y = x + f(y) delta, iterated from y = x on the covering space;
  // the contraction condition selects the solution branch closest to x.
  SmallVec y = x.c;
  bool converged = false;
  for (int it = 0; it < cfg.implicit_max_iters; ++it) {
    const SmallVec fy = problem.drift(wrap(y));
    const SmallVec y_next = x.c + fy * delta;
    const double resid = (y_next - y).norm_inf();
    y = y_next;
    if (resid <= cfg.implicit_tol) {
      // residual of the fixed-point equation itself
      const SmallVec check = x.c + problem.drift(wrap(y)) * delta - y;
      if (check.norm_inf() <= cfg.implicit_tol) {
        converged = true;
        break;
      }
    }
  }
  if (!converged) throw std::runtime_error("implicit solve failed");

  const TorusPoint yw = wrap(y);
  const SmallMat g = problem.diffusion(yw);
  SmallVec inc = (y - x.c) + diffusion_kick(g, eta) * std::sqrt(delta);
  ensure_finite(inc);
  return inc;
}

TorusPoint split_step(const SdeProblem& problem, const TorusPoint& x, double delta,
                      const SmallVec& eta, const SchemeConfig& cfg) {
  return wrap(x.c + split_step_increment(problem, x, delta, eta, cfg));
}

SmallVec weak2_increment(const SdeProblem& problem, const TorusPoint& x, double delta,
                         const SmallVec& xi) {
  if (!problem.constant_diffusion)
    throw std::invalid_argument("requires constant diffusion");

  const SmallVec f = problem.drift(x);
  const SmallMat g = problem.diffusion(x);
  const SmallMat a = g.gram();
  const SmallMat jf = jacobian_or_fd(problem, x);

  const double sq = std::sqrt(delta);
  // x + f D + g xi sqrt(D) + D^2/2 (f.grad f + a:grad grad f / 2) + D^{3/2}/2 (Df g) xi
  SmallVec inc = f * delta + diffusion_kick(g, xi) * sq;

  SmallVec lf = jf.apply(f);
  const SmallVec hess = covariance_contracted_hessian(problem, x, a);
  for (int i = 0; i < problem.d; ++i) lf[i] += 0.5 * hess[i];
  inc += lf * (0.5 * delta * delta);

  const SmallVec jfg_xi = jf.apply(diffusion_kick(g, xi));
  inc += jfg_xi * (0.5 * delta * sq);

  ensure_finite(inc);
  return inc;
}

TorusPoint weak2_step(const SdeProblem& problem, const TorusPoint& x, double delta,
                      const SmallVec& xi) {
  return wrap(x.c + weak2_increment(problem, x, delta, xi));
}

SmallVec scheme_increment(const SdeProblem& problem, const SchemeConfig& cfg,
                          const TorusPoint& x, double delta, const SmallVec& noise) {
  switch (cfg.kind) {
    case SchemeKind::explicit_em: return em_increment(problem, x, delta, noise);
    case SchemeKind::split_step: return split_step_increment(problem, x, delta, noise, cfg);
    case SchemeKind::weak2: return weak2_increment(problem, x, delta, noise);
  }
  throw std::logic_error("unreachable scheme kind");
}

TorusPoint scheme_step(const SdeProblem& problem, const SchemeConfig& cfg, const TorusPoint& x,
                       double delta, const SmallVec& noise) {
  return wrap(x.c + scheme_increment(problem, cfg, x, delta, noise));
}

void check_scheme_admissible(const SdeProblem& problem, const SchemeConfig& cfg, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must be in (0, 1)");
  if (cfg.kind == SchemeKind::split_step && delta * problem.lipschitz_bound > 0.5)
    throw std::invalid_argument("split-step requires delta * lipschitz_bound <= 0.5");
  if (cfg.kind == SchemeKind::weak2 && !problem.constant_diffusion)
    throw std::invalid_argument("requires constant diffusion");
}

namespace {

// Sorted index tuples with repetition from {0..d-1}, one representative per
// monomial (products commute).
void build_tuples(int d, int order, int start, std::vector<int>& cur,
                  std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == order) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < d; ++i) {
    cur.push_back(i);
    build_tuples(d, order, i, cur, out);
    cur.pop_back();
  }
}

struct MonomialAccum {
  std::vector<double> sum_ref, sumsq_ref, sum_sch, sumsq_sch, sum_abs_sch;
};

}  // namespace

OrderCheckReport weak_order_check(const SchemeConfig& scheme, const SdeProblem& problem,
                                  const std::vector<double>& delta_grid, int p,
                                  long long n_samples, RngStream stream,
                                  const NoiseModel& noise, int n_substeps, int threads) {
  if (p < 1) throw std::invalid_argument("weak_order_check: p >= 1");
  if (n_samples < 100000) throw std::invalid_argument("weak_order_check: need n_samples >= 1e5");
  if (delta_grid.size() < 2) throw std::invalid_argument("weak_order_check: need >= 2 deltas");
  for (size_t i = 0; i + 1 < delta_grid.size(); ++i) {
    if (std::abs(delta_grid[i] / delta_grid[i + 1] - 2.0) > 1e-9)
      throw std::invalid_argument("weak_order_check: delta grid must be geometric with ratio 2");
  }
  // n_substeps == 1 degenerates to scheme-vs-scheme (the self-check mode);
  // only a genuine SDE reference needs its bias guarded
  if (n_substeps > 1) {
    for (double delta : delta_grid) {
      if (delta / n_substeps > std::pow(delta, p + 1))
        throw std::invalid_argument("reference too coarse");
    }
  }

  // tuples for orders 1..2p+2; the last order only feeds the |deltabar| bound
  std::vector<std::vector<std::vector<int>>> tuples(static_cast<size_t>(2 * p + 3));
  for (int s = 1; s <= 2 * p + 2; ++s) {
    std::vector<int> cur;
    build_tuples(problem.d, s, 0, cur, tuples[static_cast<size_t>(s)]);
  }
  std::vector<std::pair<int, int>> monomials;  // (order, tuple index)
  for (int s = 1; s <= 2 * p + 2; ++s)
    for (size_t t = 0; t < tuples[static_cast<size_t>(s)].size(); ++t)
      monomials.emplace_back(s, static_cast<int>(t));
  const size_t n_mono = monomials.size();

  const NoiseModel ref_noise{NoiseKind::gaussian};
  // a handful of representative starting points; the defect is a sup over x
  std::vector<TorusPoint> starts;
  {
    const double offsets[3] = {0.7, 2.3, 4.1};
    for (double base : offsets) {
      SmallVec s0(problem.d);
      for (int i = 0; i < problem.d; ++i) s0[i] = base + 0.9 * i;
      starts.push_back(wrap(s0));
    }
  }

  OrderCheckReport report;
  report.scheme = scheme_id(scheme.kind);
  report.problem = problem.catalog_id;
  report.p_claimed = p;

  const long long chunk = 8192;
  const long long n_chunks = (n_samples + chunk - 1) / chunk;

  for (size_t di = 0; di < delta_grid.size(); ++di) {
    const double delta = delta_grid[di];
    const double delta_ref = delta / n_substeps;

    double best_defect = 0.0, best_defect_se = 0.0, db04 = 0.0;
    std::vector<double> class_defect(static_cast<size_t>(2 * p + 1), 0.0);
    std::vector<double> class_se(static_cast<size_t>(2 * p + 1), 0.0);

    for (size_t si = 0; si < starts.size(); ++si) {
      const TorusPoint start = starts[si];

      std::vector<MonomialAccum> chunk_acc(static_cast<size_t>(n_chunks));
      const std::uint64_t sid_base =
          stream.stream_id + (static_cast<std::uint64_t>(di) * starts.size() + si) *
                                 (2ULL * static_cast<std::uint64_t>(n_samples) + 16);

      par_for(n_chunks, threads, [&](long long ci) {
        MonomialAccum acc;
        acc.sum_ref.assign(n_mono, 0.0);
        acc.sumsq_ref.assign(n_mono, 0.0);
        acc.sum_sch.assign(n_mono, 0.0);
        acc.sumsq_sch.assign(n_mono, 0.0);
        acc.sum_abs_sch.assign(n_mono, 0.0);

        const long long lo = ci * chunk;
        const long long hi = std::min<long long>(lo + chunk, n_samples);
        for (long long i = lo; i < hi; ++i) {
          // reference: EM substepping of the SDE law, gaussian increments,
          // accumulated on the covering space
          RngStream ref_stream{stream.master_seed, sid_base + 2 * static_cast<std::uint64_t>(i), 0};
          SmallVec y = start.c;
          for (int ss = 0; ss < n_substeps; ++ss) {
            const SmallVec eta = sample_increment(ref_noise, ref_stream, problem.m);
            y += em_increment(problem, wrap(y), delta_ref, eta);
          }
          const SmallVec delta_true = y - start.c;

          RngStream sch_stream{stream.master_seed, sid_base + 2 * static_cast<std::uint64_t>(i) + 1, 0};
          const SmallVec xi = sample_increment(noise, sch_stream, problem.m);
          const SmallVec delta_scheme = scheme_increment(problem, scheme, start, delta, xi);

          for (size_t mi = 0; mi < n_mono; ++mi) {
            const auto& [order, ti] = monomials[mi];
            const auto& tup = tuples[static_cast<size_t>(order)][static_cast<size_t>(ti)];
            double pr = 1.0, ps = 1.0;
            for (int idx : tup) {
              pr *= delta_true[idx];
              ps *= delta_scheme[idx];
            }
            acc.sum_ref[mi] += pr;
            acc.sumsq_ref[mi] += pr * pr;
            acc.sum_sch[mi] += ps;
            acc.sumsq_sch[mi] += ps * ps;
            acc.sum_abs_sch[mi] += std::abs(ps);
          }
        }
        chunk_acc[static_cast<size_t>(ci)] = std::move(acc);
      });

      // deterministic sequential reduction over chunks
      std::vector<double> sum_ref(n_mono, 0.0), sumsq_ref(n_mono, 0.0), sum_sch(n_mono, 0.0),
          sumsq_sch(n_mono, 0.0), sum_abs(n_mono, 0.0);
      for (const auto& acc : chunk_acc) {
        for (size_t mi = 0; mi < n_mono; ++mi) {
          sum_ref[mi] += acc.sum_ref[mi];
          sumsq_ref[mi] += acc.sumsq_ref[mi];
          sum_sch[mi] += acc.sum_sch[mi];
          sumsq_sch[mi] += acc.sumsq_sch[mi];
          sum_abs[mi] += acc.sum_abs_sch[mi];
        }
      }

      const double n = static_cast<double>(n_samples);
      for (size_t mi = 0; mi < n_mono; ++mi) {
        const int order = monomials[mi].first;
        const double mean_ref = sum_ref[mi] / n;
        const double mean_sch = sum_sch[mi] / n;
        const double var_ref = std::max(0.0, sumsq_ref[mi] / n - mean_ref * mean_ref);
        const double var_sch = std::max(0.0, sumsq_sch[mi] / n - mean_sch * mean_sch);
        const double se = std::sqrt((var_ref + var_sch) / n);
        if (order <= 2 * p + 1) {
          const double defect = std::abs(mean_ref - mean_sch);
          if (defect > best_defect) {
            best_defect = defect;
            best_defect_se = se;
          }
          auto& cd = class_defect[static_cast<size_t>(order - 1)];
          if (defect > cd) {
            cd = defect;
            class_se[static_cast<size_t>(order - 1)] = se;
          }
        } else {
          db04 = std::max(db04, sum_abs[mi] / n);
        }
      }
    }

    OrderCheckPoint point;
    point.delta = delta;
    point.max_defect = best_defect;
    point.max_defect_se = best_defect_se;
    point.db04 = db04;
    point.class_defect = std::move(class_defect);
    point.class_se = std::move(class_se);
    report.points.push_back(std::move(point));
  }

  // Per-class slopes over well-resolved points only; the binding (slowest)
  // class is the certified rate. 5 sigma rather than 2: a class defect is the
  // max over tuples and start points, so points near the noise floor are
  // selection-biased upward and would flatten the fitted slope.
  report.class_slopes.assign(static_cast<size_t>(2 * p + 1),
                             std::numeric_limits<double>::quiet_NaN());
  bool any_class_fitted = false;
  double min_slope = std::numeric_limits<double>::infinity();
  for (int s = 1; s <= 2 * p + 1; ++s) {
    std::vector<double> lx, ly;
    for (const auto& pt : report.points) {
      const double defect = pt.class_defect[static_cast<size_t>(s - 1)];
      const double se = pt.class_se[static_cast<size_t>(s - 1)];
      if (defect > 5.0 * se && defect > 0.0) {
        lx.push_back(std::log(pt.delta));
        ly.push_back(std::log(defect));
      }
    }
    if (lx.size() >= 2) {
      const double slope = ols(lx, ly).slope;
      report.class_slopes[static_cast<size_t>(s - 1)] = slope;
      min_slope = std::min(min_slope, slope);
      any_class_fitted = true;
    }
  }
  report.all_noise = !any_class_fitted;
  report.defect_slope = any_class_fitted ? min_slope : 0.0;

  std::vector<double> bx, by;
  for (const auto& pt : report.points) {
    if (pt.db04 > 0.0) {
      bx.push_back(std::log(pt.delta));
      by.push_back(std::log(pt.db04));
    }
  }
  if (bx.size() >= 2) report.db04_slope = ols(bx, by).slope;

  report.db04_k = 0.0;
  for (const auto& pt : report.points)
    report.db04_k = std::max(report.db04_k, pt.db04 / std::pow(pt.delta, p + 1));

  // a certificate is positive evidence: a run whose defects are all lost in
  // the Monte-Carlo floor certifies nothing (all_noise marks it)
  report.pass = any_class_fitted && report.defect_slope >= p + 1 - 0.4 &&
                report.db04_slope >= p + 1 - 0.4;
  return report;
}

}  // namespace ergo
