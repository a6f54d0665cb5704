// Operator-splitting QP solver for
//
//   min 1/2 v'Pv + q'v  s.t.  v_i >= 0 (i bounded).
//
// The bound constraints are split off as z = v_bounded, giving the
// iteration
//
//   (P + sigma I + rho M) x~ = sigma x - q + M (rho z - y)
//   x  <- alpha x~ + (1 - alpha) x
//   z  <- max(0, alpha x~ + (1 - alpha) z + y / rho)
//   y  <- y + rho (alpha x~ + (1 - alpha) z_old - z)
//
// with M the diagonal bound mask. The problem is equilibrated by a diagonal
// Ruiz scaling of P. At every residual check an active-set polish is tried:
// the guessed active bounds are fixed at zero and the reduced stationarity
// system is solved by regularized iterative refinement.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "resunit/error.hpp"
#include "resunit/solver.hpp"

namespace resunit {

namespace {

struct Scaled {
  Eigen::MatrixXd p;
  Eigen::VectorXd q;
  Eigen::VectorXd d;  ///< v = d .* x
};

Scaled equilibrate(const QpProblem& prob) {
  const Index n = prob.num_vars();
  Scaled s{prob.hessian, prob.linear, Eigen::VectorXd::Ones(n)};
  for (int pass = 0; pass < 15; ++pass) {
    Eigen::VectorXd step(n);
    for (Index i = 0; i < n; ++i) {
      const double nrm = s.p.row(i).cwiseAbs().maxCoeff();
      step(i) = nrm > 1e-10 ? 1.0 / std::sqrt(nrm) : 1.0;
    }
    s.p = step.asDiagonal() * s.p * step.asDiagonal();
    s.d = s.d.cwiseProduct(step);
  }
  s.q = s.d.cwiseProduct(prob.linear);
  return s;
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

struct Kkt {
  double stationarity = 0.0;  ///< natural residual |v - proj(v - g)|
  double complementarity = 0.0;
  double min_bound = 0.0;
  Eigen::VectorXd grad;
};

Kkt evaluate(const QpProblem& prob, const Eigen::VectorXd& mask, const Eigen::VectorXd& v) {
  Kkt k;
  k.grad = prob.hessian * v + prob.linear;
  double stat = 0.0;
  double comp = 0.0;
  double min_bound = 0.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (mask(i) > 0.0) {
      const double projected = std::max(0.0, v(i) - k.grad(i));
      stat = std::max(stat, std::abs(v(i) - projected));
      comp += v(i) * k.grad(i);
      min_bound = std::min(min_bound, v(i));
    } else {
      stat = std::max(stat, std::abs(k.grad(i)));
    }
  }
  k.stationarity = stat;
  k.complementarity = std::abs(comp);
  k.min_bound = min_bound;
  return k;
}

/// Solves the stationarity system with the bounded variables in `active`
/// fixed at zero, by regularized iterative refinement started at `start`.
bool reduced_solve(const QpProblem& prob, const std::vector<bool>& active,
                   const Eigen::VectorXd& start, Eigen::VectorXd& out) {
  const Index n = prob.num_vars();
  std::vector<Index> free_idx;
  for (Index i = 0; i < n; ++i) {
    if (!active[i]) free_idx.push_back(i);
  }
  out = Eigen::VectorXd::Zero(n);
  if (free_idx.empty()) return true;
  const Index f = static_cast<Index>(free_idx.size());
  Eigen::MatrixXd pff(f, f);
  Eigen::VectorXd qf(f);
  Eigen::VectorXd xf(f);
  for (Index a = 0; a < f; ++a) {
    qf(a) = prob.linear(free_idx[a]);
    xf(a) = start(free_idx[a]);
    for (Index b = 0; b < f; ++b) pff(a, b) = prob.hessian(free_idx[a], free_idx[b]);
  }
  const double delta = 1e-9 * std::max(1.0, pff.diagonal().cwiseAbs().maxCoeff());
  Eigen::MatrixXd reg = pff;
  reg.diagonal().array() += delta;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) return false;
  for (int it = 0; it < 10; ++it) {
    const Eigen::VectorXd step = llt.solve(-(pff * xf + qf));
    xf += step;
    if (inf_norm(step) <= 1e-14 * std::max(1.0, inf_norm(xf))) break;
  }
  if (!xf.allFinite()) return false;
  for (Index a = 0; a < f; ++a) out(free_idx[a]) = xf(a);
  return true;
}

/// Active-set polish: guess the active bounds from the ADMM iterate, solve the
/// reduced system, then repair the guess by fixing bounded variables that
/// came out negative and releasing fixed ones whose gradient is negative.
bool polish(const QpProblem& prob, const Eigen::VectorXd& mask, const Eigen::VectorXd& v_admm,
            const Eigen::VectorXd& y_unscaled, const SolverConfig& cfg, Eigen::VectorXd& out) {
  const Index n = prob.num_vars();
  std::vector<bool> active(n, false);
  for (Index i = 0; i < n; ++i) active[i] = mask(i) > 0.0 && v_admm(i) + y_unscaled(i) < 0.0;
  const double scale = std::max(1.0, inf_norm(prob.linear));
  for (int round = 0; round < 8; ++round) {
    if (!reduced_solve(prob, active, v_admm, out)) return false;
    const Eigen::VectorXd grad = prob.hessian * out + prob.linear;
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      if (mask(i) <= 0.0) continue;
      if (!active[i] && out(i) < -cfg.feas_tol) {
        active[i] = true;
        changed = true;
      } else if (active[i] && grad(i) < -1e-12 * scale) {
        active[i] = false;
        changed = true;
      }
    }
    if (!changed) break;
  }
  for (Index i = 0; i < n; ++i) {
    if (mask(i) <= 0.0) continue;
    if (out(i) < -cfg.feas_tol) return false;
    out(i) = std::max(0.0, out(i));
  }
  const Kkt kkt = evaluate(prob, mask, out);
  return kkt.stationarity <= cfg.stat_tol * scale &&
         kkt.complementarity <= cfg.gap_tol * std::max(1.0, std::abs(qp_objective(prob, out)));
}

/// Projected Newton on the bound-constrained problem, started from `start`.
/// Bounded variables at zero with a positive gradient are held fixed; the
/// rest take a regularized Newton step followed by a projected Armijo
/// search. Every accepted step lowers the objective, so the active set
/// cannot cycle.
bool projected_newton(const QpProblem& prob, const Eigen::VectorXd& mask, const Eigen::VectorXd& start,
                      const SolverConfig& cfg, Eigen::VectorXd& out) {
  const Index n = prob.num_vars();
  const double scale = std::max(1.0, inf_norm(prob.linear));
  Eigen::VectorXd v = start;
  for (Index i = 0; i < n; ++i) {
    if (mask(i) > 0.0) v(i) = std::max(0.0, v(i));
  }
  auto project = [&](Eigen::VectorXd w) {
    for (Index i = 0; i < n; ++i) {
      if (mask(i) > 0.0) w(i) = std::max(0.0, w(i));
    }
    return w;
  };
  double f = qp_objective(prob, v);
  for (int it = 0; it < 200; ++it) {
    const Kkt kkt = evaluate(prob, mask, v);
    if (kkt.stationarity <= cfg.stat_tol * scale &&
        kkt.complementarity <= cfg.gap_tol * std::max(1.0, std::abs(f))) {
      out = v;
      return true;
    }
    const double eps = std::min(1e-6, kkt.stationarity);
    std::vector<bool> fixed(n, false);
    for (Index i = 0; i < n; ++i) fixed[i] = mask(i) > 0.0 && v(i) <= eps && kkt.grad(i) > 0.0;
    Eigen::VectorXd target;
    if (!reduced_solve(prob, fixed, v, target)) return false;
    Eigen::VectorXd dir = target - v;
    for (Index i = 0; i < n; ++i) {
      if (fixed[i]) dir(i) = -kkt.grad(i) / std::max(prob.hessian(i, i), 1e-12);
    }
    double alpha = 1.0;
    bool accepted = false;
    while (alpha >= 1e-12) {
      const Eigen::VectorXd trial = project(v + alpha * dir);
      const double f_trial = qp_objective(prob, trial);
      double decrease = 0.0;
      for (Index i = 0; i < n; ++i) decrease += kkt.grad(i) * (v(i) - trial(i));
      if (f_trial <= f - 1e-4 * std::max(0.0, decrease) && f_trial <= f) {
        accepted = f_trial < f;
        v = trial;
        f = f_trial;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  const Kkt kkt = evaluate(prob, mask, v);
  out = v;
  return kkt.stationarity <= cfg.stat_tol * scale &&
         kkt.complementarity <= cfg.gap_tol * std::max(1.0, std::abs(f));
}

/// Refines an accepted point by re-solving the stationarity system exactly
/// on its zero set, then releasing bounds held at zero by multipliers below
/// the stationarity tolerance. On flat optimum sets such weakly active
/// bounds leave residuals the KKT test cannot see. A candidate replaces the
/// point only if it stays feasible, optimal and no worse in objective.
void refine(const QpProblem& prob, const Eigen::VectorXd& mask, const SolverConfig& cfg, Eigen::VectorXd& v) {
  const Index n = prob.num_vars();
  const double scale = std::max(1.0, inf_norm(prob.linear));
  auto try_active = [&](const std::vector<bool>& active) {
    Eigen::VectorXd trial;
    if (!reduced_solve(prob, active, v, trial)) return false;
    for (Index i = 0; i < n; ++i) {
      if (mask(i) <= 0.0) continue;
      if (trial(i) < -cfg.feas_tol) return false;
      trial(i) = std::max(0.0, trial(i));
    }
    const double f = qp_objective(prob, v);
    const double f_trial = qp_objective(prob, trial);
    if (f_trial > f + 1e-15 * std::max(1.0, std::abs(f))) return false;
    const Kkt kkt = evaluate(prob, mask, trial);
    if (kkt.stationarity > cfg.stat_tol * scale ||
        kkt.complementarity > cfg.gap_tol * std::max(1.0, std::abs(f_trial))) {
      return false;
    }
    v = trial;
    return true;
  };
  for (int round = 0; round < 4; ++round) {
    const Eigen::VectorXd grad = prob.hessian * v + prob.linear;
    std::vector<bool> zero(n, false);
    std::vector<bool> strong(n, false);
    bool weak = false;
    for (Index i = 0; i < n; ++i) {
      if (mask(i) <= 0.0 || v(i) > 0.0) continue;
      zero[i] = true;
      strong[i] = grad(i) > cfg.stat_tol * scale;
      weak |= !strong[i];
    }
    if (round == 0) {
      try_active(zero);
      SolverConfig tight = cfg;
      tight.stat_tol = cfg.stat_tol * 1e-6;
      Eigen::VectorXd sharp;
      projected_newton(prob, mask, v, tight, sharp);
      const double f_sharp = qp_objective(prob, sharp);
      const Kkt kkt = evaluate(prob, mask, sharp);
      if (f_sharp <= qp_objective(prob, v) && kkt.stationarity <= cfg.stat_tol * scale &&
          kkt.complementarity <= cfg.gap_tol * std::max(1.0, std::abs(f_sharp))) {
        v = sharp;
      }
    }
    if (!weak || !try_active(strong)) return;
  }
}

}  // namespace

double qp_objective(const QpProblem& problem, const Vec& v) {
  return 0.5 * v.dot(problem.hessian * v) + problem.linear.dot(v) + problem.constant;
}

SolveReport solve_qp(const QpProblem& problem, const SolverConfig& cfg) {
  validate(problem);
  const Index n = problem.num_vars();
  Eigen::VectorXd mask = Eigen::VectorXd::Zero(n);
  for (Index i : problem.nonneg) mask(i) = 1.0;

  const Scaled s = equilibrate(problem);
  const Eigen::VectorXd d_inv = s.d.cwiseInverse();

  double rho = cfg.rho;
  auto factor = [&](double r) {
    Eigen::MatrixXd k = s.p;
    k.diagonal().array() += cfg.sigma;
    k.diagonal() += r * mask;
    return Eigen::LLT<Eigen::MatrixXd>(k);
  };
  Eigen::LLT<Eigen::MatrixXd> llt = factor(rho);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::SolverFailed, "QP: KKT factorization failed");
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);

  SolveReport rep;
  rep.status = SolveStatus::IterationLimit;
  Eigen::VectorXd best = x;
  int it = 0;
  for (it = 1; it <= cfg.max_iterations; ++it) {
    const Eigen::VectorXd rhs = cfg.sigma * x - s.q + mask.cwiseProduct(rho * z - y);
    const Eigen::VectorXd xt = llt.solve(rhs);
    const Eigen::VectorXd zt = mask.cwiseProduct(xt);
    x = cfg.alpha * xt + (1.0 - cfg.alpha) * x;
    const Eigen::VectorXd zr = cfg.alpha * zt + (1.0 - cfg.alpha) * z;
    const Eigen::VectorXd z_new = (zr + y / rho).cwiseMax(0.0).cwiseProduct(mask);
    y += rho * (zr - z_new);
    z = z_new;

    if (it % cfg.check_interval != 0 && it != cfg.max_iterations) continue;
    if (!x.allFinite()) {
      rep.status = SolveStatus::NumericalTrouble;
      break;
    }

    const Eigen::VectorXd v = s.d.cwiseProduct(x);
    const Eigen::VectorXd px = s.p * x;
    const double r_prim = inf_norm(s.d.cwiseProduct(mask.cwiseProduct(x) - z));
    const double r_dual = inf_norm(d_inv.cwiseProduct(px + s.q + y));
    const double prim_scale = std::max(inf_norm(s.d.cwiseProduct(mask.cwiseProduct(x))),
                                       inf_norm(s.d.cwiseProduct(z)));
    const double dual_scale = std::max({inf_norm(d_inv.cwiseProduct(px)),
                                        inf_norm(d_inv.cwiseProduct(y)),
                                        inf_norm(d_inv.cwiseProduct(s.q))});

    // Unboundedness: the iterate has run off along a ray dx with P dx ~ 0,
    // q'dx < 0 and dx >= 0 on the bounded coordinates.
    const double v_norm = inf_norm(v);
    if (v_norm > 1e10) {
      const Eigen::VectorXd dx = v / v_norm;
      const Eigen::VectorXd pdx = problem.hessian * dx;
      const bool cone = (mask.cwiseProduct(dx)).minCoeff() >= -1e-6;
      if (inf_norm(pdx) <= 1e-6 && problem.linear.dot(dx) < -1e-6 && cone) {
        rep.status = SolveStatus::Unbounded;
        best = v;
        break;
      }
    }
    best = v;

    if (cfg.polish) {
      Eigen::VectorXd polished;
      const Eigen::VectorXd y_unscaled = d_inv.cwiseProduct(y);
      const int check = it / cfg.check_interval;
      const bool newton_turn = (check & (check - 1)) == 0;
      if (polish(problem, mask, v, y_unscaled, cfg, polished) ||
          (newton_turn && projected_newton(problem, mask, v, cfg, polished))) {
        refine(problem, mask, cfg, polished);
        best = polished;
        rep.polished = true;
        rep.status = SolveStatus::Optimal;
        break;
      }
    }

    if (r_prim <= cfg.feas_tol * (1.0 + prim_scale) && r_dual <= cfg.stat_tol * (1.0 + dual_scale)) {
      rep.status = SolveStatus::Optimal;
      break;
    }

    // Adaptive step size.
    const double ratio = std::sqrt((r_prim / (prim_scale + 1e-12)) / (r_dual / (dual_scale + 1e-12) + 1e-30));
    if (std::isfinite(ratio) && (ratio > 5.0 || ratio < 0.2)) {
      const double new_rho = std::clamp(rho * ratio, 1e-6, 1e6);
      if (new_rho != rho) {
        rho = new_rho;
        llt = factor(rho);
        if (llt.info() != Eigen::Success) {
          rep.status = SolveStatus::NumericalTrouble;
          break;
        }
      }
    }
  }
  rep.iterations = std::min(it, cfg.max_iterations);

  for (Index i = 0; i < n; ++i) {
    if (mask(i) > 0.0) best(i) = std::max(0.0, best(i));
  }
  const Kkt kkt = evaluate(problem, mask, best);
  rep.point = best;
  rep.objective_value = qp_objective(problem, best);
  rep.max_infeasibility = std::max(0.0, -kkt.min_bound);
  rep.stationarity = kkt.stationarity;
  rep.duality_gap = kkt.complementarity;
  rep.dual = kkt.grad.cwiseProduct(mask);
  return rep;
}

}  // namespace resunit
