#include "pfspin/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfspin {

std::string to_string(NewtonVariant v) {
  switch (v) {
    case NewtonVariant::ND: return "nd";
    case NewtonVariant::NK: return "nk";
    case NewtonVariant::INK: return "ink";
  }
  return "?";
}

void NewtonConfig::validate() const {
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0)) {
    throw std::invalid_argument("NewtonConfig: need 0 < c1 < c2 < 1");
  }
  if (eps_abs_sub_nonl < 0 || eps_rel_sub_nonl < 0 || eps_abs_lin < 0 || eps_rel_lin < 0 || eta < 0) {
    throw std::invalid_argument("NewtonConfig: negative tolerance");
  }
  if (max_iters < 0 || max_line_search_evals < 1) throw std::invalid_argument("NewtonConfig: bad iteration limits");
}

Vector ensure_descent(const Vector& p, const Vector& grad, const Vector& newton_fallback) {
  if (p.dot(grad) < 0.0) return p;
  if (newton_fallback.size() == grad.size() && newton_fallback.dot(grad) < 0.0) return newton_fallback;
  return -grad;
}

namespace {

struct Trial {
  double a;
  double f;
  double d;
};

double cubic_step(const Trial& lo, const Trial& hi) {
  const double w = hi.a - lo.a;
  const double lo_bound = std::min(lo.a, hi.a) + 0.1 * std::abs(w);
  const double hi_bound = std::max(lo.a, hi.a) - 0.1 * std::abs(w);
  const double d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (lo.a - hi.a);
  const double disc = d1 * d1 - lo.d * hi.d;
  double a = 0.5 * (lo.a + hi.a);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), w);
    const double denom = hi.d - lo.d + 2.0 * d2;
    if (denom != 0.0) {
      const double c = hi.a - w * (hi.d + d2 - d1) / denom;
      if (std::isfinite(c)) a = c;
    }
  }
  return std::clamp(a, lo_bound, hi_bound);
}

// Zero of the linear interpolant of the slope, kept inside the interval.
double secant_step(const Trial& lo, const Trial& hi) {
  const double w = hi.a - lo.a;
  double a = 0.5 * (lo.a + hi.a);
  if (hi.d != lo.d) {
    const double c = lo.a - lo.d * w / (hi.d - lo.d);
    if (std::isfinite(c)) a = c;
  }
  return std::clamp(a, std::min(lo.a, hi.a) + 0.1 * std::abs(w), std::max(lo.a, hi.a) - 0.1 * std::abs(w));
}

}  // namespace

LineSearchResult line_search_cubic(const std::function<double(const Vector&)>& f,
                                   const std::function<Vector(const Vector&)>& grad, const Vector& x, const Vector& p,
                                   const LineSearchOptions& opts, std::optional<double> f0, const Vector* g0) {
  LineSearchResult out;
  const double phi0 = f0 ? *f0 : f(x);
  const Vector grad0 = g0 ? *g0 : grad(x);
  const double d0 = grad0.dot(p);
  if (!(d0 < 0.0)) throw SolverError("line search: direction is not a descent direction");

  const double noise = opts.energy_noise * std::max(std::abs(phi0), std::numeric_limits<double>::min());
  Vector xa;
  Vector ga;
  auto eval = [&](double a) {
    xa = x + a * p;
    const double fa = f(xa);
    ga = grad(xa);
    ++out.evaluations;
    return Trial{a, fa, ga.dot(p)};
  };
  auto armijo = [&](const Trial& t) { return t.f <= phi0 + opts.c1 * t.a * d0; };
  auto curvature = [&](const Trial& t) { return std::abs(t.d) <= -opts.c2 * d0; };
  auto unresolved = [&](const Trial& t) { return t.f - phi0 <= noise && curvature(t); };
  // f cannot rank points this close to phi0; only the slope is informative.
  auto flat = [&](const Trial& t) { return std::abs(t.f - phi0) <= noise; };
  auto accept = [&](const Trial& t, bool approximate) {
    out.alpha = t.a;
    out.f = t.f;
    out.grad = ga;
    out.success = true;
    out.approximate = approximate;
    return out;
  };

  auto zoom = [&](Trial lo, Trial hi) {
    while (out.evaluations < opts.max_evals) {
      if (std::abs(hi.a - lo.a) < opts.min_step) break;
      const Trial t = eval(flat(lo) && flat(hi) ? secant_step(lo, hi) : cubic_step(lo, hi));
      if (flat(t)) {
        if (curvature(t)) return accept(t, !armijo(t));
        // keep the minimizer of the slope model bracketed
        if (t.d * (hi.a - lo.a) < 0.0) {
          lo = t;
        } else {
          hi = t;
        }
        continue;
      }
      if (!armijo(t) || t.f >= lo.f) {
        if (unresolved(t)) return accept(t, !armijo(t));
        hi = t;
      } else {
        if (curvature(t)) return accept(t, false);
        if (t.d * (hi.a - lo.a) >= 0.0) hi = lo;
        lo = t;
      }
    }
    out.success = false;
    return out;
  };

  Trial prev{0.0, phi0, d0};
  double a = 1.0;
  while (out.evaluations < opts.max_evals) {
    const Trial t = eval(a);
    if (flat(t) && !curvature(t)) {
      if (t.d >= 0.0) return zoom(prev, t);
      if (a >= opts.alpha_max) return accept(t, true);
      prev = t;
      a = std::min(2.0 * a, opts.alpha_max);
      continue;
    }
    if (!armijo(t) || (out.evaluations > 1 && t.f >= prev.f)) {
      if (unresolved(t)) return accept(t, !armijo(t));
      return zoom(prev, t);
    }
    if (curvature(t)) return accept(t, false);
    if (t.d >= 0.0) return zoom(t, prev);
    if (a >= opts.alpha_max) return accept(t, true);
    prev = t;
    a = std::min(2.0 * a, opts.alpha_max);
  }
  out.success = false;
  return out;
}

NewtonResult newton_solve(const NonlinearProblem& problem, const Vector& x0, const NewtonConfig& config) {
  config.validate();
  if (x0.size() != problem.dim) throw std::invalid_argument("newton_solve: initial guess has wrong size");
  NewtonResult out;
  out.x = x0;
  Vector& x = out.x;
  NewtonStats& st = out.stats;

  Vector r = problem.residual(x);
  double f = problem.energy(x);
  st.initial_residual = r.norm();
  const double target = std::max(config.eps_abs_sub_nonl, config.eps_rel_sub_nonl * st.initial_residual);

  LineSearchOptions ls;
  ls.c1 = config.wolfe_c1;
  ls.c2 = config.wolfe_c2;
  ls.max_evals = config.max_line_search_evals;
  ls.min_step = config.min_step;

  double rnorm = st.initial_residual;
  for (int k = 0;; ++k) {
    if (rnorm <= target) {
      st.converged = true;
      break;
    }
    if (k >= config.max_iters) {
      st.final_residual = rnorm;
      throw SolverError("newton: no convergence in " + std::to_string(config.max_iters) + " iterations (|R| = " +
                        std::to_string(rnorm) + ")");
    }
    const SparseMatrix jac = (k == 0 && problem.initial_jacobian) ? *problem.initial_jacobian : problem.jacobian(x);

    NewtonIteration rec;
    rec.iter = k + 1;
    rec.merit_before = f;
    const Vector b = -r;
    Vector p = Vector::Zero(problem.dim);
    if (config.variant == NewtonVariant::ND) {
      try {
        p = direct_solve(jac, b);
      } catch (const SingularMatrixError& e) {
        throw SolverError(std::string("newton: ") + e.what());
      }
      rec.linear_iters = 1;
      rec.linear_target = 0.0;
    } else {
      KrylovSpec spec;
      spec.method = config.krylov;
      spec.rel_tol = config.variant == NewtonVariant::INK ? config.eta : config.eps_rel_lin;
      // An absolute floor at or above |R| would accept p = 0.
      spec.abs_tol = std::min(config.eps_abs_lin, 0.1 * rnorm);
      spec.max_iters = config.krylov_max_iters;
      spec.preconditioner = make_preconditioner(config.preconditioner, jac);
      const auto kr = krylov_solve(LinearOperator::from_matrix(jac), b, p, spec);
      rec.linear_iters = kr.iterations;
      rec.linear_target = kr.target;
      if (!kr.converged) {
        throw SolverError(std::string("newton: linear solver ") + (kr.breakdown ? "broke down" : "did not converge") +
                          " (" + std::to_string(kr.residual_norm) + " > " + std::to_string(kr.target) + ")");
      }
    }
    rec.linear_residual = (jac * p + r).norm();
    st.linear_iterations += rec.linear_iters;

    p = ensure_descent(p, r, b);
    const auto res = line_search_cubic(problem.energy, problem.residual, x, p, ls, f, &r);
    if (!res.success) {
      throw SolverError("newton: line search failed after " + std::to_string(res.evaluations) + " evaluations");
    }
    x.noalias() += res.alpha * p;
    r = res.grad;
    f = res.f;
    rnorm = r.norm();
    rec.alpha = res.alpha;
    rec.merit_after = f;
    rec.residual_norm = rnorm;
    rec.approximate_wolfe = res.approximate;
    st.trace.push_back(rec);
    st.iterations = k + 1;
  }
  st.final_residual = rnorm;
  return out;
}

void SolveAudit::count_merit(double before, double after) {
  if (after > before + kMeritNoise * std::abs(before)) {
    ++merit_increases;
  } else if (after > before) {
    ++roundoff_increases;
  }
}

void SolveAudit::absorb(const NewtonStats& s, bool inexact) {
  for (const auto& it : s.trace) {
    ++accepted_steps;
    if (it.approximate_wolfe) ++approximate_wolfe_steps;
    count_merit(it.merit_before, it.merit_after);
    if (inexact && it.linear_target > 0.0) {
      worst_forcing_ratio = std::max(worst_forcing_ratio, it.linear_residual / it.linear_target);
    }
  }
}

void SolveAudit::merge(const SolveAudit& o) {
  merit_increases += o.merit_increases;
  roundoff_increases += o.roundoff_increases;
  approximate_wolfe_steps += o.approximate_wolfe_steps;
  accepted_steps += o.accepted_steps;
  worst_forcing_ratio = std::max(worst_forcing_ratio, o.worst_forcing_ratio);
  worst_global_forcing_ratio = std::max(worst_global_forcing_ratio, o.worst_global_forcing_ratio);
  global_checks += o.global_checks;
  fresh_violations += o.fresh_violations;
  exact_violations += o.exact_violations;
  worst_fresh_ratio = std::max(worst_fresh_ratio, o.worst_fresh_ratio);
  worst_exact_ratio = std::max(worst_exact_ratio, o.worst_exact_ratio);
}

}  // namespace pfspin
