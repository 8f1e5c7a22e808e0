#include "mvsteady/deflation.hpp"

#include "mvsteady/translation.hpp"

#include <cmath>

namespace mvsteady {

Vector residual(const Vector& a, const GalerkinOperators& ops) {
  const Index size = ops.size();
  if (a.size() != size) throw InputError("residual: coefficient vector has wrong length");
  if (!a.allFinite()) throw InputError("residual: non-finite coefficients");
  Vector f(size + 1);
  f.head(size) = -(ops.linear_operator() * a) - ops.interaction.apply(a, a);
  f[size] = ops.zeta.dot(a) - 1.0;
  return f;
}

Matrix jacobian(const Vector& a, const GalerkinOperators& ops) {
  const Index size = ops.size();
  if (a.size() != size) throw InputError("jacobian: coefficient vector has wrong length");
  Matrix j(size + 1, size);
  j.topRows(size) = -ops.linear_operator() - ops.interaction.jacobian_first(a) - ops.interaction.jacobian_second(a);
  j.row(size) = ops.zeta.transpose();
  return j;
}

NonlinearSystem galerkin_system(const GalerkinOperators& ops) {
  return {ops.size(), [&ops](const Vector& a) { return residual(a, ops); },
          [&ops](const Vector& a) { return jacobian(a, ops); }};
}

Deflation::Deflation(std::vector<Vector> roots, double power, double shift)
    : roots_(std::move(roots)), power_(power), shift_(shift) {
  if (!(power > 0.0)) throw InputError("deflation power must be positive");
  if (!(shift >= 0.0)) throw InputError("deflation shift must be non-negative");
}

std::pair<double, Vector> Deflation::eta(const Vector& a) const {
  double eta = 1.0;
  Vector grad = Vector::Zero(a.size());
  for (const auto& r : roots_) {
    const Vector diff = a - r;
    const double d = diff.norm();
    const double dp = std::pow(d, power_);
    grad = grad * dp + eta * power_ * std::pow(d, power_ - 2.0) * diff;
    eta *= dp;
  }
  return {eta, grad};
}

double Deflation::factor(const Vector& a) const {
  if (roots_.empty()) return 1.0;
  return 1.0 / eta(a).first + shift_;
}

Vector Deflation::apply(const NonlinearSystem& sys, const Vector& a) const {
  return sys.residual(a) * factor(a);
}

Matrix Deflation::jacobian(const NonlinearSystem& sys, const Vector& a) const {
  const Matrix jf = sys.jacobian(a);
  if (roots_.empty()) return jf;
  const auto [e, de] = eta(a);
  const Vector f = sys.residual(a);
  return (1.0 / e + shift_) * jf - f * de.transpose() / (e * e);
}

std::string to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max_iterations";
    case NewtonStatus::blow_up: return "blow_up";
    case NewtonStatus::non_finite: return "non_finite";
  }
  return "unknown";
}

std::string to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::unknown: return "unknown";
  }
  return "unknown";
}

NewtonResult newton_solve(const Vector& a0, const NonlinearSystem& sys, const Deflation& deflation,
                          const DeflationConfig& dcfg, const NewtonConfig& ncfg) {
  if (a0.size() != sys.unknowns) throw InputError("newton_solve: initial guess has wrong length");
  if (!(ncfg.step_tol > 0.0)) throw InputError("newton step tolerance must be positive");
  NewtonResult out;
  Vector a = a0;
  for (int n = 1; n <= ncfg.max_iter; ++n) {
    out.iterations = n;
    const Vector g = deflation.apply(sys, a);
    const Matrix jg = deflation.jacobian(sys, a);
    if (!g.allFinite() || !jg.allFinite()) {
      out.status = NewtonStatus::non_finite;
      break;
    }
    const Vector step = Eigen::CompleteOrthogonalDecomposition<Matrix>(jg).solve(g);
    if (!step.allFinite()) {
      out.status = NewtonStatus::non_finite;
      break;
    }
    a -= step;
    const double step_norm = step.norm();
    out.step_history.push_back(step_norm);
    if (a.norm() > dcfg.divergence_cap) {
      out.status = NewtonStatus::blow_up;
      break;
    }
    if (step_norm <= ncfg.step_tol) {
      out.status = NewtonStatus::converged;
      break;
    }
  }
  out.iterate = a;
  out.residual_norm = a.allFinite() ? sys.residual(a).norm() : std::numeric_limits<double>::infinity();
  return out;
}

DeflationChain deflate_roots(const NonlinearSystem& sys, const Vector& a0, const DeflationConfig& dcfg,
                             const NewtonConfig& ncfg) {
  DeflationChain chain;
  Deflation deflation({}, dcfg.power, dcfg.shift);
  while (true) {
    if (static_cast<int>(chain.roots.size()) >= dcfg.max_roots) {
      chain.stop_reason = "max_roots";
      break;
    }
    auto result = newton_solve(a0, sys, deflation, dcfg, ncfg);
    const bool accepted = result.converged() && result.residual_norm <= ncfg.accept_tol;
    const NewtonStatus status = result.status;
    const Vector root = result.iterate;
    chain.solves.push_back(std::move(result));
    if (!accepted) {
      chain.stop_reason = status == NewtonStatus::converged ? "residual_above_tolerance" : to_string(status);
      break;
    }
    chain.roots.push_back(root);
    deflation.add_root(root);
  }
  return chain;
}

double min_density_on_mesh(const Vector& coeffs, const SpectralBasis& basis, int points_per_axis) {
  return density_on_uniform_grid(coeffs, basis, points_per_axis).minCoeff();
}

SteadyStateSet find_all_steady_states(const GalerkinOperators& ops, const Vector& a0, const DeflationConfig& dcfg,
                                      const NewtonConfig& ncfg, const FilterConfig& fcfg) {
  return find_all_steady_states(ops, std::vector<Vector>{a0}, dcfg, ncfg, fcfg);
}

SteadyStateSet find_all_steady_states(const GalerkinOperators& ops, const std::vector<Vector>& guesses,
                                      const DeflationConfig& dcfg, const NewtonConfig& ncfg,
                                      const FilterConfig& fcfg) {
  const auto sys = galerkin_system(ops);
  std::vector<DeflationChain> chains(guesses.size());
  // Chains are independent; results are merged in guess order below.
#if defined(_OPENMP)
#pragma omp parallel for schedule(dynamic) if (guesses.size() > 1)
#endif
  for (std::size_t c = 0; c < guesses.size(); ++c) chains[c] = deflate_roots(sys, guesses[c], dcfg, ncfg);

  SteadyStateSet set;
  std::vector<SteadyState> unique;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    set.chain_stop_reasons.push_back(chains[c].stop_reason);
    set.newton_solves += static_cast<int>(chains[c].solves.size());
    for (std::size_t d = 0; d < chains[c].roots.size(); ++d) {
      const Vector& r = chains[c].roots[d];
      bool duplicate = false;
      for (const auto& u : unique) {
        if ((u.coeffs - r).lpNorm<Eigen::Infinity>() <= fcfg.dedup_tol) {
          duplicate = true;
          break;
        }
      }
      if (duplicate) continue;
      SteadyState s;
      s.coeffs = r;
      s.residual_norm = sys.residual(r).norm();
      s.min_density = min_density_on_mesh(r, ops.basis, fcfg.mesh_points);
      s.positive = s.min_density >= -fcfg.positivity_tol;
      s.chain = static_cast<int>(c);
      s.depth = static_cast<int>(d);
      unique.push_back(std::move(s));
    }
  }
  for (auto& s : unique) (s.positive ? set.states : set.rejected).push_back(std::move(s));
  tag_translations(set.states, ops.basis, fcfg.translation_tol);
  return set;
}

}  // namespace mvsteady
