#include "sparse_lqg/group_lasso.hpp"

#include "sparse_lqg/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace sparse_lqg {
namespace {

Matrix prox_gradient_step(const GroupLassoProblem& problem,
                          const std::vector<Eigen::Index>& offs,
                          const Matrix& Y, double inv_lipschitz) {
  Matrix Z = Y - inv_lipschitz * smooth_gradient(problem, Y);
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    auto block = Z.middleCols(offs[g], problem.groups[g]);
    block = group_soft_threshold(block, inv_lipschitz * problem.lambdas(g));
  }
  return Z;
}

// Newton's method on the smooth restriction of the objective to the groups
// that are nonzero in `start`. Returns the iterate with the smallest full
// KKT residual (possibly `start` itself).
Matrix newton_polish(const GroupLassoProblem& problem, const Matrix& start,
                     double target_kkt) {
  const auto offs = problem.group_offsets();
  const Eigen::Index n = problem.rows();

  std::vector<std::size_t> active;
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    if (start.middleCols(offs[g], problem.groups[g]).norm() > 0.0) {
      active.push_back(g);
    }
  }
  if (active.empty()) return start;

  // Local column layout of the active groups.
  std::vector<Eigen::Index> cols;
  std::vector<Eigen::Index> local_off{0};
  for (auto g : active) {
    for (Eigen::Index c = 0; c < problem.groups[g]; ++c) {
      cols.push_back(offs[g] + c);
    }
    local_off.push_back(local_off.back() + problem.groups[g]);
  }
  const auto a = static_cast<Eigen::Index>(cols.size());
  const Eigen::Index dim = n * a;

  Matrix MA(a, problem.cols());
  for (Eigen::Index k = 0; k < a; ++k) MA.row(k) = problem.M.row(cols[k]);
  const Matrix Hq = 2.0 * MA * MA.transpose();

  auto embed = [&](const Matrix& X) {
    Matrix K = Matrix::Zero(problem.rows(), problem.cols());
    for (Eigen::Index k = 0; k < a; ++k) K.col(cols[k]) = X.col(k);
    return K;
  };
  auto reduced_objective = [&](const Matrix& X) {
    double f = (X * MA - problem.S).squaredNorm();
    for (std::size_t k = 0; k < active.size(); ++k) {
      f += problem.lambdas(active[k]) *
           X.middleCols(local_off[k], problem.groups[active[k]]).norm();
    }
    return f;
  };

  Matrix X(n, a);
  for (Eigen::Index k = 0; k < a; ++k) X.col(k) = start.col(cols[k]);

  Matrix best = start;
  double best_kkt = kkt_residual(problem, start).max;
  const double scale = std::max(1.0, start.norm());
  int stalled = 0;

  for (int iter = 0; iter < 50 && best_kkt > target_kkt; ++iter) {
    Matrix G = 2.0 * (X * MA - problem.S) * MA.transpose();
    Matrix H = Matrix::Zero(dim, dim);
    for (Eigen::Index c1 = 0; c1 < a; ++c1) {
      for (Eigen::Index c2 = 0; c2 < a; ++c2) {
        H.block(c1 * n, c2 * n, n, n).diagonal().setConstant(Hq(c1, c2));
      }
    }
    bool collapsed = false;
    for (std::size_t k = 0; k < active.size(); ++k) {
      const double lam = problem.lambdas(active[k]);
      auto blk = X.middleCols(local_off[k], problem.groups[active[k]]);
      const double nrm = blk.norm();
      if (nrm <= 1e-12 * scale) {
        collapsed = true;
        break;
      }
      if (lam == 0.0) continue;
      G.middleCols(local_off[k], problem.groups[active[k]]) += lam / nrm * blk;
      const Eigen::Index len = n * problem.groups[active[k]];
      const Eigen::Map<const Vector> x(blk.data(), len);
      H.block(local_off[k] * n, local_off[k] * n, len, len) +=
          lam / nrm *
          (Matrix::Identity(len, len) - x * x.transpose() / (nrm * nrm));
    }
    if (collapsed) break;

    const Eigen::Map<const Vector> g(G.data(), dim);
    Eigen::LDLT<Matrix> ldlt(H);
    Vector d = ldlt.solve(-g);
    if (ldlt.info() != Eigen::Success || !d.allFinite() || g.dot(d) >= 0.0) {
      const double mu = 1e-12 * std::max(1.0, H.diagonal().maxCoeff());
      Eigen::LDLT<Matrix> reg(H + mu * Matrix::Identity(dim, dim));
      d = reg.solve(-g);
      if (!d.allFinite() || g.dot(d) >= 0.0) break;
    }
    const Eigen::Map<const Matrix> D(d.data(), n, a);

    // Near the optimum the objective change drowns in roundoff, so a full
    // step that lowers the KKT residual is taken without the Armijo test.
    double step = 1.0;
    Matrix trial = X + D;
    Matrix K = embed(trial);
    double kkt = kkt_residual(problem, K).max;
    if (!(kkt < best_kkt)) {
      const double f0 = reduced_objective(X);
      const double slope = g.dot(d);
      for (int halvings = 0; halvings < 40; ++halvings) {
        if (reduced_objective(trial) <= f0 + 1e-4 * step * slope) break;
        step *= 0.5;
        trial = X + step * D;
      }
      K = embed(trial);
      kkt = kkt_residual(problem, K).max;
    }
    X = trial;
    if (kkt < best_kkt) {
      best_kkt = kkt;
      best = K;
      stalled = 0;
    } else if (step < 1e-6 || ++stalled >= 2) {
      break;
    }
  }
  return best;
}

}  // namespace

std::vector<Eigen::Index> GroupLassoProblem::group_offsets() const {
  return offsets_of(groups);
}

GroupLassoProblem assemble_problem(const Matrix& prior, const Matrix& C,
                                   const Matrix& V, const Vector& lambdas,
                                   std::vector<Eigen::Index> groups) {
  if (prior.rows() != prior.cols() || C.cols() != prior.rows() ||
      V.rows() != C.rows() || V.cols() != C.rows()) {
    throw InstanceError("group lasso: inconsistent Σ⁻, C, V shapes");
  }
  if (lambdas.size() != static_cast<Eigen::Index>(groups.size())) {
    throw InstanceError("group lasso: need one λ per sensor group");
  }
  if (std::accumulate(groups.begin(), groups.end(), Eigen::Index{0}) !=
      C.rows()) {
    throw InstanceError("group lasso: group sizes must sum to p");
  }
  for (Eigen::Index g = 0; g < lambdas.size(); ++g) {
    if (!(lambdas(g) >= 0.0)) {
      throw InstanceError("group lasso: λ[" + std::to_string(g) +
                          "] must be nonnegative");
    }
  }
  GroupLassoProblem p;
  p.M = symmetrized(C * prior * C.transpose() + V);
  p.S = symmetrized(prior) * C.transpose();
  p.lambdas = lambdas;
  p.groups = std::move(groups);
  return p;
}

double objective(const GroupLassoProblem& problem, const Matrix& K) {
  const auto offs = problem.group_offsets();
  double f = (K * problem.M - problem.S).squaredNorm();
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    f += problem.lambdas(g) * K.middleCols(offs[g], problem.groups[g]).norm();
  }
  return f;
}

Matrix smooth_gradient(const GroupLassoProblem& problem, const Matrix& K) {
  return 2.0 * (K * problem.M - problem.S) * problem.M;
}

Matrix group_soft_threshold(const Matrix& block, double amount) {
  const double nrm = block.norm();
  if (nrm <= amount || nrm == 0.0) return Matrix::Zero(block.rows(), block.cols());
  return (1.0 - amount / nrm) * block;
}

KktReport kkt_residual(const GroupLassoProblem& problem, const Matrix& K) {
  const auto offs = problem.group_offsets();
  const Matrix G = smooth_gradient(problem, K);
  KktReport report;
  report.per_group.reserve(problem.num_groups());
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    const auto blk = K.middleCols(offs[g], problem.groups[g]);
    const auto grad = G.middleCols(offs[g], problem.groups[g]);
    const double nrm = blk.norm();
    const double lam = problem.lambdas(g);
    double r = 0.0;
    if (nrm > 0.0) {
      r = (grad + (lam / nrm) * blk).norm();
    } else {
      r = std::max(0.0, grad.norm() - lam);
    }
    report.per_group.push_back(r);
    report.max = std::max(report.max, r);
  }
  return report;
}

std::vector<double> zero_thresholds(const GroupLassoProblem& problem) {
  const auto offs = problem.group_offsets();
  const Matrix SM = 2.0 * problem.S * problem.M;
  std::vector<double> out;
  out.reserve(problem.num_groups());
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    out.push_back(SM.middleCols(offs[g], problem.groups[g]).norm());
  }
  return out;
}

GroupLassoSolution solve_group_lasso(const GroupLassoProblem& problem,
                                     const SolverSettings& settings) {
  const Eigen::Index n = problem.rows();
  const Eigen::Index p = problem.cols();
  const auto offs = problem.group_offsets();

  GroupLassoSolution sol;
  sol.K = Matrix::Zero(n, p);

  const auto thresholds = zero_thresholds(problem);
  bool zero_optimal = true;
  for (std::size_t g = 0; g < thresholds.size(); ++g) {
    zero_optimal = zero_optimal && thresholds[g] <= problem.lambdas(g);
  }
  if (zero_optimal) {
    sol.kkt = kkt_residual(problem, sol.K).max;
    return sol;
  }

  const double smax = max_singular_value(problem.M);
  const double inv_L = 1.0 / (2.0 * smax * smax);

  Matrix K = sol.K;
  Matrix K_prev = K;
  double f = objective(problem, K);
  double momentum = 1.0;
  std::size_t next_polish = 100;

  auto finish = [&](Matrix&& Kout, double kkt, std::size_t it) {
    sol.K = std::move(Kout);
    sol.kkt = kkt;
    sol.iterations = it;
    return sol;
  };
  // Polishing runs to the roundoff floor: KKT is in absolute gradient units,
  // so any fixed target is loose on small-scale problems.
  auto try_polish = [&](const Matrix& from, double from_kkt) {
    if (!settings.polish) return std::pair<Matrix, double>{from, from_kkt};
    Matrix polished = newton_polish(problem, from, 0.0);
    const double pk = kkt_residual(problem, polished).max;
    if (pk < from_kkt) return std::pair<Matrix, double>{std::move(polished), pk};
    return std::pair<Matrix, double>{from, from_kkt};
  };

  for (std::size_t it = 1; it <= settings.max_iterations; ++it) {
    const double next_momentum =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    const Matrix Y = K + ((momentum - 1.0) / next_momentum) * (K - K_prev);
    Matrix K_new = prox_gradient_step(problem, offs, Y, inv_L);
    double f_new = objective(problem, K_new);
    if (f_new > f) {
      // Restart from a plain proximal step, which never increases f.
      K_new = prox_gradient_step(problem, offs, K, inv_L);
      f_new = objective(problem, K_new);
      momentum = 1.0;
    } else {
      momentum = next_momentum;
    }
    const double change = (K_new - K).norm();
    const double ref = std::max(1.0, K.norm());
    K_prev = std::move(K);
    K = std::move(K_new);
    f = f_new;

    const bool small_change = change <= settings.relative_change_tol * ref;
    if (small_change || it % 25 == 0 || it == next_polish ||
        it == settings.max_iterations) {
      double kkt = kkt_residual(problem, K).max;
      if (kkt <= settings.stop_kkt) {
        // The KKT residual is in gradient units; on ill-conditioned M a
        // final Newton step still moves K noticeably.
        auto [best, best_kkt] = try_polish(K, kkt);
        return finish(std::move(best), best_kkt, it);
      }
      if (it == next_polish || small_change || it == settings.max_iterations) {
        auto [best, best_kkt] = try_polish(K, kkt);
        if (best_kkt <= settings.stop_kkt ||
            (small_change && best_kkt <= settings.kkt_tolerance)) {
          return finish(std::move(best), best_kkt, it);
        }
        if (it == settings.max_iterations) {
          if (best_kkt <= settings.kkt_tolerance) {
            return finish(std::move(best), best_kkt, it);
          }
          throw ConvergenceError(best_kkt, it);
        }
        if (it == next_polish) next_polish *= 2;
      }
    }
  }
  throw ConvergenceError(kkt_residual(problem, K).max, settings.max_iterations);
}

double ConicProgramData::objective(const Vector& x) const {
  const Eigen::Index nk = quadratic.cols();
  const double fit = (quadratic * x.head(nk) - target).squaredNorm();
  double pen = 0.0;
  for (std::size_t c = 0; c < cones.size(); ++c) {
    pen += slack_weights(static_cast<Eigen::Index>(c)) * x(cones[c].slack);
  }
  return fit + pen;
}

double ConicProgramData::cone_violation(const Vector& x) const {
  double worst = 0.0;
  for (const auto& cone : cones) {
    worst = std::max(worst, x.segment(cone.begin, cone.size).norm() -
                                x(cone.slack));
  }
  return worst;
}

Vector ConicProgramData::lift(const Matrix& K) const {
  Vector x(num_variables());
  x.head(quadratic.cols()) = Eigen::Map<const Vector>(K.data(), K.size());
  for (const auto& cone : cones) {
    x(cone.slack) = x.segment(cone.begin, cone.size).norm();
  }
  return x;
}

ConicProgramData vectorize_to_cone(const GroupLassoProblem& problem) {
  const Eigen::Index n = problem.rows();
  const Eigen::Index p = problem.cols();
  ConicProgramData data;
  data.rows = n;
  data.cols = p;
  // vec(K M) = (Mᵀ ⊗ I_n) vec(K), and M is symmetric.
  data.quadratic = Matrix::Zero(n * p, n * p);
  for (Eigen::Index r = 0; r < p; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) {
      data.quadratic.block(r * n, c * n, n, n).diagonal().setConstant(
          problem.M(c, r));
    }
  }
  data.target = Eigen::Map<const Vector>(problem.S.data(), n * p);
  data.slack_weights = problem.lambdas;
  const auto offs = problem.group_offsets();
  for (std::size_t g = 0; g < problem.num_groups(); ++g) {
    data.cones.push_back({offs[g] * n, problem.groups[g] * n,
                          n * p + static_cast<Eigen::Index>(g)});
  }
  return data;
}

std::size_t GainDecision::active_count() const {
  return static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
}

GainDecision apply_reset_rule(const Matrix& pre_threshold,
                              const Matrix& reference, double r_th,
                              std::span<const Eigen::Index> groups) {
  if (!(r_th > 0.0 && r_th <= 1.0)) {
    throw InstanceError("reset ratio r_th must lie in (0, 1]");
  }
  if (pre_threshold.rows() != reference.rows() ||
      pre_threshold.cols() != reference.cols()) {
    throw InstanceError("reset rule: gain and reference shapes differ");
  }
  GainDecision d;
  d.pre_threshold = pre_threshold;
  d.reference = reference;
  d.final_gain = Matrix::Zero(reference.rows(), reference.cols());
  const auto offs = offsets_of(groups);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto ref = reference.middleCols(offs[g], groups[g]);
    const double ref_norm = ref.norm();
    const bool reset = pre_threshold.middleCols(offs[g], groups[g]).norm() >=
                       r_th * ref_norm * (1.0 - kResetTieTol);
    d.active.push_back(reset);
    if (reset) d.final_gain.middleCols(offs[g], groups[g]) = ref;
  }
  return d;
}

Vector adaptive_lambda(const Matrix& agent_gain, double L1, double L2,
                       std::span<const Eigen::Index> state_sizes) {
  if (!(L1 > 0.0 && L2 > 0.0)) {
    throw InstanceError("adaptive regularization needs L1, L2 > 0");
  }
  const auto offs = offsets_of(state_sizes);
  if (offs.back() != agent_gain.cols()) {
    throw InstanceError("adaptive regularization: state partition mismatch");
  }
  const double zero_tol = kZeroGainBlockTol * std::max(1.0, agent_gain.norm());
  Vector lambdas(static_cast<Eigen::Index>(state_sizes.size()));
  for (std::size_t j = 0; j < state_sizes.size(); ++j) {
    const double nrm = agent_gain.middleCols(offs[j], state_sizes[j]).norm();
    lambdas(static_cast<Eigen::Index>(j)) = nrm > zero_tol ? L1 / nrm : L2;
  }
  return lambdas;
}

double theorem1_bound(const Matrix& prior, const Matrix& V, double r_th,
                      std::size_t num_groups) {
  if (num_groups == 0) return 0.0;
  const double smin = std::max(0.0, min_singular_value(prior));
  const double vmin = std::max(0.0, min_singular_value(V));
  const double smax = max_singular_value(prior);
  const double vmax = max_singular_value(V);
  const double denom = smax + vmax;
  if (denom <= 0.0) return 0.0;
  const double lead =
      2.0 * (1.0 - r_th) / std::sqrt(static_cast<double>(num_groups));
  return std::max(0.0, lead * smin * (smin + vmin) * (smin + vmin) / denom);
}

}  // namespace sparse_lqg
