#pragma once

#include <optional>
#include <vector>

#include "dmtrack/common.hpp"
#include "dmtrack/dynamics.hpp"
#include "dmtrack/engine.hpp"
#include "dmtrack/geometry.hpp"
#include "dmtrack/losses.hpp"

namespace dmtrack {

/// Dynamic regret: the averaged cumulative gap between the agents' losses
/// and the per-round minimizer's loss.
struct RegretReport {
  double cumulative = 0.0;
  double normalized = 0.0;                  // cumulative / rounds
  std::vector<double> increments;           // per round
  std::vector<double> cumulative_series;    // running sum
  std::vector<double> per_agent_average_loss;  // full granularity only
};

/// Evaluates regret on the true expected losses. Full-granularity records are
/// recomputed from the stored estimates; summary records use the loss series
/// accumulated during the run. Throws if the oracle is bound to a different
/// trajectory than the record.
RegretReport dynamic_regret(const RunRecord& record, const LossOracle& oracle);

/// Inputs of the regret upper bound.
struct BoundInputs {
  double lipschitz = 0.0;          // L
  BregmanConstants constants;      // rsq and K
  StepSizeSchedule schedule;
  std::vector<double> noise_norms;  // ||v_t|| in the map norm, size T
  double sigma2 = 0.0;
  int agents = 0;
  int rounds = 0;
  double delta = 0.1;
  bool compact_set = false;
  bool non_expansive = false;
};

/// The three-part regret upper bound and the constants it was computed with.
struct RegretBoundReport {
  double tracking_error = 0.0;    // divergence telescoping + path + step terms
  double network_error = 0.0;     // consensus (spectral-gap) term
  double stochastic_error = 0.0;  // high-probability gradient-noise term
  double total = 0.0;

  double lipschitz = 0.0;
  double rsq = 0.0;
  double divergence_lipschitz = 0.0;
  double sigma2 = 0.0;
  double delta = 0.1;
  double eta_final = 0.0;  // eta_{T+1}
  int agents = 0;
  int rounds = 0;

  bool compact_set = false;
  bool non_expansive = false;
  bool within_hypotheses = false;
};

/// Exact arithmetic evaluation of the bound:
///   tracking   = 2 rsq / eta_{T+1} + sum_t (K / eta_{t+1}) ||v_t||
///                + L^2 sum_t eta_t / 2
///   network    = 4 L^2 sqrt(n) sum_t sum_{tau=0}^{t-1} eta_tau
///                sigma2^{t-tau-1}, computed in O(T) by the running
///                recursion s_t = sigma2 * s_{t-1} + eta_{t-1}
///   stochastic = 8 L R sqrt(-T log delta)
RegretBoundReport evaluate_regret_bound(const BoundInputs& inputs);

/// The divergence-telescoping component alone:
/// 2 rsq / eta_{T+1} + sum_t (K / eta_{t+1}) ||v_t||. Isolates the
/// path-length contribution of the tracking term.
double tracking_component_bound(const BregmanConstants& constants,
                                const StepSizeSchedule& schedule,
                                const std::vector<double>& noise_norms);

struct BoundVerdict {
  bool satisfied = false;
  bool within_hypotheses = false;
  double measured = 0.0;
  double bound = 0.0;
  double slack = 0.0;
};

BoundVerdict check_bound(double measured_regret,
                         const RegretBoundReport& report);

/// Across seeded repetitions, the violation frequency of a 1-delta bound must
/// stay below delta plus a binomial 95% margin.
bool violation_frequency_ok(int violations, int runs, double delta);

/// Per-round network disagreement against its geometric bound
/// L sqrt(n) sum_{tau=0}^{t-1} eta_tau sigma2^{t-1-tau}.
struct DisagreementReport {
  std::vector<double> measured;  // max_i ||x_{i,t} - mean_t|| per round
  std::vector<double> bound;
  long violations = 0;
  double lipschitz_used = 0.0;
};

/// Requires a full-granularity record. When `lipschitz` is not given, the
/// realized sup of applied gradient norms is used (the honest envelope: it
/// dominates every gradient the run actually applied).
DisagreementReport network_disagreement(
    const RunRecord& record, std::optional<double> lipschitz = std::nullopt);

/// ||v_t|| series of a trajectory in the requested norm.
std::vector<double> noise_norms(const TargetTrajectory& trajectory, Norm norm);

}  // namespace dmtrack
