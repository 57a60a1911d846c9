#include "dmtrack/analysis.hpp"

#include <cmath>
#include <stdexcept>

namespace dmtrack {
namespace {

void require_same_trajectory(const RunRecord& record,
                             const LossOracle& oracle) {
  const TargetTrajectory& a = *record.trajectory;
  const TargetTrajectory& b = oracle.trajectory();
  if (&a == &b) return;
  if (a.states.size() != b.states.size()) {
    throw std::invalid_argument("oracle/record trajectory mismatch");
  }
  for (std::size_t t = 0; t < a.states.size(); ++t) {
    if (a.states[t] != b.states[t]) {
      throw std::invalid_argument("oracle/record trajectory mismatch");
    }
  }
}

}  // namespace

RegretReport dynamic_regret(const RunRecord& record, const LossOracle& oracle) {
  require_same_trajectory(record, oracle);
  const int rounds = record.rounds;
  const int n = record.agents;
  RegretReport report;
  report.increments.reserve(rounds);
  report.cumulative_series.reserve(rounds);

  if (record.granularity == RecordGranularity::kFull) {
    if (static_cast<int>(record.estimates.size()) != rounds) {
      throw std::invalid_argument("record estimate series is incomplete");
    }
    report.per_agent_average_loss.assign(n, 0.0);
    for (int t = 1; t <= rounds; ++t) {
      const Matrix& x = record.estimates[t - 1];
      double mean = 0.0;
      for (int i = 0; i < n; ++i) {
        const double value = oracle.global_value(t, x.col(i));
        mean += value;
        report.per_agent_average_loss[i] += value;
      }
      mean /= n;
      const double increment =
          mean - oracle.global_value(t, record.trajectory->state(t));
      report.cumulative += increment;
      report.increments.push_back(increment);
      report.cumulative_series.push_back(report.cumulative);
    }
    for (double& v : report.per_agent_average_loss) v /= rounds;
  } else {
    if (static_cast<int>(record.mean_loss.size()) != rounds) {
      throw std::invalid_argument("record loss series is incomplete");
    }
    for (int t = 0; t < rounds; ++t) {
      const double increment =
          record.mean_loss[t] - record.comparator_loss[t];
      report.cumulative += increment;
      report.increments.push_back(increment);
      report.cumulative_series.push_back(report.cumulative);
    }
  }
  report.normalized = report.cumulative / rounds;
  return report;
}

double tracking_component_bound(const BregmanConstants& constants,
                                const StepSizeSchedule& schedule,
                                const std::vector<double>& noise_norms) {
  const int rounds = static_cast<int>(noise_norms.size());
  double acc = 2.0 * constants.rsq / schedule.eta(rounds + 1);
  for (int t = 1; t <= rounds; ++t) {
    acc += constants.divergence_lipschitz / schedule.eta(t + 1) *
           noise_norms[t - 1];
  }
  return acc;
}

RegretBoundReport evaluate_regret_bound(const BoundInputs& inputs) {
  if (!(inputs.delta > 0.0) || inputs.delta >= 1.0) {
    throw std::invalid_argument("delta must lie in (0, 1)");
  }
  if (inputs.rounds < 1 ||
      static_cast<int>(inputs.noise_norms.size()) != inputs.rounds) {
    throw std::invalid_argument("noise norm series must cover the horizon");
  }
  if (inputs.agents < 1) throw std::invalid_argument("agents must be >= 1");

  const int rounds = inputs.rounds;
  const StepSizeSchedule& schedule = inputs.schedule;
  const double lipschitz = inputs.lipschitz;

  RegretBoundReport report;
  report.tracking_error =
      tracking_component_bound(inputs.constants, schedule, inputs.noise_norms);
  double eta_sum = 0.0;
  for (int t = 1; t <= rounds; ++t) eta_sum += schedule.eta(t);
  report.tracking_error += lipschitz * lipschitz * eta_sum / 2.0;

  // Running geometric recursion s_t = sigma2 * s_{t-1} + eta_{t-1}; eta_0 is
  // eta_1 by convention.
  double s = 0.0;
  double s_total = 0.0;
  for (int t = 1; t <= rounds; ++t) {
    s = inputs.sigma2 * s + schedule.eta(t - 1);
    s_total += s;
  }
  report.network_error = 4.0 * lipschitz * lipschitz *
                         std::sqrt(static_cast<double>(inputs.agents)) *
                         s_total;

  report.stochastic_error =
      8.0 * lipschitz * std::sqrt(inputs.constants.rsq) *
      std::sqrt(-static_cast<double>(rounds) * std::log(inputs.delta));

  report.total = report.tracking_error + report.network_error +
                 report.stochastic_error;
  report.lipschitz = lipschitz;
  report.rsq = inputs.constants.rsq;
  report.divergence_lipschitz = inputs.constants.divergence_lipschitz;
  report.sigma2 = inputs.sigma2;
  report.delta = inputs.delta;
  report.eta_final = schedule.eta(rounds + 1);
  report.agents = inputs.agents;
  report.rounds = rounds;
  report.compact_set = inputs.compact_set;
  report.non_expansive = inputs.non_expansive;
  report.within_hypotheses = inputs.compact_set && inputs.non_expansive;
  return report;
}

BoundVerdict check_bound(double measured_regret,
                         const RegretBoundReport& report) {
  BoundVerdict verdict;
  verdict.measured = measured_regret;
  verdict.bound = report.total;
  verdict.slack = report.total - measured_regret;
  verdict.satisfied = measured_regret <= report.total;
  verdict.within_hypotheses = report.within_hypotheses;
  return verdict;
}

bool violation_frequency_ok(int violations, int runs, double delta) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  const double frequency = static_cast<double>(violations) / runs;
  const double margin = 1.96 * std::sqrt(delta * (1.0 - delta) / runs);
  return frequency <= delta + margin;
}

DisagreementReport network_disagreement(const RunRecord& record,
                                        std::optional<double> lipschitz) {
  if (record.granularity != RecordGranularity::kFull) {
    throw std::invalid_argument(
        "disagreement diagnostics need a full-granularity record");
  }
  const int rounds = record.rounds;
  const int n = record.agents;
  DisagreementReport report;
  report.lipschitz_used =
      lipschitz.value_or(record.applied_gradient_norm_max);
  report.measured.reserve(rounds);
  report.bound.reserve(rounds);
  const double root_n = std::sqrt(static_cast<double>(n));
  double s = 0.0;
  for (int t = 1; t <= rounds; ++t) {
    s = record.sigma2 * s + record.schedule.eta(t - 1);
    const double bound_t = report.lipschitz_used * root_n * s;
    const Matrix& x = record.estimates[t - 1];
    const Vector mean = x.rowwise().mean();
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
      const double deviation = record.map.norm(x.col(i) - mean);
      worst = std::max(worst, deviation);
      if (deviation > bound_t * (1.0 + 1e-9) + 1e-12) ++report.violations;
    }
    report.measured.push_back(worst);
    report.bound.push_back(bound_t);
  }
  return report;
}

std::vector<double> noise_norms(const TargetTrajectory& trajectory,
                                Norm norm) {
  std::vector<double> out;
  out.reserve(trajectory.noises.size());
  for (const Vector& v : trajectory.noises) out.push_back(vector_norm(v, norm));
  return out;
}

}  // namespace dmtrack
