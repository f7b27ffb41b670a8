#include "warpflow/run.hpp"

#include <cmath>
#include <sstream>

#include "warpflow/errors.hpp"

namespace warpflow {

FlowRun run_flow(const FlowStepper& stepper, const ThresholdConfig& thresholds, const Schedule& schedule,
                 const SnapshotSink& snapshot) {
  if (!(schedule.t_end >= 0.0)) throw std::invalid_argument("t_end must be non-negative");
  if (schedule.diagnostic_stride < 1) throw std::invalid_argument("diagnostic stride must be at least 1");

  const DiagnosticsEngine engine(stepper, thresholds);
  FlowRun run;
  DiagnosticsReport& rep = run.report;
  rep.thresholds = engine.thresholds();
  rep.constants = engine.constants();

  FlowState state = stepper.initial_state();
  if (snapshot && schedule.snapshot_stride > 0) snapshot(state);
  if (schedule.t_end == 0.0) {
    run.final_state = std::move(state);
    return run;
  }

  ConcentrationTracker tracker(rep.thresholds.epsilon, rep.thresholds.r_detect, rep.thresholds.persistence);
  rep.records.push_back(engine.record(state, nullptr));
  rep.constants.E_g0 = rep.records.front().E_g;
  auto take_frame = [&](const FlowState& s) {
    rep.frames.push_back(engine.frame(s));
    return !tracker.feed(rep.frames.back()).empty();
  };
  take_frame(state);

  const double t_end = schedule.t_end;
  const double t_eps = 1e-12 * std::max(1.0, t_end);
  while (state.t < t_end - t_eps) {
    FlowState trial = state;
    trial.dt_current = std::min(state.dt_current, t_end - state.t);
    FlowState next;
    try {
      next = stepper.step(trial);
    } catch (const TimestepUnderflow& e) {
      rep.underflows.push_back({e.time, state.step_count});
      tracker.mark_underflow(e.time);
      next = stepper.forced_step(trial);
    } catch (const SolverFailure& e) {
      std::ostringstream os;
      os << e.what() << " [t=" << state.t << ", step " << state.step_count << "]";
      throw SolverFailure(os.str());
    }
    // Count the halvings that preceded acceptance.
    const double used = next.t - state.t;
    for (double d = trial.dt_current; d > used * (1.0 + 1e-12); d *= 0.5) ++rep.rejected_steps;
    if (next.t > t_end - t_eps) next.t = t_end;

    EnergyRecord r = engine.record(next, &state);
    r.kinetic_cum = rep.records.back().kinetic_cum + r.kinetic_increment;
    rep.records.push_back(r);
    state = std::move(next);

    const bool last = !(state.t < t_end - t_eps);
    if (last || state.step_count % schedule.diagnostic_stride == 0) {
      if (take_frame(state)) state.dt_current = stepper.cfl_dt();
    }
    if (snapshot && schedule.snapshot_stride > 0 && (last || state.step_count % schedule.snapshot_stride == 0))
      snapshot(state);
  }
  rep.events = tracker.events();
  run.final_state = std::move(state);
  return run;
}

} // namespace warpflow
