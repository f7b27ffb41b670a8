#pragma once

#include <functional>

#include "warpflow/diagnostics.hpp"
#include "warpflow/flow.hpp"

namespace warpflow {

struct Schedule {
  double t_end = 0.0;
  long snapshot_stride = 0;    ///< 0 disables snapshots
  long diagnostic_stride = 1;
};

struct FlowRun {
  FlowState final_state;
  DiagnosticsReport report;
};

using SnapshotSink = std::function<void(const FlowState&)>;

/// Integrates from the initial state to schedule.t_end, sampling a record after
/// every accepted step and a frame every diagnostic_stride steps (plus the
/// first and last). A concentration confirmed by the detector resets dt to the
/// CFL value. A time step underflow is recorded and the flow continues with one
/// unlimited step of size dt_min from the last accepted state.
///
/// Solver failures are rethrown with the current time in the message.
FlowRun run_flow(const FlowStepper& stepper, const ThresholdConfig& thresholds, const Schedule& schedule,
                 const SnapshotSink& snapshot = {});

} // namespace warpflow
