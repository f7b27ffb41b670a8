#pragma once

#include <optional>
#include <string>
#include <vector>

#include "warpflow/flow.hpp"

namespace warpflow {

struct ThresholdConfig {
  double epsilon = 1.0;     ///< energy threshold for singular points
  double r_detect = 0.05;   ///< detection radius
  std::vector<double> r_grid{0.1, 0.2};  ///< two-ball radii r (2r is sampled too)
  /// Threshold for the late-time concentration set; <= 0 means epsilon.
  double epsilon_prime = 0.0;
  /// Radius of the ball supremum in the Struwe-type proxy.
  double r_struwe = 0.2;
  /// c in tol_mono = 1e-6 + c (dt + h^2) |E_g(0)|.
  double c_mono = 1.0;
  /// Consecutive frames above epsilon before a crossing counts.
  int persistence = 3;

  void validate(double domain_diameter) const;
  double effective_epsilon_prime() const { return epsilon_prime > 0.0 ? epsilon_prime : epsilon; }
};

/// Scalars sampled after every accepted step.
struct EnergyRecord {
  double t = 0.0;
  double dt = 0.0;
  long step = 0;
  double E_u = 0.0;
  double E_v = 0.0;
  double E_beta_v = 0.0;
  double E_g = 0.0;
  double kinetic_increment = 0.0;  ///< int |(u_{j+1}-u_j)/dt|^2 dt
  double kinetic_cum = 0.0;
  double laplacian_proxy = 0.0;    ///< int |Delta_h u|^2 over interior vertices
  double grad_u_l4 = 0.0;          ///< int |grad u|^4
  double grad_v_l4 = 0.0;          ///< int |grad v|^4
  double lady_w4 = 0.0;            ///< int |w|^4, w = u - phi_ext
  double lady_w2 = 0.0;            ///< int |w|^2
  double lady_grad_w2 = 0.0;       ///< int |grad w|^2
  double tension = 0.0;            ///< L2 norm of the tension residual
  double max_local_energy = 0.0;   ///< max over detection balls
  int v_iterations = 0;
  double v_residual = 0.0;
};

struct LocalPeak {
  int vertex = 0;
  double x = 0.0, y = 0.0;
  double energy = 0.0;
};

/// Local-energy profile sampled at the diagnostic stride.
struct Frame {
  double t = 0.0;
  long step = 0;
  std::vector<LocalPeak> peaks;    ///< local maxima of E(u; B_{r_detect}), strongest first
  std::vector<double> two_ball;    ///< E(u; B_rho(c)) for centers x radii, row-major
  double struwe_sup = 0.0;         ///< sup_x E(u; B_{r_struwe}(x))
};

struct SingularityEvent {
  double T = 0.0;
  long step = 0;
  double r_detect = 0.0;
  std::vector<int> vertices;
  std::vector<std::array<double, 2>> points;
  std::vector<double> peak_energies;
  bool underflow = false;  ///< coincided with a time step underflow
};

struct CheckResult {
  std::string name;
  bool pass = true;
  double constant = 0.0;
  double tolerance = 0.0;
  bool hard = false;  ///< hard checks decide the exit status
  std::string note;
};

struct ConvergenceReport {
  std::vector<double> t_i;
  std::vector<double> dtu_norms;   ///< ||d_t u||_{L2} at t_i
  double final_dtu_norm = 0.0;
  double final_tension = 0.0;
  double stationarity_tolerance = 0.0;
  double residual_tolerance = 0.0;
  bool converged = false;
  double converged_at = -1.0;
  std::string status;  ///< "converged" or "NotStationary"
  std::vector<std::array<double, 2>> s_infinity;
};

/// Quantities fixed for a run.
struct RunConstants {
  double h = 0.0;
  double dt_nominal = 0.0;
  double lambda = 1.0;
  double Lambda = 1.0;
  double area = 0.0;
  double E_phi0 = 0.0;          ///< E(phi0)
  double E_psi_ext = 0.0;       ///< E(psi_ext)
  double grad_psi_l4 = 0.0;     ///< int |grad psi_ext|^4
  double phi_c2_proxy = 0.0;    ///< sup|phi| + sup|grad phi_ext|
  double E_g0 = 0.0;
  int vertex_count = 0;
  int triangle_count = 0;
  std::vector<std::array<double, 2>> two_ball_centers;
  std::vector<double> two_ball_radii;
};

struct Underflow {
  double t = 0.0;
  long step = 0;
};

struct DiagnosticsReport {
  std::string name;
  ThresholdConfig thresholds;
  RunConstants constants;
  std::vector<EnergyRecord> records;
  std::vector<Frame> frames;
  std::vector<SingularityEvent> events;
  std::vector<Underflow> underflows;
  std::vector<CheckResult> checks;
  std::optional<ConvergenceReport> convergence;
  long rejected_steps = 0;
  double v_norm = 0.0;  ///< sup ||grad u||_2 + sup ||grad v||_4 + int(|u_t|^2 + |Delta_h u|^2)
  std::vector<std::string> notes;

  bool hard_checks_pass() const;
};

/// Precomputed ball sets and reference values for one stepper.
class DiagnosticsEngine {
public:
  DiagnosticsEngine(const FlowStepper& stepper, ThresholdConfig thresholds);

  const ThresholdConfig& thresholds() const { return thresholds_; }
  const RunConstants& constants() const { return constants_; }

  /// Energies of `state`; kinetic terms use `previous` when given.
  EnergyRecord record(const FlowState& state, const FlowState* previous) const;
  Frame frame(const FlowState& state) const;
  double max_local_energy(const FlowState& state) const;

  /// Ball energy at the detection radius around every detection center.
  std::vector<double> local_energies(const FlowState& state) const;
  const std::vector<int>& detection_centers() const { return detect_centers_; }

private:
  const FlowStepper* stepper_;
  ThresholdConfig thresholds_;
  RunConstants constants_;
  std::vector<int> detect_centers_;
  BallIndex detect_;
  std::vector<std::vector<int>> detect_neighbors_;
  BallIndex two_ball_;
  BallIndex struwe_;
};

/// Energy functionals without a full engine (no local quantities).
EnergyRecord energy_functionals(const DomainMesh& mesh, const WarpFunction& warp, const FlowState& state,
                                const FlowState* previous);

/// Tolerance of the hard monotonicity and budget checks.
double monotone_tolerance(const DiagnosticsReport& report);

/// Checks (a)-(f) plus the warp sandwich. Throws InsufficientSeries for < 2 records.
std::vector<CheckResult> inequality_suite(const DiagnosticsReport& report);

/// Incremental detector: feed frames in order; returns the events confirmed by
/// that frame. Peak energies of open events keep updating while tracked.
class ConcentrationTracker {
public:
  ConcentrationTracker(double epsilon, double r_detect, int persistence);

  std::vector<SingularityEvent> feed(const Frame& frame);
  const std::vector<SingularityEvent>& events() const { return events_; }
  void mark_underflow(double t);

private:
  struct Track {
    double x = 0.0, y = 0.0;
    int vertex = 0;
    int above = 0;
    bool crossed = false;  ///< appeared after the first frame
    bool confirmed = false;
    double start_t = 0.0;
    long start_step = 0;
    int event = -1;
    int slot = -1;
  };

  double epsilon_;
  double r_;
  int persistence_;
  int frames_seen_ = 0;
  std::vector<Track> tracks_;
  std::vector<SingularityEvent> events_;
};

std::vector<SingularityEvent> singularity_detect(const std::vector<Frame>& frames, const ThresholdConfig& thresholds);

/// K <= (E(phi0) + Lambda E(psi)) / eps and sum l_k <= 2 ((E(phi0) + Lambda E(psi)) / eps)^2.
std::vector<CheckResult> singularity_count_checks(const std::vector<SingularityEvent>& events,
                                                  const RunConstants& constants, double epsilon);

ConvergenceReport convergence_monitor(const DiagnosticsReport& report, double final_tension);

/// Compares the fitted constants of two runs (typically h and h/2): each may
/// change by at most `factor`; constants below `floor` on both sides count as equal.
std::vector<CheckResult> compare_fitted_constants(const DiagnosticsReport& coarse, const DiagnosticsReport& fine,
                                                  double factor = 2.0, double floor = 1e-10);

/// Names of the fitted-constant checks.
const std::vector<std::string>& fitted_constant_names();

} // namespace warpflow
