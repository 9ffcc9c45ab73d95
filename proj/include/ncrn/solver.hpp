#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ncrn/crn.hpp"
#include "ncrn/errors.hpp"
#include "ncrn/ode_ir.hpp"

namespace ncrn {

struct SolverConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-10;
  double kappa_fast = 1e3;      // fast/slow rate ratio
  double tol_neg = 1e-10;       // negative-concentration floor (clamped to 0)
  double overflow_guard = 1e6;  // divergence detection threshold
  double max_step = 0.0;        // 0 = unbounded
  std::size_t max_steps = 4000000;
  bool enforce_nonnegative = true;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<std::vector<double>> states;

  const std::vector<double>& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
  std::size_t rows() const { return times.size(); }
};

/// Autonomous ODE with an analytic Jacobian, the contract the implicit
/// integrator needs.
class OdeFunction {
 public:
  virtual ~OdeFunction() = default;
  virtual int dim() const = 0;
  virtual void rhs(const double* y, double* f) const = 0;
  virtual void jacobian(const double* y, double* jac) const = 0;  // row-major
  virtual std::string component_name(int i) const { return "y" + std::to_string(i); }
};

using StepObserver = std::function<void(double t, const std::vector<double>& y)>;
using RhsFn = std::function<void(const std::vector<double>& y, std::vector<double>& dydt)>;

/// One-step implicit TR-BDF2 (trapezoidal / BDF2 composite, L-stable) with
/// modified-Newton stages sharing a single LU factorization, a filtered
/// third-order error estimate, and adaptive step control. Suited to the stiff
/// systems produced by fast annihilation chemistry.
std::vector<double> integrate_trbdf2(const OdeFunction& ode, std::vector<double> y0,
                                     double duration, const SolverConfig& cfg,
                                     const StepObserver& observer = {});

/// Explicit adaptive Cash-Karp RK45 for smooth systems; the verification
/// route deliberately uses a different method family than the CRN simulator.
std::vector<double> integrate_rk45(const RhsFn& rhs, std::vector<double> y0, double duration,
                                   double rel_tol, double abs_tol,
                                   const StepObserver& observer = {},
                                   std::size_t max_steps = 4000000);

/// Mass-action right-hand side compiled from a reaction network.
class MassActionOde final : public OdeFunction {
 public:
  MassActionOde(const Crn& crn, const MassActionOptions& opts);
  int dim() const override { return n_; }
  void rhs(const double* y, double* f) const override;
  void jacobian(const double* y, double* jac) const override;
  std::string component_name(int i) const override { return names_[static_cast<std::size_t>(i)]; }
  std::size_t active_reactions() const { return rx_.size(); }

 private:
  struct Compiled {
    double rate;
    std::vector<std::pair<int, int>> reactants;  // (species, multiplicity)
    std::vector<std::pair<int, int>> net;        // (species, net stoichiometry)
  };
  int n_ = 0;
  std::vector<Compiled> rx_;
  std::vector<std::string> names_;
};

/// Deterministic mass-action simulation of the gate-filtered network.
/// Records one trajectory row per accepted step (the initial state included).
Trajectory simulate(const Crn& crn, const std::vector<double>& init, double duration,
                    std::optional<Gate> active_gate, const SolverConfig& cfg = {});

/// Same integration without trajectory storage.
std::vector<double> simulate_endpoint(const Crn& crn, const std::vector<double>& init,
                                      double duration, std::optional<Gate> active_gate,
                                      const SolverConfig& cfg = {});

/// Wraps a polynomial ODE system (with symbolically derived Jacobian) for the
/// integrators; state is indexed by variable id.
class PolyOde final : public OdeFunction {
 public:
  explicit PolyOde(PolyOdeSystem sys);
  int dim() const override { return n_; }
  void rhs(const double* y, double* f) const override;
  void jacobian(const double* y, double* jac) const override;
  std::string component_name(int i) const override;

 private:
  PolyOdeSystem sys_;
  int n_ = 0;
  std::vector<std::vector<Monomial>> eqs_;                          // by variable id
  std::vector<std::vector<std::pair<int, std::vector<Monomial>>>> jac_;  // per row: (col, terms)
};

std::vector<double> integrate_poly_rk45(const PolyOdeSystem& sys, std::vector<double> y0,
                                        double duration, double rel_tol = 1e-10,
                                        double abs_tol = 1e-12);
std::vector<double> integrate_poly_trbdf2(const PolyOdeSystem& sys, std::vector<double> y0,
                                          double duration, const SolverConfig& cfg = {});

std::string trajectory_to_csv(const Crn& crn, const Trajectory& traj);

}  // namespace ncrn
