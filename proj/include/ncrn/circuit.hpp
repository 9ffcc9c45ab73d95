#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncrn/crn.hpp"
#include "ncrn/solver.hpp"

namespace ncrn {

/// Hidden-state dynamics variants. Vector parameters act elementwise;
/// nlcls/nlclsV2 use a full (d+p)x(d+p) parameter matrix so augmented
/// dimensions can mix.
enum class FTheta { linreg, nlreg, lincls, nlcls, nlclsV2, theta_z };

enum class ExecMode { idealized, full_kinetics };
enum class ZInit { zero, copy_x };
enum class Stage { N1, N2, N3, N4 };

enum class Role {
  input,
  target,
  output,
  parameter,
  hidden,
  hidden_proxy,
  adjoint,
  gradient,
  bias,
  clock,
};

std::string to_string(FTheta v);
std::string to_string(Stage s);
std::string to_string(Role r);
std::optional<FTheta> parse_f_theta(const std::string& s);

struct ThetaInit {
  enum class Kind { rail_default, constant, uniform, values };
  Kind kind = Kind::rail_default;
  double value = 0.5;
  double lo = -0.5, hi = 0.5;
  std::uint64_t seed = 0;
  std::vector<double> values;

  static ThetaInit constant(double v);
  static ThetaInit uniform(double lo, double hi, std::uint64_t seed);
  static ThetaInit explicit_values(std::vector<double> v);
};

struct CircuitConfig {
  int d = 2;                    // task input dimensionality
  int p = 0;                    // augmentation dimensions
  FTheta f_theta = FTheta::linreg;
  double T = 1.0;               // analog stage duration
  double epsilon = 0.0;         // discrete window; 0 selects 0.01*T
  double eta = 1.0;             // learning rate
  double beta = 0.0;            // bias constant (variants with a bias term)
  double alpha = 0.3;           // quadratic damping factor (nlclsV2)
  ThetaInit theta_init{};
  double pad_value = 0.0;       // fill for augmented input dimensions
  ExecMode mode = ExecMode::idealized;
  bool approx_gradients = false;
  bool inference = false;       // forward-only build: N2 emits the output species
  bool merge_adjoints = false;  // share one adjoint rail pair (constant-adjoint variants)
  std::optional<ZInit> z_init;  // default: copy_x for theta_z, zero otherwise
  SolverConfig solver{};

  int state_dim() const { return d + p; }
  bool matrix_theta() const;
  int param_count() const;
  bool uses_beta() const;
  bool uses_x_species() const;
  ZInit effective_z_init() const;
  double effective_epsilon() const;
  // sign analysis: which species groups need dual-rail encoding
  bool dual_x() const;
  bool dual_p() const;
  bool dual_z() const;
  bool dual_zb() const;

  void validate() const;
};

/// Handle to one logical (possibly dual-railed) value in a state vector.
struct RailRef {
  SpeciesId plus = -1;
  SpeciesId minus = -1;  // -1 for single-rail species
  bool dual() const { return minus >= 0; }
};

/// An assembled Neural CRN: per-stage reaction fragments over one shared
/// species registry, plus the auto-injected annihilations and the end-of-
/// iteration flush group. Immutable after build.
struct Circuit {
  CircuitConfig config;
  SpeciesRegistry species;
  std::map<Stage, std::vector<Reaction>> stages;
  std::vector<Reaction> annihilations;  // fast, always-on rail cleanup
  std::vector<Reaction> flush;          // end-of-iteration decays, not counted
  std::map<Role, std::vector<SpeciesId>> roles;

  std::vector<RailRef> x, z, zb, a, g, params;
  RailRef y, yhat;
  bool has_zb = false;
  bool has_adjoint_dynamics = false;

  /// Species total matching the circuit-size convention: the constant bias
  /// source is excluded, clock signals are included.
  int species_count() const;
  /// Stage reactions only; annihilations and flush decays are excluded.
  int reaction_count() const;

  Crn stage_crn(Stage s, bool with_annihilations = false) const;
  Crn full_crn() const;

  std::vector<double> initial_state() const;
  double read(const std::vector<double>& state, const RailRef& r) const;
  void write(std::vector<double>& state, const RailRef& r, double v) const;
  std::vector<double> read_params(const std::vector<double>& state) const;
  void write_params(std::vector<double>& state, const std::vector<double>& theta) const;

  /// Per-stage CRN text blocks plus the species-role manifest.
  std::string dump() const;

  /// Within each clock phase, nothing produced by one active stage may be
  /// consumed by the other; the proxy/adjoint handoff from N2 into N3 is the
  /// sanctioned exception. Throws StructuralError on violation.
  void verify_cross_effects() const;
};

/// The canonic mechanism: one catalytic reaction per monomial. Reactants are
/// the term's variables with exponent multiplicity; a positive term adds one
/// product copy of the differential species, a negative term removes one.
/// Constant terms compile to catalytic sources fed by the bias species B,
/// grouped by coefficient. Rejects systems that fail the KDE check.
Crn canonic_translate(const PolyOdeSystem& sys);

Circuit build_circuit(const CircuitConfig& config);

/// Drops the hidden-state and adjoint feedback fragments from N3, keeping
/// gradient accumulation against frozen adjoints (first-order gradients).
Circuit first_order_simplify(const Circuit& circuit);

}  // namespace ncrn
