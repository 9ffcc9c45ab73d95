#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncrn/errors.hpp"

namespace ncrn {

using VarId = int;

enum class SignDomain { nonnegative, real };

/// One product term of a polynomial right-hand side: coeff * prod_i v_i^e_i.
/// Powers are kept sorted by variable id with exponents >= 1; the coefficient
/// is never zero.
struct Monomial {
  double coeff = 0.0;
  std::vector<std::pair<VarId, int>> powers;

  Monomial() = default;
  Monomial(double c, std::vector<std::pair<VarId, int>> p) : coeff(c), powers(std::move(p)) {
    canonicalize();
  }

  /// Sorts powers by variable id and merges repeated variables.
  void canonicalize();
  int exponent_of(VarId v) const;
  int degree() const;
  bool references(VarId v) const { return exponent_of(v) > 0; }
};

bool monomial_order(const Monomial& a, const Monomial& b);
bool operator==(const Monomial& a, const Monomial& b);

struct OdeVariable {
  VarId id = -1;
  std::string name;
  SignDomain domain = SignDomain::nonnegative;
};

/// A polynomial ODE system d(var)/dt = sum of monomials. Variables without an
/// equation are constant. Instances are value types: transformations build new
/// systems, so a constructed system can be shared freely across threads.
class PolyOdeSystem {
 public:
  VarId add_variable(const std::string& name, SignDomain domain);
  std::optional<VarId> find(const std::string& name) const;
  VarId require(const std::string& name) const;
  const OdeVariable& variable(VarId v) const;
  const std::vector<OdeVariable>& variables() const { return vars_; }
  std::size_t var_count() const { return vars_.size(); }

  /// Replaces the RHS of d(v)/dt. Monomials are canonicalized and stored in
  /// a fixed order so that structural equality is well-defined.
  void set_equation(VarId v, std::vector<Monomial> rhs);
  const std::vector<Monomial>* equation(VarId v) const;
  const std::map<VarId, std::vector<Monomial>>& equations() const { return eqs_; }

  /// Structural checks: ids resolve, exponents >= 1, coefficients nonzero.
  void validate() const;

  /// RHS evaluation with y indexed by variable id. Slow path, used by tests
  /// and the generic integrators.
  void eval_rhs(const double* y, double* dydt) const;
  std::vector<double> rhs_at(const std::vector<double>& y) const;

  bool operator==(const PolyOdeSystem& other) const;

 private:
  std::vector<OdeVariable> vars_;
  std::map<std::string, VarId> by_name_;
  std::map<VarId, std::vector<Monomial>> eqs_;
};

/// Why an equation failed the kinetics-differential-equation check.
enum class KdeRule { real_domain_variable, negative_cross_effect };

struct KdeViolation {
  VarId equation = -1;
  int monomial_index = -1;  // -1 when the rule concerns the equation itself
  KdeRule rule = KdeRule::real_domain_variable;
  std::string detail;
};

struct KdeReport {
  std::map<VarId, bool> per_equation;
  std::vector<KdeViolation> violations;
  bool all_kde() const;
  std::string summary(const PolyOdeSystem& sys) const;
};

/// An equation qualifies as a KDE iff every variable it touches (including
/// the differential variable) lives on a nonnegative domain and every
/// negatively-signed monomial contains the differential variable.
KdeReport classify_kde(const PolyOdeSystem& sys);

inline constexpr const char* kPlusSuffix = "_p";
inline constexpr const char* kMinusSuffix = "_m";

/// Rewrites each selected variable v as a nonnegative rail pair (v_p, v_m)
/// with v == v_p - v_m. Product terms expand factor-by-factor (2^k branches,
/// never merged) and route to the target rail by overall sign parity.
PolyOdeSystem dual_rail_transform(const PolyOdeSystem& sys, const std::vector<VarId>& selected);

/// Negates every coefficient: evolving the result forward over [0, t]
/// retraces the source system's trajectory backward.
PolyOdeSystem time_reverse(const PolyOdeSystem& sys);

/// d(rhs)/d(v), term by term.
std::vector<Monomial> differentiate(const std::vector<Monomial>& rhs, VarId v);
Monomial monomial_times_var(Monomial m, VarId v);

/// Text form: a `vars:` header followed by one `d <var>/dt = ...` line per
/// equation. Round-trips exactly (coefficients printed with 17 digits).
std::string to_text(const PolyOdeSystem& sys);
PolyOdeSystem parse_poly_system(const std::string& text);

}  // namespace ncrn
