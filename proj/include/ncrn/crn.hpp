#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ncrn/errors.hpp"
#include "ncrn/ode_ir.hpp"

namespace ncrn {

using SpeciesId = int;

enum class Rail { single, plus, minus };
enum class Speed { slow, fast };
enum class Gate { always, c1, c2 };

struct Species {
  SpeciesId id = -1;
  std::string name;
  Rail rail = Rail::single;
  std::optional<SpeciesId> partner;  // complementary rail, when rail != single
};

/// Multiset entry: `count` copies of one species.
struct Term {
  SpeciesId species = -1;
  int count = 1;
  bool operator==(const Term&) const = default;
};

struct Reaction {
  std::vector<Term> reactants;  // sorted by species id
  std::vector<Term> products;
  double rate = 1.0;
  Speed speed = Speed::slow;
  Gate gate = Gate::always;

  /// Total reactant multiplicity (1 = unimolecular, 2 = bimolecular, ...).
  int molecularity() const;
  int reactant_count_of(SpeciesId s) const;
  int net_stoichiometry(SpeciesId s) const;
  void canonicalize();
  bool operator==(const Reaction&) const = default;
};

Reaction make_reaction(std::vector<Term> reactants, std::vector<Term> products, double rate,
                       Speed speed = Speed::slow, Gate gate = Gate::always);

class SpeciesRegistry {
 public:
  SpeciesId add(const std::string& name, Rail rail = Rail::single);
  void link_partners(SpeciesId plus, SpeciesId minus);
  std::optional<SpeciesId> find(const std::string& name) const;
  SpeciesId require(const std::string& name) const;
  const Species& at(SpeciesId id) const;
  const std::vector<Species>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::vector<std::string> names() const;

 private:
  std::vector<Species> items_;
  std::map<std::string, SpeciesId> by_name_;
};

/// A reaction network over a species registry. Immutable by convention once
/// built; simulation and analysis never mutate it.
struct Crn {
  SpeciesRegistry species;
  std::vector<Reaction> reactions;

  void validate() const;
  int state_dim() const { return static_cast<int>(species.size()); }
};

struct MassActionOptions {
  double kappa_fast = 1e3;               // rate multiplier for fast reactions
  std::optional<Gate> active_gate;       // nullopt = all reactions contribute
};

inline bool gate_active(Gate gate, const std::optional<Gate>& filter) {
  return !filter || gate == Gate::always || gate == *filter;
}

/// Standard mass-action semantics: each reaction contributes
/// rate * prod [reactant]^multiplicity times its net stoichiometry to each
/// species' equation. Variable names are the species names with the leading
/// letter lowercased.
PolyOdeSystem derive_mass_action(const Crn& crn, const MassActionOptions& opts = {});

/// Species name <-> IR variable name convention used by derive_mass_action
/// and the circuit compiler.
std::string species_name_for_var(const std::string& var_name);
std::string var_name_for_species(const std::string& species_name);

/// Exact completion limit of a stage of fast reactions: every unimolecular
/// X -> products transfers [X] stoichiometrically, and each parameter update
/// pair (G- -> P, G+ + P -> 0) applies p' = max(0, p - g+ + g-) with the
/// residual G annihilated. Rejects stages containing other bimolecular or
/// higher chemistry, and stages whose sources chain into other reactions.
std::vector<double> apply_discrete_map(const Crn& stage, const std::vector<double>& init);

/// Text format: `species <name> <rail> [partner]` headers, then one reaction
/// per line, e.g. `A + 2B ->{1.5,fast,C1} C + A + 2B`. `0` denotes an empty
/// side. Round-trips exactly.
std::string to_text(const Crn& crn);
std::string reaction_to_text(const Crn& crn, const Reaction& r);
Crn parse_crn(const std::string& text);

/// `t,<species...>` rows, one per accepted solver step.
std::string trajectory_csv_header(const Crn& crn);

}  // namespace ncrn
