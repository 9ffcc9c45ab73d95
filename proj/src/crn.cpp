#include "ncrn/crn.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>
#include <sstream>

namespace ncrn {

int Reaction::molecularity() const {
  int m = 0;
  for (const Term& t : reactants) m += t.count;
  return m;
}

int Reaction::reactant_count_of(SpeciesId s) const {
  for (const Term& t : reactants)
    if (t.species == s) return t.count;
  return 0;
}

int Reaction::net_stoichiometry(SpeciesId s) const {
  int net = 0;
  for (const Term& t : products)
    if (t.species == s) net += t.count;
  for (const Term& t : reactants)
    if (t.species == s) net -= t.count;
  return net;
}

namespace {

// Merges duplicate species while keeping first-appearance order, so emitted
// reactions read the conventional way (new product first, catalysts after).
void canonicalize_side(std::vector<Term>& side) {
  std::vector<Term> merged;
  for (const Term& t : side) {
    bool found = false;
    for (Term& m : merged) {
      if (m.species == t.species) {
        m.count += t.count;
        found = true;
        break;
      }
    }
    if (!found) merged.push_back(t);
  }
  side = std::move(merged);
}

}  // namespace

void Reaction::canonicalize() {
  canonicalize_side(reactants);
  canonicalize_side(products);
}

Reaction make_reaction(std::vector<Term> reactants, std::vector<Term> products, double rate,
                       Speed speed, Gate gate) {
  Reaction r;
  r.reactants = std::move(reactants);
  r.products = std::move(products);
  r.rate = rate;
  r.speed = speed;
  r.gate = gate;
  r.canonicalize();
  return r;
}

SpeciesId SpeciesRegistry::add(const std::string& name, Rail rail) {
  if (name.empty()) throw StructuralError("species name must be non-empty");
  if (by_name_.count(name)) throw StructuralError("duplicate species name: " + name);
  SpeciesId id = static_cast<SpeciesId>(items_.size());
  items_.push_back({id, name, rail, std::nullopt});
  by_name_[name] = id;
  return id;
}

void SpeciesRegistry::link_partners(SpeciesId plus, SpeciesId minus) {
  Species& p = items_.at(static_cast<std::size_t>(plus));
  Species& m = items_.at(static_cast<std::size_t>(minus));
  if (p.rail != Rail::plus || m.rail != Rail::minus)
    throw StructuralError("partner link requires a (plus, minus) pair");
  p.partner = minus;
  m.partner = plus;
}

std::optional<SpeciesId> SpeciesRegistry::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

SpeciesId SpeciesRegistry::require(const std::string& name) const {
  auto id = find(name);
  if (!id) throw StructuralError("unknown species: " + name);
  return *id;
}

const Species& SpeciesRegistry::at(SpeciesId id) const {
  if (id < 0 || id >= static_cast<SpeciesId>(items_.size()))
    throw StructuralError("species id out of range");
  return items_[static_cast<std::size_t>(id)];
}

std::vector<std::string> SpeciesRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(items_.size());
  for (const auto& s : items_) out.push_back(s.name);
  return out;
}

void Crn::validate() const {
  for (const auto& s : species.items()) {
    if (s.rail == Rail::single && s.partner)
      throw StructuralError("single-rail species with a partner: " + s.name);
    if (s.rail != Rail::single) {
      if (!s.partner) throw StructuralError("rail species without a partner: " + s.name);
      const Species& other = species.at(*s.partner);
      if (other.partner != s.id || other.rail == s.rail)
        throw StructuralError("asymmetric rail partner link: " + s.name);
    }
  }
  for (const auto& r : reactions) {
    if (!(r.rate > 0.0)) throw StructuralError("reaction rate must be positive");
    if (r.reactants.empty() && r.products.empty())
      throw StructuralError("reaction with both sides empty");
    for (const Term& t : r.reactants) {
      species.at(t.species);
      if (t.count < 1) throw StructuralError("reactant count < 1");
    }
    for (const Term& t : r.products) {
      species.at(t.species);
      if (t.count < 1) throw StructuralError("product count < 1");
    }
  }
}

std::string species_name_for_var(const std::string& var_name) {
  std::string s = var_name;
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string var_name_for_species(const std::string& species_name) {
  std::string s = species_name;
  if (!s.empty()) s[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(s[0])));
  return s;
}

PolyOdeSystem derive_mass_action(const Crn& crn, const MassActionOptions& opts) {
  crn.validate();
  PolyOdeSystem sys;
  for (const auto& s : crn.species.items())
    sys.add_variable(var_name_for_species(s.name), SignDomain::nonnegative);

  std::map<VarId, std::vector<Monomial>> eqs;
  for (const Reaction& r : crn.reactions) {
    if (!gate_active(r.gate, opts.active_gate)) continue;
    double rate = r.rate * (r.speed == Speed::fast ? opts.kappa_fast : 1.0);
    Monomial flux;
    flux.coeff = rate;
    for (const Term& t : r.reactants) flux.powers.emplace_back(t.species, t.count);
    flux.canonicalize();
    std::set<SpeciesId> touched;
    for (const Term& t : r.reactants) touched.insert(t.species);
    for (const Term& t : r.products) touched.insert(t.species);
    for (SpeciesId s : touched) {
      int net = r.net_stoichiometry(s);
      if (net == 0) continue;
      Monomial m = flux;
      m.coeff *= net;
      eqs[s].push_back(std::move(m));
    }
  }
  for (auto& [v, rhs] : eqs) sys.set_equation(v, std::move(rhs));
  return sys;
}

std::vector<double> apply_discrete_map(const Crn& stage, const std::vector<double>& init) {
  stage.validate();
  if (init.size() != stage.species.size())
    throw StructuralError("state dimension does not match the stage registry");

  // Update pairs are recognized as bimolecular {G, P} -> nothing together
  // with a unimolecular partner-rail feed; everything else must be a plain
  // unimolecular transfer.
  std::vector<const Reaction*> transfers;
  struct Subtract {
    SpeciesId minuend;     // P
    SpeciesId subtrahend;  // G+
  };
  std::vector<Subtract> subtracts;
  std::set<SpeciesId> sources;
  for (const Reaction& r : stage.reactions) {
    if (r.molecularity() == 1) {
      SpeciesId src = r.reactants[0].species;
      if (!sources.insert(src).second)
        throw ContractViolation("discrete stage splits source species " +
                                stage.species.at(src).name + " across reactions");
      transfers.push_back(&r);
      continue;
    }
    bool is_pair = r.molecularity() == 2 && r.reactants.size() == 2 && r.products.empty();
    if (!is_pair)
      throw ContractViolation("discrete stage contains non-unimolecular chemistry: " +
                              reaction_to_text(stage, r));
    // orient the pair: the gradient side is the plus rail
    SpeciesId a = r.reactants[0].species;
    SpeciesId b = r.reactants[1].species;
    bool a_plus = stage.species.at(a).rail == Rail::plus;
    bool b_plus = stage.species.at(b).rail == Rail::plus;
    if (a_plus == b_plus)
      throw ContractViolation("unrecognized subtraction pair: " + reaction_to_text(stage, r));
    SpeciesId grad = a_plus ? a : b;
    SpeciesId param = a_plus ? b : a;
    subtracts.push_back({param, grad});
    sources.insert(grad);
  }
  for (const Reaction* r : transfers)
    for (const Term& t : r->products)
      if (sources.count(t.species) && t.species != r->reactants[0].species)
        throw ContractViolation("discrete stage chains reactions through " +
                                stage.species.at(t.species).name);

  std::vector<double> out = init;
  // simultaneous unimolecular transfers, read from the input state
  for (const Reaction* r : transfers)
    out[static_cast<std::size_t>(r->reactants[0].species)] = 0.0;
  for (const Reaction* r : transfers) {
    SpeciesId src = r->reactants[0].species;
    double amount = init[static_cast<std::size_t>(src)];
    for (const Term& t : r->products)
      out[static_cast<std::size_t>(t.species)] += amount * t.count;
  }
  // then the subtraction pairs run to completion
  for (const Subtract& s : subtracts) {
    double p = out[static_cast<std::size_t>(s.minuend)];
    double g = out[static_cast<std::size_t>(s.subtrahend)];
    out[static_cast<std::size_t>(s.minuend)] = std::max(0.0, p - g);
    out[static_cast<std::size_t>(s.subtrahend)] = 0.0;
  }
  return out;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

const char* rail_name(Rail r) {
  switch (r) {
    case Rail::single: return "single";
    case Rail::plus: return "plus";
    default: return "minus";
  }
}

const char* speed_name(Speed s) { return s == Speed::fast ? "fast" : "slow"; }

const char* gate_name(Gate g) {
  switch (g) {
    case Gate::always: return "always";
    case Gate::c1: return "C1";
    default: return "C2";
  }
}

void side_to_text(std::ostringstream& os, const Crn& crn, const std::vector<Term>& side) {
  if (side.empty()) {
    os << '0';
    return;
  }
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (i) os << " + ";
    if (side[i].count != 1) os << side[i].count;
    os << crn.species.at(side[i].species).name;
  }
}

}  // namespace

std::string reaction_to_text(const Crn& crn, const Reaction& r) {
  std::ostringstream os;
  side_to_text(os, crn, r.reactants);
  os << " ->{" << format_double(r.rate) << ',' << speed_name(r.speed) << ',' << gate_name(r.gate)
     << "} ";
  side_to_text(os, crn, r.products);
  return os.str();
}

std::string to_text(const Crn& crn) {
  std::ostringstream os;
  for (const auto& s : crn.species.items()) {
    os << "species " << s.name << ' ' << rail_name(s.rail);
    if (s.partner) os << ' ' << crn.species.at(*s.partner).name;
    os << '\n';
  }
  for (const Reaction& r : crn.reactions) os << reaction_to_text(crn, r) << '\n';
  return os.str();
}

namespace {

std::vector<Term> parse_side(const Crn& crn, const std::string& text) {
  std::vector<Term> side;
  std::istringstream is(text);
  std::string tok;
  bool expect_plus = false;
  while (is >> tok) {
    if (expect_plus) {
      if (tok != "+") throw StructuralError("expected '+' in reaction side: " + text);
      expect_plus = false;
      continue;
    }
    if (tok == "0") {
      expect_plus = true;
      continue;
    }
    std::size_t i = 0;
    while (i < tok.size() && std::isdigit(static_cast<unsigned char>(tok[i]))) ++i;
    int count = i > 0 ? std::atoi(tok.substr(0, i).c_str()) : 1;
    std::string name = tok.substr(i);
    if (name.empty() || count < 1) throw StructuralError("bad species term: " + tok);
    side.push_back({crn.species.require(name), count});
    expect_plus = true;
  }
  return side;
}

}  // namespace

Crn parse_crn(const std::string& text) {
  Crn crn;
  std::istringstream is(text);
  std::string line;
  std::vector<std::pair<std::string, std::string>> pending_partners;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("species ", 0) == 0) {
      std::istringstream ls(line);
      std::string kw, name, rail, partner;
      ls >> kw >> name >> rail;
      Rail r = rail == "single" ? Rail::single : rail == "plus" ? Rail::plus : Rail::minus;
      if (rail != "single" && rail != "plus" && rail != "minus")
        throw StructuralError("bad rail in: " + line);
      crn.species.add(name, r);
      if (ls >> partner && r == Rail::plus) pending_partners.emplace_back(name, partner);
      continue;
    }
    auto arrow = line.find("->{");
    if (arrow == std::string::npos) throw StructuralError("expected reaction line: " + line);
    auto close = line.find('}', arrow);
    if (close == std::string::npos) throw StructuralError("unterminated rate block: " + line);
    std::string attrs = line.substr(arrow + 3, close - arrow - 3);
    auto c1 = attrs.find(',');
    auto c2 = attrs.rfind(',');
    if (c1 == std::string::npos || c2 == c1)
      throw StructuralError("rate block needs rate,speed,gate: " + line);
    Reaction r;
    r.rate = std::strtod(attrs.substr(0, c1).c_str(), nullptr);
    std::string speed = attrs.substr(c1 + 1, c2 - c1 - 1);
    std::string gate = attrs.substr(c2 + 1);
    r.speed = speed == "fast" ? Speed::fast : Speed::slow;
    if (speed != "fast" && speed != "slow") throw StructuralError("bad speed in: " + line);
    r.gate = gate == "C1" ? Gate::c1 : gate == "C2" ? Gate::c2 : Gate::always;
    if (gate != "C1" && gate != "C2" && gate != "always")
      throw StructuralError("bad gate in: " + line);
    r.reactants = parse_side(crn, line.substr(0, arrow));
    r.products = parse_side(crn, line.substr(close + 1));
    r.canonicalize();
    crn.reactions.push_back(std::move(r));
  }
  for (const auto& [plus, minus] : pending_partners)
    crn.species.link_partners(crn.species.require(plus), crn.species.require(minus));
  crn.validate();
  return crn;
}

std::string trajectory_csv_header(const Crn& crn) {
  std::ostringstream os;
  os << 't';
  for (const auto& s : crn.species.items()) os << ',' << s.name;
  return os.str();
}

}  // namespace ncrn
