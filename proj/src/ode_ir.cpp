#include "ncrn/ode_ir.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>
#include <sstream>

namespace ncrn {

void Monomial::canonicalize() {
  std::map<VarId, int> acc;
  for (const auto& [v, e] : powers) acc[v] += e;
  powers.assign(acc.begin(), acc.end());
}

int Monomial::exponent_of(VarId v) const {
  for (const auto& [var, e] : powers)
    if (var == v) return e;
  return 0;
}

int Monomial::degree() const {
  int d = 0;
  for (const auto& [v, e] : powers) d += e;
  return d;
}

bool monomial_order(const Monomial& a, const Monomial& b) {
  if (a.powers != b.powers) return a.powers < b.powers;
  return a.coeff < b.coeff;
}

bool operator==(const Monomial& a, const Monomial& b) {
  return a.coeff == b.coeff && a.powers == b.powers;
}

VarId PolyOdeSystem::add_variable(const std::string& name, SignDomain domain) {
  if (name.empty()) throw StructuralError("variable name must be non-empty");
  if (by_name_.count(name)) throw StructuralError("duplicate variable name: " + name);
  VarId id = static_cast<VarId>(vars_.size());
  vars_.push_back({id, name, domain});
  by_name_[name] = id;
  return id;
}

std::optional<VarId> PolyOdeSystem::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

VarId PolyOdeSystem::require(const std::string& name) const {
  auto v = find(name);
  if (!v) throw StructuralError("unknown variable: " + name);
  return *v;
}

const OdeVariable& PolyOdeSystem::variable(VarId v) const {
  if (v < 0 || v >= static_cast<VarId>(vars_.size()))
    throw StructuralError("variable id out of range");
  return vars_[static_cast<std::size_t>(v)];
}

void PolyOdeSystem::set_equation(VarId v, std::vector<Monomial> rhs) {
  variable(v);
  for (auto& m : rhs) m.canonicalize();
  std::sort(rhs.begin(), rhs.end(), monomial_order);
  eqs_[v] = std::move(rhs);
}

const std::vector<Monomial>* PolyOdeSystem::equation(VarId v) const {
  auto it = eqs_.find(v);
  return it == eqs_.end() ? nullptr : &it->second;
}

void PolyOdeSystem::validate() const {
  for (const auto& [v, rhs] : eqs_) {
    variable(v);
    for (const auto& m : rhs) {
      if (m.coeff == 0.0)
        throw StructuralError("zero coefficient in equation for " + variable(v).name);
      for (const auto& [w, e] : m.powers) {
        variable(w);
        if (e < 1)
          throw StructuralError("exponent < 1 in equation for " + variable(v).name);
      }
    }
  }
}

void PolyOdeSystem::eval_rhs(const double* y, double* dydt) const {
  for (std::size_t i = 0; i < vars_.size(); ++i) dydt[i] = 0.0;
  for (const auto& [v, rhs] : eqs_) {
    double acc = 0.0;
    for (const auto& m : rhs) {
      double term = m.coeff;
      for (const auto& [w, e] : m.powers)
        for (int k = 0; k < e; ++k) term *= y[w];
      acc += term;
    }
    dydt[v] = acc;
  }
}

std::vector<double> PolyOdeSystem::rhs_at(const std::vector<double>& y) const {
  if (y.size() != vars_.size()) throw StructuralError("state dimension mismatch");
  std::vector<double> out(vars_.size(), 0.0);
  eval_rhs(y.data(), out.data());
  return out;
}

bool PolyOdeSystem::operator==(const PolyOdeSystem& other) const {
  if (vars_.size() != other.vars_.size()) return false;
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].name != other.vars_[i].name) return false;
    if (vars_[i].domain != other.vars_[i].domain) return false;
  }
  // Empty equations count the same as absent ones.
  auto next_nonempty = [](auto& it, const auto& end) {
    while (it != end && it->second.empty()) ++it;
  };
  auto a = eqs_.begin();
  auto b = other.eqs_.begin();
  while (true) {
    next_nonempty(a, eqs_.end());
    next_nonempty(b, other.eqs_.end());
    if (a == eqs_.end() || b == other.eqs_.end()) break;
    if (a->first != b->first || !(a->second == b->second)) return false;
    ++a;
    ++b;
  }
  return a == eqs_.end() && b == other.eqs_.end();
}

bool KdeReport::all_kde() const {
  for (const auto& [v, ok] : per_equation)
    if (!ok) return false;
  return true;
}

std::string KdeReport::summary(const PolyOdeSystem& sys) const {
  std::ostringstream os;
  for (const auto& viol : violations) {
    os << "equation d" << sys.variable(viol.equation).name << "/dt: " << viol.detail << "\n";
  }
  return os.str();
}

KdeReport classify_kde(const PolyOdeSystem& sys) {
  sys.validate();
  KdeReport report;
  for (const auto& [target, rhs] : sys.equations()) {
    bool ok = true;
    auto flag_real = [&](VarId v, int idx) {
      if (sys.variable(v).domain == SignDomain::real) {
        report.violations.push_back({target, idx, KdeRule::real_domain_variable,
                                     "variable " + sys.variable(v).name + " has a real domain"});
        ok = false;
        return true;
      }
      return false;
    };
    flag_real(target, -1);
    std::set<VarId> flagged;
    for (std::size_t i = 0; i < rhs.size(); ++i) {
      const Monomial& m = rhs[i];
      for (const auto& [v, e] : m.powers) {
        (void)e;
        if (!flagged.count(v) && v != target && flag_real(v, static_cast<int>(i)))
          flagged.insert(v);
      }
      if (m.coeff < 0.0 && !m.references(target)) {
        report.violations.push_back(
            {target, static_cast<int>(i), KdeRule::negative_cross_effect,
             "negative term (index " + std::to_string(i) + ") lacks the differential variable"});
        ok = false;
      }
    }
    report.per_equation[target] = ok;
  }
  return report;
}

namespace {

struct RailPlan {
  // old id -> plus/minus ids in the new system; or the passthrough id
  std::map<VarId, std::pair<VarId, VarId>> rails;
  std::map<VarId, VarId> passthrough;
};

// Expands prod over (factor list) into the 2^k signed branches, without
// merging same-parity duplicates: circuit sizes count reactions per branch.
void expand_branches(const std::vector<std::pair<VarId, int>>& powers, std::size_t slot,
                     int exp_left, const RailPlan& plan, std::map<VarId, int>& acc, int parity,
                     std::vector<std::pair<std::map<VarId, int>, int>>& out) {
  if (slot == powers.size()) {
    out.emplace_back(acc, parity);
    return;
  }
  auto [v, e] = powers[slot];
  int remaining = exp_left > 0 ? exp_left : e;
  if (remaining == 0) {
    expand_branches(powers, slot + 1, 0, plan, acc, parity, out);
    return;
  }
  auto it = plan.rails.find(v);
  if (it == plan.rails.end()) {
    VarId nv = plan.passthrough.at(v);
    acc[nv] += remaining;
    expand_branches(powers, slot + 1, 0, plan, acc, parity, out);
    acc[nv] -= remaining;
    if (acc[nv] == 0) acc.erase(nv);
    return;
  }
  // one factor at a time: plus branch then minus branch
  for (int pick = 0; pick < 2; ++pick) {
    VarId nv = pick == 0 ? it->second.first : it->second.second;
    int par = pick == 0 ? parity : -parity;
    acc[nv] += 1;
    if (remaining == 1)
      expand_branches(powers, slot + 1, 0, plan, acc, par, out);
    else
      expand_branches(powers, slot, remaining - 1, plan, acc, par, out);
    acc[nv] -= 1;
    if (acc[nv] == 0) acc.erase(nv);
  }
}

}  // namespace

PolyOdeSystem dual_rail_transform(const PolyOdeSystem& sys, const std::vector<VarId>& selected) {
  sys.validate();
  std::set<VarId> sel(selected.begin(), selected.end());
  for (VarId v : sel) sys.variable(v);

  PolyOdeSystem out;
  RailPlan plan;
  for (const auto& var : sys.variables()) {
    if (sel.count(var.id)) {
      VarId p = out.add_variable(var.name + kPlusSuffix, SignDomain::nonnegative);
      VarId m = out.add_variable(var.name + kMinusSuffix, SignDomain::nonnegative);
      plan.rails[var.id] = {p, m};
    } else {
      plan.passthrough[var.id] = out.add_variable(var.name, var.domain);
    }
  }

  for (const auto& [target, rhs] : sys.equations()) {
    bool target_split = sel.count(target) > 0;
    std::vector<Monomial> plus_eq, minus_eq, plain_eq;
    for (const Monomial& m : rhs) {
      std::vector<std::pair<std::map<VarId, int>, int>> branches;
      std::map<VarId, int> acc;
      expand_branches(m.powers, 0, 0, plan, acc, m.coeff < 0 ? -1 : 1, branches);
      for (auto& [pw, parity] : branches) {
        Monomial t;
        t.powers.assign(pw.begin(), pw.end());
        if (target_split) {
          t.coeff = std::fabs(m.coeff);
          (parity > 0 ? plus_eq : minus_eq).push_back(std::move(t));
        } else {
          t.coeff = parity * std::fabs(m.coeff);
          plain_eq.push_back(std::move(t));
        }
      }
    }
    if (target_split) {
      auto [p, mi] = plan.rails.at(target);
      out.set_equation(p, std::move(plus_eq));
      out.set_equation(mi, std::move(minus_eq));
    } else {
      out.set_equation(plan.passthrough.at(target), std::move(plain_eq));
    }
  }
  return out;
}

PolyOdeSystem time_reverse(const PolyOdeSystem& sys) {
  PolyOdeSystem out = sys;
  for (const auto& [v, rhs] : sys.equations()) {
    std::vector<Monomial> negated = rhs;
    for (auto& m : negated) m.coeff = -m.coeff;
    out.set_equation(v, std::move(negated));
  }
  return out;
}

std::vector<Monomial> differentiate(const std::vector<Monomial>& rhs, VarId v) {
  std::vector<Monomial> out;
  for (const Monomial& m : rhs) {
    int e = m.exponent_of(v);
    if (e == 0) continue;
    Monomial d;
    d.coeff = m.coeff * e;
    for (const auto& [w, we] : m.powers) {
      int ne = w == v ? we - 1 : we;
      if (ne > 0) d.powers.emplace_back(w, ne);
    }
    out.push_back(std::move(d));
  }
  return out;
}

Monomial monomial_times_var(Monomial m, VarId v) {
  m.powers.emplace_back(v, 1);
  m.canonicalize();
  return m;
}

namespace {

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string to_text(const PolyOdeSystem& sys) {
  std::ostringstream os;
  os << "vars:";
  for (const auto& v : sys.variables())
    os << ' ' << v.name << ':' << (v.domain == SignDomain::nonnegative ? '+' : '~');
  os << '\n';
  for (const auto& [v, rhs] : sys.equations()) {
    os << "d " << sys.variable(v).name << "/dt =";
    if (rhs.empty()) {
      os << " 0";
    } else {
      for (const Monomial& m : rhs) {
        os << ' ' << (m.coeff < 0 ? '-' : '+') << format_double(std::fabs(m.coeff));
        for (const auto& [w, e] : m.powers) os << '*' << sys.variable(w).name << '^' << e;
      }
    }
    os << '\n';
  }
  return os.str();
}

PolyOdeSystem parse_poly_system(const std::string& text) {
  PolyOdeSystem sys;
  std::istringstream is(text);
  std::string line;
  bool saw_vars = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "vars:") {
      saw_vars = true;
      while (ls >> tok) {
        auto colon = tok.rfind(':');
        if (colon == std::string::npos || colon + 2 != tok.size())
          throw StructuralError("bad vars entry: " + tok);
        char dom = tok[colon + 1];
        if (dom != '+' && dom != '~') throw StructuralError("bad domain flag in: " + tok);
        sys.add_variable(tok.substr(0, colon),
                         dom == '+' ? SignDomain::nonnegative : SignDomain::real);
      }
      continue;
    }
    if (tok != "d") throw StructuralError("expected equation line, got: " + line);
    if (!saw_vars) throw StructuralError("equation before vars: header");
    std::string head;
    ls >> head;
    auto slash = head.find("/dt");
    if (slash == std::string::npos) throw StructuralError("bad equation head: " + head);
    VarId target = sys.require(head.substr(0, slash));
    ls >> tok;
    if (tok != "=") throw StructuralError("expected '=' in: " + line);
    std::vector<Monomial> rhs;
    while (ls >> tok) {
      if (tok == "0" && rhs.empty()) break;
      Monomial m;
      std::size_t pos = 0;
      std::vector<std::string> chunks;
      while (pos <= tok.size()) {
        auto star = tok.find('*', pos);
        chunks.push_back(tok.substr(pos, star == std::string::npos ? star : star - pos));
        if (star == std::string::npos) break;
        pos = star + 1;
      }
      m.coeff = std::strtod(chunks[0].c_str(), nullptr);
      if (m.coeff == 0.0) throw StructuralError("zero or unparsable coefficient: " + tok);
      for (std::size_t i = 1; i < chunks.size(); ++i) {
        auto caret = chunks[i].rfind('^');
        if (caret == std::string::npos) throw StructuralError("missing exponent in: " + tok);
        VarId v = sys.require(chunks[i].substr(0, caret));
        int e = std::atoi(chunks[i].c_str() + caret + 1);
        if (e < 1) throw StructuralError("bad exponent in: " + tok);
        m.powers.emplace_back(v, e);
      }
      m.canonicalize();
      rhs.push_back(std::move(m));
    }
    sys.set_equation(target, std::move(rhs));
  }
  sys.validate();
  return sys;
}

}  // namespace ncrn
