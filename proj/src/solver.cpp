#include "ncrn/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace ncrn {

namespace {

// Dense LU with partial pivoting, in place. Returns false when singular.
bool lu_factor(std::vector<double>& a, std::vector<int>& piv, int n) {
  piv.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::fabs(a[static_cast<std::size_t>(k * n + k)]);
    for (int i = k + 1; i < n; ++i) {
      double v = std::fabs(a[static_cast<std::size_t>(i * n + k)]);
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0 || !std::isfinite(best)) return false;
    piv[static_cast<std::size_t>(k)] = p;
    if (p != k)
      for (int j = 0; j < n; ++j)
        std::swap(a[static_cast<std::size_t>(k * n + j)], a[static_cast<std::size_t>(p * n + j)]);
    double inv = 1.0 / a[static_cast<std::size_t>(k * n + k)];
    for (int i = k + 1; i < n; ++i) {
      double m = a[static_cast<std::size_t>(i * n + k)] * inv;
      a[static_cast<std::size_t>(i * n + k)] = m;
      if (m != 0.0)
        for (int j = k + 1; j < n; ++j)
          a[static_cast<std::size_t>(i * n + j)] -= m * a[static_cast<std::size_t>(k * n + j)];
    }
  }
  return true;
}

void lu_solve(const std::vector<double>& a, const std::vector<int>& piv, int n,
              std::vector<double>& b) {
  for (int k = 0; k < n; ++k) {
    int p = piv[static_cast<std::size_t>(k)];
    if (p != k) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(p)]);
    for (int i = k + 1; i < n; ++i)
      b[static_cast<std::size_t>(i)] -= a[static_cast<std::size_t>(i * n + k)] * b[static_cast<std::size_t>(k)];
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int j = i + 1; j < n; ++j)
      b[static_cast<std::size_t>(i)] -= a[static_cast<std::size_t>(i * n + j)] * b[static_cast<std::size_t>(j)];
    b[static_cast<std::size_t>(i)] /= a[static_cast<std::size_t>(i * n + i)];
  }
}

double wrms(const std::vector<double>& e, const std::vector<double>& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    double q = e[i] / w[i];
    acc += q * q;
  }
  return std::sqrt(acc / static_cast<double>(e.size()));
}

void weights(const std::vector<double>& a, const std::vector<double>& b, double rel, double abs,
             std::vector<double>& w) {
  for (std::size_t i = 0; i < a.size(); ++i)
    w[i] = abs + rel * std::max(std::fabs(a[i]), std::fabs(b[i]));
}

}  // namespace

std::vector<double> integrate_trbdf2(const OdeFunction& ode, std::vector<double> y,
                                     double duration, const SolverConfig& cfg,
                                     const StepObserver& observer) {
  const int n = ode.dim();
  const std::size_t un = static_cast<std::size_t>(n);
  if (y.size() != un) throw ContractViolation("initial state dimension mismatch");
  if (!(duration > 0.0)) throw ContractViolation("duration must be positive");

  const double gamma = 2.0 - std::sqrt(2.0);
  const double d = gamma / 2.0;  // shared implicit coefficient of both stages
  const double a1 = 1.0 / (gamma * (2.0 - gamma));
  const double a2 = -(1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
  const double err_const =
      std::fabs((-3.0 * gamma * gamma + 4.0 * gamma - 2.0) / (12.0 * (2.0 - gamma)));

  std::vector<double> f0(un), fu(un), fv(un), u(un), v(un), rhs_c(un), g(un), w(un), est(un);
  std::vector<double> jac(un * un), m(un * un);
  std::vector<int> piv;

  auto check_state = [&](double t, const std::vector<double>& s) {
    for (std::size_t i = 0; i < un; ++i) {
      if (!std::isfinite(s[i]) || std::fabs(s[i]) > cfg.overflow_guard)
        throw DivergenceError("state exceeded overflow guard at component " +
                                  ode.component_name(static_cast<int>(i)),
                              t, s);
    }
  };

  double t = 0.0;
  ode.rhs(y.data(), f0.data());
  check_state(t, y);

  // initial step from the usual d0/d1 heuristic
  weights(y, y, cfg.rel_tol, cfg.abs_tol, w);
  double d0 = wrms(y, w), d1 = wrms(f0, w);
  double h = (d1 > 0.0) ? 0.01 * d0 / d1 : duration * 1e-3;
  h = std::min({std::max(h, duration * 1e-9), duration, 1.0});
  if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);

  std::size_t steps = 0;
  auto newton = [&](std::vector<double>& x, const std::vector<double>& rc) -> bool {
    for (int it = 0; it < 10; ++it) {
      ode.rhs(x.data(), fu.data());
      for (std::size_t i = 0; i < un; ++i) g[i] = x[i] - d * h * fu[i] - rc[i];
      lu_solve(m, piv, n, g);
      bool finite = true;
      for (std::size_t i = 0; i < un; ++i) {
        x[i] -= g[i];
        if (!std::isfinite(x[i])) finite = false;
      }
      if (!finite) return false;
      if (wrms(g, w) < 0.03) return true;
    }
    return false;
  };

  while (t < duration) {
    if (h > duration - t) h = duration - t;
    bool accepted = false;
    while (!accepted) {
      if (++steps > cfg.max_steps) throw SolverError("step limit exceeded", t, y);
      if (h < 1e-14 * std::max(1.0, t))
        throw SolverError("step size underflow (possible stiff failure)", t, y);

      ode.jacobian(y.data(), jac.data());
      for (std::size_t i = 0; i < un * un; ++i) m[i] = -d * h * jac[i];
      for (std::size_t i = 0; i < un; ++i) m[i * un + i] += 1.0;
      if (!lu_factor(m, piv, n)) {
        h *= 0.25;
        continue;
      }

      weights(y, y, cfg.rel_tol, cfg.abs_tol, w);
      // TR stage to t + gamma*h
      for (std::size_t i = 0; i < un; ++i) {
        rhs_c[i] = y[i] + d * h * f0[i];
        u[i] = y[i] + gamma * h * f0[i];
      }
      if (!newton(u, rhs_c)) {
        h *= 0.25;
        continue;
      }
      ode.rhs(u.data(), fu.data());
      // BDF2 stage to t + h
      for (std::size_t i = 0; i < un; ++i) {
        rhs_c[i] = a1 * u[i] + a2 * y[i];
        v[i] = y[i] + (u[i] - y[i]) / gamma;
      }
      if (!newton(v, rhs_c)) {
        h *= 0.25;
        continue;
      }
      ode.rhs(v.data(), fv.data());

      for (std::size_t i = 0; i < un; ++i)
        est[i] = 2.0 * err_const * h *
                 ((fv[i] - fu[i]) / (1.0 - gamma) - (fu[i] - f0[i]) / gamma);
      lu_solve(m, piv, n, est);  // filter through the iteration matrix
      weights(y, v, cfg.rel_tol, cfg.abs_tol, w);
      double err = wrms(est, w);
      if (!std::isfinite(err)) err = 2.0;

      if (err <= 1.0) {
        accepted = true;
        t += h;
        y = v;
        bool clamped = false;
        if (cfg.enforce_nonnegative) {
          for (std::size_t i = 0; i < un; ++i) {
            if (y[i] < 0.0) {
              if (y[i] < -cfg.tol_neg)
                throw NegativeConcentrationError(
                    "concentration of " + ode.component_name(static_cast<int>(i)) +
                        " fell below the tolerance floor",
                    t, y, ode.component_name(static_cast<int>(i)));
              y[i] = 0.0;
              clamped = true;
            }
          }
        }
        check_state(t, y);
        if (clamped)
          ode.rhs(y.data(), f0.data());
        else
          f0 = fv;
        if (observer) observer(t, y);
        double fac = 0.9 * std::pow(std::max(err, 1e-10), -1.0 / 3.0);
        h *= std::clamp(fac, 0.2, 5.0);
        if (cfg.max_step > 0.0) h = std::min(h, cfg.max_step);
      } else {
        double fac = 0.9 * std::pow(err, -1.0 / 3.0);
        h *= std::clamp(fac, 0.1, 0.5);
      }
    }
  }
  return y;
}

std::vector<double> integrate_rk45(const RhsFn& rhs, std::vector<double> y, double duration,
                                   double rel_tol, double abs_tol, const StepObserver& observer,
                                   std::size_t max_steps) {
  if (!(duration > 0.0)) throw ContractViolation("duration must be positive");
  const std::size_t n = y.size();

  // Cash-Karp 4(5) tableau
  static constexpr double b21 = 1.0 / 5.0;
  static constexpr double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
  static constexpr double b41 = 3.0 / 10.0, b42 = -9.0 / 10.0, b43 = 6.0 / 5.0;
  static constexpr double b51 = -11.0 / 54.0, b52 = 5.0 / 2.0, b53 = -70.0 / 27.0,
                          b54 = 35.0 / 27.0;
  static constexpr double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                          b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
  static constexpr double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                          c6 = 512.0 / 1771.0;
  static constexpr double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                          d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0, d6 = c6 - 0.25;

  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), tmp(n), ynew(n), err(n), w(n);

  double t = 0.0;
  rhs(y, k1);
  weights(y, y, rel_tol, abs_tol, w);
  double d0 = wrms(y, w), dd1 = wrms(k1, w);
  double h = (dd1 > 0.0) ? 0.01 * d0 / dd1 : duration * 1e-3;
  h = std::min({std::max(h, duration * 1e-9), duration});

  std::size_t steps = 0;
  while (t < duration) {
    if (h > duration - t) h = duration - t;
    if (++steps > max_steps) throw SolverError("step limit exceeded", t, y);
    if (h < 1e-14 * std::max(1.0, t)) throw SolverError("step size underflow", t, y);

    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * b21 * k1[i];
    rhs(tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (b31 * k1[i] + b32 * k2[i]);
    rhs(tmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
    rhs(tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
    rhs(tmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      tmp[i] = y[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] + b65 * k5[i]);
    rhs(tmp, k6);
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
      err[i] = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i]);
    }
    weights(y, ynew, rel_tol, abs_tol, w);
    double e = wrms(err, w);
    if (!std::isfinite(e)) e = 2.0;
    if (e <= 1.0) {
      t += h;
      y = ynew;
      rhs(y, k1);
      if (observer) observer(t, y);
      h *= std::clamp(0.9 * std::pow(std::max(e, 1e-12), -0.2), 0.2, 5.0);
    } else {
      h *= std::clamp(0.9 * std::pow(e, -0.25), 0.1, 0.5);
    }
  }
  return y;
}

MassActionOde::MassActionOde(const Crn& crn, const MassActionOptions& opts) {
  crn.validate();
  n_ = crn.state_dim();
  names_ = crn.species.names();
  for (const Reaction& r : crn.reactions) {
    if (!gate_active(r.gate, opts.active_gate)) continue;
    Compiled c;
    c.rate = r.rate * (r.speed == Speed::fast ? opts.kappa_fast : 1.0);
    for (const Term& t : r.reactants) c.reactants.emplace_back(t.species, t.count);
    std::map<int, int> net;
    for (const Term& t : r.products) net[t.species] += t.count;
    for (const Term& t : r.reactants) net[t.species] -= t.count;
    for (const auto& [s, v] : net)
      if (v != 0) c.net.emplace_back(s, v);
    if (!c.net.empty()) rx_.push_back(std::move(c));
  }
}

void MassActionOde::rhs(const double* y, double* f) const {
  for (int i = 0; i < n_; ++i) f[i] = 0.0;
  for (const Compiled& c : rx_) {
    double flux = c.rate;
    for (const auto& [s, m] : c.reactants)
      for (int k = 0; k < m; ++k) flux *= y[s];
    for (const auto& [s, v] : c.net) f[s] += v * flux;
  }
}

void MassActionOde::jacobian(const double* y, double* jac) const {
  const std::size_t un = static_cast<std::size_t>(n_);
  for (std::size_t i = 0; i < un * un; ++i) jac[i] = 0.0;
  for (const Compiled& c : rx_) {
    for (std::size_t j = 0; j < c.reactants.size(); ++j) {
      auto [sj, mj] = c.reactants[j];
      // d(flux)/d(c_sj) evaluated directly so zero concentrations stay exact
      double dflux = c.rate * mj;
      for (int k = 0; k < mj - 1; ++k) dflux *= y[sj];
      for (std::size_t o = 0; o < c.reactants.size(); ++o) {
        if (o == j) continue;
        auto [so, mo] = c.reactants[o];
        for (int k = 0; k < mo; ++k) dflux *= y[so];
      }
      if (dflux == 0.0) continue;
      for (const auto& [s, v] : c.net) jac[static_cast<std::size_t>(s) * un + static_cast<std::size_t>(sj)] += v * dflux;
    }
  }
}

namespace {

std::vector<double> checked_init(const Crn& crn, const std::vector<double>& init,
                                 const SolverConfig& cfg) {
  if (init.size() != crn.species.size())
    throw ContractViolation("initial state dimension does not match the species registry");
  std::vector<double> y = init;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0) {
      if (y[i] < -cfg.tol_neg)
        throw ContractViolation("negative initial concentration for " +
                                crn.species.at(static_cast<SpeciesId>(i)).name);
      y[i] = 0.0;
    }
  }
  return y;
}

}  // namespace

Trajectory simulate(const Crn& crn, const std::vector<double>& init, double duration,
                    std::optional<Gate> active_gate, const SolverConfig& cfg) {
  std::vector<double> y = checked_init(crn, init, cfg);
  MassActionOde ode(crn, {cfg.kappa_fast, active_gate});
  Trajectory traj;
  traj.times.push_back(0.0);
  traj.states.push_back(y);
  integrate_trbdf2(ode, y, duration, cfg, [&](double t, const std::vector<double>& s) {
    traj.times.push_back(t);
    traj.states.push_back(s);
  });
  return traj;
}

std::vector<double> simulate_endpoint(const Crn& crn, const std::vector<double>& init,
                                      double duration, std::optional<Gate> active_gate,
                                      const SolverConfig& cfg) {
  std::vector<double> y = checked_init(crn, init, cfg);
  MassActionOde ode(crn, {cfg.kappa_fast, active_gate});
  return integrate_trbdf2(ode, std::move(y), duration, cfg);
}

PolyOde::PolyOde(PolyOdeSystem sys) : sys_(std::move(sys)) {
  sys_.validate();
  n_ = static_cast<int>(sys_.var_count());
  eqs_.resize(static_cast<std::size_t>(n_));
  jac_.resize(static_cast<std::size_t>(n_));
  for (const auto& [v, rhs] : sys_.equations()) {
    eqs_[static_cast<std::size_t>(v)] = rhs;
    for (const auto& var : sys_.variables()) {
      auto terms = differentiate(rhs, var.id);
      if (!terms.empty()) jac_[static_cast<std::size_t>(v)].emplace_back(var.id, std::move(terms));
    }
  }
}

namespace {

double eval_terms(const std::vector<Monomial>& terms, const double* y) {
  double acc = 0.0;
  for (const Monomial& m : terms) {
    double t = m.coeff;
    for (const auto& [v, e] : m.powers)
      for (int k = 0; k < e; ++k) t *= y[v];
    acc += t;
  }
  return acc;
}

}  // namespace

void PolyOde::rhs(const double* y, double* f) const {
  for (int i = 0; i < n_; ++i) f[i] = eval_terms(eqs_[static_cast<std::size_t>(i)], y);
}

void PolyOde::jacobian(const double* y, double* jac) const {
  const std::size_t un = static_cast<std::size_t>(n_);
  for (std::size_t i = 0; i < un * un; ++i) jac[i] = 0.0;
  for (std::size_t i = 0; i < un; ++i)
    for (const auto& [j, terms] : jac_[i]) jac[i * un + static_cast<std::size_t>(j)] = eval_terms(terms, y);
}

std::string PolyOde::component_name(int i) const { return sys_.variable(i).name; }

std::vector<double> integrate_poly_rk45(const PolyOdeSystem& sys, std::vector<double> y0,
                                        double duration, double rel_tol, double abs_tol) {
  PolyOde ode(sys);
  auto rhs = [&ode](const std::vector<double>& y, std::vector<double>& dydt) {
    dydt.resize(y.size());
    ode.rhs(y.data(), dydt.data());
  };
  return integrate_rk45(rhs, std::move(y0), duration, rel_tol, abs_tol);
}

std::vector<double> integrate_poly_trbdf2(const PolyOdeSystem& sys, std::vector<double> y0,
                                          double duration, const SolverConfig& cfg) {
  PolyOde ode(sys);
  SolverConfig c = cfg;
  c.enforce_nonnegative = false;
  return integrate_trbdf2(ode, std::move(y0), duration, c);
}

std::string trajectory_to_csv(const Crn& crn, const Trajectory& traj) {
  std::ostringstream os;
  os << trajectory_csv_header(crn) << '\n';
  char buf[64];
  for (std::size_t r = 0; r < traj.rows(); ++r) {
    std::snprintf(buf, sizeof(buf), "%.12g", traj.times[r]);
    os << buf;
    for (double v : traj.states[r]) {
      std::snprintf(buf, sizeof(buf), "%.12g", std::max(v, 0.0));
      os << ',' << buf;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ncrn
