#include "adtgen/grammar.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace adtgen {

namespace {

constexpr double kDivergenceBound = 1e12;
constexpr double kConvergenceTol = 1e-12;

double eval_value(const CombExpr& e, const std::vector<double>& v, double x) {
  switch (e.kind) {
    case CombExpr::Kind::Z:
      return e.weight == 0 ? 1.0 : (e.weight == 1 ? x : std::pow(x, e.weight));
    case CombExpr::Kind::Ref:
      return v[e.ref];
    case CombExpr::Kind::Product: {
      double p = 1.0;
      for (const CombExpr& f : e.parts) p *= eval_value(f, v, x);
      return p;
    }
    case CombExpr::Kind::Union: {
      double s = 0.0;
      for (const CombExpr& b : e.parts) s += eval_value(b, v, x);
      return s;
    }
  }
  return 0.0;
}

// d/dx of the expression, given current series values v and derivatives d.
double eval_deriv(const CombExpr& e, const std::vector<double>& v,
                  const std::vector<double>& d, double x) {
  switch (e.kind) {
    case CombExpr::Kind::Z:
      if (e.weight == 0) return 0.0;
      if (e.weight == 1) return 1.0;
      return e.weight * std::pow(x, e.weight - 1);
    case CombExpr::Kind::Ref:
      return d[e.ref];
    case CombExpr::Kind::Product: {
      // product rule: sum over factors of f_j' * prod_{l != j} f_l
      const std::size_t m = e.parts.size();
      std::vector<double> vals(m);
      for (std::size_t j = 0; j < m; ++j) vals[j] = eval_value(e.parts[j], v, x);
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        double term = eval_deriv(e.parts[j], v, d, x);
        for (std::size_t l = 0; l < m; ++l)
          if (l != j) term *= vals[l];
        total += term;
      }
      return total;
    }
    case CombExpr::Kind::Union: {
      double s = 0.0;
      for (const CombExpr& b : e.parts) s += eval_deriv(b, v, d, x);
      return s;
    }
  }
  return 0.0;
}

bool out_of_range(const std::vector<double>& v) {
  for (double c : v)
    if (!std::isfinite(c) || c > kDivergenceBound) return true;
  return false;
}

}  // namespace

CombSystem build_system(const TypeSystem& ts, const std::string& root,
                        SizeSemantics semantics) {
  CombSystem sys;
  sys.semantics = semantics;
  const auto types = reachable_types(ts, root);
  const int con_weight = semantics == SizeSemantics::ConstructorCount ? 1 : 0;
  const int atom_weight = semantics == SizeSemantics::CollectCount ? 1 : 0;

  std::map<std::string, std::size_t> rule_of;
  auto reserve = [&](const std::string& name, RuleKind kind, int group) {
    rule_of[name] = sys.names.size();
    sys.names.push_back(name);
    sys.rules.emplace_back();
    sys.kinds.push_back(kind);
    sys.groups.push_back(group);
    return rule_of[name];
  };

  for (const std::string& t : types) reserve(t, RuleKind::Type, 0);
  for (const std::string& t : types) {
    const TypeDecl* decl = ts.find(t);
    if (decl && decl->is_sum)
      for (const Constructor& con : decl->constructors)
        reserve(t + "." + con.name, RuleKind::Constructor, 0);
  }
  // Atom rules, created on demand.
  std::map<int, std::size_t> collect_rule;
  std::optional<std::size_t> int_rule, float_rule;
  auto slot_rule = [&](const Slot& s) -> std::size_t {
    switch (s.kind) {
      case Slot::Kind::Ref:
        return rule_of.at(s.ref);
      case Slot::Kind::Int:
        if (s.collect_group > 0) {
          auto it = collect_rule.find(s.collect_group);
          if (it != collect_rule.end()) return it->second;
          const std::string name =
              s.collect_group == 1 ? "@collect" : "@collect " + std::to_string(s.collect_group);
          const std::size_t i = reserve(name, RuleKind::CollectAtom, s.collect_group);
          sys.rules[i] = CombExpr::z(atom_weight);
          collect_rule[s.collect_group] = i;
          return i;
        }
        if (!int_rule) {
          int_rule = reserve("int", RuleKind::IntAtom, 0);
          sys.rules[*int_rule] = CombExpr::z(0);
        }
        return *int_rule;
      case Slot::Kind::Float:
        if (!float_rule) {
          float_rule = reserve("float", RuleKind::FloatAtom, 0);
          sys.rules[*float_rule] = CombExpr::z(0);
        }
        return *float_rule;
    }
    return 0;
  };

  auto product_of_slots = [&](const std::vector<Slot>& slots) {
    if (slots.empty()) return CombExpr::z(0);
    std::vector<CombExpr> factors;
    factors.reserve(slots.size());
    for (const Slot& s : slots) factors.push_back(CombExpr::ref_to(slot_rule(s)));
    return CombExpr::product(std::move(factors));
  };

  for (const std::string& t : types) {
    const TypeDecl* decl = ts.find(t);
    if (!decl) continue;
    const std::size_t type_idx = rule_of.at(t);
    if (decl->is_sum) {
      std::vector<CombExpr> branches;
      for (const Constructor& con : decl->constructors) {
        const std::size_t con_idx = rule_of.at(t + "." + con.name);
        sys.rules[con_idx] = product_of_slots(flatten_args(con.args));
        branches.push_back(
            CombExpr::product({CombExpr::z(con_weight), CombExpr::ref_to(con_idx)}));
      }
      sys.rules[type_idx] = CombExpr::make_union(std::move(branches));
    } else {
      // An alias body acts as a single implicit constructor.
      std::vector<CombExpr> factors{CombExpr::z(con_weight)};
      for (const Slot& s : flatten_core(decl->core))
        factors.push_back(CombExpr::ref_to(slot_rule(s)));
      sys.rules[type_idx] = CombExpr::product(std::move(factors));
    }
  }

  sys.root = rule_of.at(root);
  return sys;
}

std::optional<std::vector<double>> eval_series(const CombSystem& sys, double x,
                                               long max_iterations) {
  const std::size_t n = sys.rules.size();
  std::vector<double> v(n, 0.0), next(n, 0.0);
  for (long it = 0; it < max_iterations; ++it) {
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = eval_value(sys.rules[i], v, x);
      diff = std::max(diff, std::fabs(next[i] - v[i]));
    }
    v.swap(next);
    if (out_of_range(v)) return std::nullopt;
    if (diff < kConvergenceTol) return v;
  }
  return std::nullopt;
}

std::optional<double> expected_size(const CombSystem& sys, double x,
                                    long max_iterations) {
  if (x == 0.0) return 0.0;
  auto values = eval_series(sys, x, max_iterations);
  if (!values) return std::nullopt;
  const std::size_t n = sys.rules.size();
  std::vector<double> d(n, 0.0), next(n, 0.0);
  for (long it = 0; it < max_iterations; ++it) {
    double diff = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] = eval_deriv(sys.rules[i], *values, d, x);
      diff = std::max(diff, std::fabs(next[i] - d[i]));
    }
    d.swap(next);
    if (out_of_range(d)) return std::nullopt;
    if (diff < kConvergenceTol) {
      const double a = (*values)[sys.root];
      if (a <= 0.0) return 0.0;
      return x * d[sys.root] / a;
    }
  }
  return std::nullopt;
}

double find_singularity(const CombSystem& sys) {
  // Shorter iteration budget: near the singularity, convergence slower than
  // the cap is treated as divergence, which only shifts the estimate inward.
  const long scan_iterations = 200'000;
  auto converges = [&](double x) { return eval_series(sys, x, scan_iterations).has_value(); };

  double lo = 0.0, hi = 1.0;
  while (converges(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e18) return lo;  // no singularity within reach
  }
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (converges(mid))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

TunedGrammar tune(const CombSystem& sys, long n) {
  TunedGrammar tg;
  tg.system = sys;
  tg.target = static_cast<double>(n);

  const double rho = find_singularity(sys);
  const double tol = std::max(0.5, 0.001 * static_cast<double>(n));

  // Expected size is monotone in x; nullopt near the singularity means the
  // target is exceeded there.
  auto size_at = [&](double x) {
    auto e = expected_size(sys, x);
    return e ? *e : std::numeric_limits<double>::infinity();
  };

  const double top = size_at(rho);
  if (top < static_cast<double>(n) - tol) {
    tg.untunable = true;
    tg.x = rho;
    tg.achieved = top;
  } else {
    double lo = 0.0, hi = rho;
    for (int i = 0; i < 200 && (hi - lo) > 1e-15 * std::max(1.0, hi); ++i) {
      const double mid = 0.5 * (lo + hi);
      if (size_at(mid) < static_cast<double>(n))
        lo = mid;
      else
        hi = mid;
    }
    tg.x = 0.5 * (lo + hi);
    tg.achieved = size_at(tg.x);
    if (!std::isfinite(tg.achieved)) {
      tg.x = lo;
      tg.achieved = size_at(lo);
    }
  }

  auto values = eval_series(sys, tg.x);
  if (!values) {
    // Back off just inside the convergence region.
    for (int i = 0; i < 64 && !values; ++i) {
      tg.x = std::nexttoward(tg.x * (1.0 - 1e-12), 0.0L);
      values = eval_series(sys, tg.x);
    }
    if (!values) throw InvariantError("tune: series diverge at the tuned parameter");
  }
  tg.series_values = *values;

  tg.branch_probs.resize(sys.rules.size());
  for (std::size_t i = 0; i < sys.rules.size(); ++i) {
    const CombExpr& rule = sys.rules[i];
    if (rule.kind != CombExpr::Kind::Union) continue;
    const double total = eval_value(rule, *values, tg.x);
    std::vector<double>& probs = tg.branch_probs[i];
    probs.reserve(rule.parts.size());
    for (const CombExpr& b : rule.parts) {
      const double bv = eval_value(b, *values, tg.x);
      probs.push_back(total > 0.0 ? bv / total : 1.0 / rule.parts.size());
    }
  }
  return tg;
}

std::string tuning_table(const TunedGrammar& tg) {
  const CombSystem& sys = tg.system;
  std::ostringstream out;
  out.precision(12);
  out << "# root=" << sys.names[sys.root] << " x=" << tg.x
      << " semantics=" << (sys.semantics == SizeSemantics::CollectCount ? "collect" : "constructor")
      << " expected_size=" << tg.achieved << (tg.untunable ? " (untunable)" : "") << "\n";
  for (std::size_t i = 0; i < sys.rules.size(); ++i) {
    const CombExpr& rule = sys.rules[i];
    out << sys.names[i] << " = ";
    switch (rule.kind) {
      case CombExpr::Kind::Union: {
        out << "Union [";
        for (std::size_t b = 0; b < rule.parts.size(); ++b) {
          if (b > 0) out << "; ";
          const CombExpr& branch = rule.parts[b];
          std::size_t target = i;
          for (const CombExpr& f : branch.parts)
            if (f.kind == CombExpr::Kind::Ref) target = f.ref;
          out << "(" << tg.branch_probs[i][b] << ", " << sys.names[target] << ")";
        }
        out << "]";
        break;
      }
      case CombExpr::Kind::Product: {
        out << "Product [";
        bool first = true;
        for (const CombExpr& f : rule.parts) {
          if (!first) out << "; ";
          first = false;
          if (f.kind == CombExpr::Kind::Ref)
            out << "Ref " << sys.names[f.ref];
          else
            out << "Z " << f.weight;
        }
        out << "]";
        break;
      }
      case CombExpr::Kind::Z:
        out << "Z " << rule.weight;
        break;
      case CombExpr::Kind::Ref:
        out << "Ref " << sys.names[rule.ref];
        break;
    }
    out << "   value=" << tg.series_values[i] << "\n";
  }
  return out.str();
}

}  // namespace adtgen
