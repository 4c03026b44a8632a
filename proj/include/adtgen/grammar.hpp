#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "adtgen/dsl.hpp"

namespace adtgen {

/// What counts toward the size of an object: its collected atoms, or its
/// constructor applications. Collected atoms are the default; unconstrained
/// types fall back to constructor counting so tuning stays meaningful.
enum class SizeSemantics { CollectCount, ConstructorCount };

struct CombExpr {
  enum class Kind { Union, Product, Z, Ref };
  Kind kind = Kind::Z;
  int weight = 0;               // Z(weight) = z^weight
  std::size_t ref = 0;          // Kind::Ref
  std::vector<CombExpr> parts;  // Union branches / Product factors

  static CombExpr z(int w) {
    CombExpr e;
    e.kind = Kind::Z;
    e.weight = w;
    return e;
  }
  static CombExpr ref_to(std::size_t i) {
    CombExpr e;
    e.kind = Kind::Ref;
    e.ref = i;
    return e;
  }
  static CombExpr product(std::vector<CombExpr> factors) {
    CombExpr e;
    e.kind = Kind::Product;
    e.parts = std::move(factors);
    return e;
  }
  static CombExpr make_union(std::vector<CombExpr> branches) {
    CombExpr e;
    e.kind = Kind::Union;
    e.parts = std::move(branches);
    return e;
  }
};

enum class RuleKind { Type, Constructor, CollectAtom, IntAtom, FloatAtom };

/// Combinatorial system over indexed rules: one rule per reachable type,
/// one per constructor, one per atom kind.
struct CombSystem {
  std::vector<std::string> names;
  std::vector<CombExpr> rules;
  std::vector<RuleKind> kinds;
  std::vector<int> groups;  // collect group per rule, 0 elsewhere
  std::size_t root = 0;
  SizeSemantics semantics = SizeSemantics::CollectCount;

  std::optional<std::size_t> index_of(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return i;
    return std::nullopt;
  }
};

/// Builds the weighted system for the subsystem reachable from `root`.
/// Under CollectCount every collect atom contributes z and everything else
/// contributes z^0; under ConstructorCount every constructor application
/// contributes z instead.
CombSystem build_system(const TypeSystem& ts, const std::string& root,
                        SizeSemantics semantics = SizeSemantics::CollectCount);

/// Least fixed point of the system equations at x, by iteration from 0 until
/// successive iterates differ by < 1e-12 componentwise. nullopt = divergent
/// (iterates exceeded 1e12 or the iteration cap was hit), which happens
/// exactly at and beyond the dominant singularity.
std::optional<std::vector<double>> eval_series(const CombSystem& sys, double x,
                                               long max_iterations = 2'000'000);

/// Expected object size x * A'(x) / A(x) for the root series, with the
/// derivative evaluated by the differentiated fixed-point system.
std::optional<double> expected_size(const CombSystem& sys, double x,
                                    long max_iterations = 2'000'000);

/// Largest parameter at which eval_series still converges, located by
/// exponential search then bisection on convergence.
double find_singularity(const CombSystem& sys);

struct TunedGrammar {
  CombSystem system;
  double x = 0.0;
  double target = 0.0;
  double achieved = 0.0;  // expected size at x
  bool untunable = false; // expected size saturates below the target
  std::vector<double> series_values;               // per rule
  std::vector<std::vector<double>> branch_probs;   // per rule; empty unless Union
};

/// Finds x with expected size within max(0.5, 0.001*n) of n by bisection
/// below the singularity, then freezes branch probabilities
/// value(branch at x) / value(rule at x).
TunedGrammar tune(const CombSystem& sys, long n);

/// Debug table: per-rule series values and branch probabilities.
std::string tuning_table(const TunedGrammar& tg);

}  // namespace adtgen
