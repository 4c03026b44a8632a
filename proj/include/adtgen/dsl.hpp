#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "adtgen/errors.hpp"

namespace adtgen {

/// Structural component of a declaration body: base atoms, named references
/// and products. Collected int atoms carry a positive group index.
struct CoreType {
  enum class Kind { Int, Float, Ref, Product };

  Kind kind = Kind::Int;
  int collect_group = 0;          // > 0 only on collected Int atoms
  std::string ref;                // Kind::Ref
  std::vector<CoreType> factors;  // Kind::Product

  bool operator==(const CoreType&) const = default;

  static CoreType int_atom(int group = 0) {
    CoreType t;
    t.kind = Kind::Int;
    t.collect_group = group;
    return t;
  }
  static CoreType float_atom() {
    CoreType t;
    t.kind = Kind::Float;
    return t;
  }
  static CoreType ref_to(std::string name) {
    CoreType t;
    t.kind = Kind::Ref;
    t.ref = std::move(name);
    return t;
  }
};

struct Constructor {
  std::string name;
  std::vector<CoreType> args;  // declaration order fixes the traversal order

  bool operator==(const Constructor&) const = default;
};

enum class RelOp { Eq, Le, Ge, Lt, Gt };

/// One conjunct of a [@@satisfying ...] annotation.
struct ConstraintAtom {
  enum class Kind { AllDiff, Increasing, Decreasing, ScalarArith };

  Kind kind = Kind::Increasing;
  int group = 1;
  bool strict = false;
  // ScalarArith, normalized to: coeff * x  op  rhs
  std::int64_t coeff = 0;
  RelOp op = RelOp::Le;
  std::int64_t rhs = 0;

  bool operator==(const ConstraintAtom&) const = default;
};

struct ConstraintExpr {
  std::vector<ConstraintAtom> atoms;  // conjunction

  bool operator==(const ConstraintExpr&) const = default;
};

struct TypeDecl {
  std::string name;
  bool is_sum = false;
  std::vector<Constructor> constructors;  // is_sum
  CoreType core;                          // !is_sum
  std::optional<ConstraintExpr> constraint;

  bool operator==(const TypeDecl&) const = default;
};

struct TypeSystem {
  std::vector<TypeDecl> decls;  // declaration order
  std::unordered_map<std::string, std::size_t> index;

  const TypeDecl* find(std::string_view name) const {
    auto it = index.find(std::string(name));
    return it == index.end() ? nullptr : &decls[it->second];
  }

  bool operator==(const TypeSystem& other) const { return decls == other.decls; }
};

/// A constructor argument list flattened into atomic positions, nested
/// products expanded in declaration order.
struct Slot {
  enum class Kind { Int, Float, Ref };
  Kind kind;
  int collect_group = 0;
  std::string ref;
};

std::vector<Slot> flatten_args(const std::vector<CoreType>& args);
std::vector<Slot> flatten_core(const CoreType& core);

/// Parses declarations in the concrete syntax (see README). Throws ParseError
/// on malformed input, unknown constraint keywords and duplicate names.
TypeSystem parse_decls(std::string_view source);

/// Canonical pretty-printing; parse(print(ts)) == ts.
std::string print_decls(const TypeSystem& ts);
std::string print_constraint(const ConstraintExpr& c);

struct Diagnostic {
  std::string decl;
  std::string message;
};

/// Checks system-level invariants: declared references, well-foundedness,
/// collect-group availability, arithmetic-constraint applicability.
std::vector<Diagnostic> validate(const TypeSystem& ts);

// Queries used by the generator pipeline. All operate on the subsystem
// reachable from `root`.
std::vector<std::string> reachable_types(const TypeSystem& ts, const std::string& root);
bool is_recursive(const TypeSystem& ts, const std::string& root);
bool has_reachable_collect(const TypeSystem& ts, const std::string& root);
std::vector<int> reachable_groups(const TypeSystem& ts, const std::string& root);

/// Union of the constraint atoms of every declaration reachable from root,
/// deduplicated; these apply to the group-collected lists of a root value.
std::vector<ConstraintAtom> effective_constraints(const TypeSystem& ts,
                                                  const std::string& root);

/// True when the declaration is a bare (possibly arith-constrained) int.
bool is_scalar_decl(const TypeDecl& decl);

bool eval_arith(const ConstraintAtom& atom, std::int64_t value);

}  // namespace adtgen
