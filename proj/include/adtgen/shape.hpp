#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "adtgen/grammar.hpp"
#include "adtgen/rng.hpp"

namespace adtgen {

/// Constructor-labeled tree with unfilled atom positions.
struct ShapeTree {
  enum class Kind { Con, Collect, IntAtom, FloatAtom };
  Kind kind = Kind::Con;
  std::string con;          // constructor (or alias type) name
  int group = 0;            // Kind::Collect
  std::vector<ShapeTree> children;
};

struct SizeWindow {
  long n = 1;
  long eps = 0;  // accepted sizes are [n - eps, n + eps]
};

/// Default tolerance: 10% of the target, at least 1.
long default_eps(long n);

struct ShapeResult {
  std::optional<ShapeTree> shape;  // nullopt = attempts exhausted
  long size = 0;                   // weighted-atom count of the accepted shape
  int attempts = 0;                // attempts consumed (accepted one included)
  std::uint64_t total_work = 0;    // cumulative size generated across attempts
};

/// Test hook: adjusts the weight of a union branch before normalization.
using BranchBias =
    std::function<double(std::size_t rule, std::size_t branch, int depth, double prob)>;

/// Samples a shape whose size falls within the window. Each attempt draws
/// top-down from the tuned branch probabilities and aborts as soon as the
/// running size exceeds n + eps; undersized completed attempts are rejected.
/// Uses an explicit work stack, so very large shapes cannot overflow the
/// call stack.
ShapeResult sample_shape(const TunedGrammar& tg, const std::string& root,
                         const SizeWindow& window, RandomStream& rng,
                         int max_attempts = 10'000, const BranchBias& bias = nullptr);

/// Number of collect-atom leaves of the given group.
long count_collect(const ShapeTree& shape, int group);

/// Collect-atom counts for every group present.
std::map<int, long> collect_counts(const ShapeTree& shape);

/// S-expression form, e.g. (Node (Leaf) (@collect 1) (Leaf)).
std::string shape_to_sexpr(const ShapeTree& shape);
ShapeTree shape_from_sexpr(std::string_view text);

}  // namespace adtgen
