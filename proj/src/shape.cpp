#include "adtgen/shape.hpp"

#include <algorithm>
#include <cctype>

#include "adtgen/errors.hpp"

namespace adtgen {

namespace {

std::string constructor_label(const std::string& rule_name) {
  const auto dot = rule_name.find('.');
  return dot == std::string::npos ? rule_name : rule_name.substr(dot + 1);
}

struct Attempt {
  long size = 0;
  bool aborted = false;
};

// One top-down generation attempt; returns false when the running size
// exceeded the upper bound and the attempt was cut short.
bool generate_once(const TunedGrammar& tg, std::size_t root_rule, long upper,
                   RandomStream& rng, const BranchBias& bias, ShapeTree& out,
                   long& size) {
  const CombSystem& sys = tg.system;
  struct Task {
    ShapeTree* dest;
    std::size_t rule;
    int depth;
  };
  std::vector<Task> stack{{&out, root_rule, 0}};
  size = 0;

  auto add_weight = [&](int w) {
    size += w;
    return size <= upper;
  };

  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    const CombExpr& rule = sys.rules[task.rule];
    switch (sys.kinds[task.rule]) {
      case RuleKind::CollectAtom:
        task.dest->kind = ShapeTree::Kind::Collect;
        task.dest->group = sys.groups[task.rule];
        if (!add_weight(rule.weight)) return false;
        break;
      case RuleKind::IntAtom:
        task.dest->kind = ShapeTree::Kind::IntAtom;
        break;
      case RuleKind::FloatAtom:
        task.dest->kind = ShapeTree::Kind::FloatAtom;
        break;
      case RuleKind::Type: {
        std::size_t body_rule = task.rule;
        if (rule.kind == CombExpr::Kind::Union) {
          const std::vector<double>& probs = tg.branch_probs[task.rule];
          std::size_t chosen = probs.size() - 1;
          if (bias) {
            std::vector<double> w(probs.size());
            double total = 0.0;
            for (std::size_t b = 0; b < probs.size(); ++b)
              total += w[b] = bias(task.rule, b, task.depth, probs[b]);
            double r = rng.next_real() * total;
            for (std::size_t b = 0; b < probs.size(); ++b)
              if ((r -= w[b]) < 0.0) {
                chosen = b;
                break;
              }
          } else {
            double r = rng.next_real();
            for (std::size_t b = 0; b < probs.size(); ++b)
              if ((r -= probs[b]) < 0.0) {
                chosen = b;
                break;
              }
          }
          // branch = Product [Z weight; Ref constructor-rule]
          const CombExpr& branch = rule.parts[chosen];
          for (const CombExpr& f : branch.parts) {
            if (f.kind == CombExpr::Kind::Z && !add_weight(f.weight)) return false;
            if (f.kind == CombExpr::Kind::Ref) body_rule = f.ref;
          }
          stack.push_back({task.dest, body_rule, task.depth});
          break;
        }
        // Alias body: Product [Z weight; slot refs...]
        task.dest->kind = ShapeTree::Kind::Con;
        task.dest->con = sys.names[task.rule];
        std::vector<std::size_t> slots;
        for (const CombExpr& f : rule.parts) {
          if (f.kind == CombExpr::Kind::Z && !add_weight(f.weight)) return false;
          if (f.kind == CombExpr::Kind::Ref) slots.push_back(f.ref);
        }
        task.dest->children.resize(slots.size());
        for (std::size_t i = slots.size(); i-- > 0;)
          stack.push_back({&task.dest->children[i], slots[i], task.depth + 1});
        break;
      }
      case RuleKind::Constructor: {
        task.dest->kind = ShapeTree::Kind::Con;
        task.dest->con = constructor_label(sys.names[task.rule]);
        if (rule.kind == CombExpr::Kind::Product) {
          std::vector<std::size_t> slots;
          for (const CombExpr& f : rule.parts)
            if (f.kind == CombExpr::Kind::Ref) slots.push_back(f.ref);
          task.dest->children.resize(slots.size());
          for (std::size_t i = slots.size(); i-- > 0;)
            stack.push_back({&task.dest->children[i], slots[i], task.depth + 1});
        }
        break;
      }
    }
  }
  return true;
}

}  // namespace

long default_eps(long n) { return std::max(1L, (n + 9) / 10); }

ShapeResult sample_shape(const TunedGrammar& tg, const std::string& root,
                         const SizeWindow& window, RandomStream& rng,
                         int max_attempts, const BranchBias& bias) {
  if (window.n < 1 || window.eps < 0)
    throw InvariantError("sample_shape: window requires n >= 1 and eps >= 0");
  const auto root_rule = tg.system.index_of(root);
  if (!root_rule) throw InvariantError("sample_shape: unknown rule '" + root + "'");
  const long lower = window.n - window.eps;
  const long upper = window.n + window.eps;

  ShapeResult result;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    ShapeTree shape;
    long size = 0;
    const bool completed = generate_once(tg, *root_rule, upper, rng, bias, shape, size);
    result.total_work += static_cast<std::uint64_t>(size);
    if (completed && size >= lower) {
      if (size > upper) throw InvariantError("sample_shape: accepted size above the window");
      result.shape = std::move(shape);
      result.size = size;
      result.attempts = attempt;
      return result;
    }
  }
  result.attempts = max_attempts;
  return result;
}

long count_collect(const ShapeTree& shape, int group) {
  long count = 0;
  std::vector<const ShapeTree*> stack{&shape};
  while (!stack.empty()) {
    const ShapeTree* node = stack.back();
    stack.pop_back();
    if (node->kind == ShapeTree::Kind::Collect && node->group == group) ++count;
    for (const ShapeTree& c : node->children) stack.push_back(&c);
  }
  return count;
}

std::map<int, long> collect_counts(const ShapeTree& shape) {
  std::map<int, long> counts;
  std::vector<const ShapeTree*> stack{&shape};
  while (!stack.empty()) {
    const ShapeTree* node = stack.back();
    stack.pop_back();
    if (node->kind == ShapeTree::Kind::Collect) ++counts[node->group];
    for (const ShapeTree& c : node->children) stack.push_back(&c);
  }
  return counts;
}

std::string shape_to_sexpr(const ShapeTree& shape) {
  std::string out;
  struct Item {
    const ShapeTree* node;
    bool close;
  };
  std::vector<Item> stack{{&shape, false}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    if (item.close) {
      out += ')';
      continue;
    }
    if (!out.empty() && out.back() != '(') out += ' ';
    out += '(';
    switch (item.node->kind) {
      case ShapeTree::Kind::Con: out += item.node->con; break;
      case ShapeTree::Kind::Collect: out += "@collect " + std::to_string(item.node->group); break;
      case ShapeTree::Kind::IntAtom: out += "int"; break;
      case ShapeTree::Kind::FloatAtom: out += "float"; break;
    }
    stack.push_back({item.node, true});
    for (std::size_t i = item.node->children.size(); i-- > 0;)
      stack.push_back({&item.node->children[i], false});
  }
  return out;
}

ShapeTree shape_from_sexpr(std::string_view text) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  };
  auto token = [&]() -> std::string {
    skip_ws();
    std::string t;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
           text[pos] != '(' && text[pos] != ')')
      t.push_back(text[pos++]);
    return t;
  };

  std::vector<ShapeTree> stack;
  std::optional<ShapeTree> done;
  while (true) {
    skip_ws();
    if (pos >= text.size()) break;
    if (text[pos] == '(') {
      ++pos;
      ShapeTree node;
      const std::string label = token();
      if (label == "@collect") {
        node.kind = ShapeTree::Kind::Collect;
        node.group = std::stoi(token());
      } else if (label == "int") {
        node.kind = ShapeTree::Kind::IntAtom;
      } else if (label == "float") {
        node.kind = ShapeTree::Kind::FloatAtom;
      } else if (!label.empty()) {
        node.kind = ShapeTree::Kind::Con;
        node.con = label;
      } else {
        throw ParseError("empty shape label", 1, static_cast<int>(pos));
      }
      stack.push_back(std::move(node));
    } else if (text[pos] == ')') {
      ++pos;
      if (stack.empty()) throw ParseError("unbalanced ')'", 1, static_cast<int>(pos));
      ShapeTree node = std::move(stack.back());
      stack.pop_back();
      if (stack.empty()) {
        if (done) throw ParseError("trailing content after shape", 1, static_cast<int>(pos));
        done = std::move(node);
      } else {
        stack.back().children.push_back(std::move(node));
      }
    } else {
      throw ParseError("unexpected character in shape", 1, static_cast<int>(pos));
    }
  }
  if (!done || !stack.empty())
    throw ParseError("unterminated shape", 1, static_cast<int>(pos));
  return std::move(*done);
}

}  // namespace adtgen
