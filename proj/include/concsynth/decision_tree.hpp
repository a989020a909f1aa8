#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/bigint.hpp"
#include "concsynth/eval.hpp"
#include "concsynth/linexpr.hpp"

namespace concsynth {

// Decision-tree normal form: a full binary tree of height h stored in heap
// layout (children of i at 2i+1 and 2i+2). Every node carries an affine
// expression over the arguments; internal nodes test expr >= 0, leaves
// return the expression's value (or, for predicates, its >= 0 test).
struct DecisionTree {
  std::size_t height = 1;
  std::size_t dim = 0;
  bool bool_valued = false;
  std::vector<LinExpr> nodes;

  static std::size_t node_count(std::size_t height) {
    return ((std::size_t)1 << height) - 1;
  }

  // Index of the first leaf; nodes below it are internal.
  std::size_t leaf_start() const {
    return ((std::size_t)1 << (height - 1)) - 1;
  }

  bool is_leaf(std::size_t i) const { return i >= leaf_start(); }

  static DecisionTree zero(std::size_t height, std::size_t dim,
                           bool bool_valued = false) {
    DecisionTree t;
    t.height = height;
    t.dim = dim;
    t.bool_valued = bool_valued;
    t.nodes.assign(node_count(height), LinExpr(dim));
    return t;
  }
};

inline Int eval_tree(const DecisionTree& t, const Valuation& args) {
  std::size_t i = 0;
  while (!t.is_leaf(i)) i = t.nodes[i].eval(args) >= 0 ? 2 * i + 1 : 2 * i + 2;
  Int v = t.nodes[i].eval(args);
  if (t.bool_valued) return v >= 0 ? 1 : 0;
  return v;
}

namespace detail {
inline TermPtr tree_to_term_at(const DecisionTree& t, std::size_t i) {
  if (t.is_leaf(i)) return linexpr_to_term(t.nodes[i]);
  return mk_term_ite(mk_geq(linexpr_to_term(t.nodes[i]), mk_const(Int(0))),
                     tree_to_term_at(t, 2 * i + 1),
                     tree_to_term_at(t, 2 * i + 2));
}

inline CondPtr tree_to_cond_at(const DecisionTree& t, std::size_t i) {
  CondPtr leaf_or_test = mk_geq(linexpr_to_term(t.nodes[i]), mk_const(Int(0)));
  if (t.is_leaf(i)) return leaf_or_test;
  return mk_cond_ite(leaf_or_test, tree_to_cond_at(t, 2 * i + 1),
                     tree_to_cond_at(t, 2 * i + 2));
}
}  // namespace detail

inline TermPtr tree_to_term(const DecisionTree& t) {
  if (t.bool_valued)
    throw std::invalid_argument("tree is predicate-valued; use tree_to_cond");
  return detail::tree_to_term_at(t, 0);
}

inline CondPtr tree_to_cond(const DecisionTree& t) {
  if (!t.bool_valued)
    throw std::invalid_argument("tree is term-valued; use tree_to_term");
  return detail::tree_to_cond_at(t, 0);
}

// Embeds a tree into a taller one. New internal levels test the tautology
// 1 >= 0, keeping the original subtree in the true child and a zero leaf
// elsewhere, so the embedded tree computes the same function.
inline DecisionTree pad_tree(const DecisionTree& t, std::size_t height) {
  if (height < t.height)
    throw std::invalid_argument("cannot pad to a smaller height");
  if (height == t.height) return t;
  DecisionTree out = DecisionTree::zero(height, t.dim, t.bool_valued);
  // Walk both trees in step; positions below the source's leaves keep the
  // tautology guard with the leaf payload pushed down the true spine.
  struct Walk {
    const DecisionTree& src;
    DecisionTree& dst;
    void at(std::size_t si, std::size_t di) {
      if (!src.is_leaf(si)) {
        dst.nodes[di] = src.nodes[si];
        at(2 * si + 1, 2 * di + 1);
        at(2 * si + 2, 2 * di + 2);
        return;
      }
      std::size_t pos = di;
      while (!dst.is_leaf(pos)) {
        dst.nodes[pos] = LinExpr::constant(src.dim, Int(1));
        pos = 2 * pos + 1;
      }
      dst.nodes[pos] = src.nodes[si];
    }
  } w{t, out};
  w.at(0, 0);
  return out;
}

}  // namespace concsynth
