#pragma once

#include <stdexcept>
#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/formula.hpp"

namespace concsynth {

// Normal forms over the surface condition AST. Applications are treated as
// opaque literals (they may appear under a single negation); ite conditions
// are desugared. A clause cap guards against exponential blowup.
inline constexpr std::size_t kClauseCap = 4096;

inline CondPtr cond_nnf(const CondPtr& c, bool negate = false) {
  switch (c->kind) {
    case Cond::Kind::True:
      return negate ? mk_false() : mk_true();
    case Cond::Kind::False:
      return negate ? mk_true() : mk_false();
    case Cond::Kind::Geq:
      if (!negate) return c;
      return mk_geq(c->t2, mk_add(c->t1, mk_const(Int(1))));
    case Cond::Kind::And: {
      CondPtr a = cond_nnf(c->c1, negate);
      CondPtr b = cond_nnf(c->c2, negate);
      return negate ? mk_or(a, b) : mk_and(a, b);
    }
    case Cond::Kind::Or: {
      CondPtr a = cond_nnf(c->c1, negate);
      CondPtr b = cond_nnf(c->c2, negate);
      return negate ? mk_and(a, b) : mk_or(a, b);
    }
    case Cond::Kind::Not:
      return cond_nnf(c->c1, !negate);
    case Cond::Kind::Ite: {
      CondPtr g = cond_nnf(c->c1);
      CondPtr ng = cond_nnf(c->c1, true);
      CondPtr a = cond_nnf(c->c2, negate);
      CondPtr b = cond_nnf(c->c3, negate);
      return mk_or(mk_and(g, a), mk_and(ng, b));
    }
    case Cond::Kind::AppB:
      return negate ? mk_not(c) : c;
  }
  throw std::logic_error("unreachable");
}

namespace detail {

// Clause lists for an NNF'd condition. `conjunctive` selects CNF (clauses
// of disjuncts) over DNF (cubes of conjuncts); the two only differ in which
// connective distributes.
inline std::vector<std::vector<CondPtr>> clauses_of(const CondPtr& c,
                                                    bool conjunctive,
                                                    std::size_t cap) {
  switch (c->kind) {
    case Cond::Kind::True:
      return conjunctive ? std::vector<std::vector<CondPtr>>{}
                         : std::vector<std::vector<CondPtr>>{{}};
    case Cond::Kind::False:
      return conjunctive ? std::vector<std::vector<CondPtr>>{{}}
                         : std::vector<std::vector<CondPtr>>{};
    case Cond::Kind::Geq:
    case Cond::Kind::AppB:
    case Cond::Kind::Not:
      return {{c}};
    case Cond::Kind::And:
    case Cond::Kind::Or: {
      bool gather = (c->kind == Cond::Kind::And) == conjunctive;
      auto a = clauses_of(c->c1, conjunctive, cap);
      auto b = clauses_of(c->c2, conjunctive, cap);
      if (gather) {
        a.insert(a.end(), b.begin(), b.end());
        if (a.size() > cap) throw SizeLimitExceeded("clause cap exceeded");
        return a;
      }
      std::vector<std::vector<CondPtr>> out;
      for (const auto& x : a)
        for (const auto& y : b) {
          std::vector<CondPtr> merged = x;
          merged.insert(merged.end(), y.begin(), y.end());
          out.push_back(std::move(merged));
          if (out.size() > cap) throw SizeLimitExceeded("clause cap exceeded");
        }
      return out;
    }
    case Cond::Kind::Ite:
      throw std::logic_error("NNF removes condition ite");
  }
  throw std::logic_error("unreachable");
}

inline CondPtr join(const std::vector<CondPtr>& lits, bool conjunctive) {
  if (lits.empty()) return conjunctive ? mk_true() : mk_false();
  CondPtr acc = lits[0];
  for (std::size_t i = 1; i < lits.size(); ++i)
    acc = conjunctive ? mk_and(acc, lits[i]) : mk_or(acc, lits[i]);
  return acc;
}

}  // namespace detail

inline std::vector<std::vector<CondPtr>> dnf_cubes(
    const CondPtr& c, std::size_t cap = kClauseCap) {
  return detail::clauses_of(cond_nnf(c), false, cap);
}

inline std::vector<std::vector<CondPtr>> cnf_clauses(
    const CondPtr& c, std::size_t cap = kClauseCap) {
  return detail::clauses_of(cond_nnf(c), true, cap);
}

inline CondPtr to_nnf(const CondPtr& c) { return cond_nnf(c); }

inline CondPtr to_dnf(const CondPtr& c, std::size_t cap = kClauseCap) {
  auto cubes = dnf_cubes(c, cap);
  std::vector<CondPtr> ds;
  ds.reserve(cubes.size());
  for (const auto& cube : cubes) ds.push_back(detail::join(cube, true));
  return detail::join(ds, false);
}

inline CondPtr to_cnf(const CondPtr& c, std::size_t cap = kClauseCap) {
  auto cls = cnf_clauses(c, cap);
  std::vector<CondPtr> cs;
  cs.reserve(cls.size());
  for (const auto& clause : cls) cs.push_back(detail::join(clause, false));
  return detail::join(cs, true);
}

}  // namespace concsynth
