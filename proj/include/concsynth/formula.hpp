#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/bigint.hpp"
#include "concsynth/eval.hpp"
#include "concsynth/linexpr.hpp"

namespace concsynth {

// Extended CLIA condition in linear-atom form: a boolean combination of
// lin >= 0 atoms and modulo assertions lin mod m = r (m >= 2, 0 <= r < m).
// This is the shape quantifier elimination produces and the invariant
// engine computes with; the surface Cond AST is lowered into it once
// applications are gone.
struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  enum class Kind { True, False, Geq, ModEq, And, Or, Not };

  Kind kind;
  LinExpr lin;  // Geq: lin >= 0; ModEq: lin mod m = r
  Int m, r;
  std::vector<FormulaPtr> kids;
};

struct SizeLimitExceeded : std::runtime_error {
  explicit SizeLimitExceeded(const std::string& what)
      : std::runtime_error(what) {}
};

inline FormulaPtr f_true() {
  static const FormulaPtr t = [] {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::True;
    return f;
  }();
  return t;
}

inline FormulaPtr f_false() {
  static const FormulaPtr t = [] {
    auto f = std::make_shared<Formula>();
    f->kind = Formula::Kind::False;
    return f;
  }();
  return t;
}

inline bool is_true(const FormulaPtr& f) { return f->kind == Formula::Kind::True; }
inline bool is_false(const FormulaPtr& f) { return f->kind == Formula::Kind::False; }

// Canonical inequality atom: coefficients divided through by their gcd
// (floor-adjusting the offset), constant atoms folded to true/false.
inline FormulaPtr f_geq(LinExpr e) {
  if (e.is_constant()) return e.offset >= 0 ? f_true() : f_false();
  Int g(0);
  for (const auto& c : e.coeffs) g = int_gcd(g, c);
  if (g > 1) {
    for (auto& c : e.coeffs) c /= g;
    e.offset = floor_div(e.offset, g);
  }
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Geq;
  f->lin = std::move(e);
  return f;
}

// Canonical modulo atom: offset folded into the residue, coefficients
// reduced into [0, m), gcd of coefficients and modulus divided out.
inline FormulaPtr f_modeq(LinExpr e, Int m, Int r) {
  if (m <= 0) throw std::logic_error("modulus must be positive");
  r = floor_mod(r - e.offset, m);
  e.offset = 0;
  Int g = m;
  for (const auto& c : e.coeffs) g = int_gcd(g, c);
  if (g > 1) {
    if (floor_mod(r, g) != 0) return f_false();
    for (auto& c : e.coeffs) c /= g;
    m /= g;
    r /= g;
  }
  if (m == 1) return f_true();
  for (auto& c : e.coeffs) c = floor_mod(c, m);
  if (e.is_constant()) return r == 0 ? f_true() : f_false();
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::ModEq;
  f->lin = std::move(e);
  f->m = std::move(m);
  f->r = std::move(r);
  return f;
}

inline FormulaPtr f_not(FormulaPtr a) {
  if (is_true(a)) return f_false();
  if (is_false(a)) return f_true();
  if (a->kind == Formula::Kind::Not) return a->kids[0];
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Not;
  f->kids.push_back(std::move(a));
  return f;
}

inline FormulaPtr f_and(std::vector<FormulaPtr> kids) {
  std::vector<FormulaPtr> flat;
  for (auto& k : kids) {
    if (is_false(k)) return f_false();
    if (is_true(k)) continue;
    if (k->kind == Formula::Kind::And)
      flat.insert(flat.end(), k->kids.begin(), k->kids.end());
    else
      flat.push_back(std::move(k));
  }
  if (flat.empty()) return f_true();
  if (flat.size() == 1) return flat[0];
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::And;
  f->kids = std::move(flat);
  return f;
}

inline FormulaPtr f_or(std::vector<FormulaPtr> kids) {
  std::vector<FormulaPtr> flat;
  for (auto& k : kids) {
    if (is_true(k)) return f_true();
    if (is_false(k)) continue;
    if (k->kind == Formula::Kind::Or)
      flat.insert(flat.end(), k->kids.begin(), k->kids.end());
    else
      flat.push_back(std::move(k));
  }
  if (flat.empty()) return f_false();
  if (flat.size() == 1) return flat[0];
  auto f = std::make_shared<Formula>();
  f->kind = Formula::Kind::Or;
  f->kids = std::move(flat);
  return f;
}

inline FormulaPtr f_and2(FormulaPtr a, FormulaPtr b) {
  std::vector<FormulaPtr> v{std::move(a), std::move(b)};
  return f_and(std::move(v));
}

inline FormulaPtr f_or2(FormulaPtr a, FormulaPtr b) {
  std::vector<FormulaPtr> v{std::move(a), std::move(b)};
  return f_or(std::move(v));
}

inline FormulaPtr f_implies(FormulaPtr a, FormulaPtr b) {
  return f_or2(f_not(std::move(a)), std::move(b));
}

inline bool formula_eval(const FormulaPtr& f, const Valuation& v) {
  switch (f->kind) {
    case Formula::Kind::True:
      return true;
    case Formula::Kind::False:
      return false;
    case Formula::Kind::Geq:
      return f->lin.eval(v) >= 0;
    case Formula::Kind::ModEq:
      return floor_mod(f->lin.eval(v), f->m) == f->r;
    case Formula::Kind::And:
      for (const auto& k : f->kids)
        if (!formula_eval(k, v)) return false;
      return true;
    case Formula::Kind::Or:
      for (const auto& k : f->kids)
        if (formula_eval(k, v)) return true;
      return false;
    case Formula::Kind::Not:
      return !formula_eval(f->kids[0], v);
  }
  throw std::logic_error("unreachable");
}

inline std::size_t formula_size(const FormulaPtr& f) {
  std::size_t n = 1;
  for (const auto& k : f->kids) n += formula_size(k);
  return n;
}

inline std::size_t formula_hash(const FormulaPtr& f) {
  std::size_t h = (std::size_t)f->kind * 0x100000001b3ull;
  switch (f->kind) {
    case Formula::Kind::Geq:
      hash_combine(h, linexpr_hash(f->lin));
      break;
    case Formula::Kind::ModEq:
      hash_combine(h, linexpr_hash(f->lin));
      hash_combine(h, int_hash(f->m));
      hash_combine(h, int_hash(f->r));
      break;
    default:
      for (const auto& k : f->kids) hash_combine(h, formula_hash(k));
  }
  return h;
}

inline bool formula_eq(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return true;
    case Formula::Kind::Geq:
      return a->lin == b->lin;
    case Formula::Kind::ModEq:
      return a->m == b->m && a->r == b->r && a->lin == b->lin;
    default:
      if (a->kids.size() != b->kids.size()) return false;
      for (std::size_t i = 0; i < a->kids.size(); ++i)
        if (!formula_eq(a->kids[i], b->kids[i])) return false;
      return true;
  }
}

// Negation normal form. Negated inequalities fold into the atom
// (not (e >= 0)  ==  -e - 1 >= 0); negated modulo atoms expand into the
// disjunction of the other residues, so the result carries no Not nodes.
inline FormulaPtr to_nnf(const FormulaPtr& f, bool negate = false) {
  switch (f->kind) {
    case Formula::Kind::True:
      return negate ? f_false() : f_true();
    case Formula::Kind::False:
      return negate ? f_true() : f_false();
    case Formula::Kind::Geq: {
      if (!negate) return f;
      LinExpr e = f->lin;
      e *= Int(-1);
      e.offset -= 1;
      return f_geq(std::move(e));
    }
    case Formula::Kind::ModEq: {
      if (!negate) return f;
      std::vector<FormulaPtr> others;
      for (Int rr(0); rr < f->m; ++rr)
        if (rr != f->r) others.push_back(f_modeq(f->lin, f->m, rr));
      return f_or(std::move(others));
    }
    case Formula::Kind::Not:
      return to_nnf(f->kids[0], !negate);
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids) kids.push_back(to_nnf(k, negate));
      bool is_and = (f->kind == Formula::Kind::And) != negate;
      return is_and ? f_and(std::move(kids)) : f_or(std::move(kids));
    }
  }
  throw std::logic_error("unreachable");
}

// Structural simplification: flatten, drop duplicate children, detect a
// child alongside its complement. Atoms are already canonical so the
// complement of (e >= 0) is exactly (-e-1 >= 0) after f_geq.
inline FormulaPtr simplify(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
    case Formula::Kind::Geq:
    case Formula::Kind::ModEq:
      return f;
    case Formula::Kind::Not:
      return f_not(simplify(f->kids[0]));
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids) kids.push_back(simplify(k));
      FormulaPtr joined = f->kind == Formula::Kind::And ? f_and(std::move(kids))
                                                        : f_or(std::move(kids));
      if (joined->kind != Formula::Kind::And &&
          joined->kind != Formula::Kind::Or)
        return joined;
      std::vector<FormulaPtr> uniq;
      std::unordered_map<std::size_t, std::vector<FormulaPtr>> seen;
      auto contains = [&seen](const FormulaPtr& g) {
        auto it = seen.find(formula_hash(g));
        if (it == seen.end()) return false;
        for (const auto& h : it->second)
          if (formula_eq(g, h)) return true;
        return false;
      };
      bool conflict = false;
      for (const auto& k : joined->kids) {
        if (contains(k)) continue;
        FormulaPtr neg = to_nnf(k, true);
        if ((neg->kind == Formula::Kind::Geq ||
             neg->kind == Formula::Kind::ModEq) &&
            contains(neg)) {
          conflict = true;
          break;
        }
        seen[formula_hash(k)].push_back(k);
        uniq.push_back(k);
      }
      if (joined->kind == Formula::Kind::And)
        return conflict ? f_false() : f_and(std::move(uniq));
      return conflict ? f_true() : f_or(std::move(uniq));
    }
  }
  throw std::logic_error("unreachable");
}

// Substitutes x := x + delta. Shift entries may be linear over (constant)
// variables; a single shift keeps every atom linear.
inline FormulaPtr formula_shift(const FormulaPtr& f,
                                const std::vector<LinExpr>& delta) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return f;
    case Formula::Kind::Geq:
    case Formula::Kind::ModEq: {
      LinExpr e = f->lin;
      LinExpr extra((std::size_t)0);
      for (std::size_t i = 0; i < e.coeffs.size() && i < delta.size(); ++i)
        if (e.coeffs[i] != 0) extra += e.coeffs[i] * delta[i];
      e += extra;
      if (f->kind == Formula::Kind::Geq) return f_geq(std::move(e));
      return f_modeq(std::move(e), f->m, f->r);
    }
    default: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids) kids.push_back(formula_shift(k, delta));
      if (f->kind == Formula::Kind::And) return f_and(std::move(kids));
      if (f->kind == Formula::Kind::Or) return f_or(std::move(kids));
      return f_not(kids[0]);
    }
  }
}

// Substitutes a single variable by a linear expression.
inline FormulaPtr formula_subst_var(const FormulaPtr& f, std::size_t idx,
                                    const LinExpr& repl) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return f;
    case Formula::Kind::Geq:
    case Formula::Kind::ModEq: {
      LinExpr e = f->lin;
      if (idx >= e.coeffs.size() || e.coeffs[idx] == 0) {
        if (f->kind == Formula::Kind::Geq) return f;
        return f;
      }
      Int a = e.coeffs[idx];
      e.coeffs[idx] = 0;
      e += a * repl;
      if (f->kind == Formula::Kind::Geq) return f_geq(std::move(e));
      return f_modeq(std::move(e), f->m, f->r);
    }
    default: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids)
        kids.push_back(formula_subst_var(k, idx, repl));
      if (f->kind == Formula::Kind::And) return f_and(std::move(kids));
      if (f->kind == Formula::Kind::Or) return f_or(std::move(kids));
      return f_not(kids[0]);
    }
  }
}

inline bool formula_mentions(const FormulaPtr& f, std::size_t idx) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return false;
    case Formula::Kind::Geq:
    case Formula::Kind::ModEq:
      return idx < f->lin.coeffs.size() && f->lin.coeffs[idx] != 0;
    default:
      for (const auto& k : f->kids)
        if (formula_mentions(k, idx)) return true;
      return false;
  }
}

// -------- lowering the surface AST --------

// Splits a term with embedded ite into disjoint (guard, linear value)
// cases. Shared subterms are lowered once via the memo, so chained ite
// solutions do not blow up quadratically.
struct TermCases {
  std::vector<std::pair<FormulaPtr, LinExpr>> cases;
};

class CondLowering {
 public:
  explicit CondLowering(std::size_t dim) : dim_(dim) {}

  FormulaPtr lower(const CondPtr& c) {
    switch (c->kind) {
      case Cond::Kind::True:
        return f_true();
      case Cond::Kind::False:
        return f_false();
      case Cond::Kind::Geq: {
        const TermCases& a = cases(c->t1);
        const TermCases& b = cases(c->t2);
        std::vector<FormulaPtr> disj;
        for (const auto& [ga, la] : a.cases)
          for (const auto& [gb, lb] : b.cases)
            disj.push_back(f_and({ga, gb, f_geq(la - lb)}));
        return f_or(std::move(disj));
      }
      case Cond::Kind::And:
        return f_and2(lower(c->c1), lower(c->c2));
      case Cond::Kind::Or:
        return f_or2(lower(c->c1), lower(c->c2));
      case Cond::Kind::Not:
        return f_not(lower(c->c1));
      case Cond::Kind::Ite: {
        FormulaPtr g = lower(c->c1);
        return f_or2(f_and2(g, lower(c->c2)), f_and2(f_not(g), lower(c->c3)));
      }
      case Cond::Kind::AppB:
        throw std::invalid_argument(
            "cannot lower a condition containing an application of '" +
            c->fn + "'");
    }
    throw std::logic_error("unreachable");
  }

  const TermCases& cases(const TermPtr& t) {
    auto it = memo_.find(t.get());
    if (it != memo_.end()) return it->second;
    TermCases out;
    switch (t->kind) {
      case Term::Kind::Const:
        out.cases.push_back({f_true(), LinExpr::constant(dim_, t->value)});
        break;
      case Term::Kind::Var:
        out.cases.push_back(
            {f_true(), LinExpr::variable(dim_, (std::size_t)t->var)});
        break;
      case Term::Kind::Add: {
        const TermCases a = cases(t->lhs);
        const TermCases b = cases(t->rhs);
        for (const auto& [ga, la] : a.cases)
          for (const auto& [gb, lb] : b.cases)
            out.cases.push_back({f_and2(ga, gb), la + lb});
        break;
      }
      case Term::Kind::Mul: {
        const TermCases a = cases(t->lhs);
        for (const auto& [ga, la] : a.cases)
          out.cases.push_back({ga, t->value * la});
        break;
      }
      case Term::Kind::Ite: {
        FormulaPtr g = lower(t->cond);
        FormulaPtr ng = f_not(g);
        const TermCases a = cases(t->lhs);
        const TermCases b = cases(t->rhs);
        for (const auto& [ga, la] : a.cases)
          out.cases.push_back({f_and2(g, ga), la});
        for (const auto& [gb, lb] : b.cases)
          out.cases.push_back({f_and2(ng, gb), lb});
        break;
      }
      case Term::Kind::App:
        throw std::invalid_argument(
            "cannot lower a term containing an application of '" + t->fn +
            "'");
    }
    return memo_.emplace(t.get(), std::move(out)).first->second;
  }

 private:
  std::size_t dim_;
  std::unordered_map<const Term*, TermCases> memo_;
};

// Lowers a ground, application-free condition to linear-atom form over
// `dim` variables.
inline FormulaPtr linearize(const CondPtr& c, std::size_t dim) {
  CondLowering lw(dim);
  return lw.lower(c);
}

// Lowers a ground term to a case list (used by the translational-branch
// extractor).
inline std::vector<std::pair<FormulaPtr, LinExpr>> linearize_term(
    const TermPtr& t, std::size_t dim) {
  CondLowering lw(dim);
  return lw.cases(t).cases;
}

// Raises a modulo-free formula back to the surface AST.
inline std::string formula_str(const FormulaPtr& f, const VarNames& vs) {
  switch (f->kind) {
    case Formula::Kind::True:
      return "true";
    case Formula::Kind::False:
      return "false";
    case Formula::Kind::Geq:
      return "(>= " + term_str(linexpr_to_term(f->lin), vs) + " 0)";
    case Formula::Kind::ModEq:
      return "(= (mod " + term_str(linexpr_to_term(f->lin), vs) + " " +
             f->m.get_str() + ") " + f->r.get_str() + ")";
    case Formula::Kind::Not:
      return "(not " + formula_str(f->kids[0], vs) + ")";
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::string s = f->kind == Formula::Kind::And ? "(and" : "(or";
      for (const auto& k : f->kids) s += " " + formula_str(k, vs);
      return s + ")";
    }
  }
  throw std::logic_error("unreachable");
}

inline CondPtr formula_to_cond(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::True:
      return mk_true();
    case Formula::Kind::False:
      return mk_false();
    case Formula::Kind::Geq:
      return mk_geq(linexpr_to_term(f->lin), mk_const(Int(0)));
    case Formula::Kind::ModEq:
      throw std::invalid_argument("modulo atom has no CLIA counterpart");
    case Formula::Kind::Not:
      return mk_not(formula_to_cond(f->kids[0]));
    case Formula::Kind::And: {
      CondPtr acc = formula_to_cond(f->kids[0]);
      for (std::size_t i = 1; i < f->kids.size(); ++i)
        acc = mk_and(acc, formula_to_cond(f->kids[i]));
      return acc;
    }
    case Formula::Kind::Or: {
      CondPtr acc = formula_to_cond(f->kids[0]);
      for (std::size_t i = 1; i < f->kids.size(); ++i)
        acc = mk_or(acc, formula_to_cond(f->kids[i]));
      return acc;
    }
  }
  throw std::logic_error("unreachable");
}

inline bool formula_has_mod(const FormulaPtr& f) {
  if (f->kind == Formula::Kind::ModEq) return true;
  for (const auto& k : f->kids)
    if (formula_has_mod(k)) return true;
  return false;
}

// -------- DNF over formulas --------

// Cubes are conjunctions of atoms (possibly negated mod atoms never appear:
// input is NNF'd first).
struct Cube {
  std::vector<FormulaPtr> lits;
};

inline std::vector<Cube> formula_dnf(const FormulaPtr& f,
                                     std::size_t max_cubes = 4096) {
  FormulaPtr n = to_nnf(f);
  struct Rec {
    std::size_t cap;
    std::vector<Cube> run(const FormulaPtr& g) {
      switch (g->kind) {
        case Formula::Kind::True:
          return {Cube{}};
        case Formula::Kind::False:
          return {};
        case Formula::Kind::Geq:
        case Formula::Kind::ModEq:
          return {Cube{{g}}};
        case Formula::Kind::Or: {
          std::vector<Cube> all;
          for (const auto& k : g->kids) {
            auto sub = run(k);
            all.insert(all.end(), sub.begin(), sub.end());
            if (all.size() > cap)
              throw SizeLimitExceeded("DNF clause cap exceeded");
          }
          return all;
        }
        case Formula::Kind::And: {
          std::vector<Cube> acc{Cube{}};
          for (const auto& k : g->kids) {
            auto sub = run(k);
            std::vector<Cube> next;
            for (const auto& a : acc)
              for (const auto& b : sub) {
                Cube c = a;
                c.lits.insert(c.lits.end(), b.lits.begin(), b.lits.end());
                next.push_back(std::move(c));
                if (next.size() > cap)
                  throw SizeLimitExceeded("DNF clause cap exceeded");
              }
            acc = std::move(next);
          }
          return acc;
        }
        case Formula::Kind::Not:
          throw std::logic_error("NNF input expected");
      }
      throw std::logic_error("unreachable");
    }
  } rec{max_cubes};
  return rec.run(n);
}

inline FormulaPtr cube_to_formula(const Cube& c) {
  std::vector<FormulaPtr> lits = c.lits;
  return f_and(std::move(lits));
}

inline FormulaPtr dnf_to_formula(const std::vector<Cube>& cubes) {
  std::vector<FormulaPtr> ds;
  ds.reserve(cubes.size());
  for (const auto& c : cubes) ds.push_back(cube_to_formula(c));
  return f_or(std::move(ds));
}

}  // namespace concsynth
