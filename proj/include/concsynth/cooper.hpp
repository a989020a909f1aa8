#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "concsynth/formula.hpp"

// Cooper's one-variable quantifier elimination over the Int fragment with
// modulo atoms. eliminate(var, body) returns a quantifier-free formula
// equivalent to (exists var . body); the result may mention new modulo
// atoms whose moduli divide the lcm of the input's moduli and coefficients
// of var. Inputs are arbitrary formulas (NNF is taken internally).

namespace concsynth {

namespace cooper_detail {

inline Int coeff_of(const LinExpr& e, std::size_t var) {
  return var < e.coeffs.size() ? e.coeffs[var] : Int(0);
}

inline LinExpr drop_var(LinExpr e, std::size_t var) {
  if (var < e.coeffs.size()) e.coeffs[var] = 0;
  return e;
}

// Conceptually every atom is first scaled so var's coefficient becomes
// +-delta, then delta*var is treated as a fresh unit variable k'. Both
// walks below operate on the original atoms and apply the scaling on the
// fly: subst_unit instantiates k' with the term s, minus_inf resolves the
// inequalities on var as if k' were arbitrarily small (mod atoms still see
// k' = s, which callers pass as a constant residue).
inline FormulaPtr subst_unit(const FormulaPtr& f, std::size_t var,
                             const Int& delta, const LinExpr& s,
                             bool minus_inf) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
      return f;
    case Formula::Kind::Geq: {
      Int a = coeff_of(f->lin, var);
      if (a == 0) return f;
      if (minus_inf) return a > 0 ? f_false() : f_true();
      LinExpr e = drop_var(f->lin, var);
      e *= delta / int_abs(a);
      if (a > 0)
        e += s;
      else
        e -= s;
      return f_geq(std::move(e));
    }
    case Formula::Kind::ModEq: {
      Int a = coeff_of(f->lin, var);
      if (a == 0) return f;
      Int t = delta / int_abs(a);
      LinExpr e = drop_var(f->lin, var);
      e *= t;
      if (a > 0)
        e += s;
      else
        e -= s;
      return f_modeq(std::move(e), Int(f->m * t), Int(f->r * t));
    }
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids)
        kids.push_back(subst_unit(k, var, delta, s, minus_inf));
      return f->kind == Formula::Kind::And ? f_and(std::move(kids))
                                           : f_or(std::move(kids));
    }
    case Formula::Kind::Not:
      throw std::logic_error("subst_unit expects NNF input");
  }
  throw std::logic_error("unreachable");
}

inline void scan_atoms(const FormulaPtr& f, std::size_t var, Int& delta,
                       bool& mentions) {
  switch (f->kind) {
    case Formula::Kind::Geq:
    case Formula::Kind::ModEq: {
      Int a = coeff_of(f->lin, var);
      if (a != 0) {
        mentions = true;
        delta = int_lcm(delta, int_abs(a));
      }
      return;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or:
    case Formula::Kind::Not:
      for (const auto& k : f->kids) scan_atoms(k, var, delta, mentions);
      return;
    default:
      return;
  }
}

inline void scan_bounds(const FormulaPtr& f, std::size_t var, const Int& delta,
                        Int& period, std::vector<LinExpr>& lows) {
  switch (f->kind) {
    case Formula::Kind::Geq: {
      Int a = coeff_of(f->lin, var);
      if (a > 0) {
        LinExpr b = drop_var(f->lin, var);
        b *= Int(-(delta / a));
        bool seen = false;
        for (const auto& o : lows)
          if (o == b) {
            seen = true;
            break;
          }
        if (!seen) lows.push_back(std::move(b));
      }
      return;
    }
    case Formula::Kind::ModEq: {
      Int a = coeff_of(f->lin, var);
      if (a != 0) period = int_lcm(period, Int(f->m * (delta / int_abs(a))));
      return;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (const auto& k : f->kids) scan_bounds(k, var, delta, period, lows);
      return;
    default:
      return;
  }
}

}  // namespace cooper_detail

inline FormulaPtr eliminate(std::size_t var, const FormulaPtr& body,
                            bool lower_bound_zero = false,
                            std::size_t size_cap = 1000000) {
  using namespace cooper_detail;
  FormulaPtr f0 = body;
  if (lower_bound_zero)
    f0 = f_and2(f_geq(LinExpr::variable(var + 1, var)), f0);
  FormulaPtr f = to_nnf(f0);

  Int delta(1);
  bool mentions = false;
  scan_atoms(f, var, delta, mentions);
  if (!mentions) return f;

  Int period = delta;
  std::vector<LinExpr> lows;
  scan_bounds(f, var, delta, period, lows);

  std::vector<FormulaPtr> out;
  std::size_t total = 0;
  auto push = [&](FormulaPtr g) {
    g = simplify(g);
    if (is_false(g)) return;
    total += formula_size(g);
    if (total > size_cap)
      throw SizeLimitExceeded("quantifier elimination result exceeds cap");
    out.push_back(std::move(g));
  };

  // k' = delta * k must be divisible by delta; the divisibility travels
  // into every instantiation of k'.
  for (Int j(0); j < period; ++j) {
    LinExpr s = LinExpr::constant(0, j);
    push(f_and2(subst_unit(f, var, delta, s, true), f_modeq(s, delta, Int(0))));
  }
  for (const auto& b : lows)
    for (Int j(0); j < period; ++j) {
      LinExpr s = b;
      s.offset += j;
      push(f_and2(subst_unit(f, var, delta, s, false),
                  f_modeq(s, delta, Int(0))));
    }
  return f_or(std::move(out));
}

// Over-approximation used by the invariant engine: every modulo atom in an
// NNF formula is weakened to true.
inline FormulaPtr strip_modulo(const FormulaPtr& f) {
  switch (f->kind) {
    case Formula::Kind::True:
    case Formula::Kind::False:
    case Formula::Kind::Geq:
      return f;
    case Formula::Kind::ModEq:
      return f_true();
    case Formula::Kind::Not:
      return f->kids[0]->kind == Formula::Kind::ModEq
                 ? f_true()
                 : f_not(strip_modulo(f->kids[0]));
    case Formula::Kind::And:
    case Formula::Kind::Or: {
      std::vector<FormulaPtr> kids;
      kids.reserve(f->kids.size());
      for (const auto& k : f->kids) kids.push_back(strip_modulo(k));
      return f->kind == Formula::Kind::And ? f_and(std::move(kids))
                                           : f_or(std::move(kids));
    }
  }
  throw std::logic_error("unreachable");
}

}  // namespace concsynth
