#pragma once

#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "concsynth/bigint.hpp"

namespace concsynth {

struct Term;
struct Cond;
using TermPtr = std::shared_ptr<const Term>;
using CondPtr = std::shared_ptr<const Cond>;

// CLIA term: constants, variables (by index into the problem's variable
// list), sums, literal-scalar products, conditionals, and applications of
// the unknown function. Nodes are immutable and freely shared.
struct Term {
  enum class Kind { Const, Var, Add, Mul, Ite, App };

  Kind kind;
  Int value;                  // Const payload / Mul scalar
  int var = -1;               // Var index
  TermPtr lhs, rhs;           // Add children; Mul operand in lhs; Ite arms
  CondPtr cond;               // Ite guard
  std::string fn;             // App function symbol
  std::vector<TermPtr> args;  // App arguments
};

// CLIA condition. Or/Ite/True/False are derived conveniences over the
// and/not/>= core; to_base() rewrites them away.
struct Cond {
  enum class Kind { True, False, Geq, And, Or, Not, Ite, AppB };

  Kind kind;
  TermPtr t1, t2;       // Geq operands
  CondPtr c1, c2, c3;   // And/Or children, Not child, Ite guard/arms
  std::string fn;
  std::vector<TermPtr> args;  // AppB
};

inline TermPtr mk_const(Int v) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Const;
  t->value = std::move(v);
  return t;
}

inline TermPtr mk_var(int idx) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Var;
  t->var = idx;
  return t;
}

inline TermPtr mk_add(TermPtr a, TermPtr b) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Add;
  t->lhs = std::move(a);
  t->rhs = std::move(b);
  return t;
}

// Scalar product with a literal integer; Var*Var products are never built.
inline TermPtr mk_mul(Int scalar, TermPtr a) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Mul;
  t->value = std::move(scalar);
  t->lhs = std::move(a);
  return t;
}

inline TermPtr mk_term_ite(CondPtr c, TermPtr a, TermPtr b) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::Ite;
  t->cond = std::move(c);
  t->lhs = std::move(a);
  t->rhs = std::move(b);
  return t;
}

inline TermPtr mk_app(std::string fn, std::vector<TermPtr> args) {
  auto t = std::make_shared<Term>();
  t->kind = Term::Kind::App;
  t->fn = std::move(fn);
  t->args = std::move(args);
  return t;
}

inline TermPtr mk_sub(TermPtr a, TermPtr b) {
  return mk_add(std::move(a), mk_mul(Int(-1), std::move(b)));
}

inline CondPtr mk_true() {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::True;
  return c;
}

inline CondPtr mk_false() {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::False;
  return c;
}

inline CondPtr mk_geq(TermPtr a, TermPtr b) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::Geq;
  c->t1 = std::move(a);
  c->t2 = std::move(b);
  return c;
}

inline CondPtr mk_and(CondPtr a, CondPtr b) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::And;
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

inline CondPtr mk_or(CondPtr a, CondPtr b) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::Or;
  c->c1 = std::move(a);
  c->c2 = std::move(b);
  return c;
}

inline CondPtr mk_not(CondPtr a) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::Not;
  c->c1 = std::move(a);
  return c;
}

inline CondPtr mk_cond_ite(CondPtr g, CondPtr a, CondPtr b) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::Ite;
  c->c1 = std::move(g);
  c->c2 = std::move(a);
  c->c3 = std::move(b);
  return c;
}

inline CondPtr mk_appb(std::string fn, std::vector<TermPtr> args) {
  auto c = std::make_shared<Cond>();
  c->kind = Cond::Kind::AppB;
  c->fn = std::move(fn);
  c->args = std::move(args);
  return c;
}

// Equality is not in the core grammar; inputs desugar t1 = t2 into
// t1 >= t2 /\ t2 >= t1.
inline CondPtr mk_eq(TermPtr a, TermPtr b) {
  CondPtr ge = mk_geq(a, b);
  CondPtr le = mk_geq(std::move(b), std::move(a));
  return mk_and(std::move(ge), std::move(le));
}

inline CondPtr mk_and_all(std::vector<CondPtr> cs) {
  if (cs.empty()) return mk_true();
  CondPtr acc = cs[0];
  for (std::size_t i = 1; i < cs.size(); ++i) acc = mk_and(acc, cs[i]);
  return acc;
}

inline CondPtr mk_or_all(std::vector<CondPtr> cs) {
  if (cs.empty()) return mk_false();
  CondPtr acc = cs[0];
  for (std::size_t i = 1; i < cs.size(); ++i) acc = mk_or(acc, cs[i]);
  return acc;
}

inline CondPtr mk_implies(CondPtr a, CondPtr b) {
  return mk_or(mk_not(std::move(a)), std::move(b));
}

inline bool term_eq(const TermPtr& a, const TermPtr& b);
inline bool cond_eq(const CondPtr& a, const CondPtr& b);

inline bool term_eq(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Term::Kind::Const:
      return a->value == b->value;
    case Term::Kind::Var:
      return a->var == b->var;
    case Term::Kind::Add:
      return term_eq(a->lhs, b->lhs) && term_eq(a->rhs, b->rhs);
    case Term::Kind::Mul:
      return a->value == b->value && term_eq(a->lhs, b->lhs);
    case Term::Kind::Ite:
      return cond_eq(a->cond, b->cond) && term_eq(a->lhs, b->lhs) &&
             term_eq(a->rhs, b->rhs);
    case Term::Kind::App:
      if (a->fn != b->fn || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!term_eq(a->args[i], b->args[i])) return false;
      return true;
  }
  return false;
}

inline bool cond_eq(const CondPtr& a, const CondPtr& b) {
  if (a == b) return true;
  if (!a || !b || a->kind != b->kind) return false;
  switch (a->kind) {
    case Cond::Kind::True:
    case Cond::Kind::False:
      return true;
    case Cond::Kind::Geq:
      return term_eq(a->t1, b->t1) && term_eq(a->t2, b->t2);
    case Cond::Kind::And:
    case Cond::Kind::Or:
      return cond_eq(a->c1, b->c1) && cond_eq(a->c2, b->c2);
    case Cond::Kind::Not:
      return cond_eq(a->c1, b->c1);
    case Cond::Kind::Ite:
      return cond_eq(a->c1, b->c1) && cond_eq(a->c2, b->c2) &&
             cond_eq(a->c3, b->c3);
    case Cond::Kind::AppB:
      if (a->fn != b->fn || a->args.size() != b->args.size()) return false;
      for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!term_eq(a->args[i], b->args[i])) return false;
      return true;
  }
  return false;
}

inline bool term_has_app(const TermPtr& t);
inline bool cond_has_app(const CondPtr& c);

inline bool term_has_app(const TermPtr& t) {
  switch (t->kind) {
    case Term::Kind::Const:
    case Term::Kind::Var:
      return false;
    case Term::Kind::Add:
      return term_has_app(t->lhs) || term_has_app(t->rhs);
    case Term::Kind::Mul:
      return term_has_app(t->lhs);
    case Term::Kind::Ite:
      return cond_has_app(t->cond) || term_has_app(t->lhs) ||
             term_has_app(t->rhs);
    case Term::Kind::App:
      return true;
  }
  return false;
}

inline bool cond_has_app(const CondPtr& c) {
  switch (c->kind) {
    case Cond::Kind::True:
    case Cond::Kind::False:
      return false;
    case Cond::Kind::Geq:
      return term_has_app(c->t1) || term_has_app(c->t2);
    case Cond::Kind::And:
    case Cond::Kind::Or:
      return cond_has_app(c->c1) || cond_has_app(c->c2);
    case Cond::Kind::Not:
      return cond_has_app(c->c1);
    case Cond::Kind::Ite:
      return cond_has_app(c->c1) || cond_has_app(c->c2) || cond_has_app(c->c3);
    case Cond::Kind::AppB:
      return true;
  }
  return false;
}

inline bool is_ground(const TermPtr& t) { return !term_has_app(t); }
inline bool is_ground(const CondPtr& c) { return !cond_has_app(c); }

// -------- printing (SMT-LIB / SyGuS surface syntax) --------

struct VarNames {
  std::vector<std::string> names;

  const std::string& operator[](int i) const { return names.at(i); }
  static VarNames numbered(std::size_t n, const std::string& prefix = "x") {
    VarNames v;
    for (std::size_t i = 0; i < n; ++i)
      v.names.push_back(prefix + std::to_string(i + 1));
    return v;
  }
};

inline void print_term(std::ostream& os, const TermPtr& t, const VarNames& vs);
inline void print_cond(std::ostream& os, const CondPtr& c, const VarNames& vs);

inline void print_int(std::ostream& os, const Int& v) {
  if (v < 0)
    os << "(- " << int_str(-v) << ")";
  else
    os << int_str(v);
}

inline void print_term(std::ostream& os, const TermPtr& t,
                       const VarNames& vs) {
  switch (t->kind) {
    case Term::Kind::Const:
      print_int(os, t->value);
      return;
    case Term::Kind::Var:
      os << vs[t->var];
      return;
    case Term::Kind::Add:
      os << "(+ ";
      print_term(os, t->lhs, vs);
      os << " ";
      print_term(os, t->rhs, vs);
      os << ")";
      return;
    case Term::Kind::Mul:
      os << "(* ";
      print_int(os, t->value);
      os << " ";
      print_term(os, t->lhs, vs);
      os << ")";
      return;
    case Term::Kind::Ite:
      os << "(ite ";
      print_cond(os, t->cond, vs);
      os << " ";
      print_term(os, t->lhs, vs);
      os << " ";
      print_term(os, t->rhs, vs);
      os << ")";
      return;
    case Term::Kind::App:
      os << "(" << t->fn;
      for (const auto& a : t->args) {
        os << " ";
        print_term(os, a, vs);
      }
      os << ")";
      return;
  }
}

inline void print_cond(std::ostream& os, const CondPtr& c,
                       const VarNames& vs) {
  switch (c->kind) {
    case Cond::Kind::True:
      os << "true";
      return;
    case Cond::Kind::False:
      os << "false";
      return;
    case Cond::Kind::Geq:
      os << "(>= ";
      print_term(os, c->t1, vs);
      os << " ";
      print_term(os, c->t2, vs);
      os << ")";
      return;
    case Cond::Kind::And:
      os << "(and ";
      print_cond(os, c->c1, vs);
      os << " ";
      print_cond(os, c->c2, vs);
      os << ")";
      return;
    case Cond::Kind::Or:
      os << "(or ";
      print_cond(os, c->c1, vs);
      os << " ";
      print_cond(os, c->c2, vs);
      os << ")";
      return;
    case Cond::Kind::Not:
      os << "(not ";
      print_cond(os, c->c1, vs);
      os << ")";
      return;
    case Cond::Kind::Ite:
      os << "(ite ";
      print_cond(os, c->c1, vs);
      os << " ";
      print_cond(os, c->c2, vs);
      os << " ";
      print_cond(os, c->c3, vs);
      os << ")";
      return;
    case Cond::Kind::AppB:
      os << "(" << c->fn;
      for (const auto& a : c->args) {
        os << " ";
        print_term(os, a, vs);
      }
      os << ")";
      return;
  }
}

inline std::string term_str(const TermPtr& t, const VarNames& vs) {
  std::ostringstream os;
  print_term(os, t, vs);
  return os.str();
}

inline std::string cond_str(const CondPtr& c, const VarNames& vs) {
  std::ostringstream os;
  print_cond(os, c, vs);
  return os.str();
}

}  // namespace concsynth
