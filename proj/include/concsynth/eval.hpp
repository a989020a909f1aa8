#pragma once

#include <stdexcept>
#include <vector>

#include "concsynth/ast.hpp"

namespace concsynth {

// Assignment of the declared variables, one integer per index.
struct Valuation {
  std::vector<Int> values;

  Valuation() = default;
  explicit Valuation(std::vector<Int> v) : values(std::move(v)) {}
  Valuation(std::initializer_list<long> v) {
    for (long x : v) values.emplace_back(x);
  }

  std::size_t size() const { return values.size(); }
  const Int& operator[](std::size_t i) const { return values.at(i); }

  bool operator==(const Valuation& o) const { return values == o.values; }
};

struct UngroundedTerm : std::runtime_error {
  explicit UngroundedTerm(const std::string& fn)
      : std::runtime_error("cannot evaluate application of '" + fn + "'") {}
};

inline Int eval_term(const TermPtr& t, const Valuation& v);
inline bool eval_cond(const CondPtr& c, const Valuation& v);

inline Int eval_term(const TermPtr& t, const Valuation& v) {
  switch (t->kind) {
    case Term::Kind::Const:
      return t->value;
    case Term::Kind::Var:
      return v[t->var];
    case Term::Kind::Add:
      return eval_term(t->lhs, v) + eval_term(t->rhs, v);
    case Term::Kind::Mul:
      return t->value * eval_term(t->lhs, v);
    case Term::Kind::Ite:
      return eval_cond(t->cond, v) ? eval_term(t->lhs, v)
                                   : eval_term(t->rhs, v);
    case Term::Kind::App:
      throw UngroundedTerm(t->fn);
  }
  throw std::logic_error("unreachable");
}

inline bool eval_cond(const CondPtr& c, const Valuation& v) {
  switch (c->kind) {
    case Cond::Kind::True:
      return true;
    case Cond::Kind::False:
      return false;
    case Cond::Kind::Geq:
      return eval_term(c->t1, v) >= eval_term(c->t2, v);
    case Cond::Kind::And:
      return eval_cond(c->c1, v) && eval_cond(c->c2, v);
    case Cond::Kind::Or:
      return eval_cond(c->c1, v) || eval_cond(c->c2, v);
    case Cond::Kind::Not:
      return !eval_cond(c->c1, v);
    case Cond::Kind::Ite:
      return eval_cond(c->c1, v) ? eval_cond(c->c2, v) : eval_cond(c->c3, v);
    case Cond::Kind::AppB:
      throw UngroundedTerm(c->fn);
  }
  throw std::logic_error("unreachable");
}

// -------- substitution --------

// Replaces Var(i) by subs[i]. Out-of-range indices are kept as-is.
inline TermPtr subst_vars(const TermPtr& t, const std::vector<TermPtr>& subs);
inline CondPtr subst_vars(const CondPtr& c, const std::vector<TermPtr>& subs);

inline TermPtr subst_vars(const TermPtr& t, const std::vector<TermPtr>& subs) {
  switch (t->kind) {
    case Term::Kind::Const:
      return t;
    case Term::Kind::Var:
      if (t->var >= 0 && t->var < (int)subs.size() && subs[t->var])
        return subs[t->var];
      return t;
    case Term::Kind::Add:
      return mk_add(subst_vars(t->lhs, subs), subst_vars(t->rhs, subs));
    case Term::Kind::Mul:
      return mk_mul(t->value, subst_vars(t->lhs, subs));
    case Term::Kind::Ite:
      return mk_term_ite(subst_vars(t->cond, subs), subst_vars(t->lhs, subs),
                         subst_vars(t->rhs, subs));
    case Term::Kind::App: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(subst_vars(a, subs));
      return mk_app(t->fn, std::move(args));
    }
  }
  throw std::logic_error("unreachable");
}

inline CondPtr subst_vars(const CondPtr& c, const std::vector<TermPtr>& subs) {
  switch (c->kind) {
    case Cond::Kind::True:
    case Cond::Kind::False:
      return c;
    case Cond::Kind::Geq:
      return mk_geq(subst_vars(c->t1, subs), subst_vars(c->t2, subs));
    case Cond::Kind::And:
      return mk_and(subst_vars(c->c1, subs), subst_vars(c->c2, subs));
    case Cond::Kind::Or:
      return mk_or(subst_vars(c->c1, subs), subst_vars(c->c2, subs));
    case Cond::Kind::Not:
      return mk_not(subst_vars(c->c1, subs));
    case Cond::Kind::Ite:
      return mk_cond_ite(subst_vars(c->c1, subs), subst_vars(c->c2, subs),
                         subst_vars(c->c3, subs));
    case Cond::Kind::AppB: {
      std::vector<TermPtr> args;
      args.reserve(c->args.size());
      for (const auto& a : c->args) args.push_back(subst_vars(a, subs));
      return mk_appb(c->fn, std::move(args));
    }
  }
  throw std::logic_error("unreachable");
}

// Replaces every application of `fn` by a body with the application's
// arguments substituted for the body's formal parameters (Var(0..arity-1)
// in the body's own index space). Used to instantiate a candidate solution
// in the specification. Instantiations are cached per argument tuple, so
// the usual case of every constraint applying f to the same arguments
// yields one shared body and downstream lowering memoization stays
// effective.
class AppSubst {
 public:
  AppSubst(std::string fn, TermPtr int_body, CondPtr bool_body)
      : fn_(std::move(fn)),
        int_body_(std::move(int_body)),
        bool_body_(std::move(bool_body)) {}

  TermPtr term(const TermPtr& t) {
    switch (t->kind) {
      case Term::Kind::Const:
      case Term::Kind::Var:
        return t;
      case Term::Kind::Add:
        return mk_add(term(t->lhs), term(t->rhs));
      case Term::Kind::Mul:
        return mk_mul(t->value, term(t->lhs));
      case Term::Kind::Ite:
        return mk_term_ite(cond(t->cond), term(t->lhs), term(t->rhs));
      case Term::Kind::App: {
        std::vector<TermPtr> args;
        args.reserve(t->args.size());
        for (const auto& a : t->args) args.push_back(term(a));
        if (t->fn != fn_) return mk_app(t->fn, std::move(args));
        if (!int_body_) throw std::logic_error("int body expected for " + fn_);
        for (const auto& [k, v] : tcache_)
          if (args_eq(k, args)) return v;
        TermPtr r = subst_vars(int_body_, args);
        tcache_.emplace_back(std::move(args), r);
        return r;
      }
    }
    throw std::logic_error("unreachable");
  }

  CondPtr cond(const CondPtr& c) {
    switch (c->kind) {
      case Cond::Kind::True:
      case Cond::Kind::False:
        return c;
      case Cond::Kind::Geq:
        return mk_geq(term(c->t1), term(c->t2));
      case Cond::Kind::And:
        return mk_and(cond(c->c1), cond(c->c2));
      case Cond::Kind::Or:
        return mk_or(cond(c->c1), cond(c->c2));
      case Cond::Kind::Not:
        return mk_not(cond(c->c1));
      case Cond::Kind::Ite:
        return mk_cond_ite(cond(c->c1), cond(c->c2), cond(c->c3));
      case Cond::Kind::AppB: {
        std::vector<TermPtr> args;
        args.reserve(c->args.size());
        for (const auto& a : c->args) args.push_back(term(a));
        if (c->fn != fn_) return mk_appb(c->fn, std::move(args));
        if (!bool_body_)
          throw std::logic_error("bool body expected for " + fn_);
        for (const auto& [k, v] : bcache_)
          if (args_eq(k, args)) return v;
        CondPtr r = subst_vars(bool_body_, args);
        bcache_.emplace_back(std::move(args), r);
        return r;
      }
    }
    throw std::logic_error("unreachable");
  }

 private:
  static bool args_eq(const std::vector<TermPtr>& a,
                      const std::vector<TermPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!term_eq(a[i], b[i])) return false;
    return true;
  }

  std::string fn_;
  TermPtr int_body_;
  CondPtr bool_body_;
  std::vector<std::pair<std::vector<TermPtr>, TermPtr>> tcache_;
  std::vector<std::pair<std::vector<TermPtr>, CondPtr>> bcache_;
};

inline TermPtr subst_app_term(const TermPtr& t, const std::string& fn,
                              const TermPtr& int_body,
                              const CondPtr& bool_body) {
  AppSubst s(fn, int_body, bool_body);
  return s.term(t);
}

inline CondPtr subst_app_cond(const CondPtr& c, const std::string& fn,
                              const TermPtr& int_body,
                              const CondPtr& bool_body) {
  AppSubst s(fn, int_body, bool_body);
  return s.cond(c);
}

}  // namespace concsynth
