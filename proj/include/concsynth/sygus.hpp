#pragma once

#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/eval.hpp"
#include "concsynth/formula.hpp"
#include "concsynth/sexpr.hpp"

namespace concsynth {

struct ParseError : std::runtime_error {
  std::size_t line, col;
  ParseError(std::size_t l, std::size_t c, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(l) + ":" +
                           std::to_string(c) + ": " + msg),
        line(l),
        col(c) {}
};

struct UnsupportedLogic : std::runtime_error {
  explicit UnsupportedLogic(const std::string& logic)
      : std::runtime_error("unsupported logic " + logic) {}
};

enum class Sort { Int, Bool };
enum class Track { CLIA, INV };

// Deterministic loop body: variable i steps to trans[i](x⃗).
struct InvParts {
  CondPtr pre;
  std::vector<TermPtr> trans;
  CondPtr post;
};

struct SynthProblem {
  std::string fname;
  std::size_t arity = 0;
  Sort return_sort = Sort::Int;
  std::vector<std::string> params;  // f's formal parameters
  std::vector<std::string> vars;    // universally quantified variables
  CondPtr spec;                     // φ(f; x⃗)
  Track track = Track::CLIA;
  std::optional<InvParts> inv_parts;
  std::vector<std::string> warnings;

  std::size_t dim() const { return vars.size(); }
  VarNames var_names() const {
    VarNames v;
    v.names = vars;
    return v;
  }
  VarNames param_names() const {
    VarNames v;
    v.names = params;
    return v;
  }
};

struct ParseOptions {
  bool strict_grammar = false;
};

// Round-trip helper for emitted solutions.
struct DefineFun {
  std::string name;
  std::vector<std::string> params;
  Sort sort = Sort::Int;
  TermPtr tbody;  // set when sort == Int
  CondPtr cbody;  // set when sort == Bool
};

namespace detail {

inline bool is_numeral(const std::string& s) {
  std::size_t i = (s.size() > 1 && s[0] == '-') ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit((unsigned char)s[i])) return false;
  return true;
}

class SygusParser {
 public:
  SygusParser(std::string text, ParseOptions opts)
      : text_(std::move(text)), opts_(opts) {}

  SynthProblem run() {
    std::vector<Sexpr> cmds;
    try {
      cmds = parse_sexprs(text_);
    } catch (const SexprParseError& e) {
      fail(e.pos, e.what());
    }
    for (const Sexpr& c : cmds) command(c);
    if (p_.fname.empty()) fail(text_.size(), "missing synth-fun or synth-inv");
    if (!seen_check_) fail(text_.size(), "missing (check-synth)");
    finish();
    return std::move(p_);
  }

  static DefineFun define_fun(const std::string& text) {
    SygusParser sp(text, ParseOptions{});
    Sexpr c;
    try {
      std::vector<Sexpr> cmds = parse_sexprs(sp.text_);
      if (cmds.size() != 1) throw SexprParseError("expected one define-fun");
      c = std::move(cmds[0]);
    } catch (const SexprParseError& e) {
      sp.fail(e.pos, e.what());
    }
    if (c.is_atom || c.size() != 5 || !c[0].is("define-fun") || !c[1].is_atom)
      sp.fail(c.pos, "malformed define-fun");
    DefineFun out;
    out.name = c[1].atom;
    Env env;
    if (c[2].is_atom) sp.fail(c[2].pos, "expected a parameter list");
    for (const Sexpr& prm : c[2].kids) {
      if (prm.is_atom || prm.size() != 2 || !prm[0].is_atom)
        sp.fail(prm.pos, "malformed parameter");
      if (sp.parse_sort(prm[1]) != Sort::Int)
        sp.fail(prm[1].pos, "parameters must be Int");
      env[prm[0].atom] = mk_var((int)out.params.size());
      out.params.push_back(prm[0].atom);
    }
    out.sort = sp.parse_sort(c[3]);
    if (out.sort == Sort::Int)
      out.tbody = sp.tr_term(c[4], env);
    else
      out.cbody = sp.tr_cond(c[4], env);
    return out;
  }

 private:
  using Env = std::unordered_map<std::string, TermPtr>;

  struct Def {
    std::vector<std::string> params;
    Sort sort = Sort::Int;
    Sexpr body;
  };

  [[noreturn]] void fail(std::size_t pos, const std::string& msg) const {
    auto [l, c] = line_col(text_, pos);
    throw ParseError(l, c, msg);
  }

  Sort parse_sort(const Sexpr& s) const {
    if (s.is("Int")) return Sort::Int;
    if (s.is("Bool")) return Sort::Bool;
    fail(s.pos, "unsupported sort " + s.str());
  }

  void command(const Sexpr& c) {
    if (c.is_atom || c.size() == 0 || !c[0].is_atom)
      fail(c.pos, "malformed command");
    const std::string& head = c[0].atom;
    if (head == "set-logic") {
      if (c.size() != 2 || !c[1].is_atom) fail(c.pos, "malformed set-logic");
      if (c[1].atom != "LIA") throw UnsupportedLogic(c[1].atom);
      return;
    }
    if (head == "set-options" || head == "set-option" || head == "set-info" ||
        head == "set-feature")
      return;
    if (head == "synth-fun" || head == "synth-inv") {
      synth_decl(c, head == "synth-inv");
      return;
    }
    if (head == "declare-var" || head == "declare-primed-var") {
      if (c.size() != 3 || !c[1].is_atom) fail(c.pos, "malformed declaration");
      if (parse_sort(c[2]) != Sort::Int)
        fail(c[2].pos, "only Int variables are supported");
      add_var(c[1].atom, c.pos);
      if (head == "declare-primed-var") {
        add_var(c[1].atom + "!", c.pos);
        primed_base_.push_back(c[1].atom);
      }
      return;
    }
    if (head == "define-fun") {
      define(c);
      return;
    }
    if (head == "constraint") {
      if (c.size() != 2) fail(c.pos, "malformed constraint");
      constraints_.push_back(c[1]);
      return;
    }
    if (head == "inv-constraint") {
      if (c.size() != 5) fail(c.pos, "malformed inv-constraint");
      for (std::size_t i = 1; i <= 4; ++i)
        if (!c[i].is_atom)
          fail(c[i].pos, "inv-constraint expects function symbols");
      inv_names_ = {c[1].atom, c[2].atom, c[3].atom, c[4].atom};
      inv_pos_ = c.pos;
      has_inv_constraint_ = true;
      return;
    }
    if (head == "check-synth") {
      seen_check_ = true;
      return;
    }
    fail(c.pos, "unsupported command " + head);
  }

  void synth_decl(const Sexpr& c, bool is_inv) {
    if (!p_.fname.empty()) fail(c.pos, "multiple synth declarations");
    if (c.size() < (is_inv ? 3u : 4u) || !c[1].is_atom || c[2].is_atom)
      fail(c.pos, "malformed " + c[0].atom);
    p_.fname = c[1].atom;
    for (const Sexpr& prm : c[2].kids) {
      if (prm.is_atom || prm.size() != 2 || !prm[0].is_atom)
        fail(prm.pos, "malformed parameter");
      if (parse_sort(prm[1]) != Sort::Int)
        fail(prm[1].pos, "parameters must be Int");
      p_.params.push_back(prm[0].atom);
    }
    p_.arity = p_.params.size();
    std::size_t body_at = 3;
    if (is_inv) {
      p_.return_sort = Sort::Bool;
      from_synth_inv_ = true;
    } else {
      p_.return_sort = parse_sort(c[3]);
      body_at = 4;
    }
    if (c.size() > body_at) {
      bool has_ite = false, has_geq = false;
      for (std::size_t i = body_at; i < c.size(); ++i)
        scan_grammar(c[i], has_ite, has_geq);
      if (opts_.strict_grammar && (!has_ite || !has_geq))
        fail(c[body_at].pos, "grammar excludes ite or >=");
      p_.warnings.push_back(
          "grammar productions are ignored; synthesis searches full CLIA");
    }
  }

  static void scan_grammar(const Sexpr& e, bool& ite, bool& geq) {
    if (e.is_atom) {
      if (e.atom == "ite") ite = true;
      if (e.atom == ">=") geq = true;
      return;
    }
    for (const Sexpr& k : e.kids) scan_grammar(k, ite, geq);
  }

  void add_var(const std::string& n, std::size_t pos) {
    if (var_index_.count(n)) fail(pos, "duplicate variable " + n);
    var_index_[n] = p_.vars.size();
    p_.vars.push_back(n);
  }

  void define(const Sexpr& c) {
    if (c.size() != 5 || !c[1].is_atom || c[2].is_atom)
      fail(c.pos, "malformed define-fun");
    if (defs_.count(c[1].atom)) fail(c.pos, "duplicate definition " + c[1].atom);
    Def d;
    for (const Sexpr& prm : c[2].kids) {
      if (prm.is_atom || prm.size() != 2 || !prm[0].is_atom)
        fail(prm.pos, "malformed parameter");
      if (parse_sort(prm[1]) != Sort::Int)
        fail(prm[1].pos, "parameters must be Int");
      d.params.push_back(prm[0].atom);
    }
    d.sort = parse_sort(c[3]);
    d.body = c[4];
    defs_.emplace(c[1].atom, std::move(d));
  }

  std::vector<TermPtr> tr_args(const Sexpr& e, const Env& env,
                               std::size_t want) {
    if (e.size() - 1 != want)
      fail(e.pos, e[0].atom + " expects " + std::to_string(want) +
                      " arguments");
    std::vector<TermPtr> args;
    for (std::size_t i = 1; i < e.size(); ++i)
      args.push_back(tr_term(e[i], env));
    return args;
  }

  TermPtr expand_def(const Sexpr& e, const Def& d, const Env& env) {
    Env inner;
    std::vector<TermPtr> args = tr_args(e, env, d.params.size());
    for (std::size_t i = 0; i < args.size(); ++i)
      inner[d.params[i]] = args[i];
    return tr_term(d.body, inner);
  }

  TermPtr tr_term(const Sexpr& e, const Env& env) {
    if (e.is_atom) {
      if (is_numeral(e.atom)) return mk_const(Int(e.atom));
      auto it = env.find(e.atom);
      if (it != env.end()) return it->second;
      auto dit = defs_.find(e.atom);
      if (dit != defs_.end() && dit->second.params.empty() &&
          dit->second.sort == Sort::Int)
        return tr_term(dit->second.body, Env{});
      fail(e.pos, "undeclared symbol " + e.atom);
    }
    if (e.size() == 0 || !e[0].is_atom) fail(e.pos, "malformed term");
    const std::string& op = e[0].atom;
    if (op == "+") {
      if (e.size() < 3) fail(e.pos, "malformed +");
      TermPtr acc = tr_term(e[1], env);
      for (std::size_t i = 2; i < e.size(); ++i)
        acc = mk_add(acc, tr_term(e[i], env));
      return acc;
    }
    if (op == "-") {
      if (e.size() < 2) fail(e.pos, "malformed -");
      if (e.size() == 2) {
        TermPtr t = tr_term(e[1], env);
        if (t->kind == Term::Kind::Const) return mk_const(-t->value);
        return mk_mul(Int(-1), std::move(t));
      }
      TermPtr acc = tr_term(e[1], env);
      for (std::size_t i = 2; i < e.size(); ++i)
        acc = mk_sub(acc, tr_term(e[i], env));
      return acc;
    }
    if (op == "*") {
      if (e.size() < 3) fail(e.pos, "malformed *");
      Int scale(1);
      TermPtr linear;
      for (std::size_t i = 1; i < e.size(); ++i) {
        TermPtr t = tr_term(e[i], env);
        if (t->kind == Term::Kind::Const) {
          scale *= t->value;
        } else if (!linear) {
          linear = t;
        } else {
          fail(e.pos, "non-linear product");
        }
      }
      if (!linear) return mk_const(scale);
      if (scale == 1) return linear;
      return mk_mul(scale, linear);
    }
    if (op == "ite") {
      if (e.size() != 4) fail(e.pos, "malformed ite");
      return mk_term_ite(tr_cond(e[1], env), tr_term(e[2], env),
                         tr_term(e[3], env));
    }
    if (op == p_.fname && p_.return_sort == Sort::Int)
      return mk_app(p_.fname, tr_args(e, env, p_.arity));
    auto dit = defs_.find(op);
    if (dit != defs_.end()) {
      if (dit->second.sort != Sort::Int)
        fail(e.pos, op + " is Bool-sorted in term position");
      return expand_def(e, dit->second, env);
    }
    if (op == "let") fail(e.pos, "let-bindings are not supported");
    fail(e.pos, "unsupported term operator " + op);
  }

  CondPtr chain(const Sexpr& e, const Env& env, const std::string& op) {
    std::vector<TermPtr> ts;
    for (std::size_t i = 1; i < e.size(); ++i) ts.push_back(tr_term(e[i], env));
    std::vector<CondPtr> conj;
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const TermPtr& a = ts[i];
      const TermPtr& b = ts[i + 1];
      if (op == ">=")
        conj.push_back(mk_geq(a, b));
      else if (op == "<=")
        conj.push_back(mk_geq(b, a));
      else if (op == ">")
        conj.push_back(mk_geq(a, mk_add(b, mk_const(Int(1)))));
      else if (op == "<")
        conj.push_back(mk_geq(b, mk_add(a, mk_const(Int(1)))));
      else
        conj.push_back(mk_eq(a, b));
    }
    return mk_and_all(std::move(conj));
  }

  CondPtr tr_cond(const Sexpr& e, const Env& env) {
    if (e.is_atom) {
      if (e.is("true")) return mk_true();
      if (e.is("false")) return mk_false();
      auto dit = defs_.find(e.atom);
      if (dit != defs_.end() && dit->second.params.empty() &&
          dit->second.sort == Sort::Bool)
        return tr_cond(dit->second.body, Env{});
      fail(e.pos, "expected a boolean expression, got " + e.atom);
    }
    if (e.size() == 0 || !e[0].is_atom) fail(e.pos, "malformed formula");
    const std::string& op = e[0].atom;
    if (op == "and" || op == "or") {
      if (e.size() < 2) fail(e.pos, "malformed " + op);
      std::vector<CondPtr> kids;
      for (std::size_t i = 1; i < e.size(); ++i)
        kids.push_back(tr_cond(e[i], env));
      return op == "and" ? mk_and_all(std::move(kids))
                         : mk_or_all(std::move(kids));
    }
    if (op == "not") {
      if (e.size() != 2) fail(e.pos, "malformed not");
      return mk_not(tr_cond(e[1], env));
    }
    if (op == "=>") {
      if (e.size() < 3) fail(e.pos, "malformed =>");
      CondPtr acc = tr_cond(e[e.size() - 1], env);
      for (std::size_t i = e.size() - 1; i-- > 1;)
        acc = mk_implies(tr_cond(e[i], env), acc);
      return acc;
    }
    if (op == "ite") {
      if (e.size() != 4) fail(e.pos, "malformed ite");
      return mk_cond_ite(tr_cond(e[1], env), tr_cond(e[2], env),
                         tr_cond(e[3], env));
    }
    if (op == ">=" || op == "<=" || op == ">" || op == "<" || op == "=") {
      if (e.size() < 3) fail(e.pos, "malformed " + op);
      return chain(e, env, op);
    }
    if (op == "distinct") {
      if (e.size() < 3) fail(e.pos, "malformed distinct");
      std::vector<TermPtr> ts;
      for (std::size_t i = 1; i < e.size(); ++i)
        ts.push_back(tr_term(e[i], env));
      std::vector<CondPtr> conj;
      for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = i + 1; j < ts.size(); ++j)
          conj.push_back(mk_not(mk_eq(ts[i], ts[j])));
      return mk_and_all(std::move(conj));
    }
    if (op == p_.fname && p_.return_sort == Sort::Bool)
      return mk_appb(p_.fname, tr_args(e, env, p_.arity));
    auto dit = defs_.find(op);
    if (dit != defs_.end()) {
      if (dit->second.sort != Sort::Bool)
        fail(e.pos, op + " is Int-sorted in formula position");
      Env inner;
      std::vector<TermPtr> args = tr_args(e, env, dit->second.params.size());
      for (std::size_t i = 0; i < args.size(); ++i)
        inner[dit->second.params[i]] = args[i];
      return tr_cond(dit->second.body, inner);
    }
    fail(e.pos, "unsupported operator " + op);
  }

  const Def& lookup_def(const std::string& n, std::size_t want_arity,
                        Sort want_sort) {
    auto it = defs_.find(n);
    if (it == defs_.end()) fail(inv_pos_, "undefined function " + n);
    if (it->second.params.size() != want_arity || it->second.sort != want_sort)
      fail(inv_pos_, n + " has the wrong signature for inv-constraint");
    return it->second;
  }

  CondPtr apply_def(const Def& d, const std::vector<TermPtr>& args) {
    Env env;
    for (std::size_t i = 0; i < d.params.size(); ++i) env[d.params[i]] = args[i];
    return tr_cond(d.body, env);
  }

  static bool mentions(const Sexpr& e,
                       const std::unordered_map<std::string, std::size_t>& m) {
    if (e.is_atom) return m.count(e.atom) > 0;
    for (const Sexpr& k : e.kids)
      if (mentions(k, m)) return true;
    return false;
  }

  // trans-f decomposes iff its body is a conjunction of equalities defining
  // each primed parameter exactly once from the unprimed ones.
  bool decompose_trans(const Def& d, std::vector<TermPtr>& out) {
    std::size_t n = p_.arity;
    Env env;
    std::unordered_map<std::string, std::size_t> primed;
    for (std::size_t i = 0; i < n; ++i) env[d.params[i]] = mk_var((int)i);
    for (std::size_t i = 0; i < n; ++i) primed[d.params[n + i]] = i;
    out.assign(n, nullptr);
    std::vector<const Sexpr*> todo{&d.body};
    while (!todo.empty()) {
      const Sexpr* e = todo.back();
      todo.pop_back();
      if (e->is_atom && e->atom == "true") continue;
      if (!e->is_atom && e->size() > 1 && (*e)[0].is("and")) {
        for (std::size_t i = 1; i < e->size(); ++i) todo.push_back(&(*e)[i]);
        continue;
      }
      if (e->is_atom || e->size() != 3 || !(*e)[0].is("=")) return false;
      const Sexpr* lhs = &(*e)[1];
      const Sexpr* rhs = &(*e)[2];
      if (!(lhs->is_atom && primed.count(lhs->atom))) std::swap(lhs, rhs);
      if (!(lhs->is_atom && primed.count(lhs->atom))) return false;
      std::size_t idx = primed[lhs->atom];
      if (out[idx] || mentions(*rhs, primed)) return false;
      try {
        out[idx] = tr_term(*rhs, env);
      } catch (const ParseError&) {
        return false;
      }
    }
    for (const TermPtr& t : out)
      if (!t) return false;
    return true;
  }

  void expand_inv() {
    if (inv_names_[0] != p_.fname)
      fail(inv_pos_, "inv-constraint names unknown function " + inv_names_[0]);
    if (!constraints_.empty())
      fail(inv_pos_, "inv-constraint cannot be mixed with constraints");
    std::size_t d = p_.arity;
    const Def& pre = lookup_def(inv_names_[1], d, Sort::Bool);
    const Def& trans = lookup_def(inv_names_[2], 2 * d, Sort::Bool);
    const Def& post = lookup_def(inv_names_[3], d, Sort::Bool);

    std::vector<std::string> base =
        primed_base_.size() == d ? primed_base_ : p_.params;
    std::vector<TermPtr> id;
    for (std::size_t i = 0; i < d; ++i) id.push_back(mk_var((int)i));

    std::vector<TermPtr> tvec;
    p_.track = Track::INV;
    if (decompose_trans(trans, tvec)) {
      p_.vars = base;
      var_index_.clear();
      CondPtr preC = apply_def(pre, id);
      CondPtr postC = apply_def(post, id);
      CondPtr inv_x = mk_appb(p_.fname, id);
      p_.spec = mk_and(mk_and(mk_implies(preC, inv_x),
                              mk_implies(inv_x, mk_appb(p_.fname, tvec))),
                       mk_implies(inv_x, postC));
      p_.inv_parts = InvParts{preC, std::move(tvec), postC};
      return;
    }
    p_.warnings.push_back(
        "transition is not a deterministic update; decidable invariant "
        "synthesis is unavailable");
    p_.vars = base;
    for (std::size_t i = 0; i < d; ++i) p_.vars.push_back(base[i] + "!");
    std::vector<TermPtr> id2;
    for (std::size_t i = 0; i < 2 * d; ++i) id2.push_back(mk_var((int)i));
    Env tenv;
    for (std::size_t i = 0; i < 2 * d; ++i) tenv[trans.params[i]] = id2[i];
    CondPtr transC = tr_cond(trans.body, tenv);
    CondPtr inv_x = mk_appb(p_.fname, id);
    CondPtr inv_x2 = mk_appb(
        p_.fname, std::vector<TermPtr>(id2.begin() + (long)d, id2.end()));
    p_.spec = mk_and(mk_and(mk_implies(apply_def(pre, id), inv_x),
                            mk_implies(mk_and(inv_x, transC), inv_x2)),
                     mk_implies(inv_x, apply_def(post, id)));
  }

  // Recognizes explicitly written (pre → f(x⃗)) ∧ (f(x⃗) → f(t⃗)) ∧
  // (f(x⃗) → post) and recovers the invariant-problem structure.
  void try_structural_inv(const std::vector<CondPtr>& cs) {
    std::size_t d = p_.vars.size();
    if (p_.return_sort != Sort::Bool || cs.size() != 3 || p_.arity != d)
      return;
    auto is_id_app = [&](const CondPtr& c) {
      if (c->kind != Cond::Kind::AppB || c->fn != p_.fname) return false;
      for (std::size_t i = 0; i < d; ++i)
        if (c->args[i]->kind != Term::Kind::Var || c->args[i]->var != (int)i)
          return false;
      return true;
    };
    CondPtr preC, postC;
    std::vector<TermPtr> tvec;
    for (const CondPtr& c : cs) {
      if (c->kind != Cond::Kind::Or || c->c1->kind != Cond::Kind::Not) return;
      const CondPtr& body = c->c1->c1;
      const CondPtr& head = c->c2;
      if (is_id_app(body)) {
        if (head->kind == Cond::Kind::AppB && head->fn == p_.fname) {
          for (const TermPtr& a : head->args)
            if (term_has_app(a)) return;
          if (!tvec.empty()) return;
          tvec = head->args;
        } else if (!cond_has_app(head)) {
          if (postC) return;
          postC = head;
        } else {
          return;
        }
      } else if (!cond_has_app(body) && is_id_app(head)) {
        if (preC) return;
        preC = body;
      } else {
        return;
      }
    }
    if (!preC || !postC || tvec.empty()) return;
    p_.track = Track::INV;
    p_.inv_parts = InvParts{preC, std::move(tvec), postC};
  }

  void finish() {
    if (has_inv_constraint_) {
      if (!from_synth_inv_ && p_.return_sort != Sort::Bool)
        fail(inv_pos_, "inv-constraint requires a Bool-valued function");
      expand_inv();
      return;
    }
    Env env;
    for (std::size_t i = 0; i < p_.vars.size(); ++i)
      env[p_.vars[i]] = mk_var((int)i);
    std::vector<CondPtr> cs;
    for (const Sexpr& c : constraints_) cs.push_back(tr_cond(c, env));
    p_.spec = mk_and_all(cs);
    try_structural_inv(cs);
  }

  std::string text_;
  ParseOptions opts_;
  SynthProblem p_;
  std::unordered_map<std::string, std::size_t> var_index_;
  std::vector<std::string> primed_base_;
  std::unordered_map<std::string, Def> defs_;
  std::vector<Sexpr> constraints_;
  std::array<std::string, 4> inv_names_{};
  std::size_t inv_pos_ = 0;
  bool has_inv_constraint_ = false;
  bool seen_check_ = false;
  bool from_synth_inv_ = false;
};

}  // namespace detail

inline SynthProblem parse_sygus(const std::string& text,
                                ParseOptions opts = {}) {
  return detail::SygusParser(text, opts).run();
}

inline DefineFun parse_define_fun(const std::string& text) {
  return detail::SygusParser::define_fun(text);
}

// -------- classification --------

struct ProblemClass {
  enum class Tag { SSI, SSI_Commutative, AT, General };
  Tag tag = Tag::General;
  std::vector<int> app_vars;  // SSI: the shared invocation tuple, as var indices
  CondPtr comm_rest;          // SSI_Commutative: the spec minus commutativity
};

namespace detail {

inline void apps_in_cond_ref(const CondPtr& c, const std::string& fn,
                             std::vector<const Term*>& out);

inline void apps_in_term(const TermPtr& t, const std::string& fn,
                         std::vector<const Term*>& out) {
  switch (t->kind) {
    case Term::Kind::Const:
    case Term::Kind::Var:
      return;
    case Term::Kind::Add:
      apps_in_term(t->lhs, fn, out);
      apps_in_term(t->rhs, fn, out);
      return;
    case Term::Kind::Mul:
      apps_in_term(t->lhs, fn, out);
      return;
    case Term::Kind::Ite:
      apps_in_cond_ref(t->cond, fn, out);
      apps_in_term(t->lhs, fn, out);
      apps_in_term(t->rhs, fn, out);
      return;
    case Term::Kind::App:
      if (t->fn == fn) out.push_back(t.get());
      for (const TermPtr& a : t->args) apps_in_term(a, fn, out);
      return;
  }
}

inline void apps_in_cond_ref(const CondPtr& c, const std::string& fn,
                             std::vector<const Term*>& out) {
  switch (c->kind) {
    case Cond::Kind::True:
    case Cond::Kind::False:
      return;
    case Cond::Kind::Geq:
      apps_in_term(c->t1, fn, out);
      apps_in_term(c->t2, fn, out);
      return;
    case Cond::Kind::Not:
      apps_in_cond_ref(c->c1, fn, out);
      return;
    case Cond::Kind::And:
    case Cond::Kind::Or:
      apps_in_cond_ref(c->c1, fn, out);
      apps_in_cond_ref(c->c2, fn, out);
      return;
    case Cond::Kind::Ite:
      apps_in_cond_ref(c->c1, fn, out);
      apps_in_cond_ref(c->c2, fn, out);
      apps_in_cond_ref(c->c3, fn, out);
      return;
    case Cond::Kind::AppB:
      for (const TermPtr& a : c->args) apps_in_term(a, fn, out);
      return;
  }
}

// At most one application per atomic formula (§3's second SSI condition).
inline bool one_app_per_atom(const CondPtr& c, const std::string& fn) {
  switch (c->kind) {
    case Cond::Kind::True:
    case Cond::Kind::False:
      return true;
    case Cond::Kind::Geq: {
      std::vector<const Term*> apps;
      apps_in_term(c->t1, fn, apps);
      apps_in_term(c->t2, fn, apps);
      return apps.size() <= 1;
    }
    case Cond::Kind::Not:
      return one_app_per_atom(c->c1, fn);
    case Cond::Kind::And:
    case Cond::Kind::Or:
      return one_app_per_atom(c->c1, fn) && one_app_per_atom(c->c2, fn);
    case Cond::Kind::Ite:
      return one_app_per_atom(c->c1, fn) && one_app_per_atom(c->c2, fn) &&
             one_app_per_atom(c->c3, fn);
    case Cond::Kind::AppB:
      return true;
  }
  return false;
}

// The shared invocation tuple, provided every application uses the same
// vector of distinct variables covering all declared ones; empty optional
// otherwise. An application-free spec yields the identity tuple.
inline std::optional<std::vector<int>> ssi_tuple(const SynthProblem& p,
                                                 const CondPtr& c) {
  std::vector<const Term*> apps;
  apps_in_cond_ref(c, p.fname, apps);
  std::vector<int> tuple;
  if (apps.empty()) {
    for (std::size_t i = 0; i < p.vars.size(); ++i) tuple.push_back((int)i);
    if (p.arity != p.vars.size()) tuple.clear();
    return tuple;
  }
  const Term* first = apps[0];
  if (first->args.size() != p.arity || p.arity != p.vars.size()) return {};
  std::vector<bool> seen(p.vars.size(), false);
  for (const TermPtr& a : first->args) {
    if (a->kind != Term::Kind::Var || a->var < 0 ||
        a->var >= (int)p.vars.size() || seen[a->var])
      return {};
    seen[a->var] = true;
    tuple.push_back(a->var);
  }
  for (const Term* app : apps) {
    if (app->args.size() != first->args.size()) return {};
    for (std::size_t i = 0; i < app->args.size(); ++i)
      if (!(app->args[i]->kind == Term::Kind::Var &&
            app->args[i]->var == tuple[i]))
        return {};
  }
  if (!one_app_per_atom(c, p.fname)) return {};
  return tuple;
}

inline void flatten_and(const CondPtr& c, std::vector<CondPtr>& out) {
  if (c->kind == Cond::Kind::And) {
    flatten_and(c->c1, out);
    flatten_and(c->c2, out);
  } else {
    out.push_back(c);
  }
}

}  // namespace detail

// Syntactic half of translational detection: every transition leaf must be
// x_i plus a combination of constants and never-shifted variables. The AT
// engine redoes this with full branch normalization; classify only needs
// the yes/no answer.
inline bool translational_shape(const SynthProblem& p) {
  if (!p.inv_parts) return false;
  std::size_t d = p.vars.size();
  std::vector<std::vector<std::pair<FormulaPtr, LinExpr>>> comp;
  try {
    for (const TermPtr& t : p.inv_parts->trans)
      comp.push_back(linearize_term(t, d));
  } catch (const std::exception&) {
    return false;
  }
  std::vector<bool> is_const(d, true);
  for (std::size_t i = 0; i < d; ++i)
    for (const auto& [g, lin] : comp[i])
      if (!(lin == LinExpr::variable(d, i))) is_const[i] = false;
  for (std::size_t i = 0; i < d; ++i)
    for (const auto& [g, lin] : comp[i]) {
      LinExpr delta = lin - LinExpr::variable(d, i);
      for (std::size_t j = 0; j < delta.coeffs.size(); ++j)
        if (delta.coeffs[j] != 0 && !is_const[j]) return false;
    }
  return true;
}

inline ProblemClass classify(const SynthProblem& p) {
  ProblemClass out;
  if (p.track == Track::INV) {
    if (translational_shape(p)) out.tag = ProblemClass::Tag::AT;
    return out;
  }
  if (p.return_sort != Sort::Int) return out;
  if (auto tuple = detail::ssi_tuple(p, p.spec)) {
    out.tag = ProblemClass::Tag::SSI;
    out.app_vars = *tuple;
    return out;
  }
  // f(x_a, x_b) = f(x_b, x_a) as a conjunct, the rest SSI (§3's extension).
  if (p.arity == 2 && p.vars.size() == 2) {
    std::vector<CondPtr> cs;
    detail::flatten_and(p.spec, cs);
    auto swapped_pair = [&](const CondPtr& a, const CondPtr& b) {
      if (a->kind != Cond::Kind::Geq || b->kind != Cond::Kind::Geq)
        return false;
      if (!term_eq(a->t1, b->t2) || !term_eq(a->t2, b->t1)) return false;
      const TermPtr& A = a->t1;
      const TermPtr& B = a->t2;
      if (A->kind != Term::Kind::App || B->kind != Term::Kind::App ||
          A->fn != p.fname || B->fn != p.fname)
        return false;
      if (A->args.size() != 2 || B->args.size() != 2) return false;
      for (const TermPtr& t : {A->args[0], A->args[1]})
        if (t->kind != Term::Kind::Var) return false;
      return A->args[0]->var != A->args[1]->var &&
             term_eq(A->args[0], B->args[1]) && term_eq(A->args[1], B->args[0]);
    };
    for (std::size_t i = 0; i < cs.size(); ++i)
      for (std::size_t j = 0; j < cs.size(); ++j) {
        if (i == j || !swapped_pair(cs[i], cs[j])) continue;
        std::vector<CondPtr> rest;
        for (std::size_t k = 0; k < cs.size(); ++k)
          if (k != i && k != j) rest.push_back(cs[k]);
        CondPtr psi = mk_and_all(rest);
        auto tuple = detail::ssi_tuple(p, psi);
        if (!tuple) continue;
        out.tag = ProblemClass::Tag::SSI_Commutative;
        out.app_vars = *tuple;
        out.comm_rest = psi;
        return out;
      }
  }
  return out;
}

// -------- solution output --------

inline std::string solution_header(const SynthProblem& p) {
  std::ostringstream os;
  os << "(define-fun " << p.fname << " (";
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    if (i) os << " ";
    os << "(" << p.params[i] << " Int)";
  }
  os << ") " << (p.return_sort == Sort::Int ? "Int" : "Bool") << " ";
  return os.str();
}

inline std::string print_solution(const SynthProblem& p, const TermPtr& body) {
  std::ostringstream os;
  os << solution_header(p);
  print_term(os, body, p.param_names());
  os << ")";
  return os.str();
}

inline std::string print_solution(const SynthProblem& p, const CondPtr& body) {
  std::ostringstream os;
  os << solution_header(p);
  print_cond(os, body, p.param_names());
  os << ")";
  return os.str();
}

}  // namespace concsynth
