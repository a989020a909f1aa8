#pragma once

#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "concsynth/formula.hpp"
#include "concsynth/sexpr.hpp"
#include "concsynth/solver/lia.hpp"

namespace concsynth {

// SMT-LIB2 read-eval loop over the built-in QF_LIA engine: enough of the
// standard to serve as a check-sat/get-value backend (declare-const,
// assert with full boolean structure, ite, mod/div by constants, push/pop,
// reset). Terms with mod/div/ite are flattened by introducing defined
// auxiliary variables, which is satisfiability- and model-preserving since
// each auxiliary is functionally determined.
class SmtLibServer {
 public:
  // Serves commands until (exit) or end of input. Returns the exit code.
  int run(std::istream& in, std::ostream& out) {
    std::string pending;
    int depth = 0;
    bool comment = false;
    bool in_str = false;
    char c;
    while (in.get(c)) {
      if (comment) {
        if (c == '\n') comment = false;
        continue;
      }
      if (!in_str && c == ';') {
        comment = true;
        continue;
      }
      if (c == '"') in_str = !in_str;
      if (!in_str && c == '(') ++depth;
      if (!in_str && c == ')') --depth;
      pending += c;
      if (depth == 0 && c == ')') {
        if (!execute(pending, out)) return 0;
        pending.clear();
      }
    }
    return 0;
  }

 private:
  struct Frame {
    std::size_t nvars;
    std::size_t nasserts;
  };

  bool execute(const std::string& text, std::ostream& out) {
    Sexpr cmd;
    try {
      SexprReader reader(text);
      if (!reader.next(cmd)) return true;
      return dispatch(cmd, out);
    } catch (const std::exception& e) {
      out << "(error \"" << e.what() << "\")\n" << std::flush;
      return true;
    }
  }

  bool dispatch(const Sexpr& cmd, std::ostream& out) {
    if (cmd.is_atom || cmd.size() == 0 || !cmd[0].is_atom)
      throw std::runtime_error("malformed command");
    const std::string& head = cmd[0].atom;
    if (head == "exit") return false;
    if (head == "set-logic" || head == "set-option" || head == "set-info") {
      return true;
    }
    if (head == "echo") {
      out << (cmd.size() > 1 ? cmd[1].atom : "") << "\n" << std::flush;
      return true;
    }
    if (head == "reset") {
      names_.clear();
      index_.clear();
      asserts_.clear();
      frames_.clear();
      aux_count_ = 0;
      have_model_ = false;
      return true;
    }
    if (head == "push" || head == "pop") {
      long n = 1;
      if (cmd.size() > 1) n = std::stol(cmd[1].atom);
      for (; n > 0; --n) {
        if (head == "push") {
          frames_.push_back({names_.size(), asserts_.size()});
          continue;
        }
        if (frames_.empty()) throw std::runtime_error("pop without push");
        Frame f = frames_.back();
        frames_.pop_back();
        while (names_.size() > f.nvars) {
          index_.erase(names_.back());
          names_.pop_back();
        }
        asserts_.resize(f.nasserts);
        have_model_ = false;
      }
      return true;
    }
    if (head == "declare-const" || head == "declare-fun") {
      if (cmd.size() < 3 || !cmd[1].is_atom)
        throw std::runtime_error("malformed declaration");
      const Sexpr& sort = cmd[cmd.size() - 1];
      if (head == "declare-fun" &&
          (cmd.size() != 4 || cmd[2].is_atom || cmd[2].size() != 0))
        throw std::runtime_error("only 0-ary declare-fun is supported");
      if (!sort.is("Int"))
        throw std::runtime_error("unsupported sort " + sort.str());
      declare(cmd[1].atom);
      return true;
    }
    if (head == "assert") {
      if (cmd.size() != 2) throw std::runtime_error("malformed assert");
      std::vector<FormulaPtr> defs;
      FormulaPtr f = tr_bool(cmd[1], defs);
      for (auto& d : defs) asserts_.push_back(std::move(d));
      asserts_.push_back(std::move(f));
      return true;
    }
    if (head == "check-sat") {
      LiaResult r = lia_check(asserts_, names_.size());
      switch (r.verdict) {
        case SatVerdict::Sat:
          model_ = r.model.values;
          have_model_ = true;
          out << "sat\n" << std::flush;
          break;
        case SatVerdict::Unsat:
          have_model_ = false;
          out << "unsat\n" << std::flush;
          break;
        case SatVerdict::Unknown:
          have_model_ = false;
          out << "unknown\n" << std::flush;
          break;
      }
      return true;
    }
    if (head == "get-value") {
      if (!have_model_)
        throw std::runtime_error("no model available");
      if (cmd.size() != 2 || cmd[1].is_atom)
        throw std::runtime_error("malformed get-value");
      out << '(';
      for (std::size_t i = 0; i < cmd[1].size(); ++i) {
        const Sexpr& sym = cmd[1][i];
        if (!sym.is_atom || !index_.count(sym.atom) ||
            index_[sym.atom] >= model_.size())
          throw std::runtime_error("get-value of an unmodeled symbol");
        if (i) out << ' ';
        out << '(' << sym.atom << ' ';
        print_int(out, model_[index_[sym.atom]]);
        out << ')';
      }
      out << ")\n" << std::flush;
      return true;
    }
    if (head == "get-model") {
      if (!have_model_)
        throw std::runtime_error("no model available");
      out << '(';
      for (std::size_t i = 0; i < names_.size() && i < model_.size(); ++i) {
        if (is_aux(names_[i])) continue;
        out << "(define-fun " << names_[i] << " () Int ";
        print_int(out, model_[i]);
        out << ')';
      }
      out << ")\n" << std::flush;
      return true;
    }
    throw std::runtime_error("unsupported command " + head);
  }

  static bool is_aux(const std::string& n) {
    return n.size() > 1 && n[0] == '.';
  }

  std::size_t declare(const std::string& name) {
    auto it = index_.find(name);
    if (it != index_.end()) return it->second;
    std::size_t idx = names_.size();
    names_.push_back(name);
    index_[name] = idx;
    return idx;
  }

  std::size_t fresh_aux() { return declare(".aux" + std::to_string(aux_count_++)); }

  LinExpr var_expr(std::size_t idx) const {
    LinExpr e(names_.size());
    e.coeffs[idx] = 1;
    return e;
  }

  static Int require_const(const LinExpr& e, const char* what) {
    if (!e.is_constant())
      throw std::runtime_error(std::string(what) + " requires a constant");
    return e.offset;
  }

  LinExpr tr_term(const Sexpr& e, std::vector<FormulaPtr>& defs) {
    if (e.is_atom) {
      const std::string& a = e.atom;
      if (!a.empty() && (std::isdigit((unsigned char)a[0]) ||
                         (a[0] == '-' && a.size() > 1)))
        return LinExpr::constant(names_.size(), Int(a));
      auto it = index_.find(a);
      if (it == index_.end())
        throw std::runtime_error("undeclared symbol " + a);
      return var_expr(it->second);
    }
    if (e.size() == 0 || !e[0].is_atom)
      throw std::runtime_error("malformed term " + e.str());
    const std::string& op = e[0].atom;
    if (op == "+") {
      LinExpr acc(names_.size());
      for (std::size_t i = 1; i < e.size(); ++i) acc += tr_term(e[i], defs);
      return acc;
    }
    if (op == "-") {
      if (e.size() == 2) return -tr_term(e[1], defs);
      LinExpr acc = tr_term(e[1], defs);
      for (std::size_t i = 2; i < e.size(); ++i) acc -= tr_term(e[i], defs);
      return acc;
    }
    if (op == "*") {
      bool seen_linear = false;
      Int scale(1);
      LinExpr linear(names_.size());
      for (std::size_t i = 1; i < e.size(); ++i) {
        LinExpr t = tr_term(e[i], defs);
        if (t.is_constant()) {
          scale *= t.offset;
        } else if (!seen_linear) {
          seen_linear = true;
          linear = t;
        } else {
          throw std::runtime_error("nonlinear product in " + e.str());
        }
      }
      if (!seen_linear) return LinExpr::constant(names_.size(), scale);
      linear *= scale;
      return linear;
    }
    if (op == "mod" || op == "div") {
      if (e.size() != 3) throw std::runtime_error("malformed " + op);
      LinExpr body = tr_term(e[1], defs);
      Int m = require_const(tr_term(e[2], defs), "mod/div divisor");
      if (m <= 0)
        throw std::runtime_error("mod/div by a non-positive constant");
      // body = m*q + r, 0 <= r < m; q and r are functionally determined.
      std::size_t q = fresh_aux();
      std::size_t r = fresh_aux();
      LinExpr qv = var_expr(q), rv = var_expr(r);
      LinExpr eq = body - (m * qv) - rv;
      defs.push_back(f_and({f_geq(eq), f_geq(-eq), f_geq(rv),
                            f_geq(LinExpr::constant(names_.size(), m - 1) -
                                  rv)}));
      return op == "mod" ? rv : qv;
    }
    if (op == "ite") {
      if (e.size() != 4) throw std::runtime_error("malformed ite");
      FormulaPtr g = tr_bool(e[1], defs);
      LinExpr a = tr_term(e[2], defs);
      LinExpr b = tr_term(e[3], defs);
      std::size_t t = fresh_aux();
      LinExpr tv = var_expr(t);
      LinExpr da = tv - a, db = tv - b;
      defs.push_back(f_and2(
          f_implies(g, f_and2(f_geq(da), f_geq(-da))),
          f_implies(f_not(g), f_and2(f_geq(db), f_geq(-db)))));
      return tv;
    }
    if (op == "abs") {
      if (e.size() != 2) throw std::runtime_error("malformed abs");
      LinExpr body = tr_term(e[1], defs);
      std::size_t t = fresh_aux();
      LinExpr tv = var_expr(t);
      LinExpr da = tv - body, db = tv + body;
      defs.push_back(f_and({f_geq(tv),
                            f_implies(f_geq(body), f_and2(f_geq(da), f_geq(-da))),
                            f_implies(f_not(f_geq(body)),
                                      f_and2(f_geq(db), f_geq(-db)))}));
      return tv;
    }
    throw std::runtime_error("unsupported term operator " + op);
  }

  FormulaPtr tr_bool(const Sexpr& e, std::vector<FormulaPtr>& defs) {
    if (e.is_atom) {
      if (e.is("true")) return f_true();
      if (e.is("false")) return f_false();
      throw std::runtime_error("boolean symbols are not supported: " + e.atom);
    }
    if (e.size() == 0 || !e[0].is_atom)
      throw std::runtime_error("malformed formula " + e.str());
    const std::string& op = e[0].atom;
    if (op == "and" || op == "or") {
      std::vector<FormulaPtr> kids;
      for (std::size_t i = 1; i < e.size(); ++i)
        kids.push_back(tr_bool(e[i], defs));
      return op == "and" ? f_and(std::move(kids)) : f_or(std::move(kids));
    }
    if (op == "not") {
      if (e.size() != 2) throw std::runtime_error("malformed not");
      return f_not(tr_bool(e[1], defs));
    }
    if (op == "=>") {
      if (e.size() < 3) throw std::runtime_error("malformed =>");
      FormulaPtr acc = tr_bool(e[e.size() - 1], defs);
      for (std::size_t i = e.size() - 1; i-- > 1;)
        acc = f_implies(tr_bool(e[i], defs), acc);
      return acc;
    }
    if (op == "ite") {
      if (e.size() != 4) throw std::runtime_error("malformed ite");
      FormulaPtr g = tr_bool(e[1], defs);
      return f_or2(f_and2(g, tr_bool(e[2], defs)),
                   f_and2(f_not(g), tr_bool(e[3], defs)));
    }
    if (op == "=" || op == ">=" || op == "<=" || op == ">" || op == "<" ||
        op == "distinct") {
      if (e.size() < 3) throw std::runtime_error("malformed " + op);
      std::vector<LinExpr> ts;
      for (std::size_t i = 1; i < e.size(); ++i)
        ts.push_back(tr_term(e[i], defs));
      std::vector<FormulaPtr> conj;
      if (op == "distinct") {
        for (std::size_t i = 0; i < ts.size(); ++i)
          for (std::size_t j = i + 1; j < ts.size(); ++j) {
            LinExpr d = ts[i] - ts[j];
            conj.push_back(f_not(f_and2(f_geq(d), f_geq(-d))));
          }
        return f_and(std::move(conj));
      }
      for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
        LinExpr d = ts[i] - ts[i + 1];
        if (op == "=")
          conj.push_back(f_and2(f_geq(d), f_geq(-d)));
        else if (op == ">=")
          conj.push_back(f_geq(d));
        else if (op == "<=")
          conj.push_back(f_geq(-d));
        else if (op == ">") {
          d.offset -= 1;
          conj.push_back(f_geq(d));
        } else {
          LinExpr nd = -d;
          nd.offset -= 1;
          conj.push_back(f_geq(nd));
        }
      }
      return f_and(std::move(conj));
    }
    throw std::runtime_error("unsupported operator " + op);
  }

  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<FormulaPtr> asserts_;
  std::vector<Frame> frames_;
  std::size_t aux_count_ = 0;
  std::vector<Int> model_;
  bool have_model_ = false;
};

}  // namespace concsynth
