#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#ifdef CONCSYNTH_AUDIT
#include <cstdio>
#include <cstdlib>
#endif
#include <cstdint>
#include <functional>
#include <optional>
#include <unordered_map>
#include <vector>

#include "concsynth/formula.hpp"
#include "concsynth/solver/diffgraph.hpp"
#include "concsynth/solver/omega.hpp"
#include "concsynth/solver/sat.hpp"

namespace concsynth {

enum class SatVerdict { Sat, Unsat, Unknown };

struct LiaResult {
  SatVerdict verdict = SatVerdict::Unknown;
  Valuation model;  // filled on Sat
};

namespace solver {

// DPLL(T) theory for linear integer arithmetic. Difference-form atoms are
// checked eagerly on the constraint graph; everything else is certified by
// the Omega test once the boolean assignment is total, which also yields
// the model.
class LiaTheory : public sat::Theory {
 public:
  LiaTheory(std::size_t dim, std::function<bool()> stop)
      : dim_(dim), graph_(dim), stop_(std::move(stop)) {}

  void register_geq(sat::Var v, LinExpr lin) {
    grow(v);
    atoms_[v] = Atom{Atom::Kind::Geq, std::move(lin), Int(0), Int(0)};
    const LinExpr& at = atoms_[v].lin;
    std::size_t pos, neg;
    if (classify_dl(at, pos, neg)) {
      std::size_t eu, ev;
      if (pos < at.coeffs.size() && neg < at.coeffs.size()) {
        eu = pos;
        ev = neg;
      } else if (pos < at.coeffs.size()) {
        eu = pos;
        ev = graph_.zero_node();
      } else {
        eu = graph_.zero_node();
        ev = neg;
      }
      dl_atoms_.push_back(DlAtom{(int)v, eu, ev, at.offset});
    }
  }

  void register_modeq(sat::Var v, LinExpr lin, Int m, Int r) {
    grow(v);
    atoms_[v] =
        Atom{Atom::Kind::ModEq, std::move(lin), std::move(m), std::move(r)};
  }

  bool on_assert(sat::Lit l, std::vector<sat::Lit>& conflict,
                 std::vector<sat::Lit>& implied) override {
    sat::Var v = sat::var_of(l);
    if ((std::size_t)v >= atoms_.size() ||
        atoms_[v].kind == Atom::Kind::None) {
      undo_.push_back(Action::None);
      return true;
    }
    const Atom& at = atoms_[v];
    if (at.kind == Atom::Kind::ModEq) {
      if (sat::sign_of(l)) {
        // The exactly-one encoding leaves the positive fact to a sibling
        // residue; the negative literal adds nothing.
        undo_.push_back(Action::None);
        return true;
      }
      asserted_.push_back(l);
      undo_.push_back(Action::Fact);
      ++hard_count_;
      return true;
    }
    LinExpr lin = at.lin;
    if (sat::sign_of(l)) {
      lin *= Int(-1);
      lin.offset -= 1;
    }
    std::size_t pos, neg;
    bool dl = classify_dl(lin, pos, neg);
    asserted_.push_back(l);
    assigned_[v] = 1;
    if (!dl) {
      undo_.push_back(Action::Fact);
      ++hard_count_;
      return true;
    }
    // lin >= 0 written as the <=-edge x_neg - x_pos <= offset.
    std::size_t eu, ev;
    if (pos < lin.coeffs.size() && neg < lin.coeffs.size()) {
      eu = pos;
      ev = neg;
    } else if (pos < lin.coeffs.size()) {
      eu = pos;
      ev = graph_.zero_node();
    } else {
      eu = graph_.zero_node();
      ev = neg;
    }
    undo_.push_back(Action::FactAndEdge);
    bool edge_ok = graph_.assert_edge(eu, ev, lin.offset, l, conflict);
#ifdef CONCSYNTH_AUDIT
    if (!edge_ok) audit_conflict("diffgraph", conflict, nullptr);
#endif
    if (edge_ok && graph_.last_relaxed() && !std::getenv("NOPROP")) propagate_edges(implied);
    return edge_ok;
  }

  void on_undo(sat::Lit) override {
    Action a = undo_.back();
    undo_.pop_back();
    if (a == Action::None) return;
    sat::Lit l = asserted_.back();
    asserted_.pop_back();
    assigned_[sat::var_of(l)] = 0;
    if (a == Action::FactAndEdge) {
      graph_.pop_edge();
    } else {
      --hard_count_;
    }
  }

  void explain(sat::Lit l, std::vector<sat::Lit>& clause) override {
    clause = expl_[(std::size_t)sat::var_of(l)];
  }

  const std::vector<DlAtom>& dl_atoms() const { return dl_atoms_; }

#ifdef CONCSYNTH_AUDIT
  static std::vector<Int> audit_point() {
    std::vector<Int> pt;
    const char* s = std::getenv("CONCSYNTH_AUDIT_POINT");
    if (!s) return pt;
    std::string tok;
    for (const char* p = s;; ++p) {
      if (*p == ',' || *p == '\0') {
        if (!tok.empty()) pt.push_back(Int(tok));
        tok.clear();
        if (*p == '\0') break;
      } else {
        tok += *p;
      }
    }
    return pt;
  }

  static bool audit_sat_at(const omega::Constraint& c,
                           const std::vector<Int>& pt) {
    Int v = c.lin.offset;
    for (std::size_t i = 0; i < c.lin.coeffs.size() && i < pt.size(); ++i)
      v += c.lin.coeffs[i] * pt[i];
    if (c.kind == omega::Constraint::Kind::Geq) return v >= 0;
    Int rm = v % c.m;
    if (rm < 0) rm += (c.m < 0 ? -c.m : c.m);
    return rm == c.r % c.m;
  }

  bool audit_lit_at(sat::Lit l, const std::vector<Int>& pt) const {
    const Atom& at = atoms_[sat::var_of(l)];
    omega::Constraint c;
    c.lin = at.lin;
    if (at.kind == Atom::Kind::ModEq) {
      c.kind = omega::Constraint::Kind::ModEq;
      c.m = at.m;
      c.r = at.r;
      bool v = audit_sat_at(c, pt);
      return sat::sign_of(l) ? !v : v;
    }
    c.kind = omega::Constraint::Kind::Geq;
    bool v = audit_sat_at(c, pt);
    return sat::sign_of(l) ? !v : v;
  }

  void audit_conflict(const char* site, const std::vector<sat::Lit>& conflict,
                      const std::vector<omega::Constraint>* cs) const {
    std::vector<Int> pt = audit_point();
    if (pt.empty() || conflict.empty()) return;
    for (sat::Lit l : conflict)
      if (!audit_lit_at(l, pt)) return;
    std::fprintf(stderr, "AUDIT[%s]: conflict of %zu literals is satisfied "
                         "by the audit point!\n", site, conflict.size());
    if (cs) {
      for (const auto& c : *cs) {
        std::fprintf(stderr, "  cons kind=%d offset=%s coeffs:",
                     (int)c.kind, c.lin.offset.get_str().c_str());
        for (const auto& co : c.lin.coeffs)
          std::fprintf(stderr, " %s", co.get_str().c_str());
        std::fprintf(stderr, "\n");
      }
    }
    std::abort();
  }
#endif

  long long fc_calls = 0, fc_us = 0, fc_hard = 0;
  bool final_check(std::vector<sat::Lit>& conflict) override {
    ++fc_calls;
    fc_hard += hard_count_;
    auto fc_t0 = std::chrono::steady_clock::now();
    struct FcTimer {
      long long& us;
      std::chrono::steady_clock::time_point t0;
      ~FcTimer() {
        us += std::chrono::duration_cast<std::chrono::microseconds>(
                  std::chrono::steady_clock::now() - t0)
                  .count();
      }
    } fc_timer{fc_us, fc_t0};
    if (hard_count_ == 0) {
      // Everything lives on the difference graph; its potential is a model.
      model_.assign(dim_, Int(0));
      for (std::size_t i = 0; i < dim_; ++i) model_[i] = graph_.model_value(i);
      return true;
    }
    std::vector<omega::Constraint> cs;
    cs.reserve(asserted_.size());
    for (sat::Lit l : asserted_) {
      const Atom& at = atoms_[sat::var_of(l)];
      omega::Constraint c;
      if (at.kind == Atom::Kind::ModEq) {
        c.kind = omega::Constraint::Kind::ModEq;
        c.lin = at.lin;
        c.m = at.m;
        c.r = at.r;
      } else {
        c.kind = omega::Constraint::Kind::Geq;
        c.lin = at.lin;
        if (sat::sign_of(l)) {
          c.lin *= Int(-1);
          c.lin.offset -= 1;
        }
      }
      cs.push_back(std::move(c));
    }
    omega::Result res = omega::solve(cs, dim_, stop_);
    if (res.kind == omega::Result::Kind::Unknown) {
      conflict.clear();  // give up
      return false;
    }
    if (res.kind == omega::Result::Kind::Sat) {
      model_ = res.model.values;
      model_.resize(dim_, Int(0));
      return true;
    }
    conflict.clear();
    for (int idx : res.core) conflict.push_back(asserted_[(std::size_t)idx]);
    if (conflict.empty()) conflict = asserted_;
#ifdef CONCSYNTH_AUDIT
    {
      std::vector<omega::Constraint> core_cs;
      for (int idx : res.core) core_cs.push_back(cs[(std::size_t)idx]);
      omega::Result re = omega::solve(core_cs, dim_, nullptr);
      if (re.kind == omega::Result::Kind::Sat) {
        std::fprintf(stderr,
                     "AUDIT[core]: omega core %zu/%zu is satisfiable!\n",
                     core_cs.size(), cs.size());
        audit_conflict("core-detail", conflict, &core_cs);
        for (const auto& c : core_cs) {
          std::fprintf(stderr, "  core kind=%d offset=%s coeffs:",
                       (int)c.kind, c.lin.offset.get_str().c_str());
          for (const auto& co : c.lin.coeffs)
            std::fprintf(stderr, " %s", co.get_str().c_str());
          std::fprintf(stderr, "\n");
        }
        std::abort();
      }
      audit_conflict("omega", conflict, &cs);
    }
#endif
    return false;
  }

  bool should_stop() override { return stop_ && stop_(); }

  const std::vector<Int>& model() const { return model_; }

 private:
  struct Atom {
    enum class Kind : std::uint8_t { None, Geq, ModEq };
    Kind kind = Kind::None;
    LinExpr lin;
    Int m, r;
  };

  enum class Action : std::uint8_t { None, Fact, FactAndEdge };

  void grow(sat::Var v) {
    if ((std::size_t)v >= atoms_.size()) {
      atoms_.resize(v + 1);
      assigned_.resize(v + 1, 0);
      expl_.resize(v + 1);
    }
  }

  // lin is difference-form when every coefficient is a unit and there is
  // either a single variable or one of each sign. pos/neg index the +1/-1
  // coefficients (coeffs.size() when absent).
  static bool classify_dl(const LinExpr& lin, std::size_t& pos,
                          std::size_t& neg) {
    pos = lin.coeffs.size();
    neg = lin.coeffs.size();
    int nonzero = 0;
    for (std::size_t i = 0; i < lin.coeffs.size(); ++i) {
      if (lin.coeffs[i] == 0) continue;
      ++nonzero;
      if (lin.coeffs[i] == 1)
        pos = i;
      else if (lin.coeffs[i] == -1)
        neg = i;
      else
        return false;
    }
    return nonzero == 1 ||
           (nonzero == 2 && pos < lin.coeffs.size() &&
            neg < lin.coeffs.size());
  }

  void propagate_edges(std::vector<sat::Lit>& implied) {
    imps_.clear();
    graph_.propagate_new_edge(
        dl_atoms_, [this](int id) { return !assigned_[(std::size_t)id]; },
        imps_);
    for (const DlImplication& imp : imps_) {
      sat::Lit il = sat::mk_lit((sat::Var)imp.id, imp.negated);
      auto& cl = expl_[(std::size_t)imp.id];
      cl.clear();
      cl.push_back(il);
      for (int t : imp.tags) cl.push_back(sat::neg(t));
      implied.push_back(il);
    }
  }

  std::size_t dim_;
  DiffGraph graph_;
  std::function<bool()> stop_;
  std::vector<Atom> atoms_;
  std::vector<char> assigned_;
  std::vector<std::vector<sat::Lit>> expl_;
  std::vector<DlAtom> dl_atoms_;
  std::vector<DlImplication> imps_;
  std::vector<sat::Lit> asserted_;
  std::vector<Action> undo_;
  std::size_t hard_count_ = 0;  // asserted facts the graph cannot carry
  std::vector<Int> model_;
};

// Tseitin encoder with atom-level and node-level sharing. Modulo atoms
// over the same expression and modulus form a family with an exactly-one
// constraint over the residues, so their negations need no theory work.
class Encoder {
 public:
  Encoder(sat::Solver& sat, LiaTheory& theory) : sat_(sat), theory_(theory) {}

  bool assert_top(const FormulaPtr& f) {
    if (f->kind == Formula::Kind::And) {
      bool ok = true;
      for (const auto& k : f->kids) ok = assert_top(k) && ok;
      return ok;
    }
    if (is_true(f)) return true;
    if (is_false(f)) return false;
    return sat_.add_clause({encode(f)});
  }

#ifdef CONCSYNTH_AUDIT
  void audit_seed(sat::Solver& s) {
    std::vector<Int> pt = LiaTheory::audit_point();
    if (pt.empty()) return;
    Valuation val;
    val.values = pt;
    for (const auto& [f, lit] : audit_nodes_) {
      bool tv = formula_eval(f, val);
      s.audit_expect(sat::var_of(lit), sat::sign_of(lit) ? !tv : tv);
    }
    if (true_var_ >= 0) s.audit_expect(true_var_, true);
    for (const Family& fam : families_) {
      Int v = fam.lin.offset;
      for (std::size_t i = 0; i < fam.lin.coeffs.size() && i < pt.size(); ++i)
        v += fam.lin.coeffs[i] * pt[i];
      Int rm = v % fam.m;
      if (rm < 0) rm += fam.m;
      for (std::size_t i = 0; i < fam.residue_vars.size(); ++i)
        s.audit_expect(fam.residue_vars[i], Int((long)i) == rm);
    }
  }
  std::vector<std::pair<FormulaPtr, sat::Lit>> audit_nodes_;
#endif

  void finish_families() {
    for (Family& fam : families_) {
      if (fam.closed) continue;
      fam.closed = true;
      std::vector<sat::Lit> alo;
      for (sat::Var v : fam.residue_vars) alo.push_back(sat::mk_lit(v));
      sat_.add_clause(alo);
      for (std::size_t i = 0; i < fam.residue_vars.size(); ++i)
        for (std::size_t j = i + 1; j < fam.residue_vars.size(); ++j)
          sat_.add_clause({sat::mk_lit(fam.residue_vars[i], true),
                           sat::mk_lit(fam.residue_vars[j], true)});
    }
    if (!std::getenv("NOLEM")) add_dl_lemmas();
  }

 private:
  struct Family {
    LinExpr lin;
    Int m;
    std::vector<sat::Var> residue_vars;
    bool closed = false;
  };

  // Bounded saturation over the registered difference atoms. Each atom
  // contributes two directed bound edges (itself and its negation); any
  // two edges that chain onto a third registered bound, or close a
  // negative two-cycle, yield a lemma clause. Learning these up front
  // lets unit propagation retain transitivity facts across backtracking,
  // which the lazy graph checks alone cannot.
  void add_dl_lemmas() {
    struct BoundEdge {
      std::size_t p, q;
      Int k;
      sat::Lit l;
    };
    std::vector<BoundEdge> edges;
    for (const DlAtom& a : theory_.dl_atoms()) {
      edges.push_back({a.u, a.v, a.c, sat::mk_lit((sat::Var)a.id, false)});
      edges.push_back({a.v, a.u, -a.c - 1, sat::mk_lit((sat::Var)a.id, true)});
    }
    if (edges.size() < 2) return;
    auto pair_less = [](const BoundEdge& x, const BoundEdge& y) {
      if (x.p != y.p) return x.p < y.p;
      if (x.q != y.q) return x.q < y.q;
      return x.k < y.k;
    };
    std::sort(edges.begin(), edges.end(), pair_less);
    // A tighter bound on a pair implies every looser one.
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      const BoundEdge& a = edges[i];
      const BoundEdge& b = edges[i + 1];
      if (a.p == b.p && a.q == b.q)
        sat_.add_clause({sat::neg(a.l), b.l});
    }
    std::unordered_map<std::size_t, std::vector<std::size_t>> by_src;
    for (std::size_t i = 0; i < edges.size(); ++i)
      by_src[edges[i].p].push_back(i);
    std::size_t work = 0;
    for (const BoundEdge& e : edges) {
      auto it = by_src.find(e.q);
      if (it != by_src.end()) work += it->second.size();
    }
    if (work > 300000) return;
    long long nlem = 0;
    for (const BoundEdge& e1 : edges) {
      auto it = by_src.find(e1.q);
      if (it == by_src.end()) continue;
      for (std::size_t j : it->second) {
        const BoundEdge& e2 = edges[j];
        if (sat::var_of(e1.l) == sat::var_of(e2.l)) continue;
        Int sum = e1.k + e2.k;
        if (e1.p == e2.q) {
          if (sum < 0) {
            sat_.add_clause({sat::neg(e1.l), sat::neg(e2.l)});
            ++nlem;
          }
          continue;
        }
        BoundEdge probe{e1.p, e2.q, sum, 0};
        auto hit = std::lower_bound(edges.begin(), edges.end(), probe,
                                    pair_less);
        if (hit != edges.end() && hit->p == e1.p && hit->q == e2.q) {
          sat_.add_clause({sat::neg(e1.l), sat::neg(e2.l), hit->l});
          ++nlem;
        }
      }
    }
    if (std::getenv("LEMSTATS"))
      std::fprintf(stderr, "lemmas: atoms=%zu edges=%zu work=%zu added=%lld\n",
                   theory_.dl_atoms().size(), edges.size(), work, nlem);
  }

  sat::Lit encode(const FormulaPtr& f) {
    auto it = node_memo_.find(f.get());
    if (it != node_memo_.end()) return it->second;
    sat::Lit lit;
    switch (f->kind) {
      case Formula::Kind::True:
        lit = sat::mk_lit(true_var());
        break;
      case Formula::Kind::False:
        lit = sat::neg(sat::mk_lit(true_var()));
        break;
      case Formula::Kind::Geq:
        lit = sat::mk_lit(geq_var(f->lin));
        break;
      case Formula::Kind::ModEq:
        lit = sat::mk_lit(mod_var(f->lin, f->m, f->r));
        break;
      case Formula::Kind::Not:
        lit = sat::neg(encode(f->kids[0]));
        break;
      case Formula::Kind::And:
      case Formula::Kind::Or: {
        std::vector<sat::Lit> kids;
        kids.reserve(f->kids.size());
        for (const auto& k : f->kids) kids.push_back(encode(k));
        sat::Var g = sat_.new_var();
        lit = sat::mk_lit(g);
        bool conj = f->kind == Formula::Kind::And;
        std::vector<sat::Lit> big;
        big.push_back(conj ? lit : sat::neg(lit));
        for (sat::Lit k : kids) {
          sat_.add_clause(conj ? std::vector<sat::Lit>{sat::neg(lit), k}
                               : std::vector<sat::Lit>{lit, sat::neg(k)});
          big.push_back(conj ? sat::neg(k) : k);
        }
        sat_.add_clause(std::move(big));
        break;
      }
      default:
        throw std::logic_error("unreachable");
    }
    node_memo_.emplace(f.get(), lit);
#ifdef CONCSYNTH_AUDIT
    audit_nodes_.push_back({f, lit});
#endif
    return lit;
  }

  sat::Var true_var() {
    if (true_var_ < 0) {
      true_var_ = sat_.new_var();
      sat_.add_clause({sat::mk_lit(true_var_)});
    }
    return true_var_;
  }

  sat::Var geq_var(const LinExpr& lin) {
    std::size_t h = linexpr_hash(lin);
    for (const auto& [l, v] : geq_atoms_[h])
      if (l == lin) return v;
    sat::Var v = sat_.new_var();
    theory_.register_geq(v, lin);
    geq_atoms_[h].push_back({lin, v});
    return v;
  }

  sat::Var mod_var(const LinExpr& lin, const Int& m, const Int& r) {
    std::size_t h = linexpr_hash(lin);
    hash_combine(h, int_hash(m));
    auto& bucket = families_by_hash_[h];
    for (std::size_t fi : bucket) {
      const Family& fam = families_[fi];
      if (fam.lin == lin && fam.m == m)
        return fam.residue_vars[(std::size_t)to_long(r)];
    }
    Family fam;
    fam.lin = lin;
    fam.m = m;
    for (Int i(0); i < m; ++i) {
      sat::Var v = sat_.new_var();
      theory_.register_modeq(v, lin, m, i);
      fam.residue_vars.push_back(v);
    }
    bucket.push_back(families_.size());
    families_.push_back(std::move(fam));
    return families_.back().residue_vars[(std::size_t)to_long(r)];
  }

  sat::Solver& sat_;
  LiaTheory& theory_;
  std::unordered_map<const Formula*, sat::Lit> node_memo_;
  std::unordered_map<std::size_t, std::vector<std::pair<LinExpr, sat::Var>>>
      geq_atoms_;
  std::unordered_map<std::size_t, std::vector<std::size_t>> families_by_hash_;
  std::vector<Family> families_;
  sat::Var true_var_ = -1;
};

}  // namespace solver

// Satisfiability of a conjunction of formulas over `dim` integer variables.
class LiaSolver {
 public:
  explicit LiaSolver(std::size_t dim) : dim_(dim) {}

  void assert_formula(FormulaPtr f) { asserted_.push_back(std::move(f)); }

  LiaResult check(std::function<bool()> stop = nullptr) {
    sat::Solver sat;
    solver::LiaTheory theory(dim_, stop);
    sat.set_theory(&theory);
    solver::Encoder enc(sat, theory);
    bool ok = true;
    for (const auto& f : asserted_) ok = enc.assert_top(f) && ok;
    LiaResult res;
    if (!ok || !sat.ok()) {
      res.verdict = SatVerdict::Unsat;
      return res;
    }
    enc.finish_families();
#ifdef CONCSYNTH_AUDIT
    enc.audit_seed(sat);
    sat.audit_all();
#endif
    switch (sat.solve()) {
      case sat::Solver::Result::Sat:
        res.verdict = SatVerdict::Sat;
        res.model.values = theory.model();
        res.model.values.resize(dim_, Int(0));
        break;
      case sat::Solver::Result::Unsat:
        res.verdict = SatVerdict::Unsat;
        break;
      case sat::Solver::Result::Unknown:
        res.verdict = SatVerdict::Unknown;
        break;
    }
    return res;
  }

 private:
  std::size_t dim_;
  std::vector<FormulaPtr> asserted_;
};

// One-shot convenience used across the engines.
inline LiaResult lia_check(const std::vector<FormulaPtr>& fs, std::size_t dim,
                           std::function<bool()> stop = nullptr) {
  LiaSolver s(dim);
  for (const auto& f : fs) s.assert_formula(f);
  return s.check(std::move(stop));
}

}  // namespace concsynth
