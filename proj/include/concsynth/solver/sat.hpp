#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef CONCSYNTH_AUDIT
#include <cstdio>
#include <cstdlib>
#endif

namespace concsynth::sat {

using Var = int;  // 0-based
using Lit = int;  // 2*var + sign, sign 1 = negated

inline Lit mk_lit(Var v, bool negated = false) {
  return 2 * v + (negated ? 1 : 0);
}
inline Lit neg(Lit l) { return l ^ 1; }
inline Var var_of(Lit l) { return l >> 1; }
inline bool sign_of(Lit l) { return l & 1; }

enum class Val : uint8_t { False = 0, True = 1, Undef = 2 };

// Plugin for the arithmetic theory. The SAT core reports every literal it
// commits to (in trail order), undoes them in reverse order on backtrack,
// and asks for a final verdict once the assignment is total. Conflicts are
// returned as a set of currently-true literals whose conjunction the theory
// refutes. on_assert may also report implied literals; each must stay
// explainable via explain() (clause form, the literal first) while it
// remains assigned.
struct Theory {
  virtual ~Theory() = default;
  virtual bool on_assert(Lit l, std::vector<Lit>& conflict,
                         std::vector<Lit>& implied) = 0;
  virtual void on_undo(Lit l) = 0;
  virtual bool final_check(std::vector<Lit>& conflict) = 0;
  virtual void explain(Lit, std::vector<Lit>&) {}
  virtual bool should_stop() { return false; }
};

class Solver {
 public:
  enum class Result { Sat, Unsat, Unknown };

#ifdef CONCSYNTH_AUDIT
  std::vector<char> audit_truth_;  // var -> expected value, 2 = unknown
  void audit_expect(Var v, bool t) {
    if ((std::size_t)v >= audit_truth_.size())
      audit_truth_.resize(v + 1, 2);
    audit_truth_[v] = t ? 1 : 0;
  }
  void audit_all() const {
    for (const auto& c : clauses_) audit_clause(c, "initial");
    for (Lit l : trail_) audit_clause({l}, "initial-unit");
  }
  bool audit_clause(const std::vector<Lit>& c, const char* site) const {
    if (audit_truth_.empty()) return true;
    for (Lit l : c) {
      Var v = var_of(l);
      if ((std::size_t)v >= audit_truth_.size() || audit_truth_[v] == 2)
        return true;
      bool tv = audit_truth_[v] == 1;
      if (sign_of(l) ? !tv : tv) return true;
    }
    std::fprintf(stderr, "AUDIT[%s]: clause of %zu lits false under the "
                         "expected assignment:", site, c.size());
    for (Lit l : c)
      std::fprintf(stderr, " %s%d", sign_of(l) ? "-" : "", var_of(l));
    std::fprintf(stderr, "\n");
    std::abort();
  }
#endif

  Var new_var() {
    Var v = (Var)assigns_.size();
    assigns_.push_back(Val::Undef);
    level_.push_back(0);
    reason_.push_back(-1);
    activity_.push_back(0.0);
    saved_phase_.push_back(false);
    seen_.push_back(0);
    heap_index_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
  }

  int num_vars() const { return (int)assigns_.size(); }

  struct Stats {
    std::int64_t decisions = 0;
    std::int64_t conflicts = 0;
    std::int64_t propagations = 0;
    std::int64_t restarts = 0;
    std::int64_t theory_conflicts = 0;
  };
  const Stats& stats() const { return stats_; }

  Val value(Lit l) const {
    Val v = assigns_[var_of(l)];
    if (v == Val::Undef) return v;
    return sign_of(l) ? (v == Val::True ? Val::False : Val::True) : v;
  }

  Val value_var(Var v) const { return assigns_[v]; }

  void set_theory(Theory* t) { theory_ = t; }

  bool ok() const { return ok_; }

  // Clauses may be added only before solve(); duplicates and satisfied
  // clauses are simplified away at level 0.
  bool add_clause(std::vector<Lit> lits) {
    if (!ok_) return false;
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> out;
    Lit prev = -1;
    for (Lit l : lits) {
      if (l == prev) continue;
      if (l == neg(prev) && prev != -1) return true;  // tautology
      if (value(l) == Val::True && level_[var_of(l)] == 0) return true;
      if (value(l) == Val::False && level_[var_of(l)] == 0) {
        prev = l;
        continue;
      }
      out.push_back(l);
      prev = l;
    }
    if (out.empty()) {
      ok_ = false;
      return false;
    }
    if (out.size() == 1) {
#ifdef CONCSYNTH_AUDIT
      audit_clause(out, "unit");
#endif
      if (value(out[0]) == Val::False) {
        ok_ = false;
        return false;
      }
      if (value(out[0]) == Val::Undef) unchecked_enqueue(out[0], -1);
      return true;
    }
    attach(add_clause_internal(std::move(out)));
    return true;
  }

  Result solve() {
    if (!ok_) return Result::Unsat;
    if (max_learnts_ == 0)
      max_learnts_ = 2000 + (std::int64_t)clauses_.size() / 3;
    int restart_count = 0;
    std::int64_t conflicts_left = luby(restart_count) * kRestartBase;
    std::vector<Lit> theory_conflict;
    std::vector<Lit> theory_implied;
    for (std::int64_t steps = 0;; ++steps) {
      if ((steps & 0xff) == 0 && theory_ && theory_->should_stop())
        return Result::Unknown;
      int confl = propagate();
      if (confl == -1 && theory_) {
        // Feed fresh trail literals to the theory.
        while (theory_qhead_ < trail_.size()) {
          Lit l = trail_[theory_qhead_];
          theory_conflict.clear();
          theory_implied.clear();
          if (!theory_->on_assert(l, theory_conflict, theory_implied)) {
            ++theory_qhead_;
            if (!resolve_theory_conflict(theory_conflict, restart_count,
                                         conflicts_left))
              return Result::Unsat;
            confl = -2;  // handled
            break;
          }
          ++theory_qhead_;
          for (Lit il : theory_implied) {
            Val v = value(il);
            if (v == Val::True) continue;
            if (v == Val::False) {
              // The explanation clause is falsified outright; turn it into
              // a conflict over its true-literal complement.
              std::vector<Lit> expl;
              theory_->explain(il, expl);
              theory_conflict.clear();
              for (Lit e : expl) theory_conflict.push_back(neg(e));
              if (!resolve_theory_conflict(theory_conflict, restart_count,
                                           conflicts_left))
                return Result::Unsat;
              confl = -2;
              break;
            }
            unchecked_enqueue(il, kTheoryReason);
            ++stats_.propagations;
          }
          if (confl == -2) break;
        }
        if (confl == -2) continue;
        // Implied literals still need boolean propagation before the
        // assignment can be judged total.
        if (qhead_ < trail_.size()) continue;
      }
      if (confl >= 0) {
        ++stats_.conflicts;
        if (decision_level() == 0) return Result::Unsat;
        std::vector<Lit> learnt;
        int bt;
        analyze(confl, nullptr, learnt, bt);
        commit_learnt(std::move(learnt), bt);
        if (--conflicts_left <= 0) {
          ++stats_.restarts;
          ++restart_count;
          conflicts_left = luby(restart_count) * kRestartBase;
          cancel_until(0);
        }
        continue;
      }
      if (trail_.size() == assigns_.size()) {
        if (theory_) {
          theory_conflict.clear();
          if (!theory_->final_check(theory_conflict)) {
            // Empty conflict means the theory gave up (budget exhausted).
            if (theory_conflict.empty()) return Result::Unknown;
            if (!resolve_theory_conflict(theory_conflict, restart_count,
                                         conflicts_left))
              return Result::Unsat;
            continue;
          }
        }
        return Result::Sat;
      }
      // Decide.
      Var next = -1;
      while (!heap_.empty()) {
        Var v = heap_pop();
        if (assigns_[v] == Val::Undef) {
          next = v;
          break;
        }
      }
      if (next == -1) {
        for (Var v = 0; v < (Var)assigns_.size(); ++v)
          if (assigns_[v] == Val::Undef) {
            next = v;
            break;
          }
      }
      ++stats_.decisions;
      trail_lim_.push_back(trail_.size());
      unchecked_enqueue(mk_lit(next, !saved_phase_[next]), -1);
    }
  }

 private:
  struct Watch {
    int cref;
    Lit blocker;
  };

  static constexpr std::int64_t kRestartBase = 128;
  // Reason marker for literals enqueued by theory propagation; their
  // explanation clause is fetched lazily from the theory during analyze.
  static constexpr int kTheoryReason = -2;

  static std::int64_t luby(int x) {
    // Luby sequence 1,1,2,1,1,2,4,...
    std::int64_t size = 1;
    int seq = 0;
    while (size < x + 1) {
      ++seq;
      size = 2 * size + 1;
    }
    while (size - 1 != x) {
      size = (size - 1) / 2;
      --seq;
      x = x % (int)size;
    }
    return (std::int64_t)1 << seq;
  }

  int decision_level() const { return (int)trail_lim_.size(); }

  int add_clause_internal(std::vector<Lit> lits, bool learnt = false) {
#ifdef CONCSYNTH_AUDIT
    audit_clause(lits, learnt ? "learnt" : "clause");
#endif
    clauses_.push_back(std::move(lits));
    learnt_.push_back(learnt ? 1 : 0);
    deleted_.push_back(0);
    cact_.push_back(0.0);
    return (int)clauses_.size() - 1;
  }

  bool locked(int cref) const {
    Lit l = clauses_[cref][0];
    return value(l) == Val::True && reason_[var_of(l)] == cref;
  }

  void bump_clause(int cref) {
    if (!learnt_[cref]) return;
    cact_[cref] += cla_inc_;
    if (cact_[cref] > 1e20) {
      for (double& a : cact_) a *= 1e-20;
      cla_inc_ *= 1e-20;
    }
  }

  // Drops the less active half of the learnt clauses. Slots are tombstoned
  // so clause references stay stable; propagate unhooks stale watchers.
  void reduce_db() {
    std::vector<int> cand;
    for (int c = 0; c < (int)clauses_.size(); ++c)
      if (learnt_[c] && !deleted_[c] && !locked(c) && clauses_[c].size() > 2)
        cand.push_back(c);
    std::sort(cand.begin(), cand.end(),
              [&](int a, int b) { return cact_[a] < cact_[b]; });
    for (std::size_t k = 0; k < cand.size() / 2; ++k) {
      int c = cand[k];
      deleted_[c] = 1;
      clauses_[c] = {};
      --learnt_live_;
    }
    max_learnts_ += max_learnts_ / 4;
  }

  void attach(int cref) {
    const auto& c = clauses_[cref];
    watches_[neg(c[0])].push_back({cref, c[1]});
    watches_[neg(c[1])].push_back({cref, c[0]});
  }

  void unchecked_enqueue(Lit l, int reason) {
    Var v = var_of(l);
    assigns_[v] = sign_of(l) ? Val::False : Val::True;
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(l);
  }

  int propagate() {
    while (qhead_ < trail_.size()) {
      Lit p = trail_[qhead_++];
      auto& ws = watches_[p];  // clauses watching neg(p), keyed by the
                               // literal that just became true
      std::size_t i = 0, j = 0;
      while (i < ws.size()) {
        Watch w = ws[i];
        if (deleted_[w.cref]) {
          ++i;
          continue;
        }
        if (value(w.blocker) == Val::True) {
          ws[j++] = ws[i++];
          continue;
        }
        auto& c = clauses_[w.cref];
        Lit false_lit = neg(p);
        if (c[0] == false_lit) std::swap(c[0], c[1]);
        ++i;
        if (value(c[0]) == Val::True) {
          ws[j++] = {w.cref, c[0]};
          continue;
        }
        bool moved = false;
        for (std::size_t k = 2; k < c.size(); ++k) {
          if (value(c[k]) != Val::False) {
            std::swap(c[1], c[k]);
            watches_[neg(c[1])].push_back({w.cref, c[0]});
            moved = true;
            break;
          }
        }
        if (moved) continue;
        ws[j++] = {w.cref, c[0]};
        if (value(c[0]) == Val::False) {
          while (i < ws.size()) ws[j++] = ws[i++];
          ws.resize(j);
          qhead_ = trail_.size();
          return w.cref;
        }
        ++stats_.propagations;
        unchecked_enqueue(c[0], w.cref);
      }
      ws.resize(j);
    }
    return -1;
  }

  void bump(Var v) {
    activity_[v] += var_inc_;
    if (activity_[v] > 1e100) {
      for (auto& a : activity_) a *= 1e-100;
      var_inc_ *= 1e-100;
    }
    if (heap_index_[v] >= 0) heap_up(heap_index_[v]);
  }

  // 1UIP conflict analysis. `confl` indexes a clause, or `theory_clause`
  // carries the conflicting literals (all false under the assignment).
  void analyze(int confl, const std::vector<Lit>* theory_clause,
               std::vector<Lit>& out, int& out_bt) {
    out.clear();
    out.push_back(0);  // slot for the asserting literal
    int path = 0;
    Lit p = -1;
    std::size_t index = trail_.size();
    const std::vector<Lit>* reason_lits =
        theory_clause ? theory_clause : &clauses_[confl];
    if (!theory_clause) bump_clause(confl);
    std::vector<Lit> tmp;
    while (true) {
      for (Lit q : *reason_lits) {
        if (p != -1 && q == p) continue;
        Var v = var_of(q);
        if (!seen_[v] && level_[v] > 0) {
          seen_[v] = 1;
          bump(v);
          if (level_[v] >= decision_level())
            ++path;
          else
            out.push_back(q);
        }
      }
      while (!seen_[var_of(trail_[--index])]) {
      }
      p = trail_[index];
      seen_[var_of(p)] = 0;
      --path;
      if (path <= 0) break;
      tmp.clear();
      int r = reason_[var_of(p)];
      if (r == kTheoryReason) {
        theory_->explain(p, tmp);
#ifdef CONCSYNTH_AUDIT
        audit_clause(tmp, "explain");
#endif
      } else {
        bump_clause(r);
        tmp = clauses_[r];
      }
      reason_lits = &tmp;
    }
    out[0] = neg(p);
    // Cheap minimization: drop literals whose whole reason is already in
    // the clause. Dropped literals must still be unseen afterwards, so the
    // cleanup below walks the unminimized clause.
    std::vector<Lit> marked(out);
    std::size_t w = 1;
    for (std::size_t k = 1; k < out.size(); ++k) {
      Var v = var_of(out[k]);
      bool removable = false;
      if (reason_[v] >= 0) {
        removable = true;
        for (Lit l : clauses_[reason_[v]]) {
          Var lv = var_of(l);
          if (lv == v) continue;
          if (!seen_[lv] && level_[lv] > 0) {
            removable = false;
            break;
          }
        }
      }
      if (!removable) out[w++] = out[k];
    }
    out.resize(w);
    for (Lit l : marked) seen_[var_of(l)] = 0;
    if (out.size() == 1) {
      out_bt = 0;
    } else {
      std::size_t max_i = 1;
      for (std::size_t k = 2; k < out.size(); ++k)
        if (level_[var_of(out[k])] > level_[var_of(out[max_i])]) max_i = k;
      std::swap(out[1], out[max_i]);
      out_bt = level_[var_of(out[1])];
    }
    var_inc_ /= kVarDecay;
    cla_inc_ /= kClaDecay;
  }

  void commit_learnt(std::vector<Lit> learnt, int bt) {
#ifdef CONCSYNTH_AUDIT
    audit_clause(learnt, "learnt");
#endif
    cancel_until(bt);
    if (learnt.size() == 1) {
      unchecked_enqueue(learnt[0], -1);
      return;
    }
    Lit first = learnt[0];
    int cref = add_clause_internal(std::move(learnt), true);
    attach(cref);
    bump_clause(cref);
    unchecked_enqueue(first, cref);
    if (++learnt_live_ >= max_learnts_) reduce_db();
  }

  // Theory conflicts may live entirely below the current level; hop down
  // to the deepest involved level first so analyze sees a current-level
  // literal.
  bool resolve_theory_conflict(const std::vector<Lit>& conflict_true_lits,
                               int& restart_count,
                               std::int64_t& conflicts_left) {
    ++stats_.theory_conflicts;
    ++stats_.conflicts;
    std::vector<Lit> clause;
    clause.reserve(conflict_true_lits.size());
    int max_level = 0;
    for (Lit l : conflict_true_lits) {
      clause.push_back(neg(l));
      max_level = std::max(max_level, level_[var_of(l)]);
    }
    if (max_level == 0) return false;
    if (max_level < decision_level()) cancel_until(max_level);
    std::vector<Lit> learnt;
    int bt;
    analyze(-1, &clause, learnt, bt);
    commit_learnt(std::move(learnt), bt);
    if (--conflicts_left <= 0) {
      ++stats_.restarts;
      ++restart_count;
      conflicts_left = luby(restart_count) * kRestartBase;
      cancel_until(0);
    }
    return true;
  }

  void cancel_until(int lvl) {
    if (decision_level() <= lvl) return;
    std::size_t bound = trail_lim_[lvl];
    for (std::size_t i = trail_.size(); i-- > bound;) {
      Lit l = trail_[i];
      Var v = var_of(l);
      if (i < theory_qhead_ && theory_) theory_->on_undo(l);
      saved_phase_[v] = assigns_[v] == Val::True;
      assigns_[v] = Val::Undef;
      reason_[v] = -1;
      if (heap_index_[v] < 0) heap_insert(v);
    }
    trail_.resize(bound);
    trail_lim_.resize(lvl);
    qhead_ = bound;
    theory_qhead_ = std::min(theory_qhead_, bound);
  }

  // Indexed max-heap on activity.
  void heap_insert(Var v) {
    heap_index_[v] = (int)heap_.size();
    heap_.push_back(v);
    heap_up(heap_index_[v]);
  }

  Var heap_pop() {
    Var top = heap_[0];
    heap_index_[top] = -1;
    heap_[0] = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
      heap_index_[heap_[0]] = 0;
      heap_down(0);
    }
    return top;
  }

  void heap_up(int i) {
    Var v = heap_[i];
    while (i > 0) {
      int parent = (i - 1) / 2;
      if (activity_[heap_[parent]] >= activity_[v]) break;
      heap_[i] = heap_[parent];
      heap_index_[heap_[i]] = i;
      i = parent;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  void heap_down(int i) {
    Var v = heap_[i];
    int n = (int)heap_.size();
    while (true) {
      int child = 2 * i + 1;
      if (child >= n) break;
      if (child + 1 < n &&
          activity_[heap_[child + 1]] > activity_[heap_[child]])
        ++child;
      if (activity_[heap_[child]] <= activity_[v]) break;
      heap_[i] = heap_[child];
      heap_index_[heap_[i]] = i;
      i = child;
    }
    heap_[i] = v;
    heap_index_[v] = i;
  }

  static constexpr double kVarDecay = 0.95;
  static constexpr double kClaDecay = 0.999;

  bool ok_ = true;
  std::vector<std::vector<Lit>> clauses_;
  std::vector<char> learnt_;
  std::vector<char> deleted_;
  std::vector<double> cact_;
  double cla_inc_ = 1.0;
  std::int64_t learnt_live_ = 0;
  std::int64_t max_learnts_ = 0;
  std::vector<std::vector<Watch>> watches_;  // indexed by lit
  std::vector<Val> assigns_;
  std::vector<int> level_;
  std::vector<int> reason_;
  std::vector<double> activity_;
  std::vector<bool> saved_phase_;
  std::vector<char> seen_;
  std::vector<Lit> trail_;
  std::vector<std::size_t> trail_lim_;
  std::size_t qhead_ = 0;
  std::size_t theory_qhead_ = 0;
  std::vector<Var> heap_;
  std::vector<int> heap_index_;
  double var_inc_ = 1.0;
  Stats stats_;
  Theory* theory_ = nullptr;
};

}  // namespace concsynth::sat
