#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "concsynth/decision_tree.hpp"
#include "concsynth/smt_client.hpp"
#include "concsynth/sygus.hpp"

// Height-enumerating CEGIS. Candidates are decision trees of a fixed
// height; the inner loop alternates verification of the current candidate
// against the spec with synthesis of a tree consistent with every
// counterexample seen so far. Heights grow until a tree verifies.

namespace concsynth {

struct CexEntry {
  Valuation example;
  DecisionTree refuted;  // the candidate this example falsified
};

struct CexStore {
  std::vector<CexEntry> entries;

  bool add(Valuation e, DecisionTree refuted) {
    for (const auto& x : entries)
      if (x.example == e) return false;
    entries.push_back({std::move(e), std::move(refuted)});
    return true;
  }
  std::size_t size() const { return entries.size(); }
};

struct ConcolicOptions {
  int jobs = 1;
  std::size_t max_height = 12;
  std::size_t height_iter_cap = 10000;
  bool no_height_cap = false;
  std::chrono::steady_clock::time_point deadline =
      std::chrono::steady_clock::time_point::max();
  SmtOptions smt;
};

namespace concolic_detail {

inline std::size_t unknown_count(std::size_t height, std::size_t d) {
  return DecisionTree::node_count(height) * (d + 1);
}

// c_i . args + d_i as an expression over the unknown symbols of node i.
inline LinExpr node_unknowns(std::size_t height, std::size_t node,
                             const Valuation& args, std::size_t d) {
  LinExpr e(unknown_count(height, d));
  for (std::size_t j = 0; j < d; ++j)
    e.coeffs[node * (d + 1) + j] = args.values[j];
  e.coeffs[node * (d + 1) + d] = Int(1);
  return e;
}

inline TermPtr encode_app_at(std::size_t height, std::size_t node,
                             const Valuation& args, std::size_t d,
                             bool bool_valued) {
  DecisionTree shape;  // only for the layout helpers
  shape.height = height;
  TermPtr own = linexpr_to_term(node_unknowns(height, node, args, d));
  if (shape.is_leaf(node) && !bool_valued) return own;
  if (shape.is_leaf(node))
    throw std::logic_error("bool leaf reached in term context");
  return mk_term_ite(mk_geq(own, mk_const(Int(0))),
                     encode_app_at(height, 2 * node + 1, args, d, bool_valued),
                     encode_app_at(height, 2 * node + 2, args, d, bool_valued));
}

inline CondPtr encode_app_cond_at(std::size_t height, std::size_t node,
                                  const Valuation& args, std::size_t d) {
  DecisionTree shape;
  shape.height = height;
  CondPtr test = mk_geq(linexpr_to_term(node_unknowns(height, node, args, d)),
                        mk_const(Int(0)));
  if (shape.is_leaf(node)) return test;
  return mk_cond_ite(test, encode_app_cond_at(height, 2 * node + 1, args, d),
                     encode_app_cond_at(height, 2 * node + 2, args, d));
}

}  // namespace concolic_detail

// The application f(e) for a concrete argument tuple, as a term (or, for
// predicate-valued f, a condition) over the fresh unknowns {c_i, d_i} of a
// height-h tree. Unknown j of node i lives at index i*(d+1)+j.
inline TermPtr encode_app(std::size_t height, const Valuation& args) {
  return concolic_detail::encode_app_at(height, 0, args,
                                        args.values.size(), false);
}

inline CondPtr encode_app_cond(std::size_t height, const Valuation& args) {
  return concolic_detail::encode_app_cond_at(height, 0, args,
                                             args.values.size());
}

namespace concolic_detail {

// Grounds the spec at one counterexample and replaces every invocation by
// its encoding over the unknowns. Invocation arguments must evaluate to
// constants (f is applied to constants only once the spec is grounded);
// a nested invocation would make the argument ungroundable.
class SpecEncoder {
 public:
  SpecEncoder(const SynthProblem& p, std::size_t height)
      : p_(p), height_(height) {}

  CondPtr encode(const Valuation& e) {
    std::vector<TermPtr> consts;
    consts.reserve(e.values.size());
    for (const auto& v : e.values) consts.push_back(mk_const(v));
    return cond(subst_vars(p_.spec, consts));
  }

 private:
  Valuation app_args(const std::vector<TermPtr>& args) {
    Valuation u, none;
    for (const auto& a : args) u.values.push_back(eval_term(a, none));
    return u;
  }

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
      case Term::Kind::App:
        if (t->fn == p_.fname) return encode_app(height_, app_args(t->args));
        throw UngroundedTerm("application of unknown function " + t->fn);
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
      case Cond::Kind::AppB:
        if (c->fn == p_.fname)
          return encode_app_cond(height_, app_args(c->args));
        throw UngroundedTerm("application of unknown predicate " + c->fn);
    }
    throw std::logic_error("unreachable");
  }

  const SynthProblem& p_;
  std::size_t height_;
};

inline DecisionTree tree_from_model(const Valuation& m, std::size_t height,
                                    std::size_t d, bool bool_valued) {
  DecisionTree t = DecisionTree::zero(height, d, bool_valued);
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j)
      t.nodes[i].coeffs[j] = m.values[i * (d + 1) + j];
    t.nodes[i].offset = m.values[i * (d + 1) + d];
  }
  return t;
}

}  // namespace concolic_detail

enum class HeightOutcome {
  Solved,
  NoSolutionAtHeight,
  BudgetExhausted,
  Stopped,
  Timeout,
};

struct FixedHeightResult {
  HeightOutcome kind = HeightOutcome::Stopped;
  DecisionTree tree;       // when Solved
  std::size_t iters = 0;
};

inline FixedHeightResult fixed_height_synth(
    const SynthProblem& p, std::size_t height, CexStore& E, SmtSession& s,
    const ConcolicOptions& opts = {},
    const std::function<bool()>& stop = {}) {
  const std::size_t d = p.arity;
  const bool bval = p.return_sort == Sort::Bool;
  const std::size_t nunk = concolic_detail::unknown_count(height, d);
  VarNames xs{p.var_names()};
  VarNames us = VarNames::numbered(nunk, "u");
  concolic_detail::SpecEncoder enc(p, height);

  // Counterexamples inherited from earlier heights constrain this one too.
  std::vector<FormulaPtr> constraints;
  for (const auto& entry : E.entries)
    constraints.push_back(linearize(enc.encode(entry.example), nunk));

  DecisionTree cand = DecisionTree::zero(height, d, bval);
  FixedHeightResult out;
  // The zero tree is only a sound warm start for an empty store; inherited
  // examples may already refute it, and the repeated-counterexample check
  // below assumes every candidate is consistent with the store.
  if (!E.entries.empty()) {
    SmtResult r = s.check_sat(constraints, us);
    if (r.status == SmtStatus::Unsat) {
      out.kind = HeightOutcome::NoSolutionAtHeight;
      return out;
    }
    if (r.status == SmtStatus::Unknown)
      throw EngineInconclusive("synthesis query unknown: " + r.reason);
    cand = concolic_detail::tree_from_model(r.model, height, d, bval);
  }
  for (std::size_t iter = 0;
       opts.no_height_cap || iter < opts.height_iter_cap; ++iter) {
    out.iters = iter + 1;
    if (stop && stop()) return out;
    if (std::chrono::steady_clock::now() > opts.deadline) {
      out.kind = HeightOutcome::Timeout;
      return out;
    }
    TermPtr body_t;
    CondPtr body_c;
    if (bval)
      body_c = tree_to_cond(cand);
    else
      body_t = tree_to_term(cand);
    CondPtr ground = subst_app_cond(p.spec, p.fname, body_t, body_c);
    auto v = s.check_valid(ground, xs);
    if (v.kind == SmtSession::Validity::Kind::Valid) {
      out.kind = HeightOutcome::Solved;
      out.tree = std::move(cand);
      return out;
    }
    if (v.kind == SmtSession::Validity::Kind::Unknown)
      throw EngineInconclusive("candidate verification unknown: " + v.reason);
    Valuation e = std::move(v.witness);
    e.values.resize(p.dim(), Int(0));
    if (eval_cond(ground, e))
      throw std::logic_error("witness fails to refute the candidate");
    if (!E.add(e, cand))
      throw EngineInconclusive("synthesis model repeated a counterexample");
    constraints.push_back(linearize(enc.encode(e), nunk));

    SmtResult r = s.check_sat(constraints, us);
    if (r.status == SmtStatus::Unsat) {
      out.kind = HeightOutcome::NoSolutionAtHeight;
      return out;
    }
    if (r.status == SmtStatus::Unknown)
      throw EngineInconclusive("synthesis query unknown: " + r.reason);
    cand = concolic_detail::tree_from_model(r.model, height, d, bval);
  }
  out.kind = HeightOutcome::BudgetExhausted;
  return out;
}

// Shared-nothing coordination between height workers: an atomic next-height
// counter and a write-once-per-improvement result slot. Heights are issued
// strictly increasing; once a result is recorded no further heights go out,
// and workers above the best height abandon their search.
struct HeightScheduler {
  explicit HeightScheduler(std::size_t max_height) : max_height(max_height) {}

  std::size_t max_height;
  std::atomic<std::size_t> next{1};
  std::atomic<std::size_t> best{SIZE_MAX};

  std::size_t issue() {
    if (best.load() != SIZE_MAX) return 0;
    std::size_t h = next.fetch_add(1);
    return h <= max_height ? h : 0;
  }

  void offer(std::size_t h, DecisionTree t) {
    std::lock_guard<std::mutex> g(m_);
    if (h < best.load()) {
      result_ = std::move(t);
      best.store(h);
    }
  }

  bool take(DecisionTree& t) {
    std::lock_guard<std::mutex> g(m_);
    if (best.load() == SIZE_MAX) return false;
    t = result_;
    return true;
  }

 private:
  std::mutex m_;
  DecisionTree result_;
};

struct ConcolicResult {
  enum class Kind { Solved, HeightLimit, Timeout };
  Kind kind = Kind::Timeout;
  DecisionTree tree;          // when Solved
  std::size_t height = 0;     // when Solved
  std::size_t heights_refuted = 0;
  std::size_t heights_capped = 0;
  std::size_t queries = 0;
};

inline ConcolicResult concolic_synth(const SynthProblem& p,
                                     const ConcolicOptions& opts = {}) {
  HeightScheduler sched(opts.max_height);
  std::atomic<std::size_t> refuted{0}, capped{0}, queries{0};
  std::atomic<bool> timed_out{false};
  std::mutex err_m;
  std::exception_ptr err;

  auto worker = [&] {
    try {
      SmtSession s(opts.smt);
      CexStore E;
      for (std::size_t h; (h = sched.issue()) != 0;) {
        if (sched.best.load() < h) break;
        auto stop = [&sched, h] { return sched.best.load() < h; };
        FixedHeightResult r = fixed_height_synth(p, h, E, s, opts, stop);
        switch (r.kind) {
          case HeightOutcome::Solved:
            sched.offer(h, std::move(r.tree));
            break;
          case HeightOutcome::NoSolutionAtHeight:
            ++refuted;
            continue;
          case HeightOutcome::BudgetExhausted:
            ++capped;
            continue;
          case HeightOutcome::Stopped:
            continue;
          case HeightOutcome::Timeout:
            timed_out.store(true);
            break;
        }
        break;
      }
      queries += s.stats().queries;
    } catch (...) {
      std::lock_guard<std::mutex> g(err_m);
      if (!err) err = std::current_exception();
    }
  };

  int n = opts.jobs > 0 ? opts.jobs : 1;
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve((std::size_t)n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ConcolicResult out;
  out.heights_refuted = refuted.load();
  out.heights_capped = capped.load();
  out.queries = queries.load();
  if (sched.take(out.tree)) {
    out.kind = ConcolicResult::Kind::Solved;
    out.height = sched.best.load();
    return out;
  }
  if (err) std::rethrow_exception(err);
  out.kind = timed_out.load() ? ConcolicResult::Kind::Timeout
                              : ConcolicResult::Kind::HeightLimit;
  return out;
}

}  // namespace concsynth
