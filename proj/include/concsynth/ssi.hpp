#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "concsynth/cooper.hpp"
#include "concsynth/smt_client.hpp"
#include "concsynth/sygus.hpp"

// Decision procedure for strong-single-invocation problems: every atom
// constrains one invocation f(t) from above or below, so f(t) can be
// replaced by a fresh variable z, existence of a solution reduces to the
// validity of (exists z . phi), and a solution is a nested ite over the
// bound terms themselves.

namespace concsynth {

struct NonUnitCoefficient : std::runtime_error {
  explicit NonUnitCoefficient(const std::string& what)
      : std::runtime_error(what) {}
};

struct SsiAtom {
  bool lower;    // z >= bound when true, z <= bound otherwise
  LinExpr bound; // over the spec variables
};

struct SsiNormalForm {
  std::size_t dim = 0;         // spec variables; z is Var(dim)
  FormulaPtr phi;              // NNF over dim+1 vars, atoms in place
  std::vector<SsiAtom> atoms;  // source order
  std::vector<LinExpr> T;      // Eq. (3) candidates, default 0 last
  std::vector<int> app_vars;   // f's argument tuple (a permutation)
};

namespace ssi_detail {

inline void collect_atoms(const FormulaPtr& f, std::size_t z,
                          std::vector<SsiAtom>& out) {
  switch (f->kind) {
    case Formula::Kind::Geq: {
      Int a = cooper_detail::coeff_of(f->lin, z);
      if (a == 0) return;
      if (a != 1 && a != -1)
        throw NonUnitCoefficient("invocation carries coefficient " +
                                 a.get_str());
      LinExpr b = cooper_detail::drop_var(f->lin, z);
      b.coeffs.resize(z);
      if (a > 0) b *= Int(-1);  // z + rest >= 0  ==>  z >= -rest
      out.push_back({a > 0, std::move(b)});
      return;
    }
    case Formula::Kind::And:
    case Formula::Kind::Or:
      for (const auto& k : f->kids) collect_atoms(k, z, out);
      return;
    default:
      return;
  }
}

inline void push_unique(std::vector<LinExpr>& ts, const LinExpr& t) {
  for (const auto& o : ts)
    if (o == t) return;
  ts.push_back(t);
}

// Remaps a solution built over the spec variables x to a body over f's
// parameters, inverting the argument tuple.
inline TermPtr to_param_body(const TermPtr& t, const std::vector<int>& tuple) {
  std::vector<TermPtr> subs(tuple.size());
  for (std::size_t j = 0; j < tuple.size(); ++j)
    subs[(std::size_t)tuple[j]] = mk_var((int)j);
  return subst_vars(t, subs);
}

}  // namespace ssi_detail

inline SsiNormalForm ssi_normalize(const SynthProblem& p,
                                   const std::vector<int>& app_vars) {
  SsiNormalForm nf;
  nf.dim = p.dim();
  nf.app_vars = app_vars;
  // Every application uses the same argument tuple, so the replacement body
  // does not mention the placeholder parameters at all.
  CondPtr spec_z = subst_app_cond(p.spec, p.fname, mk_var((int)nf.dim), nullptr);
  nf.phi = to_nnf(linearize(spec_z, nf.dim + 1));
  ssi_detail::collect_atoms(nf.phi, nf.dim, nf.atoms);
  for (const auto& a : nf.atoms)
    if (a.lower) ssi_detail::push_unique(nf.T, a.bound);
  if (nf.T.empty())
    for (const auto& a : nf.atoms) ssi_detail::push_unique(nf.T, a.bound);
  nf.T.push_back(LinExpr::constant(nf.dim, Int(0)));
  return nf;
}

struct SsiExistence {
  bool synthesizable = false;
  Valuation witness;  // over the spec variables when not synthesizable
};

inline SsiExistence ssi_check_exists(const SsiNormalForm& nf, SmtSession& s) {
  FormulaPtr gamma = eliminate(nf.dim, nf.phi);
  // gamma still carries the (zero) z column; declare z and ignore it.
  auto v = s.check_valid(gamma, VarNames::numbered(nf.dim + 1));
  SsiExistence out;
  switch (v.kind) {
    case SmtSession::Validity::Kind::Valid:
      out.synthesizable = true;
      return out;
    case SmtSession::Validity::Kind::Invalid:
      out.witness = v.witness;
      out.witness.values.resize(nf.dim, Int(0));
      return out;
    case SmtSession::Validity::Kind::Unknown:
      break;
  }
  throw EngineInconclusive("existence check came back unknown: " + v.reason);
}

// Test oracle mirroring ssi_check_exists: exists z . phi as the finite
// disjunction of phi at every bound term and the default 0.
inline FormulaPtr ssi_exists_by_candidates(const SsiNormalForm& nf) {
  std::vector<LinExpr> pool;
  for (const auto& a : nf.atoms) ssi_detail::push_unique(pool, a.bound);
  pool.push_back(LinExpr::constant(nf.dim, Int(0)));
  std::vector<FormulaPtr> cases;
  for (const auto& t : pool)
    cases.push_back(formula_subst_var(nf.phi, nf.dim, t));
  return f_or(std::move(cases));
}

// Eq. (3): try each candidate under the guard "phi holds of it", falling
// through to the default 0. Candidates whose guard simplifies to a constant
// prune the chain.
inline TermPtr ssi_solve_over(const SsiNormalForm& nf,
                              const std::vector<LinExpr>& cands) {
  TermPtr chain = mk_const(Int(0));
  for (std::size_t i = cands.size(); i-- > 0;) {
    FormulaPtr g = simplify(formula_subst_var(nf.phi, nf.dim, cands[i]));
    if (is_false(g)) continue;
    TermPtr t = linexpr_to_term(cands[i]);
    if (is_true(g)) {
      chain = std::move(t);
      continue;
    }
    if (term_eq(t, chain)) continue;
    chain = mk_term_ite(formula_to_cond(g), std::move(t), std::move(chain));
  }
  if (nf.app_vars.empty()) return chain;
  return ssi_detail::to_param_body(chain, nf.app_vars);
}

inline TermPtr ssi_solve(const SsiNormalForm& nf) {
  return ssi_solve_over(nf, nf.T);
}

struct SsiOutcome {
  bool solved = false;
  TermPtr solution;   // body over f's parameters when solved
  Valuation witness;  // over the spec variables otherwise
};

namespace ssi_detail {

inline bool verified(const SynthProblem& p, const TermPtr& body,
                     SmtSession& s) {
  CondPtr ground = subst_app_cond(p.spec, p.fname, body, nullptr);
  auto v = s.check_valid(ground, VarNames{p.var_names()});
  if (v.kind == SmtSession::Validity::Kind::Unknown)
    throw EngineInconclusive("solution verification came back unknown: " +
                             v.reason);
  return v.kind == SmtSession::Validity::Kind::Valid;
}

inline SsiOutcome synth_plain(const SynthProblem& p,
                              const std::vector<int>& app_vars,
                              SmtSession& s) {
  SsiNormalForm nf = ssi_normalize(p, app_vars);
  SsiExistence ex = ssi_check_exists(nf, s);
  SsiOutcome out;
  if (!ex.synthesizable) {
    out.witness = std::move(ex.witness);
    return out;
  }
  TermPtr body = ssi_solve(nf);
  if (!verified(p, body, s)) {
    // The lower-bound candidate list can miss specs whose satisfying
    // region is bounded only from above; the widened pool cannot.
    std::vector<LinExpr> pool;
    for (const auto& a : nf.atoms) push_unique(pool, a.bound);
    pool.push_back(LinExpr::constant(nf.dim, Int(0)));
    body = ssi_solve_over(nf, pool);
    if (!verified(p, body, s))
      throw EngineInconclusive(
          "existence check passed but no candidate verified");
  }
  out.solved = true;
  out.solution = std::move(body);
  return out;
}

}  // namespace ssi_detail

inline TermPtr ssi_commutative(const SynthProblem& p, const ProblemClass& cls,
                               SmtSession& s, SsiOutcome& out) {
  // Guarded sub-problem: g only has to meet the residual spec on the half
  // plane x_a >= x_b; the full function dispatches g on argument order.
  SynthProblem q = p;
  const std::vector<int>& tuple = cls.app_vars;
  int a = tuple[0], b = tuple[1];
  q.spec = mk_implies(mk_geq(mk_var(a), mk_var(b)), cls.comm_rest);
  SsiNormalForm nf = ssi_normalize(q, tuple);
  SsiExistence ex = ssi_check_exists(nf, s);
  if (!ex.synthesizable) {
    out.witness = std::move(ex.witness);
    return nullptr;
  }
  auto assemble = [&](const TermPtr& g) {
    std::vector<TermPtr> swap{mk_var(1), mk_var(0)};
    return mk_term_ite(mk_geq(mk_var(0), mk_var(1)), g, subst_vars(g, swap));
  };
  TermPtr body = assemble(ssi_solve(nf));
  if (!ssi_detail::verified(p, body, s)) {
    std::vector<LinExpr> pool;
    for (const auto& at : nf.atoms) ssi_detail::push_unique(pool, at.bound);
    pool.push_back(LinExpr::constant(nf.dim, Int(0)));
    body = assemble(ssi_solve_over(nf, pool));
    if (!ssi_detail::verified(p, body, s))
      throw EngineInconclusive(
          "existence check passed but no candidate verified");
  }
  return body;
}

inline SsiOutcome ssi_synth(const SynthProblem& p, const ProblemClass& cls,
                            SmtSession& s) {
  if (cls.tag == ProblemClass::Tag::SSI_Commutative) {
    SsiOutcome out;
    TermPtr body = ssi_commutative(p, cls, s, out);
    if (body) {
      out.solved = true;
      out.solution = std::move(body);
    }
    return out;
  }
  return ssi_detail::synth_plain(p, cls.app_vars, s);
}

}  // namespace concsynth
