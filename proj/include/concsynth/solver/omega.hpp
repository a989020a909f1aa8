#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "concsynth/bigint.hpp"
#include "concsynth/eval.hpp"
#include "concsynth/linexpr.hpp"

namespace concsynth::omega {

// Decision procedure for conjunctions of linear constraints over the
// integers (Pugh's Omega test): exact Fourier-Motzkin where coefficients
// allow, dark shadow plus splintering where they do not, equalities
// eliminated first via unit substitution or the symmetric-modulo trick.
// Modulo constraints become equalities with a fresh quotient variable.
struct Constraint {
  enum class Kind { Geq, Eq, ModEq };
  Kind kind = Kind::Geq;
  LinExpr lin;  // Geq: lin >= 0; Eq: lin = 0; ModEq: lin ≡ r (mod m)
  Int m, r;
};

struct Result {
  enum class Kind { Sat, Unsat, Unknown };
  Kind kind = Kind::Unknown;
  Valuation model;        // values for the first `dim` variables when Sat
  std::vector<int> core;  // indices of input constraints refuted when Unsat
};

namespace detail {

struct Row {
  std::vector<Int> a;
  Int c;
  bool eq = false;
  std::vector<int> deps;  // sorted original constraint indices
};

inline std::vector<int> merge_deps(const std::vector<int>& x,
                                   const std::vector<int>& y) {
  std::vector<int> out;
  out.reserve(x.size() + y.size());
  std::set_union(x.begin(), x.end(), y.begin(), y.end(),
                 std::back_inserter(out));
  return out;
}

// Symmetric residue in (-m/2, m/2].
inline Int mod_hat(const Int& a, const Int& m) {
  Int r = floor_mod(a, m);
  if (2 * r > m) r -= m;
  return r;
}

class Solver {
 public:
  Solver(std::size_t dim, std::function<bool()> stop)
      : width_(dim), stop_(std::move(stop)) {}

  Result run(const std::vector<Constraint>& cs) {
    std::vector<Row> rows;
    rows.reserve(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const auto& con = cs[i];
      Row row;
      row.a = con.lin.coeffs;
      row.a.resize(width_, Int(0));
      row.c = con.lin.offset;
      row.deps = {(int)i};
      switch (con.kind) {
        case Constraint::Kind::Geq:
          break;
        case Constraint::Kind::Eq:
          row.eq = true;
          break;
        case Constraint::Kind::ModEq: {
          // lin - r = m * q for fresh q
          row.eq = true;
          row.c -= con.r;
          row.a.push_back(-con.m);
          grow_width(rows, width_ + 1);
          row.a.resize(width_, Int(0));
          break;
        }
      }
      rows.push_back(std::move(row));
    }
    std::vector<int> core;
    auto model = solve_rec(std::move(rows), core);
    Result res;
    if (stopped_) {
      res.kind = Result::Kind::Unknown;
    } else if (model) {
      res.kind = Result::Kind::Sat;
      res.model.values = std::move(*model);
    } else {
      res.kind = Result::Kind::Unsat;
      res.core = std::move(core);
    }
    return res;
  }

 private:
  void grow_width(std::vector<Row>& rows, std::size_t w) {
    width_ = std::max(width_, w);
    for (auto& r : rows) r.a.resize(width_, Int(0));
  }

  bool check_stop() {
    if (!stopped_ && stop_ && stop_()) stopped_ = true;
    return stopped_;
  }

  // x_var = sum(a_i * x_i) + c, recorded at elimination time and replayed
  // in reverse once the remaining variables have values.
  struct Subst {
    std::size_t var;
    std::vector<Int> a;
    Int c;
  };

  struct Interval {
    std::size_t var;
    std::vector<Row> bounds;  // the rows that mention var
  };

  struct BackEntry {
    bool is_subst;
    Subst subst;
    Interval interval;
  };

  // Normalizes in place; returns false with `core` set on contradiction.
  bool normalize(std::vector<Row>& rows, std::vector<int>& core) {
    std::vector<Row> kept;
    kept.reserve(rows.size());
    std::unordered_map<std::size_t, std::vector<std::size_t>> by_hash;
    auto coeff_hash = [](const Row& r) {
      std::size_t h = 0xcbf29ce484222325ull;
      for (const auto& v : r.a) hash_combine(h, int_hash(v));
      return h;
    };
    for (auto& row : rows) {
      Int g(0);
      bool all_zero = true;
      for (const auto& v : row.a) {
        g = int_gcd(g, v);
        if (v != 0) all_zero = false;
      }
      if (all_zero) {
        bool bad = row.eq ? row.c != 0 : row.c < 0;
        if (bad) {
          core = row.deps;
          return false;
        }
        continue;
      }
      if (g > 1) {
        if (row.eq) {
          if (floor_mod(row.c, g) != 0) {
            core = row.deps;
            return false;
          }
          row.c /= g;
        } else {
          row.c = floor_div(row.c, g);
        }
        for (auto& v : row.a) v /= g;
      }
      if (!row.eq) {
        // Identical coefficient vectors: keep only the tightest constant.
        std::size_t h = coeff_hash(row);
        bool merged = false;
        for (std::size_t idx : by_hash[h]) {
          if (kept[idx].eq || kept[idx].a != row.a) continue;
          if (row.c < kept[idx].c) kept[idx] = row;
          merged = true;
          break;
        }
        if (merged) continue;
        by_hash[h].push_back(kept.size());
      }
      kept.push_back(std::move(row));
    }
    rows = std::move(kept);
    return true;
  }

  // Substitutes x_var := expr into a row (expr given as coeffs+const).
  static void apply_subst(Row& row, const Subst& s) {
    if (s.var >= row.a.size() || row.a[s.var] == 0) return;
    Int k = row.a[s.var];
    row.a[s.var] = 0;
    for (std::size_t i = 0; i < s.a.size() && i < row.a.size(); ++i)
      row.a[i] += k * s.a[i];
    row.c += k * s.c;
  }

  std::optional<std::vector<Int>> solve_rec(std::vector<Row> rows,
                                            std::vector<int>& core) {
    std::vector<BackEntry> back;
    // A sibling branch may have grown the global width; rows passed in are
    // only as wide as their own frame was.
    for (auto& r : rows)
      if (r.a.size() < width_) r.a.resize(width_, Int(0));
    while (true) {
      if (check_stop()) return std::nullopt;
      if (!normalize(rows, core)) return std::nullopt;
      // Equality elimination.
      int best_eq = -1;
      std::size_t best_var = 0;
      Int best_abs;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!rows[i].eq) continue;
        for (std::size_t j = 0; j < rows[i].a.size(); ++j) {
          if (rows[i].a[j] == 0) continue;
          Int ab = int_abs(rows[i].a[j]);
          if (best_eq < 0 || ab < best_abs) {
            best_eq = (int)i;
            best_var = j;
            best_abs = ab;
          }
        }
      }
      if (best_eq < 0) break;
      Row eq = rows[(std::size_t)best_eq];
      if (best_abs == 1) {
        rows.erase(rows.begin() + best_eq);
        Int s = eq.a[best_var];  // +1 or -1
        Subst sub;
        sub.var = best_var;
        sub.a.assign(width_, Int(0));
        for (std::size_t i = 0; i < eq.a.size(); ++i)
          if (i != best_var) sub.a[i] = -s * eq.a[i];
        sub.c = -s * eq.c;
        for (auto& row : rows) {
          if (best_var < row.a.size() && row.a[best_var] != 0)
            row.deps = merge_deps(row.deps, eq.deps);
          apply_subst(row, sub);
        }
        back.push_back(BackEntry{true, std::move(sub), {}});
        continue;
      }
      // No unit coefficient: introduce sigma with the symmetric-modulo
      // rewrite, which gives the chosen variable a unit coefficient.
      Int m = best_abs + 1;
      grow_width(rows, width_ + 1);
      std::size_t sigma = width_ - 1;
      Row rewritten;
      rewritten.eq = true;
      rewritten.a.assign(width_, Int(0));
      for (std::size_t i = 0; i < eq.a.size(); ++i)
        rewritten.a[i] = mod_hat(eq.a[i], m);
      rewritten.a[sigma] = -m;
      rewritten.c = mod_hat(eq.c, m);
      rewritten.deps = eq.deps;
      rows.push_back(std::move(rewritten));
      // Next iteration finds the +-1 coefficient on best_var.
    }

    if (rows.empty()) return std::vector<Int>(width_, Int(0));

    // Pick the cheapest variable to project out.
    std::size_t nvars = width_;
    std::vector<std::size_t> nlow(nvars, 0), nup(nvars, 0);
    for (const auto& row : rows)
      for (std::size_t j = 0; j < row.a.size(); ++j) {
        if (row.a[j] > 0) ++nlow[j];
        if (row.a[j] < 0) ++nup[j];
      }
    std::size_t var = nvars;
    bool var_exact = false;
    unsigned long best_score = 0;
    for (std::size_t j = 0; j < nvars; ++j) {
      if (nlow[j] + nup[j] == 0) continue;
      unsigned long score = (unsigned long)nlow[j] * (unsigned long)nup[j];
      bool exact = true;
      if (score > 0) {
        for (const auto& row : rows)
          if (row.a[j] != 0 && int_abs(row.a[j]) != 1) {
            exact = false;
            break;
          }
      }
      if (var == nvars || score < best_score ||
          (score == best_score && exact && !var_exact)) {
        var = j;
        best_score = score;
        var_exact = exact;
      }
    }
    if (var == nvars) throw std::logic_error("no variable left to project");

    std::vector<Row> lowers, uppers, rest;
    for (auto& row : rows) {
      if (row.a[var] > 0)
        lowers.push_back(std::move(row));
      else if (row.a[var] < 0)
        uppers.push_back(std::move(row));
      else
        rest.push_back(std::move(row));
    }
    Interval iv;
    iv.var = var;
    iv.bounds = lowers;
    iv.bounds.insert(iv.bounds.end(), uppers.begin(), uppers.end());

    // Frame-local width: the dark-shadow recursion below can grow the
    // global width, but these rows stay as wide as this frame.
    auto combine = [&](bool dark) {
      std::vector<Row> out = rest;
      for (const auto& lo : lowers)
        for (const auto& up : uppers) {
          const Int& a = lo.a[var];
          Int b = -up.a[var];
          Row row;
          std::size_t w = std::max(lo.a.size(), up.a.size());
          row.a.assign(w, Int(0));
          for (std::size_t i = 0; i < w; ++i) {
            if (i == var) continue;
            Int uv = i < up.a.size() ? up.a[i] : Int(0);
            Int lv = i < lo.a.size() ? lo.a[i] : Int(0);
            row.a[i] = a * uv + b * lv;
          }
          row.c = a * up.c + b * lo.c;
          if (dark) row.c -= (a - 1) * (b - 1);
          row.deps = merge_deps(lo.deps, up.deps);
          out.push_back(std::move(row));
        }
      return out;
    };

    bool all_exact = true;
    for (const auto& lo : lowers) {
      if (lo.a[var] == 1) continue;
      for (const auto& up : uppers)
        if (-up.a[var] != 1) {
          all_exact = false;
          break;
        }
      if (!all_exact) break;
    }

    if (all_exact || lowers.empty() || uppers.empty()) {
      auto model = solve_rec(combine(false), core);
      if (!model) return std::nullopt;
      place_var(*model, iv);
      return unwind(std::move(*model), back);
    }

    // Dark shadow: satisfiable there means an integer point exists.
    {
      std::vector<int> dark_core;
      auto model = solve_rec(combine(true), dark_core);
      if (stopped_) return std::nullopt;
      if (model) {
        place_var(*model, iv);
        return unwind(std::move(*model), back);
      }
    }
    // Real shadow refuted: genuinely unsatisfiable.
    {
      std::vector<int> real_core;
      auto model = solve_rec(combine(false), real_core);
      if (stopped_) return std::nullopt;
      if (!model) {
        core = real_core;
        return std::nullopt;
      }
    }
    // Gray area: splinter on each non-unit lower bound.
    Int bmax(0);
    for (const auto& up : uppers) bmax = std::max(bmax, Int(-up.a[var]));
    for (const auto& lo : lowers) {
      const Int& a = lo.a[var];
      if (a == 1) continue;
      Int hi = (a * bmax - a - bmax) / bmax;
      for (Int i(0); i <= hi; ++i) {
        if (check_stop()) return std::nullopt;
        std::vector<Row> branch = rest;
        for (const auto& lo2 : lowers) branch.push_back(lo2);
        for (const auto& up2 : uppers) branch.push_back(up2);
        Row eq = lo;
        eq.eq = true;
        eq.c -= i;
        branch.push_back(std::move(eq));
        std::vector<int> branch_core;
        auto model = solve_rec(std::move(branch), branch_core);
        if (stopped_) return std::nullopt;
        if (model) return unwind(std::move(*model), back);
      }
    }
    // All splinters failed; every row at this level participated.
    std::vector<int> all;
    for (const auto& row : rest) all = merge_deps(all, row.deps);
    for (const auto& row : lowers) all = merge_deps(all, row.deps);
    for (const auto& row : uppers) all = merge_deps(all, row.deps);
    core = std::move(all);
    return std::nullopt;
  }

  // Computes the eliminated variable's value from its recorded bounds.
  void place_var(std::vector<Int>& model, const Interval& iv) {
    model.resize(width_, Int(0));
    bool has_lb = false, has_ub = false;
    Int lb, ub;
    for (const auto& row : iv.bounds) {
      Int v = row.c;
      for (std::size_t i = 0; i < row.a.size(); ++i)
        if (i != iv.var && row.a[i] != 0) v += row.a[i] * model[i];
      const Int& a = row.a[iv.var];
      if (a > 0) {
        Int bound = ceil_div(-v, a);
        if (!has_lb || bound > lb) lb = bound;
        has_lb = true;
      } else {
        Int bound = floor_div(v, -a);
        if (!has_ub || bound < ub) ub = bound;
        has_ub = true;
      }
    }
    Int value(0);
    if (has_lb && has_ub) {
      if (lb > ub)
        throw std::logic_error("projection lost the integer point");
      value = lb <= 0 && 0 <= ub ? Int(0) : (lb > 0 ? lb : ub);
    } else if (has_lb) {
      value = std::max(lb, Int(0));
    } else if (has_ub) {
      value = std::min(ub, Int(0));
    }
    model[iv.var] = value;
  }

  std::optional<std::vector<Int>> unwind(std::vector<Int> model,
                                         std::vector<BackEntry>& back) {
    model.resize(width_, Int(0));
    for (auto it = back.rbegin(); it != back.rend(); ++it) {
      if (it->is_subst) {
        Int v = it->subst.c;
        for (std::size_t i = 0; i < it->subst.a.size(); ++i)
          if (it->subst.a[i] != 0) v += it->subst.a[i] * model[i];
        model[it->subst.var] = v;
      } else {
        place_var(model, it->interval);
      }
    }
    return model;
  }

  std::size_t width_;
  std::function<bool()> stop_;
  bool stopped_ = false;
};

}  // namespace detail

inline Result solve(const std::vector<Constraint>& cs, std::size_t dim,
                    const std::function<bool()>& stop = nullptr) {
  detail::Solver solver(dim, stop);
  Result res = solver.run(cs);
  if (res.kind == Result::Kind::Sat) res.model.values.resize(dim, Int(0));
  return res;
}

}  // namespace concsynth::omega
