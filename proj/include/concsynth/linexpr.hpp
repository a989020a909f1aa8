#pragma once

#include <vector>

#include "concsynth/ast.hpp"
#include "concsynth/bigint.hpp"
#include "concsynth/eval.hpp"

namespace concsynth {

// c . x + d with a fixed dimension.
struct LinExpr {
  std::vector<Int> coeffs;
  Int offset;

  LinExpr() = default;
  explicit LinExpr(std::size_t dim) : coeffs(dim, Int(0)), offset(0) {}
  LinExpr(std::vector<Int> c, Int d) : coeffs(std::move(c)), offset(std::move(d)) {}

  std::size_t dim() const { return coeffs.size(); }

  bool is_constant() const {
    for (const auto& c : coeffs)
      if (c != 0) return false;
    return true;
  }

  bool is_zero() const { return is_constant() && offset == 0; }

  Int eval(const Valuation& v) const {
    Int acc = offset;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      if (coeffs[i] != 0) acc += coeffs[i] * v[i];
    return acc;
  }

  LinExpr& operator+=(const LinExpr& o) {
    if (o.coeffs.size() > coeffs.size()) coeffs.resize(o.coeffs.size(), Int(0));
    for (std::size_t i = 0; i < o.coeffs.size(); ++i) coeffs[i] += o.coeffs[i];
    offset += o.offset;
    return *this;
  }

  LinExpr& operator-=(const LinExpr& o) {
    if (o.coeffs.size() > coeffs.size()) coeffs.resize(o.coeffs.size(), Int(0));
    for (std::size_t i = 0; i < o.coeffs.size(); ++i) coeffs[i] -= o.coeffs[i];
    offset -= o.offset;
    return *this;
  }

  LinExpr& operator*=(const Int& k) {
    for (auto& c : coeffs) c *= k;
    offset *= k;
    return *this;
  }

  friend LinExpr operator+(LinExpr a, const LinExpr& b) { a += b; return a; }
  friend LinExpr operator*(const Int& k, LinExpr a) { a *= k; return a; }
  friend LinExpr operator-(LinExpr a) { a *= Int(-1); return a; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) {
    LinExpr nb = b; nb *= Int(-1); a += nb; return a;
  }

  bool operator==(const LinExpr& o) const {
    std::size_t n = std::max(coeffs.size(), o.coeffs.size());
    for (std::size_t i = 0; i < n; ++i) {
      Int a = i < coeffs.size() ? coeffs[i] : Int(0);
      Int b = i < o.coeffs.size() ? o.coeffs[i] : Int(0);
      if (a != b) return false;
    }
    return offset == o.offset;
  }

  static LinExpr constant(std::size_t dim, Int v) {
    LinExpr e(dim);
    e.offset = std::move(v);
    return e;
  }

  static LinExpr variable(std::size_t dim, std::size_t idx, Int scale = Int(1)) {
    LinExpr e(dim);
    e.coeffs.at(idx) = std::move(scale);
    return e;
  }
};

// Lowers a LinExpr to a Term: d + c1*x1 + ... with unit/zero coefficients
// folded away.
inline TermPtr linexpr_to_term(const LinExpr& e) {
  TermPtr acc;
  auto add = [&acc](TermPtr t) { acc = acc ? mk_add(acc, std::move(t)) : std::move(t); };
  for (std::size_t i = 0; i < e.coeffs.size(); ++i) {
    if (e.coeffs[i] == 0) continue;
    if (e.coeffs[i] == 1)
      add(mk_var((int)i));
    else
      add(mk_mul(e.coeffs[i], mk_var((int)i)));
  }
  if (!acc || e.offset != 0) add(mk_const(e.offset));
  return acc;
}

inline std::size_t linexpr_hash(const LinExpr& e) {
  std::size_t h = int_hash(e.offset);
  for (std::size_t i = 0; i < e.coeffs.size(); ++i)
    if (e.coeffs[i] != 0) {
      hash_combine(h, i);
      hash_combine(h, int_hash(e.coeffs[i]));
    }
  return h;
}

}  // namespace concsynth
