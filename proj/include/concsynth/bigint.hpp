#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <string>

namespace concsynth {

// Arbitrary-precision integer. Coefficients in SMT models routinely exceed
// 64 bits, so everything arithmetic in this library runs on mpz.
using Int = mpz_class;

inline Int int_of(long v) { return Int(v); }

inline bool fits_long(const Int& v) { return v.fits_slong_p(); }

inline long to_long(const Int& v) { return v.get_si(); }

inline std::string int_str(const Int& v) { return v.get_str(); }

inline Int int_gcd(const Int& a, const Int& b) {
  Int r;
  mpz_gcd(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Int int_lcm(const Int& a, const Int& b) {
  Int r;
  mpz_lcm(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Int int_abs(const Int& a) { return a < 0 ? Int(-a) : a; }

// Floor division/modulo. GMP's fdiv pair gives remainder with the sign of
// the divisor; with m > 0 that is the SMT-LIB Int semantics of div/mod.
inline Int floor_div(const Int& a, const Int& b) {
  Int q;
  mpz_fdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

inline Int floor_mod(const Int& a, const Int& b) {
  Int r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return r;
}

inline Int ceil_div(const Int& a, const Int& b) {
  Int q;
  mpz_cdiv_q(q.get_mpz_t(), a.get_mpz_t(), b.get_mpz_t());
  return q;
}

inline std::size_t int_hash(const Int& v) {
  if (v.fits_slong_p()) return std::hash<long>()(v.get_si());
  std::size_t h = 0x9e3779b97f4a7c15ull;
  const mp_limb_t* limbs = mpz_limbs_read(v.get_mpz_t());
  int n = std::abs(v.get_mpz_t()->_mp_size);
  for (int i = 0; i < n; ++i) h = h * 1099511628211ull ^ (std::size_t)limbs[i];
  if (v < 0) h = ~h;
  return h;
}

inline void hash_combine(std::size_t& seed, std::size_t h) {
  seed ^= h + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
}

}  // namespace concsynth
