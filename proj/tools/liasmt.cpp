// liasmt: a minimal SMT-LIB2 QF_LIA solver on stdin/stdout.
//
// Bundled so concsynth's subprocess backend has a solver to talk to on
// machines without z3/cvc5; any SMT-LIB2 solver can take its place via
// --smt-solver.

#include <iostream>

#include "concsynth/smtlib_server.hpp"

int main() {
  std::ios::sync_with_stdio(false);
  return concsynth::SmtLibServer().run(std::cin, std::cout);
}
