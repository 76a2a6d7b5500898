// Library use without the CLI: breakthrough of a step input, printed to stdout.

#include <cstdio>

#include "robincol/series.hpp"
#include "robincol/verification.hpp"

int main() {
  using namespace robincol;
  ProblemData d;
  d.params = {1.0, 0.1, 1.0, 0.0, 0.0, 1.0};
  d.g = SmoothFn::constant(1.0);
  const auto sol = robin_solve(d, 1.0);

  std::printf("%6s %12s %12s %6s %10s\n", "t", "C(ell,t)", "C_E(t)", "N", "tail");
  for (int i = 1; i <= 10; ++i) {
    const double t = 0.1 * i;
    const auto s = sol.snapshot(t);
    std::printf("%6.2f %12.8f %12.8f %6d %10.2e\n", t, s.C(1.0), sol.data().exit_fn()(t), s.modes, s.tail);
  }
  const auto bal = mass_balance(sol, {0.25, 0.5, 0.75});
  std::printf("mass balance residual %.2e\n", bal.integrated_relative_residual);
}
