// Coarse Nishimori-line phase map. Solves the symmetric recall branch on a
// 20x20 (alpha, T) grid at beta = beta* = 1/T and prints an ASCII map of the
// Mattis magnetization with the paramagnetic instability boundary overlaid.
// Pass a path to also write the grid as CSV.
#include <rbmts/reduced.hpp>
#include <rbmts/stability.hpp>

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
  const int cols = 20, rows = 20;
  const double alpha_lo = 0.05, alpha_hi = 3.0;
  const double t_lo = 0.1, t_hi = 1.2;

  std::ofstream csv;
  if (argc > 1) {
    csv.open(argv[1]);
    csv << "alpha,T,m,q,converged\n";
  }

  const char* ramp = " .:-=+*#";
  std::printf("Mattis magnetization m(alpha, T) on the Nishimori line (beta = beta* = 1/T)\n");
  std::printf("'|' marks the cell holding the paramagnetic instability load 1/(beta* beta)^2\n\n");
  for (int r = rows - 1; r >= 0; --r) {
    const double t = t_lo + (t_hi - t_lo) * r / (rows - 1);
    const double beta = 1.0 / t;
    const double a_crit =
        rbmts::critical_load(rbmts::Matrix::Identity(1, 1), beta, beta).alpha_crit;
    std::string line(cols, ' ');
    for (int c = 0; c < cols; ++c) {
      const double alpha = alpha_lo + (alpha_hi - alpha_lo) * c / (cols - 1);
      const auto sol = rbmts::solve_binary_psb(beta, beta, alpha);
      int level = static_cast<int>(sol.m * 8.0);
      if (level < 0) level = 0;
      if (level > 7) level = 7;
      line[c] = sol.m < 1e-3 ? ' ' : ramp[level];
      if (csv.is_open())
        csv << alpha << ',' << t << ',' << sol.m << ',' << sol.q << ','
            << (sol.converged ? 1 : 0) << '\n';
    }
    const double cell = (alpha_hi - alpha_lo) / (cols - 1);
    const int bc = static_cast<int>((a_crit - alpha_lo) / cell + 0.5);
    if (bc >= 0 && bc < cols) line[bc] = '|';
    std::printf("T=%4.2f |%s|\n", t, line.c_str());
  }
  std::printf("        ");
  for (int c = 0; c < cols; ++c) std::printf("%c", c % 5 == 0 ? '+' : '-');
  std::printf("\n        alpha from %.2f to %.2f (paramagnet blank, recall shaded)\n", alpha_lo,
              alpha_hi);
  if (csv.is_open()) std::printf("grid written to %s\n", argv[1]);
  return 0;
}
