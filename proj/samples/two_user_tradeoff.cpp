// Sweeps one interference budget of a small two-user network and prints how
// the victim's rate trades against the interferer's.

#include "misobf/misobf.hpp"

#include <cstdio>

int main() {
  using namespace misobf;
  MisoNetwork net;
  net.t = {2, 2};
  net.P = {1.0, 1.0};
  net.h.assign(2, std::vector<Vector>(2));
  net.h[0][0] = (Vector(2) << 1.0, 0.3).finished();
  net.h[0][1] = (Vector(2) << 0.8, 0.6).finished();
  net.h[1][0] = (Vector(2) << 0.2, 0.9).finished();
  net.h[1][1] = (Vector(2) << 1.1, -0.4).finished();

  std::printf("%10s %10s %10s\n", "z12", "R_1", "R_2");
  InterferenceBudget budget(2);
  budget.set(1, 0, 0.0);  // user 2 stays silent toward receiver 1
  const double upper = net.P[0] * net.h[0][1].squaredNorm();
  for (int k = 0; k <= 8; ++k) {
    budget.set(0, 1, upper * k / 8.0);
    std::vector<Beamformer> beams;
    for (std::size_t u = 0; u < 2; ++u) beams.push_back(solve_user(net, u, budget).beamformer);
    const RatePoint r = rate_vector(net, to_covariances(net, beams));
    std::printf("%10.4f %10.4f %10.4f\n", budget.get(0, 1), r[0], r[1]);
  }
  return 0;
}
