// Regenerates the bundled synthetic dataset. The construction is fully
// seeded, so the same arguments always give the same bytes.
#include <cstdio>
#include <cstdlib>
#include <exception>

#include "stsim/synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 2 || argc > 4) {
    std::fprintf(stderr, "usage: make_synthetic OUT [N_PAIRS] [SEED]\n");
    return 2;
  }
  std::size_t n = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 200;
  std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 42;
  try {
    stsim::write_synthetic_dataset(argv[1], n, seed);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("wrote %zu pairs (seed %llu) to %s\n", n, static_cast<unsigned long long>(seed),
              argv[1]);
  return 0;
}
