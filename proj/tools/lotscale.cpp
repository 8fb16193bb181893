// placeholder; full CLI lands with the cli-store module
#include <cstdio>

#include "lotscale/trainer.hpp"

int main() {
  std::puts(lotscale::kVersion);
  return 0;
}
