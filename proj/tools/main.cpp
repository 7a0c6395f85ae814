#include <cstdio>

int main() {
  std::puts("tomonet: CLI not wired up yet");
  return 0;
}
