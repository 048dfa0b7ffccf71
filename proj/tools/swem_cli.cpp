#include <cstdio>

int main() {
  std::puts("swem cli placeholder");
  return 0;
}
