// Command line entry point. The real driver lives in the cli module; this
// stub keeps the build green while the library is under construction.
#include <cstdio>

int main(int, char**) {
    std::fprintf(stderr, "sesscc: driver not wired up yet\n");
    return 1;
}
