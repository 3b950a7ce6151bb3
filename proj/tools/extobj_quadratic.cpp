// Line-protocol objective for testing the external-command interface:
// reads one whitespace-separated vector per line, prints 0.5*|x|^2.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

int main() {
    std::string line;
    while (std::getline(std::cin, line)) {
        std::istringstream ss(line);
        double v = 0.0, acc = 0.0;
        while (ss >> v) acc += 0.5 * v * v;
        std::printf("%.17g\n", acc);
        std::fflush(stdout);
    }
    return 0;
}
