#include <cstdio>
#include <iostream>

#include "mz/acceptance.hpp"

int main() {
    auto results = mz::acceptance::run_all(std::cout);
    bool all = true;
    for (const auto& r : results) all = all && r.pass;
    std::printf("%zu criteria, %s\n", results.size(), all ? "all passed" : "FAILURES PRESENT");
    return all ? 0 : 1;
}
