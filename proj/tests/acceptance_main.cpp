#include <cstdio>

#include "flock/acceptance.hpp"

int main()
{
    const auto results = flock::acceptance::run(false);
    int failed = 0;
    for (const auto& r : results) {
        std::printf("%s\n", flock::acceptance::summary_line(r).c_str());
        failed += r.outcome.passed ? 0 : 1;
    }
    std::printf("%zu criteria, %d failed\n", results.size(), failed);
    return failed == 0 ? 0 : 1;
}
