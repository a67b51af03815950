// Acceptance gate: runs every benchmark criterion and prints one line per
// criterion. Exit code 0 iff all pass.

#include "physml/experiments.hpp"

#include <cstdio>

int main() {
    const std::uint64_t seed = 42;
    std::vector<physml::CriterionResult> results = physml::reproduce_all(seed, "");
    size_t passed = 0;
    for (const physml::CriterionResult& r : results) {
        std::printf("[%s] criterion %2d %-28s value %.6g (threshold %.6g) %.1fs — %s\n",
                    r.pass ? "PASS" : "FAIL", r.id, r.name.c_str(), r.value,
                    r.threshold, r.seconds, r.detail.c_str());
        std::fflush(stdout);
        if (r.pass) ++passed;
    }
    std::printf("%s: %zu/%zu criteria passed\n",
                passed == results.size() ? "SUCCESS" : "FAILURE", passed,
                results.size());
    return passed == results.size() ? 0 : 1;
}
