// One line per acceptance criterion; exits nonzero if any fails.
//   acceptance [--tiny] [ids...]

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "pbda/checks.hpp"

int main(int argc, char** argv) {
    using namespace pbda::checks;
    Profile profile = Profile::full;
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--tiny") == 0) {
            profile = Profile::tiny;
        } else {
            const int id = std::atoi(argv[i]);
            if (id < 1 || id > check_count()) {
                std::fprintf(stderr, "unknown check id '%s'\n", argv[i]);
                return 2;
            }
            ids.push_back(id);
        }
    }
    if (ids.empty()) {
        for (int i = 1; i <= check_count(); ++i) ids.push_back(i);
    }
    int failed = 0;
    for (int id : ids) {
        const CheckResult r = run_check(id, profile);
        std::puts(format_result(r).c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    }
    std::printf("acceptance: %zu run, %d failed\n", ids.size(), failed);
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
