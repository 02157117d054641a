#pragma once

// Acceptance checks shared by the acceptance test binary and `pbda check`.
// Every oracle here is coded independently of the library routine it checks.

#include <string>
#include <vector>

namespace pbda::checks {

enum class Profile {
    full,  // the sizes the acceptance thresholds are stated for
    tiny,  // same properties on reduced sizes, for a quick smoke run
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
    double time_limit = 0.0;  // seconds; 0 means none
};

int check_count();
std::string check_name(int id);

/// Runs one check. Exceptions thrown by the code under test become failures.
CheckResult run_check(int id, Profile profile);

/// "PASS [3] kl-oracle (12.1 s): ..." style line.
std::string format_result(const CheckResult& r);

}  // namespace pbda::checks
