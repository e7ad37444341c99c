// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <cstdio>

#include "superrotor/validation.hpp"

int main()
{
  const superrotor::AcceptanceReport rep = superrotor::run_acceptance();
  for (const auto& c : rep.criteria) {
    std::printf("%s criterion %2d (%s): %s [%.2f s]\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                c.detail.c_str(), c.seconds);
  }
  std::printf("%zu criteria, %s\n", rep.criteria.size(), rep.all_passed() ? "all passed" : "FAILURES");
  return rep.all_passed() ? 0 : 1;
}
