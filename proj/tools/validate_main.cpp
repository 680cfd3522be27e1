#include <rbmts/validation.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"rbmts_validate: cross-check the analytic and simulation layers against each other"};
  std::string level = "fast";
  std::uint64_t seed = 1234;
  bool flip = false;
  app.add_option("--level", level,
                 "fast: analytic cross-checks only; full: adds finite-size simulation comparisons")
      ->capture_default_str()
      ->check(CLI::IsMember({"fast", "full"}));
  app.add_option("--seed", seed, "master seed; every stage derives its own stream")
      ->capture_default_str();
  app.add_flag("--flip-stability-sign", flip,
               "deliberately corrupt the two-unit stability formula; the eigensolve cross-check "
               "must then fail (harness self-test)");
  CLI11_PARSE(app, argc, argv);

  rbmts::ValidationHooks hooks;
  hooks.flip_stability_sign = flip;
  hooks.progress = &std::cout;
  std::cout << "validation suite  level=" << level << "  seed=" << seed << "\n";
  const rbmts::ValidationReport rep = rbmts::run_validation_suite(
      level == "full" ? rbmts::ValidationLevel::Full : rbmts::ValidationLevel::Fast, seed, hooks);
  const std::size_t failed = rep.failures().size();
  std::cout << "result: " << (rep.checks.size() - failed) << "/" << rep.checks.size()
            << " checks passed\n";
  return rep.all_passed() ? 0 : 1;
}
