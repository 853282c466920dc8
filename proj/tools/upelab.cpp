// Command-line front end: elaborate a signature file into its
// universe-polymorphic form.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "upelab/driver.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "upelab: elaborate impredicatively-sorted signatures into "
      "universe-polymorphic entries"};

  upelab::RunConfig cfg;
  app.add_option("-i,--input", cfg.input_path, "signature file to elaborate")->required();
  app.add_option("-c,--constraints", cfg.constraints_path,
                 "extra level equations, lines 'entry : level == level .'");
  app.add_option("-o,--output", cfg.output_path,
                 "elaborated signature file (required unless --dry-run)");
  app.add_option("--agda-out", cfg.agda_out_path, "also write an Agda-flavored rendering");
  app.add_flag("--heuristic", cfg.heuristic,
               "when the solver gets stuck, accept a verified guess (loses the "
               "maximal-generality guarantee)");
  app.add_flag("--trace", cfg.trace, "write a solver step log next to the output (.trace)");
  app.add_option("--fuel", cfg.fuel, "head-reduction step budget per checking pass")
      ->check(CLI::PositiveNumber);
  app.add_option("--pts", cfg.pts,
                 "input theory profile: I (two sorts, impredicative; default), "
                 "P (numbered predicative sorts), open (any tags)");
  app.add_flag("--dry-run", cfg.dry_run,
               "elaborate and list each entry's erased form with its generated "
               "level-variable names, writing no files");

  CLI11_PARSE(app, argc, argv);
  return upelab::run(cfg, std::cout, std::cerr);
}
