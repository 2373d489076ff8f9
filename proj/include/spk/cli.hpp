#pragma once

namespace spk {

// Entry point of the spk tool; returns the process exit code
// (0 ok, 1 verification failure, 2 invalid config, 3 no convergence).
int run_cli(int argc, char** argv);

}  // namespace spk
