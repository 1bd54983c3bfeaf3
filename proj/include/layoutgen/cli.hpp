#pragma once

namespace layoutgen {

/// Parses and runs one command line. Returns 0 on success, 1 on validation
/// or usage errors, 2 on I/O errors.
int run_cli(int argc, char** argv);

}  // namespace layoutgen
