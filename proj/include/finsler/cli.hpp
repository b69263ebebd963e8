#pragma once

#include <string>
#include <vector>

namespace finsler::cli
{
	enum ExitCode
	{
		Ok = 0,
		CheckFailed = 1,
		UsageError = 2,
		SolverFailed = 3
	};

	/// Entry point of the `finsler` binary: solve, derivative, verify, optimize, wulff.
	int run(int argc, const char *const *argv);
	int run(const std::vector<std::string> &args);
} // namespace finsler::cli
