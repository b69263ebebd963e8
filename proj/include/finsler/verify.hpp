#pragma once

#include <finsler/shapecalc.hpp>

#include <map>
#include <string>
#include <vector>

namespace finsler
{
	struct CheckLevel
	{
		double h;
		double observed;
		double expected;
		double rel_err;
	};

	struct CheckResult
	{
		std::string name;
		std::vector<CheckLevel> levels; ///< ordered by decreasing h
		bool pass = false;
		std::string tolerance;
		double runtime = 0.0; ///< seconds
		std::map<std::string, double> extras;
		std::string note;
	};

	struct VerifyOpts
	{
		std::vector<double> hs{0.08, 0.04, 0.02};
		SolverOpts solver;
	};

	/// Mesh sizes h0, h0/2, ... (n levels).
	std::vector<double> level_sizes(double h0, int n);

	/// lambda(t mesh) against t^{-p} lambda(mesh) at every level; tolerance 1e-10.
	CheckResult check_scaling(const Shape &shape, const AnisotropyModel &m, double p, double t, const VerifyOpts &opts = {});

	/// lambda(inner) >= lambda(outer) at every level; rel_err holds the relative margin.
	CheckResult check_monotonicity(const Shape &outer, const Shape &inner, const AnisotropyModel &m, double p,
								   const VerifyOpts &opts = {});

	/// p lambda_p^{1/p} <= s lambda_s^{1/s} (1 + 0.01) at the finest level.
	CheckResult check_ps_inequality(const Shape &shape, const AnisotropyModel &m, double p, double s,
									const VerifyOpts &opts = {});

	/// lambda of the equal-area Wulff shape against lambda(shape); extras["margin"] is the finest relative gap.
	CheckResult check_faber_krahn(const Shape &shape, const AnisotropyModel &m, double p, const VerifyOpts &opts = {});

	/// Length-weighted coefficient of variation of F(Du) over the boundary.
	double boundary_cv(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p);

	/// CV on Wulff meshes must decrease and end <= 5%; the square control must stay >= 20%.
	CheckResult check_overdetermined(const AnisotropyModel &m, double p, const VerifyOpts &opts = {});

	/// Rellich-Pohozaev relative error: <= 2% at the finest level and strictly decreasing.
	CheckResult check_rellich(const Shape &shape, const AnisotropyModel &m, double p, const VerifyOpts &opts = {});

	/// Hadamard, volume and (optionally) finite-difference forms across levels. rel_err is the largest
	/// pairwise discrepancy (for the identity field the Hadamard error against -p lambda is included; for a
	/// translation all values are measured against p lambda). Tolerance 2% for the identity, 5% otherwise,
	/// at the finest level, with a decreasing trend.
	CheckResult check_hadamard(const Shape &shape, const AnisotropyModel &m, double p, const VectorField &field,
							   const VerifyOpts &opts = {}, bool with_fd = true);

	/// Random-sample identities of the norm: homogeneity, Euler, duality inequality, polar involution,
	/// gradient against central differences. extras holds the failure count per identity.
	CheckResult check_anisotropy(const AnisotropyModel &m, int samples = 1000, std::uint64_t seed = 1);

	/// Named suites: all, scaling, monotonicity, ps, faber-krahn, overdetermined, rellich, hadamard, anisotropy.
	std::vector<CheckResult> run_suite(const std::string &suite, const AnisotropyModel &m, double p,
									   const VerifyOpts &opts = {});

	std::string to_json(const std::vector<CheckResult> &results, int indent = 2);
	std::string format_table(const std::vector<CheckResult> &results);
} // namespace finsler
