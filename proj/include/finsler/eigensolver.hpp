#pragma once

#include <finsler/anisotropy.hpp>
#include <finsler/mesh.hpp>

#include <Eigen/Sparse>

#include <array>
#include <cstdint>
#include <vector>

namespace finsler
{
	/// P1 discretization: per-triangle constant basis gradients and integration weights.
	///
	/// For a plain mesh the weight is the triangle area. For the pullback of phi(Omega) onto
	/// a reference mesh the gradients are (grad_ref lambda_i) J with J = (D phi)^{-1}, and the
	/// weight is area_ref |det D phi|, with phi affine on every triangle.
	struct P1Operator
	{
		std::vector<Tri> tris;
		std::vector<std::array<Vec2, 3>> grads;
		std::vector<double> weights;
		std::vector<int> dofs; ///< vertex -> interior DOF, -1 on the boundary
		int n_dofs = 0;

		static P1Operator from_mesh(const TriMesh &mesh);
		static P1Operator pullback(const TriMesh &ref, const VectorMap &phi);

		int n_vertices() const { return static_cast<int>(dofs.size()); }
		Vec2 gradient(int t, const std::vector<double> &u) const;
	};

	struct SolverOpts
	{
		enum class Method
		{
			InversePower,
			RayleighDescent
		};
		double tol = 1e-10;
		int max_iter = 10000;
		/// Regularization levels, relative to the mean |Du|^2 of the initial guess.
		std::vector<double> eps_schedule{1e-2, 1e-4, 1e-8, 0.0};
		Method method = Method::InversePower;
		std::uint64_t seed = 1;
		int threads = 1;
	};

	struct EigenPair
	{
		double lambda = 0.0;
		std::vector<double> u; ///< per vertex, zero on the boundary
		double p = 2.0;
		double residual = 0.0; ///< relative change of lambda over the last iteration
		int iterations = 0;
		std::vector<double> history; ///< lambda per outer iteration of the final (eps = 0) stage
	};

	/// Carries the last iterate when the iteration fails.
	class SolverError : public Error
	{
	public:
		SolverError(const std::string &msg, EigenPair last)
			: Error(msg), last_(std::move(last)) {}
		const EigenPair &last_iterate() const { return last_; }
		double residual() const { return last_.residual; }

	private:
		EigenPair last_;
	};

	struct ScalarWithGradient
	{
		double value;
		Eigen::VectorXd gradient; ///< over interior DOFs
	};

	/// sum_T w_T p V(Du|_T), V = (F^2 + eps)^{p/2}/p; equals sum_T w_T F^p(Du|_T) for eps = 0.
	ScalarWithGradient energy(const P1Operator &op, const AnisotropyModel &m, double p, double eps,
							  const std::vector<double> &u, int threads = 1);
	ScalarWithGradient energy(const TriMesh &mesh, const AnisotropyModel &m, double p, double eps,
							  const std::vector<double> &u);

	/// sum_T w_T/3 sum_{edge midpoints} |u|^p.
	ScalarWithGradient mass(const P1Operator &op, double p, const std::vector<double> &u, int threads = 1);
	ScalarWithGradient mass(const TriMesh &mesh, double p, const std::vector<double> &u);

	/// First Dirichlet eigenpair of the Finsler p-Laplacian on `mesh`.
	EigenPair solve_first(const TriMesh &mesh, const AnisotropyModel &m, double p, const SolverOpts &opts = {});

	/// First eigenpair of phi(ref) computed on the reference mesh; `u` holds the pullback u o phi.
	EigenPair solve_pullback(const TriMesh &ref, const VectorMap &phi, const AnisotropyModel &m, double p,
							 const SolverOpts &opts = {});

	/// Core solver on an arbitrary P1 operator.
	EigenPair solve_first(const P1Operator &op, const AnisotropyModel &m, double p, const SolverOpts &opts = {});

	/// First eigenvalue of the radial p-Laplacian on the unit disk, equal to lambda_p(W) for the
	/// unit Wulff shape of any norm. Computed by shooting: with lambda = 1 the first zero R of
	/// the radial profile gives lambda_p = R^p.
	double unit_wulff_eigenvalue(double p);
} // namespace finsler
