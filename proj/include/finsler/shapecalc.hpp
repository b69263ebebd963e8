#pragma once

#include <finsler/eigensolver.hpp>

#include <optional>
#include <string>
#include <vector>

namespace finsler
{
	/// Perturbation field psi (or chi = psi o phi^{-1} on an image domain).
	///
	/// Analytic fields are evaluated pointwise; nodal fields carry one vector per mesh vertex
	/// and are interpolated piecewise linearly.
	class VectorField
	{
	public:
		enum class Kind
		{
			Zero,
			Identity,
			Translation,
			RadialBump,
			NormalBump,
			Nodal
		};

		static VectorField zero();
		/// psi(x) = x
		static VectorField identity();
		static VectorField translation(const Vec2 &d);
		/// psi(x) = amp (1 - s^2)^3_+ (x - c)/r, s = |x - c|/r.
		static VectorField radial_bump(const Vec2 &center, double radius, double amplitude);
		/// psi(x) = amp (1 - t^2)^3_+ |x|^2 x, t = (theta - theta0)/width: a bump pushing an arc of the
		/// boundary of a domain around the origin along its radial direction.
		static VectorField normal_bump(double theta0, double width, double amplitude);
		static VectorField nodal(std::vector<Vec2> values);
		/// Reads `vx,vy` columns (header `x,y,vx,vy`) with one row per vertex.
		static VectorField nodal_from_csv(const std::string &path);
		/// `identity`, `translate:dx,dy`, `bump:cx,cy,r,amp` or `nodal:file.csv`.
		static VectorField parse(const std::string &spec);

		Kind kind() const { return kind_; }
		bool analytic() const { return kind_ != Kind::Nodal; }

		/// Analytic evaluation; throws for nodal fields.
		Vec2 value(const Vec2 &x) const;
		/// Analytic Jacobian (rows are components); throws for nodal fields.
		Mat2 jacobian(const Vec2 &x) const;

		/// Per-vertex values on `mesh` (evaluated for analytic fields, checked for nodal ones).
		std::vector<Vec2> vertex_values(const TriMesh &mesh) const;
		/// Value at the midpoint of a boundary edge.
		Vec2 edge_value(const TriMesh &mesh, const BoundaryEdge &e) const;

		VectorField scaled(double s) const;
		/// Pointwise sum on the vertices of `mesh` (a nodal field).
		static VectorField sum(const VectorField &a, const VectorField &b, const TriMesh &mesh);

	private:
		Kind kind_ = Kind::Zero;
		Vec2 vec_ = Vec2::Zero(); // translation or bump center
		double r_ = 1.0, amp_ = 0.0, theta0_ = 0.0;
		double factor_ = 1.0;
		std::vector<Vec2> nodal_;
	};

	/// Volume form of the shape derivative on the image domain:
	///   sum_T |T| (F^p(Du) - lambda rho_T) div chi - p sum_T |T| Du^T Dchi F^{p-1}F_xi(Du)
	/// with rho_T the midpoint-quadrature density of |u|^p and chi interpolated piecewise linearly.
	double d_lambda_volume(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m, double p,
						   const VectorField &chi);

	/// Per-vertex F(Du) on the boundary (zero inside), recovered from the residual of the discrete
	/// equation tested with boundary hat functions: the conormal flux F^{p-1}(Du) F(nu) per unit length.
	std::vector<double> boundary_normal_derivative(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m,
												   double p);

	struct HadamardValue
	{
		double value;		   ///< (1-p) sum_e |e| <F^p chi, nu_e> with the recovered trace, trapezoidal per edge
		double value_element;  ///< single-triangle trace F^p(Du|_T(e)) with chi at edge midpoints
		double value_nu_f;	   ///< single-triangle trace |Du|_T(e) . F_xi(nu_e)|^p with chi at edge midpoints
		bool corner_warning; ///< boundary has corners; the boundary form assumes a C^2 domain
	};
	HadamardValue d_lambda_hadamard_detail(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m,
										   double p, const VectorField &chi);
	double d_lambda_hadamard(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m, double p,
							 const VectorField &chi);

	/// Image vertices phi(x_i) + t psi(x_i) on the connectivity of `ref`; throws MappingError.
	TriMesh perturbed_mesh(const TriMesh &ref, const VectorMap &phi, const VectorField &psi, double t);

	/// Default finite-difference step 1e-4 diam(Omega)/max|psi|.
	double default_fd_step(const TriMesh &ref, const VectorField &psi);

	/// (lambda(phi + t psi) - lambda(phi - t psi)) / (2t). t <= 0 selects the default step.
	double d_lambda_fd(const TriMesh &ref, const VectorMap &phi, const VectorField &psi, const AnisotropyModel &m,
					   double p, double t, const SolverOpts &opts = {});

	struct DerivativeReport
	{
		std::optional<double> d_volume_form;
		std::optional<double> d_hadamard;
		std::optional<double> d_hadamard_element;
		std::optional<double> d_hadamard_nu_f;
		std::optional<double> d_fd;
		std::optional<double> d_fd_half; ///< Richardson companion at t/2
		double fd_step = 0.0;
		double h = 0.0;
		double lambda = 0.0;
		bool corner_warning = false;
		std::optional<double> disc_volume_hadamard;
		std::optional<double> disc_volume_fd;
		std::optional<double> disc_hadamard_fd;
	};

	struct DerivativeForms
	{
		bool volume = true, hadamard = true, fd = true;
	};

	/// All requested estimates of d lambda(psi) at phi = identity on `mesh`.
	DerivativeReport derivative_report(const TriMesh &mesh, const VectorField &psi, const AnisotropyModel &m, double p,
									   const SolverOpts &opts = {}, DerivativeForms forms = {}, double fd_step = 0.0);

	struct RellichPohozaev
	{
		double lhs, rhs, rel_err;
	};
	/// lambda versus (p-1)/p sum_e |e| F^p(Du) <x, nu_e> (recovered trace) in the mesh's own coordinates.
	RellichPohozaev rellich_pohozaev_check(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p);

	/// Relative difference |a - b| / max(|a|, |b|).
	double relative_difference(double a, double b);
} // namespace finsler
