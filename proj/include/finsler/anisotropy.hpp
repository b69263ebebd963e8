#pragma once

#include <finsler/types.hpp>

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace finsler
{
	/// Convex, even, 1-homogeneous norm F on R^2 together with its polar F°.
	///
	/// Families:
	///  - Euclidean:    F(x) = |x|
	///  - Ellipse(A):   F(x) = sqrt(x^T A x), A symmetric positive definite
	///  - Lq(q):        F(x) = (|x1|^q + |x2|^q)^(1/q), q >= 2
	///  - Regularized:  F(x) = sqrt(F_base(x)^2 + eps |x|^2)
	///
	/// Models are immutable; every evaluator is a pure function.
	class AnisotropyModel
	{
	public:
		struct Euclidean
		{
		};
		struct Ellipse
		{
			Mat2 A;
		};
		struct Lq
		{
			double q;
		};
		struct Regularized
		{
			std::shared_ptr<const AnisotropyModel> base;
			double eps;
		};
		using Family = std::variant<Euclidean, Ellipse, Lq, Regularized>;

		/// Value, gradient and Hessian of G = F^2 / 2.
		struct HalfSquareJet
		{
			double value;
			Vec2 grad;
			Mat2 hess;
		};

		static AnisotropyModel euclidean();
		static AnisotropyModel ellipse(const Mat2 &A);
		static AnisotropyModel lq(double q);
		static AnisotropyModel regularized(const AnisotropyModel &base, double eps);

		/// Parses `euclidean`, `ellipse:a11,a12,a22`, `lq:q` or `reg:<base>:eps`.
		static AnisotropyModel parse(const std::string &spec);

		const Family &family() const { return family_; }
		std::string spec() const;

		/// Norm-equivalence constants with a|x| <= F(x) <= b|x|.
		double lower_bound() const { return a_; }
		double upper_bound() const { return b_; }

		double value(const Vec2 &xi) const;
		/// F_xi(xi). Throws DomainError at xi = 0 except for the regularized family (returns 0).
		Vec2 gradient(const Vec2 &xi) const;
		/// Hessian of F at xi != 0.
		Mat2 hessian(const Vec2 &xi) const;
		/// F^2/2 with derivatives; well defined at xi = 0.
		HalfSquareJet half_square(const Vec2 &xi) const;

		double polar(const Vec2 &eta) const;
		/// Gradient of the polar function F°.
		Vec2 polar_gradient(const Vec2 &eta) const;

		/// The model whose value is F°. Only for the analytic families.
		AnisotropyModel polar_model() const;

	private:
		explicit AnisotropyModel(Family f);
		void compute_bounds();
		double polar_numeric(const Vec2 &eta) const;

		Family family_;
		double a_ = 1.0;
		double b_ = 1.0;
	};

	/// V(xi) = (F(xi)^2 + eps)^(p/2) / p and its gradient.
	struct RegularizedEnergy
	{
		double value;
		Vec2 gradient;
	};
	RegularizedEnergy regularized_energy(const AnisotropyModel &m, double p, double eps, const Vec2 &xi);

	/// Value, gradient and Hessian of V(xi) = (F^2 + eps)^(p/2) / p.
	/// `floor` bounds F^2 + eps from below in the Hessian only.
	struct EnergyJet
	{
		double value;
		Vec2 grad;
		Mat2 hess;
	};
	EnergyJet energy_jet(const AnisotropyModel &m, double p, double eps, const Vec2 &xi, double floor = 0.0);

	/// Vertices of the Wulff shape boundary {F° = 1}: v_k = F_xi(cos t_k, sin t_k), t_k = 2 pi k / n.
	std::vector<Vec2> wulff_polygon(const AnisotropyModel &m, int n);

	/// Shoelace area of wulff_polygon(m, n); approximates |W|.
	double wulff_area(const AnisotropyModel &m, int n);

	struct EllipticityProbe
	{
		bool ok;
		double gamma;
		std::string message;
	};

	/// Minimum over random unit (eta, xi) pairs of xi^T D(F^{p-1} F_xi)(eta) xi, with the
	/// derivative taken by central differences.
	EllipticityProbe ellipticity_probe(const AnisotropyModel &m, double p, int samples, std::uint64_t seed = 1);
} // namespace finsler
