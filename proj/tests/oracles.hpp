#pragma once

// Independent reference values for the tests. Nothing here calls into the library.

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle
{
	inline constexpr double pi = std::numbers::pi;

	/// J0 by its power series (fine for |x| < 10).
	inline double bessel_j0(double x)
	{
		double term = 1.0, sum = 1.0;
		const double q = -0.25 * x * x;
		for (int k = 1; k < 80; ++k)
		{
			term *= q / (static_cast<double>(k) * k);
			sum += term;
		}
		return sum;
	}

	inline double bisect(const std::function<double(double)> &f, double a, double b)
	{
		double fa = f(a);
		for (int i = 0; i < 200 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++i)
		{
			const double c = 0.5 * (a + b), fc = f(c);
			if ((fc < 0.0) == (fa < 0.0))
			{
				a = c;
				fa = fc;
			}
			else
				b = c;
		}
		return 0.5 * (a + b);
	}

	/// First zero of J0.
	inline double j01() { return bisect(bessel_j0, 2.0, 3.0); }

	/// Dirichlet Laplacian on the unit disk: j01^2.
	inline double disk_lambda2(double r = 1.0) { return j01() * j01() / (r * r); }

	/// Dirichlet Laplacian on a square of side s: 2 pi^2 / s^2 (separation of variables).
	inline double square_lambda2(double s = 1.0) { return 2.0 * pi * pi / (s * s); }

	/// First radial eigenvalue of the p-Laplacian on the unit disk by RK4 on
	///   u' = -v,  (r v^{p-1})' = lambda r u^{p-1}   (v = -u' > 0)
	/// with lambda found by bisection on u(1) = 0. Independent of the library's shooting.
	inline double disk_lambda_p(double p)
	{
		auto end_value = [p](double lam) {
			const int n = 20000;
			// state: u, W = r v^{p-1}; start at small r0 with the series u = 1 - c r^{q}.
			const double q = p / (p - 1.0);
			const double r0 = 1e-6;
			const double c = std::pow(lam / 2.0, 1.0 / (p - 1.0)) / q;
			double u = 1.0 - c * std::pow(r0, q);
			double W = r0 * std::pow(c * q * std::pow(r0, q - 1.0), p - 1.0);
			auto rhs = [&](double r, double uu, double WW, double &du, double &dW) {
				const double v = std::pow(std::max(WW, 0.0) / r, 1.0 / (p - 1.0));
				du = -v;
				dW = lam * r * std::pow(std::abs(uu), p - 1.0) * (uu < 0.0 ? -1.0 : 1.0);
			};
			double r = r0;
			const double hh = (1.0 - r0) / n;
			for (int i = 0; i < n; ++i)
			{
				double k1u, k1W, k2u, k2W, k3u, k3W, k4u, k4W;
				rhs(r, u, W, k1u, k1W);
				rhs(r + 0.5 * hh, u + 0.5 * hh * k1u, W + 0.5 * hh * k1W, k2u, k2W);
				rhs(r + 0.5 * hh, u + 0.5 * hh * k2u, W + 0.5 * hh * k2W, k3u, k3W);
				rhs(r + hh, u + hh * k3u, W + hh * k3W, k4u, k4W);
				u += hh / 6.0 * (k1u + 2 * k2u + 2 * k3u + k4u);
				W += hh / 6.0 * (k1W + 2 * k2W + 2 * k3W + k4W);
				r += hh;
			}
			return u;
		};
		// u(1) > 0 below the first eigenvalue and < 0 just above it; the bracket stays under the
		// second radial eigenvalue for 1.5 <= p <= 3.
		return bisect(end_value, 1.0, 12.0);
	}

	/// Area of the unit l^r ball: 4 Gamma(1 + 1/r)^2 / Gamma(1 + 2/r).
	inline double lr_ball_area(double r)
	{
		return 4.0 * std::tgamma(1.0 + 1.0 / r) * std::tgamma(1.0 + 1.0 / r) / std::tgamma(1.0 + 2.0 / r);
	}

	inline double lq_norm(const Eigen::Vector2d &x, double q)
	{
		return std::pow(std::pow(std::abs(x[0]), q) + std::pow(std::abs(x[1]), q), 1.0 / q);
	}

	inline double ellipse_norm(const Eigen::Matrix2d &A, const Eigen::Vector2d &x) { return std::sqrt(x.dot(A * x)); }

	/// sup over unit directions of <xi, eta> / F(xi), by dense sampling.
	inline double polar_by_sampling(const std::function<double(const Eigen::Vector2d &)> &F, const Eigen::Vector2d &eta,
									int n = 200000)
	{
		double best = 0.0;
		for (int k = 0; k < n; ++k)
		{
			const double t = 2.0 * pi * k / n;
			const Eigen::Vector2d xi(std::cos(t), std::sin(t));
			best = std::max(best, xi.dot(eta) / F(xi));
		}
		return best;
	}

	/// Minimum eigenvalue of D(|xi|^{p-2} xi) over |xi| = 1: min(1, p - 1).
	inline double euclidean_ellipticity(double p) { return std::min(1.0, p - 1.0); }
} // namespace oracle
