#include <finsler/anisotropy.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace finsler
{
	namespace
	{
		constexpr double kPi = std::numbers::pi;

		template <class... Ts>
		struct overloaded : Ts...
		{
			using Ts::operator()...;
		};
		template <class... Ts>
		overloaded(Ts...) -> overloaded<Ts...>;

		Vec2 unit(double theta) { return {std::cos(theta), std::sin(theta)}; }

		double lq_norm(const Vec2 &x, double q)
		{
			const double m = std::max(std::abs(x[0]), std::abs(x[1]));
			if (m == 0.0)
				return 0.0;
			const double s = std::pow(std::abs(x[0]) / m, q) + std::pow(std::abs(x[1]) / m, q);
			return m * std::pow(s, 1.0 / q);
		}

		Vec2 lq_gradient(const Vec2 &x, double q)
		{
			const double f = lq_norm(x, q);
			Vec2 g;
			for (int i = 0; i < 2; ++i)
				g[i] = std::copysign(std::pow(std::abs(x[i]) / f, q - 1.0), x[i]);
			return g;
		}

		// Golden-section maximization of f on [lo, hi].
		template <class Fn>
		double golden_max(Fn &&f, double lo, double hi, double tol = 1e-12)
		{
			const double r = (std::sqrt(5.0) - 1.0) / 2.0;
			double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
			double f1 = f(x1), f2 = f(x2);
			while (hi - lo > tol)
			{
				if (f1 < f2)
				{
					lo = x1;
					x1 = x2;
					f1 = f2;
					x2 = lo + r * (hi - lo);
					f2 = f(x2);
				}
				else
				{
					hi = x2;
					x2 = x1;
					f2 = f1;
					x1 = hi - r * (hi - lo);
					f1 = f(x1);
				}
			}
			return std::max(f1, f2);
		}

		// Shortest representation that reads back exactly.
		std::string fmt_double(double v)
		{
			char buf[64];
			const auto res = std::to_chars(buf, buf + sizeof(buf), v);
			return std::string(buf, res.ptr);
		}

		double parse_number(const std::string &s, const std::string &spec)
		{
			try
			{
				std::size_t used = 0;
				const double v = std::stod(s, &used);
				if (used != s.size())
					throw ModelError("");
				return v;
			}
			catch (const std::exception &)
			{
				throw ModelError("invalid number '" + s + "' in model spec '" + spec + "'");
			}
		}
	} // namespace

	AnisotropyModel::AnisotropyModel(Family f) : family_(std::move(f)) {}

	AnisotropyModel AnisotropyModel::euclidean()
	{
		AnisotropyModel m{Euclidean{}};
		m.a_ = m.b_ = 1.0;
		return m;
	}

	AnisotropyModel AnisotropyModel::ellipse(const Mat2 &A)
	{
		if (!A.allFinite() || std::abs(A(0, 1) - A(1, 0)) > 1e-14 * A.norm())
			throw ModelError("ellipse matrix must be finite and symmetric");
		if (!(A(0, 0) > 0.0) || !(A.determinant() > 0.0))
			throw ModelError("ellipse matrix must be symmetric positive definite");
		AnisotropyModel m{Ellipse{A}};
		m.compute_bounds();
		return m;
	}

	AnisotropyModel AnisotropyModel::lq(double q)
	{
		if (!std::isfinite(q) || q < 2.0)
			throw ModelError("lq exponent must satisfy q >= 2 (F must be C^2 away from the origin), got q = " + fmt_double(q));
		AnisotropyModel m{Lq{q}};
		m.compute_bounds();
		return m;
	}

	AnisotropyModel AnisotropyModel::regularized(const AnisotropyModel &base, double eps)
	{
		if (!(eps > 0.0) || !std::isfinite(eps))
			throw ModelError("regularization eps must be positive");
		AnisotropyModel m{Regularized{std::make_shared<const AnisotropyModel>(base), eps}};
		m.compute_bounds();
		return m;
	}

	AnisotropyModel AnisotropyModel::parse(const std::string &spec)
	{
		if (spec == "euclidean")
			return euclidean();
		if (spec.rfind("ellipse:", 0) == 0)
		{
			std::vector<double> vals;
			std::stringstream ss(spec.substr(8));
			std::string tok;
			while (std::getline(ss, tok, ','))
				vals.push_back(parse_number(tok, spec));
			if (vals.size() != 3)
				throw ModelError("ellipse spec needs three entries a11,a12,a22: '" + spec + "'");
			Mat2 A;
			A << vals[0], vals[1], vals[1], vals[2];
			return ellipse(A);
		}
		if (spec.rfind("lq:", 0) == 0)
			return lq(parse_number(spec.substr(3), spec));
		if (spec.rfind("reg:", 0) == 0)
		{
			const std::string rest = spec.substr(4);
			const auto pos = rest.rfind(':');
			if (pos == std::string::npos)
				throw ModelError("reg spec must be reg:<base>:eps: '" + spec + "'");
			return regularized(parse(rest.substr(0, pos)), parse_number(rest.substr(pos + 1), spec));
		}
		throw ModelError("unknown model spec '" + spec + "' (expected euclidean, ellipse:a11,a12,a22, lq:q or reg:<base>:eps)");
	}

	std::string AnisotropyModel::spec() const
	{
		return std::visit(
			overloaded{
				[](const Euclidean &) -> std::string { return "euclidean"; },
				[](const Ellipse &e) -> std::string {
					return "ellipse:" + fmt_double(e.A(0, 0)) + "," + fmt_double(e.A(0, 1)) + "," + fmt_double(e.A(1, 1));
				},
				[](const Lq &l) -> std::string { return "lq:" + fmt_double(l.q); },
				[](const Regularized &r) -> std::string { return "reg:" + r.base->spec() + ":" + fmt_double(r.eps); },
			},
			family_);
	}

	void AnisotropyModel::compute_bounds()
	{
		constexpr int n = 256;
		int imin = 0, imax = 0;
		double vmin = value(unit(0.0)), vmax = vmin;
		for (int k = 1; k < n; ++k)
		{
			const double v = value(unit(2.0 * kPi * k / n));
			if (v < vmin)
			{
				vmin = v;
				imin = k;
			}
			if (v > vmax)
			{
				vmax = v;
				imax = k;
			}
		}
		const double dt = 2.0 * kPi / n;
		const double tmin = 2.0 * kPi * imin / n, tmax = 2.0 * kPi * imax / n;
		vmin = std::min(vmin, -golden_max([&](double t) { return -value(unit(t)); }, tmin - dt, tmin + dt));
		vmax = std::max(vmax, golden_max([&](double t) { return value(unit(t)); }, tmax - dt, tmax + dt));
		a_ = vmin * (1.0 - 1e-12);
		b_ = vmax * (1.0 + 1e-12);
	}

	double AnisotropyModel::value(const Vec2 &xi) const
	{
		return std::visit(
			overloaded{
				[&](const Euclidean &) { return std::hypot(xi[0], xi[1]); },
				[&](const Ellipse &e) { return std::sqrt(std::max(0.0, xi.dot(e.A * xi))); },
				[&](const Lq &l) { return lq_norm(xi, l.q); },
				[&](const Regularized &r) {
					const double fb = r.base->value(xi);
					return std::sqrt(fb * fb + r.eps * xi.squaredNorm());
				},
			},
			family_);
	}

	Vec2 AnisotropyModel::gradient(const Vec2 &xi) const
	{
		if (xi[0] == 0.0 && xi[1] == 0.0)
		{
			if (std::holds_alternative<Regularized>(family_))
				return Vec2::Zero();
			throw DomainError("gradient of F is undefined at the origin");
		}
		return std::visit(
			overloaded{
				[&](const Euclidean &) -> Vec2 { return xi / std::hypot(xi[0], xi[1]); },
				[&](const Ellipse &e) -> Vec2 { return e.A * xi / std::sqrt(xi.dot(e.A * xi)); },
				[&](const Lq &l) -> Vec2 { return lq_gradient(xi, l.q); },
				[&](const Regularized &r) -> Vec2 {
					const double fb = r.base->value(xi);
					const Vec2 gg = fb * r.base->gradient(xi) + r.eps * xi;
					return gg / std::sqrt(fb * fb + r.eps * xi.squaredNorm());
				},
			},
			family_);
	}

	AnisotropyModel::HalfSquareJet AnisotropyModel::half_square(const Vec2 &xi) const
	{
		const bool zero = xi[0] == 0.0 && xi[1] == 0.0;
		return std::visit(
			overloaded{
				[&](const Euclidean &) -> HalfSquareJet { return {0.5 * xi.squaredNorm(), xi, Mat2::Identity()}; },
				[&](const Ellipse &e) -> HalfSquareJet { return {0.5 * xi.dot(e.A * xi), e.A * xi, e.A}; },
				[&](const Lq &l) -> HalfSquareJet {
					if (zero)
						return {0.0, Vec2::Zero(), a_ * a_ * Mat2::Identity()};
					const double f = lq_norm(xi, l.q);
					const Vec2 g = lq_gradient(xi, l.q);
					Mat2 d = Mat2::Zero();
					for (int i = 0; i < 2; ++i)
						d(i, i) = std::pow(std::abs(xi[i]) / f, l.q - 2.0);
					return {0.5 * f * f, f * g, (l.q - 1.0) * d - (l.q - 2.0) * g * g.transpose()};
				},
				[&](const Regularized &r) -> HalfSquareJet {
					HalfSquareJet j = r.base->half_square(xi);
					j.value += 0.5 * r.eps * xi.squaredNorm();
					j.grad += r.eps * xi;
					j.hess += r.eps * Mat2::Identity();
					return j;
				},
			},
			family_);
	}

	Mat2 AnisotropyModel::hessian(const Vec2 &xi) const
	{
		if (xi[0] == 0.0 && xi[1] == 0.0)
			throw DomainError("Hessian of F is undefined at the origin");
		const HalfSquareJet j = half_square(xi);
		const double f = value(xi);
		const Vec2 g = j.grad / f;
		return (j.hess - g * g.transpose()) / f;
	}

	double AnisotropyModel::polar(const Vec2 &eta) const
	{
		return std::visit(
			overloaded{
				[&](const Euclidean &) { return std::hypot(eta[0], eta[1]); },
				[&](const Ellipse &e) { return std::sqrt(std::max(0.0, eta.dot(e.A.inverse() * eta))); },
				[&](const Lq &l) { return lq_norm(eta, l.q / (l.q - 1.0)); },
				[&](const Regularized &) { return polar_numeric(eta); },
			},
			family_);
	}

	double AnisotropyModel::polar_numeric(const Vec2 &eta) const
	{
		if (eta[0] == 0.0 && eta[1] == 0.0)
			return 0.0;
		constexpr int n = 1024;
		auto ratio = [&](double t) {
			const Vec2 d = unit(t);
			return d.dot(eta) / value(d);
		};
		int best = 0;
		double vbest = ratio(0.0);
		for (int k = 1; k < n; ++k)
		{
			const double v = ratio(2.0 * kPi * k / n);
			if (v > vbest)
			{
				vbest = v;
				best = k;
			}
		}
		const double dt = 2.0 * kPi / n;
		const double t0 = 2.0 * kPi * best / n;
		return std::max(vbest, golden_max(ratio, t0 - dt, t0 + dt));
	}

	Vec2 AnisotropyModel::polar_gradient(const Vec2 &eta) const
	{
		if (eta[0] == 0.0 && eta[1] == 0.0)
			throw DomainError("gradient of the polar function is undefined at the origin");
		return std::visit(
			overloaded{
				[&](const Euclidean &) -> Vec2 { return eta / std::hypot(eta[0], eta[1]); },
				[&](const Ellipse &e) -> Vec2 {
					const Vec2 w = e.A.inverse() * eta;
					return w / std::sqrt(eta.dot(w));
				},
				[&](const Lq &l) -> Vec2 { return lq_gradient(eta, l.q / (l.q - 1.0)); },
				[&](const Regularized &) -> Vec2 {
					// Envelope theorem: the maximizer xi* of <xi, eta>/F(xi) gives grad F°(eta) = xi*/F(xi*).
					constexpr int n = 1024;
					auto ratio = [&](double t) {
						const Vec2 d = unit(t);
						return d.dot(eta) / value(d);
					};
					int best = 0;
					double vbest = ratio(0.0);
					for (int k = 1; k < n; ++k)
					{
						const double v = ratio(2.0 * kPi * k / n);
						if (v > vbest)
						{
							vbest = v;
							best = k;
						}
					}
					const double dt = 2.0 * kPi / n;
					double lo = 2.0 * kPi * best / n - dt, hi = lo + 2.0 * dt;
					const double r = (std::sqrt(5.0) - 1.0) / 2.0;
					while (hi - lo > 1e-12)
					{
						const double x1 = hi - r * (hi - lo), x2 = lo + r * (hi - lo);
						if (ratio(x1) < ratio(x2))
							lo = x1;
						else
							hi = x2;
					}
					const Vec2 d = unit(0.5 * (lo + hi));
					return d / value(d);
				},
			},
			family_);
	}

	AnisotropyModel AnisotropyModel::polar_model() const
	{
		return std::visit(
			overloaded{
				[&](const Euclidean &) { return euclidean(); },
				[&](const Ellipse &e) { return ellipse(e.A.inverse()); },
				[&](const Lq &l) {
					// The dual exponent q' = q/(q-1) may fall below 2, so bypass the factory check.
					AnisotropyModel m{Lq{l.q / (l.q - 1.0)}};
					m.compute_bounds();
					return m;
				},
				[&](const Regularized &) -> AnisotropyModel {
					throw ModelError("polar_model is only available for the analytic families");
				},
			},
			family_);
	}

	EnergyJet energy_jet(const AnisotropyModel &m, double p, double eps, const Vec2 &xi, double floor)
	{
		const auto g = m.half_square(xi);
		const double s = 2.0 * g.value + eps;
		EnergyJet out;
		out.value = std::pow(s, 0.5 * p) / p;
		if (g.grad.isZero(0.0))
			out.grad = Vec2::Zero();
		else
			out.grad = std::pow(s, 0.5 * p - 1.0) * g.grad;
		const double sh = std::max(s, floor);
		if (sh > 0.0)
			out.hess = std::pow(sh, 0.5 * p - 1.0) * g.hess + (p - 2.0) * std::pow(sh, 0.5 * p - 2.0) * g.grad * g.grad.transpose();
		else
			out.hess = Mat2::Zero();
		return out;
	}

	RegularizedEnergy regularized_energy(const AnisotropyModel &m, double p, double eps, const Vec2 &xi)
	{
		const EnergyJet j = energy_jet(m, p, eps, xi);
		return {j.value, j.grad};
	}

	std::vector<Vec2> wulff_polygon(const AnisotropyModel &m, int n)
	{
		if (n < 8)
			throw ModelError("wulff_polygon needs n >= 8");
		std::vector<Vec2> pts(n);
		for (int k = 0; k < n; ++k)
			pts[k] = m.gradient(unit(2.0 * kPi * k / n));
		return pts;
	}

	double wulff_area(const AnisotropyModel &m, int n)
	{
		const auto pts = wulff_polygon(m, n);
		double twice = 0.0;
		for (int k = 0; k < n; ++k)
		{
			const Vec2 &a = pts[k];
			const Vec2 &b = pts[(k + 1) % n];
			twice += a[0] * b[1] - a[1] * b[0];
		}
		return 0.5 * twice;
	}

	EllipticityProbe ellipticity_probe(const AnisotropyModel &m, double p, int samples, std::uint64_t seed)
	{
		if (samples < 1)
			return {false, 0.0, "ellipticity_probe needs at least one sample"};
		std::mt19937_64 rng(seed);
		std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
		// D(F^{p-1} F_xi) is the Hessian of F^p/p.
		auto flux = [&](const Vec2 &x) -> Vec2 { return std::pow(m.value(x), p - 1.0) * m.gradient(x); };
		double gamma = std::numeric_limits<double>::infinity();
		for (int s = 0; s < samples; ++s)
		{
			const Vec2 eta = unit(angle(rng));
			const Vec2 xi = unit(angle(rng));
			const double h = 1e-6 * eta.norm();
			const Vec2 d = (flux(eta + h * xi) - flux(eta - h * xi)) / (2.0 * h);
			const double ratio = xi.dot(d) / (std::pow(eta.norm(), p - 2.0) * xi.squaredNorm());
			if (!(ratio > 0.0))
			{
				char buf[160];
				std::snprintf(buf, sizeof(buf), "non-positive ellipticity probe %.3e at eta=(%.6f,%.6f), xi=(%.6f,%.6f)",
							  ratio, eta[0], eta[1], xi[0], xi[1]);
				return {false, ratio, buf};
			}
			gamma = std::min(gamma, ratio);
		}
		return {true, gamma, ""};
	}
} // namespace finsler
