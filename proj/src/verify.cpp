#include <finsler/verify.hpp>

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

namespace finsler
{
	namespace
	{
		using Clock = std::chrono::steady_clock;

		double seconds_since(Clock::time_point t0)
		{
			return std::chrono::duration<double>(Clock::now() - t0).count();
		}

		double rel(double observed, double expected)
		{
			return std::abs(observed - expected) / std::max(std::abs(expected), 1e-300);
		}

		bool strictly_decreasing(const std::vector<CheckLevel> &levels)
		{
			for (std::size_t i = 1; i < levels.size(); ++i)
				if (!(levels[i].rel_err < levels[i - 1].rel_err))
					return false;
			return true;
		}

		EigenPair solve(const TriMesh &mesh, const AnisotropyModel &m, double p, const VerifyOpts &opts)
		{
			return solve_first(mesh, m, p, opts.solver);
		}

		std::string fmt(const char *f, double v)
		{
			char buf[64];
			std::snprintf(buf, sizeof buf, f, v);
			return buf;
		}
	} // namespace

	std::vector<double> level_sizes(double h0, int n)
	{
		std::vector<double> hs;
		for (int k = 0; k < n; ++k)
			hs.push_back(h0 / std::pow(2.0, k));
		return hs;
	}

	CheckResult check_scaling(const Shape &shape, const AnisotropyModel &m, double p, double t, const VerifyOpts &opts)
	{
		if (!(t > 0.0))
			throw Error("scaling factor must be positive");
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "scaling " + shape_spec(shape) + " t=" + fmt("%g", t) + " p=" + fmt("%g", p);
		r.tolerance = "rel_err <= 1e-10 at every level";
		r.pass = true;
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape, h);
			const double lam = solve(mesh, m, p, opts).lambda;
			const double lam_t = solve(scale(mesh, t), m, p, opts).lambda;
			const double expected = std::pow(t, -p) * lam;
			r.levels.push_back({mesh.max_edge(), lam_t, expected, rel(lam_t, expected)});
			r.pass = r.pass && r.levels.back().rel_err <= 1e-10;
		}
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_monotonicity(const Shape &outer, const Shape &inner, const AnisotropyModel &m, double p,
								   const VerifyOpts &opts)
	{
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "monotonicity " + shape_spec(inner) + " in " + shape_spec(outer) + " p=" + fmt("%g", p);
		r.tolerance = "lambda(inner) > lambda(outer) at every level";
		r.pass = true;
		for (double h : opts.hs)
		{
			const TriMesh mo = generate(outer, h);
			const double lo = solve(mo, m, p, opts).lambda;
			const double li = solve(generate(inner, h), m, p, opts).lambda;
			r.levels.push_back({mo.max_edge(), li, lo, (li - lo) / lo});
			r.pass = r.pass && li > lo;
		}
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_ps_inequality(const Shape &shape, const AnisotropyModel &m, double p, double s,
									const VerifyOpts &opts)
	{
		if (!(p > 1.0 && s >= p))
			throw Error("p-s inequality needs 1 < p <= s");
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "ps-inequality " + shape_spec(shape) + " p=" + fmt("%g", p) + " s=" + fmt("%g", s);
		r.tolerance = "p lambda_p^(1/p) <= 1.01 s lambda_s^(1/s) at the finest level";
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape, h);
			const double lp = solve(mesh, m, p, opts).lambda;
			const double ls = s == p ? lp : solve(mesh, m, s, opts).lambda;
			const double lhs = p * std::pow(lp, 1.0 / p);
			const double rhs = s * std::pow(ls, 1.0 / s);
			r.levels.push_back({mesh.max_edge(), lhs, rhs, (lhs - rhs) / rhs});
		}
		r.pass = !r.levels.empty() && r.levels.back().observed <= 1.01 * r.levels.back().expected;
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_faber_krahn(const Shape &shape, const AnisotropyModel &m, double p, const VerifyOpts &opts)
	{
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "faber-krahn " + shape_spec(shape) + " " + m.spec() + " p=" + fmt("%g", p);
		r.tolerance = "lambda(Wulff) <= 1.01 lambda(shape) at the finest level";
		const double wa = wulff_area(m, 4096);
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape, h);
			const double ls = solve(mesh, m, p, opts).lambda;
			const double sc = std::sqrt(mesh.area() / wa);
			const double lw = solve(generate(shape::Wulff{m, sc}, h), m, p, opts).lambda;
			r.levels.push_back({mesh.max_edge(), lw, ls, (ls - lw) / ls});
		}
		r.pass = !r.levels.empty() && r.levels.back().observed <= 1.01 * r.levels.back().expected;
		if (!r.levels.empty())
			r.extras["margin"] = r.levels.back().rel_err;
		r.runtime = seconds_since(t0);
		return r;
	}

	double boundary_cv(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p)
	{
		const auto fv = boundary_normal_derivative(mesh, pair, m, p);
		double w = 0.0, s1 = 0.0, s2 = 0.0;
		for (const auto &e : mesh.boundary_edges())
		{
			const double c = 0.5 * (fv[e.a] + fv[e.b]);
			w += e.length;
			s1 += e.length * c;
			s2 += e.length * c * c;
		}
		const double mean = s1 / w;
		return std::sqrt(std::max(0.0, s2 / w - mean * mean)) / mean;
	}

	CheckResult check_overdetermined(const AnisotropyModel &m, double p, const VerifyOpts &opts)
	{
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "overdetermined " + m.spec() + " p=" + fmt("%g", p);
		r.tolerance = "Wulff CV decreasing and <= 5% at the finest level; square CV >= 20%";
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape::Wulff{m, 1.0}, h);
			const double cv = boundary_cv(mesh, solve(mesh, m, p, opts), m, p);
			r.levels.push_back({mesh.max_edge(), cv, 0.0, cv});
		}
		const TriMesh sq = generate(shape::Square{1.0}, opts.hs.empty() ? 0.05 : opts.hs.back());
		const double control = boundary_cv(sq, solve(sq, m, p, opts), m, p);
		r.extras["square_cv"] = control;
		r.pass = !r.levels.empty() && strictly_decreasing(r.levels) && r.levels.back().rel_err <= 0.05 && control >= 0.2;
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_rellich(const Shape &shape, const AnisotropyModel &m, double p, const VerifyOpts &opts)
	{
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "rellich " + shape_spec(shape) + " " + m.spec() + " p=" + fmt("%g", p);
		r.tolerance = "rel_err <= 2% at the finest level and strictly decreasing";
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape, h);
			const auto rp = rellich_pohozaev_check(mesh, solve(mesh, m, p, opts), m, p);
			r.levels.push_back({mesh.max_edge(), rp.rhs, rp.lhs, rp.rel_err});
		}
		r.pass = !r.levels.empty() && strictly_decreasing(r.levels) && r.levels.back().rel_err <= 0.02;
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_hadamard(const Shape &shape, const AnisotropyModel &m, double p, const VectorField &field,
							   const VerifyOpts &opts, bool with_fd)
	{
		const auto t0 = Clock::now();
		const bool dilation = field.kind() == VectorField::Kind::Identity;
		const bool translation = field.kind() == VectorField::Kind::Translation;
		const double tol = dilation ? 0.02 : 0.05;
		CheckResult r;
		r.name = std::string("hadamard ") + shape_spec(shape) + " " + m.spec() + " p=" + fmt("%g", p) +
				 (dilation ? " field=identity" : translation ? " field=translation" : " field=bump");
		r.tolerance = "max discrepancy <= " + fmt("%g", tol) + " at the finest level and decreasing";
		bool corner = false;
		for (double h : opts.hs)
		{
			const TriMesh mesh = generate(shape, h);
			const auto rep = derivative_report(mesh, field, m, p, opts.solver, {true, true, with_fd});
			corner = corner || rep.corner_warning;
			double err = 0.0;
			double expected = *rep.d_volume_form;
			if (translation)
			{
				const double scale = p * rep.lambda;
				err = std::max(std::abs(*rep.d_volume_form), std::abs(*rep.d_hadamard)) / scale;
				if (rep.d_fd)
					err = std::max(err, std::abs(*rep.d_fd) / scale);
				expected = 0.0;
			}
			else
			{
				err = *rep.disc_volume_hadamard;
				if (rep.disc_volume_fd)
					err = std::max({err, *rep.disc_volume_fd, *rep.disc_hadamard_fd});
				if (dilation)
				{
					expected = -p * rep.lambda;
					err = std::max(err, rel(*rep.d_hadamard, expected));
				}
			}
			r.levels.push_back({rep.h, *rep.d_hadamard, expected, err});
		}
		r.pass = !r.levels.empty() && r.levels.back().rel_err <= tol;
		// Trend only where it is not at the solver floor.
		if (r.pass && r.levels.size() > 1 && r.levels.front().rel_err > 1e-6)
			r.pass = r.levels.back().rel_err < r.levels.front().rel_err;
		if (corner)
			r.note = "boundary has corners; the boundary form assumes a smooth domain";
		r.runtime = seconds_since(t0);
		return r;
	}

	CheckResult check_anisotropy(const AnisotropyModel &m, int samples, std::uint64_t seed)
	{
		const auto t0 = Clock::now();
		CheckResult r;
		r.name = "anisotropy " + m.spec();
		r.tolerance = "zero failures over " + std::to_string(samples) + " samples per identity";
		std::mt19937_64 rng(seed);
		std::normal_distribution<double> gauss;
		std::uniform_real_distribution<double> logmag(-3.0, 3.0), tdist(-10.0, 10.0);
		auto sample = [&]() -> Vec2 {
			Vec2 v(gauss(rng), gauss(rng));
			while (v.norm() < 1e-3)
				v = Vec2(gauss(rng), gauss(rng));
			return std::pow(10.0, logmag(rng)) * v.normalized();
		};
		bool analytic_polar = !std::holds_alternative<AnisotropyModel::Regularized>(m.family());
		std::optional<AnisotropyModel> pm;
		if (analytic_polar)
			pm = m.polar_model();
		int homog = 0, euler = 0, duality = 0, involution = 0, gradient = 0;
		double worst_grad = 0.0;
		for (int i = 0; i < samples; ++i)
		{
			const Vec2 xi = sample(), eta = sample();
			const double t = tdist(rng);
			const double f = m.value(xi);
			if (std::abs(m.value(t * xi) - std::abs(t) * f) > 1e-12 * std::abs(t) * f)
				++homog;
			if (std::abs(m.gradient(xi).dot(xi) - f) > 1e-12 * f)
				++euler;
			if (xi.dot(eta) > f * m.polar(eta) * (1.0 + 1e-10))
				++duality;
			if (pm)
			{
				if (std::abs(pm->polar(xi) - f) > 1e-12 * f)
					++involution;
			}
			else if (std::abs(m.polar(m.gradient(xi)) - 1.0) > 1e-8)
				++involution;
			const double d = 1e-6 * xi.norm();
			const Vec2 fd((m.value(xi + Vec2(d, 0)) - m.value(xi - Vec2(d, 0))) / (2 * d),
						  (m.value(xi + Vec2(0, d)) - m.value(xi - Vec2(0, d))) / (2 * d));
			const double ge = (fd - m.gradient(xi)).norm() / std::max(1.0, m.gradient(xi).norm());
			worst_grad = std::max(worst_grad, ge);
			if (ge > 1e-6)
				++gradient;
		}
		r.extras = {{"homogeneity_failures", homog},
					{"euler_failures", euler},
					{"duality_failures", duality},
					{"involution_failures", involution},
					{"gradient_failures", gradient},
					{"gradient_worst", worst_grad}};
		const int total = homog + euler + duality + involution + gradient;
		r.levels.push_back({0.0, static_cast<double>(total), 0.0, static_cast<double>(total)});
		r.pass = total == 0;
		if (!pm)
			r.note = "involution tested as polar(F_xi(xi)) = 1 (numeric polar)";
		r.runtime = seconds_since(t0);
		return r;
	}

	std::vector<CheckResult> run_suite(const std::string &suite, const AnisotropyModel &m, double p,
									   const VerifyOpts &opts)
	{
		static const std::vector<std::string> names{"scaling", "monotonicity", "ps", "faber-krahn", "overdetermined",
													"rellich", "hadamard", "anisotropy"};
		if (suite != "all" && std::find(names.begin(), names.end(), suite) == names.end())
			throw Error("unknown suite '" + suite + "'");
		auto want = [&](const char *n) { return suite == "all" || suite == n; };
		std::vector<CheckResult> out;
		const Shape disk = shape::Disk{1.0}, square = shape::Square{1.0}, wulff = shape::Wulff{m, 1.0};
		if (want("scaling"))
		{
			out.push_back(check_scaling(disk, m, p, 2.0, opts));
			out.push_back(check_scaling(square, m, p, 0.5, opts));
		}
		if (want("monotonicity"))
		{
			out.push_back(check_monotonicity(disk, shape::Disk{0.9}, m, p, opts));
			out.push_back(check_monotonicity(square, shape::Square{0.5}, m, p, opts));
			out.push_back(check_monotonicity(wulff, shape::Wulff{m, 0.8}, m, p, opts));
		}
		if (want("ps"))
		{
			out.push_back(check_ps_inequality(disk, m, p, p + 1.0, opts));
			out.push_back(check_ps_inequality(square, m, p, p + 1.0, opts));
		}
		if (want("faber-krahn"))
			out.push_back(check_faber_krahn(square, m, p, opts));
		if (want("overdetermined"))
			out.push_back(check_overdetermined(m, p, opts));
		if (want("rellich"))
		{
			out.push_back(check_rellich(wulff, m, p, opts));
			out.push_back(check_rellich(disk, m, p, opts));
		}
		if (want("hadamard"))
		{
			out.push_back(check_hadamard(disk, m, p, VectorField::identity(), opts, false));
			out.push_back(check_hadamard(disk, m, p, VectorField::radial_bump({0.8, 0.2}, 0.5, 0.5), opts));
		}
		if (want("anisotropy"))
			out.push_back(check_anisotropy(m));
		return out;
	}

	std::string to_json(const std::vector<CheckResult> &results, int indent)
	{
		nlohmann::ordered_json arr = nlohmann::ordered_json::array();
		bool all = true;
		for (const auto &r : results)
		{
			nlohmann::ordered_json j;
			j["name"] = r.name;
			j["verdict"] = r.pass ? "pass" : "fail";
			j["tolerance"] = r.tolerance;
			j["runtime"] = r.runtime;
			auto &lv = j["levels"] = nlohmann::ordered_json::array();
			for (const auto &l : r.levels)
				lv.push_back({{"h", l.h}, {"observed", l.observed}, {"expected", l.expected}, {"rel_err", l.rel_err}});
			for (const auto &[k, v] : r.extras)
				j["extras"][k] = v;
			if (!r.note.empty())
				j["note"] = r.note;
			arr.push_back(j);
			all = all && r.pass;
		}
		nlohmann::ordered_json root;
		root["pass"] = all;
		root["checks"] = arr;
		return root.dump(indent);
	}

	std::string format_table(const std::vector<CheckResult> &results)
	{
		std::ostringstream os;
		char buf[256];
		for (const auto &r : results)
		{
			os << (r.pass ? "PASS " : "FAIL ") << r.name << "  [" << r.tolerance << "]  " << fmt("%.2fs", r.runtime) << "\n";
			for (const auto &l : r.levels)
			{
				std::snprintf(buf, sizeof buf, "    h=%-10.4g observed=%-18.12g expected=%-18.12g rel_err=%.3e\n", l.h,
							  l.observed, l.expected, l.rel_err);
				os << buf;
			}
			for (const auto &[k, v] : r.extras)
				os << "    " << k << " = " << v << "\n";
			if (!r.note.empty())
				os << "    note: " << r.note << "\n";
		}
		return os.str();
	}
} // namespace finsler
