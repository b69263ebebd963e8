// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include "oracles.hpp"

#include <finsler/optimize.hpp>
#include <finsler/verify.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace finsler;

namespace
{
	using Clock = std::chrono::steady_clock;

	struct Outcome
	{
		bool pass = true;
		std::ostringstream detail;

		void require(bool ok, const std::string &what)
		{
			if (!ok)
			{
				pass = false;
				detail << " [failed: " << what << "]";
			}
		}
	};

	int failures = 0;

	void criterion(int id, const char *name, double limit_s, const std::function<void(Outcome &)> &body)
	{
		Outcome o;
		const auto t0 = Clock::now();
		try
		{
			body(o);
		}
		catch (const std::exception &e)
		{
			o.pass = false;
			o.detail << " [exception: " << e.what() << "]";
		}
		const double s = std::chrono::duration<double>(Clock::now() - t0).count();
		o.require(s < limit_s, "runtime");
		if (!o.pass)
			++failures;
		std::printf("%s %2d %-22s %7.1fs /%5.0fs %s\n", o.pass ? "PASS" : "FAIL", id, name, s, limit_s, o.detail.str().c_str());
		std::fflush(stdout);
	}

	double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

	const char *model_specs[] = {"euclidean", "ellipse:2,0.5,1", "lq:4"};
} // namespace

int main()
{
	const auto eu = AnisotropyModel::euclidean();

	criterion(1, "scaling", 6 * 60.0, [&](Outcome &o) {
		const std::pair<double, double> cases[] = {{2.0, 2.0}, {0.5, 3.0}, {3.0, 1.5}};
		for (const Shape &s : {Shape(shape::Disk{1.0}), Shape(shape::Square{1.0})})
		{
			const TriMesh mesh = generate(s, 0.04);
			for (auto [t, p] : cases)
			{
				const auto t0 = Clock::now();
				const double a = solve_first(mesh, eu, p).lambda;
				const double b = solve_first(scale(mesh, t), eu, p).lambda;
				const double err = std::abs(b - std::pow(t, -p) * a) / (std::pow(t, -p) * a);
				const double secs = seconds_since(t0);
				o.detail << shape_spec(s) << " t=" << t << " p=" << p << " err=" << err << "; ";
				o.require(err <= 1e-10, "scaling error");
				o.require(secs < 60.0, "per-case runtime");
			}
		}
	});

	criterion(2, "classical limits", 5 * 60.0, [&](Outcome &o) {
		struct Case
		{
			Shape shape;
			double exact;
		};
		const Case cases[] = {{shape::Disk{1.0}, oracle::disk_lambda2()}, {shape::Square{1.0}, oracle::square_lambda2()}};
		for (const auto &c : cases)
		{
			// nominal sizes 0.08 -> 0.01; uniform refinement halves every edge
			double h = 0.08;
			TriMesh mesh = generate(c.shape, h);
			std::vector<double> hs, errs;
			for (int k = 0; k < 4; ++k)
			{
				if (k > 0)
				{
					mesh = refine(mesh);
					h /= 2.0;
				}
				hs.push_back(mesh.max_edge());
				errs.push_back(std::abs(solve_first(mesh, eu, 2.0).lambda - c.exact) / c.exact);
			}
			double min_order = 1e9;
			for (int k = 1; k < 4; ++k)
				min_order = std::min(min_order, std::log(errs[k - 1] / errs[k]) / std::log(hs[k - 1] / hs[k]));
			o.detail << shape_spec(c.shape) << " h=" << h << " max edge=" << hs.back() << " err=" << errs.back() << " order>=" << min_order << "; ";
			o.require(errs.back() <= 0.005, "error at the finest level");
			o.require(h <= 0.01, "finest h");
			o.require(min_order >= 1.8, "convergence order");
		}
	});

	criterion(3, "pullback", 2 * 60.0, [&](Outcome &o) {
		const TriMesh ref = generate(shape::Disk{1.0}, 0.05);
		std::mt19937_64 rng(7);
		std::uniform_real_distribution<double> U(-1.0, 1.0);
		double worst = 0.0;
		for (int k = 0; k < 5; ++k)
		{
			// small smooth perturbation of an orientation-preserving affine map
			const Mat2 A = Mat2::Identity() + 0.2 * (Mat2() << U(rng), U(rng), U(rng), U(rng)).finished();
			const Vec2 b(0.3 * U(rng), 0.3 * U(rng));
			const double c1 = 0.1 * U(rng), c2 = 0.1 * U(rng), w = 1.0 + U(rng);
			const VectorMap phi = [=](const Vec2 &x) {
				return Vec2(A * x + b + Vec2(c1 * std::sin(w * x[1]), c2 * std::cos(w * x[0])));
			};
			const double p = 1.5 + 0.75 * (U(rng) + 1.0);
			const auto m = AnisotropyModel::parse(model_specs[k % 3]);
			const double a = solve_pullback(ref, phi, m, p).lambda;
			const double d = solve_first(map(ref, phi), m, p).lambda;
			worst = std::max(worst, relative_difference(a, d));
		}
		o.detail << "max rel diff=" << worst;
		o.require(worst <= 1e-12, "agreement");
	});

	criterion(4, "hadamard dilation", 5 * 60.0, [&](Outcome &o) {
		const std::pair<const char *, double> cases[] = {{"euclidean", 2.0}, {"ellipse:2,0.5,1", 2.0}, {"lq:4", 3.0}};
		for (auto [spec, p] : cases)
		{
			const auto m = AnisotropyModel::parse(spec);
			for (const Shape &s : {Shape(shape::Wulff{m, 1.0}), Shape(shape::Disk{1.0})})
			{
				const TriMesh mesh = generate(s, 0.02);
				const auto pair = solve_first(mesh, m, p);
				const double d = d_lambda_hadamard(mesh, pair, m, p, VectorField::identity());
				const double err = std::abs(d + p * pair.lambda) / (p * pair.lambda);
				o.detail << spec << " " << shape_spec(s) << " err=" << err << "; ";
				o.require(err <= 0.02, "dilation identity");
			}
		}
	});

	criterion(5, "three-form agreement", 10 * 60.0, [&](Outcome &o) {
		const VectorField bump = VectorField::radial_bump({0.5, 0.1}, 0.6, 1.0);
		double prev = 0.0;
		for (double h : {0.02, 0.01})
		{
			const auto r = derivative_report(generate(shape::Disk{1.0}, h), bump, eu, 2.0, {}, {}, 1e-4);
			const double disc = std::max({*r.disc_volume_hadamard, *r.disc_volume_fd, *r.disc_hadamard_fd});
			o.detail << "h=" << h << " vol=" << *r.d_volume_form << " had=" << *r.d_hadamard << " fd=" << *r.d_fd
					 << " disc=" << disc << "; ";
			o.require(disc <= 0.05, "mutual agreement");
			if (h < 0.02)
				o.require(disc < prev, "decreasing discrepancy");
			prev = disc;
		}
	});

	criterion(6, "rellich-pohozaev", 10 * 60.0, [&](Outcome &o) {
		for (const char *spec : model_specs)
		{
			const auto m = AnisotropyModel::parse(spec);
			for (double p : {1.5, 2.0, 3.0})
			{
				const auto r = check_rellich(shape::Wulff{m, 1.0}, m, p);
				o.detail << spec << " p=" << p << " err=" << r.levels.back().rel_err;
				if (!r.pass)
				{
					o.detail << " (levels";
					for (const auto &l : r.levels)
						o.detail << " h=" << l.h << ":" << l.rel_err;
					o.detail << ")";
				}
				o.detail << "; ";
				o.require(r.pass, std::string(spec) + " p=" + std::to_string(p));
			}
		}
	});

	criterion(7, "faber-krahn", 5 * 60.0, [&](Outcome &o) {
		for (const char *spec : model_specs)
		{
			const auto r = check_faber_krahn(shape::Square{1.0}, AnisotropyModel::parse(spec), 2.0);
			const double margin = r.extras.at("margin");
			o.detail << spec << " margin=" << margin << "; ";
			o.require(r.levels.back().observed <= r.levels.back().expected, "ordering");
			o.require(margin > 0.03, "margin");
		}
	});

	criterion(8, "overdetermined", 5 * 60.0, [&](Outcome &o) {
		for (const char *spec : model_specs)
		{
			const auto r = check_overdetermined(AnisotropyModel::parse(spec), 2.0);
			o.detail << spec << " cv=" << r.levels.back().observed << " square=" << r.extras.at("square_cv") << "; ";
			o.require(r.levels.back().observed <= 0.05, "Wulff CV");
			for (std::size_t k = 1; k < r.levels.size(); ++k)
				o.require(r.levels[k].observed < r.levels[k - 1].observed, "decreasing CV");
			o.require(r.extras.at("square_cv") >= 0.2, "square control");
		}
	});

	criterion(9, "p-s inequality", 5 * 60.0, [&](Outcome &o) {
		for (const Shape &s : {Shape(shape::Disk{1.0}), Shape(shape::Square{1.0})})
			for (auto [p, q] : {std::pair{1.5, 2.0}, std::pair{2.0, 3.0}})
			{
				const auto r = check_ps_inequality(s, eu, p, q);
				const auto &l = r.levels.back();
				o.detail << shape_spec(s) << " (" << p << "," << q << ") " << l.observed << "<=" << l.expected << "; ";
				o.require(l.observed <= l.expected * 1.01, "inequality");
			}
	});

	criterion(10, "shape flow", 15 * 60.0, [&](Outcome &o) {
		FlowOpts fo;
		fo.step0 = 1e-2;
		const TriMesh sq = generate(shape::Square{1.0}, 0.05);
		const auto st = flow(sq, eu, 2.0, fo);
		const double target = oracle::pi * oracle::disk_lambda2();
		const double gap = std::abs(st.lambda - target) / target;
		double drift = 0.0;
		bool monotone = true;
		for (std::size_t k = 0; k < st.history.size(); ++k)
		{
			drift = std::max(drift, std::abs(st.history[k].volume - sq.area()) / sq.area());
			if (k > 0 && st.history[k].lambda > st.history[k - 1].lambda)
				monotone = false;
		}
		o.detail << "lambda " << st.history.front().lambda << " -> " << st.lambda << " (disk " << target << ", gap " << gap
				 << ") iters=" << st.iteration << " volume drift=" << drift << " stop=" << st.stop_reason;
		o.require(gap <= 0.02, "final lambda");
		o.require(monotone, "non-increasing lambda");
		o.require(drift <= 1e-8, "volume");
	});

	criterion(11, "anisotropy properties", 60.0, [&](Outcome &o) {
		for (const char *spec : {"euclidean", "ellipse:2,0.5,1", "lq:4", "lq:6", "reg:lq:4:0.1"})
		{
			const auto r = check_anisotropy(AnisotropyModel::parse(spec), 1000);
			double fails = 0.0;
			for (const auto &[k, v] : r.extras)
				if (k.ends_with("_failures"))
					fails += v;
			o.detail << spec << " failures=" << fails << "; ";
			o.require(r.pass && fails == 0.0, spec);
		}
	});

	std::printf("%s: %d failed\n", failures ? "FAIL" : "PASS", failures);
	return failures ? 1 : 0;
}
