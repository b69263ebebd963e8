#include "oracles.hpp"

#include <finsler/verify.hpp>

#include <doctest.h>
#include <json.hpp>

using namespace finsler;

namespace
{
	VerifyOpts coarse()
	{
		VerifyOpts o;
		o.hs = {0.2, 0.1, 0.05};
		return o;
	}
} // namespace

TEST_CASE("level sizes")
{
	const auto hs = level_sizes(0.08, 3);
	REQUIRE(hs.size() == 3);
	CHECK(hs[0] == 0.08);
	CHECK(hs[2] == doctest::Approx(0.02));
}

TEST_CASE("scaling check")
{
	const auto r = check_scaling(shape::Square{1.0}, AnisotropyModel::lq(4), 3.0, 2.0, coarse());
	CHECK(r.pass);
	REQUIRE(r.levels.size() == 3);
	CHECK(r.levels[0].h > r.levels[2].h);
	CHECK(r.levels[1].observed == doctest::Approx(r.levels[1].expected).epsilon(1e-10));
	CHECK_THROWS_AS(check_scaling(shape::Square{1.0}, AnisotropyModel::lq(4), 3.0, 0.0, coarse()), Error);
}

TEST_CASE("monotonicity check: square(0.5) in square(1) tends to a factor 4 at p = 2")
{
	const auto r = check_monotonicity(shape::Square{1.0}, shape::Square{0.5}, AnisotropyModel::euclidean(), 2.0, coarse());
	CHECK(r.pass);
	double prev = 1.0;
	for (const auto &l : r.levels)
	{
		const double off = std::abs(l.observed / l.expected - 4.0) / 4.0;
		CHECK(off < 0.15);
		CHECK(off < prev);
		prev = off;
	}
}

TEST_CASE("p-s inequality check")
{
	const auto r = check_ps_inequality(shape::Disk{1.0}, AnisotropyModel::euclidean(), 2.0, 3.0, coarse());
	CHECK(r.pass);
	const auto same = check_ps_inequality(shape::Disk{1.0}, AnisotropyModel::euclidean(), 2.0, 2.0, coarse());
	CHECK(same.levels.back().observed == same.levels.back().expected);
	CHECK_THROWS_AS(check_ps_inequality(shape::Disk{1.0}, AnisotropyModel::euclidean(), 3.0, 2.0, coarse()), Error);
}

TEST_CASE("Faber-Krahn check")
{
	const auto r = check_faber_krahn(shape::Square{1.0}, AnisotropyModel::euclidean(), 2.0, coarse());
	CHECK(r.pass);
	// continuum margin: 1 - pi j01^2 / (2 pi^2)
	const double margin = 1.0 - oracle::pi * oracle::disk_lambda2() / oracle::square_lambda2();
	CHECK(r.extras.at("margin") == doctest::Approx(margin).epsilon(0.05));
	// the ellipse is the Wulff shape of its own norm
	const auto m = AnisotropyModel::parse("ellipse:4,0,1");
	const auto e = check_faber_krahn(shape::Ellipse{2.0, 1.0}, m, 2.0, coarse());
	CHECK(e.pass);
	CHECK(std::abs(e.extras.at("margin")) < 0.01);
}

TEST_CASE("boundary CV")
{
	const auto m = AnisotropyModel::euclidean();
	const TriMesh d = generate(shape::Disk{1.0}, 0.05);
	CHECK(boundary_cv(d, solve_first(d, m, 2.0), m, 2.0) < 0.01);
	const TriMesh s = generate(shape::Square{1.0}, 0.05);
	// CV of sin over [0, pi] is sqrt(pi^2/8 - 1)
	CHECK(boundary_cv(s, solve_first(s, m, 2.0), m, 2.0) == doctest::Approx(std::sqrt(oracle::pi * oracle::pi / 8.0 - 1.0)).epsilon(0.03));
}

TEST_CASE("overdetermined and Rellich checks")
{
	const auto m = AnisotropyModel::lq(4);
	const auto od = check_overdetermined(m, 2.0, coarse());
	CHECK(od.pass);
	CHECK(od.extras.at("square_cv") > 0.2);
	const auto rp = check_rellich(shape::Wulff{m, 1.0}, m, 2.0, coarse());
	CHECK(rp.pass);
}

TEST_CASE("Hadamard check")
{
	const auto m = AnisotropyModel::euclidean();
	CHECK(check_hadamard(shape::Disk{1.0}, m, 2.0, VectorField::identity(), coarse(), false).pass);
	CHECK(check_hadamard(shape::Disk{1.0}, m, 2.0, VectorField::translation({1.0, 0.0}), coarse(), false).pass);
	const auto sq = check_hadamard(shape::Square{1.0}, m, 2.0, VectorField::identity(), coarse(), false);
	CHECK(!sq.note.empty());
}

TEST_CASE("anisotropy check")
{
	for (const char *s : {"euclidean", "ellipse:2,0.5,1", "lq:4", "reg:lq:4:0.1"})
	{
		const auto r = check_anisotropy(AnisotropyModel::parse(s), 200);
		CHECK(r.pass);
		CHECK(r.extras.at("gradient_failures") == 0.0);
	}
}

TEST_CASE("suites and reports")
{
	const auto rs = run_suite("scaling", AnisotropyModel::euclidean(), 2.0, coarse());
	REQUIRE(rs.size() == 2);
	const auto j = nlohmann::json::parse(to_json(rs));
	CHECK(j["pass"] == true);
	CHECK(j["checks"].size() == 2);
	CHECK(j["checks"][0]["levels"].size() == 3);
	CHECK(j["checks"][0]["verdict"] == "pass");
	const std::string table = format_table(rs);
	CHECK(table.find("PASS scaling") != std::string::npos);
	CHECK_THROWS_AS(run_suite("nonsense", AnisotropyModel::euclidean(), 2.0), Error);

	CheckResult failed;
	failed.name = "x";
	CHECK(nlohmann::json::parse(to_json({failed}))["pass"] == false);
}
