#include "oracles.hpp"

#include <finsler/eigensolver.hpp>

#include <doctest.h>

#include <random>

using namespace finsler;

namespace
{
	// [-1,1]^2 split into four triangles through the center; the center is the only DOF.
	TriMesh one_dof_mesh()
	{
		return TriMesh::from_parts({{0, 0}, {1, -1}, {1, 1}, {-1, 1}, {-1, -1}}, {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}});
	}

	// Every hat gradient of the center is an axis vector e with |e| = 1; each triangle has area 1 and
	// two of its three edge midpoints carry the value 1/2.
	double one_dof_lambda(double fx, double fy, double p)
	{
		const double energy = 2.0 * std::pow(fx, p) + 2.0 * std::pow(fy, p);
		const double mass = 4.0 * (2.0 / 3.0) * std::pow(0.5, p);
		return energy / mass;
	}
} // namespace

TEST_CASE("single degree of freedom")
{
	const TriMesh m = one_dof_mesh();
	REQUIRE(m.n_interior() == 1);
	for (double p : {1.5, 2.0, 3.0})
	{
		CHECK(solve_first(m, AnisotropyModel::euclidean(), p).lambda == doctest::Approx(one_dof_lambda(1, 1, p)).epsilon(1e-12));
		CHECK(solve_first(m, AnisotropyModel::lq(4), p).lambda == doctest::Approx(one_dof_lambda(1, 1, p)).epsilon(1e-12));
		CHECK(solve_first(m, AnisotropyModel::parse("ellipse:4,0,1"), p).lambda ==
			  doctest::Approx(one_dof_lambda(2, 1, p)).epsilon(1e-12));
	}
}

TEST_CASE("energy and mass by hand")
{
	const TriMesh m = one_dof_mesh();
	std::vector<double> u(5, 0.0);
	u[0] = 2.0;
	const auto e = energy(m, AnisotropyModel::euclidean(), 3.0, 0.0, u);
	CHECK(e.value == doctest::Approx(4.0 * 8.0));
	// d/du sum w F^p(u grad) = p u^{p-1} sum w |grad|^p
	CHECK(e.gradient[0] == doctest::Approx(3.0 * 4.0 * 4.0));
	const auto ms = mass(m, 3.0, u);
	CHECK(ms.value == doctest::Approx(4.0 * (2.0 / 3.0)));
	// homogeneous of degree p in u: 8 midpoints of weight 1/3, each p (u/2)^{p-1} / 2
	CHECK(ms.gradient[0] == doctest::Approx(3.0 * ms.value / u[0]));
	CHECK(ms.gradient[0] == doctest::Approx(8.0 / 3.0 * 3.0 * 0.5));
}

TEST_CASE("classical limits")
{
	const auto eu = AnisotropyModel::euclidean();
	const double disk = solve_first(generate(shape::Disk{1.0}, 0.04), eu, 2.0).lambda;
	CHECK(disk == doctest::Approx(oracle::disk_lambda2()).epsilon(2e-3));
	CHECK(disk > oracle::disk_lambda2());
	const double sq = solve_first(generate(shape::Square{1.0}, 0.04), eu, 2.0).lambda;
	CHECK(sq == doctest::Approx(oracle::square_lambda2()).epsilon(5e-3));
	CHECK(sq > oracle::square_lambda2());
}

TEST_CASE("radial eigenvalue")
{
	for (double p : {1.5, 2.0, 2.5, 3.0})
		CHECK(unit_wulff_eigenvalue(p) == doctest::Approx(oracle::disk_lambda_p(p)).epsilon(1e-9));
	CHECK(unit_wulff_eigenvalue(2.0) == doctest::Approx(oracle::disk_lambda2()).epsilon(1e-10));
}

TEST_CASE("eigenfunction is positive and normalized")
{
	const TriMesh m = generate(shape::Wulff{AnisotropyModel::lq(4), 1.0}, 0.1);
	for (double p : {1.5, 3.0})
	{
		const auto pair = solve_first(m, AnisotropyModel::lq(4), p);
		CHECK(mass(m, p, pair.u).value == doctest::Approx(1.0).epsilon(1e-12));
		for (int i = 0; i < m.n_vertices(); ++i)
		{
			if (m.is_boundary_vertex(i))
				CHECK(pair.u[i] == 0.0);
			else
				CHECK(pair.u[i] > 0.0);
		}
		CHECK(pair.lambda == doctest::Approx(energy(m, AnisotropyModel::lq(4), p, 0.0, pair.u).value).epsilon(1e-14));
		CHECK(pair.p == p);
	}
}

TEST_CASE("Wulff shape eigenvalue matches the radial value")
{
	const auto m = AnisotropyModel::parse("ellipse:4,0,1");
	const double lam = solve_first(generate(shape::Wulff{m, 1.0}, 0.05), m, 2.0).lambda;
	CHECK(lam == doctest::Approx(oracle::disk_lambda2()).epsilon(3e-3));
}

TEST_CASE("scaling")
{
	const TriMesh m = generate(shape::Disk{1.0}, 0.1);
	const auto eu = AnisotropyModel::euclidean();
	for (double p : {1.5, 2.0, 3.0})
	{
		const double a = solve_first(m, eu, p).lambda;
		const double b = solve_first(scale(m, 2.0), eu, p).lambda;
		CHECK(b == doctest::Approx(std::pow(2.0, -p) * a).epsilon(1e-10));
	}
}

TEST_CASE("pullback equals the mapped mesh")
{
	const TriMesh ref = generate(shape::Disk{1.0}, 0.1);
	const auto phi = [](const Vec2 &x) {
		return Vec2(x[0] + 0.1 * std::sin(x[1]), 0.8 * x[1] + 0.05 * x[0] * x[0]);
	};
	for (const char *s : {"euclidean", "lq:4"})
	{
		const auto m = AnisotropyModel::parse(s);
		const auto a = solve_pullback(ref, phi, m, 2.5);
		const auto b = solve_first(map(ref, phi), m, 2.5);
		CHECK(a.lambda == doctest::Approx(b.lambda).epsilon(1e-12));
		double diff = 0.0;
		for (int i = 0; i < ref.n_vertices(); ++i)
			diff = std::max(diff, std::abs(a.u[i] - b.u[i]));
		CHECK(diff < 1e-8);
	}
	const auto op = P1Operator::pullback(ref, phi);
	CHECK(op.n_dofs == ref.n_interior());
}

TEST_CASE("methods agree")
{
	const TriMesh m = generate(shape::Square{1.0}, 0.1);
	SolverOpts rd;
	rd.method = SolverOpts::Method::RayleighDescent;
	for (double p : {1.5, 3.0})
	{
		const double a = solve_first(m, AnisotropyModel::lq(4), p).lambda;
		const double b = solve_first(m, AnisotropyModel::lq(4), p, rd).lambda;
		CHECK(b == doctest::Approx(a).epsilon(1e-8));
	}
}

TEST_CASE("threads")
{
	const TriMesh m = generate(shape::Disk{1.0}, 0.05);
	SolverOpts one, four;
	four.threads = 4;
	const auto a = solve_first(m, AnisotropyModel::euclidean(), 3.0, one);
	const auto b = solve_first(m, AnisotropyModel::euclidean(), 3.0, four);
	const auto c = solve_first(m, AnisotropyModel::euclidean(), 3.0, four);
	CHECK(b.lambda == doctest::Approx(a.lambda).epsilon(1e-11));
	CHECK(b.lambda == c.lambda);
	CHECK(b.u == c.u);
}

TEST_CASE("errors")
{
	const TriMesh m = generate(shape::Disk{1.0}, 0.2);
	CHECK_THROWS_AS(solve_first(m, AnisotropyModel::euclidean(), 1.0), Error);
	const TriMesh none = TriMesh::from_parts({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
	CHECK_THROWS_AS(solve_first(none, AnisotropyModel::euclidean(), 2.0), Error);
	SolverOpts tight;
	tight.max_iter = 1;
	tight.tol = 1e-15;
	CHECK_THROWS_AS(solve_first(m, AnisotropyModel::euclidean(), 3.0, tight), SolverError);
	try
	{
		solve_first(m, AnisotropyModel::euclidean(), 3.0, tight);
	}
	catch (const SolverError &e)
	{
		CHECK(e.last_iterate().u.size() == static_cast<std::size_t>(m.n_vertices()));
	}
}

TEST_CASE("history is recorded")
{
	const auto pair = solve_first(generate(shape::Disk{1.0}, 0.1), AnisotropyModel::euclidean(), 3.0);
	CHECK(!pair.history.empty());
	CHECK(pair.iterations > 0);
	CHECK(pair.residual <= 1e-10);
}
