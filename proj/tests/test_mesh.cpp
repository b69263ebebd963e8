#include "oracles.hpp"

#include <finsler/mesh.hpp>

#include <doctest.h>

#include <cstdio>
#include <sstream>

using namespace finsler;

namespace
{
	void check_boundary(const TriMesh &m, const Vec2 &center)
	{
		double perimeter = 0.0;
		for (const auto &e : m.boundary_edges())
		{
			CHECK(e.normal.norm() == doctest::Approx(1.0).epsilon(1e-14));
			const Vec2 d = m.vertices()[e.b] - m.vertices()[e.a];
			CHECK(std::abs(d.dot(e.normal)) < 1e-12);
			CHECK(e.length == doctest::Approx(d.norm()));
			CHECK((e.midpoint - 0.5 * (m.vertices()[e.a] + m.vertices()[e.b])).norm() < 1e-15);
			// star-shaped about the center: outward normals point away from it
			CHECK((e.midpoint - center).dot(e.normal) > 0.0);
			perimeter += e.length;
		}
		CHECK(perimeter == doctest::Approx(m.perimeter()));
		CHECK(m.boundary_loops().size() == 1);
	}
} // namespace

TEST_CASE("generated shapes")
{
	const auto eu = AnisotropyModel::euclidean();
	const auto l4 = AnisotropyModel::lq(4.0);
	const std::vector<Shape> shapes{shape::Disk{1.0},
									shape::Square{1.0},
									shape::Ellipse{2.0, 1.0},
									shape::Polygon{{{0, 0}, {2, 0}, {2, 1}, {0, 1}}},
									shape::Wulff{l4, 1.0}};
	for (const auto &s : shapes)
	{
		INFO(shape_spec(s));
		const TriMesh m = generate(s, 0.05);
		const Vec2 center = std::holds_alternative<shape::Polygon>(s) ? Vec2(1.0, 0.5) : Vec2::Zero();
		check_boundary(m, center);
		CHECK(m.area() == doctest::Approx(shape_area(s)).epsilon(is_curved(s) ? 5e-3 : 1e-12));
		CHECK(m.min_angle_deg() > 20.0);
		CHECK(m.max_edge() < 0.05 * 1.6);
		CHECK((m.centroid() - center).norm() < 1e-3);
		for (int t = 0; t < m.n_triangles(); ++t)
			CHECK(m.signed_area(t) > 0.0);
	}
	CHECK(shape_area(shape::Wulff{l4, 1.0}) == doctest::Approx(oracle::lr_ball_area(4.0 / 3.0)).epsilon(1e-5));
	CHECK(shape_area(shape::Disk{1.0}) == doctest::Approx(oracle::pi));
}

TEST_CASE("square grid is exact")
{
	const TriMesh m = generate(shape::Square{1.0}, 0.25);
	CHECK(m.n_vertices() == 25);
	CHECK(m.n_triangles() == 32);
	CHECK(m.n_interior() == 9);
	CHECK(m.area() == doctest::Approx(1.0).epsilon(1e-15));
	CHECK(m.min_angle_deg() == doctest::Approx(45.0));
	CHECK(m.boundary_edges().size() == 16);
	CHECK(m.perimeter() == doctest::Approx(4.0));
}

TEST_CASE("parse_shape")
{
	const auto eu = AnisotropyModel::euclidean();
	CHECK(std::holds_alternative<shape::Disk>(parse_shape("disk:1", eu)));
	CHECK(std::get<shape::Square>(parse_shape("square:2", eu)).side == 2.0);
	CHECK(std::get<shape::Ellipse>(parse_shape("ellipse:2,1", eu)).a == 2.0);
	CHECK(std::get<shape::Polygon>(parse_shape("polygon:0,0,1,0,0,1", eu)).points.size() == 3);
	CHECK(std::get<shape::Wulff>(parse_shape("wulff:0.5", eu)).scale == 0.5);
	CHECK(shape_spec(parse_shape("square:0.5", eu)) == "square:0.5");
	CHECK_THROWS_AS(parse_shape("circle:1", eu), MeshError);
	CHECK_THROWS_AS(parse_shape("disk:-1", eu), MeshError);
	CHECK_THROWS_AS(parse_shape("ellipse:1", eu), MeshError);
	CHECK_THROWS_AS(parse_shape("polygon:0,0,1", eu), MeshError);
}

TEST_CASE("non-star polygon is rejected")
{
	// a thin U shape is not star-shaped about its centroid
	const shape::Polygon u{{{0, 0}, {3, 0}, {3, 3}, {2.8, 3}, {2.8, 0.2}, {0.2, 0.2}, {0.2, 3}, {0, 3}}};
	CHECK_THROWS_AS(generate(u, 0.1), MeshError);
}

TEST_CASE("from_parts validation")
{
	const std::vector<Vec2> v{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
	CHECK_NOTHROW(TriMesh::from_parts(v, {{0, 1, 3}, {0, 3, 2}}));
	CHECK_THROWS_AS(TriMesh::from_parts(v, {{0, 3, 1}, {0, 3, 2}}), MeshError);
	CHECK_THROWS_AS(TriMesh::from_parts(v, {{0, 1, 4}}), MeshError);
	CHECK_THROWS_AS(TriMesh::from_parts(v, {{0, 1, 3}}), MeshError); // vertex 2 unused
	const TriMesh m = TriMesh::from_parts(v, {{0, 1, 3}, {0, 3, 2}});
	CHECK(m.n_interior() == 0);
	CHECK(m.boundary_edges().size() == 4);
}

TEST_CASE("refinement")
{
	const TriMesh m = generate(shape::Disk{1.0}, 0.2);
	const TriMesh r = refine(m);
	CHECK(r.n_triangles() == 4 * m.n_triangles());
	CHECK(r.boundary_edges().size() == 2 * m.boundary_edges().size());
	for (const auto &e : r.boundary_edges())
		CHECK(r.vertices()[e.a].norm() == doctest::Approx(1.0).epsilon(1e-14));
	CHECK(std::abs(r.area() - oracle::pi) < std::abs(m.area() - oracle::pi));
	CHECK(refine(m, 2).n_triangles() == 16 * m.n_triangles());
	CHECK(r.min_angle_deg() > 15.0);

	const TriMesh w = refine(generate(shape::Wulff{AnisotropyModel::lq(4.0), 1.0}, 0.2));
	for (const auto &e : w.boundary_edges())
		CHECK(AnisotropyModel::lq(4.0).polar(w.vertices()[e.a]) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("scale and map")
{
	const TriMesh m = generate(shape::Disk{1.0}, 0.2);
	const TriMesh s = scale(m, 2.5);
	CHECK(s.area() == doctest::Approx(6.25 * m.area()).epsilon(1e-14));
	CHECK(std::get<shape::Disk>(*s.shape()).r == 2.5);
	const TriMesh a = map(m, [](const Vec2 &x) { return Vec2(2.0 * x[0] + 0.3 * x[1], x[1] + 1.0); });
	CHECK(a.area() == doctest::Approx(2.0 * m.area()).epsilon(1e-13));
	CHECK(!a.shape());
	try
	{
		map(m, [](const Vec2 &x) { return Vec2(-x[0], x[1]); });
		FAIL("expected MappingError");
	}
	catch (const MappingError &e)
	{
		CHECK(e.triangle() >= 0);
		CHECK(e.triangle() < m.n_triangles());
	}
}

TEST_CASE("fmesh round trip")
{
	const TriMesh m = generate(shape::Ellipse{1.5, 0.7}, 0.1);
	std::stringstream ss;
	write_fmesh(ss, m);
	const TriMesh r = read_fmesh(ss);
	REQUIRE(r.n_vertices() == m.n_vertices());
	for (int i = 0; i < m.n_vertices(); ++i)
		CHECK(r.vertices()[i] == m.vertices()[i]);
	CHECK(r.triangles() == m.triangles());
	CHECK(r.boundary_edges().size() == m.boundary_edges().size());

	std::stringstream bad("fmesh 1\n3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 0\n1 2 0\n2 1 0\n");
	CHECK_THROWS_AS(read_fmesh(bad), MeshError);
	std::stringstream junk("hello");
	CHECK_THROWS_AS(read_fmesh(junk), MeshError);
}

TEST_CASE("field csv")
{
	const TriMesh m = generate(shape::Square{1.0}, 0.5);
	std::vector<double> u(m.n_vertices(), 0.0);
	u[4] = 0.25;
	const std::string path = "test_mesh_field.csv";
	write_field_csv(path, m, u);
	FILE *f = std::fopen(path.c_str(), "r");
	REQUIRE(f);
	char line[128];
	REQUIRE(std::fgets(line, sizeof line, f));
	CHECK(std::string(line) == "x,y,u\n");
	int rows = 0;
	while (std::fgets(line, sizeof line, f))
		++rows;
	std::fclose(f);
	std::remove(path.c_str());
	CHECK(rows == m.n_vertices());
}

TEST_CASE("projection to the boundary")
{
	const auto l4 = AnisotropyModel::lq(4.0);
	const Vec2 x(0.3, 0.2);
	CHECK(project_to_boundary(shape::Disk{2.0}, x).norm() == doctest::Approx(2.0));
	CHECK(l4.polar(project_to_boundary(shape::Wulff{l4, 1.5}, x)) == doctest::Approx(1.5));
	const Vec2 e = project_to_boundary(shape::Ellipse{2.0, 1.0}, x);
	CHECK(e[0] * e[0] / 4.0 + e[1] * e[1] == doctest::Approx(1.0));
}
