#pragma once

#include <finsler/anisotropy.hpp>
#include <finsler/types.hpp>

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace finsler
{
	namespace shape
	{
		struct Disk
		{
			double r;
		};
		/// Axis-aligned square centered at the origin.
		struct Square
		{
			double side;
		};
		struct Ellipse
		{
			double a, b;
		};
		/// Simple CCW polygon, star-shaped with respect to its area centroid.
		struct Polygon
		{
			std::vector<Vec2> points;
		};
		/// scale * W, W = {F° < 1}.
		struct Wulff
		{
			AnisotropyModel model;
			double scale;
		};
	} // namespace shape

	/// Generated domains are centered at the origin, except polygons, which keep their coordinates.
	using Shape = std::variant<shape::Disk, shape::Square, shape::Ellipse, shape::Polygon, shape::Wulff>;

	/// Parses `disk:r`, `square:side`, `ellipse:a,b`, `polygon:x0,y0,x1,y1,...` or `wulff:scale`
	/// (the Wulff shape of `model`).
	Shape parse_shape(const std::string &spec, const AnisotropyModel &model);
	std::string shape_spec(const Shape &s);
	/// Exact area of the continuous shape (Wulff: high-resolution shoelace).
	double shape_area(const Shape &s);
	Shape scale_shape(const Shape &s, double t);
	/// Maps a point near the boundary onto the boundary (radially for curved shapes; identity for polygons).
	Vec2 project_to_boundary(const Shape &s, const Vec2 &x);
	bool is_curved(const Shape &s);

	using Tri = std::array<int, 3>;

	struct BoundaryEdge
	{
		int a, b;	 ///< endpoints, ordered as in the CCW adjacent triangle
		int tri;	 ///< adjacent triangle
		Vec2 normal; ///< outward unit normal
		double length;
		Vec2 midpoint;
	};

	/// 2D triangulation with oriented boundary edges and an interior-DOF numbering.
	/// Immutable; all operations return new meshes.
	class TriMesh
	{
	public:
		TriMesh() = default;

		/// Builds the boundary structure and validates every invariant. Throws MeshError.
		static TriMesh from_parts(std::vector<Vec2> vertices, std::vector<Tri> triangles,
								  std::optional<Shape> shape = std::nullopt);

		const std::vector<Vec2> &vertices() const { return vertices_; }
		const std::vector<Tri> &triangles() const { return triangles_; }
		const std::vector<BoundaryEdge> &boundary_edges() const { return boundary_; }
		/// vertex -> interior DOF number, -1 on boundary vertices.
		const std::vector<int> &interior_dofs() const { return dofs_; }
		int n_interior() const { return n_interior_; }
		int n_vertices() const { return static_cast<int>(vertices_.size()); }
		int n_triangles() const { return static_cast<int>(triangles_.size()); }
		bool is_boundary_vertex(int v) const { return dofs_[v] < 0; }
		const std::optional<Shape> &shape() const { return shape_; }

		double signed_area(int t) const;
		double area() const;
		Vec2 centroid() const;
		double perimeter() const;
		double max_edge() const;
		double min_angle_deg() const;
		double diameter() const;
		/// Boundary edge indices grouped into closed loops.
		std::vector<std::vector<int>> boundary_loops() const;
		/// Vertex -> incident triangles.
		std::vector<std::vector<int>> vertex_triangles() const;

	private:
		void build();

		std::vector<Vec2> vertices_;
		std::vector<Tri> triangles_;
		std::vector<BoundaryEdge> boundary_;
		std::vector<int> dofs_;
		int n_interior_ = 0;
		std::optional<Shape> shape_;
	};

	using VectorMap = std::function<Vec2(const Vec2 &)>;

	/// Structured mesh of `shape` with target edge length h: a uniform grid for squares,
	/// homothetic boundary rings for the star-shaped domains.
	TriMesh generate(const Shape &shape, double h);

	/// Red refinement; boundary midpoints are snapped to the shape when it is known.
	TriMesh refine(const TriMesh &mesh);
	TriMesh refine(const TriMesh &mesh, int times);

	/// Image mesh phi(mesh). Throws MappingError naming the first flipped triangle.
	TriMesh map(const TriMesh &mesh, const VectorMap &phi);

	/// Exact homothety x -> t x.
	TriMesh scale(const TriMesh &mesh, double t);

	/// `.fmesh` text format; writes 17 significant digits.
	void write_fmesh(std::ostream &os, const TriMesh &mesh);
	void write_fmesh(const std::string &path, const TriMesh &mesh);
	TriMesh read_fmesh(std::istream &is);
	TriMesh read_fmesh(const std::string &path);

	/// Writes `x,y,u` per vertex.
	void write_field_csv(const std::string &path, const TriMesh &mesh, const std::vector<double> &u);
} // namespace finsler
