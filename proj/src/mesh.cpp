#include <finsler/mesh.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

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

		double cross(const Vec2 &a, const Vec2 &b) { return a[0] * b[1] - a[1] * b[0]; }

		double tri_signed_area(const Vec2 &a, const Vec2 &b, const Vec2 &c) { return 0.5 * cross(b - a, c - a); }

		double tri_min_angle(const Vec2 &a, const Vec2 &b, const Vec2 &c)
		{
			auto ang = [](const Vec2 &p, const Vec2 &q, const Vec2 &r) {
				const Vec2 u = q - p, v = r - p;
				return std::atan2(std::abs(cross(u, v)), u.dot(v));
			};
			return std::min({ang(a, b, c), ang(b, c, a), ang(c, a, b)});
		}

		std::uint64_t edge_key(int a, int b)
		{
			if (a > b)
				std::swap(a, b);
			return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
		}

		double polygon_area(const std::vector<Vec2> &pts)
		{
			double s = 0.0;
			for (std::size_t i = 0; i < pts.size(); ++i)
				s += cross(pts[i], pts[(i + 1) % pts.size()]);
			return 0.5 * s;
		}

		Vec2 polygon_centroid(const std::vector<Vec2> &pts)
		{
			double a = 0.0;
			Vec2 c = Vec2::Zero();
			for (std::size_t i = 0; i < pts.size(); ++i)
			{
				const Vec2 &p = pts[i], &q = pts[(i + 1) % pts.size()];
				const double w = cross(p, q);
				a += w;
				c += w * (p + q);
			}
			return c / (3.0 * a);
		}

		// Radial boundary function r(theta) of the curved shapes.
		std::function<double(double)> radial_function(const Shape &s)
		{
			return std::visit(
				overloaded{
					[](const shape::Disk &d) -> std::function<double(double)> { return [r = d.r](double) { return r; }; },
					[](const shape::Ellipse &e) -> std::function<double(double)> {
						return [a = e.a, b = e.b](double t) {
							const double c = std::cos(t) / a, s = std::sin(t) / b;
							return 1.0 / std::sqrt(c * c + s * s);
						};
					},
					[](const shape::Wulff &w) -> std::function<double(double)> {
						return [w](double t) { return w.scale / w.model.polar(Vec2(std::cos(t), std::sin(t))); };
					},
					[](const auto &) -> std::function<double(double)> { return {}; },
				},
				s);
		}

		// Closed boundary curve parameterized by normalized arc length tau in [0, 1).
		struct Curve
		{
			std::function<Vec2(double)> at;
			double perimeter = 0.0;
			std::vector<Vec2> boundary;		  // boundary vertices, exactly on the shape
			std::vector<double> boundary_tau; // their parameters
		};

		Curve radial_curve(const Shape &s, double h)
		{
			const auto r = radial_function(s);
			constexpr int m = 1 << 14;
			auto point = [r](double t) { return Vec2(r(t) * std::cos(t), r(t) * std::sin(t)); };
			auto cum = std::make_shared<std::vector<double>>(m + 1, 0.0);
			Vec2 prev = point(0.0);
			for (int j = 1; j <= m; ++j)
			{
				const Vec2 cur = point(2.0 * kPi * j / m);
				(*cum)[j] = (*cum)[j - 1] + (cur - prev).norm();
				prev = cur;
			}
			Curve c;
			c.perimeter = cum->back();
			c.at = [cum, point](double tau) {
				const double target = (tau - std::floor(tau)) * cum->back();
				auto it = std::upper_bound(cum->begin(), cum->end(), target);
				const int j = std::clamp(static_cast<int>(it - cum->begin()) - 1, 0, m - 1);
				const double frac = (target - (*cum)[j]) / ((*cum)[j + 1] - (*cum)[j]);
				return point(2.0 * kPi * (j + frac) / m);
			};
			const int nb = std::max(8, static_cast<int>(std::ceil(c.perimeter / h - 1e-9)));
			for (int k = 0; k < nb; ++k)
			{
				const double tau = static_cast<double>(k) / nb;
				c.boundary_tau.push_back(tau);
				c.boundary.push_back(c.at(tau));
			}
			return c;
		}

		Curve polygon_curve(const std::vector<Vec2> &pts, double h)
		{
			const int n = static_cast<int>(pts.size());
			auto cum = std::make_shared<std::vector<double>>(n + 1, 0.0);
			for (int i = 0; i < n; ++i)
				(*cum)[i + 1] = (*cum)[i] + (pts[(i + 1) % n] - pts[i]).norm();
			Curve c;
			c.perimeter = cum->back();
			auto poly = std::make_shared<std::vector<Vec2>>(pts);
			c.at = [cum, poly, n](double tau) {
				const double target = (tau - std::floor(tau)) * cum->back();
				auto it = std::upper_bound(cum->begin(), cum->end(), target);
				const int j = std::clamp(static_cast<int>(it - cum->begin()) - 1, 0, n - 1);
				const double frac = (target - (*cum)[j]) / ((*cum)[j + 1] - (*cum)[j]);
				return Vec2((1.0 - frac) * (*poly)[j] + frac * (*poly)[(j + 1) % n]);
			};
			for (int i = 0; i < n; ++i)
			{
				const double len = (*cum)[i + 1] - (*cum)[i];
				const int segs = std::max(1, static_cast<int>(std::ceil(len / h - 1e-9)));
				for (int k = 0; k < segs; ++k)
				{
					const double f = static_cast<double>(k) / segs;
					c.boundary.push_back((1.0 - f) * pts[i] + f * pts[(i + 1) % n]);
					c.boundary_tau.push_back(((*cum)[i] + f * len) / c.perimeter);
				}
			}
			return c;
		}

		// Triangulates the annulus between two homothetic rings; both are sorted by tau.
		void zip_rings(const std::vector<int> &inner, const std::vector<double> &tin,
					   const std::vector<int> &outer, const std::vector<double> &tout,
					   const std::vector<Vec2> &verts, std::vector<Tri> &tris)
		{
			const int ni = static_cast<int>(inner.size()), no = static_cast<int>(outer.size());
			// outer start: closest parameter to tin[0]
			int j0 = 0;
			double best = 2.0;
			for (int j = 0; j < no; ++j)
			{
				double d = std::abs(tout[j] - tin[0]);
				d = std::min(d, 1.0 - d);
				if (d < best)
				{
					best = d;
					j0 = j;
				}
			}
			auto in_v = [&](int i) { return inner[i % ni]; };
			auto out_v = [&](int j) { return outer[(j0 + j) % no]; };
			int i = 0, j = 0;
			while (i < ni || j < no)
			{
				bool advance_outer;
				if (i == ni)
					advance_outer = true;
				else if (j == no)
					advance_outer = false;
				else
				{
					const double d_outer = (verts[in_v(i)] - verts[out_v(j + 1)]).squaredNorm();
					const double d_inner = (verts[in_v(i + 1)] - verts[out_v(j)]).squaredNorm();
					advance_outer = d_outer < d_inner;
				}
				Tri t = advance_outer ? Tri{in_v(i), out_v(j), out_v(j + 1)} : Tri{in_v(i), out_v(j), in_v(i + 1)};
				if (tri_signed_area(verts[t[0]], verts[t[1]], verts[t[2]]) < 0.0)
					std::swap(t[1], t[2]);
				tris.push_back(t);
				(advance_outer ? j : i)++;
			}
		}

		// One pass of Lawson flips towards the Delaunay triangulation. Never creates an edge
		// joining two boundary vertices.
		int flip_pass(const std::vector<Vec2> &v, std::vector<Tri> &tris, const std::vector<bool> &on_boundary)
		{
			struct Half
			{
				int tri, opp;
			};
			std::unordered_map<std::uint64_t, std::vector<Half>> edges;
			edges.reserve(tris.size() * 2);
			for (int t = 0; t < static_cast<int>(tris.size()); ++t)
				for (int k = 0; k < 3; ++k)
					edges[edge_key(tris[t][k], tris[t][(k + 1) % 3])].push_back({t, tris[t][(k + 2) % 3]});
			std::vector<bool> touched(tris.size(), false);
			int flips = 0;
			std::vector<std::uint64_t> keys;
			keys.reserve(edges.size());
			for (const auto &kv : edges)
				keys.push_back(kv.first);
			std::sort(keys.begin(), keys.end());
			for (const auto key : keys)
			{
				const auto &hs = edges[key];
				if (hs.size() != 2)
					continue;
				const int t1 = hs[0].tri, t2 = hs[1].tri;
				if (touched[t1] || touched[t2])
					continue;
				const int a = hs[0].opp, b = hs[1].opp;
				if (on_boundary[a] && on_boundary[b])
					continue;
				// orient: t1 = (u, w, a) CCW
				int k = 0;
				while (tris[t1][k] != a)
					++k;
				const int u = tris[t1][(k + 1) % 3], w = tris[t1][(k + 2) % 3];
				auto angle = [&](int p, int q, int r) {
					const Vec2 x = v[q] - v[p], y = v[r] - v[p];
					return std::atan2(std::abs(cross(x, y)), x.dot(y));
				};
				if (angle(a, u, w) + angle(b, u, w) <= kPi + 1e-12)
					continue;
				const Tri n1{a, u, b}, n2{b, w, a};
				if (tri_signed_area(v[n1[0]], v[n1[1]], v[n1[2]]) <= 0.0 || tri_signed_area(v[n2[0]], v[n2[1]], v[n2[2]]) <= 0.0)
					continue;
				tris[t1] = n1;
				tris[t2] = n2;
				touched[t1] = touched[t2] = true;
				++flips;
			}
			return flips;
		}

		void smooth_pass(std::vector<Vec2> &v, const std::vector<Tri> &tris, const std::vector<bool> &on_boundary)
		{
			std::vector<std::vector<int>> vt(v.size());
			std::vector<std::vector<int>> nb(v.size());
			for (int t = 0; t < static_cast<int>(tris.size()); ++t)
				for (int k = 0; k < 3; ++k)
				{
					vt[tris[t][k]].push_back(t);
					nb[tris[t][k]].push_back(tris[t][(k + 1) % 3]);
					nb[tris[t][k]].push_back(tris[t][(k + 2) % 3]);
				}
			for (std::size_t i = 0; i < v.size(); ++i)
			{
				if (on_boundary[i])
					continue;
				auto &n = nb[i];
				std::sort(n.begin(), n.end());
				n.erase(std::unique(n.begin(), n.end()), n.end());
				Vec2 avg = Vec2::Zero();
				for (int j : n)
					avg += v[j];
				avg /= static_cast<double>(n.size());
				auto quality = [&]() {
					double q = kPi;
					for (int t : vt[i])
					{
						const auto &T = tris[t];
						if (tri_signed_area(v[T[0]], v[T[1]], v[T[2]]) <= 0.0)
							return -1.0;
						q = std::min(q, tri_min_angle(v[T[0]], v[T[1]], v[T[2]]));
					}
					return q;
				};
				const double before = quality();
				const Vec2 old = v[i];
				v[i] = avg;
				if (quality() < before)
					v[i] = old;
			}
		}

		TriMesh improve_and_build(std::vector<Vec2> verts, std::vector<Tri> tris, int n_boundary, const Shape &s)
		{
			// boundary vertices are stored first
			std::vector<bool> on_boundary(verts.size(), false);
			for (int i = 0; i < n_boundary; ++i)
				on_boundary[i] = true;
			for (int round = 0; round < 3; ++round)
			{
				for (int pass = 0; pass < 100 && flip_pass(verts, tris, on_boundary) > 0; ++pass)
				{
				}
				smooth_pass(verts, tris, on_boundary);
			}
			for (int pass = 0; pass < 100 && flip_pass(verts, tris, on_boundary) > 0; ++pass)
			{
			}
			return TriMesh::from_parts(std::move(verts), std::move(tris), s);
		}

		TriMesh ring_mesh(const Curve &curve, const Shape &s, double h)
		{
			std::vector<Vec2> verts = curve.boundary;
			const int nb = static_cast<int>(verts.size());
			double rmax = 0.0;
			for (const auto &p : verts)
				rmax = std::max(rmax, p.norm());
			const int rings = std::max(1, static_cast<int>(std::ceil(rmax / (0.5 * std::sqrt(3.0) * h) - 1e-9)));

			std::vector<Tri> tris;
			std::vector<int> prev_idx;
			std::vector<double> prev_tau;
			for (int k = 1; k < rings; ++k)
			{
				const double sk = static_cast<double>(k) / rings;
				const int nk = std::max(3, static_cast<int>(std::ceil(sk * curve.perimeter / h - 1e-9)));
				std::vector<int> idx;
				std::vector<double> tau;
				const double offset = (k % 2) ? 0.5 / nk : 0.0;
				for (int i = 0; i < nk; ++i)
				{
					const double t = static_cast<double>(i) / nk + offset;
					idx.push_back(static_cast<int>(verts.size()));
					tau.push_back(t);
					verts.push_back(sk * curve.at(t));
				}
				if (k == 1)
				{
					const int c = static_cast<int>(verts.size());
					verts.push_back(Vec2::Zero());
					for (int i = 0; i < nk; ++i)
						tris.push_back({c, idx[i], idx[(i + 1) % nk]});
				}
				else
					zip_rings(prev_idx, prev_tau, idx, tau, verts, tris);
				prev_idx = std::move(idx);
				prev_tau = std::move(tau);
			}
			std::vector<int> bidx(nb);
			for (int i = 0; i < nb; ++i)
				bidx[i] = i;
			if (rings == 1)
			{
				const int c = static_cast<int>(verts.size());
				verts.push_back(Vec2::Zero());
				for (int i = 0; i < nb; ++i)
					tris.push_back({c, bidx[i], bidx[(i + 1) % nb]});
			}
			else
				zip_rings(prev_idx, prev_tau, bidx, curve.boundary_tau, verts, tris);
			for (auto &t : tris)
			{
				const double a = tri_signed_area(verts[t[0]], verts[t[1]], verts[t[2]]);
				if (a <= 0.0)
					throw MeshError("ring mesher produced a degenerate triangle; shape may not be star-shaped");
			}
			return improve_and_build(std::move(verts), std::move(tris), nb, s);
		}

		TriMesh square_mesh(const shape::Square &sq, double h)
		{
			const int n = std::max(1, static_cast<int>(std::ceil(sq.side / h - 1e-9)));
			std::vector<Vec2> v;
			v.reserve((n + 1) * (n + 1));
			for (int j = 0; j <= n; ++j)
				for (int i = 0; i <= n; ++i)
					v.emplace_back(sq.side * (static_cast<double>(i) / n - 0.5), sq.side * (static_cast<double>(j) / n - 0.5));
			auto id = [n](int i, int j) { return j * (n + 1) + i; };
			std::vector<Tri> t;
			for (int j = 0; j < n; ++j)
				for (int i = 0; i < n; ++i)
				{
					// diagonals point at the center so corner cells are split through the corner
					const bool slash = (2 * i < n) == (2 * j < n);
					if (slash)
					{
						t.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
						t.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
					}
					else
					{
						t.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
						t.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
					}
				}
			return TriMesh::from_parts(std::move(v), std::move(t), Shape{sq});
		}

		std::vector<double> parse_list(const std::string &s, const std::string &spec)
		{
			std::vector<double> out;
			std::stringstream ss(s);
			std::string tok;
			while (std::getline(ss, tok, ','))
			{
				try
				{
					std::size_t used = 0;
					out.push_back(std::stod(tok, &used));
					if (used != tok.size())
						throw std::invalid_argument(tok);
				}
				catch (const std::exception &)
				{
					throw MeshError("invalid number '" + tok + "' in shape spec '" + spec + "'");
				}
			}
			return out;
		}

		// Shortest representation that reads back exactly.
		std::string fmt(double v)
		{
			char buf[64];
			const auto res = std::to_chars(buf, buf + sizeof(buf), v);
			return std::string(buf, res.ptr);
		}
	} // namespace

	Shape parse_shape(const std::string &spec, const AnisotropyModel &model)
	{
		const auto pos = spec.find(':');
		if (pos == std::string::npos)
			throw MeshError("shape spec must be kind:params, got '" + spec + "'");
		const std::string kind = spec.substr(0, pos);
		const auto vals = parse_list(spec.substr(pos + 1), spec);
		auto need = [&](std::size_t n) {
			if (vals.size() != n)
				throw MeshError("shape '" + kind + "' expects " + std::to_string(n) + " parameter(s): '" + spec + "'");
		};
		if (kind == "disk")
		{
			need(1);
			if (!(vals[0] > 0.0))
				throw MeshError("disk radius must be positive");
			return shape::Disk{vals[0]};
		}
		if (kind == "square")
		{
			need(1);
			if (!(vals[0] > 0.0))
				throw MeshError("square side must be positive");
			return shape::Square{vals[0]};
		}
		if (kind == "ellipse")
		{
			need(2);
			if (!(vals[0] > 0.0 && vals[1] > 0.0))
				throw MeshError("ellipse semi-axes must be positive");
			return shape::Ellipse{vals[0], vals[1]};
		}
		if (kind == "wulff")
		{
			need(1);
			if (!(vals[0] > 0.0))
				throw MeshError("wulff scale must be positive");
			return shape::Wulff{model, vals[0]};
		}
		if (kind == "polygon")
		{
			if (vals.size() < 6 || vals.size() % 2 != 0)
				throw MeshError("polygon needs at least three x,y pairs");
			shape::Polygon poly;
			for (std::size_t i = 0; i < vals.size(); i += 2)
				poly.points.emplace_back(vals[i], vals[i + 1]);
			return poly;
		}
		throw MeshError("unknown shape kind '" + kind + "' (expected disk, square, ellipse, polygon, wulff)");
	}

	std::string shape_spec(const Shape &s)
	{
		return std::visit(
			overloaded{
				[](const shape::Disk &d) { return "disk:" + fmt(d.r); },
				[](const shape::Square &q) { return "square:" + fmt(q.side); },
				[](const shape::Ellipse &e) { return "ellipse:" + fmt(e.a) + "," + fmt(e.b); },
				[](const shape::Polygon &p) {
					std::string out = "polygon:";
					for (std::size_t i = 0; i < p.points.size(); ++i)
						out += (i ? "," : "") + fmt(p.points[i][0]) + "," + fmt(p.points[i][1]);
					return out;
				},
				[](const shape::Wulff &w) { return "wulff:" + fmt(w.scale); },
			},
			s);
	}

	double shape_area(const Shape &s)
	{
		return std::visit(
			overloaded{
				[](const shape::Disk &d) { return kPi * d.r * d.r; },
				[](const shape::Square &q) { return q.side * q.side; },
				[](const shape::Ellipse &e) { return kPi * e.a * e.b; },
				[](const shape::Polygon &p) { return polygon_area(p.points); },
				[](const shape::Wulff &w) { return w.scale * w.scale * wulff_area(w.model, 1 << 16); },
			},
			s);
	}

	Shape scale_shape(const Shape &s, double t)
	{
		return std::visit(
			overloaded{
				[t](const shape::Disk &d) -> Shape { return shape::Disk{d.r * t}; },
				[t](const shape::Square &q) -> Shape { return shape::Square{q.side * t}; },
				[t](const shape::Ellipse &e) -> Shape { return shape::Ellipse{e.a * t, e.b * t}; },
				[t](const shape::Polygon &p) -> Shape {
					shape::Polygon out = p;
					for (auto &x : out.points)
						x *= t;
					return out;
				},
				[t](const shape::Wulff &w) -> Shape { return shape::Wulff{w.model, w.scale * t}; },
			},
			s);
	}

	bool is_curved(const Shape &s)
	{
		return !std::holds_alternative<shape::Square>(s) && !std::holds_alternative<shape::Polygon>(s);
	}

	Vec2 project_to_boundary(const Shape &s, const Vec2 &x)
	{
		return std::visit(
			overloaded{
				[&](const shape::Disk &d) -> Vec2 { return x * (d.r / x.norm()); },
				[&](const shape::Ellipse &e) -> Vec2 {
					const double c = x[0] / e.a, d = x[1] / e.b;
					return x / std::sqrt(c * c + d * d);
				},
				[&](const shape::Wulff &w) -> Vec2 { return x * (w.scale / w.model.polar(x)); },
				[&](const auto &) -> Vec2 { return x; },
			},
			s);
	}

	TriMesh TriMesh::from_parts(std::vector<Vec2> vertices, std::vector<Tri> triangles, std::optional<Shape> shape)
	{
		TriMesh m;
		m.vertices_ = std::move(vertices);
		m.triangles_ = std::move(triangles);
		m.shape_ = std::move(shape);
		m.build();
		return m;
	}

	void TriMesh::build()
	{
		const int nv = n_vertices();
		if (triangles_.empty())
			throw MeshError("mesh has no triangles");
		for (const auto &p : vertices_)
			if (!p.allFinite())
				throw MeshError("mesh has a non-finite vertex");
		std::vector<bool> used(nv, false);
		for (int t = 0; t < n_triangles(); ++t)
		{
			for (int k = 0; k < 3; ++k)
			{
				const int i = triangles_[t][k];
				if (i < 0 || i >= nv)
					throw MeshError("triangle " + std::to_string(t) + " references vertex " + std::to_string(i) + " out of range");
				used[i] = true;
			}
			if (!(signed_area(t) > 0.0))
				throw MeshError("triangle " + std::to_string(t) + " has non-positive signed area");
		}
		for (int i = 0; i < nv; ++i)
			if (!used[i])
				throw MeshError("vertex " + std::to_string(i) + " belongs to no triangle");

		// directed edge -> triangle
		std::unordered_map<std::uint64_t, int> directed;
		directed.reserve(triangles_.size() * 3);
		auto dkey = [](int a, int b) { return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b); };
		for (int t = 0; t < n_triangles(); ++t)
			for (int k = 0; k < 3; ++k)
			{
				const int a = triangles_[t][k], b = triangles_[t][(k + 1) % 3];
				if (!directed.emplace(dkey(a, b), t).second)
					throw MeshError("edge (" + std::to_string(a) + "," + std::to_string(b) + ") is used twice with the same orientation");
			}
		boundary_.clear();
		for (int t = 0; t < n_triangles(); ++t)
			for (int k = 0; k < 3; ++k)
			{
				const int a = triangles_[t][k], b = triangles_[t][(k + 1) % 3];
				if (directed.count(dkey(b, a)))
					continue;
				const Vec2 d = vertices_[b] - vertices_[a];
				const double len = d.norm();
				BoundaryEdge e;
				e.a = a;
				e.b = b;
				e.tri = t;
				e.length = len;
				e.normal = Vec2(d[1], -d[0]) / len;
				e.midpoint = 0.5 * (vertices_[a] + vertices_[b]);
				boundary_.push_back(e);
			}
		std::sort(boundary_.begin(), boundary_.end(), [](const BoundaryEdge &x, const BoundaryEdge &y) {
			return std::tie(x.a, x.b) < std::tie(y.a, y.b);
		});
		// closed loops: every boundary vertex has exactly one outgoing and one incoming boundary edge
		std::vector<int> out_deg(nv, 0), in_deg(nv, 0);
		for (const auto &e : boundary_)
		{
			out_deg[e.a]++;
			in_deg[e.b]++;
		}
		for (int i = 0; i < nv; ++i)
			if (out_deg[i] != in_deg[i] || out_deg[i] > 1)
				throw MeshError("boundary is not a union of simple closed loops at vertex " + std::to_string(i));
		dofs_.assign(nv, -1);
		n_interior_ = 0;
		for (int i = 0; i < nv; ++i)
			if (out_deg[i] == 0)
				dofs_[i] = n_interior_++;
	}

	double TriMesh::signed_area(int t) const
	{
		const auto &T = triangles_[t];
		return tri_signed_area(vertices_[T[0]], vertices_[T[1]], vertices_[T[2]]);
	}

	double TriMesh::area() const
	{
		double s = 0.0;
		for (int t = 0; t < n_triangles(); ++t)
			s += signed_area(t);
		return s;
	}

	Vec2 TriMesh::centroid() const
	{
		Vec2 c = Vec2::Zero();
		double a = 0.0;
		for (int t = 0; t < n_triangles(); ++t)
		{
			const auto &T = triangles_[t];
			const double w = signed_area(t);
			c += w * (vertices_[T[0]] + vertices_[T[1]] + vertices_[T[2]]) / 3.0;
			a += w;
		}
		return c / a;
	}

	double TriMesh::perimeter() const
	{
		double s = 0.0;
		for (const auto &e : boundary_)
			s += e.length;
		return s;
	}

	double TriMesh::max_edge() const
	{
		double m = 0.0;
		for (const auto &T : triangles_)
			for (int k = 0; k < 3; ++k)
				m = std::max(m, (vertices_[T[k]] - vertices_[T[(k + 1) % 3]]).norm());
		return m;
	}

	double TriMesh::min_angle_deg() const
	{
		double m = kPi;
		for (const auto &T : triangles_)
			m = std::min(m, tri_min_angle(vertices_[T[0]], vertices_[T[1]], vertices_[T[2]]));
		return m * 180.0 / kPi;
	}

	double TriMesh::diameter() const
	{
		// boundary vertices suffice for the diameter of the hull
		std::vector<Vec2> pts;
		for (const auto &e : boundary_)
			pts.push_back(vertices_[e.a]);
		double d = 0.0;
		for (std::size_t i = 0; i < pts.size(); ++i)
			for (std::size_t j = i + 1; j < pts.size(); ++j)
				d = std::max(d, (pts[i] - pts[j]).squaredNorm());
		return std::sqrt(d);
	}

	std::vector<std::vector<int>> TriMesh::boundary_loops() const
	{
		std::unordered_map<int, int> from;
		for (int i = 0; i < static_cast<int>(boundary_.size()); ++i)
			from[boundary_[i].a] = i;
		std::vector<bool> seen(boundary_.size(), false);
		std::vector<std::vector<int>> loops;
		for (int i = 0; i < static_cast<int>(boundary_.size()); ++i)
		{
			if (seen[i])
				continue;
			std::vector<int> loop;
			int e = i;
			while (!seen[e])
			{
				seen[e] = true;
				loop.push_back(e);
				e = from.at(boundary_[e].b);
			}
			loops.push_back(std::move(loop));
		}
		return loops;
	}

	std::vector<std::vector<int>> TriMesh::vertex_triangles() const
	{
		std::vector<std::vector<int>> vt(vertices_.size());
		for (int t = 0; t < n_triangles(); ++t)
			for (int k = 0; k < 3; ++k)
				vt[triangles_[t][k]].push_back(t);
		return vt;
	}

	TriMesh generate(const Shape &s, double h)
	{
		if (!(h > 0.0) || !std::isfinite(h))
			throw MeshError("target edge length h must be positive");
		return std::visit(
			overloaded{
				[&](const shape::Square &q) { return square_mesh(q, h); },
				[&](const shape::Polygon &p) {
					if (p.points.size() < 3)
						throw MeshError("polygon needs at least three vertices");
					if (!(polygon_area(p.points) > 0.0))
						throw MeshError("polygon must be counter-clockwise with positive area");
					const Vec2 c = polygon_centroid(p.points);
					const std::size_t n = p.points.size();
					for (std::size_t i = 0; i < n; ++i)
						if (!(cross(p.points[i] - c, p.points[(i + 1) % n] - c) > 0.0))
							throw MeshError("polygon must be star-shaped with respect to its centroid");
					// mesh the polygon translated to its centroid, then move it back
					std::vector<Vec2> local;
					for (const auto &x : p.points)
						local.push_back(x - c);
					const TriMesh m = ring_mesh(polygon_curve(local, h), s, h);
					std::vector<Vec2> v = m.vertices();
					for (auto &x : v)
						x += c;
					return TriMesh::from_parts(std::move(v), m.triangles(), s);
				},
				[&](const auto &) { return ring_mesh(radial_curve(s, h), s, h); },
			},
			s);
	}

	TriMesh refine(const TriMesh &mesh)
	{
		std::vector<Vec2> v = mesh.vertices();
		std::unordered_map<std::uint64_t, int> mid;
		mid.reserve(mesh.n_triangles() * 2);
		std::unordered_map<std::uint64_t, bool> is_bnd;
		for (const auto &e : mesh.boundary_edges())
			is_bnd[edge_key(e.a, e.b)] = true;
		auto midpoint = [&](int a, int b) {
			const auto key = edge_key(a, b);
			auto it = mid.find(key);
			if (it != mid.end())
				return it->second;
			Vec2 m = 0.5 * (v[a] + v[b]);
			if (mesh.shape() && is_bnd.count(key))
				m = project_to_boundary(*mesh.shape(), m);
			const int id = static_cast<int>(v.size());
			v.push_back(m);
			mid.emplace(key, id);
			return id;
		};
		std::vector<Tri> t;
		t.reserve(mesh.n_triangles() * 4);
		for (const auto &T : mesh.triangles())
		{
			const int a = T[0], b = T[1], c = T[2];
			const int ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
			t.push_back({a, ab, ca});
			t.push_back({ab, b, bc});
			t.push_back({ca, bc, c});
			t.push_back({ab, bc, ca});
		}
		return TriMesh::from_parts(std::move(v), std::move(t), mesh.shape());
	}

	TriMesh refine(const TriMesh &mesh, int times)
	{
		TriMesh m = mesh;
		for (int i = 0; i < times; ++i)
			m = refine(m);
		return m;
	}

	TriMesh map(const TriMesh &mesh, const VectorMap &phi)
	{
		std::vector<Vec2> v;
		v.reserve(mesh.n_vertices());
		for (const auto &x : mesh.vertices())
			v.push_back(phi(x));
		for (int t = 0; t < mesh.n_triangles(); ++t)
		{
			const auto &T = mesh.triangles()[t];
			if (!(tri_signed_area(v[T[0]], v[T[1]], v[T[2]]) > 0.0))
				throw MappingError("map flips or degenerates triangle " + std::to_string(t), t);
		}
		return TriMesh::from_parts(std::move(v), mesh.triangles(), std::nullopt);
	}

	TriMesh scale(const TriMesh &mesh, double t)
	{
		if (!(t > 0.0) || !std::isfinite(t))
			throw MeshError("scale factor must be positive");
		std::vector<Vec2> v = mesh.vertices();
		for (auto &x : v)
			x *= t;
		std::optional<Shape> s;
		if (mesh.shape())
			s = scale_shape(*mesh.shape(), t);
		return TriMesh::from_parts(std::move(v), mesh.triangles(), std::move(s));
	}

	void write_fmesh(std::ostream &os, const TriMesh &mesh)
	{
		os << "fmesh 1\n"
		   << mesh.n_vertices() << ' ' << mesh.n_triangles() << ' ' << mesh.boundary_edges().size() << '\n';
		char buf[96];
		for (const auto &x : mesh.vertices())
		{
			std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", x[0], x[1]);
			os << buf;
		}
		for (const auto &T : mesh.triangles())
			os << T[0] << ' ' << T[1] << ' ' << T[2] << '\n';
		for (const auto &e : mesh.boundary_edges())
			os << e.a << ' ' << e.b << ' ' << e.tri << '\n';
	}

	void write_fmesh(const std::string &path, const TriMesh &mesh)
	{
		std::ofstream os(path);
		if (!os)
			throw MeshError("cannot open '" + path + "' for writing");
		write_fmesh(os, mesh);
	}

	TriMesh read_fmesh(std::istream &is)
	{
		std::string magic;
		int version = 0;
		if (!(is >> magic >> version) || magic != "fmesh" || version != 1)
			throw MeshError("not an fmesh v1 file");
		long nv = 0, nt = 0, nb = 0;
		if (!(is >> nv >> nt >> nb) || nv < 3 || nt < 1 || nb < 3)
			throw MeshError("invalid fmesh header counts");
		std::vector<Vec2> v(nv);
		for (auto &x : v)
			if (!(is >> x[0] >> x[1]))
				throw MeshError("truncated vertex block");
		std::vector<Tri> t(nt);
		for (auto &T : t)
			if (!(is >> T[0] >> T[1] >> T[2]))
				throw MeshError("truncated triangle block");
		TriMesh m = TriMesh::from_parts(std::move(v), std::move(t));
		if (static_cast<long>(m.boundary_edges().size()) != nb)
			throw MeshError("boundary edge count does not match the triangulation");
		std::map<std::pair<int, int>, int> expected;
		for (const auto &e : m.boundary_edges())
			expected[{e.a, e.b}] = e.tri;
		for (long i = 0; i < nb; ++i)
		{
			int a, b, tri;
			if (!(is >> a >> b >> tri))
				throw MeshError("truncated boundary block");
			auto it = expected.find({a, b});
			if (it == expected.end() || it->second != tri)
				throw MeshError("boundary edge " + std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(tri) +
								" is inconsistent with the triangulation");
		}
		return m;
	}

	TriMesh read_fmesh(const std::string &path)
	{
		std::ifstream is(path);
		if (!is)
			throw MeshError("cannot open '" + path + "'");
		return read_fmesh(is);
	}

	void write_field_csv(const std::string &path, const TriMesh &mesh, const std::vector<double> &u)
	{
		if (static_cast<int>(u.size()) != mesh.n_vertices())
			throw MeshError("field size does not match the vertex count");
		std::ofstream os(path);
		if (!os)
			throw MeshError("cannot open '" + path + "' for writing");
		os << "x,y,u\n";
		char buf[128];
		for (int i = 0; i < mesh.n_vertices(); ++i)
		{
			std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", mesh.vertices()[i][0], mesh.vertices()[i][1], u[i]);
			os << buf;
		}
	}
} // namespace finsler
