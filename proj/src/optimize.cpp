#include <finsler/optimize.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace finsler
{
	namespace
	{
		// Rescales about the area centroid so the area equals `target`.
		TriMesh rescale_to_area(const TriMesh &mesh, double target)
		{
			const Vec2 c = mesh.centroid();
			const double s = std::sqrt(target / mesh.area());
			std::vector<Vec2> v = mesh.vertices();
			for (auto &x : v)
				x = c + s * (x - c);
			return TriMesh::from_parts(std::move(v), mesh.triangles());
		}

		bool all_positive(const std::vector<Vec2> &v, const std::vector<Tri> &tris)
		{
			for (const auto &T : tris)
			{
				const Vec2 a = v[T[1]] - v[T[0]], b = v[T[2]] - v[T[0]];
				if (!(a[0] * b[1] - a[1] * b[0] > 0.0))
					return false;
			}
			return true;
		}
	} // namespace

	ShapeGradient shape_gradient(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p)
	{
		const auto fv = boundary_normal_derivative(mesh, pair, m, p);
		const int nv = mesh.n_vertices();
		std::vector<Vec2> G(nv, Vec2::Zero());
		for (const auto &e : mesh.boundary_edges())
		{
			G[e.a] += 0.5 * e.length * e.normal;
			G[e.b] += 0.5 * e.length * e.normal;
		}
		ShapeGradient out;
		out.velocity.assign(nv, Vec2::Zero());
		out.density.assign(nv, 0.0);
		double num = 0.0, den = 0.0;
		for (int i = 0; i < nv; ++i)
		{
			if (!mesh.is_boundary_vertex(i))
				continue;
			out.density[i] = (1.0 - p) * std::pow(fv[i], p);
			num += G[i].norm() * out.density[i];
			den += G[i].norm();
		}
		out.kappa = num / den;
		for (int i = 0; i < nv; ++i)
		{
			if (!mesh.is_boundary_vertex(i))
				continue;
			out.velocity[i] = -(out.density[i] - out.kappa) * G[i].normalized();
			out.max_speed = std::max(out.max_speed, out.velocity[i].norm());
		}
		return out;
	}

	std::vector<double> smooth_on_boundary(const TriMesh &mesh, const std::vector<double> &x, double ell)
	{
		std::vector<double> y(mesh.n_vertices(), 0.0);
		const auto &be = mesh.boundary_edges();
		for (const auto &loop : mesh.boundary_loops())
		{
			std::unordered_map<int, int> local;
			for (int e : loop)
			{
				local.try_emplace(be[e].a, static_cast<int>(local.size()));
				local.try_emplace(be[e].b, static_cast<int>(local.size()));
			}
			const int n = static_cast<int>(local.size());
			std::vector<Eigen::Triplet<double>> trip;
			Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
			for (int e : loop)
			{
				const int a = local.at(be[e].a), b = local.at(be[e].b);
				const double l = be[e].length, k = ell * ell / l;
				trip.emplace_back(a, a, 0.5 * l + k);
				trip.emplace_back(b, b, 0.5 * l + k);
				trip.emplace_back(a, b, -k);
				trip.emplace_back(b, a, -k);
				rhs[a] += 0.5 * l * x[be[e].a];
				rhs[b] += 0.5 * l * x[be[e].b];
			}
			Eigen::SparseMatrix<double> A(n, n);
			A.setFromTriplets(trip.begin(), trip.end());
			Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
			const Eigen::VectorXd sol = ldlt.solve(rhs);
			for (const auto &[v, i] : local)
				y[v] = sol[i];
		}
		return y;
	}

	std::vector<Vec2> harmonic_extension(const TriMesh &mesh, const std::vector<Vec2> &boundary_displacement)
	{
		const int n = mesh.n_interior();
		const auto &dofs = mesh.interior_dofs();
		std::vector<Vec2> out(mesh.n_vertices(), Vec2::Zero());
		for (int i = 0; i < mesh.n_vertices(); ++i)
			if (dofs[i] < 0)
				out[i] = boundary_displacement[i];
		if (n == 0)
			return out;
		const P1Operator op = P1Operator::from_mesh(mesh);
		std::vector<Eigen::Triplet<double>> trip;
		Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2);
		for (int t = 0; t < mesh.n_triangles(); ++t)
		{
			const auto &T = op.tris[t];
			for (int a = 0; a < 3; ++a)
			{
				const int ia = dofs[T[a]];
				if (ia < 0)
					continue;
				for (int b = 0; b < 3; ++b)
				{
					const double k = op.weights[t] * op.grads[t][a].dot(op.grads[t][b]);
					const int ib = dofs[T[b]];
					if (ib >= 0)
						trip.emplace_back(ia, ib, k);
					else
						rhs.row(ia) -= k * boundary_displacement[T[b]].transpose();
				}
			}
		}
		Eigen::SparseMatrix<double> K(n, n);
		K.setFromTriplets(trip.begin(), trip.end());
		Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(K);
		if (ldlt.info() != Eigen::Success)
			throw Error("harmonic extension: stiffness factorization failed");
		const Eigen::MatrixXd x = ldlt.solve(rhs);
		for (int i = 0; i < mesh.n_vertices(); ++i)
			if (dofs[i] >= 0)
				out[i] = x.row(dofs[i]).transpose();
		return out;
	}

	double isoperimetric_deficit(double lambda, double volume, const AnisotropyModel &m, double p)
	{
		const double lw = unit_wulff_eigenvalue(p);
		const double aw = wulff_area(m, 4096);
		return lambda * std::pow(volume, p / 2.0) / (lw * std::pow(aw, p / 2.0)) - 1.0;
	}

	FlowState flow(const TriMesh &initial, const AnisotropyModel &m, double p, const FlowOpts &opts)
	{
		if (!(opts.step0 > 0.0))
			throw Error("flow step must be positive");
		FlowState st;
		st.mesh = initial;
		st.volume = initial.area();
		st.pair = solve_first(st.mesh, m, p, opts.solver);
		st.lambda = st.pair.lambda;
		st.step = opts.step0;
		const double target = st.volume;
		const double smoothing = opts.smoothing > 0.0 ? opts.smoothing : 0.1 * std::sqrt(target);
		st.history.push_back({0, st.lambda, st.volume, isoperimetric_deficit(st.lambda, st.volume, m, p), 0.0});
		if (opts.on_snapshot && opts.snapshot_every > 0)
			opts.on_snapshot(st);

		while (st.iteration < opts.max_iter)
		{
			const ShapeGradient g = shape_gradient(st.mesh, st.pair, m, p);
			if (g.max_speed * st.step < opts.tol_geo)
			{
				st.converged = true;
				st.stop_reason = "velocity below tolerance";
				break;
			}
			// Smoothed velocity, re-centred against the discrete area gradient.
			const int nv = st.mesh.n_vertices();
			std::vector<Vec2> G(nv, Vec2::Zero());
			std::vector<double> reach(nv, std::numeric_limits<double>::infinity());
			for (const auto &e : st.mesh.boundary_edges())
			{
				G[e.a] += 0.5 * e.length * e.normal;
				G[e.b] += 0.5 * e.length * e.normal;
				reach[e.a] = std::min(reach[e.a], e.length);
				reach[e.b] = std::min(reach[e.b], e.length);
			}
			std::vector<double> vx(nv, 0.0), vy(nv, 0.0);
			for (int i = 0; i < nv; ++i)
			{
				vx[i] = g.velocity[i][0];
				vy[i] = g.velocity[i][1];
			}
			vx = smooth_on_boundary(st.mesh, vx, smoothing);
			vy = smooth_on_boundary(st.mesh, vy, smoothing);
			double num = 0.0, den = 0.0;
			for (int i = 0; i < nv; ++i)
				if (st.mesh.is_boundary_vertex(i))
				{
					num += G[i].dot(Vec2(vx[i], vy[i]));
					den += G[i].norm();
				}
			std::vector<Vec2> vel(nv, Vec2::Zero());
			double cap = std::numeric_limits<double>::infinity();
			for (int i = 0; i < nv; ++i)
				if (st.mesh.is_boundary_vertex(i))
				{
					vel[i] = Vec2(vx[i], vy[i]) - num / den * G[i].normalized();
					if (vel[i].norm() > 0.0)
						cap = std::min(cap, opts.max_move * reach[i] / vel[i].norm());
				}
			st.step = std::min(st.step, cap);
			bool accepted = false;
			double step = st.step;
			for (int k = 0; k <= opts.max_halvings && !accepted; ++k, step *= 0.5)
			{
				std::vector<Vec2> bd(st.mesh.n_vertices(), Vec2::Zero());
				for (int i = 0; i < st.mesh.n_vertices(); ++i)
					bd[i] = step * vel[i];
				const auto disp = harmonic_extension(st.mesh, bd);
				std::vector<Vec2> v = st.mesh.vertices();
				for (std::size_t i = 0; i < v.size(); ++i)
					v[i] += disp[i];
				if (!all_positive(v, st.mesh.triangles()))
					continue;
				TriMesh next = rescale_to_area(TriMesh::from_parts(std::move(v), st.mesh.triangles()), target);
				EigenPair pair;
				try
				{
					pair = solve_first(next, m, p, opts.solver);
				}
				catch (const SolverError &)
				{
					continue;
				}
				if (!(pair.lambda < st.lambda))
					continue;
				st.mesh = std::move(next);
				st.pair = std::move(pair);
				st.lambda = st.pair.lambda;
				st.volume = st.mesh.area();
				st.step = step;
				accepted = true;
			}
			if (!accepted)
			{
				st.converged = true;
				st.stop_reason = "line search found no decrease";
				break;
			}
			++st.iteration;
			st.history.push_back(
				{st.iteration, st.lambda, st.volume, isoperimetric_deficit(st.lambda, st.volume, m, p), st.step});
			if (opts.on_snapshot && opts.snapshot_every > 0 && st.iteration % opts.snapshot_every == 0)
				opts.on_snapshot(st);
			if (st.mesh.min_angle_deg() < opts.min_angle_deg)
			{
				st.remesh_advisory = true;
				st.stop_reason = "mesh quality collapse (min angle below " + std::to_string(opts.min_angle_deg) +
								 " deg); remesh and restart";
				break;
			}
			st.step *= 1.5;
		}
		if (st.stop_reason.empty())
			st.stop_reason = "iteration limit";
		return st;
	}

	void write_history_csv(const std::string &path, const std::vector<FlowRecord> &history)
	{
		std::ofstream os(path);
		if (!os)
			throw Error("cannot write '" + path + "'");
		os << "iter,lambda,volume,deficit,step\n";
		char buf[160];
		for (const auto &r : history)
		{
			std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.lambda, r.volume, r.deficit, r.step);
			os << buf;
		}
	}
} // namespace finsler
