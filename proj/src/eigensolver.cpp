#include <finsler/eigensolver.hpp>

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

namespace finsler
{
	namespace
	{
		// Splits [0, n) into `threads` contiguous ranges; fn(begin, end, slot).
		template <class Fn>
		void for_ranges(int n, int threads, Fn &&fn)
		{
			threads = std::max(1, std::min(threads, n / 1024 + 1));
			if (threads == 1)
			{
				fn(0, n, 0);
				return;
			}
			std::vector<std::thread> pool;
			for (int s = 0; s < threads; ++s)
			{
				const int b = static_cast<int>(static_cast<long>(n) * s / threads);
				const int e = static_cast<int>(static_cast<long>(n) * (s + 1) / threads);
				pool.emplace_back([&fn, b, e, s] { fn(b, e, s); });
			}
			for (auto &t : pool)
				t.join();
		}

		int slot_count(int n, int threads) { return std::max(1, std::min(threads, n / 1024 + 1)); }

		std::array<Vec2, 3> basis_gradients(const Vec2 &x0, const Vec2 &x1, const Vec2 &x2)
		{
			Mat2 D;
			D.col(0) = x1 - x0;
			D.col(1) = x2 - x0;
			const Mat2 Dinv = D.inverse();
			const Vec2 g1 = Dinv.row(0).transpose(), g2 = Dinv.row(1).transpose();
			return {Vec2(-g1 - g2), g1, g2};
		}

		std::vector<double> scatter(const P1Operator &op, const Eigen::VectorXd &x)
		{
			std::vector<double> u(op.n_vertices(), 0.0);
			for (int i = 0; i < op.n_vertices(); ++i)
				if (op.dofs[i] >= 0)
					u[i] = x[op.dofs[i]];
			return u;
		}

		// Sparse Hessian whose pattern is fixed; per-triangle entry slots are precomputed.
		struct HessianPattern
		{
			Eigen::SparseMatrix<double> matrix;
			std::vector<std::array<int, 9>> slots;

			explicit HessianPattern(const P1Operator &op)
			{
				std::vector<Eigen::Triplet<double>> trip;
				trip.reserve(op.tris.size() * 9);
				for (const auto &T : op.tris)
					for (int a = 0; a < 3; ++a)
						for (int b = 0; b < 3; ++b)
						{
							const int i = op.dofs[T[a]], j = op.dofs[T[b]];
							if (i >= 0 && j >= 0)
								trip.emplace_back(i, j, 0.0);
						}
				matrix.resize(op.n_dofs, op.n_dofs);
				matrix.setFromTriplets(trip.begin(), trip.end());
				matrix.makeCompressed();
				slots.resize(op.tris.size());
				const int *outer = matrix.outerIndexPtr();
				const int *inner = matrix.innerIndexPtr();
				for (std::size_t t = 0; t < op.tris.size(); ++t)
					for (int a = 0; a < 3; ++a)
						for (int b = 0; b < 3; ++b)
						{
							const int i = op.dofs[op.tris[t][a]], j = op.dofs[op.tris[t][b]];
							int slot = -1;
							if (i >= 0 && j >= 0)
							{
								const int *first = inner + outer[j], *last = inner + outer[j + 1];
								slot = static_cast<int>(std::lower_bound(first, last, i) - inner);
							}
							slots[t][3 * a + b] = slot;
						}
			}
		};

		// Linear operators of the p = 2 Euclidean problem: stiffness K and consistent mass M.
		void linear_operators(const P1Operator &op, Eigen::SparseMatrix<double> &K, Eigen::SparseMatrix<double> &M)
		{
			std::vector<Eigen::Triplet<double>> tk, tm;
			for (std::size_t t = 0; t < op.tris.size(); ++t)
			{
				const auto &T = op.tris[t];
				const double w = op.weights[t];
				for (int a = 0; a < 3; ++a)
					for (int b = 0; b < 3; ++b)
					{
						const int i = op.dofs[T[a]], j = op.dofs[T[b]];
						if (i < 0 || j < 0)
							continue;
						tk.emplace_back(i, j, w * op.grads[t][a].dot(op.grads[t][b]));
						tm.emplace_back(i, j, w * (a == b ? 1.0 / 6.0 : 1.0 / 12.0));
					}
			}
			K.resize(op.n_dofs, op.n_dofs);
			M.resize(op.n_dofs, op.n_dofs);
			K.setFromTriplets(tk.begin(), tk.end());
			M.setFromTriplets(tm.begin(), tm.end());
		}

		class Solver
		{
		public:
			Solver(const P1Operator &op, const AnisotropyModel &m, double p, const SolverOpts &opts)
				: op_(op), m_(m), p_(p), opts_(opts), pattern_(op) {}

			EigenPair run();

		private:
			Eigen::VectorXd initial_guess();
			double normalize(Eigen::VectorXd &x) const
			{
				const double mass_value = mass(op_, p_, scatter(op_, x), opts_.threads).value;
				x /= std::pow(mass_value, 1.0 / p_);
				return mass_value;
			}
			double quotient(const Eigen::VectorXd &x, double eps) const
			{
				const auto u = scatter(op_, x);
				return energy(op_, m_, p_, eps, u, opts_.threads).value / mass(op_, p_, u, opts_.threads).value;
			}
			void assemble_hessian(const std::vector<double> &u, double eps, double floor);
			/// argmin_w E_eps(w)/p - <b, w>, starting from x0.
			Eigen::VectorXd inner_minimize(const Eigen::VectorXd &b, Eigen::VectorXd x, double eps);
			void inverse_power_stage(Eigen::VectorXd &x, double eps, bool final_stage, EigenPair &out);
			void rayleigh_descent_stage(Eigen::VectorXd &x, double eps, bool final_stage, EigenPair &out);

			const P1Operator &op_;
			const AnisotropyModel &m_;
			double p_;
			SolverOpts opts_;
			HessianPattern pattern_;
			Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
			bool analyzed_ = false;
			double grad_scale_ = 1.0;
		};

		void Solver::assemble_hessian(const std::vector<double> &u, double eps, double floor)
		{
			auto &H = pattern_.matrix;
			const int nnz = static_cast<int>(H.nonZeros());
			const int nt = static_cast<int>(op_.tris.size());
			const int slots = slot_count(nt, opts_.threads);
			std::vector<std::vector<double>> partial(slots, std::vector<double>(nnz, 0.0));
			for_ranges(nt, opts_.threads, [&](int b, int e, int s) {
				auto &acc = partial[s];
				for (int t = b; t < e; ++t)
				{
					const Vec2 du = op_.gradient(t, u);
					const Mat2 hv = energy_jet(m_, p_, eps, du, floor).hess;
					const double w = op_.weights[t];
					for (int a = 0; a < 3; ++a)
					{
						const Vec2 hg = hv * op_.grads[t][a];
						for (int c = 0; c < 3; ++c)
						{
							const int slot = pattern_.slots[t][3 * a + c];
							if (slot >= 0)
								acc[slot] += w * op_.grads[t][c].dot(hg);
						}
					}
				}
			});
			double *vals = H.valuePtr();
			std::fill(vals, vals + nnz, 0.0);
			for (const auto &acc : partial)
				for (int k = 0; k < nnz; ++k)
					vals[k] += acc[k];
		}

		Eigen::VectorXd Solver::initial_guess()
		{
			Eigen::SparseMatrix<double> K, M;
			linear_operators(op_, K, M);
			Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(K);
			Eigen::VectorXd x;
			if (llt.info() == Eigen::Success)
			{
				x = Eigen::VectorXd::Ones(op_.n_dofs);
				double mu_old = 0.0;
				for (int it = 0; it < 2000; ++it)
				{
					x = llt.solve(M * x);
					x /= std::sqrt(x.dot(M * x));
					const double mu = x.dot(K * x);
					if (it > 0 && std::abs(mu - mu_old) <= 1e-14 * mu)
						break;
					mu_old = mu;
				}
				if (x.sum() < 0.0)
					x = -x;
			}
			if (!x.allFinite() || x.size() == 0 || x.minCoeff() <= 0.0)
			{
				// randomized positive fallback
				std::mt19937_64 rng(opts_.seed);
				std::uniform_real_distribution<double> dist(0.5, 1.0);
				x.resize(op_.n_dofs);
				for (int i = 0; i < op_.n_dofs; ++i)
					x[i] = dist(rng);
			}
			return x;
		}

		Eigen::VectorXd Solver::inner_minimize(const Eigen::VectorXd &b, Eigen::VectorXd x, double eps)
		{
			const double floor = 1e-12 * grad_scale_;
			auto objective = [&](const Eigen::VectorXd &y, Eigen::VectorXd *grad) {
				const auto e = energy(op_, m_, p_, eps, scatter(op_, y), opts_.threads);
				if (grad)
					*grad = e.gradient / p_ - b;
				return e.value / p_ - b.dot(y);
			};
			Eigen::VectorXd g;
			double f = objective(x, &g);
			for (int it = 0; it < 200; ++it)
			{
				assemble_hessian(scatter(op_, x), eps, floor);
				auto &H = pattern_.matrix;
				if (!analyzed_)
				{
					llt_.analyzePattern(H);
					analyzed_ = true;
				}
				const double diag_max = H.diagonal().cwiseAbs().maxCoeff();
				double shift = 1e-13 * diag_max;
				Eigen::VectorXd d;
				for (int attempt = 0; attempt < 12; ++attempt)
				{
					llt_.setShift(shift);
					llt_.factorize(H);
					if (llt_.info() == Eigen::Success)
					{
						d = -llt_.solve(g);
						if (d.allFinite())
							break;
					}
					shift = std::max(shift * 100.0, 1e-10 * diag_max);
				}
				if (d.size() == 0 || !d.allFinite())
					d = -g / std::max(diag_max, 1e-300);
				const double slope = g.dot(d);
				if (!(slope < 0.0))
					break;
				// Newton decrement relative to the scale of the linear term
				if (-slope <= 1e-26 * std::max(std::abs(b.dot(x)), 1e-300))
					break;
				double alpha = 1.0;
				Eigen::VectorXd xn, gn;
				double fn = f;
				bool accepted = false;
				for (int ls = 0; ls < 60; ++ls)
				{
					xn = x + alpha * d;
					fn = objective(xn, &gn);
					if (fn <= f + 1e-4 * alpha * slope)
					{
						accepted = true;
						break;
					}
					alpha *= 0.5;
				}
				if (!accepted)
					break;
				const bool tiny_step = alpha * d.cwiseAbs().maxCoeff() <= 1e-15 * x.cwiseAbs().maxCoeff();
				x = std::move(xn);
				g = std::move(gn);
				f = fn;
				if (tiny_step)
					break;
			}
			return x;
		}

		void Solver::inverse_power_stage(Eigen::VectorXd &x, double eps, bool final_stage, EigenPair &out)
		{
			double lambda = quotient(x, eps);
			if (final_stage)
				out.history.push_back(lambda);
			for (int it = 0; it < opts_.max_iter; ++it)
			{
				const auto u = scatter(op_, x);
				const Eigen::VectorXd b = mass(op_, p_, u, opts_.threads).gradient / p_;
				// for an exact eigenpair the minimizer is lambda^{-1/(p-1)} u
				Eigen::VectorXd w = inner_minimize(b, x * std::pow(lambda, -1.0 / (p_ - 1.0)), eps);
				normalize(w);
				const double next = quotient(w, eps);
				const double change = std::abs(next - lambda) / std::abs(lambda);
				x = std::move(w);
				out.residual = change;
				out.iterations++;
				lambda = next;
				if (final_stage)
					out.history.push_back(lambda);
				if (change < opts_.tol)
					return;
			}
			out.lambda = lambda;
			out.u = scatter(op_, x);
			throw SolverError("inverse power iteration did not converge within max_iter", out);
		}

		void Solver::rayleigh_descent_stage(Eigen::VectorXd &x, double eps, bool final_stage, EigenPair &out)
		{
			// preconditioned gradient descent of R = E/M on the unit p-sphere
			Eigen::SparseMatrix<double> K, M;
			linear_operators(op_, K, M);
			Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> prec(K);
			double lambda = quotient(x, eps);
			if (final_stage)
				out.history.push_back(lambda);
			double step = 1.0;
			for (int it = 0; it < opts_.max_iter; ++it)
			{
				const auto u = scatter(op_, x);
				const auto e = energy(op_, m_, p_, eps, u, opts_.threads);
				const auto ms = mass(op_, p_, u, opts_.threads);
				const Eigen::VectorXd grad = (e.gradient - (e.value / ms.value) * ms.gradient) / ms.value;
				Eigen::VectorXd dir = -prec.solve(grad);
				dir *= x.norm() / std::max(dir.norm(), 1e-300);
				double next = lambda;
				Eigen::VectorXd xn;
				bool accepted = false;
				for (int ls = 0; ls < 60; ++ls)
				{
					xn = x + step * dir;
					normalize(xn);
					next = quotient(xn, eps);
					if (next <= lambda)
					{
						accepted = true;
						break;
					}
					step *= 0.5;
				}
				if (!accepted)
				{
					out.residual = 0.0;
					return;
				}
				step = std::min(1.0, step * 2.0);
				const double change = (lambda - next) / lambda;
				x = std::move(xn);
				lambda = next;
				out.residual = change;
				out.iterations++;
				if (final_stage)
					out.history.push_back(lambda);
				if (change < opts_.tol)
					return;
			}
			out.lambda = lambda;
			out.u = scatter(op_, x);
			throw SolverError("Rayleigh descent did not converge within max_iter", out);
		}

		EigenPair Solver::run()
		{
			EigenPair out;
			out.p = p_;
			Eigen::VectorXd x = initial_guess();
			normalize(x);
			{
				// scale of |Du|^2 of the initial guess; makes the eps schedule scale invariant
				const auto u = scatter(op_, x);
				double num = 0.0, den = 0.0;
				for (std::size_t t = 0; t < op_.tris.size(); ++t)
				{
					const double f = m_.value(op_.gradient(static_cast<int>(t), u));
					num += op_.weights[t] * f * f;
					den += op_.weights[t];
				}
				grad_scale_ = num / den;
			}
			std::vector<double> schedule = opts_.eps_schedule;
			if (schedule.empty() || schedule.back() != 0.0)
				schedule.push_back(0.0);
			for (std::size_t s = 0; s < schedule.size(); ++s)
			{
				const bool final_stage = s + 1 == schedule.size();
				const double eps = schedule[s] * grad_scale_;
				if (opts_.method == SolverOpts::Method::InversePower)
					inverse_power_stage(x, eps, final_stage, out);
				else
					rayleigh_descent_stage(x, eps, final_stage, out);
			}
			if (x.sum() < 0.0)
				x = -x;
			normalize(x);
			out.u = scatter(op_, x);
			out.lambda = energy(op_, m_, p_, 0.0, out.u, opts_.threads).value;
			if (!(x.minCoeff() > 0.0))
				throw SolverError("eigenfunction has non-positive interior values after convergence (suspect solve)", out);
			return out;
		}
	} // namespace

	P1Operator P1Operator::from_mesh(const TriMesh &mesh)
	{
		P1Operator op;
		op.tris = mesh.triangles();
		op.dofs = mesh.interior_dofs();
		op.n_dofs = mesh.n_interior();
		op.grads.reserve(op.tris.size());
		op.weights.reserve(op.tris.size());
		const auto &v = mesh.vertices();
		for (int t = 0; t < mesh.n_triangles(); ++t)
		{
			const auto &T = op.tris[t];
			op.grads.push_back(basis_gradients(v[T[0]], v[T[1]], v[T[2]]));
			op.weights.push_back(mesh.signed_area(t));
		}
		return op;
	}

	P1Operator P1Operator::pullback(const TriMesh &ref, const VectorMap &phi)
	{
		const auto &v = ref.vertices();
		std::vector<Vec2> img;
		img.reserve(v.size());
		for (const auto &x : v)
			img.push_back(phi(x));
		P1Operator op;
		op.tris = ref.triangles();
		op.dofs = ref.interior_dofs();
		op.n_dofs = ref.n_interior();
		for (int t = 0; t < ref.n_triangles(); ++t)
		{
			const auto &T = op.tris[t];
			Mat2 Dref, Dimg;
			Dref.col(0) = v[T[1]] - v[T[0]];
			Dref.col(1) = v[T[2]] - v[T[0]];
			Dimg.col(0) = img[T[1]] - img[T[0]];
			Dimg.col(1) = img[T[2]] - img[T[0]];
			const Mat2 Dphi = Dimg * Dref.inverse();
			const double det = Dphi.determinant();
			if (!(det > 0.0))
				throw MappingError("map flips or degenerates triangle " + std::to_string(t), t);
			const Mat2 J = Dphi.inverse();
			auto g = basis_gradients(v[T[0]], v[T[1]], v[T[2]]);
			// row vector Dv times J
			for (auto &gi : g)
				gi = (gi.transpose() * J).transpose();
			op.grads.push_back(g);
			op.weights.push_back(ref.signed_area(t) * std::abs(det));
		}
		return op;
	}

	Vec2 P1Operator::gradient(int t, const std::vector<double> &u) const
	{
		const auto &T = tris[t];
		return u[T[0]] * grads[t][0] + u[T[1]] * grads[t][1] + u[T[2]] * grads[t][2];
	}

	ScalarWithGradient energy(const P1Operator &op, const AnisotropyModel &m, double p, double eps,
							  const std::vector<double> &u, int threads)
	{
		const int nt = static_cast<int>(op.tris.size());
		const int slots = slot_count(nt, threads);
		std::vector<double> value(slots, 0.0);
		std::vector<Eigen::VectorXd> grad(slots, Eigen::VectorXd::Zero(op.n_dofs));
		for_ranges(nt, threads, [&](int b, int e, int s) {
			for (int t = b; t < e; ++t)
			{
				const Vec2 du = op.gradient(t, u);
				const auto j = regularized_energy(m, p, eps, du);
				const double w = op.weights[t];
				value[s] += w * p * j.value;
				for (int a = 0; a < 3; ++a)
				{
					const int i = op.dofs[op.tris[t][a]];
					if (i >= 0)
						grad[s][i] += w * p * j.gradient.dot(op.grads[t][a]);
				}
			}
		});
		ScalarWithGradient out{0.0, Eigen::VectorXd::Zero(op.n_dofs)};
		for (int s = 0; s < slots; ++s)
		{
			out.value += value[s];
			out.gradient += grad[s];
		}
		return out;
	}

	ScalarWithGradient energy(const TriMesh &mesh, const AnisotropyModel &m, double p, double eps,
							  const std::vector<double> &u)
	{
		return energy(P1Operator::from_mesh(mesh), m, p, eps, u);
	}

	ScalarWithGradient mass(const P1Operator &op, double p, const std::vector<double> &u, int threads)
	{
		const int nt = static_cast<int>(op.tris.size());
		const int slots = slot_count(nt, threads);
		std::vector<double> value(slots, 0.0);
		std::vector<Eigen::VectorXd> grad(slots, Eigen::VectorXd::Zero(op.n_dofs));
		for_ranges(nt, threads, [&](int b, int e, int s) {
			for (int t = b; t < e; ++t)
			{
				const auto &T = op.tris[t];
				const double w = op.weights[t] / 3.0;
				for (int k = 0; k < 3; ++k)
				{
					const int a = T[k], c = T[(k + 1) % 3];
					const double um = 0.5 * (u[a] + u[c]);
					const double au = std::abs(um);
					value[s] += w * std::pow(au, p);
					const double d = au > 0.0 ? w * p * std::pow(au, p - 1.0) * (um > 0.0 ? 1.0 : -1.0) * 0.5 : 0.0;
					if (op.dofs[a] >= 0)
						grad[s][op.dofs[a]] += d;
					if (op.dofs[c] >= 0)
						grad[s][op.dofs[c]] += d;
				}
			}
		});
		ScalarWithGradient out{0.0, Eigen::VectorXd::Zero(op.n_dofs)};
		for (int s = 0; s < slots; ++s)
		{
			out.value += value[s];
			out.gradient += grad[s];
		}
		return out;
	}

	ScalarWithGradient mass(const TriMesh &mesh, double p, const std::vector<double> &u)
	{
		return mass(P1Operator::from_mesh(mesh), p, u);
	}

	EigenPair solve_first(const P1Operator &op, const AnisotropyModel &m, double p, const SolverOpts &opts)
	{
		if (!(p > 1.0) || !std::isfinite(p))
			throw Error("exponent p must satisfy p > 1");
		if (op.n_dofs < 1)
			throw Error("mesh has no interior degrees of freedom");
		if (!(opts.tol > 0.0) || opts.max_iter < 1)
			throw Error("solver tolerance must be positive and max_iter at least 1");
		Solver solver(op, m, p, opts);
		return solver.run();
	}

	EigenPair solve_first(const TriMesh &mesh, const AnisotropyModel &m, double p, const SolverOpts &opts)
	{
		return solve_first(P1Operator::from_mesh(mesh), m, p, opts);
	}

	EigenPair solve_pullback(const TriMesh &ref, const VectorMap &phi, const AnisotropyModel &m, double p,
							 const SolverOpts &opts)
	{
		return solve_first(P1Operator::pullback(ref, phi), m, p, opts);
	}

	double unit_wulff_eigenvalue(double p)
	{
		if (!(p > 1.0))
			throw Error("exponent p must satisfy p > 1");
		// (r w)' = -r |U|^{p-2} U, w = |U'|^{p-2} U', lambda = 1, U(0) = 1.
		auto phi_inv = [p](double w) { return std::copysign(std::pow(std::abs(w), 1.0 / (p - 1.0)), w); };
		auto phi_p = [p](double u) { return std::copysign(std::pow(std::abs(u), p - 1.0), u); };
		auto rhs = [&](double r, const Vec2 &y) { return Vec2(phi_inv(y[1]), -phi_p(y[0]) - y[1] / r); };
		const double r0 = 1e-6;
		// series start: w ~ -r/2, U ~ 1 - (p-1)/p (1/2)^{1/(p-1)} r^{p/(p-1)}
		Vec2 y(1.0 - (p - 1.0) / p * std::pow(0.5, 1.0 / (p - 1.0)) * std::pow(r0, p / (p - 1.0)), -0.5 * r0);
		double r = r0;
		const double dr = 2e-5;
		while (r < 100.0)
		{
			const Vec2 k1 = rhs(r, y);
			const Vec2 k2 = rhs(r + 0.5 * dr, y + 0.5 * dr * k1);
			const Vec2 k3 = rhs(r + 0.5 * dr, y + 0.5 * dr * k2);
			const Vec2 k4 = rhs(r + dr, y + dr * k3);
			const Vec2 yn = y + dr / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
			if (yn[0] <= 0.0)
			{
				// cubic Hermite root between r and r + dr
				const double u0 = y[0], u1 = yn[0];
				const double d0 = phi_inv(y[1]) * dr, d1 = phi_inv(yn[1]) * dr;
				double s = u0 / (u0 - u1);
				for (int it = 0; it < 50; ++it)
				{
					const double h00 = 2 * s * s * s - 3 * s * s + 1, h10 = s * s * s - 2 * s * s + s;
					const double h01 = -2 * s * s * s + 3 * s * s, h11 = s * s * s - s * s;
					const double val = h00 * u0 + h10 * d0 + h01 * u1 + h11 * d1;
					const double der = (6 * s * s - 6 * s) * u0 + (3 * s * s - 4 * s + 1) * d0 + (-6 * s * s + 6 * s) * u1 +
									   (3 * s * s - 2 * s) * d1;
					const double step = val / der;
					s -= step;
					if (std::abs(step) < 1e-15)
						break;
				}
				return std::pow(r + s * dr, p);
			}
			y = yn;
			r += dr;
		}
		throw Error("radial shooting did not find a zero");
	}
} // namespace finsler
