#pragma once

#include <finsler/shapecalc.hpp>

#include <functional>
#include <string>
#include <vector>

namespace finsler
{
	struct ShapeGradient
	{
		std::vector<Vec2> velocity; ///< per vertex; zero at interior vertices
		std::vector<double> density; ///< (1-p) F^p(Du) per vertex; zero inside
		double kappa = 0.0;			  ///< Lagrange multiplier of the volume constraint
		double max_speed = 0.0;
	};

	/// Normal velocity v_i = -(g_i - kappa) n_i on boundary vertices, g = (1-p) F^p(Du) from the
	/// recovered boundary trace, n_i the normalized discrete area gradient G_i at vertex i, and
	/// kappa the G-weighted mean of g, so that sum_i G_i . v_i = 0.
	ShapeGradient shape_gradient(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p);

	/// Interior displacements solving the discrete Laplace problem with the given boundary data.
	std::vector<Vec2> harmonic_extension(const TriMesh &mesh, const std::vector<Vec2> &boundary_displacement);

	/// Sobolev smoothing of a boundary scalar: solves (M + ell^2 K) y = M x on every boundary loop with the
	/// lumped P1 mass M and stiffness K of the loop. Interior entries are left at zero.
	std::vector<double> smooth_on_boundary(const TriMesh &mesh, const std::vector<double> &x, double ell);

	struct FlowRecord
	{
		int iter;
		double lambda;
		double volume;
		double deficit;
		double step;
	};

	struct FlowState
	{
		TriMesh mesh;
		EigenPair pair;
		double lambda = 0.0;
		double step = 0.0;
		double volume = 0.0;
		int iteration = 0;
		std::vector<FlowRecord> history;
		bool converged = false;
		bool remesh_advisory = false;
		std::string stop_reason;
	};

	struct FlowOpts
	{
		double step0 = 1e-3;
		double tol_geo = 1e-5;
		int max_iter = 200;
		double min_angle_deg = 5.0;
		int max_halvings = 30;
		/// Boundary smoothing length of the descent direction; <= 0 uses 0.1 sqrt(area).
		double smoothing = 0.0;
		/// Largest boundary displacement per step as a fraction of the adjacent edge length.
		double max_move = 0.3;
		SolverOpts solver;
		int snapshot_every = 0;
		std::function<void(const FlowState &)> on_snapshot;
	};

	/// lambda |Omega|^{p/2} / (lambda_p(W) |W|^{p/2}) - 1.
	double isoperimetric_deficit(double lambda, double volume, const AnisotropyModel &m, double p);

	/// Volume-preserving descent of lambda from `initial`. Each step moves the boundary along the smoothed
	/// shape gradient (re-centred so the first-order volume change vanishes), extends the motion harmonically, rescales about the centroid to the initial area and
	/// accepts only if lambda decreases (the step is halved otherwise).
	FlowState flow(const TriMesh &initial, const AnisotropyModel &m, double p, const FlowOpts &opts = {});

	void write_history_csv(const std::string &path, const std::vector<FlowRecord> &history);
} // namespace finsler
