#include <finsler/cli.hpp>
#include <finsler/optimize.hpp>
#include <finsler/verify.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace finsler::cli
{
	namespace
	{
		namespace fs = std::filesystem;
		using json = nlohmann::ordered_json;

		const char *kOutputs = R"(Outputs (written to --out-dir):
  result.json   flat JSON object with the run's results
  mesh.fmesh    final mesh (.fmesh text format, 17 significant digits)
  u.csv         eigenfunction per vertex, columns x,y,u
  history.csv   solve: iter,lambda; optimize: iter,lambda,volume,deficit,step
  config.toml   resolved configuration; accepted back through --config
verify writes result.json only; wulff writes the mesh named by --out.
Exit codes: 0 success, 1 check failure, 2 usage error, 3 solver error.)";

		struct UsageFailure : Error
		{
			using Error::Error;
		};

		struct Common
		{
			std::string model = "euclidean";
			std::string shape = "disk:1";
			double p = 2.0;
			double h = 0.05;
			int refine = 0;
			double tol = 1e-10;
			int max_iter = 10000;
			std::vector<double> eps_schedule{1e-2, 1e-4, 1e-8, 0.0};
			std::string method = "inverse-power";
			std::uint64_t seed = 1;
			int threads = 1;
			std::string out_dir = ".";
		};

		void add_model(CLI::App *sub, Common &c)
		{
			sub->add_option("--model", c.model, "euclidean | ellipse:a11,a12,a22 | lq:q | reg:<model>:eps")->capture_default_str();
			sub->add_option("--p", c.p, "exponent p > 1")->capture_default_str();
		}

		void add_solver(CLI::App *sub, Common &c, bool with_max_iter)
		{
			sub->add_option("--tol", c.tol, "relative eigenvalue tolerance")->capture_default_str();
			if (with_max_iter)
				sub->add_option("--max-iter", c.max_iter, "outer iteration limit")->capture_default_str();
			sub->add_option("--eps-schedule", c.eps_schedule, "regularization levels relative to the initial gradient scale")
				->delimiter(',')
				->capture_default_str();
			sub->add_option("--method", c.method, "inverse-power | rayleigh-descent")
				->check(CLI::IsMember({"inverse-power", "rayleigh-descent"}))
				->capture_default_str();
			sub->add_option("--seed", c.seed, "random seed")->capture_default_str();
			sub->add_option("--threads", c.threads, "assembly worker threads")->check(CLI::PositiveNumber)->capture_default_str();
		}

		void add_mesh(CLI::App *sub, Common &c, const std::string &shape_default)
		{
			c.shape = shape_default;
			sub->add_option("--shape", c.shape, "disk:r | square:s | ellipse:a,b | polygon:x0,y0,... | wulff:scale")
				->capture_default_str();
			sub->add_option("--h", c.h, "target edge length")->check(CLI::PositiveNumber)->capture_default_str();
			sub->add_option("--refine", c.refine, "uniform refinements after generation")
				->check(CLI::NonNegativeNumber)
				->capture_default_str();
		}

		void add_out(CLI::App *sub, Common &c)
		{
			sub->add_option("--out-dir", c.out_dir, "output directory")->capture_default_str();
		}

		AnisotropyModel parse_model(const Common &c)
		{
			try
			{
				return AnisotropyModel::parse(c.model);
			}
			catch (const Error &e)
			{
				throw UsageFailure(std::string("--model: ") + e.what());
			}
		}

		void check_p(double p)
		{
			if (!(p > 1.0))
				throw UsageFailure("--p: must be greater than 1");
		}

		TriMesh build_mesh(const Common &c, const AnisotropyModel &m)
		{
			Shape s;
			try
			{
				s = parse_shape(c.shape, m);
			}
			catch (const Error &e)
			{
				throw UsageFailure(std::string("--shape: ") + e.what());
			}
			try
			{
				return refine(generate(s, c.h), c.refine);
			}
			catch (const MeshError &e)
			{
				throw UsageFailure(std::string("--shape/--h: ") + e.what());
			}
		}

		SolverOpts solver_opts(const Common &c)
		{
			SolverOpts o;
			o.tol = c.tol;
			o.max_iter = c.max_iter;
			o.eps_schedule = c.eps_schedule;
			o.method = c.method == "rayleigh-descent" ? SolverOpts::Method::RayleighDescent : SolverOpts::Method::InversePower;
			o.seed = c.seed;
			o.threads = c.threads;
			return o;
		}

		fs::path prepare_dir(const std::string &dir)
		{
			fs::path d(dir);
			std::error_code ec;
			fs::create_directories(d, ec);
			if (ec)
				throw UsageFailure("--out-dir: cannot create '" + dir + "': " + ec.message());
			return d;
		}

		void write_text(const fs::path &path, const std::string &text)
		{
			std::ofstream os(path);
			if (!os)
				throw Error("cannot write '" + path.string() + "'");
			os << text;
		}

		void write_config(const fs::path &dir, const CLI::App *sub)
		{
			write_text(dir / "config.toml", "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false));
		}

		void write_json(const fs::path &path, const json &j)
		{
			write_text(path, j.dump(2) + "\n");
		}

		json base_result(const std::string &cmd, const Common &c, const TriMesh &mesh)
		{
			json j;
			j["subcommand"] = cmd;
			j["model"] = c.model;
			j["shape"] = c.shape;
			j["p"] = c.p;
			j["h"] = mesh.max_edge();
			j["n_vertices"] = mesh.n_vertices();
			j["n_triangles"] = mesh.n_triangles();
			return j;
		}

		void write_lambda_history(const fs::path &path, const std::vector<double> &history)
		{
			std::ofstream os(path);
			if (!os)
				throw Error("cannot write '" + path.string() + "'");
			os << "iter,lambda\n";
			char buf[64];
			for (std::size_t i = 0; i < history.size(); ++i)
			{
				std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, history[i]);
				os << buf;
			}
		}

		int cmd_solve(const CLI::App *sub, const Common &c)
		{
			const auto m = parse_model(c);
			check_p(c.p);
			const TriMesh mesh = build_mesh(c, m);
			const auto dir = prepare_dir(c.out_dir);
			const EigenPair pair = solve_first(mesh, m, c.p, solver_opts(c));
			json j = base_result("solve", c, mesh);
			j["lambda"] = pair.lambda;
			j["residual"] = pair.residual;
			j["iterations"] = pair.iterations;
			write_json(dir / "result.json", j);
			write_fmesh((dir / "mesh.fmesh").string(), mesh);
			write_field_csv((dir / "u.csv").string(), mesh, pair.u);
			write_lambda_history(dir / "history.csv", pair.history);
			write_config(dir, sub);
			std::cout << j.dump(2) << "\n";
			return Ok;
		}

		int cmd_derivative(const CLI::App *sub, const Common &c, const std::string &field, double fd_step,
						   const std::string &forms)
		{
			const auto m = parse_model(c);
			check_p(c.p);
			const TriMesh mesh = build_mesh(c, m);
			VectorField psi;
			try
			{
				psi = VectorField::parse(field);
				psi.vertex_values(mesh);
			}
			catch (const Error &e)
			{
				throw UsageFailure(std::string("--field: ") + e.what());
			}
			DerivativeForms f{forms == "all" || forms == "volume", forms == "all" || forms == "hadamard",
							  forms == "all" || forms == "fd"};
			const auto dir = prepare_dir(c.out_dir);
			const auto r = derivative_report(mesh, psi, m, c.p, solver_opts(c), f, fd_step);
			json j = base_result("derivative", c, mesh);
			j["field"] = field;
			j["lambda"] = r.lambda;
			auto put = [&](const char *k, const std::optional<double> &v) {
				if (v)
					j[k] = *v;
			};
			put("d_volume_form", r.d_volume_form);
			put("d_hadamard", r.d_hadamard);
			put("d_hadamard_element", r.d_hadamard_element);
			put("d_hadamard_nu_f", r.d_hadamard_nu_f);
			put("d_fd", r.d_fd);
			put("d_fd_half", r.d_fd_half);
			if (r.d_fd)
				j["fd_step"] = r.fd_step;
			put("disc_volume_hadamard", r.disc_volume_hadamard);
			put("disc_volume_fd", r.disc_volume_fd);
			put("disc_hadamard_fd", r.disc_hadamard_fd);
			j["corner_warning"] = r.corner_warning;
			write_json(dir / "result.json", j);
			write_fmesh((dir / "mesh.fmesh").string(), mesh);
			write_config(dir, sub);
			if (r.corner_warning)
				std::cerr << "warning: boundary has corners; the Hadamard form assumes a smooth domain\n";
			std::cout << j.dump(2) << "\n";
			return Ok;
		}

		int cmd_verify(const CLI::App *sub, const Common &c, const std::string &suite, int levels, bool h_given)
		{
			const auto m = parse_model(c);
			check_p(c.p);
			if (levels < 1)
				throw UsageFailure("--levels: must be at least 1");
			VerifyOpts o;
			o.hs = level_sizes(h_given ? c.h : 0.08, levels);
			o.solver = solver_opts(c);
			const auto dir = prepare_dir(c.out_dir);
			const auto rs = run_suite(suite, m, c.p, o);
			std::cout << format_table(rs);
			write_text(dir / "result.json", to_json(rs) + "\n");
			write_config(dir, sub);
			for (const auto &r : rs)
				if (!r.pass)
					return CheckFailed;
			return Ok;
		}

		struct FlowArgs
		{
			double step0 = 1e-2;
			double tol_geo = 1e-5;
			int max_iter = 200;
			int snapshot_every = 0;
		};

		int cmd_optimize(const CLI::App *sub, const Common &c, const FlowArgs &a)
		{
			const auto m = parse_model(c);
			check_p(c.p);
			const TriMesh mesh = build_mesh(c, m);
			const auto dir = prepare_dir(c.out_dir);
			FlowOpts o;
			o.step0 = a.step0;
			o.tol_geo = a.tol_geo;
			o.max_iter = a.max_iter;
			o.solver = solver_opts(c);
			o.snapshot_every = a.snapshot_every;
			if (a.snapshot_every > 0)
				o.on_snapshot = [&](const FlowState &st) {
					char name[64];
					std::snprintf(name, sizeof name, "snapshot_%04d", st.iteration);
					write_fmesh((dir / (std::string(name) + ".fmesh")).string(), st.mesh);
					write_field_csv((dir / (std::string(name) + ".csv")).string(), st.mesh, st.pair.u);
				};
			const FlowState st = flow(mesh, m, c.p, o);
			json j = base_result("optimize", c, st.mesh);
			j["lambda_initial"] = st.history.front().lambda;
			j["lambda"] = st.lambda;
			j["volume_initial"] = st.history.front().volume;
			j["volume"] = st.volume;
			j["deficit"] = st.history.back().deficit;
			j["iterations"] = st.iteration;
			j["converged"] = st.converged;
			j["stop_reason"] = st.stop_reason;
			j["remesh_advisory"] = st.remesh_advisory;
			j["min_angle_deg"] = st.mesh.min_angle_deg();
			write_json(dir / "result.json", j);
			write_fmesh((dir / "mesh.fmesh").string(), st.mesh);
			write_field_csv((dir / "u.csv").string(), st.mesh, st.pair.u);
			write_history_csv((dir / "history.csv").string(), st.history);
			write_config(dir, sub);
			if (st.remesh_advisory)
				std::cerr << "warning: " << st.stop_reason << "\n";
			std::cout << j.dump(2) << "\n";
			return Ok;
		}

		int cmd_wulff(const CLI::App *sub, const Common &c, int n, double scale, const std::string &out)
		{
			const auto m = parse_model(c);
			if (n < 8)
				throw UsageFailure("--n: need at least 8 boundary points");
			if (!(scale > 0.0))
				throw UsageFailure("--scale: must be positive");
			const auto pts = wulff_polygon(m, 4096);
			double perimeter = 0.0;
			for (std::size_t k = 0; k < pts.size(); ++k)
				perimeter += (pts[(k + 1) % pts.size()] - pts[k]).norm();
			const TriMesh mesh = generate(shape::Wulff{m, scale}, scale * perimeter / n);
			fs::path path(out);
			if (path.has_parent_path())
				prepare_dir(path.parent_path().string());
			write_fmesh(path.string(), mesh);
			write_config(path.has_parent_path() ? path.parent_path() : fs::path("."), sub);
			json j;
			j["subcommand"] = "wulff";
			j["model"] = c.model;
			j["scale"] = scale;
			j["out"] = out;
			j["n_vertices"] = mesh.n_vertices();
			j["n_triangles"] = mesh.n_triangles();
			j["n_boundary_edges"] = mesh.boundary_edges().size();
			j["mesh_area"] = mesh.area();
			j["wulff_area"] = scale * scale * wulff_area(m, 4096);
			j["min_angle_deg"] = mesh.min_angle_deg();
			std::cout << j.dump(2) << "\n";
			return Ok;
		}
	} // namespace

	int run(int argc, const char *const *argv)
	{
		CLI::App app{"First Dirichlet eigenpair of the anisotropic p-Laplacian, shape derivatives and shape flow", "finsler"};
		app.require_subcommand(1);
		// --h is the mesh size, so help is long-form only.
		app.set_help_flag("--help", "Print this help message and exit");
		app.footer(kOutputs);

		Common solve_c, deriv_c, verify_c, opt_c, wulff_c;

		auto *solve = app.add_subcommand("solve", "first eigenpair on a generated mesh");
		add_mesh(solve, solve_c, "disk:1");
		add_model(solve, solve_c);
		add_solver(solve, solve_c, true);
		add_out(solve, solve_c);

		std::string field = "identity", forms = "all";
		double fd_step = 0.0;
		auto *deriv = app.add_subcommand("derivative", "shape derivative by the volume, Hadamard and finite-difference forms");
		add_mesh(deriv, deriv_c, "disk:1");
		add_model(deriv, deriv_c);
		add_solver(deriv, deriv_c, true);
		deriv->add_option("--field", field, "identity | translate:dx,dy | bump:cx,cy,r,amp | nodal:file.csv")->capture_default_str();
		deriv->add_option("--fd-step", fd_step, "finite-difference step t (0: 1e-4 diam / max|psi|)")->capture_default_str();
		deriv->add_option("--forms", forms, "volume | hadamard | fd | all")
			->check(CLI::IsMember({"volume", "hadamard", "fd", "all"}))
			->capture_default_str();
		add_out(deriv, deriv_c);

		std::string suite = "all";
		int levels = 3;
		auto *verify = app.add_subcommand("verify", "identity checks with convergence tables");
		add_model(verify, verify_c);
		add_solver(verify, verify_c, true);
		verify->add_option("--suite", suite, "all | scaling | monotonicity | ps | faber-krahn | overdetermined | rellich | hadamard | anisotropy")
			->check(CLI::IsMember({"all", "scaling", "monotonicity", "ps", "faber-krahn", "overdetermined", "rellich", "hadamard", "anisotropy"}))
			->capture_default_str();
		verify->add_option("--levels", levels, "number of mesh levels (h, h/2, ...)")->capture_default_str();
		auto *verify_h = verify->add_option("--h", verify_c.h, "coarsest edge length (default 0.08)");
		add_out(verify, verify_c);

		FlowArgs fa;
		auto *opt = app.add_subcommand("optimize", "volume-constrained shape descent of lambda");
		add_mesh(opt, opt_c, "square:1");
		add_model(opt, opt_c);
		add_solver(opt, opt_c, false);
		opt->add_option("--step0", fa.step0, "initial step")->check(CLI::PositiveNumber)->capture_default_str();
		opt->add_option("--tol-geo", fa.tol_geo, "stop when step * max|v| falls below this")->capture_default_str();
		opt->add_option("--max-iter", fa.max_iter, "flow iteration limit")->capture_default_str();
		opt->add_option("--snapshot-every", fa.snapshot_every, "write snapshot_<iter>.fmesh/.csv every k iterations (0: off)")
			->capture_default_str();
		add_out(opt, opt_c);

		int n = 256;
		double wscale = 1.0;
		std::string wout = "wulff.fmesh";
		auto *wulff = app.add_subcommand("wulff", "mesh of the Wulff shape of a model");
		wulff->add_option("--model", wulff_c.model, "anisotropy model")->capture_default_str();
		wulff->add_option("--n", n, "number of boundary points")->capture_default_str();
		wulff->add_option("--scale", wscale, "homothety factor")->capture_default_str();
		wulff->add_option("--out", wout, "output .fmesh path")->capture_default_str();

		// subcommand config files are never read by CLI11, so --config lives on the root and
		// subcommands pass it up; keys go under a [subcommand] section
		app.set_config("--config", "", "TOML file with a [subcommand] section whose keys mirror the flags");
		for (auto *sub : app.get_subcommands({}))
			sub->fallthrough();

		try
		{
			app.parse(argc, argv);
		}
		catch (const CLI::Success &e)
		{
			return app.exit(e);
		}
		catch (const CLI::ParseError &e)
		{
			app.exit(e);
			return UsageError;
		}

		try
		{
			if (*solve)
				return cmd_solve(solve, solve_c);
			if (*deriv)
				return cmd_derivative(deriv, deriv_c, field, fd_step, forms);
			if (*verify)
				return cmd_verify(verify, verify_c, suite, levels, verify_h->count() > 0);
			if (*opt)
				return cmd_optimize(opt, opt_c, fa);
			if (*wulff)
				return cmd_wulff(wulff, wulff_c, n, wscale, wout);
		}
		catch (const UsageFailure &e)
		{
			std::cerr << "error: " << e.what() << "\n";
			return UsageError;
		}
		catch (const SolverError &e)
		{
			std::cerr << "solver error: " << e.what() << " (residual " << e.residual() << ")\n";
			return SolverFailed;
		}
		catch (const std::exception &e)
		{
			std::cerr << "error: " << e.what() << "\n";
			return SolverFailed;
		}
		return UsageError;
	}

	int run(const std::vector<std::string> &args)
	{
		std::vector<const char *> argv;
		argv.reserve(args.size() + 1);
		argv.push_back("finsler");
		for (const auto &a : args)
			argv.push_back(a.c_str());
		return run(static_cast<int>(argv.size()), argv.data());
	}
} // namespace finsler::cli
