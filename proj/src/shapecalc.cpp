#include <finsler/shapecalc.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

namespace finsler
{
	namespace
	{
		constexpr double kPi = std::numbers::pi;

		double bump(double s) { return s < 1.0 ? std::pow(1.0 - s * s, 3) : 0.0; }
		double bump_derivative(double s) { return s < 1.0 ? -6.0 * s * std::pow(1.0 - s * s, 2) : 0.0; }

		double wrap_angle(double a)
		{
			a = std::fmod(a + kPi, 2.0 * kPi);
			if (a < 0.0)
				a += 2.0 * kPi;
			return a - kPi;
		}

		bool has_corners(const TriMesh &mesh)
		{
			if (mesh.shape())
				return !is_curved(*mesh.shape());
			std::unordered_map<int, int> incoming;
			const auto &be = mesh.boundary_edges();
			for (int i = 0; i < static_cast<int>(be.size()); ++i)
				incoming[be[i].b] = i;
			for (const auto &e : be)
			{
				const auto &prev = be[incoming.at(e.a)];
				const double c = std::clamp(prev.normal.dot(e.normal), -1.0, 1.0);
				if (std::acos(c) > kPi / 6.0)
					return true;
			}
			return false;
		}

		std::vector<double> parse_csv_row(const std::string &line)
		{
			std::vector<double> out;
			std::stringstream ss(line);
			std::string tok;
			while (std::getline(ss, tok, ','))
				out.push_back(std::stod(tok));
			return out;
		}
	} // namespace

	VectorField VectorField::zero() { return {}; }

	VectorField VectorField::identity()
	{
		VectorField f;
		f.kind_ = Kind::Identity;
		return f;
	}

	VectorField VectorField::translation(const Vec2 &d)
	{
		VectorField f;
		f.kind_ = Kind::Translation;
		f.vec_ = d;
		return f;
	}

	VectorField VectorField::radial_bump(const Vec2 &center, double radius, double amplitude)
	{
		if (!(radius > 0.0))
			throw Error("bump radius must be positive");
		VectorField f;
		f.kind_ = Kind::RadialBump;
		f.vec_ = center;
		f.r_ = radius;
		f.amp_ = amplitude;
		return f;
	}

	VectorField VectorField::normal_bump(double theta0, double width, double amplitude)
	{
		if (!(width > 0.0 && width <= kPi))
			throw Error("normal bump width must be in (0, pi]");
		VectorField f;
		f.kind_ = Kind::NormalBump;
		f.theta0_ = theta0;
		f.r_ = width;
		f.amp_ = amplitude;
		return f;
	}

	VectorField VectorField::nodal(std::vector<Vec2> values)
	{
		VectorField f;
		f.kind_ = Kind::Nodal;
		f.nodal_ = std::move(values);
		return f;
	}

	VectorField VectorField::nodal_from_csv(const std::string &path)
	{
		std::ifstream is(path);
		if (!is)
			throw Error("cannot open nodal field '" + path + "'");
		std::string line;
		std::getline(is, line);
		if (line.rfind("x,y,vx,vy", 0) != 0)
			throw Error("nodal field CSV must start with header x,y,vx,vy");
		std::vector<Vec2> vals;
		while (std::getline(is, line))
		{
			if (line.empty())
				continue;
			std::vector<double> row;
			try
			{
				row = parse_csv_row(line);
			}
			catch (const std::exception &)
			{
				throw Error("malformed nodal field row: '" + line + "'");
			}
			if (row.size() != 4)
				throw Error("nodal field rows need four columns: '" + line + "'");
			vals.emplace_back(row[2], row[3]);
		}
		return nodal(std::move(vals));
	}

	VectorField VectorField::parse(const std::string &spec)
	{
		auto numbers = [&](const std::string &s) {
			std::vector<double> out;
			std::stringstream ss(s);
			std::string tok;
			while (std::getline(ss, tok, ','))
			{
				try
				{
					out.push_back(std::stod(tok));
				}
				catch (const std::exception &)
				{
					throw Error("invalid number '" + tok + "' in field spec '" + spec + "'");
				}
			}
			return out;
		};
		if (spec == "identity")
			return identity();
		if (spec.rfind("translate:", 0) == 0)
		{
			const auto v = numbers(spec.substr(10));
			if (v.size() != 2)
				throw Error("translate field needs dx,dy");
			return translation({v[0], v[1]});
		}
		if (spec.rfind("bump:", 0) == 0)
		{
			const auto v = numbers(spec.substr(5));
			if (v.size() != 4)
				throw Error("bump field needs cx,cy,r,amp");
			return radial_bump({v[0], v[1]}, v[2], v[3]);
		}
		if (spec.rfind("nodal:", 0) == 0)
			return nodal_from_csv(spec.substr(6));
		throw Error("unknown field spec '" + spec + "' (expected identity, translate:dx,dy, bump:cx,cy,r,amp, nodal:file.csv)");
	}

	Vec2 VectorField::value(const Vec2 &x) const
	{
		switch (kind_)
		{
		case Kind::Zero:
			return Vec2::Zero();
		case Kind::Identity:
			return factor_ * x;
		case Kind::Translation:
			return factor_ * vec_;
		case Kind::RadialBump:
		{
			const Vec2 d = x - vec_;
			return factor_ * amp_ / r_ * bump(d.norm() / r_) * d;
		}
		case Kind::NormalBump:
		{
			const double t = wrap_angle(std::atan2(x[1], x[0]) - theta0_) / r_;
			return factor_ * amp_ * bump(std::abs(t)) * x.squaredNorm() * x;
		}
		case Kind::Nodal:
			break;
		}
		throw Error("pointwise evaluation is not defined for nodal fields");
	}

	Mat2 VectorField::jacobian(const Vec2 &x) const
	{
		switch (kind_)
		{
		case Kind::Zero:
		case Kind::Translation:
			return Mat2::Zero();
		case Kind::Identity:
			return factor_ * Mat2::Identity();
		case Kind::RadialBump:
		{
			const Vec2 d = x - vec_;
			const double s = d.norm() / r_;
			if (s >= 1.0)
				return Mat2::Zero();
			const double c = 1.0 - s * s;
			return factor_ * amp_ / r_ * (bump(s) * Mat2::Identity() - 6.0 * c * c * d * d.transpose() / (r_ * r_));
		}
		case Kind::NormalBump:
		{
			const double r2 = x.squaredNorm();
			if (r2 == 0.0)
				return Mat2::Zero();
			const double t = wrap_angle(std::atan2(x[1], x[0]) - theta0_) / r_;
			const double sgn = t < 0.0 ? -1.0 : 1.0;
			const double b = bump(std::abs(t));
			const Vec2 grad_theta(-x[1] / r2, x[0] / r2);
			const Vec2 grad_b = bump_derivative(std::abs(t)) * sgn / r_ * grad_theta;
			return factor_ * amp_ * (r2 * x * grad_b.transpose() + b * (r2 * Mat2::Identity() + 2.0 * x * x.transpose()));
		}
		case Kind::Nodal:
			break;
		}
		throw Error("pointwise Jacobian is not defined for nodal fields");
	}

	std::vector<Vec2> VectorField::vertex_values(const TriMesh &mesh) const
	{
		if (kind_ == Kind::Nodal)
		{
			if (static_cast<int>(nodal_.size()) != mesh.n_vertices())
				throw Error("nodal field has " + std::to_string(nodal_.size()) + " values but the mesh has " +
							std::to_string(mesh.n_vertices()) + " vertices");
			std::vector<Vec2> out = nodal_;
			for (auto &v : out)
				v *= factor_;
			return out;
		}
		std::vector<Vec2> out;
		out.reserve(mesh.n_vertices());
		for (const auto &x : mesh.vertices())
			out.push_back(value(x));
		return out;
	}

	Vec2 VectorField::edge_value(const TriMesh &mesh, const BoundaryEdge &e) const
	{
		if (kind_ == Kind::Nodal)
		{
			if (static_cast<int>(nodal_.size()) != mesh.n_vertices())
				throw Error("nodal field size does not match the mesh");
			return factor_ * 0.5 * (nodal_[e.a] + nodal_[e.b]);
		}
		return value(e.midpoint);
	}

	VectorField VectorField::scaled(double s) const
	{
		VectorField f = *this;
		f.factor_ *= s;
		return f;
	}

	VectorField VectorField::sum(const VectorField &a, const VectorField &b, const TriMesh &mesh)
	{
		auto va = a.vertex_values(mesh);
		const auto vb = b.vertex_values(mesh);
		for (std::size_t i = 0; i < va.size(); ++i)
			va[i] += vb[i];
		return nodal(std::move(va));
	}

	double d_lambda_volume(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m, double p,
						   const VectorField &chi)
	{
		if (static_cast<int>(pair.u.size()) != mesh_image.n_vertices())
			throw Error("eigenpair does not belong to this mesh");
		const P1Operator op = P1Operator::from_mesh(mesh_image);
		const auto cv = chi.vertex_values(mesh_image);
		const auto &u = pair.u;
		double total = 0.0;
		for (int t = 0; t < mesh_image.n_triangles(); ++t)
		{
			const auto &T = op.tris[t];
			Mat2 dchi = Mat2::Zero();
			for (int a = 0; a < 3; ++a)
				dchi += cv[T[a]] * op.grads[t][a].transpose();
			const double div = dchi.trace();
			const Vec2 du = op.gradient(t, u);
			const double area = op.weights[t];
			double rho = 0.0;
			for (int k = 0; k < 3; ++k)
				rho += std::pow(std::abs(0.5 * (u[T[k]] + u[T[(k + 1) % 3]])), p) / 3.0;
			const auto flux = regularized_energy(m, p, 0.0, du); // gradient = F^{p-1} F_xi
			const double fp = p * flux.value;					 // F^p
			total += area * (fp - pair.lambda * rho) * div - p * area * du.dot(dchi * flux.gradient);
		}
		return total;
	}

	std::vector<double> boundary_normal_derivative(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m,
												   double p)
	{
		if (static_cast<int>(pair.u.size()) != mesh.n_vertices())
			throw Error("eigenpair does not belong to this mesh");
		const P1Operator op = P1Operator::from_mesh(mesh);
		const auto &u = pair.u;
		// Nodal residual of the discrete equation on boundary test functions.
		std::vector<double> r(mesh.n_vertices(), 0.0);
		for (int t = 0; t < mesh.n_triangles(); ++t)
		{
			const auto &T = op.tris[t];
			const Vec2 g = regularized_energy(m, p, 0.0, op.gradient(t, u)).gradient;
			const double w = op.weights[t];
			for (int k = 0; k < 3; ++k)
				if (op.dofs[T[k]] < 0)
					r[T[k]] += w * g.dot(op.grads[t][k]);
			for (int k = 0; k < 3; ++k)
			{
				const int a = T[k], c = T[(k + 1) % 3];
				if (op.dofs[a] >= 0 && op.dofs[c] >= 0)
					continue;
				const double um = 0.5 * (u[a] + u[c]);
				const double d = w / 3.0 * std::pow(std::abs(um), p - 1.0) * (um > 0.0 ? 1.0 : -1.0) * 0.5;
				if (op.dofs[a] < 0)
					r[a] -= pair.lambda * d;
				if (op.dofs[c] < 0)
					r[c] -= pair.lambda * d;
			}
		}
		std::vector<double> len(mesh.n_vertices(), 0.0);
		std::vector<Vec2> nrm(mesh.n_vertices(), Vec2::Zero());
		for (const auto &e : mesh.boundary_edges())
		{
			len[e.a] += 0.5 * e.length;
			len[e.b] += 0.5 * e.length;
			nrm[e.a] += e.normal;
			nrm[e.b] += e.normal;
		}
		std::vector<double> out(mesh.n_vertices(), 0.0);
		for (int i = 0; i < mesh.n_vertices(); ++i)
		{
			if (len[i] == 0.0)
				continue;
			// On the boundary Du = -a nu, so the conormal flux is -F(Du)^{p-1} F(nu).
			const double flux = -r[i] / len[i];
			const double fn = m.value(nrm[i].normalized());
			out[i] = flux > 0.0 ? std::pow(flux / fn, 1.0 / (p - 1.0)) : 0.0;
		}
		return out;
	}

	HadamardValue d_lambda_hadamard_detail(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m,
										   double p, const VectorField &chi)
	{
		if (static_cast<int>(pair.u.size()) != mesh_image.n_vertices())
			throw Error("eigenpair does not belong to this mesh");
		const P1Operator op = P1Operator::from_mesh(mesh_image);
		const auto fv = boundary_normal_derivative(mesh_image, pair, m, p);
		const auto cv = chi.vertex_values(mesh_image);
		HadamardValue out{0.0, 0.0, 0.0, has_corners(mesh_image)};
		for (const auto &e : mesh_image.boundary_edges())
		{
			const Vec2 du = op.gradient(e.tri, pair.u);
			out.value += 0.5 * e.length * (std::pow(fv[e.a], p) * cv[e.a].dot(e.normal) + std::pow(fv[e.b], p) * cv[e.b].dot(e.normal));
			const double flux = e.length * chi.edge_value(mesh_image, e).dot(e.normal);
			out.value_element += std::pow(m.value(du), p) * flux;
			out.value_nu_f += std::pow(std::abs(du.dot(m.gradient(e.normal))), p) * flux;
		}
		out.value *= 1.0 - p;
		out.value_element *= 1.0 - p;
		out.value_nu_f *= 1.0 - p;
		return out;
	}

	double d_lambda_hadamard(const TriMesh &mesh_image, const EigenPair &pair, const AnisotropyModel &m, double p,
							 const VectorField &chi)
	{
		return d_lambda_hadamard_detail(mesh_image, pair, m, p, chi).value;
	}

	TriMesh perturbed_mesh(const TriMesh &ref, const VectorMap &phi, const VectorField &psi, double t)
	{
		const auto pv = psi.vertex_values(ref);
		std::vector<Vec2> v;
		v.reserve(ref.n_vertices());
		for (int i = 0; i < ref.n_vertices(); ++i)
			v.push_back((phi ? phi(ref.vertices()[i]) : ref.vertices()[i]) + t * pv[i]);
		for (int k = 0; k < ref.n_triangles(); ++k)
		{
			const auto &T = ref.triangles()[k];
			const double a = 0.5 * ((v[T[1]] - v[T[0]])[0] * (v[T[2]] - v[T[0]])[1] - (v[T[1]] - v[T[0]])[1] * (v[T[2]] - v[T[0]])[0]);
			if (!(a > 0.0))
				throw MappingError("perturbed map flips triangle " + std::to_string(k) + "; use a smaller step", k);
		}
		return TriMesh::from_parts(std::move(v), ref.triangles());
	}

	double default_fd_step(const TriMesh &ref, const VectorField &psi)
	{
		double vmax = 0.0;
		for (const auto &v : psi.vertex_values(ref))
			vmax = std::max(vmax, v.norm());
		if (vmax == 0.0)
			return 1e-4 * ref.diameter();
		return 1e-4 * ref.diameter() / vmax;
	}

	double d_lambda_fd(const TriMesh &ref, const VectorMap &phi, const VectorField &psi, const AnisotropyModel &m,
					   double p, double t, const SolverOpts &opts)
	{
		bool zero = true;
		for (const auto &v : psi.vertex_values(ref))
			zero = zero && v.isZero(0.0);
		if (zero)
			return 0.0;
		if (!(t > 0.0))
			t = default_fd_step(ref, psi);
		const double plus = solve_first(perturbed_mesh(ref, phi, psi, t), m, p, opts).lambda;
		const double minus = solve_first(perturbed_mesh(ref, phi, psi, -t), m, p, opts).lambda;
		return (plus - minus) / (2.0 * t);
	}

	double relative_difference(double a, double b)
	{
		const double s = std::max(std::abs(a), std::abs(b));
		return s == 0.0 ? 0.0 : std::abs(a - b) / s;
	}

	DerivativeReport derivative_report(const TriMesh &mesh, const VectorField &psi, const AnisotropyModel &m, double p,
									   const SolverOpts &opts, DerivativeForms forms, double fd_step)
	{
		DerivativeReport r;
		r.h = mesh.max_edge();
		const EigenPair pair = solve_first(mesh, m, p, opts);
		r.lambda = pair.lambda;
		if (forms.volume)
			r.d_volume_form = d_lambda_volume(mesh, pair, m, p, psi);
		if (forms.hadamard)
		{
			const auto hd = d_lambda_hadamard_detail(mesh, pair, m, p, psi);
			r.d_hadamard = hd.value;
			r.d_hadamard_element = hd.value_element;
			r.d_hadamard_nu_f = hd.value_nu_f;
			r.corner_warning = hd.corner_warning;
		}
		if (forms.fd)
		{
			r.fd_step = fd_step > 0.0 ? fd_step : default_fd_step(mesh, psi);
			r.d_fd = d_lambda_fd(mesh, nullptr, psi, m, p, r.fd_step, opts);
			r.d_fd_half = d_lambda_fd(mesh, nullptr, psi, m, p, 0.5 * r.fd_step, opts);
		}
		if (r.d_volume_form && r.d_hadamard)
			r.disc_volume_hadamard = relative_difference(*r.d_volume_form, *r.d_hadamard);
		if (r.d_volume_form && r.d_fd)
			r.disc_volume_fd = relative_difference(*r.d_volume_form, *r.d_fd);
		if (r.d_hadamard && r.d_fd)
			r.disc_hadamard_fd = relative_difference(*r.d_hadamard, *r.d_fd);
		return r;
	}

	RellichPohozaev rellich_pohozaev_check(const TriMesh &mesh, const EigenPair &pair, const AnisotropyModel &m, double p)
	{
		if (static_cast<int>(pair.u.size()) != mesh.n_vertices())
			throw Error("eigenpair does not belong to this mesh");
		const auto fv = boundary_normal_derivative(mesh, pair, m, p);
		double s = 0.0;
		for (const auto &e : mesh.boundary_edges())
			s += 0.5 * e.length * (std::pow(fv[e.a], p) + std::pow(fv[e.b], p)) * e.midpoint.dot(e.normal);
		const double rhs = (p - 1.0) / p * s;
		return {pair.lambda, rhs, std::abs(pair.lambda - rhs) / std::abs(pair.lambda)};
	}
} // namespace finsler
