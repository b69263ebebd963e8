#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace finsler
{
	using Vec2 = Eigen::Vector2d;
	using Mat2 = Eigen::Matrix2d;

	/// Base of every error raised by the library.
	class Error : public std::runtime_error
	{
	public:
		using std::runtime_error::runtime_error;
	};

	/// Invalid model specification or parameters (non-SPD matrix, q < 2, ...).
	class ModelError : public Error
	{
	public:
		using Error::Error;
	};

	/// Argument outside the domain of an evaluator, e.g. the gradient of a norm at 0.
	class DomainError : public Error
	{
	public:
		using Error::Error;
	};

	class MeshError : public Error
	{
	public:
		using Error::Error;
	};

	/// A map that flips (or degenerates) an image triangle.
	class MappingError : public MeshError
	{
	public:
		MappingError(const std::string &msg, int triangle)
			: MeshError(msg), triangle_(triangle) {}
		int triangle() const { return triangle_; }

	private:
		int triangle_;
	};
} // namespace finsler
