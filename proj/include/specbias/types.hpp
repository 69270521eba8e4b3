#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace specbias {

template <class Scalar_, int Rows_ = Eigen::Dynamic, int Cols_ = Eigen::Dynamic>
using rowmat_type = Eigen::Matrix<Scalar_, Rows_, Cols_, Eigen::RowMajor>;

template <class Scalar_, int Rows_ = Eigen::Dynamic>
using vec_type = Eigen::Matrix<Scalar_, Rows_, 1>;

// Sample matrices are row-major: one input per row.
using Matrix = rowmat_type<double>;
using ColMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// A Monte Carlo estimate together with its standard error.
struct McEstimate
{
    double value = 0.0;
    double stderr_ = 0.0;
};

// Error kinds map onto CLI exit codes (config 1, data 2, invariant 3).
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error
{
public:
    using Error::Error;
};

class DataError : public Error
{
public:
    using Error::Error;
};

class InvariantViolation : public Error
{
public:
    using Error::Error;
};

} // namespace specbias
